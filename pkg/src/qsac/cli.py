"""Command-line interface.

Exit statuses: 0 success / authenticated, 1 verification failure,
2 usage or config error, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from qsac import adversary, analysis, codec, qcore, qsdc
from qsac.adversary import AttackSpec
from qsac.codec import QsacParams
from qsac.keysched import Key, derive_check_string, derive_subkeys, derive_transform_string
from qsac.qcore import StateVector

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_USAGE = 2
EXIT_IO = 3

NAMED_MESSAGES = {
    "plus": [2],
    "minus": [3],
}
_SYMBOL_CHARS = {"0": 0, "1": 1, "+": 2, "-": 3}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def parse_message(spec: str) -> StateVector:
    """``"0101"`` style basis strings (``+``/``-`` allowed) or a named state."""
    if not spec:
        raise UsageError("message must not be empty")
    if spec == "bell":
        return qsdc.pair_state("00")
    if spec in NAMED_MESSAGES:
        return qcore.prepare_product(NAMED_MESSAGES[spec])
    if set(spec) - set(_SYMBOL_CHARS):
        raise UsageError(f"invalid message spec {spec!r}: use 0/1/+/- characters or one of plus, minus, bell")
    try:
        return qcore.prepare_product([_SYMBOL_CHARS[c] for c in spec])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def load_key(path: str | None) -> Key:
    if path is None:
        raise UsageError("--key-file is required")
    try:
        return Key.from_file(path)
    except OSError as exc:
        raise InputError(f"cannot read key file {path}: {exc}") from None
    except ValueError as exc:
        raise InputError(f"malformed key file {path}: {exc}") from None


def load_codeword(path: str) -> codec.QsacCodeword:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read codeword file {path}: {exc}") from None
    try:
        return codec.loads_codeword(text)
    except ValueError as exc:
        raise InputError(f"malformed codeword file {path}: {exc}") from None


def load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"config {path} must be a JSON object")
    return obj


def parse_attack(obj) -> AttackSpec:
    try:
        return AttackSpec.from_json(obj)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid attack spec: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from None
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _params(n: int, m: int) -> QsacParams:
    try:
        return QsacParams(n, m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_keys_derive(args) -> int:
    key = load_key(args.key_file)
    sub = derive_subkeys(key)
    report = {"key_bits": key.bit_length, "kq_seed": sub.kq_seed, "kt_seed": sub.kt_seed}
    if args.n is not None:
        if args.n < 1:
            raise UsageError("--n must be >= 1")
        report["check_string"] = "".join(map(str, derive_check_string(sub, args.n)))
        if args.m is not None:
            params = _params(args.n, args.m)
            report["transform_string"] = derive_transform_string(sub, params.n, params.m)
    _emit(_dumps(report), args.out)
    return EXIT_OK


def cmd_encode(args) -> int:
    key = load_key(args.key_file)
    message = parse_message(args.message)
    params = _params(args.n, message.num_qubits)
    codeword = codec.encode(message, key, params.n)
    _emit(codec.dumps_codeword(codeword), args.out)
    sys.stderr.write(f"n={params.n} m={params.m} S_Q length={params.n} S_T length={params.size}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    key = load_key(args.key_file)
    codeword = load_codeword(args.codeword)
    rng = _rng(args.seed)
    outcome = codec.verify(codeword, key, rng)
    report = outcome.as_dict()
    report.update(
        n=codeword.params.n,
        m=codeword.params.m,
        seed=args.seed,
        exact_pass_probability=codec.exact_pass_probability(codeword, key),
    )
    _emit(_dumps(report), args.out)
    return EXIT_OK if outcome.authenticated else EXIT_REJECTED


def _rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise UsageError("--seed must be non-negative")
    return np.random.default_rng(seed)


def cmd_attack(args) -> int:
    key = load_key(args.key_file)
    codeword = load_codeword(args.codeword)
    spec = parse_attack(load_json(args.config))
    message = parse_message(args.message) if args.message else None
    if spec.kind == adversary.IMPERSONATION and message is None:
        raise UsageError("an Impersonation attack needs --message")
    try:
        tampered = adversary.apply_attack(codeword, spec, key, _rng(args.seed), message=message)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"attack cannot be applied: {exc}") from None
    _emit(codec.dumps_codeword(tampered.codeword), args.out)
    sys.stderr.write(json.dumps(tampered.applied.to_json(), sort_keys=True) + "\n")
    return EXIT_OK


_CONFIG_FIELDS = {"n", "m", "attack", "trials", "seed", "sweep", "output_path", "key", "message"}


def _int_field(cfg: dict, name: str, minimum: int) -> int:
    v = cfg.get(name)
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise UsageError(f"config field '{name}' must be an integer >= {minimum}, got {v!r}")
    return v


def sweep_rows(cfg: dict, key: Key | None = None) -> list[dict]:
    """Run every point of an ExperimentConfig and return CSV rows in sweep order."""
    unknown = set(cfg) - _CONFIG_FIELDS
    if unknown:
        raise UsageError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    n = _int_field(cfg, "n", 1)
    m = _int_field(cfg, "m", 1)
    trials = _int_field(cfg, "trials", 1)
    seed = _int_field(cfg, "seed", 0)
    if "attack" not in cfg:
        raise UsageError("config field 'attack' is required")
    attack = parse_attack(cfg["attack"])
    if key is None:
        if "key" not in cfg:
            raise UsageError("config field 'key' is required when --key-file is not given")
        try:
            key = Key.from_hex(str(cfg["key"]))
        except ValueError as exc:
            raise UsageError(f"config field 'key' is invalid: {exc}") from None
    message = parse_message(cfg.get("message", "0" * m))
    if message.num_qubits != m:
        raise UsageError(f"config field 'message' has {message.num_qubits} qubits, expected m={m}")

    points: list[tuple[int, AttackSpec]] = [(n, attack)]
    sweep = cfg.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or len(sweep) != 1 or not set(sweep) <= {"j", "n"}:
            raise UsageError("config field 'sweep' must be {\"j\": [...]} or {\"n\": [...]}")
        (param, values), = sweep.items()
        if not isinstance(values, list) or not values or not all(isinstance(v, int) and v >= 1 for v in values):
            raise UsageError(f"config field 'sweep.{param}' must be a non-empty list of positive integers")
        if param == "j":
            points = [(n, AttackSpec(attack.kind, None, v, attack.pauli, attack.guessed_key)) for v in values]
        else:
            points = [(v, attack) for v in values]

    rows = []
    for n_point, spec in points:
        params = _params(n_point, m)
        limit = params.n if spec.kind == adversary.CHECK_SUBSTITUTION else params.size
        if spec.count is not None and spec.count > limit:
            raise UsageError(f"config field 'sweep': j={spec.count} exceeds {limit} for n={params.n}")
        stats = analysis.mc_detection(spec, params, key, message, trials, seed)
        rows.append(analysis.detection_row(spec, params, stats))
    return rows


def cmd_sweep(args) -> int:
    cfg = load_json(args.config)
    key = load_key(args.key_file) if args.key_file else None
    rows = sweep_rows(cfg, key)
    buf = io.StringIO()
    analysis.write_detection_csv(rows, buf)
    _emit(buf.getvalue(), args.out or cfg.get("output_path"))
    return EXIT_OK


def cmd_qsdc(args) -> int:
    key = load_key(args.key_file)
    try:
        qsdc._check_bits(args.bits)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _params(args.n, len(args.bits))
    attack = parse_attack(load_json(args.config)) if args.config else None
    if args.repeat < 1:
        raise UsageError("--repeat must be >= 1")
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")

    if args.repeat == 1:
        session = qsdc.run_session(args.bits, key, args.n, args.seed, attack)
        if args.transcript:
            try:
                session.transcript.write(args.transcript)
            except OSError as exc:
                raise InputError(f"cannot write transcript: {exc}") from None
        report = session.as_dict()
        report["transcript_path"] = args.transcript
        _emit(_dumps(report), args.out)
        return EXIT_OK if session.authenticated else EXIT_REJECTED

    aborts = correct = 0
    for r in range(args.repeat):
        session = qsdc.run_session(args.bits, key, args.n, args.seed + r, attack)
        aborts += not session.authenticated
        correct += session.received_bits == args.bits
    report = {
        "sessions": args.repeat,
        "seed": args.seed,
        "sent_bits": args.bits,
        "aborts": aborts,
        "abort_rate": aborts / args.repeat,
        "delivered_correct": correct,
        "attack": attack.to_json() if attack else None,
    }
    _emit(_dumps(report), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsac", description="Quantum secret authentication code simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    keys = sub.add_parser("keys", help="key utilities")
    keys_sub = keys.add_subparsers(dest="keys_command", required=True)
    derive = keys_sub.add_parser("derive", help="show sub-key seeds and derived strings")
    derive.add_argument("--key-file", required=True)
    derive.add_argument("--n", type=int)
    derive.add_argument("--m", type=int)
    derive.add_argument("--out")
    derive.set_defaults(func=cmd_keys_derive)

    enc = sub.add_parser("encode", help="encode a message into a codeword file")
    enc.add_argument("--key-file", required=True)
    enc.add_argument("--message", required=True)
    enc.add_argument("--n", type=int, required=True)
    enc.add_argument("--out")
    enc.set_defaults(func=cmd_encode)

    ver = sub.add_parser("verify", help="verify a codeword file")
    ver.add_argument("--key-file", required=True)
    ver.add_argument("--codeword", required=True)
    ver.add_argument("--seed", type=int, required=True)
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify)

    att = sub.add_parser("attack", help="apply an attack spec to a codeword file")
    att.add_argument("--key-file", required=True)
    att.add_argument("--codeword", required=True)
    att.add_argument("--config", required=True)
    att.add_argument("--seed", type=int, required=True)
    att.add_argument("--message")
    att.add_argument("--out")
    att.set_defaults(func=cmd_attack)

    sw = sub.add_parser("sweep", help="Monte-Carlo detection sweep to CSV")
    sw.add_argument("--config", required=True)
    sw.add_argument("--key-file")
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)

    q = sub.add_parser("qsdc", help="run QSAC-authenticated direct communication")
    q.add_argument("--key-file", required=True)
    q.add_argument("--bits", required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--config", help="attack spec JSON applied in transit")
    q.add_argument("--repeat", type=int, default=1)
    q.add_argument("--transcript")
    q.add_argument("--out")
    q.set_defaults(func=cmd_qsdc)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"qsac: error: {exc}\n")
        return EXIT_USAGE
    except InputError as exc:
        sys.stderr.write(f"qsac: error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
