"""Closed-form detection figures, Monte-Carlo estimators and avalanche scans."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, TextIO

import numpy as np

from qsac import adversary, codec, qcore
from qsac.adversary import AttackSpec
from qsac.codec import QsacParams
from qsac.keysched import Key
from qsac.qcore import StateVector

Z95 = 1.96
AVALANCHE_MAX_QUBITS = 12

DETECTION_COLUMNS = ["n", "m", "attack", "j", "trials", "seed", "pass_rate", "ci95", "predicted"]
AVALANCHE_COLUMNS = ["position", "pauli", "exact_pass_prob", "hamming_spread"]


@dataclass(frozen=True)
class DetectionFormulas:
    """Closed-form acceptance figures for n check, m message and j altered check qubits.

    Everything is an exact Fraction except ``epsilon_avalanche``, which is
    irrational for odd n.
    """

    n: int
    m: int
    j: int
    epsilon: Fraction
    p_collision: Fraction
    p_pass: Fraction
    epsilon_avalanche: float


def formulas(n: int, m: int, j: int) -> DetectionFormulas:
    if n < 1 or m < 1 or j < 1:
        raise ValueError(f"n, m, j must all be >= 1, got n={n}, m={m}, j={j}")
    if j > n:
        raise ValueError(f"cannot alter j={j} of only n={n} check qubits")
    epsilon = Fraction(1, 3) ** j
    # |message space| / |codeword space| = 2^m / 2^(n+m)
    p_collision = Fraction(2**m, 2 ** (n + m))
    p_pass = p_collision + (1 - p_collision) * epsilon
    return DetectionFormulas(n, m, j, epsilon, p_collision, p_pass, (1.0 / 3.0) ** (n / 2))


def random_sampling_baseline(num_check: int, total: int) -> Fraction:
    """Per-interfered-qubit detection chance of the conventional check-sampling strategy."""
    if num_check < 1:
        raise ValueError(f"need at least one check qubit, got {num_check}")
    if num_check > total:
        raise ValueError(f"num_check={num_check} exceeds total={total}")
    return Fraction(num_check, total) * Fraction(1, 4)


@dataclass(frozen=True)
class DetectionStats:
    trials: int
    passes: int
    pass_rate: float
    ci95_half_width: float
    predicted: float | None
    seed: int

    @classmethod
    def from_counts(cls, trials: int, passes: int, seed: int, predicted: float | None = None) -> DetectionStats:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= passes <= trials:
            raise ValueError(f"passes={passes} outside [0, {trials}]")
        r = passes / trials
        return cls(trials, passes, r, Z95 * math.sqrt(r * (1 - r) / trials), predicted, seed)

    def merge(self, other: DetectionStats) -> DetectionStats:
        """Pool counts of two batches; the seed of ``self`` is kept."""
        return DetectionStats.from_counts(
            self.trials + other.trials, self.passes + other.passes, self.seed, self.predicted
        )


def predicted_pass_rate(attack: AttackSpec, params: QsacParams) -> float | None:
    """Closed-form pass rate where one exists (check substitution only)."""
    if attack.kind == adversary.CHECK_SUBSTITUTION and attack.count:
        return float(formulas(params.n, params.m, attack.count).epsilon)
    return None


def run_trial(
    honest: codec.QsacCodeword, attack: AttackSpec, key: Key, message: StateVector, trial_seed: int
) -> tuple[adversary.TamperedCodeword, codec.VerificationOutcome]:
    """One attack + verify round on a fresh generator seeded with ``trial_seed``."""
    rng = np.random.default_rng(trial_seed)
    tampered = adversary.apply_attack(honest, attack, key, rng, message=message)
    return tampered, codec.verify(tampered.codeword, key, rng)


def mc_detection(
    attack: AttackSpec,
    params: QsacParams,
    key: Key,
    message: StateVector,
    trials: int,
    seed: int,
) -> DetectionStats:
    """Monte-Carlo acceptance rate of ``attack``; trial t uses seed ``seed + t``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if message.num_qubits != params.m:
        raise ValueError(f"message has {message.num_qubits} qubits, params say m={params.m}")
    honest = codec.encode(message, key, params.n)
    passes = 0
    for t in range(trials):
        _, outcome = run_trial(honest, attack, key, message, seed + t)
        passes += outcome.authenticated
    return DetectionStats.from_counts(trials, passes, seed, predicted_pass_rate(attack, params))


@dataclass(frozen=True)
class AvalancheEntry:
    tamper_position: int
    pauli: str
    exact_pass_probability: float
    decoded_hamming_spread: int | None


@dataclass
class AvalancheReport:
    key: Key | None
    n: int
    m: int
    transform: tuple[int, ...]
    per_position: list[AvalancheEntry]

    def max_spread(self, pauli: str = "X") -> int | None:
        spreads = [e.decoded_hamming_spread for e in self.per_position if e.pauli == pauli]
        if any(s is None for s in spreads):
            return None
        return max(spreads)


def hamming(a: str, b: str) -> int:
    return sum(x != y for x, y in zip(a, b, strict=True))


def scan_network(
    check: Sequence[int],
    targets: Sequence[int],
    message: StateVector,
    paulis: Sequence[str] = ("X", "Z"),
    key: Key | None = None,
) -> AvalancheReport:
    """Tamper every codeword position with every listed Pauli and decode.

    The Hamming spread compares honest and tampered decoded basis strings and
    is only defined when both are computational basis states.
    """
    size = len(check) + message.num_qubits
    if size > AVALANCHE_MAX_QUBITS:
        raise ValueError(f"avalanche scan is limited to {AVALANCHE_MAX_QUBITS} qubits, got {size}")
    codeword = codec.encode_with(message, check, targets)
    honest_bits = qcore.classical_bits(codec.decode_with(codeword, targets))
    expected = codec.check_targets(check)
    entries = []
    for pos in range(1, size + 1):
        for pauli in paulis:
            tampered = codec.QsacCodeword(codeword.params, qcore.apply_pauli(codeword.state, pauli, pos))
            decoded = codec.decode_with(tampered, targets)
            bits = qcore.classical_bits(decoded)
            spread = hamming(bits, honest_bits) if bits is not None and honest_bits is not None else None
            entries.append(AvalancheEntry(pos, pauli, qcore.projection_probability(decoded, expected), spread))
    return AvalancheReport(key, len(check), message.num_qubits, tuple(targets), entries)


def avalanche_scan(
    key: Key, n: int, m: int, *, classical: bool = True, message: StateVector | None = None
) -> AvalancheReport:
    """Avalanche scan of the key's network.

    With ``classical`` the check symbols are folded onto the Z basis
    (|+> -> |0>, |-> -> |1>) so decoded states stay basis states. The message
    defaults to ``|0...0>``.
    """
    if n + m > AVALANCHE_MAX_QUBITS:
        raise ValueError(f"avalanche scan is limited to {AVALANCHE_MAX_QUBITS} qubits, got {n + m}")
    check, targets = codec.key_schedule(key, n, m)
    if classical:
        check = tuple(s % 2 for s in check)
    if message is None:
        message = StateVector.basis("0" * m)
    return scan_network(check, targets, message, key=key)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def detection_row(attack: AttackSpec, params: QsacParams, stats: DetectionStats) -> dict:
    return {
        "n": params.n,
        "m": params.m,
        "attack": attack.kind,
        "j": attack.count,
        "trials": stats.trials,
        "seed": stats.seed,
        "pass_rate": stats.pass_rate,
        "ci95": stats.ci95_half_width,
        "predicted": stats.predicted,
    }


def write_detection_csv(rows: Iterable[dict], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DETECTION_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in DETECTION_COLUMNS])


def read_detection_csv(text: str) -> list[dict]:
    """Parse a detection CSV back into typed rows."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != DETECTION_COLUMNS:
        raise ValueError(f"unexpected columns {reader.fieldnames}")
    rows = []
    for r in reader:
        rows.append(
            {
                "n": int(r["n"]),
                "m": int(r["m"]),
                "attack": r["attack"],
                "j": int(r["j"]) if r["j"] else None,
                "trials": int(r["trials"]),
                "seed": int(r["seed"]),
                "pass_rate": float(r["pass_rate"]),
                "ci95": float(r["ci95"]),
                "predicted": float(r["predicted"]) if r["predicted"] else None,
            }
        )
    return rows


def write_avalanche_csv(report: AvalancheReport, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(AVALANCHE_COLUMNS)
    for e in report.per_position:
        writer.writerow([e.tamper_position, e.pauli, _fmt(e.exact_pass_probability), _fmt(e.decoded_hamming_spread)])
