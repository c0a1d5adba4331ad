"""QSAC encoding, decoding and verification.

Layout of a codeword register: check qubits occupy positions 1..n, message
qubits n+1..n+m. Encoding applies CNOT(i, S_T[i]) for i = 1..n+m in ascending
order; decoding applies the same gates in descending order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from qsac import qcore
from qsac.config import DEFAULT_MAX_QUBITS, TOL
from qsac.keysched import Key, derive_check_string, derive_subkeys, derive_transform_string
from qsac.qcore import MeasurementRecord, StateVector

# amplitudes held per verification batch
_BATCH_AMPLITUDES = 1 << 21


@dataclass(frozen=True)
class QsacParams:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"check-qubit count n must be >= 1, got {self.n}")
        if self.m < 1:
            raise ValueError(f"message-qubit count m must be >= 1, got {self.m}")
        if self.n + self.m > DEFAULT_MAX_QUBITS:
            raise ValueError(f"n+m = {self.n + self.m} exceeds the cap of {DEFAULT_MAX_QUBITS}")

    @property
    def size(self) -> int:
        return self.n + self.m


@dataclass
class QsacCodeword:
    params: QsacParams
    state: StateVector

    def __post_init__(self):
        if self.state.num_qubits != self.params.size:
            raise ValueError(
                f"codeword state has {self.state.num_qubits} qubits, layout needs {self.params.size}"
            )


@dataclass
class VerificationOutcome:
    authenticated: bool
    mismatched_check_indices: list[int]
    records: list[MeasurementRecord]
    message_state: StateVector = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "authenticated": self.authenticated,
            "mismatched_check_indices": list(self.mismatched_check_indices),
            "records": [r.as_dict() for r in self.records],
        }


@lru_cache(maxsize=256)
def key_schedule(key: Key, n: int, m: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """``(S_Q, S_T)`` for a key and layout."""
    sub = derive_subkeys(key)
    return tuple(derive_check_string(sub, n)), tuple(derive_transform_string(sub, n, m))


def encode_schedule(targets: Sequence[int]) -> list[tuple[int, int]]:
    """(control, target) pairs in the temporal order used by the encoder."""
    return [(i, int(t)) for i, t in enumerate(targets, start=1)]


def decode_schedule(targets: Sequence[int]) -> list[tuple[int, int]]:
    return encode_schedule(targets)[::-1]


def _check_targets(targets: Sequence[int], size: int) -> None:
    if len(targets) != size:
        raise ValueError(f"transform string has length {len(targets)}, register has {size} qubits")
    for t in targets:
        if not 1 <= t <= size:
            raise ValueError(f"transform target {t} outside [1, {size}]")


def reference_state(message: StateVector, check: Sequence[int]) -> StateVector:
    """``|C> ⊗ |M>``, the register an honest decoder recovers."""
    return qcore.tensor(qcore.prepare_product(check), message)


def encode_with(message: StateVector, check: Sequence[int], targets: Sequence[int]) -> QsacCodeword:
    """Encode with explicit S_Q and S_T strings instead of a key."""
    params = QsacParams(len(check), message.num_qubits)
    _check_targets(targets, params.size)
    psi = reference_state(message, check)
    return QsacCodeword(params, qcore.apply_network(psi, encode_schedule(targets)))


def encode(message: StateVector, key: Key, n: int) -> QsacCodeword:
    """Entangle ``message`` with ``n`` key-derived check qubits."""
    params = QsacParams(n, message.num_qubits)
    check, targets = key_schedule(key, params.n, params.m)
    return encode_with(message, check, targets)


def decode_with(codeword: QsacCodeword, targets: Sequence[int]) -> StateVector:
    _check_targets(targets, codeword.params.size)
    return qcore.apply_network(codeword.state, decode_schedule(targets))


def decode(codeword: QsacCodeword, key: Key) -> StateVector:
    """Run the CNOT network in reverse; an honest codeword returns to ``|C> ⊗ |M>``."""
    _, targets = key_schedule(key, codeword.params.n, codeword.params.m)
    return decode_with(codeword, targets)


def check_targets(check: Sequence[int]) -> list[tuple[int, str, int]]:
    """Projection targets ``(index, basis, expected outcome)`` for the check register."""
    return [(i, qcore.symbol_basis(s), qcore.symbol_outcome(s)) for i, s in enumerate(check, start=1)]


def measure_checks(decoded: StateVector, check: Sequence[int], rng: np.random.Generator) -> VerificationOutcome:
    """Measure qubits 1..n of a decoded register against the expected check string."""
    n = len(check)
    records = []
    mismatched = []
    state = decoded
    for index, basis, expected in check_targets(check):
        record, state = qcore.measure(state, index, basis, rng)
        records.append(record)
        if record.outcome != expected:
            mismatched.append(index)
    message = _strip_checks(state, records, n)
    return VerificationOutcome(not mismatched, mismatched, records, message)


def _strip_checks(state: StateVector, records: list[MeasurementRecord], n: int) -> StateVector:
    # after projecting every check qubit the register is |c_1..c_n> ⊗ |msg>
    m = state.num_qubits - n
    collapsed = qcore.kron_vectors(*(qcore.SYMBOL_STATES[r.outcome + (0 if r.basis == "Z" else 2)] for r in records))
    msg = collapsed.conj() @ state.amplitudes.reshape(1 << n, 1 << m)
    msg = msg / np.linalg.norm(msg)
    return StateVector(m, msg)


def verify_with(codeword: QsacCodeword, check: Sequence[int], targets: Sequence[int], rng) -> VerificationOutcome:
    if len(check) != codeword.params.n:
        raise ValueError(f"check string has length {len(check)}, codeword has n={codeword.params.n}")
    return measure_checks(decode_with(codeword, targets), check, rng)


def verify(codeword: QsacCodeword, key: Key, rng: np.random.Generator) -> VerificationOutcome:
    """Decode, then measure each check qubit in the basis its S_Q symbol names.

    The message register is returned even when authentication fails; aborting
    is the caller's decision.
    """
    check, targets = key_schedule(key, codeword.params.n, codeword.params.m)
    return verify_with(codeword, check, targets, rng)


def verify_many_with(
    codeword: QsacCodeword, check: Sequence[int], targets: Sequence[int], rng: np.random.Generator, trials: int
) -> np.ndarray:
    """Authentication flags of ``trials`` independent verifications of ``codeword``.

    Each trial decodes a fresh copy and measures qubits 1..n in order, exactly
    as :func:`verify_with` does; the copies are simply processed side by side.
    All ``trials * n`` uniforms are drawn up front (row-major by trial), so the
    result does not depend on the internal batch size.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if len(check) != codeword.params.n:
        raise ValueError(f"check string has length {len(check)}, codeword has n={codeword.params.n}")
    decoded = decode_with(codeword, targets).amplitudes
    size = codeword.params.size
    chunk = max(1, _BATCH_AMPLITUDES >> size)
    plan = check_targets(check)
    draws = rng.random((trials, len(plan)))
    flags = np.empty(trials, dtype=bool)
    for lo in range(0, trials, chunk):
        hi = min(trials, lo + chunk)
        batch = np.broadcast_to(decoded, (hi - lo, decoded.size)).copy()
        ok = np.ones(hi - lo, dtype=bool)
        for col, (index, basis, expected) in enumerate(plan):
            outcomes, batch = qcore.measure_many(batch, size, index, basis, uniforms=draws[lo:hi, col])
            ok &= outcomes == expected
        flags[lo:hi] = ok
    return flags


def verify_many(codeword: QsacCodeword, key: Key, rng: np.random.Generator, trials: int) -> np.ndarray:
    """Vectorized repetition of :func:`verify`, returning only the pass flags."""
    check, targets = key_schedule(key, codeword.params.n, codeword.params.m)
    return verify_many_with(codeword, check, targets, rng, trials)


def exact_pass_probability_with(codeword: QsacCodeword, check: Sequence[int], targets: Sequence[int]) -> float:
    return qcore.projection_probability(decode_with(codeword, targets), check_targets(check))


def exact_pass_probability(codeword: QsacCodeword, key: Key) -> float:
    """Sampling-free probability that :func:`verify` authenticates ``codeword``."""
    check, targets = key_schedule(key, codeword.params.n, codeword.params.m)
    return exact_pass_probability_with(codeword, check, targets)


def dumps_codeword(codeword: QsacCodeword) -> str:
    """Text serialization: a header line then the amplitude dump of the register."""
    body = qcore.dump_amplitudes(codeword.state)
    nnz = body.count("\n")
    return f"qsac-codeword n={codeword.params.n} m={codeword.params.m} nnz={nnz}\n{body}"


def loads_codeword(text: str) -> QsacCodeword:
    """Parse :func:`dumps_codeword` output. Raises ValueError on any malformation."""
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty codeword file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "qsac-codeword":
        raise ValueError(f"bad codeword header {lines[0]!r}")
    fields = {}
    for item in header[1:]:
        name, sep, value = item.partition("=")
        if not sep or name not in ("n", "m", "nnz"):
            raise ValueError(f"bad header field {item!r}")
        try:
            fields[name] = int(value)
        except ValueError:
            raise ValueError(f"header field {name} is not an integer: {value!r}") from None
    if set(fields) != {"n", "m", "nnz"}:
        raise ValueError("header must define n, m and nnz")
    params = QsacParams(fields["n"], fields["m"])
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != fields["nnz"]:
        raise ValueError(f"expected {fields['nnz']} amplitude lines, found {len(body)}")
    state = qcore.parse_amplitudes(body, params.size)
    return QsacCodeword(params, state)


def is_normalized(state: StateVector) -> bool:
    return abs(state.norm() - 1.0) <= TOL.norm
