"""Dense state-vector engine.

Qubits are numbered from 1. Qubit 1 is the leftmost symbol of a ket string and
the most significant bit of the amplitude index, so ``|10>`` lives at index 2.
All operations return a new :class:`StateVector`; inputs are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from qsac.config import DEFAULT_MAX_QUBITS, TOL, check_max_qubits

SQRT_HALF = 1.0 / np.sqrt(2.0)

# BasisSymbol value -> single-qubit amplitudes for |0>, |1>, |+>, |->
SYMBOL_STATES = {
    0: np.array([1.0, 0.0], dtype=complex),
    1: np.array([0.0, 1.0], dtype=complex),
    2: np.array([SQRT_HALF, SQRT_HALF], dtype=complex),
    3: np.array([SQRT_HALF, -SQRT_HALF], dtype=complex),
}

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT_HALF

# (basis, outcome) -> projector; X outcome 0 is |+>, outcome 1 is |->
PROJECTORS = {
    ("Z", 0): np.array([[1, 0], [0, 0]], dtype=complex),
    ("Z", 1): np.array([[0, 0], [0, 1]], dtype=complex),
    ("X", 0): np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex),
    ("X", 1): np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex),
}


def symbol_basis(symbol: int) -> str:
    """Measurement basis that distinguishes a BasisSymbol: 0,1 -> Z and 2,3 -> X."""
    if symbol not in SYMBOL_STATES:
        raise ValueError(f"basis symbol must be in 0..3, got {symbol!r}")
    return "Z" if symbol < 2 else "X"


def symbol_outcome(symbol: int) -> int:
    """Outcome bit a BasisSymbol yields when measured in its own basis."""
    symbol_basis(symbol)
    return symbol % 2


class StateVector:
    """Normalized amplitudes over ``num_qubits`` qubits."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes: np.ndarray, *, max_qubits: int = DEFAULT_MAX_QUBITS):
        check_max_qubits(max_qubits)
        if num_qubits < 1:
            raise ValueError(f"a register needs at least one qubit, got {num_qubits}")
        if num_qubits > max_qubits:
            raise ValueError(f"{num_qubits} qubits exceeds the cap of {max_qubits}")
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != 1 << num_qubits:
            raise ValueError(
                f"expected {1 << num_qubits} amplitudes for {num_qubits} qubits, got {amplitudes.shape[0]}"
            )
        self.num_qubits = num_qubits
        self.amplitudes = amplitudes

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex], *, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
        """Build a register from raw amplitudes, which must already be normalized."""
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        size = amps.shape[0]
        if size < 2 or size & (size - 1):
            raise ValueError(f"amplitude count must be a power of two >= 2, got {size}")
        state = cls(size.bit_length() - 1, amps.copy(), max_qubits=max_qubits)
        if abs(state.norm() - 1.0) > TOL.norm:
            raise ValueError(f"amplitudes are not normalized (norm^2 = {state.norm()!r})")
        return state

    @classmethod
    def basis(cls, bits: str, *, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
        """Computational basis state for a string such as ``"0110"``."""
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"basis string must be a non-empty string of 0/1, got {bits!r}")
        return prepare_product([int(b) for b in bits], max_qubits=max_qubits)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> StateVector:
        return _wrap(self.num_qubits, self.amplitudes.copy())

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


def _wrap(num_qubits: int, amplitudes: np.ndarray) -> StateVector:
    # skips validation; callers guarantee shape
    state = StateVector.__new__(StateVector)
    state.num_qubits = num_qubits
    state.amplitudes = amplitudes
    return state


def kron_vectors(*vectors: np.ndarray) -> np.ndarray:
    """Kronecker product of 1-D amplitude arrays (first argument most significant)."""
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.outer(out, v).reshape(-1)
    return out


def _check_index(state: StateVector, index: int) -> None:
    if not 1 <= index <= state.num_qubits:
        raise IndexError(f"qubit index {index} out of range [1, {state.num_qubits}]")


def _apply_1q(amps: np.ndarray, num_qubits: int, index: int, matrix: np.ndarray) -> np.ndarray:
    view = amps.reshape(1 << (index - 1), 2, 1 << (num_qubits - index))
    return (matrix @ view).reshape(-1)


def prepare_product(symbols: Iterable[int], *, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    """Tensor product of BB84 states, first symbol on qubit 1.

    >>> prepare_product([1, 0]).amplitudes.real.tolist()
    [0.0, 0.0, 1.0, 0.0]
    """
    symbols = list(symbols)
    if not symbols:
        raise ValueError("cannot prepare an empty register")
    check_max_qubits(max_qubits)
    if len(symbols) > max_qubits:
        raise ValueError(f"{len(symbols)} qubits exceeds the cap of {max_qubits}")
    for s in symbols:
        if s not in SYMBOL_STATES:
            raise ValueError(f"basis symbol must be in 0..3, got {s!r}")
    amps = kron_vectors(*(SYMBOL_STATES[s] for s in symbols))
    return StateVector(len(symbols), amps, max_qubits=max_qubits)


def tensor(*states: StateVector, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    """``a ⊗ b ⊗ ...`` with the first argument on the lowest qubit indices."""
    amps = kron_vectors(*(s.amplitudes for s in states))
    return StateVector(sum(s.num_qubits for s in states), amps, max_qubits=max_qubits)


@lru_cache(maxsize=4096)
def _cnot_permutation(num_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << num_qubits)
    cbit = 1 << (num_qubits - control)
    tbit = 1 << (num_qubits - target)
    perm = np.where(idx & cbit, idx ^ tbit, idx)
    perm.setflags(write=False)
    return perm


@lru_cache(maxsize=1024)
def network_permutation(num_qubits: int, gates: tuple[tuple[int, int], ...]) -> np.ndarray:
    """Gather index equivalent to applying ``gates`` (control, target) in temporal order.

    ``new_amplitudes = old_amplitudes[perm]``. Self-targeted gates are identities.
    """
    perm = np.arange(1 << num_qubits)
    for control, target in gates:
        if control != target:
            perm = perm[_cnot_permutation(num_qubits, control, target)]
    perm.setflags(write=False)
    return perm


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    """CNOT with 1-based indices; ``control == target`` is the identity."""
    _check_index(state, control)
    _check_index(state, target)
    if control == target:
        return state.copy()
    perm = _cnot_permutation(state.num_qubits, control, target)
    return _wrap(state.num_qubits, state.amplitudes[perm])


def apply_network(state: StateVector, gates: Sequence[tuple[int, int]]) -> StateVector:
    """Apply a sequence of CNOTs as one precomputed amplitude permutation."""
    gates = tuple((int(c), int(t)) for c, t in gates)
    for c, t in gates:
        _check_index(state, c)
        _check_index(state, t)
    perm = network_permutation(state.num_qubits, gates)
    return _wrap(state.num_qubits, state.amplitudes[perm])


def apply_pauli(state: StateVector, which: str, index: int) -> StateVector:
    if which not in PAULIS:
        raise ValueError(f"unknown Pauli {which!r}")
    _check_index(state, index)
    return _wrap(state.num_qubits, _apply_1q(state.amplitudes, state.num_qubits, index, PAULIS[which]))


def apply_matrix(state: StateVector, matrix: np.ndarray, index: int) -> StateVector:
    """Apply an arbitrary 2x2 unitary to one qubit."""
    _check_index(state, index)
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2, 2):
        raise ValueError("single-qubit gate must be 2x2")
    return _wrap(state.num_qubits, _apply_1q(state.amplitudes, state.num_qubits, index, matrix))


def apply_hadamard(state: StateVector, index: int) -> StateVector:
    _check_index(state, index)
    return _wrap(state.num_qubits, _apply_1q(state.amplitudes, state.num_qubits, index, HADAMARD))


@dataclass(slots=True)
class MeasurementRecord:
    qubit_index: int
    basis: str
    outcome: int

    def as_dict(self) -> dict:
        return {"qubit_index": self.qubit_index, "basis": self.basis, "outcome": self.outcome}


def _projector(basis: str, outcome: int) -> np.ndarray:
    try:
        return PROJECTORS[(basis, outcome)]
    except KeyError:
        raise ValueError(f"invalid basis/outcome pair ({basis!r}, {outcome!r})") from None


def _project(amps: np.ndarray, num_qubits: int, index: int, basis: str, outcome: int) -> np.ndarray:
    """``(I ⊗ P ⊗ I) amps`` for the Z/X projector ``P``, written out element-wise."""
    _projector(basis, outcome)
    v = amps.reshape(1 << (index - 1), 2, 1 << (num_qubits - index))
    out = np.empty_like(v)
    if basis == "Z":
        out[:, outcome] = v[:, outcome]
        out[:, 1 - outcome] = 0
    else:
        # |+><+| and |-><-| have entries ±1/2
        if outcome == 0:
            half = (v[:, 0] + v[:, 1]) * 0.5
            out[:, 1] = half
        else:
            half = (v[:, 0] - v[:, 1]) * 0.5
            np.negative(half, out=out[:, 1])
        out[:, 0] = half
    return out.reshape(-1)


def _branches(v: np.ndarray, basis: str) -> tuple[np.ndarray, np.ndarray]:
    # v has the measured qubit on axis -2; X amplitudes are scaled by sqrt(2)
    _projector(basis, 0)
    if basis == "Z":
        return v[..., 0, :], v[..., 1, :]
    return v[..., 0, :] + v[..., 1, :], v[..., 0, :] - v[..., 1, :]


def _weight(a: np.ndarray, axes) -> np.ndarray:
    return (a.real**2 + a.imag**2).sum(axis=axes)


def measure_many(
    amps: np.ndarray,
    num_qubits: int,
    index: int,
    basis: str,
    rng: np.random.Generator | None = None,
    *,
    uniforms: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Measure one qubit on every row of a ``(T, 2**num_qubits)`` batch of registers.

    Row t is decided by the t-th of ``T`` uniforms, drawn from ``rng`` unless
    supplied directly, using the same rule as :func:`measure`. Returns the
    ``(T,)`` outcome vector and the renormalized collapsed batch.
    """
    if not 1 <= index <= num_qubits:
        raise IndexError(f"qubit index {index} outside [1, {num_qubits}]")
    t = amps.shape[0]
    v = amps.reshape(t, 1 << (index - 1), 2, 1 << (num_qubits - index))
    a0, a1 = _branches(v, basis)
    w0, w1 = _weight(a0, (1, 2)), _weight(a1, (1, 2))
    if uniforms is None:
        if rng is None:
            raise ValueError("measure_many needs either rng or uniforms")
        uniforms = rng.random(t)
    elif uniforms.shape != (t,):
        raise ValueError(f"expected {t} uniforms, got shape {uniforms.shape}")
    outcomes = (uniforms >= w0 / (w0 + w1)).astype(np.int8)
    one = outcomes == 1
    w = np.where(one, w1, w0)
    p = w / (w0 + w1)
    if np.any(p < TOL.zero_branch):
        bad = int(np.argmax(p < TOL.zero_branch))
        raise RuntimeError(f"sampled a zero-probability branch (p={float(p[bad])!r}) on qubit {index}")
    chosen = np.where(one[:, None, None], a1, a0) / np.sqrt(w)[:, None, None]
    out = np.empty_like(v)
    if basis == "Z":
        keep = one[:, None, None]
        out[:, :, 0] = np.where(keep, 0, chosen)
        out[:, :, 1] = np.where(keep, chosen, 0)
    else:
        h = chosen * math.sqrt(0.5)
        out[:, :, 0] = h
        out[:, :, 1] = np.where(one, -1.0, 1.0)[:, None, None] * h
    return outcomes, out.reshape(t, -1)


def measure(state: StateVector, index: int, basis: str, rng: np.random.Generator) -> tuple[MeasurementRecord, StateVector]:
    """Sample a Z- or X-basis measurement of one qubit and collapse the register.

    X outcome 0 means ``|+>`` and 1 means ``|->``. Exactly one uniform draw is
    taken from ``rng`` per call.
    """
    _check_index(state, index)
    n = state.num_qubits
    v = state.amplitudes.reshape(1 << (index - 1), 2, 1 << (n - index))
    a0, a1 = _branches(v, basis)
    w0, w1 = np.vdot(a0, a0).real, np.vdot(a1, a1).real
    outcome = 0 if rng.random() < w0 / (w0 + w1) else 1
    w = w1 if outcome else w0
    p = w / (w0 + w1)
    if p < TOL.zero_branch:
        raise RuntimeError(f"sampled a zero-probability branch (p={p!r}) on qubit {index}")
    chosen = (a1 if outcome else a0) * (1.0 / math.sqrt(w))
    out = np.empty_like(v)
    if basis == "Z":
        out[:, outcome] = chosen
        out[:, 1 - outcome] = 0
    else:
        h = chosen * math.sqrt(0.5)
        out[:, 0] = h
        out[:, 1] = -h if outcome else h
    return MeasurementRecord(index, basis, outcome), _wrap(n, out.reshape(-1))


def projection_probability(state: StateVector, targets: Sequence[tuple[int, str, int]]) -> float:
    """Probability that every listed ``(index, basis, outcome)`` is observed.

    Computed as ``<psi|P|psi>`` without sampling; ``state`` is untouched.
    """
    seen = set()
    amps = state.amplitudes
    for index, basis, outcome in targets:
        _check_index(state, index)
        if index in seen:
            raise ValueError(f"duplicate qubit index {index} in projection targets")
        seen.add(index)
        amps = _project(amps, state.num_qubits, index, basis, outcome)
    p = float(np.vdot(amps, amps).real)
    return min(max(p, 0.0), 1.0)


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2``, insensitive to global phase."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return min(max(float(f), 0.0), 1.0)


def classical_bits(state: StateVector) -> str | None:
    """Bit string if the register is a computational basis state (up to phase), else None."""
    mags = np.abs(state.amplitudes)
    i = int(np.argmax(mags))
    if abs(mags[i] - 1.0) > TOL.basis_state:
        return None
    return format(i, f"0{state.num_qubits}b")


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-like random pure state from normalized complex Gaussians."""
    amps = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    amps /= np.linalg.norm(amps)
    return StateVector(num_qubits, amps)


def dump_amplitudes(state: StateVector) -> str:
    """One line per nonzero amplitude: ``index_bits real imag`` (qubit 1 first).

    Floats use the shortest round-trip representation, so the dump is lossless.
    """
    lines = []
    width = state.num_qubits
    for i in np.flatnonzero(state.amplitudes):
        a = state.amplitudes[i]
        lines.append(f"{int(i):0{width}b} {float(a.real)!r} {float(a.imag)!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_amplitudes(lines: Iterable[str], num_qubits: int, *, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    """Inverse of :func:`dump_amplitudes`. Raises ValueError on malformed input."""
    check_max_qubits(max_qubits)
    if not 1 <= num_qubits <= max_qubits:
        raise ValueError(f"qubit count {num_qubits} outside [1, {max_qubits}]")
    amps = np.zeros(1 << num_qubits, dtype=complex)
    seen = set()
    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'bits real imag', got {line.strip()!r}")
        bits, re_s, im_s = parts
        if len(bits) != num_qubits or set(bits) - {"0", "1"}:
            raise ValueError(f"line {lineno}: bad index bits {bits!r}")
        if bits in seen:
            raise ValueError(f"line {lineno}: duplicate index {bits}")
        seen.add(bits)
        amps[int(bits, 2)] = complex(float(re_s), float(im_s))
    norm2 = float(np.vdot(amps, amps).real)
    if abs(norm2 - 1.0) > TOL.norm:
        raise ValueError(f"amplitudes are not normalized (norm^2 = {norm2!r})")
    return StateVector(num_qubits, amps, max_qubits=max_qubits)
