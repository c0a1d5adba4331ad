"""Numerical tolerances and size limits shared by every module."""

from dataclasses import dataclass

DEFAULT_MAX_QUBITS = 20
HARD_MAX_QUBITS = 24


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-9
    fidelity: float = 1e-10
    probability: float = 1e-9
    # below this a measurement branch is treated as impossible
    zero_branch: float = 1e-14
    # amplitude magnitude test for "is this a computational basis state"
    basis_state: float = 1e-9


TOL = Tolerances()


def check_max_qubits(max_qubits: int) -> int:
    if not 1 <= max_qubits <= HARD_MAX_QUBITS:
        raise ValueError(f"max_qubits must be in [1, {HARD_MAX_QUBITS}], got {max_qubits}")
    return max_qubits
