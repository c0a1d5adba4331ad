"""QSAC-authenticated quantum secure direct communication.

The sender Pauli-encodes each bit pair onto an EPR pair, places both halves of
every pair in the message register and ships the whole register as a single
QSAC codeword. The receiver verifies, then Bell-measures each pair, or aborts.
There is no classical discussion at any point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qsac import adversary, codec, qcore
from qsac.adversary import AttackSpec
from qsac.codec import QsacCodeword
from qsac.keysched import Key
from qsac.qcore import StateVector

# two classical bits -> operation on the first qubit of the pair
PAULI_CODE = {"00": "I", "01": "X", "10": "Z", "11": "iY"}

_OPS = {
    "I": qcore.PAULIS["I"],
    "X": qcore.PAULIS["X"],
    "Z": qcore.PAULIS["Z"],
    "iY": np.array([[0, 1], [-1, 0]], dtype=complex),
}

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def _check_bits(bits: str) -> int:
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"message must be a non-empty bit string, got {bits!r}")
    if len(bits) % 2:
        raise ValueError(f"message must have an even number of bits, got {len(bits)}")
    return len(bits) // 2


def pair_state(two_bits: str) -> StateVector:
    """``(op ⊗ I)|phi+>`` for the operation assigned to ``two_bits``."""
    pair = StateVector(2, PHI_PLUS.copy())
    return qcore.apply_matrix(pair, _OPS[PAULI_CODE[two_bits]], 1)


def message_register(bits: str) -> StateVector:
    """All EPR pairs side by side; pair k occupies message qubits 2k-1 and 2k."""
    k = _check_bits(bits)
    return qcore.tensor(*(pair_state(bits[2 * i : 2 * i + 2]) for i in range(k)))


@dataclass
class Transcript:
    """Protocol log, one record per step."""

    records: list[dict] = field(default_factory=list)

    def log(self, role: str, action: str, sizes: dict, seed: int | None, channel: str = "local") -> None:
        self.records.append({"role": role, "action": action, "sizes": sizes, "seed": seed, "channel": channel})

    def transmissions(self) -> list[dict]:
        return [r for r in self.records if r["channel"] != "local"]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())


def qsdc_send(bits: str, key: Key, n: int, transcript: Transcript | None = None, seed: int | None = None) -> QsacCodeword:
    k = _check_bits(bits)
    if transcript is not None:
        transcript.log("sender", "prepare_epr", {"pairs": k}, seed)
    message = message_register(bits)
    if transcript is not None:
        transcript.log("sender", "pauli_encode", {"pairs": k}, seed)
    codeword = codec.encode(message, key, n)
    if transcript is not None:
        transcript.log("sender", "qsac_encode", {"n": n, "m": 2 * k}, seed)
    return codeword


def bell_measure(state: StateVector, first: int, second: int, rng: np.random.Generator) -> str:
    """CNOT, Hadamard, then Z on both: phi+ -> 00, psi+ -> 01, phi- -> 10, psi- -> 11."""
    state = qcore.apply_cnot(state, first, second)
    state = qcore.apply_hadamard(state, first)
    a, state = qcore.measure(state, first, "Z", rng)
    b, state = qcore.measure(state, second, "Z", rng)
    return f"{a.outcome}{b.outcome}"


def qsdc_receive(
    codeword: QsacCodeword, key: Key, rng: np.random.Generator, transcript: Transcript | None = None, seed: int | None = None
) -> tuple[bool, str | None]:
    """Verify, then decode the bits; returns ``(False, None)`` on any check mismatch."""
    m = codeword.params.m
    if m % 2:
        raise ValueError(f"message register must hold whole EPR pairs, got m={m}")
    outcome = codec.verify(codeword, key, rng)
    if transcript is not None:
        transcript.log(
            "receiver", "qsac_verify", {"n": codeword.params.n, "m": m, "mismatches": len(outcome.mismatched_check_indices)}, seed
        )
    if not outcome.authenticated:
        if transcript is not None:
            transcript.log("receiver", "abort", {"pairs": m // 2}, seed)
        return False, None
    msg = outcome.message_state
    bits = "".join(bell_measure(msg, 2 * i + 1, 2 * i + 2, rng) for i in range(m // 2))
    if transcript is not None:
        transcript.log("receiver", "bell_measure", {"pairs": m // 2}, seed)
    return True, bits


@dataclass
class SessionReport:
    authenticated: bool
    sent_bits: str
    received_bits: str | None
    transcript: Transcript

    def as_dict(self) -> dict:
        return {"authenticated": self.authenticated, "sent_bits": self.sent_bits, "received_bits": self.received_bits}


def run_session(bits: str, key: Key, n: int, seed: int, attack: AttackSpec | None = None) -> SessionReport:
    """One full one-way exchange; ``attack`` (if any) acts on the codeword in transit."""
    rng = np.random.default_rng(seed)
    transcript = Transcript()
    codeword = qsdc_send(bits, key, n, transcript, seed)
    transcript.log("sender", "transmit", {"qubits": codeword.params.size}, seed, channel="quantum")
    if attack is not None:
        message = message_register(bits) if attack.kind == adversary.IMPERSONATION else None
        codeword = adversary.apply_attack(codeword, attack, key, rng, message=message).codeword
        transcript.log("adversary", attack.kind, {"qubits": codeword.params.size}, seed)
    ok, received = qsdc_receive(codeword, key, rng, transcript, seed)
    return SessionReport(ok, bits, received, transcript)
