"""Adversary channels applied to a codeword in transit."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from qsac import codec, qcore
from qsac.codec import QsacCodeword, VerificationOutcome
from qsac.keysched import Key
from qsac.qcore import StateVector

PAULI_TAMPER = "PauliTamper"
CHECK_SUBSTITUTION = "CheckSubstitution"
INTERCEPT_RESEND = "InterceptResend"
IMPERSONATION = "Impersonation"
KINDS = (PAULI_TAMPER, CHECK_SUBSTITUTION, INTERCEPT_RESEND, IMPERSONATION)

# length of the random key drawn when an impersonator has no fixed guess
GUESS_KEY_BYTES = 16


@dataclass(frozen=True)
class AttackSpec:
    """Declarative adversary.

    Either ``positions`` lists concrete 1-based indices, or ``j`` asks for
    ``j`` distinct positions drawn uniformly per trial. For CheckSubstitution
    the indices refer to the check register (1..n); otherwise to the whole
    codeword (1..n+m). Impersonation ignores positions; without
    ``guessed_key`` a fresh random key is drawn per trial.
    """

    kind: str
    positions: tuple[int, ...] | None = None
    j: int | None = None
    pauli: str = "X"
    guessed_key: Key | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.pauli not in ("X", "Y", "Z"):
            raise ValueError(f"pauli must be X, Y or Z, got {self.pauli!r}")
        if self.positions is not None:
            object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
            if len(set(self.positions)) != len(self.positions):
                raise ValueError(f"positions must be distinct, got {list(self.positions)}")
            if self.j is not None and self.j != len(self.positions):
                raise ValueError("j disagrees with the number of explicit positions")
        elif self.j is not None and self.j < 0:
            raise ValueError(f"j must be >= 0, got {self.j}")
        if self.kind != IMPERSONATION and self.positions is None and self.j is None:
            raise ValueError(f"{self.kind} needs either positions or j")

    @property
    def count(self) -> int | None:
        """Number of affected qubits (the j of the detection formulas)."""
        return len(self.positions) if self.positions is not None else self.j

    def to_json(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.positions is not None:
            d["positions"] = list(self.positions)
        elif self.j is not None:
            d["positions"] = {"random": self.j}
        if self.kind == PAULI_TAMPER:
            d["pauli"] = self.pauli
        if self.guessed_key is not None:
            d["guessed_key"] = self.guessed_key.hex()
        return d

    @classmethod
    def from_json(cls, obj: dict | str) -> AttackSpec:
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict):
            raise ValueError("attack spec must be a JSON object")
        unknown = set(obj) - {"kind", "positions", "pauli", "guessed_key", "j"}
        if unknown:
            raise ValueError(f"unknown attack field(s): {', '.join(sorted(unknown))}")
        if "kind" not in obj:
            raise ValueError("attack spec is missing 'kind'")
        positions = obj.get("positions")
        j = obj.get("j")
        if isinstance(positions, dict):
            if set(positions) != {"random"}:
                raise ValueError("positions object must be {\"random\": j}")
            j, positions = positions["random"], None
        elif positions is not None and not isinstance(positions, list):
            raise ValueError("positions must be a list or {\"random\": j}")
        for v in (positions or []) + ([j] if j is not None else []):
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError(f"position counts and indices must be integers, got {v!r}")
        key = obj.get("guessed_key")
        return cls(
            kind=obj["kind"],
            positions=tuple(positions) if positions is not None else None,
            j=j,
            pauli=obj.get("pauli", "X"),
            guessed_key=Key.from_hex(key) if key is not None else None,
        )


@dataclass
class TamperedCodeword:
    codeword: QsacCodeword
    applied: AttackSpec


def resolve_positions(spec: AttackSpec, size: int, rng: np.random.Generator) -> list[int]:
    """Concrete 1-based positions in a register of ``size`` qubits."""
    if spec.positions is not None:
        for p in spec.positions:
            if not 1 <= p <= size:
                raise IndexError(f"attack position {p} out of range [1, {size}]")
        return list(spec.positions)
    j = spec.j or 0
    if j > size:
        raise ValueError(f"cannot pick {j} positions out of {size}")
    if j == 0:
        return []
    return sorted(int(p) + 1 for p in rng.choice(size, size=j, replace=False))


def pauli_tamper(codeword: QsacCodeword, spec: AttackSpec, rng: np.random.Generator) -> TamperedCodeword:
    if spec.kind != PAULI_TAMPER:
        raise ValueError(f"pauli_tamper needs a {PAULI_TAMPER} spec, got {spec.kind}")
    positions = resolve_positions(spec, codeword.params.size, rng)
    state = codeword.state
    for p in positions:
        state = qcore.apply_pauli(state, spec.pauli, p)
    return TamperedCodeword(QsacCodeword(codeword.params, state), replace(spec, positions=tuple(positions), j=None))


def substitute_check_states(
    check: Sequence[int], j: int, rng: np.random.Generator, positions: Sequence[int] | None = None
) -> list[int]:
    """Replace ``j`` check symbols, each by a uniformly chosen different BB84 state."""
    n = len(check)
    if positions is None:
        if not 1 <= j <= n:
            raise ValueError(f"j must be in [1, {n}], got {j}")
        positions = [int(p) + 1 for p in rng.choice(n, size=j, replace=False)]
    else:
        if len(positions) != j:
            raise ValueError("j disagrees with the number of explicit positions")
        for p in positions:
            if not 1 <= p <= n:
                raise IndexError(f"check position {p} out of range [1, {n}]")
    out = list(check)
    for p in positions:
        out[p - 1] = (out[p - 1] + int(rng.integers(1, 4))) % 4
    return out


def _relabel_unitary(src: int, dst: int) -> np.ndarray:
    # maps |src> -> |dst> and the orthogonal partner of src onto that of dst
    v = qcore.SYMBOL_STATES
    return np.outer(v[dst], v[src].conj()) + np.outer(v[dst ^ 1], v[src ^ 1].conj())


def check_substitution(
    codeword: QsacCodeword, spec: AttackSpec, key: Key, rng: np.random.Generator
) -> TamperedCodeword:
    """Analysis-model channel: swap j decoded check states for other BB84 states.

    The substitution acts in the decoded frame, so the result is the network
    applied to ``|C''> ⊗ |M>``. It requires the key and is not a physical
    attack; it realizes the channel under which the (1/3)^j figure is derived.
    """
    if spec.kind != CHECK_SUBSTITUTION:
        raise ValueError(f"check_substitution needs a {CHECK_SUBSTITUTION} spec, got {spec.kind}")
    n = codeword.params.n
    check, targets = codeword_schedule(codeword, key)
    positions = resolve_positions(spec, n, rng)
    substituted = substitute_check_states(check, len(positions), rng, positions=positions)
    decoded = codec.decode_with(codeword, targets)
    for p in positions:
        decoded = qcore.apply_matrix(decoded, _relabel_unitary(check[p - 1], substituted[p - 1]), p)
    state = qcore.apply_network(decoded, codec.encode_schedule(targets))
    return TamperedCodeword(QsacCodeword(codeword.params, state), replace(spec, positions=tuple(positions), j=None))


def codeword_schedule(codeword: QsacCodeword, key: Key) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return codec.key_schedule(key, codeword.params.n, codeword.params.m)


def intercept_resend(codeword: QsacCodeword, positions: Sequence[int], rng: np.random.Generator) -> TamperedCodeword:
    """Measure each listed qubit in a uniformly random Z/X basis and forward the collapsed register."""
    state = codeword.state
    for p in positions:
        if not 1 <= p <= codeword.params.size:
            raise IndexError(f"intercept position {p} out of range [1, {codeword.params.size}]")
    for p in positions:
        basis = "Z" if rng.random() < 0.5 else "X"
        _, state = qcore.measure(state, p, basis, rng)
    spec = AttackSpec(INTERCEPT_RESEND, positions=tuple(positions))
    return TamperedCodeword(QsacCodeword(codeword.params, state), spec)


def random_key(rng: np.random.Generator, nbytes: int = GUESS_KEY_BYTES) -> Key:
    return Key(rng.bytes(nbytes))


def impersonate(
    message: StateVector, guessed_key: Key, true_key: Key, n: int, rng: np.random.Generator
) -> VerificationOutcome:
    """Forge a codeword with ``guessed_key`` and run the honest verifier with ``true_key``."""
    forged = codec.encode(message, guessed_key, n)
    return codec.verify(forged, true_key, rng)


def apply_attack(
    codeword: QsacCodeword,
    spec: AttackSpec,
    key: Key,
    rng: np.random.Generator,
    message: StateVector | None = None,
) -> TamperedCodeword:
    """Dispatch ``spec`` against ``codeword``.

    ``key`` is the true key; only CheckSubstitution uses it. Impersonation
    needs the message the forger wants to pass off.
    """
    if spec.kind == PAULI_TAMPER:
        return pauli_tamper(codeword, spec, rng)
    if spec.kind == CHECK_SUBSTITUTION:
        return check_substitution(codeword, spec, key, rng)
    if spec.kind == INTERCEPT_RESEND:
        return intercept_resend(codeword, resolve_positions(spec, codeword.params.size, rng), rng)
    if message is None:
        raise ValueError("impersonation needs the message to forge")
    guess = spec.guessed_key if spec.guessed_key is not None else random_key(rng)
    forged = codec.encode(message, guess, codeword.params.n)
    return TamperedCodeword(forged, replace(spec, guessed_key=guess))
