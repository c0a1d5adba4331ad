"""Quantum secret authentication code (QSAC) simulator and experiment harness."""

from qsac.codec import (
    QsacCodeword,
    QsacParams,
    VerificationOutcome,
    decode,
    encode,
    exact_pass_probability,
    verify,
)
from qsac.keysched import Key, derive_check_string, derive_subkeys, derive_transform_string
from qsac.qcore import StateVector, prepare_product

__all__ = [
    "Key",
    "QsacCodeword",
    "QsacParams",
    "StateVector",
    "VerificationOutcome",
    "decode",
    "derive_check_string",
    "derive_subkeys",
    "derive_transform_string",
    "encode",
    "exact_pass_probability",
    "prepare_product",
    "verify",
]

__version__ = "0.1.0"
