import math
import sys
from pathlib import Path

import numpy as np
import pytest

from qsac.keysched import Key

sys.path.insert(0, str(Path(__file__).parent))

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture
def test_key():
    return Key(b"QSAC-TEST-KEY")


@pytest.fixture
def golden_dir():
    return GOLDEN


def binomial_sigma(p, trials):
    return math.sqrt(p * (1 - p) / trials)
