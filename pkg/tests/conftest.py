import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from modesim import ModeLabel, ModeRegistry, Polarization


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def two_mode_registry():
    reg = ModeRegistry()
    a = ModeLabel("a", Polarization.TE, 0)
    b = ModeLabel("b", Polarization.TE, 0)
    reg.register(a)
    reg.register(b)
    return reg, a, b
