import os
import sys

import numpy as np
import pytest

# allow running the suite from a source checkout without installing
_SRC = os.path.join(os.path.dirname(__file__), os.pardir, "src")
try:
    import potbal  # noqa: F401
except ImportError:  # pragma: no cover
    sys.path.insert(0, os.path.abspath(_SRC))

from potbal.geometry import CompactSet, Domain
from potbal.gluing import GluingConfig


@pytest.fixture(scope="session")
def unit_disc():
    return Domain.ball([0.0, 0.0], 1.0)


@pytest.fixture(scope="session")
def std_cfg(unit_disc):
    """Shared disc configuration: core disc(0, 0.1), r = 0.05, h = 1/96."""
    S = CompactSet.closed_ball([0.0, 0.0], 0.1)
    return GluingConfig(S, (0.0, 0.0), 0.05, -1.0, 1.0, unit_disc,
                        h=1.0 / 96.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
