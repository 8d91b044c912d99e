from __future__ import annotations

import numpy as np
import pytest

from lgt_dual.engine import Layout, StateVector

GENERIC = {"lambda": 1.3, "g": 0.9, "h": 0.6, "mu": 1.1}


def random_state(layout: Layout, rng: np.random.Generator) -> StateVector:
    a = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    return StateVector(layout, a).normalized()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
