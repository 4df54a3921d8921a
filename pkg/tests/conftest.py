from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from torlog.geometry import box, direction, inscribed_regular_polygon, regular_polygon, validate_directions

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def disk256():
    return inscribed_regular_polygon(256, 1.0)


@pytest.fixture(scope="session")
def square2():
    """[-1, 1]^2 with normals (e1, e2, -e1, -e2)."""
    return box(-1.0, 1.0, -1.0, 1.0)


@pytest.fixture(scope="session")
def pentagon():
    return regular_polygon(5, 1.0, 0.3)


def random_directions(rng, n, min_sep=0.05):
    """n directions in general position that span the circle."""
    while True:
        theta = np.sort(rng.uniform(0.0, 2 * np.pi, n))
        rep = validate_directions(direction(theta))
        if rep.spans and rep.general_position and rep.min_line_separation > min_sep:
            return direction(theta)


@st.composite
def spanning_data(draw, min_n=3, max_n=9):
    """(directions, supports) with spanning directions and positive supports."""
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_n, max_n))
    rng = np.random.default_rng(seed)
    dirs = random_directions(rng, n, min_sep=1e-3)
    h = rng.uniform(0.3, 2.0, n)
    return dirs, h
