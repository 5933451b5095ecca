import numpy as np
import pytest
from hypothesis import strategies as st

from beaconpursuit import ControlParams, WorldState, effective_shape


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def random_state(rng, box=4.0, min_sep=0.5, beacon=None):
    """Non-degenerate random configuration with random orthonormal frames."""
    while True:
        positions = rng.uniform(-box, box, size=(2, 3))
        frames = np.stack([random_rotation(rng).T, random_rotation(rng).T])
        b = rng.uniform(-1, 1, 3) if beacon is None else np.asarray(beacon, float)
        state = WorldState(positions, frames, b)
        if state.min_separation() > min_sep:
            return state


def random_common_params(rng, mu=(0.5, 2.0)):
    return ControlParams.common(
        rng.uniform(*mu), rng.uniform(0.05, 0.95), rng.uniform(-1, 1), rng.uniform(-1, 1)
    )


def random_shape(rng):
    return effective_shape(random_state(rng))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def orthogonal_state():
    """Beacon at origin, agents at (+-1, 0, 0), x1 = (0, 1, 0), x2 = (0, -1, 0)."""
    f1 = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    f2 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    return WorldState(np.array([[1.0, 0, 0], [-1.0, 0, 0]]), np.stack([f1, f2]), np.zeros(3))


seeds = st.integers(min_value=0, max_value=2**32 - 1)
