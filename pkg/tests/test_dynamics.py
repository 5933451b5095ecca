import numpy as np
import pytest
from hypothesis import given, settings

from beaconpursuit import ControlParams, WorldState, embed_shape, integrate, state_derivative, step
from beaconpursuit.dynamics import closed_loop
from beaconpursuit.equilibria import prop2a_equilibrium
from beaconpursuit.geometry import orthonormality_error, rotation_matrix
from beaconpursuit.shape import shape_array

from conftest import random_common_params, random_rotation, random_state, seeds


def constant(u1, v1, u2=None, v2=None):
    uv = np.array([[u1, v1], [u1 if u2 is None else u2, v1 if v2 is None else v2]], dtype=float)
    return lambda state: np.broadcast_to(uv, state.batch_shape + (2, 2))


def test_zero_control_is_straight_line(rng):
    s = random_state(rng)
    d = state_derivative(s, np.zeros((2, 2)))
    np.testing.assert_array_equal(d.positions, s.headings)
    assert not d.frames.any() and not d.beacon.any()


def test_identity_frame_turning():
    s = WorldState(np.array([[0.0, 0, 0], [5.0, 0, 0]]), np.stack([np.eye(3)] * 2), np.array([0.0, 3, 0]))
    d = state_derivative(s, np.array([[1.0, 0.0], [0.0, 0.0]]))
    np.testing.assert_array_equal(d.frames[0], [[0, 1, 0], [-1, 0, 0], [0, 0, 0]])


@given(seed=seeds)
@settings(max_examples=50, deadline=None)
def test_derivative_preserves_gram_matrix(seed):
    """d/dt (x.x), d/dt (x.y), d/dt (x.z) vanish for the returned derivative."""
    rng = np.random.default_rng(seed)
    s = random_state(rng)
    d = state_derivative(s, rng.normal(size=(2, 2)))
    for i in range(2):
        f, df = s.frames[i], d.frames[i]
        gram_rate = df @ f.T + f @ df.T
        assert np.max(np.abs(gram_rate)) < 1e-14


def test_gram_matrix_along_short_integration(rng):
    """Finite-difference check: without renormalization the Gram drift is O(dt^5) per step."""
    s = random_state(rng)
    d = state_derivative(s, np.array([[0.7, -0.3], [0.2, 1.1]]))
    h = 1e-4
    f = s.frames + h * d.frames
    drift = np.einsum("aij,akj->aik", f, f) - np.eye(3)
    assert np.max(np.abs(drift)) < 5 * h**2


def test_straight_motion_exact(rng):
    s = random_state(rng)
    out = step(s, constant(0, 0), 0.1)
    np.testing.assert_allclose(out.positions, s.positions + 0.1 * s.headings, atol=1e-15)


def test_unit_circle_returns_to_start():
    n = int(round(2 * np.pi / 1e-3))
    dt = 2 * np.pi / n  # so that n steps span exactly one period
    s = WorldState(np.array([[0.0, 0, 0], [10.0, 0, 0]]), np.stack([np.eye(3)] * 2), np.array([0.0, 0, 5]))
    rec = integrate(s, None, n * dt, dt, controller=constant(1, 0))
    assert rec.completed
    assert np.linalg.norm(rec.positions[-1, 0] - s.positions[0]) < 1e-9
    assert rec.frame_error() < 1e-12


def test_prop2a_shape_unchanged_after_one_step():
    p = ControlParams.common(1, 0.5, -0.4, 0.2)
    s = embed_shape(prop2a_equilibrium(p).shape)
    after = step(s, p, 1e-3)
    assert np.max(np.abs(shape_array(after) - shape_array(s))) < 1e-10


def test_step_rejects_bad_dt(rng):
    with pytest.raises(ValueError):
        step(random_state(rng), constant(0, 0), 0.0)


def test_t_max_zero_single_sample(rng):
    rec = integrate(random_state(rng), random_common_params(rng), 0.0)
    assert len(rec) == 1 and rec.completed


def test_collocated_start_is_singular(orthogonal_state):
    s = WorldState(np.zeros((2, 3)) + 1, orthogonal_state.frames, np.zeros(3))
    rec = integrate(s, ControlParams.common(1, 0.5, 0, 0), 1.0)
    assert rec.termination == "singular"
    assert np.isnan(rec.shapes).all()


def test_head_on_collision_terminates_early():
    """Agents flying at each other with the beacon far away hit the singularity."""
    f1 = np.eye(3)
    f2 = np.array([[-1.0, 0, 0], [0, -1.0, 0], [0, 0, 1.0]])
    s = WorldState(np.array([[0.0, 0, 0], [1.0, 0, 0]]), np.stack([f1, f2]), np.array([0.0, 1e3, 0]))
    rec = integrate(s, None, 2.0, 1e-3, controller=constant(0, 0))
    assert rec.termination == "singular"
    assert 0.4 < rec.times[-1] < 0.6
    assert "singular" in rec.message


def test_compiled_kernel_matches_numpy_reference(rng):
    p = ControlParams(1.0, 1.5, 0.8, 1.2, 0.35, -0.4, 0.3, 0.2, -0.1)
    s = random_state(rng)
    fast = integrate(s, p, 2.0, 1e-3)
    slow = integrate(s, p, 2.0, 1e-3, controller=closed_loop(p))
    np.testing.assert_allclose(fast.positions, slow.positions, rtol=0, atol=1e-13)
    np.testing.assert_allclose(fast.frames, slow.frames, rtol=0, atol=1e-13)
    np.testing.assert_allclose(fast.inputs, slow.inputs, rtol=0, atol=1e-12)


def test_batched_integration_matches_single(rng):
    p = random_common_params(rng)
    states = [random_state(rng) for _ in range(3)]
    batch = WorldState(np.stack([s.positions for s in states]), np.stack([s.frames for s in states]),
                       np.stack([s.beacon for s in states]))
    rb = integrate(batch, p, 1.0, 1e-3, sample_every=10)
    for k, s in enumerate(states):
        r = integrate(s, p, 1.0, 1e-3, sample_every=10)
        np.testing.assert_array_equal(rb.positions[:, k], r.positions)


def test_sampling_stride(rng):
    p = random_common_params(rng)
    s = random_state(rng)
    full = integrate(s, p, 1.0, 1e-3)
    sparse = integrate(s, p, 1.0, 1e-3, sample_every=100)
    assert len(sparse) == 11
    np.testing.assert_array_equal(sparse.positions, full.positions[::100])
    np.testing.assert_allclose(sparse.times, np.arange(11) * 0.1)


def test_invariants_over_long_run(rng):
    p = ControlParams.common(1.0, 0.5, -0.4, -0.2)
    rec = integrate(random_state(rng), p, 200.0, 1e-3, sample_every=50)
    assert rec.frame_error() < 1e-9
    speed = np.abs(np.linalg.norm(rec.frames[..., 0, :], axis=-1) - 1)
    assert speed.max() < 1e-9


def test_se3_equivariance(rng):
    p = ControlParams(1.0, 1.5, 0.8, 1.2, 0.35, -0.4, 0.3, 0.2, -0.1)
    s = random_state(rng)
    rot, t = random_rotation(rng), rng.normal(size=3) * 3
    a = integrate(s, p, 5.0, 1e-3, sample_every=10)
    b = integrate(s.transformed(rot, t), p, 5.0, 1e-3, sample_every=10)
    np.testing.assert_allclose(b.positions, a.positions @ rot.T + t, atol=1e-8)
    np.testing.assert_allclose(b.frames, a.frames @ rot.T, atol=1e-8)
    np.testing.assert_allclose(b.shapes, a.shapes, atol=1e-8)


def test_fourth_order_convergence(rng):
    p = ControlParams.common(1.0, 0.5, 0.3, -0.2)
    s = random_state(rng)
    t_end = 2.0
    ref = integrate(s, p, t_end, 1e-5, sample_every=200_000).final_state
    errors = []
    for dt in (0.04, 0.02, 0.01):
        fin = integrate(s, p, t_end, dt, sample_every=int(round(t_end / dt))).final_state
        errors.append(np.max(np.abs(fin.positions - ref.positions)))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    for r in ratios:
        assert 12 < r < 20, ratios


def test_renormalization_bounds_drift():
    s = embed_shape(prop2a_equilibrium(ControlParams.common(1, 0.5, -0.4, 0.2)).shape)
    rec = integrate(s, ControlParams.common(1, 0.5, -0.4, 0.2), 50.0, 1e-3, sample_every=1000)
    assert orthonormality_error(rec.frames) < 1e-13


def test_rotation_of_identity_frame_is_valid():
    r = rotation_matrix([1, 2, 3], 0.7)
    assert orthonormality_error(r.T) < 1e-15
