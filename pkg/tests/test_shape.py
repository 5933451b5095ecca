import numpy as np
import pytest
from hypothesis import given, settings

from beaconpursuit import (
    ControlParams,
    EffectiveShape,
    WorldState,
    constraint_residuals,
    effective_shape,
    embed_shape,
    integrate,
    integrate_shape,
    shape_rhs,
    xtilde_candidates,
    xtilde_candidates_closed_form,
)
from beaconpursuit.equilibria import prop1_equilibrium, prop2a_equilibrium, prop2b_equilibrium
from beaconpursuit.errors import (
    AssumptionViolation,
    Collinear,
    NoIntersection,
    SingularConfiguration,
    UnrealizableShape,
)
from beaconpursuit.shape import shape_array

from conftest import random_common_params, random_rotation, random_state, seeds

P2A = ControlParams.common(1.0, 0.5, -0.4, 0.2)
P2B = ControlParams.common(1.0, 0.5, 0.2, -0.5)


def test_orthogonal_shape(orthogonal_state):
    np.testing.assert_array_equal(effective_shape(orthogonal_state).as_array(), [2, 1, 1, 0, 0, 0, 0, -1])


def test_beacon_between_agents(rng):
    s = random_state(rng)
    s = WorldState(np.array([[2.0, 1, 0.5], [-1.0, -0.5, -0.25]]), s.frames, np.zeros(3))
    sh = effective_shape(s)
    assert abs(sh.rho_1b + sh.rho_2b - sh.rho) < 1e-12
    assert constraint_residuals(sh).beacon_between < 1e-12


def test_collocated_extraction_raises(orthogonal_state):
    s = WorldState(np.ones((2, 3)), orthogonal_state.frames, np.zeros(3))
    with pytest.raises(SingularConfiguration):
        effective_shape(s)


@given(seed=seeds)
@settings(max_examples=80, deadline=None)
def test_random_state_satisfies_invariants(seed):
    rng = np.random.default_rng(seed)
    sh = effective_shape(random_state(rng))
    rep = constraint_residuals(sh)
    assert rep.min_slack >= -1e-12
    plus, minus = xtilde_candidates_closed_form(sh)
    assert min(abs(sh.xtilde - plus), abs(sh.xtilde - minus)) < 1e-9


def test_sampled_slacks_nonnegative(rng):
    states = [random_state(rng) for _ in range(10_000)]
    batch = WorldState(np.stack([s.positions for s in states]), np.stack([s.frames for s in states]),
                       np.stack([s.beacon for s in states]))
    rep = constraint_residuals(shape_array(batch))
    assert np.min(rep.min_slack) >= -1e-12


def test_rigid_motion_invariance(rng):
    for _ in range(50):
        s = random_state(rng)
        moved = s.transformed(random_rotation(rng), rng.normal(size=3) * 10)
        np.testing.assert_allclose(shape_array(moved), shape_array(s), atol=1e-13)


def test_prop2a_constraints():
    rep = constraint_residuals(prop2a_equilibrium(P2A).shape)
    assert rep.triangle_upper == 0 and rep.triangle_lower == 10
    assert rep.beacon_between == 0
    assert rep.realizable()


def test_infeasible_triangle_has_negative_slack():
    rep = constraint_residuals(EffectiveShape(3.0, 1.0, 1.0, 0, 0, 0, 0, -1))
    assert rep.triangle_upper < 0 and not rep.realizable()


def test_projection_bound_violation():
    # |rho_1b xbar_1b - rho xbar_1| > rho_2b
    rep = constraint_residuals(EffectiveShape(1.0, 1.0, 1.0, -0.9, 0, 0.9, 0, 0))
    assert rep.heading1_projection < 0


# ------------------------------------------------------------- x~ geometry


def test_zero_projections_give_plus_minus_one():
    sh = EffectiveShape(1.0, 1.0, 1.2, 0, 0, 0, 0, 1.0)
    assert sorted(xtilde_candidates(sh)) == pytest.approx([-1.0, 1.0], abs=1e-15)


def test_candidates_agree_with_closed_form(rng):
    for _ in range(300):
        sh = effective_shape(random_state(rng))
        explicit = sorted(xtilde_candidates(sh))
        closed = sorted(xtilde_candidates_closed_form(sh))
        np.testing.assert_allclose(explicit, closed, atol=1e-9)


def test_true_xtilde_is_a_candidate(rng):
    for _ in range(300):
        sh = effective_shape(random_state(rng))
        assert min(abs(sh.xtilde - c) for c in xtilde_candidates(sh)) < 1e-9


def test_reflection_switches_candidate(rng):
    for _ in range(50):
        sh = effective_shape(random_state(rng))
        same, mirrored = xtilde_candidates(sh)
        if abs(same - mirrored) < 1e-6:
            continue
        s = embed_shape(sh)
        flip = np.diag([1.0, 1.0, -1.0])  # the triangle lies in z = 0
        frames = s.frames.copy()
        frames[1] = frames[1] @ flip
        frames[1, 2] = -frames[1, 2]  # keep agent 2's frame right-handed
        other = effective_shape(WorldState(s.positions, frames, s.beacon))
        assert other.xtilde == pytest.approx(same if abs(sh.xtilde - mirrored) < 1e-9 else mirrored, abs=1e-12)


def test_collinear_candidates_raise():
    with pytest.raises(Collinear):
        xtilde_candidates(EffectiveShape(2.0, 1.0, 1.0, 0, 0, 0, 0, -1))


def test_non_intersecting_circles_raise():
    with pytest.raises(NoIntersection):
        xtilde_candidates(EffectiveShape(1.0, 1.0, 1.0, 0.9, 0.0, -0.9, 0.0, 0.0))


# ------------------------------------------------------------- embedding


def test_round_trip_random_shapes(rng):
    for _ in range(300):
        sh = effective_shape(random_state(rng))
        np.testing.assert_allclose(shape_array(embed_shape(sh)), sh.as_array(), atol=1e-12)


@pytest.mark.parametrize("branch", ["P'", "P''"])
def test_branches_round_trip(rng, branch):
    sh = effective_shape(random_state(rng))
    s = embed_shape(sh, branch)
    np.testing.assert_allclose(shape_array(s), sh.as_array(), atol=1e-12)
    assert (s.frames[0, 0, 2] >= 0) == (branch == "P'")


def test_prop2a_embedding_is_antipodal():
    sh = prop2a_equilibrium(P2A).shape
    s = embed_shape(sh)
    np.testing.assert_allclose(s.positions, [[5, 0, 0], [-5, 0, 0]], atol=1e-12)
    np.testing.assert_allclose(np.abs(s.headings @ [1, 0, 0]), 0, atol=1e-15)
    np.testing.assert_allclose(s.headings[0], -s.headings[1], atol=1e-15)
    np.testing.assert_allclose(shape_array(s), sh.as_array(), atol=1e-12)


def test_prop2b_embedding_parallel_headings():
    sh = prop2b_equilibrium(P2B).shape
    s = embed_shape(sh)
    np.testing.assert_allclose(s.headings[0], s.headings[1], atol=1e-12)
    assert constraint_residuals(sh).collinear > 1e-3
    np.testing.assert_allclose(shape_array(s), sh.as_array(), atol=1e-12)
    # the headings are perpendicular to the triangle plane and to both beacon rays
    np.testing.assert_allclose(np.abs(s.headings[0]), [0, 0, 1], atol=1e-12)


def test_orthogonal_shape_embeds_congruently(orthogonal_state):
    s = embed_shape(EffectiveShape(2, 1, 1, 0, 0, 0, 0, -1))
    np.testing.assert_allclose(s.positions, orthogonal_state.positions, atol=1e-15)
    d = s.headings @ s.headings.T
    np.testing.assert_allclose(d, orthogonal_state.headings @ orthogonal_state.headings.T, atol=1e-15)


@pytest.mark.parametrize(
    "values",
    [
        (3.0, 1.0, 1.0, 0, 0, 0, 0, -1),  # triangle
        (1.0, 1.0, 1.0, 0.9, 0.0, -0.9, 0.0, 0.0),  # circles miss
        (1.0, 1.0, 1.2, 0, 0, 0, 0, 0.3),  # x~ not a candidate
    ],
)
def test_unrealizable_embeddings(values):
    with pytest.raises(UnrealizableShape):
        embed_shape(EffectiveShape(*values))


# ------------------------------------------------------------- dynamics


def test_distance_rates_definitional(rng):
    for _ in range(20):
        sh = effective_shape(random_state(rng))
        d = shape_rhs(sh, random_common_params(rng))
        assert d.rho == sh.xbar_1 + sh.xbar_2
        assert d.rho_1b == sh.xbar_1b and d.rho_2b == sh.xbar_2b


def test_prop1_values_are_stationary():
    p = ControlParams.common(2.0, 0.5, -0.5, 0.0)
    d = shape_rhs(prop1_equilibrium(p, 3.0).shape, p).as_array()
    assert np.max(np.abs(d)) < 1e-12


def test_assumption_violation(rng):
    p = ControlParams(1.0, 2.0, 1.0, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(AssumptionViolation):
        shape_rhs(effective_shape(random_state(rng)), p)


def test_singular_shape_raises():
    with pytest.raises(SingularConfiguration):
        shape_rhs(EffectiveShape(0.0, 1.0, 1.0, 0, 0, 0, 0, -1), P2A)


def _fd_rate(state, params, h=1e-6):
    """Second-order one-sided difference of the extracted shape along the full flow."""
    fwd = integrate(state, params, h, h).state(-1)
    fwd2 = integrate(state, params, 2 * h, h).state(-1)
    y0, y1, y2 = shape_array(state), shape_array(fwd), shape_array(fwd2)
    return (-3 * y0 + 4 * y1 - y2) / (2 * h)


def test_shape_rhs_matches_full_flow(rng):
    """Finite-difference oracle: d/dt of extracted shape vs. the reduced right-hand side."""
    worst = 0.0
    for _ in range(30):
        s = random_state(rng, min_sep=1.0)
        p = random_common_params(rng)
        fd = _fd_rate(s, p)
        exact = shape_rhs(shape_array(s), p)
        rel = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
        worst = max(worst, rel.max())
    assert worst < 1e-6


def test_integrate_shape_equilibrium_is_fixed():
    tr = integrate_shape(prop2a_equilibrium(P2A).shape, P2A, 20.0)
    assert tr.completed
    assert np.max(np.abs(tr.shapes - tr.shapes[0])) < 1e-8


def test_integrate_shape_zero_horizon(rng):
    tr = integrate_shape(effective_shape(random_state(rng)), P2A, 0.0)
    assert len(tr) == 1


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_integrate_shape_preserves_constraints(seed):
    rng = np.random.default_rng(seed)
    batch = np.stack([shape_array(random_state(rng)) for _ in range(8)])
    tr = integrate_shape(batch, random_common_params(rng), 10.0, 1e-3)
    # near-collisions (some distance -> 0) are not resolved by a fixed step; the
    # integrator must flag them as an escape rather than continue silently
    resolved = np.min(tr.shapes[..., :3], axis=(0, 2)) > 0.05
    assert tr.completed or not resolved.all()
    assert np.min(tr.min_slack[:, resolved]) >= -1e-6
    assert np.nanmax(tr.xtilde_gap[:, resolved]) < 1e-6


def test_integrate_shape_rejects_unrealizable():
    with pytest.raises(UnrealizableShape):
        integrate_shape(EffectiveShape(3.0, 1.0, 1.0, 0, 0, 0, 0, -1), P2A, 1.0)


def test_compiled_shape_step_matches_numpy_reference(rng):
    """The compiled RK4 loop reproduces a numpy RK4 on ``shape_rates`` exactly."""
    from beaconpursuit.shape import shape_rates

    p = ControlParams.common(1.3, 0.4, -0.3, 0.25)
    y = np.stack([shape_array(random_state(rng)) for _ in range(4)])
    tr = integrate_shape(y, p, 0.2, 1e-2)
    ref = y.copy()
    args = (p.mu, p.lam, p.a, p.a0)
    for k in range(1, 21):
        k1 = shape_rates(ref, *args)
        k2 = shape_rates(ref + 0.5 * 1e-2 * k1, *args)
        k3 = shape_rates(ref + 0.5 * 1e-2 * k2, *args)
        k4 = shape_rates(ref + 1e-2 * k3, *args)
        ref = ref + 1e-2 / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        np.testing.assert_array_equal(tr.shapes[k], ref)


def test_integrate_shape_singular_termination():
    # agents 0.05 apart flying head-on: the separation closes at rate 2
    s = WorldState.from_headings([0.025, 3.0, 0.0], [-1.0, 0, 0], [-0.025, 3.0, 0.0], [1.0, 0, 0], np.zeros(3))
    sh = effective_shape(s)
    tr = integrate_shape(sh, P2A, 1.0, 1e-3)
    assert tr.termination in ("singular", "constraint_escape")
    assert tr.times[-1] < 0.05
