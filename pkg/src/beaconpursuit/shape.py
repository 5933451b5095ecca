"""Effective shape space: extraction, constraints, closed-loop dynamics, embedding.

An effective shape is eight scalars

    rho, rho_1b, rho_2b, xbar_1, xbar_2, xbar_1b, xbar_2b, xtilde

subject to one codimension-1 constraint: once the other seven are fixed,
``xtilde`` can only take one of two values, obtained from the two mirror-image
placements of the headings with respect to the agents/beacon plane.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import (
    AssumptionViolation,
    Collinear,
    NoIntersection,
    SingularConfiguration,
    UnrealizableShape,
)
from ._kernels import shape_rk4
from .geometry import _triangle_area, complete_frame, dot, norm, triangle_from_sides
from .state import SINGULAR_TOL, WorldState

SHAPE_FIELDS = ("rho", "rho_1b", "rho_2b", "xbar_1", "xbar_2", "xbar_1b", "xbar_2b", "xtilde")

# slack below which a shape is considered unrealizable
REALIZABLE_TOL = 1e-9
# distance of xtilde to the nearest admissible value
CANDIDATE_TOL = 1e-9
# integrate_shape stops once a constraint slack drops below -ESCAPE_TOL
ESCAPE_TOL = 1e-6
# relative triangle height below which the agents and beacon count as collinear
COLLINEAR_TOL = 1e-10


@dataclass(frozen=True)
class EffectiveShape:
    """The eight effective shape scalars (floats or broadcastable arrays)."""

    rho: float
    rho_1b: float
    rho_2b: float
    xbar_1: float
    xbar_2: float
    xbar_1b: float
    xbar_2b: float
    xtilde: float

    def as_array(self) -> np.ndarray:
        return np.stack([np.asarray(getattr(self, f), dtype=float) for f in SHAPE_FIELDS], axis=-1)

    @classmethod
    def from_array(cls, arr) -> "EffectiveShape":
        arr = np.asarray(arr, dtype=float)
        if arr.shape[-1] != 8:
            raise ValueError(f"expected 8 shape values on the last axis, got shape {arr.shape}")
        if arr.ndim == 1:
            return cls(*(float(v) for v in arr))
        return cls(*(arr[..., k] for k in range(8)))

    def replace(self, **changes) -> "EffectiveShape":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return EffectiveShape(**values)

    def as_dict(self) -> dict:
        return {f: float(getattr(self, f)) for f in SHAPE_FIELDS}


def _as_shape_array(shape) -> np.ndarray:
    if isinstance(shape, EffectiveShape):
        return shape.as_array()
    return np.asarray(shape, dtype=float)


def shape_array(state: WorldState) -> np.ndarray:
    """Effective shape of ``state`` as an array ``(..., 8)``."""
    pos = state.positions
    r12 = pos[..., 0, :] - pos[..., 1, :]
    rb = pos - state.beacon[..., None, :]
    rho = norm(r12)
    rho_b = norm(rb)
    if np.any(rho < SINGULAR_TOL) or np.any(rho_b < SINGULAR_TOL):
        raise SingularConfiguration(
            f"collocated bodies: rho={np.min(rho):.3e}, rho_b={np.min(rho_b):.3e}"
        )
    x1 = state.frames[..., 0, 0, :]
    x2 = state.frames[..., 1, 0, :]
    return np.stack(
        [
            rho,
            rho_b[..., 0],
            rho_b[..., 1],
            dot(x1, r12) / rho,
            -dot(x2, r12) / rho,
            dot(x1, rb[..., 0, :]) / rho_b[..., 0],
            dot(x2, rb[..., 1, :]) / rho_b[..., 1],
            dot(x1, x2),
        ],
        axis=-1,
    )


def effective_shape(state: WorldState) -> EffectiveShape:
    """Extract the effective shape; ``xbar_2`` is measured against ``r_21``."""
    return EffectiveShape.from_array(shape_array(state))


# ---------------------------------------------------------------------------
# constraints


def _cosines(y):
    """In-plane cosines: (e_12 . e_1b, e_21 . e_2b, e_1b . e_2b)."""
    rho, r1b, r2b = y[..., 0], y[..., 1], y[..., 2]
    c1 = (r1b**2 + rho**2 - r2b**2) / (2 * rho * r1b)
    c2 = (r2b**2 + rho**2 - r1b**2) / (2 * rho * r2b)
    cb = (r1b**2 + r2b**2 - rho**2) / (2 * r1b * r2b)
    return c1, c2, cb


def _gram_slack(xbar, xbar_b, c):
    # determinant of the Gram matrix of (x_i, e_i, e_ib); >= 0 iff the circles meet
    return 1 - c**2 - xbar**2 - xbar_b**2 + 2 * c * xbar * xbar_b


@dataclass(frozen=True)
class ConstraintReport:
    """Signed slacks of the shape-space constraints (non-negative when satisfied).

    ``heading1_projection`` / ``heading2_projection`` bound the projection of
    each heading on the other agent's beacon direction; ``triangle`` is the
    smaller of the two triangle-inequality slacks; ``circles_1`` / ``circles_2``
    are the Gram-determinant slacks telling whether the admissible heading
    circles actually meet. ``beacon_between`` and ``beacon_outside`` are the
    collinearity indicators ``|rho_1b + rho_2b - rho|`` and
    ``||rho_1b - rho_2b| - rho|``.
    """

    heading1_projection: np.ndarray
    heading2_projection: np.ndarray
    triangle_upper: np.ndarray
    triangle_lower: np.ndarray
    circles_1: np.ndarray
    circles_2: np.ndarray
    beacon_between: np.ndarray
    beacon_outside: np.ndarray

    @property
    def triangle(self):
        return np.minimum(self.triangle_upper, self.triangle_lower)

    @property
    def min_slack(self):
        return np.min(
            np.stack(
                [
                    self.heading1_projection,
                    self.heading2_projection,
                    self.triangle_upper,
                    self.triangle_lower,
                    self.circles_1,
                    self.circles_2,
                ]
            ),
            axis=0,
        )

    def realizable(self, tol: float = REALIZABLE_TOL) -> bool:
        return bool(np.all(self.min_slack >= -tol))

    @property
    def collinear(self):
        return np.minimum(self.beacon_between, self.beacon_outside)


def constraint_residuals(shape) -> ConstraintReport:
    """Evaluate every shape constraint; never raises on infeasible shapes."""
    y = _as_shape_array(shape)
    rho, r1b, r2b, x1, x2, x1b, x2b = (y[..., k] for k in range(7))
    if np.any(np.minimum(np.minimum(rho, r1b), r2b) <= 0):
        raise ValueError("distances must be positive")
    c1, c2, _ = _cosines(y)
    return ConstraintReport(
        heading1_projection=r2b - np.abs(r1b * x1b - rho * x1),
        heading2_projection=r1b - np.abs(r2b * x2b - rho * x2),
        triangle_upper=r1b + r2b - rho,
        triangle_lower=rho - np.abs(r1b - r2b),
        circles_1=_gram_slack(x1, x1b, c1),
        circles_2=_gram_slack(x2, x2b, c2),
        beacon_between=np.abs(r1b + r2b - rho),
        beacon_outside=np.abs(np.abs(r1b - r2b) - rho),
    )


def xtilde_candidates_closed_form(shape):
    """Both admissible ``xtilde`` values from the seven other scalars, vectorized.

    Returns ``(plus, minus)``: ``plus`` puts both headings on the same side of
    the agents/beacon plane, ``minus`` on opposite sides. NaN where the triangle
    is degenerate or the heading circles do not meet.
    """
    y = _as_shape_array(shape)
    x1, x2, x1b, x2b = y[..., 3], y[..., 4], y[..., 5], y[..., 6]
    c1, c2, cb = _cosines(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = 1 - c1**2
        d2 = 1 - c2**2
        # in-plane parts p_i = alpha_i e_i + beta_i e_ib, with e_2 = -e_1
        al1 = (x1 - c1 * x1b) / d1
        be1 = (x1b - c1 * x1) / d1
        al2 = (x2 - c2 * x2b) / d2
        be2 = (x2b - c2 * x2) / d2
        # e_1.e_2 = -1, e_1.e_2b = -c2, e_1b.e_2 = -c1, e_1b.e_2b = cb
        inplane = -al1 * al2 - al1 * be2 * c2 - be1 * al2 * c1 + be1 * be2 * cb
        g1 = _gram_slack(x1, x1b, c1) / d1
        g2 = _gram_slack(x2, x2b, c2) / d2
        g1 = np.where(g1 < 0, np.where(g1 > -REALIZABLE_TOL, 0.0, np.nan), g1)
        g2 = np.where(g2 < 0, np.where(g2 > -REALIZABLE_TOL, 0.0, np.nan), g2)
        out = np.sqrt(g1) * np.sqrt(g2)
    return inplane + out, inplane - out


def _placement(shape: EffectiveShape):
    """Triangle vertices, in-plane unit vectors and collinearity flag."""
    rho, r1b, r2b = float(shape.rho), float(shape.rho_1b), float(shape.rho_2b)
    r1, r2 = triangle_from_sides(r1b, r2b, rho)
    scale = max(rho, r1b, r2b)
    height = 2.0 * _triangle_area(r1b, r2b, rho) / scale
    collinear = height <= COLLINEAR_TOL * scale
    return r1, r2, collinear


def _inplane_heading(e_nb, e_b, xbar, xbar_b):
    """Solve for the in-plane (x, y) part of a heading and its out-of-plane size."""
    mat = np.array([e_nb[:2], e_b[:2]])
    p = np.linalg.solve(mat, np.array([xbar, xbar_b]))
    gap = 1.0 - float(p @ p)
    if gap < -REALIZABLE_TOL:
        raise NoIntersection(
            f"heading circles do not intersect (1 - |p|^2 = {gap:.3e}); shape is unrealizable"
        )
    return p, np.sqrt(max(gap, 0.0))


def _headings_noncollinear(shape: EffectiveShape, r1, r2):
    e12 = (r1 - r2) / norm(r1 - r2)
    p1, h1 = _inplane_heading(e12, r1 / norm(r1), float(shape.xbar_1), float(shape.xbar_1b))
    p2, h2 = _inplane_heading(-e12, r2 / norm(r2), float(shape.xbar_2), float(shape.xbar_2b))
    x1 = np.array([p1[0], p1[1], h1])
    x2_same = np.array([p2[0], p2[1], h2])
    # reflection through the triangle plane z = 0
    x2_mirror = x2_same * np.array([1.0, 1.0, -1.0])
    return x1, x2_same, x2_mirror


def xtilde_candidates(shape) -> tuple[float, float]:
    """The two values ``xtilde`` may take given the other seven scalars.

    Both headings are built explicitly in a triangle-fixed basis (triangle in
    the ``z = 0`` plane, beacon at the origin); the second value comes from
    reflecting agent 2's heading through that plane. Returns
    ``(same_side, mirrored)``.
    """
    if not isinstance(shape, EffectiveShape):
        shape = EffectiveShape.from_array(shape)
    r1, r2, collinear = _placement(shape)
    if collinear:
        raise Collinear("agents and beacon are collinear: xtilde is not two-valued")
    x1, x2_same, x2_mirror = _headings_noncollinear(shape, r1, r2)
    return float(x1 @ x2_same), float(x1 @ x2_mirror)


def embed_shape(shape, branch: str = "P'") -> WorldState:
    """Build a configuration realizing ``shape``.

    The beacon sits at the origin, the triangle in the ``z = 0`` plane with
    agent 1 on the positive ``x`` axis. Agent 1's heading takes the
    positive-``z`` intersection point (``branch="P'"``) or its mirror image
    (``branch="P''"``); agent 2's side is picked to reproduce ``xtilde``.
    For collinear placements agent 1's heading leans toward ``+y``.
    Frames are completed with :func:`beaconpursuit.geometry.complete_frame`.
    """
    if not isinstance(shape, EffectiveShape):
        shape = EffectiveShape.from_array(shape)
    if branch not in ("P'", "P''"):
        raise ValueError("branch must be \"P'\" or \"P''\"")
    report = constraint_residuals(shape)
    if not report.realizable():
        raise UnrealizableShape(f"constraint slack {float(report.min_slack):.3e} < 0")
    try:
        r1, r2, collinear = _placement(shape)
    except ValueError as exc:
        raise UnrealizableShape(str(exc)) from exc
    xt = float(shape.xtilde)
    if collinear:
        x1, x2 = _headings_collinear(shape, r1, r2)
    else:
        try:
            x1, x2_same, x2_mirror = _headings_noncollinear(shape, r1, r2)
        except NoIntersection as exc:
            raise UnrealizableShape(str(exc)) from exc
        same, mirror = float(x1 @ x2_same), float(x1 @ x2_mirror)
        x2 = x2_same if abs(xt - same) <= abs(xt - mirror) else x2_mirror
        if min(abs(xt - same), abs(xt - mirror)) > CANDIDATE_TOL:
            raise UnrealizableShape(
                f"xtilde={xt!r} matches neither admissible value ({same!r}, {mirror!r})"
            )
        if branch == "P''":
            flip = np.array([1.0, 1.0, -1.0])
            x1, x2 = x1 * flip, x2 * flip
    return _polish(WorldState.from_headings(r1, x1, r2, x2), shape.as_array())


def _configuration(params, base: WorldState) -> WorldState:
    """``base`` moved by 10 coordinates: two position offsets, two tangent heading offsets."""
    params = np.atleast_2d(params)
    headings = []
    for i in range(2):
        t1, t2 = base.frames[i, 1], base.frames[i, 2]
        headings.append(base.frames[i, 0] + params[:, 6 + 2 * i, None] * t1 + params[:, 7 + 2 * i, None] * t2)
    n = len(params)
    positions = base.positions + params[:, :6].reshape(n, 2, 3)
    frames = np.stack([np.stack([complete_frame(h) for h in hs]) for hs in zip(*headings)])
    return WorldState(positions, frames, np.broadcast_to(base.beacon, (n, 3)).copy())


def _polish(state: WorldState, target: np.ndarray, steps: int = 3) -> WorldState:
    """Gauss-Newton refinement of ``state`` toward the shape ``target``.

    Seven shape scalars determine the eighth only up to an ill-conditioned
    relation (thin triangles, tangent heading circles), so an input rounded to
    doubles is generally a little off the realizable set and the direct
    construction puts that whole discrepancy into ``xtilde``. A few
    least-squares steps on the configuration spread it over all eight
    components instead; the forward map is well-conditioned, so each step's
    residual is accurate to rounding.
    """
    best, best_err = state, float(np.max(np.abs(shape_array(state) - target)))
    scale = max(1.0, float(np.max(np.abs(target[:3]))))
    h = 1e-6 * scale
    for _ in range(steps):
        if best_err <= 1e-15 * scale:
            break
        probe = np.zeros((21, 10))
        for k in range(10):
            probe[1 + 2 * k, k], probe[2 + 2 * k, k] = h, -h
        shapes = shape_array(_configuration(probe, best))
        jac = (shapes[1::2] - shapes[2::2]).T / (2 * h)
        # rank 7: the realizable set has codimension 1, so drop its normal direction
        step, *_ = np.linalg.lstsq(jac, target - shapes[0], rcond=1e-8)
        cand = _configuration(step, best)
        cand = WorldState(cand.positions[0], cand.frames[0], cand.beacon[0])
        err = float(np.max(np.abs(shape_array(cand) - target)))
        if not err < best_err:
            break
        best, best_err = cand, err
    return best


def _headings_collinear(shape: EffectiveShape, r1, r2):
    e12 = (r1 - r2) / norm(r1 - r2)
    x1b, x2b = float(shape.xbar_1b), float(shape.xbar_2b)
    xb1, xb2 = float(shape.xbar_1), float(shape.xbar_2)
    # with everything on the x axis, the beacon projections are fixed by xbar
    s1 = np.sign(r1[0]) * e12[0]
    s2 = -np.sign(r2[0]) * e12[0] if r2[0] != 0 else s1
    if abs(x1b - s1 * xb1) > CANDIDATE_TOL or abs(x2b - s2 * xb2) > CANDIDATE_TOL:
        raise UnrealizableShape("collinear placement: beacon projections inconsistent with xbar")
    lat1 = np.sqrt(max(0.0, 1.0 - xb1**2))
    lat2 = np.sqrt(max(0.0, 1.0 - xb2**2))
    xt = float(shape.xtilde)
    base = -xb1 * xb2
    if lat1 * lat2 > 0:
        cos_phi = (xt - base) / (lat1 * lat2)
        if abs(cos_phi) > 1.0 + CANDIDATE_TOL:
            raise UnrealizableShape(f"xtilde={xt!r} unreachable in the collinear placement")
        cos_phi = min(1.0, max(-1.0, cos_phi))
    else:
        if abs(xt - base) > CANDIDATE_TOL:
            raise UnrealizableShape(f"xtilde must equal {base!r} when a heading is along the line")
        cos_phi = 1.0
    sin_phi = np.sqrt(max(0.0, 1.0 - cos_phi**2))
    x1 = xb1 * e12 + lat1 * np.array([0.0, 1.0, 0.0])
    x2 = -xb2 * e12 + lat2 * np.array([0.0, cos_phi, sin_phi])
    return x1, x2


# ---------------------------------------------------------------------------
# closed-loop dynamics


def check_common_assumptions(params):
    if not params.satisfies_common_assumptions:
        raise AssumptionViolation(
            "shape dynamics need mu_1 = mu_2 = mu_1b = mu_2b, a_1 = a_2 and a_1b = a_2b"
        )


def shape_rates(y, mu: float, lam: float, a: float, a0: float) -> np.ndarray:
    """Right-hand side of the eight-scalar closed-loop shape dynamics.

    ``y`` has shape ``(..., 8)``; the common gain ``mu`` and offsets ``a``
    (neighbor) and ``a0`` (beacon) are shared by both agents.
    """
    y = np.asarray(y, dtype=float)
    rho, r1b, r2b, x1, x2, x1b, x2b, xt = (y[..., k] for k in range(8))
    if np.any(np.minimum(np.minimum(rho, r1b), r2b) < SINGULAR_TOL):
        raise SingularConfiguration("shape distances below singularity tolerance")
    lm = 1.0 - lam
    c1 = (r1b**2 + rho**2 - r2b**2) / (2 * rho * r1b)
    c2 = (r2b**2 + rho**2 - r1b**2) / (2 * rho * r2b)
    g1 = mu * (x1 - a) + (1 - xt) / rho
    g2 = mu * (x2 - a) + (1 - xt) / rho
    b1 = lam * mu * (x1b - a0)
    b2 = lam * mu * (x2b - a0)

    d_rho = x1 + x2
    d_r1b = x1b
    d_r2b = x2b
    d_x1 = (
        lam / rho * (1 - xt - x1**2 - x1 * x2)
        - lm * mu * (x1 - a) * (1 - x1**2)
        - b1 * (c1 - x1b * x1)
    )
    d_x2 = (
        lam / rho * (1 - xt - x2**2 - x1 * x2)
        - lm * mu * (x2 - a) * (1 - x2**2)
        - b2 * (c2 - x2b * x2)
    )
    d_x1b = (
        -lm * g1 * (c1 - x1b * x1)
        - lm * x1 / rho * ((r2b / r1b) * x2b - (rho / r1b) * x2 - x1b * xt)
        - (b1 - 1 / r1b) * (1 - x1b**2)
    )
    d_x2b = (
        -lm * g2 * (c2 - x2b * x2)
        - lm * x2 / rho * ((r1b / r2b) * x1b - (rho / r2b) * x1 - x2b * xt)
        - (b2 - 1 / r2b) * (1 - x2b**2)
    )
    d_xt = (
        -b2 * (-(rho / r2b) * x1 + (r1b / r2b) * x1b - x2b * xt)
        - b1 * ((r2b / r1b) * x2b - (rho / r1b) * x2 - x1b * xt)
        - lm * (g1 * (-x2 - xt * x1) + x1 * (1 - xt**2) / rho)
        - lm * (x2 * (1 - xt**2) / rho + g2 * (-x1 - xt * x2))
    )
    return np.stack([d_rho, d_r1b, d_r2b, d_x1, d_x2, d_x1b, d_x2b, d_xt], axis=-1)


def shape_rhs(shape, params):
    """Closed-loop shape derivative; returns the same kind as ``shape``.

    Requires the common-gain / common-offset parameter assumptions
    (:class:`~beaconpursuit.errors.AssumptionViolation` otherwise).
    """
    check_common_assumptions(params)
    rates = shape_rates(_as_shape_array(shape), params.mu, params.lam, params.a, params.a0)
    if isinstance(shape, EffectiveShape):
        return EffectiveShape.from_array(rates)
    return rates


@dataclass
class ShapeTrajectory:
    """Samples of an effective-shape run; ``shapes`` is ``(n, ..., 8)``."""

    times: np.ndarray
    shapes: np.ndarray
    min_slack: np.ndarray
    xtilde_gap: np.ndarray
    dt: float
    termination: str = "completed"
    message: str = ""

    def __len__(self) -> int:
        return len(self.times)

    @property
    def completed(self) -> bool:
        return self.termination == "completed"

    def shape(self, k: int) -> EffectiveShape:
        return EffectiveShape.from_array(self.shapes[k])


def _xtilde_gap(y):
    plus, minus = xtilde_candidates_closed_form(y)
    xt = y[..., 7]
    return np.minimum(np.abs(xt - plus), np.abs(xt - minus))


def integrate_shape(shape0, params, t_max: float, dt: float = 1e-3) -> ShapeTrajectory:
    """RK4 on the eight shape scalars, monitoring the constraints every sample.

    The run stops with ``termination="constraint_escape"`` once any constraint
    slack falls below ``-ESCAPE_TOL``, and with ``"singular"`` on collocation.
    ``xtilde_gap`` records the distance of ``xtilde`` to its nearest admissible
    value (NaN where that value is undefined, e.g. collinear placements).
    """
    check_common_assumptions(params)
    if t_max < 0 or not dt > 0:
        raise ValueError("need t_max >= 0 and dt > 0")
    y = _as_shape_array(shape0).copy()
    report = constraint_residuals(y)
    if not report.realizable():
        raise UnrealizableShape(f"initial shape violates constraints (slack {np.min(report.min_slack):.3e})")
    n_steps = int(round(t_max / dt))
    batch = y.reshape(-1, 8)
    out = np.empty((n_steps + 1,) + batch.shape)
    done = shape_rk4(batch, params.mu, params.lam, params.a, params.a0, float(dt), n_steps, out)
    shapes = out[: done + 1].reshape((done + 1,) + y.shape)
    termination, message = "completed", ""
    flat = shapes.reshape(len(shapes), -1, 8)
    bad = np.nonzero(~np.all(np.isfinite(flat) & (flat[..., :3] > 0).all(axis=-1, keepdims=True), axis=(1, 2)))[0]
    if len(bad):  # a step overshot past a collision; keep the samples before it
        done = int(bad[0]) - 1
        shapes = shapes[: done + 1]
    if done < n_steps:
        termination = "singular"
        message = f"shape distances below singularity tolerance at t={(done + 1) * dt:.6g}"
    # constraints are checked on every sample; the run ends at the first escape
    with np.errstate(all="ignore"):
        slacks = constraint_residuals(shapes).min_slack
        escaped = np.nonzero(np.any((slacks < -ESCAPE_TOL).reshape(len(shapes), -1), axis=1))[0]
        if len(escaped):
            stop = int(escaped[0])
            shapes, slacks = shapes[: stop + 1], slacks[: stop + 1]
            termination = "constraint_escape"
            message = f"constraint slack {np.min(slacks[-1]):.3e} at t={stop * dt:.6g}"
        gaps = _xtilde_gap(shapes)
    times = np.arange(len(shapes)) * dt
    return ShapeTrajectory(
        times=times,
        shapes=shapes,
        min_slack=slacks,
        xtilde_gap=gaps,
        dt=dt,
        termination=termination,
        message=message,
    )
