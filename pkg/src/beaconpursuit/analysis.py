"""Trajectory post-processing: circle fits, circling detection, representation checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateData, InsufficientData
from .shape import SHAPE_FIELDS, EffectiveShape, integrate_shape

DEFAULT_WINDOW = 20.0
DEFAULT_TOL = 1e-3


@dataclass(frozen=True)
class CircleFit:
    center: np.ndarray
    normal: np.ndarray
    radius: float
    rms: float

    def as_dict(self) -> dict:
        return {
            "center": [float(v) for v in self.center],
            "normal": [float(v) for v in self.normal],
            "radius": float(self.radius),
            "rms": float(self.rms),
        }


def fit_circle_3d(points) -> CircleFit:
    """Fit a circle to 3-D points: least-squares plane, then algebraic circle in it.

    ``rms`` is the root-mean-square orthogonal distance of the points to the
    fitted circle. The normal is oriented so its largest component is positive.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 4:
        raise DegenerateData("need at least 4 points of dimension 3")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, sv, vt = np.linalg.svd(centered, full_matrices=False)
    if sv[0] == 0 or sv[1] <= 1e-10 * sv[0]:
        raise DegenerateData("points are collinear (or coincident)")
    u_ax, v_ax, normal = vt[0], vt[1], vt[2]
    if normal[np.argmax(np.abs(normal))] < 0:
        normal = -normal
    a = centered @ u_ax
    b = centered @ v_ax
    # Kasa fit: a^2 + b^2 = 2 a ca + 2 b cb + c
    design = np.column_stack([2 * a, 2 * b, np.ones_like(a)])
    (ca, cb, c), *_ = np.linalg.lstsq(design, a**2 + b**2, rcond=None)
    radius = float(np.sqrt(c + ca**2 + cb**2))
    center = centroid + ca * u_ax + cb * v_ax
    rel = pts - center
    height = rel @ normal
    inplane = np.sqrt(np.maximum(np.sum(rel**2, axis=1) - height**2, 0.0))
    rms = float(np.sqrt(np.mean(height**2 + (inplane - radius) ** 2)))
    return CircleFit(center, normal, radius, rms)


@dataclass
class CirclingReport:
    """Convergence verdict and circle geometry over the trailing window.

    ``converged`` is judged on shape variables only; ``geometry_ok`` records
    whether the fitted circles additionally share an axis through the beacon.

    ``common_axis_deviation`` is the distance from the beacon to the common
    axis (through the midpoint of the two circle centers along the mean
    normal); ``plane_separation`` is the axial distance between the two
    circle planes; ``normal_misalignment`` is ``|n1 x n2|``.
    """

    converged: bool
    geometry_ok: bool
    circles: list
    common_axis_deviation: float
    plane_separation: float
    normal_misalignment: float
    terminal_shape: EffectiveShape
    window: float
    tol: float
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "geometry_ok": self.geometry_ok,
            "circles": [c.as_dict() if c is not None else None for c in self.circles],
            "common_axis_deviation": _f(self.common_axis_deviation),
            "plane_separation": _f(self.plane_separation),
            "normal_misalignment": _f(self.normal_misalignment),
            "terminal_shape": self.terminal_shape.as_dict(),
            "window": self.window,
            "tol": self.tol,
            "diagnostics": {k: _f(v) for k, v in self.diagnostics.items()},
        }


def _f(v):
    v = float(v)
    return v if np.isfinite(v) else None


def detect_circling(trajectory, window: float = DEFAULT_WINDOW, tol: float = DEFAULT_TOL) -> CirclingReport:
    """Decide whether a full-dynamics run has settled on a circling equilibrium.

    Convergence is judged on the shape over the trailing ``window`` seconds:
    the beacon projections and ``xbar_1 + xbar_2`` must stay below ``tol`` in
    magnitude, and every shape scalar must drift by less than ``tol``
    (relative for the distances). Circles are always fitted to each agent's
    path; ``geometry_ok`` holds when the fitted normals are parallel within
    ``tol`` and the common axis passes within ``tol`` times the beacon
    distance of the beacon. All measurements are reported either way.
    """
    times = np.asarray(trajectory.times)
    if trajectory.positions.ndim != 3:
        raise ValueError("detect_circling expects an unbatched trajectory")
    if len(times) < 4 or times[-1] - times[0] < window:
        raise InsufficientData(f"trajectory spans {times[-1] - times[0]:.6g} s < window {window:.6g} s")
    sel = times >= times[-1] - window - 1e-9 * max(1.0, window)
    shapes = np.asarray(trajectory.shapes)[sel]
    terminal = EffectiveShape.from_array(shapes[-1])

    beacon_proj = float(np.max(np.abs(shapes[:, 5:7])))
    pair_sum = float(np.max(np.abs(shapes[:, 3] + shapes[:, 4])))
    span = np.ptp(shapes, axis=0)
    scale = np.ones(8)
    scale[:3] = np.maximum(np.abs(shapes[-1, :3]), 1e-12)
    drift = float(np.max(span / scale))
    shape_ok = beacon_proj < tol and pair_sum < tol and drift < tol

    positions = np.asarray(trajectory.positions)[sel]
    circles = []
    for i in range(2):
        try:
            circles.append(fit_circle_3d(positions[:, i, :]))
        except DegenerateData:
            circles.append(None)
    beacon = np.asarray(trajectory.beacon, dtype=float)
    axis_dev = plane_sep = misalign = np.nan
    geometry_ok = False
    if all(c is not None for c in circles):
        n1, n2 = circles[0].normal, circles[1].normal
        n2 = n2 if n1 @ n2 >= 0 else -n2
        misalign = float(np.linalg.norm(np.cross(n1, n2)))
        axis = (n1 + n2) / np.linalg.norm(n1 + n2)
        mid = 0.5 * (circles[0].center + circles[1].center)
        off = beacon - mid
        axis_dev = float(np.linalg.norm(off - (off @ axis) * axis))
        plane_sep = float(abs((circles[0].center - circles[1].center) @ axis))
        ref = max(float(terminal.rho_1b), float(terminal.rho_2b))
        geometry_ok = misalign < tol and axis_dev < tol * ref
    return CirclingReport(
        converged=bool(shape_ok),
        geometry_ok=bool(geometry_ok),
        circles=circles,
        common_axis_deviation=axis_dev,
        plane_separation=plane_sep,
        normal_misalignment=misalign,
        terminal_shape=terminal,
        window=window,
        tol=tol,
        diagnostics={"beacon_projection": beacon_proj, "pair_sum": pair_sum, "shape_drift": drift},
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Deviation between full-space-extracted and directly integrated shapes."""

    rms_per_shape_variable: np.ndarray
    max_abs_deviation: float
    horizon: float
    termination: str = "completed"

    def as_dict(self) -> dict:
        return {
            "rms_per_shape_variable": dict(zip(SHAPE_FIELDS, (float(v) for v in self.rms_per_shape_variable))),
            "max_abs_deviation": float(self.max_abs_deviation),
            "horizon": float(self.horizon),
            "termination": self.termination,
        }


def compare_representations(full, params) -> ComparisonReport:
    """Integrate the shape dynamics alongside a full run and measure the gap.

    The shape run starts from the first extracted shape and uses the full
    run's step size. For a batched ``full`` record, RMS values are taken over
    time and the worst batch member is reported per variable.
    """
    if not full.completed:
        raise ValueError(f"full trajectory did not complete: {full.message}")
    extracted = np.asarray(full.shapes)
    stride = int(round((full.times[1] - full.times[0]) / full.dt)) if len(full.times) > 1 else 1
    if stride != 1:
        raise ValueError("compare_representations needs a record sampled at every step")
    horizon = float(full.times[-1])
    reduced = integrate_shape(extracted[0], params, horizon, full.dt)
    n = min(len(reduced.shapes), len(extracted))
    diff = reduced.shapes[:n] - extracted[:n]
    rms = np.sqrt(np.mean(diff**2, axis=0))
    rms = rms.reshape(-1, 8).max(axis=0)
    return ComparisonReport(rms, float(np.max(np.abs(diff), initial=0.0)), horizon, reduced.termination)
