"""Closed-form circling equilibria of the two-agent shape dynamics.

Three families are covered, all with common gain ``mu`` and common offsets
``a`` (toward the neighbor) and ``a0`` (toward the beacon):

* ``prop1``  (``a0 = 0``): exists iff ``a < 0``; separation
  ``rho = 2 lam / ((1 - lam) mu (-a))``, headings antiparallel, equal beacon
  distances whose common value is set by initial conditions.
* ``prop2a`` (``a0 != 0``): exists when ``(1 - lam) a + lam a0 < 0``; agents
  diametrically opposite on a circle centered on the beacon.
* ``prop2b`` (``a0 != 0``): exists when ``a0 < 0 < a`` and
  ``(1 - lam) a + lam a0 < 0``; parallel headings on two stacked circles.

These are sufficient, not necessary, conditions: the branch with
``xbar_1 != 0`` and unequal beacon distances is not solved here, but
:func:`residual_at` can be used to probe it numerically.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NullclineViolation, ParameterViolation, UnrealizableShape
from .shape import EffectiveShape, check_common_assumptions, constraint_residuals, shape_rates

NULLCLINE_TOL = 1e-12


@dataclass(frozen=True)
class EquilibriumSpec:
    """A classified circling equilibrium.

    ``kind`` is one of ``"prop1"``, ``"prop2a"``, ``"prop2b"``.
    ``rho_1b_free`` marks the one-parameter ``prop1`` family, where the beacon
    distance was supplied by the caller.
    """

    kind: str
    shape: EffectiveShape
    condition: str
    condition_holds: bool
    rho_1b_free: bool = False

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "shape": self.shape.as_dict(),
            "condition": self.condition,
            "condition_holds": self.condition_holds,
            "rho_1b_free": self.rho_1b_free,
        }


def _common(params):
    check_common_assumptions(params)
    return params.mu, params.lam, params.a, params.a0


def _symmetric_shape(rho, rho_b, xtilde) -> EffectiveShape:
    return EffectiveShape(rho, rho_b, rho_b, 0.0, 0.0, 0.0, 0.0, xtilde)


def prop1_condition(params) -> bool:
    return params.a0 == 0 and params.a < 0


def prop2a_condition(params) -> bool:
    mu, lam, a, a0 = _common(params)
    return a0 != 0 and (1 - lam) * a + lam * a0 < 0


def prop2b_condition(params) -> bool:
    mu, lam, a, a0 = _common(params)
    return a0 < 0 < a and (1 - lam) * a + lam * a0 < 0


def prop1_separation(params) -> float:
    """Equilibrium inter-agent distance for ``a0 = 0`` (meaningful only when ``a < 0``)."""
    mu, lam, a, _ = _common(params)
    return 2 * lam / ((1 - lam) * mu * (-a))


def prop1_equilibrium(params, rho_1b: float) -> EquilibriumSpec | None:
    """Circling equilibrium with no beacon offset, or ``None`` if ``a >= 0``.

    ``rho_1b`` is the (common) beacon distance, which the dynamics leave free;
    it must be at least half the equilibrium separation for the triangle to
    close.
    """
    mu, lam, a, a0 = _common(params)
    if a0 != 0:
        raise ParameterViolation(f"prop1 requires a0 = 0, got a0={a0!r}")
    if not a < 0:
        return None
    rho = prop1_separation(params)
    if rho_1b < rho / 2:
        raise UnrealizableShape(
            f"beacon distance {rho_1b!r} is smaller than half the separation {rho!r}"
        )
    return EquilibriumSpec("prop1", _symmetric_shape(rho, float(rho_1b), -1.0), "a < 0", True, rho_1b_free=True)


def prop2a_equilibrium(params) -> EquilibriumSpec | None:
    """Beacon-centered circling equilibrium, or ``None`` if ``(1-lam) a + lam a0 >= 0``."""
    mu, lam, a, a0 = _common(params)
    if a0 == 0:
        raise ParameterViolation("prop2a requires a0 != 0")
    combo = (1 - lam) * a + lam * a0
    if not combo < 0:
        return None
    rho_b = lam / (-mu * combo)
    return EquilibriumSpec("prop2a", _symmetric_shape(2 * rho_b, rho_b, -1.0), "(1-lam)*a + lam*a0 < 0", True)


def prop2b_equilibrium(params) -> EquilibriumSpec | None:
    """Stacked-circles equilibrium with parallel headings, or ``None``."""
    mu, lam, a, a0 = _common(params)
    if a0 == 0:
        raise ParameterViolation("prop2b requires a0 != 0")
    if not (a0 < 0 < a and (1 - lam) * a + lam * a0 < 0):
        return None
    denom = mu * ((1 - lam) ** 2 * a**2 - lam**2 * a0**2)
    rho_b = lam * a0 / denom
    rho = -2 * (1 - lam) * a / denom
    # strict triangle inequality: non-collinear placement
    if not ((1 - lam) / lam) * (-a / a0) < 1:
        return None
    spec = EquilibriumSpec(
        "prop2b", _symmetric_shape(rho, rho_b, 1.0), "a0 < 0 < a and (1-lam)*a + lam*a0 < 0", True
    )
    if not constraint_residuals(spec.shape).realizable():
        raise UnrealizableShape("prop2b shape violates the triangle constraints")
    return spec


def all_equilibria(params, rho_1b: float | None = None) -> list[EquilibriumSpec]:
    """Every closed-form equilibrium that exists for ``params``.

    For ``a0 = 0`` the free beacon distance defaults to the separation itself.
    """
    out = []
    if params.a0 == 0:
        if prop1_condition(params):
            rho = prop1_separation(params)
            out.append(prop1_equilibrium(params, rho if rho_1b is None else rho_1b))
        return out
    for calc in (prop2a_equilibrium, prop2b_equilibrium):
        spec = calc(params)
        if spec is not None:
            out.append(spec)
    return out


def existence_table(params) -> dict:
    """Which closed-form equilibria exist, as plain booleans."""
    _common(params)
    return {
        "prop1": prop1_condition(params),
        "prop2a": params.a0 != 0 and prop2a_condition(params),
        "prop2b": params.a0 != 0 and prop2b_condition(params),
    }


def nullcline_rhs(shape, params, form: str = "derived") -> np.ndarray:
    """Rates of ``(xbar_1, xbar_2, xbar_1b, xbar_2b, xtilde)`` on the distance nullcline.

    The nullcline is where the three distances are stationary, i.e.
    ``xbar_2 = -xbar_1`` and ``xbar_1b = xbar_2b = 0``; any other shape raises
    :class:`~beaconpursuit.errors.NullclineViolation`.

    The ``xtilde`` rate is ``-2 (1-lam) mu xbar_1^2 (1 - xtilde)
    + lam mu a0 rho xbar_1 (rho_2b - rho_1b) / (rho_1b rho_2b)``, which is what
    the full shape dynamics reduce to on the nullcline. ``form="printed"``
    instead uses the commonly quoted simplification
    ``-mu xbar_1 (2 (1-lam) xbar_1 + lam a0 rho (rho_2b - rho_1b) / (rho_1b rho_2b))``,
    which omits the ``(1 - xtilde)`` factor and flips the ``a0`` term; both
    forms vanish where ``xbar_1 = 0``. The other four rates are identical.
    """
    if form not in ("derived", "printed"):
        raise ValueError("form must be 'derived' or 'printed'")
    mu, lam, a, a0 = _common(params)
    y = shape.as_array() if isinstance(shape, EffectiveShape) else np.asarray(shape, dtype=float)
    rho, r1b, r2b, x1, x2, x1b, x2b, xt = (y[..., k] for k in range(8))
    if np.any(np.abs(x2 + x1) > NULLCLINE_TOL) or np.any(np.abs(x1b) > NULLCLINE_TOL) or np.any(
        np.abs(x2b) > NULLCLINE_TOL
    ):
        raise NullclineViolation("shape is off the nullcline xbar_2 = -xbar_1, xbar_1b = xbar_2b = 0")
    lm = 1 - lam
    c1 = (r1b**2 + rho**2 - r2b**2) / (2 * rho * r1b)
    c2 = (-r1b**2 + rho**2 + r2b**2) / (2 * rho * r2b)
    turn = lam / rho * (1 - xt)
    d_x1 = -lm * mu * (x1 - a) * (1 - x1**2) + lam * mu * a0 * c1 + turn
    d_x2 = -lm * mu * (-x1 - a) * (1 - x1**2) + lam * mu * a0 * c2 + turn
    d_x1b = -lm * (mu * (x1 - a) + (1 - xt) / rho) * c1 - lm * x1**2 / r1b + lam * mu * a0 + 1 / r1b
    d_x2b = -lm * (mu * (-x1 - a) + (1 - xt) / rho) * c2 - lm * x1**2 / r2b + lam * mu * a0 + 1 / r2b
    if form == "derived":
        d_xt = -2 * lm * mu * x1**2 * (1 - xt) + lam * mu * a0 * rho * x1 * (r2b - r1b) / (r1b * r2b)
    else:
        d_xt = -mu * x1 * (2 * lm * x1 + lam * a0 * rho * (r2b - r1b) / (r1b * r2b))
    return np.stack([d_x1, d_x2, d_x1b, d_x2b, d_xt], axis=-1)


def residual_at(shape, params) -> float:
    """Largest absolute component of the shape dynamics at ``shape`` (0 at equilibria)."""
    mu, lam, a, a0 = _common(params)
    y = shape.as_array() if isinstance(shape, EffectiveShape) else np.asarray(shape, dtype=float)
    return float(np.max(np.abs(shape_rates(y, mu, lam, a, a0))))


def extra_branch_residual(shape, params) -> float:
    """Residual of the unsolved ``xtilde``-nullcline branch.

    On that branch ``xbar_1 != 0``, ``rho_1b != rho_2b`` and
    ``lam a0 rho (rho_1b - rho_2b) / (rho_1b rho_2b) + 2 (1 - lam) xbar_1 (1 - xtilde) = 0``;
    this returns the left-hand side so callers can search for roots.
    """
    mu, lam, a, a0 = _common(params)
    y = shape.as_array() if isinstance(shape, EffectiveShape) else np.asarray(shape, dtype=float)
    rho, r1b, r2b, x1, xt = y[..., 0], y[..., 1], y[..., 2], y[..., 3], y[..., 7]
    return lam * a0 * rho * (r1b - r2b) / (r1b * r2b) + 2 * (1 - lam) * x1 * (1 - xt)
