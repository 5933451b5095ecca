"""Beacon-referenced constant-bearing steering law.

The law is a convex combination ``(1 - lam) * CB + lam * beacon`` of a
constant-bearing term toward the neighbor and a bearing term toward the
beacon. Agent indices are 1 and 2; agent 2's neighbor is agent 1.

All evaluations are vectorized: the internal helpers compute both agents at
once and broadcast over any leading batch axes of the :class:`WorldState`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ParameterViolation, SingularConfiguration
from .geometry import cross, dot, norm
from .state import SINGULAR_TOL, WorldState


@dataclass(frozen=True)
class ControlParams:
    """Gains and bearing offsets for both agents.

    ``lam`` weights the beacon term and must lie strictly inside ``(0, 1)``;
    gains are positive and every offset lies in ``[-1, 1]``. Validation runs
    once, at construction.
    """

    mu_1: float
    mu_2: float
    mu_1b: float
    mu_2b: float
    lam: float
    a_1: float
    a_2: float
    a_1b: float
    a_2b: float
    # cached per-agent arrays for the integrator hot loop
    _mu: np.ndarray = field(init=False, repr=False, compare=False)
    _mu_b: np.ndarray = field(init=False, repr=False, compare=False)
    _a: np.ndarray = field(init=False, repr=False, compare=False)
    _a_b: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = {
            "mu_1": self.mu_1, "mu_2": self.mu_2, "mu_1b": self.mu_1b, "mu_2b": self.mu_2b,
            "lambda": self.lam, "a_1": self.a_1, "a_2": self.a_2, "a_1b": self.a_1b, "a_2b": self.a_2b,
        }
        for name, value in values.items():
            if not np.isfinite(value):
                raise ParameterViolation(f"{name} must be finite, got {value!r}")
        for name in ("mu_1", "mu_2", "mu_1b", "mu_2b"):
            if not values[name] > 0:
                raise ParameterViolation(f"{name} must be strictly positive, got {values[name]!r}")
        if not 0.0 < self.lam < 1.0:
            raise ParameterViolation(f"lambda must lie strictly in (0,1), got {self.lam!r}")
        for name in ("a_1", "a_2", "a_1b", "a_2b"):
            if not -1.0 <= values[name] <= 1.0:
                raise ParameterViolation(f"{name} must lie in [-1,1], got {values[name]!r}")
        object.__setattr__(self, "_mu", np.array([self.mu_1, self.mu_2], dtype=float))
        object.__setattr__(self, "_mu_b", np.array([self.mu_1b, self.mu_2b], dtype=float))
        object.__setattr__(self, "_a", np.array([self.a_1, self.a_2], dtype=float))
        object.__setattr__(self, "_a_b", np.array([self.a_1b, self.a_2b], dtype=float))

    @classmethod
    def common(cls, mu: float, lam: float, a: float, a0: float) -> "ControlParams":
        """Parameters with one gain and shared offsets for both agents."""
        return cls(mu, mu, mu, mu, lam, a, a, a0, a0)

    @property
    def satisfies_common_assumptions(self) -> bool:
        return (
            self.mu_1 == self.mu_2 == self.mu_1b == self.mu_2b
            and self.a_1 == self.a_2
            and self.a_1b == self.a_2b
        )

    @property
    def mu(self) -> float:
        return self.mu_1

    @property
    def a(self) -> float:
        return self.a_1

    @property
    def a0(self) -> float:
        return self.a_1b

    def as_dict(self) -> dict:
        return {
            "mu_1": self.mu_1, "mu_2": self.mu_2, "mu_1b": self.mu_1b, "mu_2b": self.mu_2b,
            "lambda": self.lam, "a_1": self.a_1, "a_2": self.a_2, "a_1b": self.a_1b, "a_2b": self.a_2b,
        }


class SteeringInput(NamedTuple):
    """Natural curvatures ``(u, v)`` of one agent."""

    u: float
    v: float


@dataclass(frozen=True)
class FullShapeVars:
    """Scalar dot products and distances describing the relative geometry.

    Per-agent fields carry the agent index on the last axis (index 0 is
    agent 1). ``xbar``, ``ybar``, ``zbar`` project agent ``i``'s frame on the
    unit vector ``r_{i,i+1} / rho``; the ``*_b`` fields project it on
    ``r_{ib} / rho_ib``.
    """

    xbar: np.ndarray
    ybar: np.ndarray
    zbar: np.ndarray
    xbar_b: np.ndarray
    ybar_b: np.ndarray
    zbar_b: np.ndarray
    rho_b: np.ndarray
    rho: np.ndarray
    xtilde: np.ndarray


def _check_separation(dist, what: str):
    if np.any(dist < SINGULAR_TOL) or not np.all(np.isfinite(dist)):
        raise SingularConfiguration(f"{what} below {SINGULAR_TOL:g}: min {np.min(dist):.3e}")


def _neighbor_geometry(state: WorldState):
    pos = state.positions
    rel = pos - pos[..., ::-1, :]
    rho = norm(rel)
    _check_separation(rho, "inter-agent distance rho")
    return rel / rho[..., None], rho


def _beacon_geometry(state: WorldState):
    rel = state.positions - state.beacon[..., None, :]
    rho_b = norm(rel)
    _check_separation(rho_b, "agent-beacon distance")
    return rel / rho_b[..., None], rho_b


def full_shape_vars(state: WorldState) -> FullShapeVars:
    e, rho = _neighbor_geometry(state)
    eb, rho_b = _beacon_geometry(state)
    x, y, z = (state.frames[..., :, k, :] for k in range(3))
    return FullShapeVars(
        xbar=dot(x, e), ybar=dot(y, e), zbar=dot(z, e),
        xbar_b=dot(x, eb), ybar_b=dot(y, eb), zbar_b=dot(z, eb),
        rho_b=rho_b, rho=rho[..., 0],
        xtilde=dot(x[..., 0, :], x[..., 1, :]),
    )


def _cb_inputs(state: WorldState, params: ControlParams, e=None, rho=None):
    if e is None:
        e, rho = _neighbor_geometry(state)
    x, y, z = (state.frames[..., :, k, :] for k in range(3))
    # unit speed: d/dt r_{i,i+1} = x_i - x_{i+1}
    rdot = x - x[..., ::-1, :]
    w = cross(rdot, e)
    xbar = dot(x, e)
    gain = -params._mu * (xbar - params._a)
    u = gain * dot(y, e) - dot(z, w) / rho
    v = gain * dot(z, e) + dot(y, w) / rho
    return u, v


def _beacon_inputs(state: WorldState, params: ControlParams, eb=None):
    if eb is None:
        eb, _ = _beacon_geometry(state)
    x, y, z = (state.frames[..., :, k, :] for k in range(3))
    gain = -params._mu_b * (dot(x, eb) - params._a_b)
    return gain * dot(y, eb), gain * dot(z, eb)


def steering_inputs(state: WorldState, params: ControlParams) -> np.ndarray:
    """Closed-loop ``(u, v)`` for both agents, shape ``(..., 2, 2)``.

    ``out[..., i, 0]`` is ``u`` of agent ``i + 1`` and ``out[..., i, 1]`` its ``v``.
    """
    e, rho = _neighbor_geometry(state)
    eb, _ = _beacon_geometry(state)
    u_cb, v_cb = _cb_inputs(state, params, e, rho)
    u_b, v_b = _beacon_inputs(state, params, eb)
    lam = params.lam
    return np.stack([(1 - lam) * u_cb + lam * u_b, (1 - lam) * v_cb + lam * v_b], axis=-1)


def _agent(i: int) -> int:
    if i not in (1, 2):
        raise ValueError(f"agent index must be 1 or 2, got {i!r}")
    return i - 1


def cb_component(i: int, state: WorldState, params: ControlParams) -> SteeringInput:
    """Constant-bearing pursuit term of agent ``i`` toward its neighbor."""
    k = _agent(i)
    u, v = _cb_inputs(state, params)
    return SteeringInput(u[..., k], v[..., k])


def beacon_component(i: int, state: WorldState, params: ControlParams) -> SteeringInput:
    """Bearing-offset term of agent ``i`` toward the beacon."""
    k = _agent(i)
    u, v = _beacon_inputs(state, params)
    return SteeringInput(u[..., k], v[..., k])


def control(i: int, state: WorldState, params: ControlParams) -> SteeringInput:
    """Convex combination of :func:`cb_component` and :func:`beacon_component`."""
    cb = cb_component(i, state, params)
    b = beacon_component(i, state, params)
    lam = params.lam
    return SteeringInput((1 - lam) * cb.u + lam * b.u, (1 - lam) * cb.v + lam * b.v)


def lateral_acceleration(state: WorldState, params: ControlParams) -> np.ndarray:
    """Closed-loop ``dx_i/dt`` for both agents, shape ``(..., 2, 3)``.

    Uses the expanded vector form that only involves positions and headings,
    so it is independent of the ``y``/``z`` axes.
    """
    e, rho = _neighbor_geometry(state)
    eb, _ = _beacon_geometry(state)
    x = state.headings
    lam = params.lam
    xbar = dot(x, e)[..., None]
    xbar_b = dot(x, eb)[..., None]
    rdot = x - x[..., ::-1, :]
    cb = -params._mu[:, None] * (xbar - params._a[:, None]) * (e - xbar * x)
    beacon = -params._mu_b[:, None] * (xbar_b - params._a_b[:, None]) * (eb - xbar_b * x)
    rotation = cross(x, cross(rdot, e)) / rho[..., None]
    return (1 - lam) * (cb + rotation) + lam * beacon
