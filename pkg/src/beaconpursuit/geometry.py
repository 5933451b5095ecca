"""Small fixed-dimension vector helpers, frame maintenance and triangle placement.

Everything here broadcasts over leading axes: a frame is an array of shape
``(..., 3, 3)`` whose rows are the ``x``, ``y`` and ``z`` axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFrame, TriangleInequalityViolated

# module-wide tolerances; override by assignment if needed
EQ_TOL = 1e-12
PRECHECK_TOL = 1e-12


def dot(a, b):
    """Dot product over the last axis."""
    return np.sum(np.multiply(a, b), axis=-1)


def norm(a):
    return np.sqrt(dot(a, a))


def cross(a, b):
    # hand-rolled: np.cross is slow for tiny arrays in the integrator loop
    a = np.asarray(a)
    b = np.asarray(b)
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def unit(a):
    a = np.asarray(a, dtype=float)
    return a / norm(a)[..., None]


@dataclass(frozen=True)
class Frame:
    """Orthonormal right-handed triad ``[x, y, z]``."""

    x_axis: np.ndarray
    y_axis: np.ndarray
    z_axis: np.ndarray

    @classmethod
    def identity(cls) -> "Frame":
        return cls.from_array(np.eye(3))

    @classmethod
    def from_array(cls, axes) -> "Frame":
        axes = np.asarray(axes, dtype=float)
        return cls(axes[..., 0, :].copy(), axes[..., 1, :].copy(), axes[..., 2, :].copy())

    def as_array(self) -> np.ndarray:
        return np.stack([self.x_axis, self.y_axis, self.z_axis], axis=-2)

    def orthonormality_error(self) -> float:
        return orthonormality_error(self.as_array())

    def renormalized(self) -> "Frame":
        return Frame.from_array(renormalize(self.as_array()))


def renormalize(frame):
    """Gram-Schmidt a frame, keeping the direction of ``x`` exactly.

    ``y`` is corrected within ``span{x, y}`` and ``z`` is rebuilt as ``x × y``.
    Accepts a :class:`Frame` or an array of shape ``(..., 3, 3)`` and returns
    the same kind.
    """
    if isinstance(frame, Frame):
        return frame.renormalized()
    axes = np.asarray(frame, dtype=float)
    gram = axes @ np.swapaxes(axes, -1, -2)
    if np.any(np.linalg.det(gram) <= PRECHECK_TOL):
        raise DegenerateFrame("frame axes are numerically linearly dependent")
    x = unit(axes[..., 0, :])
    y = axes[..., 1, :]
    y = unit(y - dot(y, x)[..., None] * x)
    z = cross(x, y)
    return np.stack([x, y, z], axis=-2)


def orthonormality_error(axes) -> float:
    """Largest deviation of ``axes @ axes.T`` from the identity, plus handedness."""
    axes = np.asarray(axes, dtype=float)
    gram = axes @ np.swapaxes(axes, -1, -2)
    err = np.max(np.abs(gram - np.eye(3)), initial=0.0)
    hand = np.max(np.abs(cross(axes[..., 0, :], axes[..., 1, :]) - axes[..., 2, :]), initial=0.0)
    return float(max(err, hand))


def complete_frame(heading):
    """Deterministic right-handed frame whose ``x`` axis is ``heading``.

    ``y`` is the normalized component of whichever coordinate axis is least
    aligned with ``heading`` (ties broken by lowest index).
    """
    x = unit(heading)
    idx = np.argmin(np.abs(x), axis=-1)
    helper = np.eye(3)[idx]
    y = unit(helper - dot(helper, x)[..., None] * x)
    z = cross(x, y)
    return np.stack([x, y, z], axis=-2)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about ``axis`` by ``angle`` radians."""
    k = unit(np.asarray(axis, dtype=float))
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)


def triangle_from_sides(rho_1b: float, rho_2b: float, rho: float):
    """Place agents 1 and 2 in the ``z = 0`` plane with the beacon at the origin.

    Agent 1 sits on the positive ``x`` axis; agent 2 has non-negative ``y``.
    Returns ``(r1, r2)`` with ``|r1| = rho_1b``, ``|r2| = rho_2b`` and
    ``|r1 - r2| = rho``.
    """
    rho_1b, rho_2b, rho = float(rho_1b), float(rho_2b), float(rho)
    if min(rho_1b, rho_2b, rho) <= 0.0:
        raise TriangleInequalityViolated("all sides must be positive")
    scale = max(rho_1b, rho_2b, rho)
    if rho > rho_1b + rho_2b + PRECHECK_TOL * scale or rho < abs(rho_1b - rho_2b) - PRECHECK_TOL * scale:
        raise TriangleInequalityViolated(
            f"sides ({rho_1b}, {rho_2b}, {rho}) violate |rho_1b - rho_2b| <= rho <= rho_1b + rho_2b"
        )
    # projection of r12 on the r1 direction, in factored form
    along = (rho**2 + (rho_1b - rho_2b) * (rho_1b + rho_2b)) / (2.0 * rho_1b)
    height = 2.0 * _triangle_area(rho_1b, rho_2b, rho) / rho_1b
    r1 = np.array([rho_1b, 0.0, 0.0])
    r2 = np.array([rho_1b - along, height, 0.0])
    return r1, r2


def _triangle_area(a: float, b: float, c: float) -> float:
    # Kahan's cancellation-free Heron formula; clipped at 0 for degenerate input
    a, b, c = sorted((a, b, c), reverse=True)
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * np.sqrt(max(prod, 0.0))
