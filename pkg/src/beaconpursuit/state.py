"""Configuration-space state of the two-agent-plus-beacon system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Frame, complete_frame, norm, orthonormality_error, renormalize

# separations below this make the pursuit laws undefined
SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class AgentState:
    """Position and natural Frenet frame of one unit-speed agent."""

    r: np.ndarray
    frame: Frame

    @property
    def heading(self) -> np.ndarray:
        return self.frame.x_axis


@dataclass(frozen=True)
class WorldState:
    """Both agents plus the (fixed) beacon.

    Stored as arrays so that a batch of independent systems can be carried
    along leading axes:

    * ``positions``: ``(..., 2, 3)``
    * ``frames``: ``(..., 2, 3, 3)``, rows ``x, y, z`` of each agent's frame
    * ``beacon``: ``(..., 3)``
    """

    positions: np.ndarray
    frames: np.ndarray
    beacon: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "frames", np.asarray(self.frames, dtype=float))
        object.__setattr__(self, "beacon", np.asarray(self.beacon, dtype=float))
        if self.positions.shape[-2:] != (2, 3) or self.frames.shape[-3:] != (2, 3, 3):
            raise ValueError("positions must be (..., 2, 3) and frames (..., 2, 3, 3)")

    @classmethod
    def from_agents(cls, agent1: AgentState, agent2: AgentState, beacon=(0.0, 0.0, 0.0)) -> "WorldState":
        positions = np.stack([agent1.r, agent2.r], axis=-2)
        frames = np.stack([agent1.frame.as_array(), agent2.frame.as_array()], axis=-3)
        return cls(positions, frames, np.asarray(beacon, dtype=float))

    @classmethod
    def from_headings(cls, r1, x1, r2, x2, beacon=(0.0, 0.0, 0.0)) -> "WorldState":
        """Build a state from positions and headings; frames are completed deterministically."""
        positions = np.stack([np.asarray(r1, float), np.asarray(r2, float)], axis=-2)
        frames = np.stack([complete_frame(x1), complete_frame(x2)], axis=-3)
        return cls(positions, frames, np.asarray(beacon, dtype=float))

    @property
    def batch_shape(self) -> tuple:
        return self.positions.shape[:-2]

    @property
    def agent1(self) -> AgentState:
        return AgentState(self.positions[..., 0, :], Frame.from_array(self.frames[..., 0, :, :]))

    @property
    def agent2(self) -> AgentState:
        return AgentState(self.positions[..., 1, :], Frame.from_array(self.frames[..., 1, :, :]))

    @property
    def headings(self) -> np.ndarray:
        return self.frames[..., :, 0, :]

    def separations(self):
        """Return ``(rho, rho_1b, rho_2b)``."""
        rho = norm(self.positions[..., 0, :] - self.positions[..., 1, :])
        rho_b = norm(self.positions - self.beacon[..., None, :])
        return rho, rho_b[..., 0], rho_b[..., 1]

    def min_separation(self) -> float:
        return float(min(np.min(s) for s in self.separations()))

    def renormalized(self) -> "WorldState":
        return WorldState(self.positions, renormalize(self.frames), self.beacon)

    def frame_error(self) -> float:
        """Max orthonormality/unit-speed violation over both frames."""
        return orthonormality_error(self.frames)

    def transformed(self, rotation, translation=(0.0, 0.0, 0.0)) -> "WorldState":
        """Apply the rigid motion ``p -> R p + t`` to positions and frame axes."""
        rot = np.asarray(rotation, dtype=float)
        t = np.asarray(translation, dtype=float)
        return WorldState(
            self.positions @ rot.T + t,
            self.frames @ rot.T,
            self.beacon @ rot.T + t,
        )

    def as_vector(self) -> np.ndarray:
        """Flatten to ``r1, x1, y1, z1, r2, x2, y2, z2, beacon`` (27 numbers)."""
        per_agent = np.concatenate([self.positions[..., :, None, :], self.frames], axis=-2)
        flat = per_agent.reshape(self.batch_shape + (24,))
        return np.concatenate([flat, self.beacon], axis=-1)

    @classmethod
    def from_vector(cls, vec) -> "WorldState":
        vec = np.asarray(vec, dtype=float)
        per_agent = vec[..., :24].reshape(vec.shape[:-1] + (2, 4, 3))
        return cls(per_agent[..., 0, :], per_agent[..., 1:, :], vec[..., 24:27])

