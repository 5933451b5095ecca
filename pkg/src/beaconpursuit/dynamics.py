"""Full configuration-space dynamics: two unit-speed self-steering particles.

Each agent obeys

    r' = x,   x' = u y + v z,   y' = -u x,   z' = -v x

with the beacon fixed. Integration is classical fixed-step RK4 with the
controller evaluated at every stage and a Gram-Schmidt frame correction after
every step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SingularConfiguration
from .geometry import orthonormality_error, renormalize
from .shape import shape_array
from .state import WorldState
from .steering import ControlParams, steering_inputs

log = logging.getLogger(__name__)

DEFAULT_DT = 1e-3

Controller = Callable[[WorldState], np.ndarray]


def state_derivative(state: WorldState, inputs) -> WorldState:
    """Time derivative of ``state`` under per-agent curvatures.

    ``inputs`` has shape ``(..., 2, 2)``: ``inputs[..., i, :] = (u_i, v_i)``.
    The result is returned as a :class:`WorldState` holding rates.
    """
    inputs = np.asarray(inputs, dtype=float)
    u = inputs[..., 0][..., None]
    v = inputs[..., 1][..., None]
    x = state.frames[..., :, 0, :]
    y = state.frames[..., :, 1, :]
    z = state.frames[..., :, 2, :]
    dframes = np.stack([u * y + v * z, -u * x, -v * x], axis=-2)
    return WorldState(x.copy(), dframes, np.zeros_like(state.beacon))


def closed_loop(params: ControlParams) -> Controller:
    """Controller evaluating the beacon-referenced CB law for both agents."""

    def controller(state: WorldState) -> np.ndarray:
        return steering_inputs(state, params)

    return controller


def _axpy(state: WorldState, h: float, rate: WorldState) -> WorldState:
    return WorldState(state.positions + h * rate.positions, state.frames + h * rate.frames, state.beacon)


def step(state: WorldState, controller, dt: float) -> WorldState:
    """Advance one RK4 step, then renormalize both frames.

    ``controller`` is either a :class:`ControlParams` or a callable mapping a
    state to a ``(..., 2, 2)`` array of curvatures.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if isinstance(controller, ControlParams):
        controller = closed_loop(controller)
    k1 = state_derivative(state, controller(state))
    s = _axpy(state, 0.5 * dt, k1)
    k2 = state_derivative(s, controller(s))
    s = _axpy(state, 0.5 * dt, k2)
    k3 = state_derivative(s, controller(s))
    s = _axpy(state, dt, k3)
    k4 = state_derivative(s, controller(s))
    c = dt / 6.0
    positions = state.positions + c * (k1.positions + 2 * k2.positions + 2 * k3.positions + k4.positions)
    frames = state.frames + c * (k1.frames + 2 * k2.frames + 2 * k3.frames + k4.frames)
    return WorldState(positions, renormalize(frames), state.beacon)


@dataclass
class TrajectoryRecord:
    """Samples of a full-dynamics run, time on the first axis.

    ``positions``: ``(n, ..., 2, 3)``; ``frames``: ``(n, ..., 2, 3, 3)``;
    ``inputs``: ``(n, ..., 2, 2)``; ``shapes``: ``(n, ..., 8)`` in the order
    of :data:`beaconpursuit.shape.SHAPE_FIELDS`.
    """

    times: np.ndarray
    positions: np.ndarray
    frames: np.ndarray
    beacon: np.ndarray
    inputs: np.ndarray
    shapes: np.ndarray
    dt: float
    params: ControlParams | None = None
    termination: str = "completed"
    message: str = ""
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def completed(self) -> bool:
        return self.termination == "completed"

    def state(self, k: int) -> WorldState:
        return WorldState(self.positions[k], self.frames[k], self.beacon)

    @property
    def final_state(self) -> WorldState:
        return self.state(-1)

    def frame_error(self) -> float:
        """Max orthonormality / unit-speed violation over all samples."""
        return orthonormality_error(self.frames)


def integrate(initial: WorldState, params: ControlParams, t_max: float, dt: float = DEFAULT_DT,
              controller: Controller | None = None, sample_every: int = 1) -> TrajectoryRecord:
    """Integrate the closed loop from ``initial``.

    ``round(t_max / dt)`` steps are taken and every ``sample_every``-th one is
    recorded together with the steering inputs and effective shape. A singular
    configuration (two bodies closer than the singularity tolerance) ends the
    run early; the record keeps the samples up to that point and the reason.

    The closed loop runs in a compiled kernel; passing an explicit
    ``controller`` callable selects the pure-numpy :func:`step` instead.
    """
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    if not dt > 0:
        raise ValueError("dt must be positive")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    n_steps = int(round(t_max / dt))
    if controller is None:
        times, positions, frames, inputs, done = _run_compiled(initial, params, n_steps, dt, sample_every)
    else:
        times, positions, frames, inputs, done = _run_numpy(initial, controller, n_steps, dt, sample_every)
    termination, message = "completed", ""
    if done < n_steps or len(times) == 0:
        termination = "singular"
        message = f"singular configuration after {done} of {n_steps} steps (t={done * dt:.6g})"
        log.info("run terminated: %s", message)
    if len(times) == 0:
        batch = initial.batch_shape
        return TrajectoryRecord(
            times=np.zeros(1), positions=initial.positions[None], frames=initial.frames[None],
            beacon=initial.beacon, inputs=np.full((1,) + batch + (2, 2), np.nan),
            shapes=np.full((1,) + batch + (8,), np.nan), dt=dt, params=params,
            termination=termination, message="initial configuration is singular",
        )
    shapes = shape_array(WorldState(positions, frames, np.broadcast_to(initial.beacon, positions.shape[:-2] + (3,))))
    return TrajectoryRecord(
        times=times, positions=positions, frames=frames, beacon=initial.beacon,
        inputs=inputs, shapes=shapes, dt=dt, params=params,
        termination=termination, message=message,
    )


def _run_compiled(initial: WorldState, params: ControlParams, n_steps: int, dt: float, stride: int):
    from . import _kernels

    batch = initial.batch_shape
    packed = np.concatenate([initial.positions[..., None, :], initial.frames], axis=-2)
    packed = np.ascontiguousarray(packed.reshape((-1, 2, 4, 3)))
    nb = packed.shape[0]
    beacon = np.ascontiguousarray(np.broadcast_to(initial.beacon, batch + (3,)).reshape(nb, 3))
    m_max = n_steps // stride + 1
    states = np.empty((m_max, nb, 2, 4, 3))
    inputs = np.empty((m_max, nb, 2, 2))
    done = np.zeros(1, dtype=np.int64)
    m = _kernels.run(packed, beacon, params._mu, params._mu_b, params._a, params._a_b,
                     float(params.lam), float(dt), n_steps, stride, states, inputs, done)
    states = states[:m].reshape((m,) + batch + (2, 4, 3))
    inputs = inputs[:m].reshape((m,) + batch + (2, 2))
    times = np.arange(m) * (stride * dt)
    return times, states[..., 0, :], states[..., 1:, :], inputs, int(done[0])


def _run_numpy(initial: WorldState, controller, n_steps: int, dt: float, stride: int):
    times, positions, frames, inputs = [], [], [], []
    state, done = initial, 0
    try:
        u = controller(state)
        shape_array(state)
        times.append(0.0)
        positions.append(state.positions)
        frames.append(state.frames)
        inputs.append(u)
        for k in range(1, n_steps + 1):
            state = step(state, controller, dt)
            u = controller(state)
            shape_array(state)
            done = k
            if k % stride == 0:
                times.append(k * dt)
                positions.append(state.positions)
                frames.append(state.frames)
                inputs.append(u)
    except SingularConfiguration:
        pass
    else:
        done = n_steps
    return np.asarray(times), np.asarray(positions), np.asarray(frames), np.asarray(inputs), done
