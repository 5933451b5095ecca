"""Scenario execution: single runs with summaries, and parameter sweeps.

Run summary JSON (``summary.json``, schema ``beaconpursuit.run_summary/1``)::

    {
      "schema": "beaconpursuit.run_summary/1",
      "config": {...},                       # RunConfig.as_dict()
      "termination": {"reason": "completed" | "singular", "message": str,
                      "t_end": float, "samples": int},
      "invariants": {"max_frame_error": float, "max_unit_speed_error": float,
                     "tolerance": 1e-9, "passed": bool},
      "terminal_shape": {rho, rho_1b, ..., xtilde},
      "circling": CirclingReport.as_dict() | null,
      "circling_error": str | null,          # e.g. run shorter than the window
      "equilibria": [{"kind", "predicted": {...}, "max_abs_distance",
                      "max_rel_distance", "approaches"}],
      "files": [str, ...]
    }

``max_rel_distance`` measures the three distances relatively and the five
cosines absolutely; ``approaches`` is ``max_rel_distance <= 0.1``.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import equilibria as eq
from .analysis import detect_circling
from .config import RunConfig, initial_state, perturb_state
from .dynamics import TrajectoryRecord, integrate
from .errors import BeaconPursuitError, OutputError
from .io import write_json, write_shape_csv, write_trajectory_csv
from .rng import Xoshiro256
from .shape import EffectiveShape, embed_shape
from .steering import ControlParams

log = logging.getLogger(__name__)

SUMMARY_SCHEMA = "beaconpursuit.run_summary/1"
INVARIANT_TOL = 1e-9
APPROACH_TOL = 0.1


def shape_distance(a, b) -> tuple[float, float]:
    """``(max absolute, max mixed-relative)`` difference between two shapes."""
    a = np.asarray(a.as_array() if isinstance(a, EffectiveShape) else a, dtype=float)
    b = np.asarray(b.as_array() if isinstance(b, EffectiveShape) else b, dtype=float)
    diff = np.abs(a - b)
    rel = diff.copy()
    rel[:3] = diff[:3] / np.maximum(np.abs(b[:3]), 1e-12)
    return float(diff.max()), float(rel.max())


def equilibrium_matches(terminal: EffectiveShape, params: ControlParams) -> list[dict]:
    """Distance from ``terminal`` to each closed-form equilibrium existing for ``params``.

    The free beacon distance of the ``a0 = 0`` family is taken from the
    terminal shape (mean of the two beacon distances, at least half the
    predicted separation).
    """
    if not params.satisfies_common_assumptions:
        return []
    rho_1b = None
    if params.a0 == 0 and eq.prop1_condition(params):
        rho = eq.prop1_separation(params)
        mean_b = 0.5 * (terminal.rho_1b + terminal.rho_2b)
        rho_1b = mean_b if np.isfinite(mean_b) and mean_b >= rho / 2 else rho
    out = []
    for spec in eq.all_equilibria(params, rho_1b):
        dabs, drel = shape_distance(terminal, spec.shape)
        out.append({
            "kind": spec.kind,
            "predicted": spec.shape.as_dict(),
            "max_abs_distance": dabs,
            "max_rel_distance": drel,
            "approaches": bool(drel <= APPROACH_TOL),
        })
    return out


@dataclass
class RunSummary:
    termination: str
    message: str
    t_end: float
    samples: int
    invariants: dict
    terminal_shape: EffectiveShape
    circling: object = None  # CirclingReport | None
    circling_error: str | None = None
    equilibria: list = field(default_factory=list)
    config: RunConfig | None = None
    files: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if self.termination == "completed" else 1

    def as_dict(self) -> dict:
        return {
            "schema": SUMMARY_SCHEMA,
            "config": self.config.as_dict() if self.config else None,
            "termination": {
                "reason": self.termination, "message": self.message,
                "t_end": self.t_end, "samples": self.samples,
            },
            "invariants": self.invariants,
            "terminal_shape": {k: _finite(v) for k, v in self.terminal_shape.as_dict().items()},
            "circling": self.circling.as_dict() if self.circling is not None else None,
            "circling_error": self.circling_error,
            "equilibria": self.equilibria,
            "files": [str(f) for f in self.files],
        }


def _finite(v):
    v = float(v)
    return v if np.isfinite(v) else None


def check_invariants(record: TrajectoryRecord, tol: float = INVARIANT_TOL) -> dict:
    frames = np.asarray(record.frames)
    speed = float(np.max(np.abs(np.linalg.norm(frames[..., 0, :], axis=-1) - 1.0)))
    ortho = float(record.frame_error())
    return {
        "max_frame_error": ortho,
        "max_unit_speed_error": speed,
        "tolerance": tol,
        "passed": bool(ortho < tol and speed < tol),
    }


def summarize(record: TrajectoryRecord, config: RunConfig) -> RunSummary:
    terminal = EffectiveShape.from_array(record.shapes[-1])
    circling, circling_error = None, None
    if record.completed:
        try:
            circling = detect_circling(record, min(config.window, config.t_max), config.tol) if config.t_max > 0 else None
            if circling is None:
                circling_error = "zero-length run"
        except BeaconPursuitError as exc:
            circling_error = f"{exc.code}: {exc}"
    else:
        circling_error = "run terminated early"
    return RunSummary(
        termination=record.termination,
        message=record.message,
        t_end=float(record.times[-1]),
        samples=len(record.times),
        invariants=check_invariants(record),
        terminal_shape=terminal,
        circling=circling,
        circling_error=circling_error,
        equilibria=equilibrium_matches(terminal, config.params),
        config=config,
    )


def simulate(config: RunConfig) -> TrajectoryRecord:
    return integrate(initial_state(config), config.params, config.t_max, config.dt,
                     sample_every=config.sample_every)


def run(config: RunConfig, out_dir=None) -> tuple[RunSummary, TrajectoryRecord]:
    """Integrate, analyze and (when ``out_dir`` is given) write the requested outputs.

    Files: ``trajectory.csv``, ``shape.csv`` and ``summary.json`` for the
    ``trajectory``, ``shape`` and ``report`` outputs respectively.
    """
    record = simulate(config)
    summary = summarize(record, config)
    if out_dir is not None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            if "trajectory" in config.outputs:
                write_trajectory_csv(out / "trajectory.csv", record)
                summary.files.append(out / "trajectory.csv")
            if "shape" in config.outputs:
                write_shape_csv(out / "shape.csv", record.times, record.shapes)
                summary.files.append(out / "shape.csv")
            if "report" in config.outputs:
                summary.files.append(out / "summary.json")
                write_json(out / "summary.json", summary.as_dict())
        except OSError as exc:
            raise OutputError(f"cannot write outputs to {out}: {exc}") from exc
    return summary, record


# ------------------------------------------------------------------ sweeps

SWEEP_COLUMNS = (
    "mu", "lambda", "a", "a0", "prop1", "prop2a", "prop2b",
    "prop1_rho", "prop2a_rho", "prop2a_rho_b", "prop2b_rho", "prop2b_rho_b",
    "prop1_converged", "prop1_distance", "prop2a_converged", "prop2a_distance",
    "prop2b_converged", "prop2b_distance", "error",
)


@dataclass(frozen=True)
class SweepSettings:
    """Options for the optional simulated verdict of each sweep cell.

    Each existing equilibrium is embedded, perturbed by ``perturb`` (relative,
    seeded) and integrated for ``t_max``; the verdict is the shape-based
    convergence test plus the mixed-relative distance to the prediction.
    """

    simulate: bool = False
    t_max: float = 200.0
    dt: float = 1e-3
    perturb: float = 0.01
    seed: int = 0
    window: float = 20.0
    tol: float = 1e-3
    sample_every: int = 10


def parameter_grid(mu=(1.0,), lam=(0.25, 0.5, 0.75), a=(-0.5, 0.5), a0=(-0.2, 0.0, 0.2)) -> list[dict]:
    """Cartesian product of common parameters as plain dicts (validated per cell)."""
    return [{"mu": m, "lambda": l, "a": x, "a0": y} for m, l, x, y in product(mu, lam, a, a0)]


def _cell(task) -> dict:
    cell, settings = task
    if isinstance(cell, ControlParams):
        row = {"mu": cell.mu, "lambda": cell.lam, "a": cell.a, "a0": cell.a0}
    else:
        row = {k: float(cell[k]) for k in ("mu", "lambda", "a", "a0")}
    for key in SWEEP_COLUMNS[4:]:
        row.setdefault(key, None)
    try:
        params = cell if isinstance(cell, ControlParams) else ControlParams.common(
            row["mu"], row["lambda"], row["a"], row["a0"])
        table = eq.existence_table(params)
        row.update(table)
        specs = {s.kind: s for s in eq.all_equilibria(params)}
        if "prop1" in specs:
            row["prop1_rho"] = specs["prop1"].shape.rho
        for kind in ("prop2a", "prop2b"):
            if kind in specs:
                row[f"{kind}_rho"] = specs[kind].shape.rho
                row[f"{kind}_rho_b"] = specs[kind].shape.rho_1b
        if settings.simulate:
            for kind, spec in specs.items():
                start = perturb_state(embed_shape(spec.shape), settings.perturb, Xoshiro256(settings.seed))
                rec = integrate(start, params, settings.t_max, settings.dt, sample_every=settings.sample_every)
                if not rec.completed:
                    row[f"{kind}_converged"] = False
                    continue
                report = detect_circling(rec, min(settings.window, settings.t_max), settings.tol)
                target = spec.shape
                if kind == "prop1":
                    term = report.terminal_shape
                    target = spec.shape.replace(rho_1b=0.5 * (term.rho_1b + term.rho_2b),
                                                rho_2b=0.5 * (term.rho_1b + term.rho_2b))
                row[f"{kind}_converged"] = report.converged
                row[f"{kind}_distance"] = shape_distance(report.terminal_shape, target)[1]
    except BeaconPursuitError as exc:
        row["error"] = f"{exc.code}: {exc}"
    except Exception as exc:  # noqa: BLE001 - a sweep never aborts on one cell
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(grid, settings: SweepSettings | None = None, jobs: int | None = None) -> list[dict]:
    """Classify every cell of ``grid`` (``ControlParams`` or ``parameter_grid`` dicts).

    Returns one row per cell, in grid order, keyed by :data:`SWEEP_COLUMNS`.
    Cells run in worker processes when ``jobs > 1``; an error in one cell is
    recorded in its ``error`` column.
    """
    settings = settings or SweepSettings()
    tasks = [(cell, settings) for cell in grid]
    if not tasks:
        return []
    if jobs is not None and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_cell, tasks))
    return [_cell(t) for t in tasks]


__all__ = [
    "RunSummary", "SweepSettings", "SWEEP_COLUMNS", "SUMMARY_SCHEMA", "check_invariants",
    "equilibrium_matches", "parameter_grid", "run", "shape_distance", "simulate", "summarize", "sweep",
]
