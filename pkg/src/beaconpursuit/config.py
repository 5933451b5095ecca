"""Run configuration: line-based ``key = value`` files, presets, initial conditions.

File schema (``#`` or ``;`` start a comment; keys before any section header
are accepted and looked up in every section)::

    [params]   mu, mu_b, lambda, a, a0,
               mu_1, mu_2, mu_1b, mu_2b, a_1, a_2, a_1b, a_2b
    [initial]  preset, shape, state, random, box, perturb, rho_1b, branch
    [run]      t_max, dt, seed, outputs, sample_every, window, tol

``mu`` sets all four gains unless ``mu_b`` overrides the beacon gains; ``a``
sets both neighbor offsets and ``a0`` both beacon offsets. Per-agent keys
always win over common ones. A ``preset`` supplies parameters, initial
condition, horizon and perturbation; any explicit key overrides it.

Initial conditions (exactly one of):

* ``preset = NAME``  -- the preset's equilibrium, embedded (see :data:`PRESETS`);
* ``shape = rho, rho_1b, rho_2b, xbar_1, xbar_2, xbar_1b, xbar_2b, xtilde`` -- embedded;
* ``state = r1, x1, y1, z1, r2, x2, y2, z2, beacon`` -- 27 numbers;
* ``random = true`` -- positions uniform in ``[-box, box]^3`` around the
  beacon (origin), headings uniform on the sphere.

``perturb = delta`` then displaces every position coordinate by
``delta * L * U(-1, 1)`` (``L`` = largest beacon distance) and every heading
coordinate by ``delta * U(-1, 1)`` before renormalizing; frames are completed
deterministically. All draws come from :class:`~beaconpursuit.rng.Xoshiro256`
seeded with ``seed``, in the order: agent-1 position, agent-2 position,
agent-1 heading, agent-2 heading (random starts draw position then heading per
agent, redrawing while any pairwise distance is below ``box / 10``).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import equilibria as eq
from .errors import BeaconPursuitError, ParameterViolation, ParseError, ValidationError
from .geometry import complete_frame, orthonormality_error
from .rng import Xoshiro256
from .shape import EffectiveShape, embed_shape
from .state import WorldState
from .steering import ControlParams

PARAM_KEYS = ("mu", "mu_b", "lambda", "a", "a0", "mu_1", "mu_2", "mu_1b", "mu_2b", "a_1", "a_2", "a_1b", "a_2b")
INITIAL_KEYS = ("preset", "shape", "state", "random", "box", "perturb", "rho_1b", "branch")
RUN_KEYS = ("t_max", "dt", "seed", "outputs", "sample_every", "window", "tol")
SECTIONS = {"params": PARAM_KEYS, "initial": INITIAL_KEYS, "run": RUN_KEYS}
ALL_KEYS = PARAM_KEYS + INITIAL_KEYS + RUN_KEYS
OUTPUT_KINDS = frozenset({"trajectory", "shape", "report"})

DEFAULT_T_MAX = 100.0
DEFAULT_DT = 1e-3
DEFAULT_BOX = 5.0


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str
    params: ControlParams
    t_max: float
    perturb: float
    rho_1b: float | None = None
    description: str = ""


PRESETS = {
    "prop1": Preset(
        "prop1", "prop1", ControlParams.common(2.0, 0.5, -0.5, 0.0), t_max=200.0, perturb=0.01, rho_1b=3.0,
        description="no beacon offset: circling at separation 2, beacon distance left free",
    ),
    "prop2a": Preset(
        "prop2a", "prop2a", ControlParams.common(1.0, 0.5, -0.4, 0.2), t_max=500.0, perturb=0.01,
        description="beacon-centered circle of radius 5, agents diametrically opposite",
    ),
    "prop2b": Preset(
        "prop2b", "prop2b", ControlParams.common(1.0, 0.5, 0.2, -0.5), t_max=100.0, perturb=0.0,
        description="two stacked circles, parallel headings (started exactly on the equilibrium)",
    ),
}


@dataclass(frozen=True)
class InitialCondition:
    """How the starting configuration is produced; see the module docstring."""

    kind: str  # "preset" | "shape" | "state" | "random"
    preset: str | None = None
    shape: EffectiveShape | None = None
    state: tuple | None = None
    rho_1b: float | None = None
    perturb: float = 0.0
    box: float = DEFAULT_BOX
    branch: str = "P'"

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "perturb": self.perturb, "branch": self.branch}
        if self.preset is not None:
            out["preset"] = self.preset
        if self.shape is not None:
            out["shape"] = self.shape.as_dict()
        if self.state is not None:
            out["state"] = list(self.state)
        if self.rho_1b is not None:
            out["rho_1b"] = self.rho_1b
        if self.kind == "random":
            out["box"] = self.box
        return out


@dataclass(frozen=True)
class RunConfig:
    params: ControlParams
    initial: InitialCondition
    t_max: float = DEFAULT_T_MAX
    dt: float = DEFAULT_DT
    outputs: frozenset = field(default=OUTPUT_KINDS)
    seed: int = 0
    sample_every: int = 1
    window: float = 20.0
    tol: float = 1e-3

    def __post_init__(self):
        if not (np.isfinite(self.t_max) and self.t_max >= 0):
            raise ValidationError(f"t_max must be >= 0, got {self.t_max!r}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be > 0, got {self.dt!r}")
        if self.sample_every < 1:
            raise ValidationError(f"sample_every must be >= 1, got {self.sample_every!r}")
        if not self.window > 0 or not self.tol > 0:
            raise ValidationError("window and tol must be positive")
        unknown = set(self.outputs) - OUTPUT_KINDS
        if unknown:
            raise ValidationError(f"unknown outputs {sorted(unknown)}; choose from {sorted(OUTPUT_KINDS)}")
        if self.initial.kind == "preset" and self.initial.preset not in PRESETS:
            raise ValidationError(f"unknown preset {self.initial.preset!r}; choose from {sorted(PRESETS)}")

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "initial": self.initial.as_dict(),
            "t_max": self.t_max,
            "dt": self.dt,
            "outputs": sorted(self.outputs),
            "seed": self.seed,
            "sample_every": self.sample_every,
            "window": self.window,
            "tol": self.tol,
        }

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------- parsing


def read_entries(text: str) -> dict:
    """Tokenize config text into ``{key: (value, line)}``; structural errors raise :class:`ParseError`."""
    entries: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"unterminated section header {line!r}", lineno)
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ParseError(f"unknown section [{section}]; expected one of {sorted(SECTIONS)}", lineno)
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        allowed = SECTIONS[section] if section else ALL_KEYS
        if key not in allowed:
            where = f"section [{section}]" if section else "configuration"
            raise ParseError(f"unknown key {key!r} in {where}", lineno)
        if key in entries:
            raise ParseError(f"duplicate key {key!r} (first set on line {entries[key][1]})", lineno)
        if not value:
            raise ParseError(f"empty value for {key!r}", lineno)
        entries[key] = (value, lineno)
    return entries


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse and validate configuration text.

    ``overrides`` maps keys to string values that replace (or add to) those in
    the text; the command-line flags use it.
    """
    entries = read_entries(text)
    for key, value in (overrides or {}).items():
        if key not in ALL_KEYS:
            raise ValidationError(f"unknown key {key!r}")
        entries[key] = (str(value), 0)
    return build_config(entries)


def _number(entries, key, default=None, kind=float):
    if key not in entries:
        return default
    value, line = entries[key]
    try:
        out = kind(value)
    except ValueError:
        raise ParseError(f"{key} must be {'an integer' if kind is int else 'a number'}, got {value!r}", line) from None
    if kind is float and not np.isfinite(out):
        raise ValidationError(f"{key} must be finite, got {value!r}")
    return out


def _vector(entries, key, length):
    value, line = entries[key]
    try:
        out = tuple(float(v) for v in value.replace(",", " ").split())
    except ValueError:
        raise ParseError(f"{key} must be a list of numbers", line) from None
    if len(out) != length:
        raise ParseError(f"{key} needs {length} numbers, got {len(out)}", line)
    return out


def _bool(entries, key):
    value, line = entries[key]
    low = value.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ParseError(f"{key} must be a boolean, got {value!r}", line)


def _build_params(entries, preset: Preset | None) -> ControlParams:
    base = preset.params.as_dict() if preset else {}
    vals = dict(base)
    mu = _number(entries, "mu")
    if mu is not None:
        vals.update(mu_1=mu, mu_2=mu, mu_1b=mu, mu_2b=mu)
    mu_b = _number(entries, "mu_b")
    if mu_b is not None:
        vals.update(mu_1b=mu_b, mu_2b=mu_b)
    a = _number(entries, "a")
    if a is not None:
        vals.update(a_1=a, a_2=a)
    a0 = _number(entries, "a0")
    if a0 is not None:
        vals.update(a_1b=a0, a_2b=a0)
    lam = _number(entries, "lambda")
    if lam is not None:
        vals["lambda"] = lam
    for key in ("mu_1", "mu_2", "mu_1b", "mu_2b", "a_1", "a_2", "a_1b", "a_2b"):
        v = _number(entries, key)
        if v is not None:
            vals[key] = v
    # range checks first, so a single bad value is reported as such
    if "lambda" in vals and not 0.0 < vals["lambda"] < 1.0:
        raise ValidationError(f"lambda must lie strictly in (0,1), got {vals['lambda']!r}")
    for key in ("a", "a0", "a_1", "a_2", "a_1b", "a_2b"):
        v = _number(entries, key)
        if v is not None and not -1.0 <= v <= 1.0:
            raise ValidationError(f"{key} must lie in [-1,1], got {v!r}")
    for key in ("mu", "mu_b", "mu_1", "mu_2", "mu_1b", "mu_2b"):
        v = _number(entries, key)
        if v is not None and not v > 0:
            raise ValidationError(f"{key} must be strictly positive, got {v!r}")
    required = ("mu_1", "mu_2", "mu_1b", "mu_2b", "lambda", "a_1", "a_2", "a_1b", "a_2b")
    missing = [k for k in required if k not in vals]
    if missing:
        raise ValidationError(f"missing parameters {missing} (set them or choose a preset)")
    try:
        return ControlParams(
            vals["mu_1"], vals["mu_2"], vals["mu_1b"], vals["mu_2b"], vals["lambda"],
            vals["a_1"], vals["a_2"], vals["a_1b"], vals["a_2b"],
        )
    except ParameterViolation as exc:
        raise ValidationError(str(exc)) from None


def build_config(entries: dict) -> RunConfig:
    preset = None
    if "preset" in entries:
        name, line = entries["preset"]
        if name not in PRESETS:
            raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        preset = PRESETS[name]
    params = _build_params(entries, preset)

    sources = [k for k in ("shape", "state") if k in entries]
    if "random" in entries and _bool(entries, "random"):
        sources.append("random")
    if len(sources) > 1:
        raise ValidationError(f"initial condition is over-specified: {sources}")
    perturb = _number(entries, "perturb", preset.perturb if preset else 0.0)
    if perturb < 0:
        raise ValidationError("perturb must be >= 0")
    branch = entries["branch"][0] if "branch" in entries else "P'"
    if branch not in ("P'", "P''"):
        raise ValidationError("branch must be P' or P''")
    common = dict(perturb=perturb, branch=branch)
    if sources == ["shape"]:
        initial = InitialCondition("shape", shape=EffectiveShape.from_array(_vector(entries, "shape", 8)), **common)
    elif sources == ["state"]:
        initial = InitialCondition("state", state=_vector(entries, "state", 27), **common)
    elif sources == ["random"]:
        box = _number(entries, "box", DEFAULT_BOX)
        if not box > 0:
            raise ValidationError("box must be > 0")
        initial = InitialCondition("random", box=box, **common)
    elif preset is not None:
        rho_1b = _number(entries, "rho_1b", preset.rho_1b)
        initial = InitialCondition("preset", preset=preset.name, rho_1b=rho_1b, **common)
    else:
        raise ValidationError("no initial condition: set preset, shape, state or random")

    outputs = OUTPUT_KINDS
    if "outputs" in entries:
        outputs = frozenset(v.strip() for v in entries["outputs"][0].replace(",", " ").split())
    seed = _number(entries, "seed", 0, int)
    if seed < 0:
        raise ValidationError("seed must be >= 0")
    return RunConfig(
        params=params,
        initial=initial,
        t_max=_number(entries, "t_max", preset.t_max if preset else DEFAULT_T_MAX),
        dt=_number(entries, "dt", DEFAULT_DT),
        outputs=outputs,
        seed=seed,
        sample_every=_number(entries, "sample_every", 1, int),
        window=_number(entries, "window", 20.0),
        tol=_number(entries, "tol", 1e-3),
    )


def preset_config(name: str, **changes) -> RunConfig:
    """The :class:`RunConfig` a bare ``preset = name`` file would produce."""
    cfg = parse_config(f"preset = {name}\n")
    return cfg.replace(**changes) if changes else cfg


# ------------------------------------------------------- initial conditions


def preset_equilibrium(kind: str, params: ControlParams, rho_1b: float | None = None):
    """EquilibriumSpec of the given family for ``params`` (``ValidationError`` if absent)."""
    try:
        if kind == "prop1":
            spec = eq.prop1_equilibrium(params, rho_1b if rho_1b is not None else eq.prop1_separation(params))
        elif kind == "prop2a":
            spec = eq.prop2a_equilibrium(params)
        else:
            spec = eq.prop2b_equilibrium(params)
    except BeaconPursuitError as exc:
        raise ValidationError(f"{kind} equilibrium unavailable: {exc}") from None
    if spec is None:
        raise ValidationError(f"{kind} existence condition fails for these parameters")
    return spec


def perturb_state(state: WorldState, delta: float, rng: Xoshiro256) -> WorldState:
    """Randomly displace positions and headings by a relative amount ``delta``."""
    if delta == 0:
        return state
    _, r1b, r2b = state.separations()
    scale = max(float(r1b), float(r2b))
    beacon = np.asarray(state.beacon, dtype=float)
    r = [state.positions[i] + delta * scale * np.array(rng.uniform_vector(-1.0, 1.0)) for i in range(2)]
    x = [state.frames[i, 0] + delta * np.array(rng.uniform_vector(-1.0, 1.0)) for i in range(2)]
    return WorldState.from_headings(r[0], x[0], r[1], x[1], beacon)


def random_state(box: float, rng: Xoshiro256) -> WorldState:
    """Random non-degenerate configuration around a beacon at the origin."""
    while True:
        r1 = np.array(rng.uniform_vector(-box, box))
        x1 = np.array(rng.unit_vector())
        r2 = np.array(rng.uniform_vector(-box, box))
        x2 = np.array(rng.unit_vector())
        state = WorldState.from_headings(r1, x1, r2, x2)
        if state.min_separation() >= box / 10:
            return state


def initial_state(config: RunConfig) -> WorldState:
    """Materialize the configured starting configuration (deterministic in the seed)."""
    init = config.initial
    rng = Xoshiro256(config.seed)
    if init.kind == "random":
        return random_state(init.box, rng)
    if init.kind == "state":
        state = WorldState.from_vector(np.array(init.state))
        if state.frame_error() > 1e-9:
            raise ValidationError(f"state frames are not orthonormal (error {state.frame_error():.3e})")
    else:
        if init.kind == "preset":
            shape = preset_equilibrium(PRESETS[init.preset].kind, config.params, init.rho_1b).shape
        else:
            shape = init.shape
        try:
            state = embed_shape(shape, init.branch)
        except BeaconPursuitError as exc:
            raise ValidationError(f"cannot embed initial shape: {exc}") from None
    return perturb_state(state, init.perturb, rng)
