"""Scenario configuration: JSON schema, validation, presets and initial states."""

from __future__ import annotations

import copy
import json
import logging
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError
from .lattice import LatticeGrid
from .params import BHParams, Schedule

log = logging.getLogger(__name__)

SCHEMA = "bhanalog.scenario/1"

SUPERFLUID_MAX_RATIO = 1.0
MOTT_MIN_RATIO = 100.0
MIN_FILLING = 10.0


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(_Spec):
    shape: List[int]
    a: float = 1.0
    boundary: Literal["periodic", "fixed"] = "periodic"

    @field_validator("shape", mode="before")
    @classmethod
    def _scalar_shape(cls, v):
        return [v] if isinstance(v, int) else v


class ScheduleSpec(_Spec):
    kind: Literal["constant", "exponential", "sinusoidal"] = "constant"
    H: float = 0.0
    eps: float = 0.0
    nu: float = 0.0


class ParamsSpec(_Spec):
    J: float
    U: float
    mu: Optional[float] = None
    schedule: ScheduleSpec = ScheduleSpec()


class Homogeneous(_Spec):
    kind: Literal["homogeneous"] = "homogeneous"
    n: float
    noise: float = 0.0


class PhaseRamp(_Spec):
    kind: Literal["phase_ramp"] = "phase_ramp"
    n: float
    dphi: float


class StepFlow(_Spec):
    """Flow along axis 0 ramping from ``v_up`` to ``v_down`` over ``width`` sites."""

    kind: Literal["step_flow"] = "step_flow"
    n: float
    v_up: float
    v_down: float
    width: float
    center: Optional[float] = None


class GaussianBump(_Spec):
    kind: Literal["gaussian_bump"] = "gaussian_bump"
    n_ref: float
    amplitude: float
    width: float
    center: Optional[List[float]] = None


InitialSpec = Annotated[Union[Homogeneous, PhaseRamp, StepFlow, GaussianBump], Field(discriminator="kind")]


class NoSeed(_Spec):
    kind: Literal["none"] = "none"


class PlaneWave(_Spec):
    kind: Literal["plane_wave"] = "plane_wave"
    modes: List[int]
    amplitude: float = 1e-6


class GaussianPulse(_Spec):
    """Density pulse ``dn = amplitude * n * exp(-r^2 / 2 width^2)``, zero phase fluctuation."""

    kind: Literal["gaussian_pulse"] = "gaussian_pulse"
    amplitude: float = 1e-3
    width: float = 6.0
    center: Optional[List[float]] = None


SeedSpec = Annotated[Union[NoSeed, PlaneWave, GaussianPulse], Field(discriminator="kind")]


class IntegratorSpec(_Spec):
    method: Literal["rk4", "split"] = "rk4"
    dt: Optional[float] = None
    steps: int = Field(0, ge=0)
    stride: int = Field(100, ge=1)


Observable = Literal[
    "trace", "snapshot", "hydro", "horizon", "metric", "metric_series", "perturbation", "pulse", "kg"
]


class OutputSpec(_Spec):
    observables: List[Observable] = ["trace", "snapshot"]
    format: Literal["csv", "json", "bin"] = "csv"


class DispersionSpec(_Spec):
    modes: List[List[int]]
    amplitude: float = 1e-6
    periods: float = 40.0


class Scenario(_Spec):
    schema_: Literal["bhanalog.scenario/1"] = Field(SCHEMA, alias="schema")
    name: str = "custom"
    description: str = ""
    regime: Literal["superfluid", "mott"] = "superfluid"
    grid: GridSpec
    params: ParamsSpec
    initial: InitialSpec
    seed: SeedSpec = NoSeed()
    integrator: IntegratorSpec = IntegratorSpec()
    output: OutputSpec = OutputSpec()
    dispersion: Optional[DispersionSpec] = None
    random_seed: int = 0

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    def build_grid(self) -> LatticeGrid:
        g = self.grid
        try:
            return LatticeGrid(tuple(g.shape), g.a, g.boundary)
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from exc

    def mean_filling(self) -> float:
        init = self.initial
        return init.n_ref if isinstance(init, GaussianBump) else init.n

    def build_params(self) -> BHParams:
        ps = self.params
        try:
            schedule = Schedule(ps.schedule.kind, ps.schedule.H, ps.schedule.eps, ps.schedule.nu)
            p = BHParams(ps.J, ps.U, 0.0 if ps.mu is None else ps.mu, self.grid.a, schedule)
        except ValueError as exc:
            raise ConfigError(f"params: {exc}") from exc
        if ps.mu is None:
            p = p.with_mu(p.stationary_mu(self.mean_filling(), len(self.grid.shape)))
        return p


def scenario_warnings(s: Scenario) -> list[str]:
    """Regime and filling-factor validity warnings (never errors)."""
    out = []
    ratio = s.params.U / s.params.J
    if s.regime == "superfluid" and ratio > SUPERFLUID_MAX_RATIO:
        out.append(f"regime: U/J = {ratio:g} is large for the superfluid regime (expects U/J <= {SUPERFLUID_MAX_RATIO:g})")
    if s.regime == "mott" and ratio < MOTT_MIN_RATIO:
        out.append(f"regime: U/J = {ratio:g} is small for the Mott regime (expects U/J >= {MOTT_MIN_RATIO:g})")
    n = s.mean_filling()
    if n < MIN_FILLING:
        out.append(f"filling: n = {n:g} is below {MIN_FILLING:g}; the density-phase picture needs large filling")
    return out


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"] if not str(x).startswith(("function-", "tagged-union")))
        parts.append(f"{loc or '<root>'}: {err['msg']}")
    return "; ".join(parts)


def scenario_from_dict(data: dict) -> Scenario:
    try:
        s = Scenario.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None
    # parameter invariants (positivity, schedule bounds) surface as config errors here
    s.build_grid()
    s.build_params()
    return s


def load_scenario(source) -> Scenario:
    """Load a scenario from a path or from inline JSON text; warnings are logged."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        path = Path(source)
        text = path.read_text()
    else:
        text = source
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("<root>: scenario must be a JSON object")
    s = scenario_from_dict(data)
    for w in scenario_warnings(s):
        log.warning(w)
    return s


def dump_scenario(s: Scenario) -> str:
    return json.dumps(s.model_dump(mode="json", by_alias=True), indent=2, sort_keys=True) + "\n"


def apply_override(data: dict, assignment: str) -> dict:
    """Apply ``dotted.key=value``; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    data = copy.deepcopy(data)
    node = data
    parts = key.strip().split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value
    return data


# initial states


def _center(spec_center, grid: LatticeGrid):
    if spec_center is None:
        return np.array([n * grid.a / 2 for n in grid.shape])
    c = np.asarray(spec_center, dtype=float)
    if c.shape != (grid.dims,):
        raise ConfigError(f"center needs {grid.dims} coordinates")
    return c


def initial_mean(s: Scenario, grid: LatticeGrid, p: BHParams, rng: np.random.Generator) -> np.ndarray:
    init = s.initial
    x = grid.coords()
    if isinstance(init, Homogeneous):
        b = np.full(grid.shape, np.sqrt(init.n), dtype=complex)
        if init.noise:
            b = b * (1 + init.noise * (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)))
        return b
    if isinstance(init, PhaseRamp):
        return np.sqrt(init.n) * np.exp(1j * init.dphi * x[0] / grid.a)
    if isinstance(init, StepFlow):
        center = init.center if init.center is not None else grid.shape[0] * grid.a / 2
        # per-site phase increment giving v = 2 J a^2 (increment / a)
        d_up = init.v_up / (2 * p.J0 * grid.a)
        d_down = init.v_down / (2 * p.J0 * grid.a)
        ramp = 0.5 * (1 + np.tanh((x[0] - center) / (init.width * grid.a)))
        inc = d_up + (d_down - d_up) * ramp
        phase = np.cumsum(inc, axis=0) - inc
        return np.sqrt(init.n) * np.exp(1j * phase)
    if isinstance(init, GaussianBump):
        r2 = np.sum((x - _center(init.center, grid).reshape((-1,) + (1,) * grid.dims)) ** 2, axis=0)
        n =init.n_ref + init.amplitude * np.exp(-r2 / (2 * (init.width * grid.a) ** 2))
        return np.sqrt(n).astype(complex)
    raise ConfigError(f"unknown initial state {init!r}")


def initial_fluct(s: Scenario, grid: LatticeGrid, mean: np.ndarray):
    seed = s.seed
    if isinstance(seed, NoSeed):
        return None
    if isinstance(seed, PlaneWave):
        return seed.amplitude * grid.mode_wave(seed.modes)
    if isinstance(seed, GaussianPulse):
        x = grid.coords()
        c = _center(seed.center, grid).reshape((-1,) + (1,) * grid.dims)
        r2 = np.sum((x - c) ** 2, axis=0)
        # dn / (2n) with dn = amplitude * n * gaussian
        return (0.5 * seed.amplitude * np.exp(-r2 / (2 * (seed.width * grid.a) ** 2))).astype(complex)
    raise ConfigError(f"unknown fluctuation seed {seed!r}")


# presets

_SF = {"J": 1.0, "U": 0.1}

PRESETS: dict[str, dict] = {
    "homogeneous-superfluid": {
        "description": "Homogeneous superfluid ring with weak noise; conservation laws",
        "grid": {"shape": [256]},
        "params": dict(_SF),
        "initial": {"kind": "homogeneous", "n": 100.0, "noise": 1e-3},
        "integrator": {"dt": 1e-3, "steps": 10000, "stride": 100},
        "output": {"observables": ["trace", "snapshot"]},
    },
    "blackhole-1d": {
        "description": "Step flow from subsonic to supersonic; one acoustic horizon",
        "grid": {"shape": [256], "boundary": "fixed"},
        "params": dict(_SF),
        "initial": {"kind": "step_flow", "n": 100.0, "v_up": 3.0, "v_down": 5.5, "width": 8.0},
        "integrator": {"dt": 1e-3, "steps": 200, "stride": 50},
        "output": {"observables": ["trace", "hydro", "horizon", "metric"]},
    },
    "mott-pulse": {
        "description": "Density pulse in the Mott regime travelling at the sound speed",
        "regime": "mott",
        "grid": {"shape": [512]},
        "params": {"J": 1.0, "U": 400.0},
        "initial": {"kind": "homogeneous", "n": 100.0},
        "seed": {"kind": "gaussian_pulse", "amplitude": 1e-3, "width": 6.0},
        "integrator": {"dt": 5e-4, "steps": 1400, "stride": 20},
        "output": {"observables": ["trace", "pulse"]},
    },
    "flrw": {
        "description": "Exponentially decaying tunneling; expanding FLRW metric",
        "grid": {"shape": [64]},
        "params": {"J": 1.0, "U": 0.1, "schedule": {"kind": "exponential", "H": 0.01}},
        "initial": {"kind": "homogeneous", "n": 100.0},
        "integrator": {"dt": 0.01, "steps": 10000, "stride": 100},
        "output": {"observables": ["trace", "metric_series", "metric"]},
    },
    "minkowski-bump": {
        "description": "Weak density bump as a metric perturbation on flat spacetime",
        "grid": {"shape": [128]},
        "params": dict(_SF),
        "initial": {"kind": "gaussian_bump", "n_ref": 100.0, "amplitude": 2.0, "width": 6.0},
        "integrator": {"steps": 0},
        "output": {"observables": ["perturbation", "metric"]},
    },
    "gw-1d": {
        "description": "Sinusoidally modulated tunneling; 1D gravitational-wave metric",
        "grid": {"shape": [64]},
        "params": {"J": 1.0, "U": 0.1, "schedule": {"kind": "sinusoidal", "eps": 0.01, "nu": 0.5}},
        "initial": {"kind": "homogeneous", "n": 100.0},
        "integrator": {"dt": 0.01, "steps": 2000, "stride": 10},
        "output": {"observables": ["trace", "metric_series"]},
    },
    "dispersion-sweep": {
        "description": "Measured fluctuation dispersion against the closed forms",
        "grid": {"shape": [64]},
        "params": dict(_SF),
        "initial": {"kind": "homogeneous", "n": 100.0},
        "integrator": {"steps": 0},
        "output": {"observables": []},
        "dispersion": {"modes": [[m] for m in range(1, 17)]},
    },
}


def preset_dict(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    data = copy.deepcopy(PRESETS[name])
    data["name"] = name
    return data


def preset(name: str, overrides=()) -> Scenario:
    data = preset_dict(name)
    for item in overrides:
        data = apply_override(data, item)
    return scenario_from_dict(data)


def list_presets() -> list[tuple[str, str]]:
    return [(name, spec["description"]) for name, spec in PRESETS.items()]
