"""Scenario orchestration: evolve, derive the requested observables, write a manifest."""

from __future__ import annotations

import datetime as _dt
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .dynamics import EvolutionState, IntegratorConfig, Snapshot, default_dt, energy, evolve, number
from .errors import ConfigError, EvolutionAborted, UnsupportedConfigurationError
from .geometry import (
    MOTT,
    flrw_metric,
    gw_metric,
    homogeneous_metric,
    horizon_scan,
    kg_residual,
    perturbation_metric,
    superfluid_metric,
)
from .hydro import fluct_to_hydro, mott_wave_residual, to_density_phase
from .params import EXPONENTIAL, SINUSOIDAL
from .scenarios import GaussianBump, GaussianPulse, Scenario, dump_scenario, initial_fluct, initial_mean
from .spectra import OMEGA_SQUARED, bdg_oracle, bogoliubov_limit, extract_dispersion, lattice_dispersion

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
MANIFEST_SCHEMA = "bhanalog.manifest/1"


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    scenario: dict
    version: str
    status: str
    seed: int
    started: str
    finished: str = ""
    artifacts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {"schema": MANIFEST_SCHEMA, **asdict(self)}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _prepare_outdir(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    old = out / MANIFEST
    entries = [p for p in out.iterdir() if not p.name.startswith(".")]
    if not entries:
        return
    if not old.exists():
        raise ConfigError(f"output directory {out} is not empty and holds no previous run")
    listed = {a["path"] for a in json.loads(old.read_text()).get("artifacts", [])}
    foreign = [p.name for p in entries if p.name != MANIFEST and p.name not in listed]
    if foreign:
        raise ConfigError(f"output directory {out} holds files from elsewhere: {', '.join(sorted(foreign))}")
    for name in listed:
        (out / name).unlink(missing_ok=True)
    old.unlink()


def _metric_for(s: Scenario, snap: Snapshot, grid, p):
    """Metric matching the scenario: FLRW / GW for scheduled tunneling, else the acoustic metric."""
    kind = p.schedule.kind
    if kind == SINUSOIDAL and grid.dims == 1:
        return gw_metric(grid, p, snap.t, float(np.mean(np.abs(snap.mean) ** 2)))
    h = to_density_phase(snap.mean, grid, p, snap.t)
    if kind == EXPONENTIAL:
        return flrw_metric(h, p, snap.t)
    if s.regime == "mott":
        return homogeneous_metric(h.n, grid, p, MOTT, snap.t)
    return superfluid_metric(h, p)


class _Run:
    def __init__(self, s: Scenario, out: Path, fmt: str, seed: int):
        self.s, self.out, self.fmt, self.seed = s, out, fmt, seed
        self.grid = s.build_grid()
        self.p = s.build_params()
        self.files: list[Path] = []
        self.summary: dict = {}
        self.trace: list = []
        self.series: list = []
        self.pulse: list = []

    def emit(self, paths):
        self.files.extend([paths] if isinstance(paths, Path) else paths)

    # observers

    def observe(self, i, snap: Snapshot):
        obs = self.s.output.observables
        if "trace" in obs:
            row = [str(i), snap.t, self.p.J(snap.t), number(snap.mean), energy(snap.mean, self.grid, self.p, snap.t)]
            if snap.fluct is not None:
                row.append(float(np.linalg.norm(np.ravel(snap.fluct))))
            self.trace.append(row)
        if "metric_series" in obs:
            m = _metric_for(self.s, snap, self.grid, self.p)
            D1 = m.dims_spacetime
            iu = np.triu_indices(D1)
            self.series.append([snap.t, *m.g[(0,) * self.grid.dims][iu]])
        if "pulse" in obs and snap.fluct is not None:
            self.pulse.append((snap.t, 2 * np.abs(snap.mean) ** 2 * snap.fluct.real))

    # writers

    def write_trace(self, has_fluct):
        cols = ["step", "t", "J", "number", "energy"] + (["fluct_norm"] if has_fluct else [])
        self.emit(io.write_csv(self.out / "trace.csv", cols, self.trace))
        if self.trace:
            n0, e0 = self.trace[0][3], self.trace[0][4]
            self.summary["number_drift"] = max(abs(r[3] - n0) for r in self.trace) / abs(n0)
            self.summary["energy_drift"] = max(abs(r[4] - e0) for r in self.trace) / abs(e0) if e0 else None

    def write_series(self):
        D1 = self.grid.dims + 1
        iu = np.triu_indices(D1)
        cols = ["t"] + [f"g{a}{b}" for a, b in zip(*iu)]
        self.emit(io.write_csv(self.out / "metric_series.csv", cols, self.series))
        if len(self.series) > 1:
            g11 = [r[1 + list(zip(*iu)).index((1, 1))] for r in self.series]
            self.summary["spatial_growth"] = g11[-1] / g11[0]

    def write_hydro(self, h):
        grid = self.grid
        idx = np.indices(grid.shape).reshape(grid.dims, -1).T
        cols = ["ijk"[d] for d in range(grid.dims)] + ["n", "phi"] + [f"v_{'xyz'[d]}" for d in range(grid.dims)]
        cols += ["c", "xi", "mach"]
        mach = np.ravel(np.sqrt(h.speed2) / h.c)
        fields = [np.ravel(h.n), np.ravel(h.phi)] + [np.ravel(h.v[d]) for d in range(grid.dims)]
        fields += [np.ravel(h.c), np.ravel(h.xi), mach]
        rows = [[str(int(i)) for i in idx[s]] + [f[s] for f in fields] for s in range(grid.size)]
        self.emit(io.write_csv(self.out / "hydro.csv", cols, rows))

    def write_horizon(self, h):
        rep = horizon_scan(h, self.p)
        d = rep.to_dict()
        d["t"] = h.t
        d["agree"] = rep.bonds == rep.condition_bonds
        self.emit(io.write_json(self.out / "horizon.json", d))
        self.summary["horizon_bonds"] = len(rep.bonds)

    def write_perturbation(self, h):
        init = self.s.initial
        n_ref = init.n_ref if isinstance(init, GaussianBump) else float(np.mean(h.n))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pert = perturbation_metric(h.n, self.grid, self.p, n_ref)
        flat = homogeneous_metric(n_ref, self.grid, self.p)
        exact = superfluid_metric(h, self.p)
        D1 = self.grid.dims + 1
        idx = np.indices(self.grid.shape).reshape(self.grid.dims, -1).T
        cols = ["ijk"[d] for d in range(self.grid.dims)] + ["n", "h00", "h11", "dg00", "dg11"]
        dg = exact.g - flat.g
        sel = [(0, 0), (1, 1)]
        flat_h = [np.ravel(pert.g[..., a, b]) for a, b in sel]
        flat_dg = [np.ravel(dg[..., a, b]) for a, b in sel]
        n = np.ravel(h.n)
        rows = [[str(int(i)) for i in idx[s]] + [n[s], flat_h[0][s], flat_h[1][s], flat_dg[0][s], flat_dg[1][s]]
                for s in range(self.grid.size)]
        self.emit(io.write_csv(self.out / "perturbation.csv", cols, rows))
        err = np.max(np.abs(dg - pert.g)) / np.max(np.abs(pert.g))
        info = {"n_ref": n_ref, "max_relative_deviation": float(np.max(np.abs(h.n - n_ref)) / n_ref),
                "second_order_remainder": float(err), "dims_spacetime": D1}
        self.emit(io.write_json(self.out / "perturbation.json", info))
        self.summary["perturbation_remainder"] = float(err)

    def write_pulse(self, state, dt):
        grid = self.grid
        if grid.dims != 1:
            raise UnsupportedConfigurationError("pulse tracking is implemented for 1D lattices")
        seed = self.s.seed
        if not isinstance(seed, GaussianPulse):
            raise ConfigError("the pulse observable needs a gaussian_pulse seed")
        L = grid.shape[0] * grid.a
        x0 = seed.center[0] if seed.center else L / 2
        x = grid.coords()[0]
        n = float(np.mean(np.abs(state.mean) ** 2))
        c = float(self.p.sound_speed(n))
        right = (x > x0) & (x < x0 + L / 2)
        rows = []
        for t, dn in self.pulse:
            w = dn[right] ** 2
            rows.append([t, float(np.sum(w * x[right]) / np.sum(w))])
        self.emit(io.write_csv(self.out / "pulse.csv", ["t", "com"], rows))
        # fit once the two halves have separated and before the front reaches the far edge
        t_lo = 4 * seed.width * grid.a / c
        t_hi = (L / 2 - 4 * seed.width * grid.a) / c
        fit = np.array([r for r in rows if t_lo <= r[0] <= t_hi])
        info = {"c": c, "fit_window": [t_lo, t_hi]}
        if len(fit) >= 3:
            speed = float(np.polyfit(fit[:, 0], fit[:, 1], 1)[0])
            info.update(speed=speed, relative_error=(speed - c) / c)
            self.summary["pulse_speed_error"] = (speed - c) / c
        if len(state.history) == 3:
            h = to_density_phase(state.history[1].mean, grid, self.p, state.history[1].t)
            dns = [2 * np.abs(sn.mean) ** 2 * sn.fluct.real for sn in state.history]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = mott_wave_residual(dns, dt, h, self.p)
            tt = (dns[2] - 2 * dns[1] + dns[0]) / dt**2
            info["wave_residual_ratio"] = float(np.linalg.norm(res) / np.linalg.norm(tt))
        self.emit(io.write_json(self.out / "pulse.json", info))

    def write_kg(self, state, dt):
        if state.fluct is None or len(state.history) < 3:
            raise ConfigError("the kg observable needs a fluctuation seed and at least two steps")
        levels = list(state.history)
        metrics = [superfluid_metric(to_density_phase(sn.mean, self.grid, self.p, sn.t), self.p) for sn in levels]
        dphi = [fluct_to_hydro(sn.fluct, to_density_phase(sn.mean, self.grid, self.p, sn.t)).dphi for sn in levels]
        _, ratio = kg_residual(dphi, dt, metrics, normalize=True)
        self.emit(io.write_json(self.out / "kg.json", {"t": levels[1].t, "residual_ratio": ratio}))
        self.summary["kg_residual_ratio"] = ratio

    def write_dispersion(self):
        self.emit(write_dispersion(self.out / "dispersion.csv", self.s))


def dispersion_rows(s: Scenario):
    if s.dispersion is None:
        raise ConfigError("dispersion: scenario has no dispersion plan")
    grid, p = s.build_grid(), s.build_params()
    n = s.mean_filling()
    d = s.dispersion
    pts = extract_dispersion(grid, p, n, d.modes, amplitude=d.amplitude, periods=d.periods)
    rows = []
    for pt in pts:
        k = list(pt.k) + [0.0] * (3 - len(pt.k))
        rows.append(k + [pt.omega, bdg_oracle(pt.k, p, n),
                         lattice_dispersion(pt.k, p, n, OMEGA_SQUARED).value,
                         bogoliubov_limit(pt.k, p, n, OMEGA_SQUARED).value])
    return rows


DISPERSION_COLUMNS = ["k_x", "k_y", "k_z", "omega_measured", "omega_oracle", "V_lattice", "V_bogoliubov"]


def write_dispersion(path: Path, s: Scenario) -> Path:
    """Measured and closed-form dispersion; the two closed forms are the raw ``omega**2`` values."""
    return io.write_csv(path, DISPERSION_COLUMNS, dispersion_rows(s))


def _write_manifest(out: Path, man: RunManifest, files):
    man.finished = _now()
    man.artifacts = [
        {"path": f.name, "sha256": io.sha256(f), "bytes": f.stat().st_size}
        for f in sorted(set(files), key=lambda f: f.name)
    ]
    io.write_atomic(out / MANIFEST, json.dumps(man.to_dict(), indent=2, sort_keys=True, default=float) + "\n")
    return man


def run(s: Scenario, out, fmt: str | None = None, seed: int | None = None, dispersion_only: bool = False) -> RunManifest:
    """Execute a scenario into ``out``; the manifest is written last.

    On a numerical blow-up the last finite snapshot and a failure manifest are
    written before :class:`EvolutionAborted` propagates.
    """
    out = Path(out)
    fmt = fmt or s.output.format
    seed = s.random_seed if seed is None else seed
    man = RunManifest(json.loads(dump_scenario(s)), version(), "running", seed, _now())
    _prepare_outdir(out)
    r = _Run(s, out, fmt, seed)
    if dispersion_only:
        r.write_dispersion()
        man.status = "ok"
        return _write_manifest(out, man, r.files)

    grid, p = r.grid, r.p
    rng = np.random.default_rng(seed)
    mean = initial_mean(s, grid, p, rng)
    fluct = initial_fluct(s, grid, mean)
    ic = s.integrator
    dt = ic.dt if ic.dt is not None else default_dt(grid, p, float(np.max(np.abs(mean) ** 2)))
    cfg = IntegratorConfig(ic.method, dt, ic.steps, ic.stride)
    state = EvolutionState(grid, mean, fluct)
    log.info("running %s: %d steps, dt = %g", s.name, ic.steps, dt)
    obs = s.output.observables
    try:
        state = evolve(state, p, cfg, [r.observe])
    except EvolutionAborted as exc:
        last = exc.last_good
        r.emit(io.write_snapshot(out / "last_good", last, grid, p, fmt))
        if "trace" in obs:
            r.write_trace(last.fluct is not None)
        man.status = "failed"
        man.error = str(exc)
        man.summary = r.summary
        _write_manifest(out, man, r.files)
        raise

    if "trace" in obs:
        r.write_trace(state.fluct is not None)
    if "snapshot" in obs:
        r.emit(io.write_snapshot(out / "snapshot", state.snapshot(), grid, p, fmt))
    needs_hydro = {"hydro", "horizon", "perturbation"} & set(obs)
    h = to_density_phase(state.mean, grid, p, state.t) if needs_hydro else None
    if "hydro" in obs:
        r.write_hydro(h)
    if "horizon" in obs:
        r.write_horizon(h)
    if "metric" in obs:
        metric_fmt = "json" if fmt == "json" else "csv"
        r.emit(io.write_metric(out / "metric", _metric_for(s, state.snapshot(), grid, p), metric_fmt))
    if "metric_series" in obs:
        r.write_series()
    if "perturbation" in obs:
        r.write_perturbation(h)
    if "pulse" in obs:
        r.write_pulse(state, dt)
    if "kg" in obs:
        r.write_kg(state, dt)
    if s.dispersion is not None:
        r.write_dispersion()
    man.status = "ok"
    man.summary = r.summary
    return _write_manifest(out, man, r.files)


def verify_manifest(out) -> list[str]:
    """Problems found comparing a run directory with its manifest (empty when consistent)."""
    out = Path(out)
    man = json.loads((out / MANIFEST).read_text())
    listed = {a["path"]: a for a in man["artifacts"]}
    problems = []
    for f in out.iterdir():
        if f.name == MANIFEST or f.name.startswith("."):
            continue
        if f.name not in listed:
            problems.append(f"unlisted file {f.name}")
        elif io.sha256(f) != listed[f.name]["sha256"]:
            problems.append(f"checksum mismatch for {f.name}")
    for name in listed:
        if not (out / name).exists():
            problems.append(f"missing file {name}")
    return problems
