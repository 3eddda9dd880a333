"""Mean-field (discrete GPE) and linearized fluctuation evolution.

The fluctuation ``db`` is the relative fluctuation of the decomposition
``b_hat = b (1 + db)``, evolved as a classical complex test field.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import (
    ConfigError,
    EvolutionAborted,
    NumericError,
    StabilityWarning,
    VacuumSiteError,
)
from .lattice import LatticeGrid, _gradient, _laplacian, check_field, neighbor
from .params import BHParams

VACUUM_FLOOR = 1e-12
STABILITY_C = 0.5

RK4 = "rk4"
SPLIT = "split"


@dataclass(frozen=True)
class Snapshot:
    """Immutable copy of the evolving fields at one time."""

    t: float
    mean: np.ndarray
    fluct: Optional[np.ndarray] = None

    @classmethod
    def capture(cls, t, mean, fluct=None):
        mean = np.array(mean, copy=True)
        mean.flags.writeable = False
        if fluct is not None:
            fluct = np.array(fluct, copy=True)
            fluct.flags.writeable = False
        return cls(float(t), mean, fluct)


@dataclass
class EvolutionState:
    grid: LatticeGrid
    mean: np.ndarray
    fluct: Optional[np.ndarray] = None
    t: float = 0.0
    history: deque = field(default_factory=lambda: deque(maxlen=3))

    def __post_init__(self):
        self.mean = check_field(np.asarray(self.mean, dtype=complex), self.grid)
        if self.fluct is not None:
            self.fluct = check_field(np.asarray(self.fluct, dtype=complex), self.grid)

    def snapshot(self) -> Snapshot:
        return Snapshot.capture(self.t, self.mean, self.fluct)

    def record(self):
        self.history.append(self.snapshot())


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = RK4
    dt: float = 1e-3
    steps: int = 1
    stride: int = 1
    validity_warnings: bool = True

    def __post_init__(self):
        if self.method not in (RK4, SPLIT):
            raise ConfigError(f"unknown integrator {self.method!r}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.steps < 0 or self.stride < 1:
            raise ConfigError("steps must be >= 0 and stride >= 1")


def _check_spacing(grid: LatticeGrid, p: BHParams):
    if grid.a != p.a:
        raise ConfigError(f"grid spacing {grid.a} differs from parameter spacing {p.a}")


def _first_bad(arr):
    bad = ~np.isfinite(arr)
    if bad.any():
        return tuple(int(i) for i in np.argwhere(bad)[0])
    return None


def _gpe(b, grid, p, t):
    J = p.J(t)
    n = (b * b.conj()).real
    return (
        1j * J * (p.a**2 * _laplacian(b, grid) + 2 * grid.dims * b)
        - 0.5j * p.U * b * (2 * n - 1)
        + 1j * p.mu * b
    )


def _fluct(b, db, grid, p, t):
    J = p.J(t)
    amp = np.abs(b)
    if amp.min() < VACUUM_FLOOR:
        site = tuple(int(i) for i in np.unravel_index(np.argmin(amp), amp.shape))
        raise VacuumSiteError(f"mean field vanishes at site {site}")
    kin = _laplacian(db, grid) + 2 * np.sum(_gradient(b, grid) / b * _gradient(db, grid), axis=0)
    return 1j * J * p.a**2 * kin - 1j * p.U * amp**2 * (db + db.conj())


def gpe_rhs(b, grid: LatticeGrid, p: BHParams, t: float = 0.0) -> np.ndarray:
    """Right-hand side of the discrete Gross-Pitaevskii equation.

    ``db/dt = iJ(a^2 lap b + 2D b) - i(U/2) b (2|b|^2 - 1) + i mu b``
    """
    _check_spacing(grid, p)
    b = check_field(np.asarray(b, dtype=complex), grid)
    out = _gpe(b, grid, p, t)
    site = _first_bad(out)
    if site is not None:
        raise NumericError(f"non-finite GPE right-hand side at site {site}", site=site)
    return out


def fluct_rhs(b, db, grid: LatticeGrid, p: BHParams, t: float = 0.0) -> np.ndarray:
    """Linearized (Bogoliubov-de Gennes-like) right-hand side for ``db``.

    ``iJa^2 [lap db + 2 (grad b / b) . grad db] - i U n (db + db*)``
    """
    _check_spacing(grid, p)
    b = check_field(np.asarray(b, dtype=complex), grid)
    db = check_field(np.asarray(db, dtype=complex), grid)
    return _fluct(b, db, grid, p, t)


def number(b) -> float:
    return float(np.sum(np.abs(np.ravel(b)) ** 2))


def energy(b, grid: LatticeGrid, p: BHParams, t: float = 0.0) -> float:
    """Classical mean-field energy of the Bose-Hubbard functional.

    Each bond is counted once; the interaction is normal ordered as ``|b|^4``.
    """
    b = check_field(np.asarray(b, dtype=complex), grid)
    hop = 0.0
    for ax in range(grid.dims):
        # the ghost layer is empty on fixed boundaries, so edge bonds drop out
        hop += np.sum(2 * (b.conj() * neighbor(b, grid, ax, 1, 0.0)).real)
    n = np.abs(b) ** 2
    return float(-p.J(t) * hop + 0.5 * p.U * np.sum(n**2) - p.mu * np.sum(n))


def stability_bound(grid: LatticeGrid, p: BHParams, n_max: float, t0=0.0, t1=0.0) -> float:
    return STABILITY_C / (2 * grid.dims * p.J_max(t0, t1) + p.U * n_max)


def default_dt(grid: LatticeGrid, p: BHParams, n_max: float, safety: float = 0.25) -> float:
    return safety / (2 * grid.dims * p.J0 + p.U * n_max)


def _rk4(b, db, grid, p, t, dt):
    if db is None:
        k1 = _gpe(b, grid, p, t)
        k2 = _gpe(b + 0.5 * dt * k1, grid, p, t + 0.5 * dt)
        k3 = _gpe(b + 0.5 * dt * k2, grid, p, t + 0.5 * dt)
        k4 = _gpe(b + dt * k3, grid, p, t + dt)
        return b + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), None
    # mean and fluctuation share every stage so the background is stage-consistent
    k1 = _gpe(b, grid, p, t)
    l1 = _fluct(b, db, grid, p, t)
    b2, d2 = b + 0.5 * dt * k1, db + 0.5 * dt * l1
    k2 = _gpe(b2, grid, p, t + 0.5 * dt)
    l2 = _fluct(b2, d2, grid, p, t + 0.5 * dt)
    b3, d3 = b + 0.5 * dt * k2, db + 0.5 * dt * l2
    k3 = _gpe(b3, grid, p, t + 0.5 * dt)
    l3 = _fluct(b3, d3, grid, p, t + 0.5 * dt)
    b4, d4 = b + dt * k3, db + dt * l3
    k4 = _gpe(b4, grid, p, t + dt)
    l4 = _fluct(b4, d4, grid, p, t + dt)
    return (
        b + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4),
        db + dt / 6 * (l1 + 2 * l2 + 2 * l3 + l4),
    )


def _hopping_symbol(grid: LatticeGrid) -> np.ndarray:
    """Fourier symbol of the neighbour sum, ``sum_l 2 cos(k_l a)``."""
    ks = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(n) for n in grid.shape], indexing="ij")
    return sum(2 * np.cos(k) for k in ks)


def _split(b, grid, p, t, dt, symbol):
    def onsite(b, tau):
        n = np.abs(b) ** 2
        return b * np.exp(-1j * tau * (0.5 * p.U * (2 * n - 1) - p.mu))

    b = onsite(b, 0.5 * dt)
    # the hopping operator commutes with itself at all times, so J(t) integrates exactly
    theta = p.J0 * p.schedule.integral(t, t + dt)
    b = np.fft.ifftn(np.fft.fftn(b) * np.exp(1j * theta * symbol))
    return onsite(b, 0.5 * dt)


def step(state: EvolutionState, p: BHParams, cfg: IntegratorConfig) -> EvolutionState:
    """Advance by one ``dt``; returns a new state, the input is untouched."""
    new = replace(state, history=deque(state.history, maxlen=state.history.maxlen))
    _advance(new, p, cfg, 1, ())
    return new


def evolve(
    state: EvolutionState,
    p: BHParams,
    cfg: IntegratorConfig,
    observers: Iterable[Callable[[int, Snapshot], None]] = (),
) -> EvolutionState:
    """Advance ``cfg.steps`` steps, calling each observer every ``cfg.stride`` steps.

    Observers are called as ``obs(step_index, snapshot)`` including step 0.
    """
    new = replace(
        state,
        mean=state.mean.copy(),
        fluct=None if state.fluct is None else state.fluct.copy(),
        history=deque(state.history, maxlen=state.history.maxlen),
    )
    _advance(new, p, cfg, cfg.steps, tuple(observers))
    return new


def _advance(state, p, cfg, steps, observers):
    grid = state.grid
    _check_spacing(grid, p)
    t0 = state.t
    if cfg.validity_warnings:
        n_max = float(np.max(np.abs(state.mean) ** 2))
        bound = stability_bound(grid, p, n_max, t0, t0 + steps * cfg.dt)
        if cfg.dt > bound:
            warnings.warn(
                f"dt = {cfg.dt:g} exceeds the stability estimate {bound:g}",
                StabilityWarning,
                stacklevel=3,
            )
    symbol = None
    if cfg.method == SPLIT:
        if state.fluct is not None:
            raise ConfigError("the split integrator evolves the mean field only")
        if not grid.periodic:
            raise ConfigError("the split integrator needs a periodic grid")
        symbol = _hopping_symbol(grid)

    b, db = state.mean, state.fluct
    if state.history.maxlen and not state.history:
        state.record()
    for obs in observers:
        obs(0, state.snapshot())
    for i in range(steps):
        t = t0 + i * cfg.dt
        if symbol is not None:
            nb, ndb = _split(b, grid, p, t, cfg.dt, symbol), None
        else:
            nb, ndb = _rk4(b, db, grid, p, t, cfg.dt)
        site = _first_bad(nb)
        if site is None and ndb is not None:
            site = _first_bad(ndb)
        if site is not None:
            raise EvolutionAborted(
                f"non-finite field at site {site} during step {i + 1} (t = {t + cfg.dt:g})",
                site=site,
                last_good=Snapshot.capture(t, b, db),
            )
        b, db = nb, ndb
        state.mean, state.fluct, state.t = b, db, t0 + (i + 1) * cfg.dt
        if state.history.maxlen:
            state.record()
        if observers and (i + 1) % cfg.stride == 0:
            snap = state.snapshot()
            for obs in observers:
                obs(i + 1, snap)
    return state


def homogeneous(grid: LatticeGrid, n: float, phase: float = 0.0) -> np.ndarray:
    return np.full(grid.shape, np.sqrt(n) * np.exp(1j * phase), dtype=complex)
