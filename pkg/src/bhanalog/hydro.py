"""Density-phase representation and lattice hydrodynamics.

Every ``div(kappa grad f)`` with a site-dependent coefficient uses the
face-averaged stencil of :func:`bhanalog.lattice.weighted_laplacian`, which
reduces to the three-point Laplacian on homogeneous backgrounds. Plain
divergences of vector fields use composed central differences.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, HistoryError, PhaseWindingError, ValidityWarning, VacuumSiteError
from .lattice import (
    LatticeGrid,
    _divergence,
    _gradient,
    _laplacian,
    _weighted_laplacian,
    check_field,
    neighbor,
)
from .params import BHParams

MIN_FILLING = 10.0
MOTT_RATIO = 100.0
MAX_PHASE_STEP = 0.95 * np.pi

PRINTED = "printed"
KINETIC = "kinetic"


@dataclass(frozen=True)
class HydroState:
    grid: LatticeGrid
    n: np.ndarray
    phi: np.ndarray
    grad_phi: np.ndarray
    v: np.ndarray
    c: np.ndarray
    xi: np.ndarray
    t: float = 0.0

    @property
    def speed2(self) -> np.ndarray:
        return np.sum(self.v**2, axis=0)


@dataclass(frozen=True)
class FluctHydro:
    dn: np.ndarray
    dphi: np.ndarray


def _bond_phase(b, grid, axis):
    """Wrapped phase difference ``phi[j+1] - phi[j]`` along ``axis``."""
    return np.angle(neighbor(b, grid, axis, 1, 0.0) * b.conj())


def _phase_gradient(b, grid):
    comps = []
    for ax in range(grid.dims):
        fwd = _bond_phase(b, grid, ax)
        if not grid.periodic:
            # the last bond leads into the ghost layer; extrapolate the phase linearly
            last = [slice(None)] * grid.dims
            prev = [slice(None)] * grid.dims
            last[ax], prev[ax] = -1, -2
            fwd[tuple(last)] = fwd[tuple(prev)]
        bad = np.abs(fwd) > MAX_PHASE_STEP
        if bad.any():
            site = tuple(int(i) for i in np.argwhere(bad)[0])
            raise PhaseWindingError(
                f"phase step {fwd[site]:.3f} rad at site {site} along axis {ax} is too large to unwrap"
            )
        bwd = neighbor(fwd, grid, ax, -1, np.nan)
        if not grid.periodic:
            first = [slice(None)] * grid.dims
            first[ax] = 0
            bwd[tuple(first)] = fwd[tuple(first)]
        comps.append((fwd + bwd) / (2 * grid.a))
    return np.stack(comps)


def unwrap_phase(b) -> np.ndarray:
    """Phase unwrapped axis by axis from the corner site ``(0, 0, 0)``."""
    phi = np.angle(b)
    for ax in range(phi.ndim):
        phi = np.unwrap(phi, axis=ax)
    return phi


def to_density_phase(b, grid: LatticeGrid, p: BHParams, t: float = 0.0) -> HydroState:
    """Split ``b = sqrt(n) exp(i phi)`` and derive velocity, sound speed, healing length."""
    if grid.a != p.a:
        raise ConfigError(f"grid spacing {grid.a} differs from parameter spacing {p.a}")
    b = check_field(np.asarray(b, dtype=complex), grid)
    amp = np.abs(b)
    if amp.min() < 1e-12:
        site = tuple(int(i) for i in np.unravel_index(np.argmin(amp), amp.shape))
        raise VacuumSiteError(f"mean field vanishes at site {site}")
    n = amp**2
    if n.min() < MIN_FILLING:
        warnings.warn(
            f"minimum filling {n.min():.3g} is below {MIN_FILLING:g}; density-phase picture needs n >> 1",
            ValidityWarning,
            stacklevel=2,
        )
    grad_phi = _phase_gradient(b, grid)
    J = p.J(t)
    return HydroState(
        grid=grid,
        n=n,
        phi=unwrap_phase(b),
        grad_phi=grad_phi,
        v=2 * J * p.a**2 * grad_phi,
        c=p.sound_speed(n, t),
        xi=p.healing_length(n, t),
        t=t,
    )


def fluct_to_hydro(db, h: HydroState) -> FluctHydro:
    """``db = i dphi + dn / (2n)`` solved for real ``dn`` and ``dphi``."""
    db = np.asarray(db, dtype=complex)
    return FluctHydro(dn=2 * h.n * db.real, dphi=db.imag.copy())


def hydro_to_fluct(f: FluctHydro, h: HydroState) -> np.ndarray:
    return 1j * f.dphi + f.dn / (2 * h.n)


def mean_density_rhs(h: HydroState, p: BHParams) -> np.ndarray:
    """Continuity: ``dn/dt = -div(n v)``."""
    return -_divergence(h.n * h.v, h.grid)


def _quantum_pressure(n, grid, p, t):
    """Density form ``Ja^2 [lap n / 2n - |grad n|^2 / 4n^2]`` of the kinetic quantum potential."""
    grad_n = _gradient(n, grid)
    return p.J(t) * p.a**2 * (_laplacian(n, grid) / (2 * n) - np.sum(grad_n**2, axis=0) / (4 * n**2))


def mean_phase_rhs(h: HydroState, p: BHParams) -> np.ndarray:
    """``dphi/dt = -Ja^2 [|grad phi|^2 - lap n/2n + |grad n|^2/4n^2] + (2D J + U/2 + mu) - U n``."""
    J = p.J(h.t)
    kinetic = -J * p.a**2 * np.sum(h.grad_phi**2, axis=0) + _quantum_pressure(h.n, h.grid, p, h.t)
    return kinetic + (2 * h.grid.dims * J + p.U / 2 + p.mu) - p.U * h.n


def quantum_potential(n, grid: LatticeGrid, p: BHParams, t: float = 0.0, convention: str = PRINTED):
    """``V_Q = pref * lap(sqrt n) / sqrt n`` with ``pref = J^2`` (printed) or ``J a^2`` (kinetic)."""
    n = check_field(np.asarray(n, dtype=float), grid)
    s = np.sqrt(n)
    J = p.J(t)
    if convention == PRINTED:
        pref = J**2
    elif convention == KINETIC:
        pref = J * p.a**2
    else:
        raise ConfigError(f"unknown quantum-potential convention {convention!r}")
    return pref * _laplacian(s, grid) / s


def euler_rhs(h: HydroState, p: BHParams, convention: str = PRINTED) -> np.ndarray:
    """Momentum equation solved for ``dv/dt``.

    printed: ``-(v . grad) v + J a^2 grad(V_Q - U n)`` with the printed ``J^2`` potential.
    kinetic: ``-grad(|v|^2 / 2) + 2 J a^2 grad(V_Q - U n)`` with the density-form
    ``J a^2`` potential; this equals ``2 J a^2 grad(mean_phase_rhs)`` on the lattice.
    The constant ``mu + 2D J + U/2`` drops out of every gradient.
    """
    grid, J = h.grid, p.J(h.t)
    if convention == PRINTED:
        vq = quantum_potential(h.n, grid, p, h.t, PRINTED)
        adv = np.stack([np.sum(h.v * _gradient(h.v[l], grid), axis=0) for l in range(grid.dims)])
        return -adv + J * p.a**2 * _gradient(vq - p.U * h.n, grid)
    if convention == KINETIC:
        vq = _quantum_pressure(h.n, grid, p, h.t)
        return -_gradient(0.5 * h.speed2, grid) + 2 * J * p.a**2 * _gradient(vq - p.U * h.n, grid)
    raise ConfigError(f"unknown quantum-potential convention {convention!r}")


def fluct_density_rhs(f: FluctHydro, h: HydroState, p: BHParams) -> np.ndarray:
    """``d(dn)/dt = -div(v dn + 2 J a^2 n grad dphi)``."""
    J = p.J(h.t)
    return -_divergence(h.v * f.dn, h.grid) - _weighted_laplacian(2 * J * p.a**2 * h.n, f.dphi, h.grid)


def fluct_phase_rhs(f: FluctHydro, h: HydroState, p: BHParams, quantum_pressure: bool = True) -> np.ndarray:
    """``d(dphi)/dt = -v.grad dphi - c^2/(2Ja^2 n) dn + c^2 xi^2/(8Ja^2 n) div(n grad(dn/n))``.

    ``quantum_pressure=False`` drops the last term (hydrodynamic limit).
    """
    grid, J = h.grid, p.J(h.t)
    out = -np.sum(h.v * _gradient(f.dphi, grid), axis=0) - h.c**2 / (2 * J * p.a**2 * h.n) * f.dn
    if quantum_pressure:
        pref = h.c**2 * h.xi**2 / (8 * J * p.a**2 * h.n)
        out = out + pref * _weighted_laplacian(h.n, f.dn / h.n, grid)
    return out


def _centered(levels: Sequence[np.ndarray], dt: float):
    if len(levels) < 3:
        raise HistoryError(f"need three time levels, got {len(levels)}")
    lo, mid, hi = levels[-3], levels[-2], levels[-1]
    return mid, (hi - lo) / (2 * dt), (hi - 2 * mid + lo) / dt**2


def hydrodynamic_dn_estimate(dphi_levels, dt: float, h: HydroState, p: BHParams) -> np.ndarray:
    """``dn ~ -2 J a^2 n (d(dphi)/dt + v . grad dphi) / c^2`` at the middle level."""
    mid, dphi_dt, _ = _centered(dphi_levels, dt)
    J = p.J(h.t)
    conv = np.sum(h.v * _gradient(mid, h.grid), axis=0)
    return -2 * J * p.a**2 * h.n * (dphi_dt + conv) / h.c**2


def mott_wave_residual(dn_levels, dt: float, h: HydroState, p: BHParams) -> np.ndarray:
    """Residual of ``d^2(dn)/dt^2 - div(c^2 grad dn) = 0`` at the middle level."""
    ratio = p.U / p.J(h.t)
    if ratio < MOTT_RATIO:
        warnings.warn(
            f"U/J = {ratio:.3g} is below the Mott threshold {MOTT_RATIO:g}",
            ValidityWarning,
            stacklevel=2,
        )
    mid, _, dn_tt = _centered(dn_levels, dt)
    return dn_tt - _weighted_laplacian(h.c**2, mid, h.grid)
