"""Effective spacetime metrics, Klein-Gordon residual and acoustic horizons.

A metric is stored per site as a symmetric ``(D+1, D+1)`` matrix, index 0
being time. All metrics carry the conformal factor ``Omega = sqrt(2 n J a^2 / U)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, HistoryError, UnsupportedConfigurationError, ValidityWarning
from .hydro import HydroState
from .lattice import LatticeGrid, _axis_flux, _diff, neighbor
from .params import EXPONENTIAL, SINUSOIDAL, BHParams

SUPERFLUID = "superfluid"
HOMOGENEOUS = "homogeneous"
MOTT = "mott"
FLRW = "flrw"
MINKOWSKI_PLUS_H = "minkowski_plus_h"
GRAVITATIONAL_WAVE = "gravitational_wave"

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class MetricField:
    grid: LatticeGrid
    g: np.ndarray  # shape (*grid.shape, D+1, D+1)
    conformal: np.ndarray
    kind: str
    t: float = 0.0

    @property
    def dims_spacetime(self) -> int:
        return self.g.shape[-1]

    def det(self) -> np.ndarray:
        return np.linalg.det(self.g)

    def inverse(self) -> np.ndarray:
        """Inverse metric; sites where ``g_00`` degenerates come back as NaN."""
        mask = self.degenerate()
        safe = np.where(mask[..., None, None], np.eye(self.dims_spacetime), self.g)
        inv = np.linalg.inv(safe)
        inv[mask] = np.nan
        return inv

    def degenerate(self) -> np.ndarray:
        """Horizon-like sites: ``|g_00|`` or ``|det g|`` vanishes (relative 1e-12)."""
        g00 = np.abs(self.g[..., 0, 0])
        scale = np.max(np.abs(self.g), axis=(-2, -1))
        return (g00 <= DEGENERATE_TOL * scale) | (np.abs(self.det()) < DEGENERATE_TOL)

    def negative_eigenvalues(self) -> np.ndarray:
        """Per-site count of negative eigenvalues (1 means Lorentzian signature)."""
        return np.sum(np.linalg.eigvalsh(self.g) < 0, axis=-1)

    def __add__(self, other: "MetricField") -> "MetricField":
        return MetricField(self.grid, self.g + other.g, self.conformal, self.kind, self.t)


def _assemble(grid, omega, g00, g0l, gll):
    D = grid.dims
    g = np.zeros(grid.shape + (D + 1, D + 1))
    g[..., 0, 0] = g00
    for l in range(D):
        g[..., 0, l + 1] = g0l[l]
        g[..., l + 1, 0] = g0l[l]
        g[..., l + 1, l + 1] = gll
    return g * np.asarray(omega)[..., None, None]


def conformal_factor(n, p: BHParams, J=None):
    J = p.J0 if J is None else J
    return np.sqrt(2 * np.asarray(n) * J * p.a**2 / p.U)


def superfluid_metric(h: HydroState, p: BHParams) -> MetricField:
    """``Omega [[-(c^2 - v.v), -v^T], [-v, 1]]`` with local ``Omega, c, v``."""
    if np.min(h.n) <= 0:
        raise ConfigError("superfluid metric needs positive density everywhere")
    omega = conformal_factor(h.n, p, p.J(h.t))
    g = _assemble(h.grid, omega, -(h.c**2 - h.speed2), -h.v, 1.0)
    return MetricField(h.grid, g, omega, SUPERFLUID, h.t)


def homogeneous_metric(n, grid: LatticeGrid, p: BHParams, kind: str = HOMOGENEOUS, t: float = 0.0) -> MetricField:
    """``Omega diag(-c^2, 1, ..., 1)``; ``kind="mott"`` tags the density-fluctuation metric."""
    if kind not in (HOMOGENEOUS, MOTT):
        raise ConfigError(f"homogeneous metric kind must be homogeneous or mott, got {kind!r}")
    n = np.broadcast_to(np.asarray(n, dtype=float), grid.shape)
    if np.min(n) <= 0:
        raise ConfigError("homogeneous metric needs positive density")
    J = p.J(t)
    omega = conformal_factor(n, p, J)
    c2 = 2 * J * n * p.U * p.a**2
    zero = np.zeros((grid.dims,) + grid.shape)
    return MetricField(grid, _assemble(grid, omega, -c2, zero, 1.0), omega, kind, t)


def flrw_metric(h: HydroState, p: BHParams, t: float) -> MetricField:
    """Superfluid metric at ``J0`` with spatial block scaled by ``exp(H t)``."""
    if p.schedule.kind != EXPONENTIAL:
        raise ConfigError("FLRW metric needs the exponential tunneling schedule")
    omega = conformal_factor(h.n, p, p.J0)
    c2 = 2 * p.J0 * h.n * p.U * p.a**2
    g = _assemble(h.grid, omega, -(c2 - h.speed2), -h.v, np.exp(p.schedule.H * t))
    return MetricField(h.grid, g, omega, FLRW, t)


def perturbation_metric(n_field, grid: LatticeGrid, p: BHParams, n_ref: float) -> MetricField:
    """First-order deviation ``h = sqrt(J a^2 / (2 n U)) eps diag(-3 c^2, 1, ...)``, ``eps = n - n_ref``.

    Add it to ``homogeneous_metric(n_ref, ...)`` to get the full metric.
    """
    eps = np.asarray(n_field, dtype=float) - n_ref
    if np.max(np.abs(eps)) / n_ref >= 0.1:
        warnings.warn(
            "density deviation exceeds 10% of the reference; first-order metric is unreliable",
            ValidityWarning,
            stacklevel=2,
        )
    c2 = 2 * p.J0 * n_ref * p.U * p.a**2
    scale = np.sqrt(p.J0 * p.a**2 / (2 * n_ref * p.U)) * eps
    zero = np.zeros((grid.dims,) + grid.shape)
    g = _assemble(grid, scale, -3 * c2, zero, 1.0)
    return MetricField(grid, g, scale, MINKOWSKI_PLUS_H)


def gw_metric(grid: LatticeGrid, p: BHParams, t: float, n: float) -> MetricField:
    """1D ``Omega0 diag(-c0^2, 1 + eps sin(nu t))`` for the sinusoidal schedule."""
    if grid.dims != 1:
        raise UnsupportedConfigurationError("the gravitational-wave metric is defined for 1D lattices only")
    if p.schedule.kind != SINUSOIDAL:
        raise ConfigError("gravitational-wave metric needs the sinusoidal tunneling schedule")
    s = p.schedule
    nn = np.full(grid.shape, float(n))
    omega = conformal_factor(nn, p, p.J0)
    c2 = 2 * p.J0 * nn * p.U * p.a**2
    g = _assemble(grid, omega, -c2, np.zeros((1,) + grid.shape), 1 + s.eps * np.sin(s.nu * t))
    return MetricField(grid, g, omega, GRAVITATIONAL_WAVE, t)


def line_element(m: MetricField, site: Sequence[int], dt: float, dx: Sequence[float]) -> float:
    """``g_{mu nu} dx^mu dx^nu`` at one site with ``dx^0 = dt``."""
    x = np.concatenate([[dt], np.asarray(dx, dtype=float)])
    if len(x) != m.dims_spacetime:
        raise ConfigError(f"displacement has {len(x) - 1} spatial components, metric needs {m.dims_spacetime - 1}")
    return float(x @ m.g[tuple(site)] @ x)


def _densitized(m: MetricField):
    """``sqrt(-g) g^{mu nu}`` per site and ``sqrt(-g)``; degenerate sites are NaN."""
    det = m.det()
    root = np.sqrt(np.where(det < 0, -det, np.nan))
    return root[..., None, None] * m.inverse(), root


def kg_residual(dphi_levels, dt: float, metric, normalize: bool = False):
    """Covariant massless Klein-Gordon operator on the middle of three time levels.

    ``(1/sqrt(-g)) d_mu (sqrt(-g) g^{mu nu} d_nu dphi)`` with:
      time-time and diagonal space-space terms in face-averaged (flux) form,
      mixed terms with composed central differences.
    ``metric`` is one static :class:`MetricField` or a sequence of three, one
    per time level. Degenerate (horizon) sites are NaN in the output.

    With ``normalize=True`` also returns ``|res| / |time term|`` over the
    unmasked sites, where the time term is the ``mu = nu = 0`` contribution.
    """
    if len(dphi_levels) < 3:
        raise HistoryError(f"need three time levels, got {len(dphi_levels)}")
    f0, f1, f2 = (np.asarray(x, dtype=float) for x in dphi_levels[-3:])
    metrics = list(metric) if isinstance(metric, (list, tuple)) else [metric] * 3
    if len(metrics) < 3:
        raise HistoryError("need one metric per time level")
    m0, m1, m2 = metrics[-3:]
    grid = m1.grid
    D = grid.dims
    (A0, r0), (A1, r1), (A2, r2) = (_densitized(m) for m in (m0, m1, m2))

    # time-time: flux form with face coefficients averaged between levels
    a_plus = 0.5 * (A1[..., 0, 0] + A2[..., 0, 0])
    a_minus = 0.5 * (A0[..., 0, 0] + A1[..., 0, 0])
    tt = (a_plus * (f2 - f1) - a_minus * (f1 - f0)) / dt**2

    mixed = np.zeros(grid.shape)
    ft = (f2 - f0) / (2 * dt)
    for l in range(D):
        # d_t (A^{0l} d_l f)
        mixed += (A2[..., 0, l + 1] * _diff(f2, grid, l) - A0[..., 0, l + 1] * _diff(f0, grid, l)) / (2 * dt)
        # d_l (A^{l0} d_t f)
        mixed += _diff(A1[..., l + 1, 0] * ft, grid, l)

    space = np.zeros(grid.shape)
    for l in range(D):
        for mm in range(D):
            coeff = A1[..., l + 1, mm + 1]
            if l == mm:
                space += _axis_flux(coeff, f1, grid, l)
            else:
                space += _diff(coeff * _diff(f1, grid, mm), grid, l)

    res = (tt + mixed + space) / r1
    if not normalize:
        return res
    ok = np.isfinite(res)
    time_term = tt / r1
    denom = np.linalg.norm(time_term[ok])
    return res, float(np.linalg.norm(res[ok]) / denom) if denom > 0 else np.inf


@dataclass
class HorizonReport:
    """Adjacent site pairs where ``c^2 - |v|^2`` changes sign.

    ``condition`` holds ``U/J - 2 a^2 |grad phi|^2 / n`` per site; its sign
    changes mark ``condition_bonds``.
    """

    bonds: list = field(default_factory=list)
    condition_bonds: list = field(default_factory=list)
    mach: np.ndarray = None
    condition: np.ndarray = None

    def to_dict(self) -> dict:
        return {
            "bonds": [[list(a), list(b)] for a, b in self.bonds],
            "condition_bonds": [[list(a), list(b)] for a, b in self.condition_bonds],
            "mach_max": float(np.max(self.mach)),
            "mach": np.ravel(self.mach).tolist(),
            "condition": np.ravel(self.condition).tolist(),
        }


def _sign_change_bonds(s, grid):
    bonds = []
    for ax in range(grid.dims):
        nxt = neighbor(s, grid, ax, 1, np.nan)
        flip = ((s > 0) & (nxt <= 0)) | ((s <= 0) & (nxt > 0))
        for idx in np.argwhere(flip):
            a = tuple(int(i) for i in idx)
            b = list(a)
            b[ax] = (b[ax] + 1) % grid.shape[ax]
            bonds.append((a, tuple(b)))
    return sorted(bonds)


def horizon_scan(h: HydroState, p: BHParams) -> HorizonReport:
    grid = h.grid
    J = p.J(h.t)
    s = h.c**2 - h.speed2
    condition = p.U / J - 2 * p.a**2 * np.sum(h.grad_phi**2, axis=0) / h.n
    return HorizonReport(
        bonds=_sign_change_bonds(s, grid),
        condition_bonds=_sign_change_bonds(condition, grid),
        mach=np.sqrt(h.speed2) / h.c,
        condition=condition,
    )
