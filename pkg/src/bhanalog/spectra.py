"""Lattice dispersion relations and numerical dispersion extraction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import EvolutionState, IntegratorConfig, evolve, homogeneous
from .errors import ConfigError, ExtractionError
from .lattice import LatticeGrid
from .params import BHParams

OMEGA = "omega"
OMEGA_SQUARED = "omega_squared"


@dataclass(frozen=True)
class DispersionPoint:
    """A frequency at wavevector ``k``.

    ``value`` is the raw right-hand side of the closed form; ``interpretation``
    says whether it was read as ``omega`` or ``omega**2`` to produce ``omega``.
    """

    k: tuple
    omega: float
    interpretation: str = OMEGA
    value: Optional[float] = None
    uncertainty: Optional[float] = None


def _tag(k, value, interpretation):
    if interpretation == OMEGA_SQUARED:
        return DispersionPoint(tuple(map(float, k)), float(np.sqrt(value)), OMEGA_SQUARED, float(value))
    if interpretation == OMEGA:
        return DispersionPoint(tuple(map(float, k)), float(value), OMEGA, float(value))
    raise ConfigError(f"unknown interpretation {interpretation!r}")


def lattice_dispersion(k, p: BHParams, n: float, interpretation: str = OMEGA_SQUARED) -> DispersionPoint:
    """``sum_l 4 n U J sin^2(k_l a/2) + 4 J^2 sin^4(k_l a/2)``."""
    s2 = np.sin(np.asarray(k, dtype=float) * p.a / 2) ** 2
    value = np.sum(4 * n * p.U * p.J0 * s2 + 4 * p.J0**2 * s2**2)
    return _tag(k, value, interpretation)


def bogoliubov_limit(k, p: BHParams, n: float, interpretation: str = OMEGA_SQUARED) -> DispersionPoint:
    """``sum_l (n U J a^2 + J^2 a^4 k_l^2 / 4) k_l^2``."""
    k = np.asarray(k, dtype=float)
    value = np.sum((n * p.U * p.J0 * p.a**2 + p.J0**2 * p.a**4 * k**2 / 4) * k**2)
    return _tag(k, value, interpretation)


def bdg_oracle(k, p: BHParams, n: float) -> float:
    """Positive eigenfrequency of the per-mode linearized fluctuation block.

    ``omega = sqrt(eps (eps + 2 U n))`` with ``eps = sum_l 4 J sin^2(k_l a/2)``.
    """
    eps = np.sum(4 * p.J0 * np.sin(np.asarray(k, dtype=float) * p.a / 2) ** 2)
    return float(np.sqrt(eps * (eps + 2 * p.U * n)))


def peak_frequency(signal, dt: float, min_contrast: float = 10.0):
    """Dominant angular frequency of a real time series.

    Hann window, then a three-point Gaussian (log-parabolic) fit around the
    largest bin. Returns ``(omega, uncertainty)``; the uncertainty is the
    spread between log-parabolic and plain parabolic interpolation, floored
    at 1 % of a bin.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < 8:
        raise ExtractionError("time series too short for spectral extraction")
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
    bin_w = 2 * np.pi / (len(x) * dt)
    i = int(np.argmax(spec))
    peak = spec[i]
    if peak == 0:
        return 0.0, bin_w / 2
    floor = np.median(spec)
    if floor > 0 and peak / floor < min_contrast:
        raise ExtractionError(f"no clear spectral peak (peak/floor = {peak / floor:.2f})")
    if i == 0:
        return 0.0, bin_w / 2
    if i == len(spec) - 1:
        return i * bin_w, bin_w / 2
    a, b, c = spec[i - 1], spec[i], spec[i + 1]
    lin = 0.5 * (a - c) / (a - 2 * b + c)
    if min(a, c) > 0:
        la, lb, lc = np.log(a), np.log(b), np.log(c)
        delta = 0.5 * (la - lc) / (la - 2 * lb + lc)
    else:
        delta = lin
    return (i + delta) * bin_w, max(abs(delta - lin), 0.01) * bin_w


def extract_dispersion(
    grid: LatticeGrid,
    p: BHParams,
    n: float,
    modes: Sequence[Sequence[int]],
    amplitude: float = 1e-6,
    periods: float = 40.0,
    samples_per_period: int = 32,
    site: Sequence[int] | None = None,
) -> list[DispersionPoint]:
    """Measure ``omega(k)`` by seeding ``db = amplitude * exp(i k.x)`` and evolving.

    The background is homogeneous at filling ``n`` with the stationary chemical
    potential. The density channel ``Re db`` at one site is Fourier analysed.
    Modes are processed in the given order.
    """
    if p.schedule.kind != "constant":
        raise ConfigError("dispersion extraction needs a constant tunneling schedule")
    p = p.with_mu(p.stationary_mu(n, grid.dims))
    site = tuple(site) if site is not None else (0,) * grid.dims
    b0 = homogeneous(grid, n)
    # fastest mode present anywhere on the grid sets the explicit stability limit
    eps_max = 4 * p.J0 * grid.dims
    omega_max = np.sqrt(eps_max * (eps_max + 2 * p.U * n))
    out = []
    for m in modes:
        k = grid.wavevector(m)
        expected = bdg_oracle(k, p, n)
        if expected > 0:
            period = 2 * np.pi / expected
            dt = min(period / samples_per_period, 1.0 / omega_max)
            steps = int(np.ceil(periods * period / dt))
        else:
            dt = 1.0 / omega_max
            steps = 256
        series = np.empty(steps + 1)

        def record(i, snap, series=series):
            series[i] = snap.fluct[site].real

        state = EvolutionState(grid, b0, amplitude * grid.mode_wave(m))
        evolve(state, p, IntegratorConfig(dt=dt, steps=steps, stride=1, validity_warnings=False), [record])
        if np.ptp(series) <= 1e-12 * amplitude:
            omega, unc = 0.0, np.pi / (steps * dt)
        else:
            omega, unc = peak_frequency(series - series.mean(), dt)
        out.append(DispersionPoint(tuple(map(float, k)), float(omega), OMEGA, None, float(unc)))
    return out
