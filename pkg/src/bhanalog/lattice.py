"""Cubic lattice grid and the central finite-difference operators.

Fields are plain numpy arrays of shape ``grid.shape`` (C order, so the flat
layout is row-major with axis strides). Vector fields carry the component
axis first: shape ``(grid.dims, *grid.shape)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, NumericError

PERIODIC = "periodic"
FIXED = "fixed"


@dataclass(frozen=True)
class LatticeGrid:
    """Discrete spatial arena: 1 to 3 axes, spacing ``a``, boundary rule.

    With ``boundary="fixed"`` every stencil reads the constant ``fill`` from
    the ghost layer outside the grid.
    """

    shape: tuple[int, ...]
    a: float = 1.0
    boundary: str = PERIODIC
    fill: float = 0.0

    def __post_init__(self):
        shape = tuple(int(s) for s in np.atleast_1d(self.shape))
        object.__setattr__(self, "shape", shape)
        if not 1 <= len(shape) <= 3:
            raise DimensionError(f"lattice must have 1 to 3 axes, got {len(shape)}")
        if min(shape) < 3:
            raise DimensionError(f"every axis needs at least 3 sites, got {shape}")
        if not self.a > 0:
            raise DimensionError(f"lattice spacing must be positive, got {self.a}")
        if self.boundary not in (PERIODIC, FIXED):
            raise DimensionError(f"unknown boundary rule {self.boundary!r}")

    @property
    def dims(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    def flat_index(self, site: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(site), self.shape))

    def site(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def coords(self) -> np.ndarray:
        """Site positions, shape ``(dims, *shape)``, origin at site 0."""
        axes = [np.arange(n) * self.a for n in self.shape]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def wavevector(self, modes: Sequence[int]) -> np.ndarray:
        """Commensurate wavevector ``k_l = 2 pi m_l / (L_l a)``."""
        modes = list(modes) + [0] * (self.dims - len(modes))
        if len(modes) != self.dims:
            raise DimensionError(f"{len(modes)} mode numbers for a {self.dims}-axis grid")
        return np.array([2 * np.pi * m / (n * self.a) for m, n in zip(modes, self.shape)])

    def plane_wave(self, k: Sequence[float]) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        phase = np.tensordot(k, self.coords(), axes=1)
        return np.exp(1j * phase)

    def mode_wave(self, modes: Sequence[int]) -> np.ndarray:
        """``exp(i k.x)`` for the commensurate wavevector of ``modes``.

        The phase ``2 pi m j / L`` is reduced modulo ``L`` in integers first, so
        every sample is accurate to rounding even for large ``m j``.
        """
        modes = list(modes) + [0] * (self.dims - len(modes))
        if len(modes) != self.dims:
            raise DimensionError(f"{len(modes)} mode numbers for a {self.dims}-axis grid")
        idx = np.indices(self.shape)
        turns = sum(((int(m) * idx[ax]) % n) / n for ax, (m, n) in enumerate(zip(modes, self.shape)))
        return np.exp(2j * np.pi * turns)

    def zeros(self, dtype=float) -> np.ndarray:
        return np.zeros(self.shape, dtype=dtype)


def check_field(f, grid: LatticeGrid, vector: bool = False) -> np.ndarray:
    f = np.asarray(f)
    expected = ((grid.dims,) if vector else ()) + grid.shape
    if f.shape != expected:
        raise DimensionError(f"field shape {f.shape} does not match grid {expected}")
    bad = ~np.isfinite(f)
    if bad.any():
        first = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NumericError(f"non-finite field entry at {first}", site=first)
    return f


def neighbor(f: np.ndarray, grid: LatticeGrid, axis: int, offset: int, fill=None) -> np.ndarray:
    """Value at site ``j + offset * e_axis`` for every site ``j``."""
    if grid.periodic:
        return np.roll(f, -offset, axis=axis)
    out = np.full_like(f, grid.fill if fill is None else fill)
    n = f.shape[axis]
    dst = [slice(None)] * f.ndim
    src = [slice(None)] * f.ndim
    if offset > 0:
        dst[axis], src[axis] = slice(0, n - offset), slice(offset, n)
    else:
        dst[axis], src[axis] = slice(-offset, n), slice(0, n + offset)
    out[tuple(dst)] = f[tuple(src)]
    return out


def _diff(f, grid, axis, fill=None):
    return (neighbor(f, grid, axis, 1, fill) - neighbor(f, grid, axis, -1, fill)) / (2 * grid.a)


def _gradient(f, grid, fill=None):
    return np.stack([_diff(f, grid, ax, fill) for ax in range(grid.dims)])


def _laplacian(f, grid, fill=None):
    out = -2.0 * grid.dims * f
    for ax in range(grid.dims):
        out = out + neighbor(f, grid, ax, 1, fill) + neighbor(f, grid, ax, -1, fill)
    return out / grid.a**2


def _divergence(v, grid, fill=None):
    out = _diff(v[0], grid, 0, fill)
    for ax in range(1, grid.dims):
        out = out + _diff(v[ax], grid, ax, fill)
    return out


def _edge_neighbor(f, grid, axis, offset):
    """Like :func:`neighbor` but the ghost layer repeats the edge value."""
    if grid.periodic:
        return np.roll(f, -offset, axis=axis)
    idx = np.clip(np.arange(f.shape[axis]) + offset, 0, f.shape[axis] - 1)
    return np.take(f, idx, axis=axis)


def _axis_flux(coeff, f, grid, axis, fill=None):
    """Face-averaged ``d_axis(coeff d_axis f)`` along one axis."""
    kp = 0.5 * (coeff + _edge_neighbor(coeff, grid, axis, 1))
    km = 0.5 * (coeff + _edge_neighbor(coeff, grid, axis, -1))
    fp = neighbor(f, grid, axis, 1, fill)
    fm = neighbor(f, grid, axis, -1, fill)
    return (kp * (fp - f) - km * (f - fm)) / grid.a**2


def _weighted_laplacian(coeff, f, grid, fill=None):
    if np.ndim(coeff) == 0:
        return coeff * _laplacian(f, grid, fill)
    coeff = np.asarray(coeff, dtype=float)
    out = _axis_flux(coeff, f, grid, 0, fill)
    for ax in range(1, grid.dims):
        out = out + _axis_flux(coeff, f, grid, ax, fill)
    return out


def gradient(f, grid: LatticeGrid) -> np.ndarray:
    """Central difference ``(f[l+1] - f[l-1]) / 2a`` along every axis."""
    return _gradient(check_field(f, grid), grid)


def laplacian(f, grid: LatticeGrid) -> np.ndarray:
    """Three-point Laplacian summed over axes."""
    return _laplacian(check_field(f, grid), grid)


def divergence(v, grid: LatticeGrid) -> np.ndarray:
    """Sum over axes of central differences of each vector component."""
    return _divergence(check_field(v, grid, vector=True), grid)


def weighted_laplacian(coeff, f, grid: LatticeGrid) -> np.ndarray:
    """Self-adjoint ``div(coeff grad f)`` with face-averaged coefficients.

    Reduces to ``coeff * laplacian(f)`` for a constant coefficient. On fixed
    boundaries the ghost coefficient equals the edge value.
    """
    f = check_field(f, grid)
    if np.ndim(coeff) != 0:
        coeff = check_field(coeff, grid)
    return _weighted_laplacian(coeff, f, grid)


def total(f) -> complex | float:
    """Deterministic site sum (fixed pairwise association order)."""
    return np.sum(np.ravel(f))
