import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bhanalog.errors import DimensionError, NumericError
from bhanalog.lattice import LatticeGrid, divergence, gradient, laplacian, total, weighted_laplacian


def test_grid_invariants():
    g = LatticeGrid((4, 5, 6), a=0.5)
    assert g.dims == 3 and g.size == 120
    assert g.site(g.flat_index((1, 2, 3))) == (1, 2, 3)
    assert g.coords().shape == (3, 4, 5, 6)
    with pytest.raises(DimensionError):
        LatticeGrid((2,))
    with pytest.raises(DimensionError):
        LatticeGrid((4,), a=0.0)
    with pytest.raises(DimensionError):
        LatticeGrid((4, 4, 4, 4))
    with pytest.raises(DimensionError):
        LatticeGrid((8,), boundary="reflecting")


def test_gradient_constant_and_sine():
    g = LatticeGrid((32,))
    assert np.all(gradient(np.full(32, 5.0), g) == 0)
    k = 2 * np.pi / 32
    x = g.coords()[0]
    np.testing.assert_allclose(gradient(np.sin(k * x), g)[0], np.cos(k * x) * np.sin(k), atol=1e-14)


def test_gradient_ramp_fixed():
    g = LatticeGrid((10,), boundary="fixed")
    d = gradient(np.arange(10.0), g)[0]
    np.testing.assert_allclose(d[1:-1], 1.0)


def test_laplacian_examples():
    g = LatticeGrid((8,))
    assert np.all(laplacian(np.full(8, 3.0), g) == 0)
    x = g.coords()[0]
    f = np.exp(1j * np.pi / 2 * x)
    np.testing.assert_allclose(laplacian(f, g), -2 * f, atol=1e-14)
    gf = LatticeGrid((7,), boundary="fixed")
    spike = np.zeros(7)
    spike[3] = 1
    np.testing.assert_array_equal(laplacian(spike, gf), [0, 0, 1, -2, 1, 0, 0])


def test_laplacian_plane_wave_all_modes():
    g = LatticeGrid((64,), a=0.7)
    for m in range(64):
        k = g.wavevector([m])
        f = g.mode_wave([m])
        lam = -4 * np.sin(k[0] * g.a / 2) ** 2 / g.a**2
        np.testing.assert_allclose(laplacian(f, g), lam * f, rtol=1e-12, atol=1e-12 * abs(lam) + 1e-14)
        np.testing.assert_allclose(f, g.plane_wave(k), atol=1e-12)


def test_divergence_examples():
    g = LatticeGrid((16, 16))
    assert np.all(divergence(np.ones((2, 16, 16)), g) == 0)
    gf = LatticeGrid((10,), boundary="fixed")
    np.testing.assert_allclose(divergence(np.arange(10.0)[None], gf)[1:-1], 1.0)
    # composed central differences are not the three-point Laplacian
    g1 = LatticeGrid((32,))
    k = g1.wavevector([3])[0]
    f = np.sin(k * g1.coords()[0])
    np.testing.assert_allclose(divergence(gradient(f, g1), g1), -np.sin(k) ** 2 * f, atol=1e-13)
    assert not np.allclose(divergence(gradient(f, g1), g1), laplacian(f, g1))


def test_errors():
    g = LatticeGrid((8,))
    with pytest.raises(DimensionError):
        laplacian(np.zeros(9), g)
    f = np.zeros(8)
    f[5] = np.nan
    with pytest.raises(NumericError) as exc:
        gradient(f, g)
    assert exc.value.site == (5,)


def test_weighted_laplacian_reduces_to_laplacian():
    g = LatticeGrid((12, 10))
    f = np.random.default_rng(0).standard_normal(g.shape)
    np.testing.assert_allclose(weighted_laplacian(2.5 * np.ones(g.shape), f, g), 2.5 * laplacian(f, g), atol=1e-12)


def test_weighted_laplacian_conservative():
    g = LatticeGrid((24,))
    rng = np.random.default_rng(1)
    kappa = 1 + rng.random(24)
    f = rng.standard_normal(24)
    assert abs(total(weighted_laplacian(kappa, f, g))) < 1e-12
    # symmetric: <u, L v> = <L u, v>
    u = rng.standard_normal(24)
    assert np.isclose(u @ weighted_laplacian(kappa, f, g), f @ weighted_laplacian(kappa, u, g))


@settings(max_examples=40, deadline=None)
@given(
    shape=st.lists(st.integers(3, 9), min_size=1, max_size=3),
    a=st.floats(0.1, 3.0),
    seed=st.integers(0, 2**16),
)
def test_periodic_laplacian_sums_to_zero_and_is_linear(shape, a, seed):
    g = LatticeGrid(tuple(shape), a=a)
    rng = np.random.default_rng(seed)
    f, h = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
    assert abs(total(laplacian(f, g))) < 1e-9 * (1 + np.abs(f).sum()) / a**2
    np.testing.assert_allclose(laplacian(2 * f + h, g), 2 * laplacian(f, g) + laplacian(h, g), atol=1e-9 / a**2)


@settings(max_examples=30, deadline=None)
@given(shape=st.lists(st.integers(3, 8), min_size=1, max_size=3), c=st.floats(-1e3, 1e3))
def test_constant_annihilated_any_boundary_interior(shape, c):
    for bc in ("periodic", "fixed"):
        g = LatticeGrid(tuple(shape), boundary=bc)
        grad = gradient(np.full(g.shape, c), g)
        if bc == "periodic":
            assert np.all(grad == 0)
        else:
            inner = tuple(slice(1, -1) for _ in shape)
            assert np.all(grad[(slice(None),) + inner] == 0)


@settings(max_examples=30, deadline=None)
@given(shape=st.lists(st.integers(3, 9), min_size=1, max_size=3), data=st.data())
def test_mode_wave_matches_plane_wave(shape, data):
    g = LatticeGrid(tuple(shape), a=0.8)
    modes = [data.draw(st.integers(-2 * n, 2 * n)) for n in shape]
    np.testing.assert_allclose(g.mode_wave(modes), g.plane_wave(g.wavevector(modes)), atol=1e-12)
