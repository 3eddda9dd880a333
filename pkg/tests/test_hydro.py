import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bhanalog.dynamics import EvolutionState, IntegratorConfig, evolve, fluct_rhs, gpe_rhs, homogeneous
from bhanalog.errors import ConfigError, HistoryError, PhaseWindingError, ValidityWarning, VacuumSiteError
from bhanalog.hydro import (
    FluctHydro,
    euler_rhs,
    fluct_density_rhs,
    fluct_phase_rhs,
    fluct_to_hydro,
    hydro_to_fluct,
    hydrodynamic_dn_estimate,
    mean_density_rhs,
    mean_phase_rhs,
    mott_wave_residual,
    quantum_potential,
    to_density_phase,
)
from bhanalog.lattice import LatticeGrid, gradient
from bhanalog.params import BHParams
from bhanalog.spectra import bdg_oracle

P = BHParams(1.0, 0.1)


def smooth_state(g, seed=0, amp=0.05, n0=100.0):
    rng = np.random.default_rng(seed)
    x = g.coords()
    n = np.full(g.shape, n0)
    phi = np.zeros(g.shape)
    for ax in range(g.dims):
        L = g.shape[ax] * g.a
        k = 2 * np.pi / L
        n = n * (1 + amp * np.cos(k * x[ax] + rng.uniform(0, 2 * np.pi)))
        phi = phi + 0.3 * np.sin(k * x[ax] + rng.uniform(0, 2 * np.pi))
    return np.sqrt(n) * np.exp(1j * phi)


def test_homogeneous_density_phase():
    g = LatticeGrid((16,))
    h = to_density_phase(homogeneous(g, 100.0), g, P)
    np.testing.assert_allclose(h.n, 100)
    assert np.all(h.phi == 0) and np.all(h.v == 0)
    np.testing.assert_allclose(h.c, np.sqrt(20))
    h = to_density_phase(homogeneous(g, 100.0, np.pi / 4), g, P)
    np.testing.assert_allclose(h.phi, np.pi / 4)
    np.testing.assert_allclose(h.v, 0, atol=1e-14)


def test_phase_ramp_velocity():
    g = LatticeGrid((64,), a=0.5)
    p = BHParams(1.0, 0.1, a=0.5)
    q = 2 * np.pi * 5 / (64 * 0.5)
    b = 10 * np.exp(1j * q * g.coords()[0])
    h = to_density_phase(b, g, p)
    # averaged wrapped bond phases recover the ramp slope exactly: v = 2 J a^2 q
    np.testing.assert_allclose(h.v, 2 * p.J0 * g.a**2 * q, rtol=1e-12)
    with pytest.raises(ConfigError):
        to_density_phase(b, g, P)


def test_density_phase_errors_and_warnings():
    g = LatticeGrid((8,))
    with pytest.warns(ValidityWarning):
        to_density_phase(homogeneous(g, 4.0), g, P)
    b = homogeneous(g, 100.0)
    b[3] = 0
    with pytest.raises(VacuumSiteError):
        to_density_phase(b, g, P)
    with pytest.raises(PhaseWindingError):
        to_density_phase(10 * np.exp(1j * 3.05 * np.arange(8)), g, P)


@settings(max_examples=40, deadline=None)
@given(n=st.floats(1e-3, 1e6), J=st.floats(1e-3, 1e3), U=st.floats(1e-3, 1e3), a=st.floats(0.1, 10))
def test_c_xi_identity(n, J, U, a):
    p = BHParams(J, U, a=a)
    assert p.sound_speed(n) * p.healing_length(n) == pytest.approx(2 * J * a**2, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_fluct_roundtrip(seed):
    g = LatticeGrid((6, 5))
    rng = np.random.default_rng(seed)
    h = to_density_phase(smooth_state(g, seed), g, P)
    db = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    np.testing.assert_allclose(hydro_to_fluct(fluct_to_hydro(db, h), h), db, atol=1e-12)


def test_continuity_examples():
    g = LatticeGrid((32,))
    assert np.all(mean_density_rhs(to_density_phase(homogeneous(g, 100.0), g, P), P) == 0)
    ramp = 10 * np.exp(1j * 2 * np.pi * 3 / 32 * np.arange(32))
    np.testing.assert_allclose(mean_density_rhs(to_density_phase(ramp, g, P), P), 0, atol=1e-11)


def test_continuity_residual_converges():
    # exact lattice dn/dt from the complex field vs. the central-difference continuity equation
    errs = []
    for m in (1, 2, 4):
        g = LatticeGrid((256,))
        x = g.coords()[0]
        k = 2 * np.pi * m / 256
        b = np.sqrt(100 * (1 + 0.01 * np.cos(k * x))) * np.exp(0.01j * np.sin(k * x))
        dn = 2 * (b.conj() * gpe_rhs(b, g, P)).real
        errs.append(np.linalg.norm(dn - mean_density_rhs(to_density_phase(b, g, P), P)) / np.linalg.norm(dn))
    assert errs[0] < errs[1] < errs[2]
    assert errs[2] / errs[1] == pytest.approx(4, rel=0.05)

    # centered time difference converges as dt^2; the backward level comes from
    # time reversal, b(-t) = conj(evolved conj(b))
    g = LatticeGrid((64,))
    b0 = smooth_state(g, 2, amp=0.01)
    p = P.with_mu(P.stationary_mu(100, 1))
    exact = 2 * (b0.conj() * gpe_rhs(b0, g, p)).real
    res = []
    for dt in (0.02, 0.01):
        fwd = evolve(EvolutionState(g, b0), p, IntegratorConfig(dt=dt, steps=1)).mean
        back = evolve(EvolutionState(g, b0.conj()), p, IntegratorConfig(dt=dt, steps=1)).mean.conj()
        dn_t = (np.abs(fwd) ** 2 - np.abs(back) ** 2) / (2 * dt)
        res.append(np.linalg.norm(dn_t - exact) / np.linalg.norm(exact))
    assert res[0] / res[1] == pytest.approx(4, rel=0.1)


def test_mean_phase_rhs_examples():
    g = LatticeGrid((4, 4, 4))
    h = to_density_phase(homogeneous(g, 100.0), g, P)
    np.testing.assert_allclose(mean_phase_rhs(h, P), -3.95, atol=1e-12)
    np.testing.assert_allclose(mean_phase_rhs(h, P.with_mu(P.stationary_mu(100, 3))), 0, atol=1e-12)


def test_mean_phase_rhs_matches_complex_path_and_quantum_potential():
    g = LatticeGrid((512,))
    x = g.coords()[0]
    n = 100 + 5 * np.exp(-((x - 256) ** 2) / (2 * 30**2))
    b = np.sqrt(n).astype(complex)
    h = to_density_phase(b, g, P)
    rhs = mean_phase_rhs(h, P)
    phase_rate = (b.conj() * gpe_rhs(b, g, P)).imag / n
    assert np.max(np.abs(rhs - phase_rate)) < 1e-3 * np.max(np.abs(phase_rate - phase_rate[0]))
    # v = 0: the gradient part is quantum pressure plus interaction only
    vq = quantum_potential(n, g, P, convention="kinetic")
    const = 2 * P.J0 + P.U / 2 + P.mu
    np.testing.assert_allclose(rhs - const + P.U * n, vq, atol=1e-3 * np.max(np.abs(vq)))


def test_euler_examples():
    g = LatticeGrid((16,))
    h = to_density_phase(homogeneous(g, 100.0), g, P)
    for conv in ("printed", "kinetic"):
        assert np.all(np.abs(euler_rhs(h, P, conv)) < 1e-12)
    gf = LatticeGrid((32,), boundary="fixed")
    n = 1000 + np.arange(32.0)
    h = to_density_phase(np.sqrt(n).astype(complex), gf, P)
    rhs = euler_rhs(h, P, "printed")[0][2:-2]
    np.testing.assert_allclose(rhs, -P.J0 * P.U * 1.0, rtol=1e-6)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**16), dims=st.integers(1, 3))
def test_euler_is_gradient_of_phase_rhs(seed, dims):
    g = LatticeGrid((12,) * dims)
    p = BHParams(1.0, 0.1, mu=0.7)
    h = to_density_phase(smooth_state(g, seed), g, p)
    lhs = 2 * p.J0 * p.a**2 * gradient(mean_phase_rhs(h, p), g)
    rhs = euler_rhs(h, p, "kinetic")
    np.testing.assert_allclose(rhs, lhs, atol=1e-10 * np.max(np.abs(lhs)))


def test_quantum_potential_examples():
    g = LatticeGrid((64,))
    assert np.all(quantum_potential(np.full(64, 100.0), g, P) == 0)
    k = 2 * np.pi * 3 / 64
    x = g.coords()[0]
    n = (100 + np.cos(k * x)) ** 2
    vq = quantum_potential(n, g, P)
    np.testing.assert_allclose(vq, -P.J0**2 * 4 * np.sin(k / 2) ** 2 * np.cos(k * x) / (100 + np.cos(k * x)), atol=1e-14)
    assert vq[0] < 0


def test_fluct_density_rhs_examples():
    g = LatticeGrid((64,))
    h = to_density_phase(homogeneous(g, 100.0), g, P)
    zero = np.zeros(64)
    assert np.all(fluct_density_rhs(FluctHydro(zero, np.full(64, 0.3)), h, P) == 0)
    k = 2 * np.pi * 5 / 64
    eps = 1e-6
    dphi = eps * np.cos(k * g.coords()[0])
    expected = 2 * P.J0 * 100 * 4 * np.sin(k / 2) ** 2 * dphi
    np.testing.assert_allclose(fluct_density_rhs(FluctHydro(zero, dphi), h, P), expected, atol=1e-18)


def test_fluct_phase_rhs_matches_oracle():
    g = LatticeGrid((64,))
    n = 100.0
    h = to_density_phase(homogeneous(g, n), g, P)
    assert np.all(fluct_phase_rhs(FluctHydro(np.zeros(64), np.zeros(64)), h, P) == 0)
    m = 7
    k = 2 * np.pi * m / 64
    kt2 = 4 * np.sin(k / 2) ** 2
    c2, xi2 = h.c[0] ** 2, h.xi[0] ** 2
    dn = 1e-6 * np.cos(k * g.coords()[0])
    out = fluct_phase_rhs(FluctHydro(dn, np.zeros(64)), h, P)
    np.testing.assert_allclose(out, -(c2 / (2 * P.J0 * n)) * dn * (1 + xi2 * kt2 / 4), atol=1e-18)
    # one Fourier mode: omega^2 = (d dn / d dphi) (d dphi / d dn) reproduces the BdG oracle
    a_coef = 2 * P.J0 * n * kt2
    b_coef = (c2 / (2 * P.J0 * n)) * (1 + xi2 * kt2 / 4)
    assert np.sqrt(a_coef * b_coef) == pytest.approx(bdg_oracle([k], P, n), rel=1e-12)
    # without quantum pressure: the hydrodynamic wave operator omega^2 = c^2 k~^2
    hyd = fluct_phase_rhs(FluctHydro(dn, np.zeros(64)), h, P, quantum_pressure=False)
    b0 = -hyd[0] / dn[0]
    assert a_coef * b0 == pytest.approx(c2 * kt2, rel=1e-12)


def test_complex_and_hydro_fluct_paths_agree():
    g = LatticeGrid((48,))
    b = smooth_state(g, 4)
    rng = np.random.default_rng(5)
    db = 1e-6 * (rng.standard_normal(48) + 1j * rng.standard_normal(48))
    h = to_density_phase(b, g, P)
    f = fluct_to_hydro(db, h)
    ddb = fluct_rhs(b, db, g, P)
    # d(dn)/dt = d/dt (2 n Re db)
    dn_t = 2 * (2 * (b.conj() * gpe_rhs(b, g, P)).real) * db.real + 2 * h.n * ddb.real
    ref = fluct_density_rhs(f, h, P) + 2 * mean_density_rhs(h, P) * db.real
    assert np.linalg.norm(dn_t - ref) / np.linalg.norm(dn_t) < 0.05
    assert np.all(np.isfinite(fluct_phase_rhs(f, h, P)))


def _evolved_levels(m, steps=100, dt=0.01, L=256):
    g = LatticeGrid((L,))
    n = 100.0
    p = P.with_mu(P.stationary_mu(n, 1))
    k = 2 * np.pi * m / L
    db = 1e-6j * np.cos(k * g.coords()[0])
    out = evolve(EvolutionState(g, homogeneous(g, n), db), p, IntegratorConfig(dt=dt, steps=steps))
    h = to_density_phase(out.history[1].mean, g, p, out.history[1].t)
    fl = [fluct_to_hydro(s.fluct, h) for s in out.history]
    return g, p, h, fl, k


def test_hydrodynamic_dn_estimate():
    g, p, h, fl, k = _evolved_levels(9)
    assert k * h.xi[0] <= 0.1
    est = hydrodynamic_dn_estimate([f.dphi for f in fl], 0.01, h, p)
    assert np.linalg.norm(est - fl[1].dn) / np.linalg.norm(fl[1].dn) < 0.02
    g, p, h, fl, k = _evolved_levels(91)
    assert k * h.xi[0] == pytest.approx(1, abs=0.01)
    est = hydrodynamic_dn_estimate([f.dphi for f in fl], 0.01, h, p)
    assert np.linalg.norm(est - fl[1].dn) / np.linalg.norm(fl[1].dn) > 0.1
    const = [np.full(g.shape, 0.2)] * 3
    assert np.all(hydrodynamic_dn_estimate(const, 0.01, h, p) == 0)
    with pytest.raises(HistoryError):
        hydrodynamic_dn_estimate(const[:2], 0.01, h, p)


def test_mott_wave_residual():
    g = LatticeGrid((64,))
    p = BHParams(1.0, 400.0)
    h = to_density_phase(homogeneous(g, 100.0), g, p)
    c = h.c[0]
    k = 2 * np.pi * 4 / 64
    omega = c * 2 * np.sin(k / 2)
    x = g.coords()[0]
    res = []
    for dt in (1e-3, 5e-4):
        levels = [1e-3 * np.cos(k * x - omega * t) for t in (-dt, 0, dt)]
        res.append(np.linalg.norm(mott_wave_residual(levels, dt, h, p)))
    assert res[0] / res[1] == pytest.approx(4, rel=0.01)
    assert np.all(mott_wave_residual([np.zeros(64)] * 3, 1e-3, h, p) == 0)
    with pytest.warns(ValidityWarning):
        mott_wave_residual([np.zeros(64)] * 3, 1e-3, to_density_phase(homogeneous(g, 100.0), g, P), P)
    with pytest.raises(HistoryError):
        mott_wave_residual([np.zeros(64)] * 2, 1e-3, h, p)
