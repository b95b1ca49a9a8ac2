import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from drivenssh.floquet import evolve, fold_phases, quasienergy_spectrum, unitarity_residual
from drivenssh.models import DimerizationWarning, DriveProtocol, bond_couplings, coupling_length
from drivenssh.spinmap import SpinDriveParams, spectrum_equivalence
from drivenssh.timecrystal import direct_intensity, interference_intensity
from drivenssh.waveguide import fit_calibration

SETTINGS = settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])

small = st.floats(-0.2, 0.2, allow_nan=False)
kappa = st.floats(0.05, 1.0, allow_nan=False)
period = st.floats(0.5, 20.0, allow_nan=False)
phase = st.floats(-math.pi, math.pi, allow_nan=False)
times = st.floats(0.0, 50.0, allow_nan=False)


@st.composite
def protocols(draw, max_sites=12, dw=True):
    n = draw(st.integers(2, max_sites))
    cells = ()
    if dw and n >= 4 and draw(st.booleans()):
        cells = (draw(st.integers(1, n - 1)),)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DimerizationWarning)
        return DriveProtocol(draw(kappa), draw(small), draw(small), draw(period), draw(phase), n, cells)


@SETTINGS
@given(protocols(), times)
def test_hamiltonian_real_symmetric_tridiagonal(p, t):
    h = p.hamiltonian(t)
    assert np.isrealobj(h) or np.abs(h.imag).max() == 0
    assert np.array_equal(h, h.T)
    assert np.all(np.diag(h) == 0)
    assert np.count_nonzero(np.triu(h, 2)) == 0
    assert np.allclose(np.diag(h, 1), bond_couplings(p, t), rtol=0, atol=0)


@SETTINGS
@given(protocols(), times)
def test_hamiltonian_periodic(p, t):
    assert np.abs(p.hamiltonian(t + p.period) - p.hamiltonian(t)).max() < 1e-12


@SETTINGS
@given(protocols(dw=False), times)
def test_gauge_identity_on_couplings(p, t):
    q = p.replace(theta=p.theta + math.pi)
    r = p.replace(dkappa1=-p.dkappa1)
    assert np.abs(bond_couplings(q, t) - bond_couplings(r, t)).max() < 1e-12


@settings(max_examples=15, deadline=None)
@given(protocols(max_sites=8))
def test_spectrum_unitary_real_and_in_zone(p):
    spec = quasienergy_spectrum(p, dt=p.period / 100)
    eps = spec.quasienergies
    assert np.all(np.isfinite(eps))
    assert np.all(eps > -math.pi / p.period - 1e-12) and np.all(eps <= math.pi / p.period + 1e-12)
    v = spec.vectors
    assert unitarity_residual(v) < 1e-9
    assert np.all(spec.edge_weight >= 0) and np.all(spec.edge_weight <= 1 + 1e-12)


@settings(max_examples=15, deadline=None)
@given(protocols(max_sites=8, dw=False))
def test_gauge_spectra_agree(p):
    dt = p.period / 100
    a = quasienergy_spectrum(p.replace(theta=p.theta + math.pi), dt=dt).quasienergies
    b = quasienergy_spectrum(p.replace(dkappa1=-p.dkappa1), dt=dt).quasienergies
    assert np.abs(np.sort(a) - np.sort(b)).max() < 1e-10


@SETTINGS
@given(st.floats(-10, 10), st.sampled_from(["zero", "pi"]))
def test_fold_range(x, branch):
    y = float(fold_phases(np.array([x]), branch)[0])
    lo = -math.pi if branch == "zero" else 0.0
    assert lo < y <= lo + 2 * math.pi + 1e-12
    assert math.isclose(math.cos(y), math.cos(x), abs_tol=1e-9)


@settings(max_examples=20, deadline=None)
@given(
    st.integers(2, 8),
    st.floats(-2, 2),
    st.floats(-2, 2),
    st.sampled_from([1, -1]),
    st.integers(0, 2**31 - 1),
)
def test_three_term_identity(n, eps0, epspi, sign, seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 10, 33)
    u0 = rng.normal(size=(33, n)) + 1j * rng.normal(size=(33, n))
    upi = rng.normal(size=(33, n)) + 1j * rng.normal(size=(33, n))
    psi0 = u0 * np.exp(-1j * eps0 * t)[:, None]
    psipi = upi * np.exp(-1j * epspi * t)[:, None]
    three = interference_intensity(u0, upi, eps0, epspi, t, sign)
    direct = direct_intensity(psi0, psipi, sign)
    assert np.abs(three - direct).max() < 1e-9 * max(1.0, direct.max())
    assert np.all(three > -1e-9)


@SETTINGS
@given(kappa)
def test_coupling_length_product(k):
    assert math.isclose(coupling_length(k) * k, math.pi / 2, rel_tol=1e-15)


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 5), st.floats(-0.1, 0.1), st.floats(-0.1, 0.1), st.floats(2.0, 12.0))
def test_spin_map_equivalence(n, d0, d1, T):
    s = SpinDriveParams(0.25, d0, d1, period=T)
    assert spectrum_equivalence(s, n, T / 100) < 1e-8


@SETTINGS
@given(st.floats(0.01, 2.0), st.floats(0.3, 5.0), st.integers(2, 10))
def test_calibration_round_trip(a, b, m):
    G = np.linspace(0.5, 4.0, m)
    lc = math.pi / (2 * a * np.exp(-G / b))
    cal = fit_calibration(G, lc)
    assert cal.a == pytest.approx(a, rel=1e-8) and cal.b == pytest.approx(b, rel=1e-8)
    assert np.allclose(cal.kappa(G) * cal.coupling_length(G), math.pi / 2, rtol=1e-14)
    assert np.all(np.diff(cal.kappa(G)) < 0)


@settings(max_examples=10, deadline=None)
@given(protocols(max_sites=6), st.integers(0, 2**31 - 1))
def test_evolution_conserves_norm(p, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=p.n_sites) + 1j * rng.normal(size=p.n_sites)
    assume(np.linalg.norm(psi) > 1e-6)
    rec = evolve(p, psi / np.linalg.norm(psi), 2 * p.period, p.period / 50)
    assert rec.norm_drift() < 1e-10
