import math
import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from conftest import reference
from drivenssh.exceptions import NumericalError
from drivenssh.floquet import (
    BranchAmbiguityWarning,
    effective_hamiltonian,
    evolve,
    floquet_mode_decomposition,
    floquet_operator,
    fold_phases,
    micromotion_operator,
    n_steps,
    propagate,
    quasienergy_spectrum,
    unitarity_residual,
)
from drivenssh.models import DriveProtocol
from drivenssh.topology import edge_mode_census


def test_n_steps_requires_divisor():
    assert n_steps(1.0, 0.25, 1.0) == 4
    assert n_steps(2.0, None, 2.0) == 1000
    with pytest.raises(ValueError):
        n_steps(1.0, 0.3, 1.0)
    with pytest.raises(ValueError):
        n_steps(1.0, -0.1, 1.0)


def test_static_limit_matches_expm():
    p = DriveProtocol(0.25, 0.06, 0.0, period=5.0, n_sites=8)
    u = floquet_operator(p, dt=p.period / 200).matrix
    ref = expm(-1j * p.hamiltonian(0.0) * p.period)
    assert np.abs(u - ref).max() < 1e-8


def test_unitarity_at_default_resolution():
    p = reference(n_sites=10)
    u = floquet_operator(p, dt=p.period / 2000)
    assert u.unitarity_residual() < 1e-9


def test_unitarity_breach_raises():
    p = reference(n_sites=6)
    with pytest.raises(NumericalError):
        floquet_operator(p, dt=p.period / 20, tol=0.0)


def test_composition():
    p = reference(n_sites=6)
    dt = p.period / 200
    u1 = propagate(p, 0.0, p.period, dt)
    u2 = propagate(p, p.period, 2 * p.period, dt)
    both = propagate(p, 0.0, 2 * p.period, dt)
    assert np.abs((u2 @ u1).matrix - both.matrix).max() < 1e-8
    assert (u2 @ u1).span == pytest.approx(2 * p.period)


def test_identity_logarithm():
    h = effective_hamiltonian(np.eye(3), period=2.0)
    assert np.abs(h.matrix).max() == 0


def test_minus_identity_sits_on_zone_edge():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguityWarning)
        h = effective_hamiltonian(-np.eye(3), period=2.0)
    assert np.allclose(h.quasienergies, math.pi / 2.0)


def test_branch_cut_warns():
    with pytest.warns(BranchAmbiguityWarning):
        h = effective_hamiltonian(-np.eye(2), "zero", period=1.0)
    assert h.ambiguous
    with pytest.warns(BranchAmbiguityWarning):
        effective_hamiltonian(np.eye(2), "pi", period=1.0)


def test_fold_phases_conventions():
    x = np.array([-math.pi, 0.0, math.pi, 3 * math.pi / 2, -0.1])
    assert np.allclose(fold_phases(x, "zero"), [math.pi, 0.0, math.pi, -math.pi / 2, -0.1])
    assert np.allclose(fold_phases(x, "pi"), [math.pi, 2 * math.pi, math.pi, 3 * math.pi / 2, 2 * math.pi - 0.1])


def test_static_two_site_log_recovers_h():
    p = DriveProtocol(0.25, period=3.0, n_sites=2)
    h = effective_hamiltonian(floquet_operator(p, dt=p.period / 10))
    assert np.abs(h.matrix - p.hamiltonian(0.0)).max() < 1e-9


@pytest.mark.parametrize("branch", ["zero", "pi"])
def test_effective_hamiltonian_reproduces_u(branch):
    p = reference(n_sites=8)
    u = floquet_operator(p, dt=p.period / 400)
    h = effective_hamiltonian(u, branch)
    assert np.abs(h.matrix - h.matrix.conj().T).max() < 1e-12
    assert np.abs(expm(-1j * h.matrix * p.period) - u.matrix).max() < 1e-8


def test_single_site_spectrum():
    spec = quasienergy_spectrum(DriveProtocol(0.25, n_sites=1))
    assert spec.quasienergies.tolist() == [0.0]


def test_spectrum_sorted_and_orthonormal():
    p = reference(n_sites=12)
    spec = quasienergy_spectrum(p, dt=p.period / 400)
    eps = spec.quasienergies
    assert np.all(np.diff(eps) >= 0)
    assert np.all(eps > -math.pi / p.period) and np.all(eps <= math.pi / p.period)
    v = spec.vectors
    assert np.abs(v.conj().T @ v - np.eye(12)).max() < 1e-9


def test_static_dimerization_gives_zero_modes_only():
    p = reference(n_sites=60, dkappa1=0.0)
    spec = quasienergy_spectrum(p, dt=p.period / 200)
    assert edge_mode_census(spec).as_tuple() == (2, 0)


def _operator_error(p, steps, ref):
    return np.abs(floquet_operator(p, dt=p.period / steps).matrix - ref).max()


def test_midpoint_rule_is_second_order():
    p = reference(n_sites=10)
    ref = floquet_operator(p, dt=p.period / 6400).matrix
    errs = [_operator_error(p, s, ref) for s in (50, 100, 200)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.5 <= r <= 4.5 for r in ratios), ratios


def test_left_rule_is_first_order():
    p = reference(n_sites=10)
    ref = floquet_operator(p, dt=p.period / 6400).matrix
    errs = [np.abs(floquet_operator(p, dt=p.period / s, rule="left").matrix - ref).max() for s in (100, 200)]
    assert 1.6 < errs[0] / errs[1] < 2.4


def test_micromotion_endpoints():
    p = reference(n_sites=8)
    dt = p.period / 400
    assert np.abs(micromotion_operator(p, 0.0, dt=dt) - np.eye(8)).max() < 1e-12
    assert np.abs(micromotion_operator(p, p.period, dt=dt) - np.eye(8)).max() < 1e-8
    assert unitarity_residual(micromotion_operator(p, p.period / 2, dt=dt)) < 1e-8
    with pytest.raises(ValueError):
        micromotion_operator(p, 1.5 * p.period, dt=dt)


def test_micromotion_periodic_in_gauge_time():
    # V(t + T, t0 + T) = V(t, t0) because H(t) is T-periodic
    p = reference(n_sites=6)
    dt = p.period / 400
    a = micromotion_operator(p, p.period / 4, 0.0, dt)
    b = micromotion_operator(p, 1.25 * p.period, p.period, dt)
    assert np.abs(a - b).max() < 1e-10


def test_identity_evolution_on_single_site():
    rec = evolve(DriveProtocol(0.25, n_sites=1), [1.0], 10.0, dt=0.5)
    assert np.all(rec.amplitudes == 1.0)


def test_two_site_full_transfer_at_coupling_length():
    p = DriveProtocol(0.25, period=math.pi / 0.5, n_sites=2)
    rec = evolve(p, [1.0, 0.0], p.coupling_length, dt=p.coupling_length / 100)
    assert rec.intensity[-1, 1] == pytest.approx(1.0, abs=1e-12)


def test_norm_conservation():
    p = reference(n_sites=10)
    psi = np.random.default_rng(3).normal(size=10) + 0j
    rec = evolve(p, psi / np.linalg.norm(psi), 3 * p.period, p.period / 200)
    assert rec.norm_drift() < 1e-8
    assert rec.stroboscopic().shape == (4, 10)


def _eigen_record(p, j, cycles=2, steps=400):
    spec = quasienergy_spectrum(p, dt=p.period / steps)
    rec = evolve(p, spec.vectors[:, j], cycles * p.period, p.period / steps)
    return spec, rec


def test_static_eigenstate_mode_is_constant():
    p = DriveProtocol(0.25, 0.06, 0.0, period=4.0, n_sites=6)
    spec, rec = _eigen_record(p, 2)
    mode = floquet_mode_decomposition(rec, spec.quasienergies[2])
    assert mode.periodic
    assert np.abs(mode.u - mode.u[0]).max() < 1e-9


def test_zero_and_pi_modes_are_periodic():
    p = reference(n_sites=20)
    spec = quasienergy_spectrum(p, dt=p.period / 400)
    j0 = int(np.argmin(spec.distance_to_zero()))
    jpi = int(np.argmin(spec.distance_to_pi()))
    for j in (j0, jpi):
        rec = evolve(p, spec.vectors[:, j], 2 * p.period, p.period / 400)
        mode = floquet_mode_decomposition(rec, spec.quasienergies[j])
        assert mode.periodicity_residual < 1e-7
        # eigenstates are even/odd mixtures of the two end modes
        w = np.abs(mode.u[0]) ** 2
        assert w[:5].sum() + w[-5:].sum() > 0.8
        if j == j0:
            # the 0 mode peaks on the outermost guides
            assert int(np.argmax(np.abs(mode.u[0]))) in (0, 19)
    # the pi mode changes sign after one period
    rec = evolve(p, spec.vectors[:, jpi], p.period, p.period / 400)
    overlap = np.vdot(spec.vectors[:, jpi], rec.amplitudes[-1])
    assert overlap.real == pytest.approx(-1.0, abs=1e-4)


def test_non_eigenstate_flagged():
    p = reference(n_sites=8)
    psi = np.zeros(8, complex)
    psi[3] = 1
    rec = evolve(p, psi, 2 * p.period, p.period / 200)
    assert not floquet_mode_decomposition(rec, 0.0).periodic


def test_stroboscopic_eigenphase():
    p = reference(n_sites=10)
    spec, rec = _eigen_record(p, 4, cycles=3)
    eps = spec.quasienergies[4]
    for n, amp in enumerate(rec.stroboscopic()):
        assert np.abs(amp - np.exp(-1j * eps * n * p.period) * spec.vectors[:, 4]).max() < 1e-7 * max(n, 1)
