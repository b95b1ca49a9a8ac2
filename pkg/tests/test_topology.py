import math

import numpy as np
import pytest

from conftest import reference
from drivenssh.exceptions import ClassificationError, GaugeError, UnsupportedConfigurationError
from drivenssh.floquet import micromotion_operator, quasienergy_spectrum
from drivenssh.models import DriveProtocol
from drivenssh.topology import (
    BlochDrive,
    InvariantPair,
    PhaseLabel,
    bloch_propagators,
    check_chiral_symmetry,
    classify_phase,
    compute_invariants,
    domain_wall_census,
    edge_mode_census,
    gap_invariant_pi,
    gap_invariant_zero,
    k_grid,
    quasienergy_gaps,
    reduce_gauge,
    _half_period_exp,
    _su2_parts,
)


def test_chiral_symmetry_in_symmetric_frames():
    p = reference()
    assert check_chiral_symmetry(p) < 1e-12
    assert check_chiral_symmetry(p.replace(theta=math.pi)) < 1e-12


def test_chiral_symmetry_broken_by_sine_drive():
    # with theta = pi/2 the residual is 2 |dkappa1 sin(wt)| * sqrt(2 - 2 cos k),
    # maximal (4 dkappa1) at k = pi, wt = pi/2; both lie on the default grid
    p = reference().replace(theta=math.pi / 2)
    assert check_chiral_symmetry(p) == pytest.approx(4 * 0.12, rel=1e-12)


def test_coexistence_invariants():
    inv = compute_invariants(reference(), 400, reference().period / 2000)
    assert (inv.G0, inv.Gpi) == (1, 1)
    assert inv.residual0 < 0.05 and inv.residualpi < 0.05
    assert inv.converged
    assert classify_phase(inv) is PhaseLabel.COEXISTENCE


def test_block_structure():
    inv = compute_invariants(reference(), 200)
    zero, pi = inv.details
    assert zero.off_block < 1e-6 and pi.off_block < 1e-6


def test_dual_routes_agree():
    zero = gap_invariant_zero(reference(), 200)
    pi = gap_invariant_pi(reference(), 200)
    assert zero.winding == pytest.approx(zero.signed, abs=1e-9)
    assert pi.winding == pytest.approx(pi.signed, abs=1e-9)


def test_residual_shrinks_with_grid():
    a = gap_invariant_pi(reference(), 200)
    b = gap_invariant_pi(reference(), 400)
    assert b.residual <= 0.5 * a.residual


def test_static_gap_closes_without_static_dimerization():
    inv = compute_invariants(reference(dkappa0=0.0), 200)
    assert inv.gap_closed == (True, False)
    assert inv.G0 == 0 and not inv.converged
    assert classify_phase(inv) is PhaseLabel.PI_ONLY
    with pytest.raises(ClassificationError):
        classify_phase(inv, strict=True)


def test_negative_static_dimerization_is_trivial_in_zero_gap():
    inv = compute_invariants(reference(dkappa0=-0.06), 200)
    assert inv.G0 == 0 and inv.Gpi == 1 and inv.converged


def test_pi_gap_closes_without_drive():
    inv = compute_invariants(reference(dkappa1=0.0), 200)
    assert inv.gap_closed[1] and inv.Gpi == 0
    assert classify_phase(inv) is PhaseLabel.ZERO_ONLY


def test_negative_drive_keeps_pi_modes():
    inv = compute_invariants(reference(dkappa1=-0.12), 200)
    ref = compute_invariants(reference(), 200)
    assert inv.Gpi == 1 and inv.signedpi == -ref.signedpi
    assert inv.gappi == pytest.approx(ref.gappi, abs=1e-8)


def test_gauge_precondition():
    p = reference().replace(theta=0.4)
    with pytest.raises(GaugeError):
        compute_invariants(p, 100)
    inv = compute_invariants(p, 200, reduce=True)
    assert (inv.G0, inv.Gpi) == (1, 1)


def test_gauge_reduction():
    q, t0 = reduce_gauge(reference().replace(dkappa1=-0.12, theta=0.3))
    assert q.dkappa1 == 0.12 and q.theta == 0.0
    assert t0 == pytest.approx(-(0.3 + math.pi - 2 * math.pi) / q.omega)


def test_gauge_invariant_classification():
    a = compute_invariants(reference().replace(theta=math.pi), 200, reduce=True)
    b = compute_invariants(reference(dkappa1=-0.12), 200, reduce=True)
    assert classify_phase(a) == classify_phase(b) == PhaseLabel.COEXISTENCE


def test_domain_walls_rejected():
    p = DriveProtocol(0.25, 0.06, 0.12, n_sites=20, dw_cells=(10,))
    with pytest.raises(UnsupportedConfigurationError):
        compute_invariants(p, 100)


@pytest.mark.parametrize(
    "pair,label",
    [((0, 0), PhaseLabel.TRIVIAL), ((1, 0), PhaseLabel.ZERO_ONLY), ((0, 1), PhaseLabel.PI_ONLY), ((1, 1), PhaseLabel.COEXISTENCE)],
)
def test_classification_table(pair, label):
    assert classify_phase(InvariantPair(*pair, 0.0, 0.0, 100, 0.01)) is label


def test_classification_rejects_unconverged_and_large():
    with pytest.raises(ClassificationError):
        classify_phase(InvariantPair(1, 1, 0.2, 0.0, 100, 0.01))
    with pytest.raises(ClassificationError):
        classify_phase(InvariantPair(2, 0, 0.0, 0.0, 100, 0.01))


def test_half_period_micromotion_matches_generic_route():
    p = reference()
    dt = p.period / 400
    ks = np.array([-2.0, -0.3, 0.9, 2.6])
    uf, half, _ = bloch_propagators(p, ks, dt)
    alpha, m = _su2_parts(uf)
    for branch in ("zero", "pi"):
        closed = half @ _half_period_exp(alpha, m, branch)
        for j, k in enumerate(ks):
            generic = micromotion_operator(BlochDrive(p, k), p.period / 2, dt=dt, branch=branch)
            assert np.abs(generic - closed[j]).max() < 1e-10


def test_gaps_open_linearly():
    d = np.array([0.004, 0.008, 0.012])
    g = np.array([quasienergy_gaps(reference(dkappa0=x), 200).gap0 for x in d])
    slope = g / d
    assert np.ptp(slope) / slope.mean() < 0.05
    assert quasienergy_gaps(reference(dkappa0=0.0), 200).gap0 < 1e-6


def test_k_grid_closed():
    ks = k_grid(8)
    assert ks[0] == -math.pi and len(ks) == 8
    assert ks[-1] + 2 * math.pi / 8 == pytest.approx(math.pi)


def _spectrum(p):
    return quasienergy_spectrum(p, dt=p.period / 400)


def test_edge_census_coexistence():
    assert edge_mode_census(_spectrum(reference(n_sites=80))).as_tuple() == (2, 2)


def test_edge_census_trivial():
    p = DriveProtocol(0.25, -0.06, 0.0, period=reference().period, n_sites=80)
    assert edge_mode_census(_spectrum(p)).as_tuple() == (0, 0)


def test_domain_wall_census_follows_winding_difference():
    # a parity flip turns (dk0, dk1) into (-dk0, -dk1) beyond the wall, which
    # binds |delta G| modes per gap counted with signed windings
    p = reference(n_sites=80, dw_cells=(40,))
    left = compute_invariants(reference(), 200)
    right = compute_invariants(reference(dkappa0=-0.06, dkappa1=-0.12), 200)
    expected = (abs(left.signed0 - right.signed0), abs(left.signedpi - right.signedpi))
    assert expected == (1, 2)
    assert domain_wall_census(_spectrum(p), p).as_tuple() == expected
