"""Chiral symmetry, 0/pi gap winding numbers and phase classification.

The Bloch problem is two-band, so the half-period micromotion operator
``V(T/2, k)`` is a 2x2 matrix per momentum.  With the drive centred at
``t = 0`` (``theta = 0``) chiral symmetry forces ``V`` to be block diagonal or
block anti-diagonal in the ``sigma_z`` basis depending on the logarithm branch:

* the pi-centred branch gives an anti-diagonal ``V``; the winding of its
  upper-right entry counts 0-gap edge modes;
* the zero-centred branch gives a diagonal ``V``; the winding of its upper-left
  entry counts pi-gap edge modes.

Windings are evaluated in the unit cell whose intracell link is bond 1
(``intracell="odd"``), the cell that tiles an open chain from its first site,
so the counts match the edge modes of :class:`~drivenssh.models.DriveProtocol`
chains.  Reported invariants are magnitudes; the signed windings are kept on
the result.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ClassificationError, GaugeError, SymmetryBrokenError, UnsupportedConfigurationError
from .floquet import FloquetSpectrum, edge_sites, edge_window, n_steps, region_weight
from .models import PAULI_Z, DriveProtocol, bloch_coefficients, bloch_hamiltonian, domain_wall_sites

GAP_CLOSED_TOL = 1e-6
BLOCK_TOL = 1e-6
QUANTIZATION_TOL = 0.05
DEFAULT_NK = 400


class PhaseLabel(str, enum.Enum):
    TRIVIAL = "trivial"
    ZERO_ONLY = "zero-only"
    PI_ONLY = "pi-only"
    COEXISTENCE = "coexistence"


_LABELS = {
    (0, 0): PhaseLabel.TRIVIAL,
    (1, 0): PhaseLabel.ZERO_ONLY,
    (0, 1): PhaseLabel.PI_ONLY,
    (1, 1): PhaseLabel.COEXISTENCE,
}


@dataclass
class GapInvariant:
    """Winding number of one quasienergy gap.

    ``value`` is ``|signed|``.  ``residual`` is the distance of the
    finite-difference winding integral from the nearest integer; ``winding``
    is the independent phase-accumulation count.  A closed gap reports
    ``value = 0`` with ``converged = False``.
    """

    gap: str
    value: int
    signed: int
    residual: float
    winding: float
    gap_width: float
    gap_closed: bool
    off_block: float
    converged: bool


@dataclass
class InvariantPair:
    G0: int
    Gpi: int
    residual0: float
    residualpi: float
    k_points: int
    dt: float
    signed0: int = 0
    signedpi: int = 0
    gap0: float = math.nan
    gappi: float = math.nan
    converged: bool = True
    gap_closed: tuple[bool, bool] = (False, False)
    details: tuple[GapInvariant, GapInvariant] | None = field(default=None, repr=False)

    @classmethod
    def from_gaps(cls, zero: GapInvariant, pi: GapInvariant, n_k: int, dt: float) -> "InvariantPair":
        return cls(
            zero.value, pi.value, zero.residual, pi.residual, n_k, dt,
            zero.signed, pi.signed, zero.gap_width, pi.gap_width,
            zero.converged and pi.converged, (zero.gap_closed, pi.gap_closed), (zero, pi),
        )


@dataclass
class GapReport:
    """Minimum quasienergy gaps over the Brillouin zone and where they occur."""

    gap0: float
    gappi: float
    k0: float
    kpi: float


def reduce_gauge(p: DriveProtocol) -> tuple[DriveProtocol, float]:
    """Move the drive into the symmetric frame.

    A negative ``dkappa1`` is first rewritten as ``theta + pi`` with positive
    amplitude; the remaining phase is absorbed by a start-time shift
    ``t0 = -theta / omega``.  Returns the ``theta = 0`` protocol and ``t0``.
    """
    theta = p.theta
    d1 = p.dkappa1
    if d1 < 0:
        d1, theta = -d1, theta + math.pi
    theta = math.remainder(theta, 2 * math.pi)
    return p.replace(dkappa1=d1, theta=0.0), -theta / p.omega


def _require_symmetric(p: DriveProtocol, reduce: bool) -> DriveProtocol:
    if p.dw_cells or p.periodic:
        raise UnsupportedConfigurationError("invariants need a bulk (domain-wall-free) protocol")
    if reduce:
        return reduce_gauge(p)[0]
    if math.remainder(p.theta, 2 * math.pi) != 0.0:
        raise GaugeError(
            f"theta={p.theta} is not the symmetric frame; call reduce_gauge(p) "
            "or pass reduce=True"
        )
    return p


def check_chiral_symmetry(p: DriveProtocol, ks=None, ts=None, intracell: str = "odd") -> float:
    """Max over samples of ``|sigma_z H(t, k) sigma_z + H(-t, k)|``."""
    ks = np.linspace(-math.pi, math.pi, 17) if ks is None else np.atleast_1d(ks)
    ts = np.linspace(0.0, p.period, 17) if ts is None else np.atleast_1d(ts)
    worst = 0.0
    for k in ks:
        for t in ts:
            h = bloch_hamiltonian(p, k, t, intracell)
            hm = bloch_hamiltonian(p, k, -t, intracell)
            worst = max(worst, float(np.abs(PAULI_Z @ h @ PAULI_Z + hm).max()))
    return worst


def k_grid(n_k: int) -> np.ndarray:
    """Uniform closed grid ``-pi + 2 pi j / n_k``."""
    return -math.pi + 2 * math.pi * np.arange(n_k) / n_k


def _bloch_steps(a: np.ndarray, b: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i (a sigma_x + b sigma_y) dt)`` for arrays of coefficients."""
    r = np.hypot(a, b)
    c = np.cos(r * dt)
    safe = np.where(r > 0, r, 1.0)
    s = np.where(r > 0, np.sin(r * dt) / safe, dt)
    m = np.empty(a.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = c
    m[..., 1, 1] = c
    m[..., 0, 1] = -1j * s * (a - 1j * b)
    m[..., 1, 0] = -1j * s * (a + 1j * b)
    return m


def bloch_propagators(p: DriveProtocol, ks, dt: float | None = None, intracell: str = "odd"):
    """One-period and half-period Bloch propagators, each shaped ``(len(ks), 2, 2)``.

    Midpoint rule with an even number of steps per period.
    """
    ks = np.asarray(ks, dtype=float)
    n = n_steps(p.period, dt, p.period)
    if n % 2:
        raise ValueError(f"need an even number of steps per period, got {n}")
    step = p.period / n
    u = np.broadcast_to(np.eye(2, dtype=complex), ks.shape + (2, 2)).copy()
    half = None
    for j in range(n):
        if j == n // 2:
            half = u.copy()
        a, b = bloch_coefficients(p, ks, (j + 0.5) * step, intracell)
        u = _bloch_steps(a, b, step) @ u
    return u, half, step


def _su2_parts(u: np.ndarray):
    """Write ``u = cos(alpha) - i M`` with ``M = sin(alpha) n.sigma``; return alpha, M."""
    m = 0.5j * (u - np.conj(np.swapaxes(u, -1, -2)))
    cos_a = 0.5 * np.real(u[..., 0, 0] + u[..., 1, 1])
    sin_a = np.sqrt(np.abs(m[..., 0, 0]) ** 2 + np.abs(m[..., 0, 1]) ** 2)
    return np.arctan2(sin_a, cos_a), m


def _half_period_exp(alpha: np.ndarray, m: np.ndarray, branch: str) -> np.ndarray:
    """``exp(i H_F T / 2)`` for a two-band Floquet operator, in closed form."""
    eye = np.eye(2)
    if branch == "zero":
        # H_F T = alpha n.sigma
        ch = np.cos(alpha / 2)
        return ch[:, None, None] * eye + 1j * m / (2 * ch)[:, None, None]
    # H_F T = pi + (alpha - pi) n.sigma
    sh = np.sin(alpha / 2)
    return 1j * sh[:, None, None] * eye + m / (2 * sh)[:, None, None]


def _gap_widths(alpha: np.ndarray, period: float) -> tuple[np.ndarray, np.ndarray]:
    return 2 * alpha / period, 2 * (math.pi - alpha) / period


def _gap_slope_bound(p: DriveProtocol) -> float:
    """Upper bound on ``|d gap / dk|``: twice the largest intercell coupling."""
    return 2 * (abs(p.kappa0) + abs(p.dkappa0) + abs(p.dkappa1))


def _refine_gaps(p, ks, alpha, step, intracell, refine) -> GapReport:
    g0, gp = _gap_widths(alpha, p.period)
    spacing = 2 * math.pi / len(ks)
    bound = _gap_slope_bound(p)
    found = []
    for g in (g0, gp):
        j = int(np.argmin(g))
        found.append([float(g[j]), float(ks[j])])
    while refine and spacing > 1e-9:
        # "auto" stops once the bound proves no closing hides between samples
        open_ = [best - bound * spacing > 10 * GAP_CLOSED_TOL or best == 0 for best, _ in found]
        if refine == "auto" and all(open_):
            break
        offsets = spacing * np.linspace(-1, 1, 21)
        local = np.concatenate([found[0][1] + offsets, found[1][1] + offsets])
        ua, _, _ = bloch_propagators(p, local, step, intracell)
        widths = _gap_widths(_su2_parts(ua)[0], p.period)
        for which in (0, 1):
            gl = widths[which][21 * which : 21 * (which + 1)]
            jj = int(np.argmin(gl))
            if gl[jj] < found[which][0]:
                found[which] = [float(gl[jj]), float(local[21 * which + jj])]
        spacing /= 10
    return GapReport(found[0][0], found[1][0], found[0][1], found[1][1])


def quasienergy_gaps(
    p: DriveProtocol,
    n_k: int = DEFAULT_NK,
    dt: float | None = None,
    refine: bool | str = "auto",
    intracell: str = "odd",
) -> GapReport:
    """Minimum widths of the 0-gap and pi-gap of the bulk Floquet bands.

    Refinement zooms in on the grid minimum until the momentum resolution is
    below ``1e-9``, so closings between grid points are found.  ``"auto"``
    skips it when a Lipschitz bound already shows the gap is open;
    ``True`` always refines (accurate minima), ``False`` never does.
    """
    ks = k_grid(n_k)
    uf, _, step = bloch_propagators(p, ks, dt, intracell)
    return _refine_gaps(p, ks, _su2_parts(uf)[0], step, intracell, refine)


def _winding(block: np.ndarray, n_k: int) -> tuple[float, float]:
    """Phase-accumulation winding and finite-difference winding integral.

    Both follow ``(i / 2 pi) * closed integral of f^-1 df/dk``.
    """
    dphase = np.angle(np.roll(block, -1) / block)
    winding = -float(np.sum(dphase)) / (2 * math.pi)
    dk = 2 * math.pi / n_k
    deriv = (np.roll(block, -1) - np.roll(block, 1)) / (2 * dk)
    raw = (1j / (2 * math.pi)) * np.sum(deriv / block) * dk
    return winding, float(raw.real)


def _gap_invariant(gap, alpha, m, half, n_k, gap_width) -> GapInvariant:
    closed = gap_width < GAP_CLOSED_TOL
    if closed:
        return GapInvariant(gap, 0, 0, math.nan, math.nan, gap_width, True, math.nan, False)
    branch = "pi" if gap == "zero" else "zero"
    # V(T/2) = U(T/2) exp(i H_F T/2)
    v = half @ _half_period_exp(alpha, m, branch)
    if gap == "zero":
        block, off = v[:, 0, 1], np.maximum(np.abs(v[:, 0, 0]), np.abs(v[:, 1, 1]))
    else:
        block, off = v[:, 0, 0], np.maximum(np.abs(v[:, 0, 1]), np.abs(v[:, 1, 0]))
    off_block = float(off.max())
    if off_block > BLOCK_TOL:
        raise SymmetryBrokenError(
            f"{gap}-gap micromotion block structure violated: max off-block {off_block:.2e}"
        )
    winding, raw = _winding(block, n_k)
    signed = round(raw)
    residual = abs(raw - signed)
    converged = residual < QUANTIZATION_TOL and abs(winding - signed) < 1e-6
    return GapInvariant(gap, abs(signed), signed, residual, winding, gap_width, False, off_block, converged)


def _invariants(p: DriveProtocol, n_k: int, dt: float | None, reduce: bool, intracell: str):
    p = _require_symmetric(p, reduce)
    ks = k_grid(n_k)
    uf, half, step = bloch_propagators(p, ks, dt, intracell)
    alpha, m = _su2_parts(uf)
    gaps = _refine_gaps(p, ks, alpha, step, intracell, "auto")
    zero = _gap_invariant("zero", alpha, m, half, n_k, gaps.gap0)
    pi = _gap_invariant("pi", alpha, m, half, n_k, gaps.gappi)
    return zero, pi, step


def gap_invariant_zero(
    p: DriveProtocol, n_k: int = DEFAULT_NK, dt: float | None = None,
    reduce: bool = False, intracell: str = "odd",
) -> GapInvariant:
    return _invariants(p, n_k, dt, reduce, intracell)[0]


def gap_invariant_pi(
    p: DriveProtocol, n_k: int = DEFAULT_NK, dt: float | None = None,
    reduce: bool = False, intracell: str = "odd",
) -> GapInvariant:
    return _invariants(p, n_k, dt, reduce, intracell)[1]


def compute_invariants(
    p: DriveProtocol, n_k: int = DEFAULT_NK, dt: float | None = None,
    reduce: bool = False, intracell: str = "odd",
) -> InvariantPair:
    zero, pi, step = _invariants(p, n_k, dt, reduce, intracell)
    return InvariantPair.from_gaps(zero, pi, n_k, step)


def classify_phase(inv: InvariantPair, strict: bool = False) -> PhaseLabel:
    """Phase label from ``(|G0|, |Gpi|)``.

    A gap that closes somewhere in the zone carries no edge modes and counts
    as 0 (the pair stays flagged unconverged); ``strict=True`` refuses to
    classify such points.  An open gap whose winding did not converge always
    raises.
    """
    gaps = zip(("0", "pi"), inv.gap_closed, (inv.residual0, inv.residualpi))
    for name, closed, res in gaps:
        if closed and strict:
            raise ClassificationError(f"the {name}-gap closes; no phase label (strict)")
        if not closed and not res < QUANTIZATION_TOL:
            raise ClassificationError(f"{name}-gap winding not converged (residual {res:.3g})")
    for d in inv.details or ():
        if not d.gap_closed and not d.converged:
            raise ClassificationError(
                f"{d.gap}-gap windings disagree (integral {d.signed}, phase count {d.winding:.3g})"
            )
    key = (abs(inv.G0), abs(inv.Gpi))
    if key not in _LABELS:
        raise ClassificationError(f"invariants {key} lie outside the four-phase classification")
    return _LABELS[key]


class BlochDrive:
    """Two-band drive at fixed momentum, usable with the generic :mod:`~drivenssh.floquet` routines."""

    def __init__(self, p: DriveProtocol, k: float, intracell: str = "odd"):
        self.protocol = p
        self.k = k
        self.intracell = intracell
        self.period = p.period

    def hamiltonian(self, t: float) -> np.ndarray:
        return bloch_hamiltonian(self.protocol, self.k, t, self.intracell)


@dataclass
class ModeCensus:
    zero: int
    pi: int

    def as_tuple(self) -> tuple[int, int]:
        return self.zero, self.pi


def _count_localized(vectors: np.ndarray, eps_t: np.ndarray, sites: np.ndarray, threshold: float,
                     cluster_tol: float) -> int:
    """Count states with weight on ``sites`` above ``threshold``.

    Numerically degenerate states (``eps T`` within ``cluster_tol``) are
    counted through the eigenvalues of their region-projected overlap matrix,
    so the count does not depend on how the degenerate subspace was mixed.
    """
    if vectors.shape[1] == 0:
        return 0
    order = np.argsort(eps_t)
    eps_t, vectors = eps_t[order], vectors[:, order]
    breaks = np.flatnonzero(np.diff(eps_t) > cluster_tol) + 1
    count = 0
    for idx in np.split(np.arange(len(eps_t)), breaks):
        sub = vectors[np.ix_(sites, idx)]
        count += int(np.sum(np.linalg.eigvalsh(sub.conj().T @ sub) > threshold))
    return count


def region_mode_census(
    spec: FloquetSpectrum, sites, gap_fraction: float = 0.1, threshold: float = 0.5,
    cluster_tol: float = 1e-3,
) -> ModeCensus:
    """Count near-0 and near-pi states localized on ``sites`` (0-based).

    States are taken from the windows ``|eps| <= f pi / T`` and
    ``pi / T - |eps| <= f pi / T``; a state counts when its weight on
    ``sites`` exceeds ``threshold``.
    """
    sites = np.asarray(sites, dtype=int)
    half_zone = math.pi / spec.period
    d0 = spec.distance_to_zero()
    dpi = spec.distance_to_pi()
    near0 = d0 <= gap_fraction * half_zone
    nearpi = dpi <= gap_fraction * half_zone
    # chiral partners +eps / -eps share a cluster; their sublattice-polarized
    # combinations separate modes that hybridize across regions
    off0 = np.abs(spec.quasienergies * spec.period)
    offpi = np.abs(np.mod(spec.quasienergies * spec.period, 2 * math.pi) - math.pi)
    return ModeCensus(
        _count_localized(spec.vectors[:, near0], off0[near0], sites, threshold, cluster_tol),
        _count_localized(spec.vectors[:, nearpi], offpi[nearpi], sites, threshold, cluster_tol),
    )


def edge_mode_census(
    spec: FloquetSpectrum, gap_fraction: float = 0.1, threshold: float = 0.5, cluster_tol: float = 1e-3
) -> ModeCensus:
    """Near-0 and near-pi states localized on the outer ``ceil(N/10)`` sites of either end."""
    return region_mode_census(spec, edge_sites(spec.n_sites), gap_fraction, threshold, cluster_tol)


def domain_wall_region(p: DriveProtocol, index: int = 0) -> np.ndarray:
    """0-based sites within ``ceil(N/10)`` of the ``index``-th wall centre."""
    centre = domain_wall_sites(p)[index] - 1
    w = edge_window(p.n_sites)
    return np.arange(max(0, centre - w), min(p.n_sites, centre + w + 1))


def domain_wall_census(
    spec: FloquetSpectrum, p: DriveProtocol, index: int = 0,
    gap_fraction: float = 0.1, threshold: float = 0.5, cluster_tol: float = 1e-3,
) -> ModeCensus:
    return region_mode_census(spec, domain_wall_region(p, index), gap_fraction, threshold, cluster_tol)


def localized_weight(spec: FloquetSpectrum, sites) -> np.ndarray:
    return region_weight(spec.vectors, sites)
