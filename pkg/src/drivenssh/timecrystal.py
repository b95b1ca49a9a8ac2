"""Superpositions of 0 and pi modes and their period-doubled response.

A 0 mode and a pi mode localized at the same place beat at the difference of
their quasienergies.  When that difference is ``pi / T`` the local intensity
repeats every ``2T`` rather than every ``T``.

Locations are ``"left"``, ``"right"`` or a 1-based domain-wall centre site.
Every site of the chain belongs to the nearest location marker (the two end
sites and each wall centre); a mode "lives" at a location when more than half
of its weight falls in that territory.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import InsufficientDataError, NotInPhaseError
from .floquet import EvolutionRecord, FloquetSpectrum, Propagator, evolve, n_steps
from .models import DriveProtocol, domain_wall_sites, hamiltonian_real_space

CROSSTALK_LIMIT = 0.10
PERIOD_2T_TOL = 0.05
STATIC_TOL = 0.10


class HybridizationWarning(UserWarning):
    """Inputs are too close for their modes to stay independent."""


def location_markers(n_sites: int, dw_sites: Sequence[int] = ()) -> dict:
    """0-based marker site for each location present on the chain."""
    markers = {"left": 0, "right": n_sites - 1}
    for m in dw_sites:
        markers[int(m)] = int(m) - 1
    return markers


def territory(n_sites: int, location, dw_sites: Sequence[int] = ()) -> np.ndarray:
    """0-based sites closer to ``location`` than to any other marker."""
    markers = location_markers(n_sites, dw_sites)
    if location not in markers:
        raise NotInPhaseError(f"unknown location {location!r}; available {list(markers)}")
    names = list(markers)
    pos = np.array([markers[k] for k in names])
    sites = np.arange(n_sites)
    owner = np.argmin(np.abs(sites[:, None] - pos[None, :]), axis=1)
    return sites[owner == names.index(location)]


@dataclass
class LocalizedMode:
    vector: np.ndarray
    quasienergy: float
    weight: float


def _localized_mode(spec: FloquetSpectrum, sites: np.ndarray, near: np.ndarray, offset: np.ndarray,
                    centre: float) -> LocalizedMode | None:
    """Most localized combination of the window states on ``sites``."""
    idx = np.flatnonzero(near)
    if idx.size == 0:
        return None
    psi = spec.vectors[:, idx]
    sub = psi[sites]
    w, c = np.linalg.eigh(sub.conj().T @ sub)
    top = c[:, -1]
    vec = psi @ top
    eps = centre + float(np.sum(np.abs(top) ** 2 * offset[idx])) / spec.period
    return LocalizedMode(vec / np.linalg.norm(vec), eps, float(w[-1]))


def _eigen_candidates(spec: FloquetSpectrum, sites: np.ndarray, near: np.ndarray, tie: float = 1e-3) -> list[int]:
    """Window eigenstates whose weight on ``sites`` is within ``tie`` of the best."""
    idx = np.flatnonzero(near)
    if idx.size == 0:
        return []
    weights = spec.region_weight(sites)[idx]
    return [int(j) for j in idx[weights >= weights.max() - tie]]


def _eigen_pair(spec: FloquetSpectrum, sites: np.ndarray, near0: np.ndarray, nearpi: np.ndarray):
    # hybridized end modes come as +/- eps partners of equal weight; take the
    # pair whose splitting is closest to pi / T
    zeros, pis = _eigen_candidates(spec, sites, near0), _eigen_candidates(spec, sites, nearpi)
    if not zeros or not pis:
        return None, None
    eps = spec.quasienergies
    j0, jpi = min(
        ((a, b) for a in zeros for b in pis),
        key=lambda ab: (abs(abs(eps[ab[1]] - eps[ab[0]]) * spec.period - math.pi), ab),
    )
    weight = spec.region_weight(sites)
    return tuple(
        LocalizedMode(spec.vectors[:, j].copy(), float(eps[j]), float(weight[j])) for j in (j0, jpi)
    )


@dataclass
class SuperpositionInput:
    """``alpha |0> + beta |pi>`` at one location, with ``|alpha|^2 + |beta|^2 = 1``."""

    location: object
    alpha: complex
    beta: complex
    zero_mode: np.ndarray
    pi_mode: np.ndarray
    eps0: float
    epspi: float
    weights: tuple[float, float] = (1.0, 1.0)
    site: int = 0

    @property
    def state(self) -> np.ndarray:
        return self.alpha * self.zero_mode + self.beta * self.pi_mode

    @property
    def splitting(self) -> float:
        return abs(self.epspi - self.eps0)


def _gauge_fix(vec: np.ndarray, anchor: int) -> np.ndarray:
    """Make ``vec[anchor]`` real and positive."""
    a = vec[anchor]
    return vec * (abs(a) / a) if abs(a) > 0 else vec


def build_superposition(
    spec: FloquetSpectrum,
    location="left",
    alpha: complex = 1 / math.sqrt(2),
    beta: complex = 1 / math.sqrt(2),
    dw_sites: Sequence[int] = (),
    gap_fraction: float = 0.1,
    threshold: float = 0.5,
    eigenstates: bool = False,
) -> SuperpositionInput:
    """Superpose the 0 and pi modes living at ``location``.

    By default each mode is the combination of near-gap states most localized
    in the location's territory, which separates hybridized end modes of
    short chains.  ``eigenstates=True`` instead picks single Floquet
    eigenstates with the most weight there, so the pair beats exactly at its
    quasienergy difference; ties between hybridized partners go to the pair
    split closest to ``pi / T``, and the weight threshold is halved because a
    hybrid shares its weight with the mirror end.  Both modes are phase-fixed to be real positive
    on the probe site, the site of the location's territory where
    ``|u0| |u_pi|`` peaks (the beat is strongest there; a wall centre can
    be a node of both modes).
    """
    norm = math.hypot(abs(alpha), abs(beta))
    if norm == 0:
        raise ValueError("alpha and beta cannot both vanish")
    alpha, beta = alpha / norm, beta / norm
    n = spec.n_sites
    sites = territory(n, location, dw_sites)
    half_zone = math.pi / spec.period
    near0 = spec.distance_to_zero() <= gap_fraction * half_zone
    nearpi = spec.distance_to_pi() <= gap_fraction * half_zone
    eps_t = spec.quasienergies * spec.period
    if eigenstates:
        zero, pi = _eigen_pair(spec, sites, near0, nearpi)
    else:
        zero = _localized_mode(spec, sites, near0, eps_t, 0.0)
        pi = _localized_mode(spec, sites, nearpi, np.mod(eps_t, 2 * math.pi) - math.pi, half_zone)
    if eigenstates:
        threshold = threshold / 2
    for name, mode in (("0", zero), ("pi", pi)):
        if mode is None or mode.weight <= threshold:
            got = "none" if mode is None else f"weight {mode.weight:.3f}"
            raise NotInPhaseError(f"no {name} mode localized at {location!r} ({got})")
    anchor = int(sites[np.argmax(np.abs(zero.vector[sites]) * np.abs(pi.vector[sites]))])
    return SuperpositionInput(
        location, alpha, beta,
        _gauge_fix(zero.vector, anchor), _gauge_fix(pi.vector, anchor),
        zero.quasienergy, pi.quasienergy, (zero.weight, pi.weight), anchor,
    )


def mode_projection(sup: SuperpositionInput, psi) -> tuple[float, float]:
    """Weights ``|<0|psi>|^2`` and ``|<pi|psi>|^2`` of an arbitrary input."""
    psi = np.asarray(psi, dtype=complex)
    return float(abs(np.vdot(sup.zero_mode, psi)) ** 2), float(abs(np.vdot(sup.pi_mode, psi)) ** 2)


def site_injection(n_sites: int, site: int = 1) -> np.ndarray:
    """Unit amplitude on one 1-based site."""
    psi = np.zeros(n_sites, dtype=complex)
    psi[site - 1] = 1.0
    return psi


def direct_intensity(psi0: np.ndarray, psipi: np.ndarray, sign: int = 1) -> np.ndarray:
    return np.abs(psi0 + sign * psipi) ** 2


def interference_intensity(u0, upi, eps0: float, epspi: float, t, sign: int = 1, form: str = "exact"):
    """Three-term intensity of ``psi_0 +/- psi_pi`` from periodic parts.

    ``u0`` and ``upi`` have shape ``(len(t), n_sites)`` and satisfy
    ``psi(t) = u(t) exp(-i eps t)``.  ``form="exact"`` keeps the complex cross
    term ``2 Re{u0* upi exp(-i (epspi - eps0) t)}`` and equals the direct
    intensity identically.  ``form="cosine"`` uses ``2 Re{u0* upi}
    cos(|eps0 - epspi| t)``, which is exact only when ``u0* upi`` is real
    (stroboscopic times of a chiral-symmetric chain).
    """
    u0 = np.asarray(u0)
    upi = np.asarray(upi)
    t = np.asarray(t, dtype=float)
    if u0.shape != upi.shape or u0.shape[0] != t.shape[0]:
        raise ValueError(f"grid mismatch: u0 {u0.shape}, upi {upi.shape}, t {t.shape}")
    base = np.abs(u0) ** 2 + np.abs(upi) ** 2
    overlap = np.conj(u0) * upi
    if form == "exact":
        cross = 2 * np.real(overlap * np.exp(-1j * (epspi - eps0) * t)[:, None])
    elif form == "cosine":
        cross = 2 * np.real(overlap) * np.cos(abs(eps0 - epspi) * t)[:, None]
    else:
        raise ValueError(f"unknown form {form!r}")
    return base + sign * cross


def stroboscopic_map(uf, psi_in, n_max: int) -> np.ndarray:
    """States ``U_F^n psi_in`` for ``n = 0 .. n_max`` as rows."""
    u = uf.matrix if isinstance(uf, Propagator) else np.asarray(uf)
    out = np.empty((n_max + 1, u.shape[0]), dtype=complex)
    out[0] = psi_in
    for n in range(n_max):
        out[n + 1] = u @ out[n]
    return out


@dataclass
class SubharmonicReport:
    """Spectral content of a local intensity trace.

    Weights are Fourier powers of the rectangular-windowed trace at the drive
    frequency and at half of it.  ``r2T`` and ``rT`` are the largest changes
    of intensity over a shift of ``2T`` and ``T``; ``peak`` is the largest
    intensity in the window.
    """

    sites: tuple[int, ...]
    dominant_frequency: float
    weight_half: float
    weight_full: float
    weight_dc: float
    r2T: float
    rT: float
    peak: float
    modulation: float
    n_windows: int
    verdict: str
    tol: float = PERIOD_2T_TOL

    @property
    def ratio(self) -> float:
        return self.weight_half / self.weight_full if self.weight_full > 0 else math.inf

    @property
    def period_doubled(self) -> bool:
        return self.verdict == "period-2T"


def subharmonic_analyze(
    rec: EvolutionRecord,
    sites=(0,),
    period: float | None = None,
    tol: float = PERIOD_2T_TOL,
    static_tol: float = STATIC_TOL,
) -> SubharmonicReport:
    """Classify the summed intensity on ``sites`` (0-based).

    Verdicts, in order: ``period-2T`` when the half-frequency weight beats the
    drive-frequency weight and ``r2T < tol * peak``; ``static`` when the
    trace varies by less than ``static_tol`` of its peak; ``period-T`` when
    the drive-frequency weight is at least the half-frequency one; otherwise
    ``irregular``.
    """
    period = rec.period if period is None else period
    if period is None:
        raise ValueError("period is required")
    sites = tuple(int(s) for s in np.atleast_1d(sites))
    per = n_steps(period, rec.dt, period)
    span_steps = len(rec.times) - 1
    if span_steps < 4 * per:
        raise InsufficientDataError(
            f"record spans {span_steps / per:.2f} periods; at least 4 are needed"
        )
    m = span_steps // (2 * per)
    trace = rec.intensity[:, sites].sum(axis=1)
    window = trace[: 2 * per * m]
    spectrum = np.abs(np.fft.rfft(window) / window.size) ** 2
    r2T = float(np.abs(trace[2 * per :] - trace[: -2 * per]).max())
    rT = float(np.abs(trace[per:] - trace[:-per]).max())
    peak = float(window.max())
    modulation = float((window.max() - window.min()) / peak) if peak > 0 else 0.0
    j = 1 + int(np.argmax(spectrum[1:]))
    dominant = 2 * math.pi * j / (2 * period * m)
    half, full = float(spectrum[m]), float(spectrum[2 * m])
    if half > full and r2T < tol * peak:
        verdict = "period-2T"
    elif modulation < static_tol:
        verdict = "static"
    elif full >= half:
        verdict = "period-T"
    else:
        verdict = "irregular"
    return SubharmonicReport(
        sites, dominant, half, full, float(spectrum[0]), r2T, rT, peak, modulation, m, verdict, tol
    )


def location_site(n_sites: int, location, dw_sites: Sequence[int] = ()) -> int:
    """0-based marker site of a location."""
    return location_markers(n_sites, dw_sites)[location]


@dataclass
class MultiExcitationResult:
    record: EvolutionRecord
    inputs: list
    reports: dict
    crosstalk: dict
    separated: bool
    solo: dict = field(default_factory=dict, repr=False)

    @property
    def all_period_doubled(self) -> bool:
        return all(r.period_doubled for r in self.reports.values())


def multi_excitation_run(
    p: DriveProtocol,
    spec: FloquetSpectrum,
    locations: Sequence,
    n_cycles: int = 4,
    dt: float | None = None,
    alpha: complex = 1 / math.sqrt(2),
    beta: complex = 1 / math.sqrt(2),
    overlap_limit: float = 0.1,
) -> MultiExcitationResult:
    """Inject superpositions at several locations at once.

    Each location is also run alone; crosstalk at a location is the largest
    change of its probe-site intensity caused by the other inputs, relative
    to its solo peak.  A :class:`HybridizationWarning` is raised when any
    input mode puts more than ``overlap_limit`` of its weight in another
    input's territory.
    """
    dws = domain_wall_sites(p)
    inputs = [build_superposition(spec, loc, alpha, beta, dws) for loc in locations]
    separated = True
    for a in inputs:
        for b in inputs:
            if a is b:
                continue
            other = territory(p.n_sites, b.location, dws)
            leak = max(float(np.sum(np.abs(a.zero_mode[other]) ** 2)), float(np.sum(np.abs(a.pi_mode[other]) ** 2)))
            if leak > overlap_limit:
                separated = False
    if not separated:
        warnings.warn(
            "input locations overlap; expect finite-size hybridization", HybridizationWarning, stacklevel=2
        )
    total = sum(s.state for s in inputs)
    norm = np.linalg.norm(total)
    t_final = n_cycles * p.period
    record = evolve(p, total / norm, t_final, dt)
    reports, crosstalk, solo = {}, {}, {}
    for s in inputs:
        site = s.site
        reports[s.location] = subharmonic_analyze(record, (site,), p.period)
        # same amplitude the input carries inside the combined state
        alone = evolve(p, s.state / norm, t_final, dt)
        solo[s.location] = alone
        local = alone.intensity[:, site]
        crosstalk[s.location] = float(np.abs(record.intensity[:, site] - local).max() / local.max())
    return MultiExcitationResult(record, inputs, reports, crosstalk, separated, solo)


class BondScaledDrive:
    """A protocol with each bond coupling multiplied by a static factor.

    Scaling hoppings keeps the chain bipartite, so chiral symmetry survives.
    """

    def __init__(self, p: DriveProtocol, scale):
        scale = np.asarray(scale, dtype=float)
        if scale.shape != (p.n_bonds,):
            raise ValueError(f"need {p.n_bonds} bond factors, got shape {scale.shape}")
        self.protocol = p
        self.period = p.period
        mask = np.zeros((p.n_sites, p.n_sites))
        idx = np.arange(p.n_sites - 1)
        mask[idx, idx + 1] = mask[idx + 1, idx] = scale[: p.n_sites - 1]
        if p.periodic:
            mask[0, -1] = mask[-1, 0] = scale[-1]
        self._mask = mask

    def hamiltonian(self, t: float) -> np.ndarray:
        return hamiltonian_real_space(self.protocol, t) * self._mask
