"""Time evolution and Floquet analysis for time-periodic Hamiltonians.

Any object with a ``period`` attribute and a ``hamiltonian(t)`` method returning
a dense Hermitian array can be propagated; :class:`~drivenssh.models.DriveProtocol`
is the usual one.

Propagation is a product of exact exponentials of piecewise-constant
Hamiltonians.  The default ``rule="midpoint"`` samples ``H`` at the centre of
each step (second order in ``dt``); ``rule="left"`` samples the left endpoint
(first order).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import scipy.linalg

from .exceptions import NumericalError

DEFAULT_STEPS_PER_PERIOD = 1000
UNITARITY_TOL = 1e-9
BRANCH_CUT_TOL = 1e-12
BRANCHES = ("zero", "pi")


class PeriodicDrive(Protocol):
    period: float

    def hamiltonian(self, t: float) -> np.ndarray: ...


class BranchAmbiguityWarning(UserWarning):
    pass


def n_steps(span: float, dt: float | None, period: float) -> int:
    """Number of steps of size ``dt`` covering ``span``; ``dt`` must divide it."""
    if dt is None:
        dt = period / DEFAULT_STEPS_PER_PERIOD
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if span == 0:
        return 0
    ratio = span / dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"dt={dt} does not divide the interval {span}")
    return n


def step_unitary(h: np.ndarray, dt: float) -> np.ndarray:
    """``exp(-i h dt)`` for Hermitian ``h`` via its eigendecomposition."""
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}; max|H|={np.abs(h).max():.3e}") from exc
    if not np.all(np.isfinite(w)):
        raise NumericalError(f"non-finite eigenvalues; max|H|={np.abs(h).max():.3e}")
    return (v * np.exp(-1j * w * dt)) @ v.conj().T


def _sample_time(t0: float, j: int, dt: float, rule: str) -> float:
    if rule == "midpoint":
        return t0 + (j + 0.5) * dt
    if rule == "left":
        return t0 + j * dt
    raise ValueError(f"unknown integration rule {rule!r}")


def unitarity_residual(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


@dataclass
class Propagator:
    """Unitary ``U(t, t0)`` with the step used to build it."""

    matrix: np.ndarray
    t0: float
    t: float
    dt: float

    @property
    def span(self) -> float:
        return self.t - self.t0

    def unitarity_residual(self) -> float:
        return unitarity_residual(self.matrix)

    def __matmul__(self, other: "Propagator") -> "Propagator":
        # self after other: U(t2, t1) @ U(t1, t0)
        if not math.isclose(other.t, self.t0, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"cannot compose U(.., {self.t0}) after U({other.t}, ..)")
        return Propagator(self.matrix @ other.matrix, other.t0, self.t, self.dt)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.matrix @ psi


def propagate(
    drive: PeriodicDrive,
    t0: float,
    t1: float,
    dt: float | None = None,
    rule: str = "midpoint",
    checkpoints: Sequence[int] = (),
):
    """Propagator from ``t0`` to ``t1``.

    With ``checkpoints`` (step counts), also returns the partial propagators
    after those many steps, as a list in the same order.
    """
    n = n_steps(t1 - t0, dt, drive.period)
    dim = np.asarray(drive.hamiltonian(t0)).shape[0]
    step = (t1 - t0) / n if n else 0.0
    u = np.eye(dim, dtype=complex)
    wanted = {int(c): None for c in checkpoints}
    if 0 in wanted:
        wanted[0] = u.copy()
    for j in range(n):
        u = step_unitary(drive.hamiltonian(_sample_time(t0, j, step, rule)), step) @ u
        if j + 1 in wanted:
            wanted[j + 1] = u.copy()
    prop = Propagator(u, t0, t1, step)
    if checkpoints:
        return prop, [wanted[int(c)] for c in checkpoints]
    return prop


def floquet_operator(
    drive: PeriodicDrive,
    t0: float = 0.0,
    dt: float | None = None,
    rule: str = "midpoint",
    tol: float = UNITARITY_TOL,
) -> Propagator:
    """One-period propagator ``U(t0 + T, t0)``; raises if unitarity is breached."""
    prop = propagate(drive, t0, t0 + drive.period, dt, rule)
    res = prop.unitarity_residual()
    if res > tol:
        raise NumericalError(f"Floquet operator unitarity residual {res:.2e} exceeds {tol:.1e}")
    return prop


def fold_phases(eps_t: np.ndarray, branch: str = "zero") -> np.ndarray:
    """Fold ``epsilon * T`` into ``(-pi, pi]`` (zero) or ``(0, 2 pi]`` (pi)."""
    e = np.mod(np.asarray(eps_t, dtype=float) + math.pi, 2 * math.pi) - math.pi
    e = np.where(e <= -math.pi, e + 2 * math.pi, e)
    if branch == "zero":
        return e
    if branch == "pi":
        return np.where(e <= 0, e + 2 * math.pi, e)
    raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")


def _near_cut(eps_t: np.ndarray, branch: str) -> bool:
    if branch == "zero":
        return bool(np.any(np.abs(eps_t) > math.pi - BRANCH_CUT_TOL))
    return bool(np.any((eps_t < BRANCH_CUT_TOL) | (eps_t > 2 * math.pi - BRANCH_CUT_TOL)))


def unitary_eig(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and an orthonormal eigenbasis of a unitary matrix.

    Uses the complex Schur form, which is diagonal for normal matrices and
    returns an orthonormal basis inside degenerate eigenvalue clusters.
    """
    t, z = scipy.linalg.schur(u, output="complex")
    off = np.abs(np.triu(t, 1)).max() if t.shape[0] > 1 else 0.0
    if off > 1e-8:
        raise NumericalError(f"matrix is not normal (Schur off-diagonal {off:.2e}); is it unitary?")
    return np.diag(t).copy(), z


@dataclass
class EffectiveHamiltonian:
    """``H_F = (i / T) log U`` on a chosen logarithm branch."""

    matrix: np.ndarray
    quasienergies: np.ndarray
    vectors: np.ndarray
    branch: str
    period: float
    ambiguous: bool = False

    def exp_i(self, tau: float) -> np.ndarray:
        """``exp(+i H_F tau)``."""
        return (self.vectors * np.exp(1j * self.quasienergies * tau)) @ self.vectors.conj().T


def effective_hamiltonian(u, branch: str = "zero", period: float | None = None) -> EffectiveHamiltonian:
    """Effective Hamiltonian of a one-period propagator.

    ``branch="zero"`` places ``epsilon T`` in ``(-pi, pi]`` (cut at the zone
    edge); ``branch="pi"`` places it in ``(0, 2 pi]`` (cut at zero).  An
    eigenphase within ``1e-12`` of the cut sets ``ambiguous`` and warns.
    """
    if isinstance(u, Propagator):
        period = u.span if period is None else period
        u = u.matrix
    if period is None:
        raise ValueError("period is required when passing a bare matrix")
    lam, z = unitary_eig(np.asarray(u, dtype=complex))
    raw = -np.angle(lam)
    eps_t = fold_phases(raw, branch)
    # fold_phases maps exact -pi to +pi; detect closeness before folding
    ambiguous = _near_cut(eps_t, branch) or (
        branch == "pi" and bool(np.any(np.abs(raw) < BRANCH_CUT_TOL))
    )
    if ambiguous:
        warnings.warn(
            f"eigenphase within {BRANCH_CUT_TOL:g} of the {branch!r} branch cut",
            BranchAmbiguityWarning,
            stacklevel=2,
        )
    eps = eps_t / period
    h = (z * eps) @ z.conj().T
    h = 0.5 * (h + h.conj().T)
    return EffectiveHamiltonian(h, eps, z, branch, period, ambiguous)


def edge_window(n_sites: int) -> int:
    """Sites counted at each end when measuring edge localization."""
    return max(1, math.ceil(n_sites / 10))


def edge_sites(n_sites: int) -> np.ndarray:
    w = edge_window(n_sites)
    idx = np.r_[np.arange(min(w, n_sites)), np.arange(max(w, n_sites - w), n_sites)]
    return np.unique(idx)


def region_weight(vectors: np.ndarray, sites) -> np.ndarray:
    """Probability on ``sites`` (0-based) for each column of ``vectors``."""
    return np.sum(np.abs(vectors[np.asarray(sites, dtype=int)]) ** 2, axis=0)


@dataclass
class FloquetSpectrum:
    """Quasienergies sorted ascending, eigenvectors as columns.

    ``ambiguous`` marks an eigenphase on the branch cut; pi modes of long
    chains sit there routinely, so it is recorded rather than warned about.
    """

    quasienergies: np.ndarray
    vectors: np.ndarray
    edge_weight: np.ndarray
    period: float
    t0: float = 0.0
    branch: str = "zero"
    ambiguous: bool = False

    @property
    def n_sites(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return len(self.quasienergies)

    def region_weight(self, sites) -> np.ndarray:
        return region_weight(self.vectors, sites)

    def edge_localized(self, threshold: float = 0.5) -> np.ndarray:
        return self.edge_weight > threshold

    def distance_to_zero(self) -> np.ndarray:
        return np.abs(fold_phases(self.quasienergies * self.period, "zero")) / self.period

    def distance_to_pi(self) -> np.ndarray:
        return math.pi / self.period - self.distance_to_zero()


def quasienergy_spectrum(
    drive: PeriodicDrive,
    t0: float = 0.0,
    dt: float | None = None,
    branch: str = "zero",
    rule: str = "midpoint",
    tol: float = UNITARITY_TOL,
) -> FloquetSpectrum:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguityWarning)
        heff = effective_hamiltonian(floquet_operator(drive, t0, dt, rule, tol), branch)
    order = np.argsort(heff.quasienergies, kind="stable")
    eps = heff.quasienergies[order]
    vecs = heff.vectors[:, order]
    weight = region_weight(vecs, edge_sites(vecs.shape[0]))
    return FloquetSpectrum(eps, vecs, weight, drive.period, t0, branch, heff.ambiguous)


def micromotion_operator(
    drive: PeriodicDrive,
    t: float,
    t0: float = 0.0,
    dt: float | None = None,
    branch: str = "zero",
    rule: str = "midpoint",
) -> np.ndarray:
    """``V(t, t0) = U(t, t0) exp(i H_F (t - t0))`` for ``t`` in ``[t0, t0 + T]``."""
    period = drive.period
    if not (t0 - 1e-12 <= t <= t0 + period + 1e-12):
        raise ValueError(f"t={t} outside one period starting at t0={t0}")
    total = n_steps(period, dt, period)
    step = period / total
    k = n_steps(t - t0, step, period) if t > t0 else 0
    uf, (ut,) = propagate(drive, t0, t0 + period, step, rule, checkpoints=[k])
    heff = effective_hamiltonian(uf, branch)
    return ut @ heff.exp_i(t - t0)


@dataclass
class EvolutionRecord:
    """State amplitudes on a uniform time grid; ``amplitudes[j]`` is at ``times[j]``."""

    times: np.ndarray
    amplitudes: np.ndarray
    dt: float
    period: float | None = None

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def n_sites(self) -> int:
        return self.amplitudes.shape[1]

    def norm_drift(self) -> float:
        total = self.intensity.sum(axis=1)
        return float(np.abs(total - total[0]).max() / total[0])

    def steps_per_period(self) -> int:
        if self.period is None:
            raise ValueError("record has no drive period")
        return n_steps(self.period, self.dt, self.period)

    def stroboscopic(self) -> np.ndarray:
        """Amplitudes at ``t0 + n T``."""
        return self.amplitudes[:: self.steps_per_period()]


def evolve(
    drive: PeriodicDrive,
    psi0,
    t_final: float,
    dt: float | None = None,
    t0: float = 0.0,
    rule: str = "midpoint",
) -> EvolutionRecord:
    """Propagate ``psi0`` from ``t0`` to ``t_final`` recording every step."""
    psi = np.asarray(psi0, dtype=complex).copy()
    n = n_steps(t_final - t0, dt, drive.period)
    step = (t_final - t0) / n if n else (dt or drive.period / DEFAULT_STEPS_PER_PERIOD)
    amps = np.empty((n + 1, psi.size), dtype=complex)
    amps[0] = psi
    for j in range(n):
        h = drive.hamiltonian(_sample_time(t0, j, step, rule))
        try:
            w, v = np.linalg.eigh(h)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed at step {j}: {exc}") from exc
        psi = v @ (np.exp(-1j * w * step) * (v.conj().T @ psi))
        amps[j + 1] = psi
    times = t0 + step * np.arange(n + 1)
    return EvolutionRecord(times, amps, step, drive.period)


@dataclass
class FloquetMode:
    """Periodic part ``u(t) = exp(i eps t) psi(t)`` of a Floquet state."""

    times: np.ndarray
    u: np.ndarray
    quasienergy: float
    periodicity_residual: float
    periodic: bool


def floquet_mode_decomposition(
    record: EvolutionRecord,
    quasienergy: float,
    period: float | None = None,
    tol: float = 1e-7,
) -> FloquetMode:
    """Strip the quasienergy phase from an eigenstate evolution.

    The periodicity residual is ``max |u(t + T) - u(t)|`` over the record; a
    value above ``tol`` means the input was not a Floquet eigenstate (or the
    quasienergy is wrong) and ``periodic`` is False.
    """
    period = record.period if period is None else period
    if period is None:
        raise ValueError("period is required")
    u = record.amplitudes * np.exp(1j * quasienergy * record.times)[:, None]
    shift = n_steps(period, record.dt, period)
    if len(record.times) <= shift:
        raise ValueError("record shorter than one period")
    residual = float(np.abs(u[shift:] - u[:-shift]).max())
    return FloquetMode(record.times, u, quasienergy, residual, residual < tol)
