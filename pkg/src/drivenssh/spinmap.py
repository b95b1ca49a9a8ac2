"""Driven transverse-field spin chain as a Majorana chain.

After a Jordan-Wigner transformation the non-interacting chain
``sum J(t) s^x s^x + h(t) s^z`` becomes a chain of ``2 n_spins`` Majorana
operators with alternating couplings ``-h`` (within a spin) and ``J``
(between spins).  With the drive

    J(t) = kappa0 + dkappa0 + dkappa1 cos(omega t + phi)
    h(t) = -(kappa0 - dkappa0 - dkappa1 cos(omega t + phi))

those couplings are exactly the bonds of a driven SSH chain, so the two
problems share their quasienergy spectrum.  The single-particle generator of
``H = -(i/2) sum A_ij g_i g_j`` is taken as ``MAJORANA_SCALE * i A``; with the
factor 1/2 it is unitarily equivalent to the SSH hopping matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import UnsupportedInteractionError
from .floquet import FloquetSpectrum, fold_phases, quasienergy_spectrum
from .models import DriveProtocol, majorana_matrix

MAJORANA_SCALE = 0.5


@dataclass(frozen=True)
class SpinDriveParams:
    kappa0: float
    dkappa0: float = 0.0
    dkappa1: float = 0.0
    period: float = 2 * math.pi
    phi: float = 0.0
    jz: float = 0.0

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    def _drive(self, t):
        return self.dkappa0 + self.dkappa1 * np.cos(self.omega * np.asarray(t) + self.phi)

    def jbar(self, t):
        """Averaged exchange coupling."""
        return self.kappa0 + self._drive(t)

    def hbar(self, t):
        """Averaged transverse field."""
        return -(self.kappa0 - self._drive(t))

    def mean_abs(self, n: int = 256) -> tuple[float, float]:
        """Period averages of ``|J|`` and ``|h|``."""
        t = np.linspace(0.0, self.period, n, endpoint=False)
        return float(np.mean(np.abs(self.jbar(t)))), float(np.mean(np.abs(self.hbar(t))))

    def static_phase(self) -> str:
        """``"ferromagnetic"`` (end Majoranas) when ``<|J|> > <|h|>``, else ``"paramagnetic"``."""
        j, h = self.mean_abs()
        return "ferromagnetic" if j > h else "paramagnetic"


def spin_to_majorana_protocol(s: SpinDriveParams, n_spins: int) -> DriveProtocol:
    """Chain of ``2 n_spins`` Majorana sites; odd bonds carry ``-h``, even bonds ``J``."""
    if s.jz != 0:
        raise UnsupportedInteractionError(
            f"jz={s.jz}: the quartic Majorana term has no single-particle form"
        )
    if n_spins < 1:
        raise ValueError(f"n_spins must be >= 1, got {n_spins}")
    return DriveProtocol(s.kappa0, s.dkappa0, s.dkappa1, period=s.period, theta=s.phi, n_sites=2 * n_spins)


class MajoranaDrive:
    """Single-particle generator ``MAJORANA_SCALE * i A(t)`` of a Majorana chain."""

    def __init__(self, p: DriveProtocol):
        self.protocol = p
        self.period = p.period

    def hamiltonian(self, t: float) -> np.ndarray:
        return MAJORANA_SCALE * 1j * majorana_matrix(self.protocol, t)


def majorana_spectrum(s: SpinDriveParams, n_spins: int, dt: float | None = None) -> FloquetSpectrum:
    return quasienergy_spectrum(MajoranaDrive(spin_to_majorana_protocol(s, n_spins)), dt=dt)


def ssh_spectrum(s: SpinDriveParams, n_spins: int, dt: float | None = None) -> FloquetSpectrum:
    return quasienergy_spectrum(spin_to_majorana_protocol(s, n_spins), dt=dt)


def circular_discrepancy(eps_a: np.ndarray, eps_b: np.ndarray, period: float) -> float:
    """Largest quasienergy mismatch between two spectra, modulo ``2 pi / T``.

    Both spectra are sorted on the circle; states straddling the zone edge may
    be listed at either end, so cyclic offsets of one place are also tried.
    """
    a = np.sort(fold_phases(np.asarray(eps_a) * period))
    b = np.sort(fold_phases(np.asarray(eps_b) * period))
    if a.shape != b.shape:
        raise ValueError(f"spectra differ in size: {a.size} vs {b.size}")
    best = math.inf
    for shift in (-1, 0, 1):
        d = np.angle(np.exp(1j * (a - np.roll(b, shift))))
        best = min(best, float(np.abs(d).max()))
    return best / period


def spectrum_equivalence(s: SpinDriveParams, n_spins: int, dt: float | None = None) -> float:
    """Max quasienergy discrepancy between the Majorana and SSH constructions."""
    maj = majorana_spectrum(s, n_spins, dt)
    ssh = ssh_spectrum(s, n_spins, dt)
    return circular_discrepancy(maj.quasienergies, ssh.quasienergies, s.period)
