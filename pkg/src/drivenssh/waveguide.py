"""Curved waveguide arrays: spacing profiles, coupling calibration, protocols.

Guide spacing on bond ``i`` along the propagation direction ``z`` is

    G_i(z) = g0 - (-1)**i * (g1 + 2 A0 cos(2 pi z / Lambda + theta))

so bond 1 (between the first two guides) is the wide, weakly coupled one,
matching the weak first bond of :class:`~drivenssh.models.DriveProtocol`.
Couplings follow from spacings through a calibration ``kappa(G)``; the default
model is ``kappa = a exp(-G / b)``.  Lengths are in mm and couplings in 1/mm,
so the drive period of the emitted protocol is ``Lambda``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import DataError, GeometryError
from .models import DriveProtocol

TABLE_HEADER = ("G_mm", "lc_mm")
TRUNCATION_LIMIT = 0.20


class TruncationWarning(UserWarning):
    """Harmonics dropped from the coupling modulation carry significant power."""


@dataclass(frozen=True)
class WaveguideGeometry:
    g0: float
    g1: float
    A0: float
    Lambda: float
    theta: float = 0.0
    n_guides: int = 10
    L: float | None = None

    def __post_init__(self):
        if self.L is None:
            object.__setattr__(self, "L", 4 * self.Lambda)
        for name in ("g0", "Lambda", "L"):
            if not getattr(self, name) > 0:
                raise GeometryError(f"{name} must be positive, got {getattr(self, name)}")
        if self.g1 < 0 or self.A0 < 0:
            raise GeometryError(f"g1 and A0 must be non-negative, got g1={self.g1}, A0={self.A0}")
        if self.n_guides < 2:
            raise GeometryError(f"need at least two guides, got {self.n_guides}")
        lo = min(min_spacings(self))
        if lo <= 0:
            raise GeometryError(f"guides touch or cross: minimal spacing {lo:.4g} mm")

    @property
    def n_cycles(self) -> float:
        return self.L / self.Lambda

    @classmethod
    def from_minima(cls, gmin1: float, gmin2: float, A0: float = 0.8, **kwargs) -> "WaveguideGeometry":
        """Geometry whose bond-1 and bond-2 minimal spacings are ``gmin1``, ``gmin2``."""
        g0 = 0.5 * (gmin1 + gmin2) + 2 * A0
        return cls(g0, 0.5 * (gmin1 - gmin2), A0, **kwargs)


def _parity(bond) -> np.ndarray:
    return np.where(np.asarray(bond) % 2 == 0, 1.0, -1.0)


def _spacing(geom: WaveguideGeometry, bond, z) -> np.ndarray:
    phase = 2 * math.pi * np.asarray(z, dtype=float) / geom.Lambda + geom.theta
    return geom.g0 - _parity(bond) * (geom.g1 + 2 * geom.A0 * np.cos(phase))


def spacing_profile(geom: WaveguideGeometry, bond: int, z):
    """Spacing of bond ``bond`` (1-based) at position(s) ``z`` in ``[0, L]``."""
    if not 1 <= bond <= geom.n_guides - 1:
        raise IndexError(f"bond {bond} outside [1, {geom.n_guides - 1}]")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > geom.L):
        raise ValueError(f"z outside [0, {geom.L}]")
    g = _spacing(geom, bond, z)
    if np.any(g <= 0):
        raise GeometryError(f"non-positive spacing on bond {bond}")
    return g if g.ndim else float(g)


def _cos_range(a: float, b: float) -> tuple[float, float]:
    """Min and max of ``cos`` over the phase interval ``[a, b]``."""
    vals = [math.cos(a), math.cos(b)]
    k = math.ceil(a / math.pi)
    while k * math.pi <= b:
        vals.append(1.0 if k % 2 == 0 else -1.0)
        k += 1
    return min(vals), max(vals)


def min_spacings(geom: WaveguideGeometry) -> tuple[float, float]:
    """Minimal spacing over ``z`` in ``[0, L]`` for bond 1 and bond 2."""
    lo, hi = _cos_range(geom.theta, geom.theta + 2 * math.pi * geom.L / geom.Lambda)
    a = 2 * geom.A0
    odd = geom.g0 + geom.g1 + a * lo
    even = geom.g0 - geom.g1 - a * hi
    return odd, even


def spacing_range(geom: WaveguideGeometry) -> tuple[float, float]:
    lo, hi = _cos_range(geom.theta, geom.theta + 2 * math.pi * geom.L / geom.Lambda)
    a = 2 * geom.A0
    return min(min_spacings(geom)), max(geom.g0 + geom.g1 + a * hi, geom.g0 - geom.g1 - a * lo)


@dataclass
class CouplingCalibration:
    """Exponential coupling model fitted to a ``(G, l_c)`` table."""

    G: np.ndarray
    lc: np.ndarray
    a: float
    b: float
    residual: float

    def kappa(self, G):
        return self.a * np.exp(-np.asarray(G, dtype=float) / self.b)

    def coupling_length(self, G):
        return math.pi / (2 * self.kappa(G))

    @property
    def g_range(self) -> tuple[float, float]:
        return float(self.G[0]), float(self.G[-1])


def read_calibration_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``G_mm,lc_mm`` table; raises :class:`DataError` on malformed input."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read calibration table {path}: {exc}") from exc
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"calibration table {path} is empty")
    header = tuple(c.strip() for c in rows[0])
    if header != TABLE_HEADER:
        raise DataError(f"calibration table header must be {','.join(TABLE_HEADER)}, got {','.join(header)}")
    values = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DataError(f"{path}:{n}: expected 2 columns, got {len(row)}")
        try:
            values.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise DataError(f"{path}:{n}: {exc}") from exc
    if not values:
        raise DataError(f"calibration table {path} has no data rows")
    arr = np.array(values)
    return arr[:, 0], arr[:, 1]


def write_calibration_table(path, G: Sequence[float], lc: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for g, l in zip(G, lc):
            w.writerow([f"{g:.12g}", f"{l:.12g}"])


def fit_calibration(G, lc) -> CouplingCalibration:
    """Least-squares fit of ``ln kappa = ln a - G / b`` with ``kappa = pi / (2 l_c)``.

    Needs at least two samples with strictly increasing ``G`` and ``l_c``
    (coupling strictly decreasing with spacing).  ``residual`` is the RMS of
    the log-space misfit.
    """
    G = np.asarray(G, dtype=float)
    lc = np.asarray(lc, dtype=float)
    if G.shape != lc.shape or G.ndim != 1:
        raise DataError("G and l_c must be 1-D arrays of equal length")
    if G.size < 2:
        raise DataError(f"need at least two calibration samples, got {G.size}")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(lc))):
        raise DataError("calibration table contains non-finite values")
    if np.any(lc <= 0):
        raise DataError("coupling lengths must be positive")
    if np.any(np.diff(G) <= 0):
        raise DataError("spacings must be strictly increasing")
    if np.any(np.diff(lc) <= 0):
        raise DataError("coupling must decrease with spacing (l_c strictly increasing in G)")
    logk = np.log(math.pi / (2 * lc))
    slope, intercept = np.polyfit(G, logk, 1)
    fit = intercept + slope * G
    residual = float(np.sqrt(np.mean((logk - fit) ** 2)))
    return CouplingCalibration(G, lc, float(math.exp(intercept)), float(-1.0 / slope), residual)


def envelope_calibration(G=None) -> CouplingCalibration:
    """Synthetic exponential calibration with ``l_c(0.5 mm) = 20`` and ``l_c(4 mm) = 100`` mm."""
    b = 3.5 / math.log(5.0)
    a = math.pi / 2 / 20.0 * math.exp(0.5 / b)
    G = np.linspace(0.5, 6.0, 12) if G is None else np.asarray(G, dtype=float)
    lc = math.pi / (2 * a * np.exp(-G / b))
    return fit_calibration(G, lc)


@dataclass
class TruncationReport:
    """Power dropped when the coupling modulation is cut to its first harmonic.

    ``staggered`` is the fraction of the staggered AC power in harmonics >= 2;
    ``uniform`` is the AC power of the bond-averaged coupling relative to the
    staggered AC power (the lattice model has no such term).
    """

    staggered: float
    uniform: float
    harmonics: np.ndarray

    @property
    def acceptable(self) -> bool:
        return self.staggered <= TRUNCATION_LIMIT


def protocol_from_geometry(
    geom: WaveguideGeometry,
    calib: CouplingCalibration,
    n_z: int = 512,
    extrapolate: bool = False,
) -> tuple[DriveProtocol, TruncationReport]:
    """Drive protocol from the Fourier content of ``kappa(G_i(z))`` over one period."""
    lo, hi = spacing_range(geom)
    g_lo, g_hi = calib.g_range
    if not extrapolate and (lo < g_lo - 1e-12 or hi > g_hi + 1e-12):
        raise DataError(
            f"geometry spans G in [{lo:.3g}, {hi:.3g}] mm, outside calibrated [{g_lo:.3g}, {g_hi:.3g}] mm"
        )
    z = geom.Lambda * np.arange(n_z) / n_z
    k_odd = calib.kappa(_spacing(geom, 1, z))
    k_even = calib.kappa(_spacing(geom, 2, z))
    mean = 0.5 * (k_odd + k_even)
    stag = 0.5 * (k_even - k_odd)
    # Fourier series in the drive phase, so theta drops out of the coefficients
    phase = 2 * math.pi * z / geom.Lambda + geom.theta
    n_h = n_z // 2
    harm = np.arange(n_h)
    basis = np.exp(-1j * np.outer(harm, phase))
    c = basis @ stag / n_z
    c[1:] *= 2
    c_mean = basis @ mean / n_z
    c_mean[1:] *= 2
    kappa0 = float(np.real(c_mean[0]))
    dk0 = float(np.real(c[0]))
    dk1 = float(np.real(c[1]))
    power = np.abs(c[1:]) ** 2
    ac = float(power.sum())
    # rounding noise alone when the geometry is not modulated
    modulated = ac > 1e-24 * kappa0 ** 2
    staggered = float(power[1:].sum() / ac) if modulated else 0.0
    uniform = float(np.sum(np.abs(c_mean[1:]) ** 2) / ac) if modulated else 0.0
    report = TruncationReport(staggered, uniform, np.abs(c[:8]))
    if not report.acceptable:
        warnings.warn(
            f"{100 * staggered:.1f}% of the staggered modulation power lies in harmonics >= 2",
            TruncationWarning,
            stacklevel=2,
        )
    p = DriveProtocol(kappa0, dk0, dk1, period=geom.Lambda, theta=geom.theta, n_sites=geom.n_guides)
    return p, report
