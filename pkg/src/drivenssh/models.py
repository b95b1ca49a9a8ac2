"""Driven SSH lattice builders.

Every Hamiltonian in the package is derived from a single :class:`DriveProtocol`.
Bonds are numbered ``1 .. n_sites - 1`` (bond ``i`` joins sites ``i`` and
``i + 1``); the coupling on bond ``i`` is::

    kappa0 + s_i * (-1)**i * (dkappa0 + dkappa1 * cos(omega * t + theta))

where ``s_i = (-1)**(number of domain-wall bonds <= i)``.  With positive
staggering the first bond is the weak one, so the chain starts on a weak link.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import UnsupportedConfigurationError

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DimerizationWarning(UserWarning):
    """Staggering comparable to the mean coupling; bonds may change sign."""


@dataclass(frozen=True)
class DriveProtocol:
    """Parameters of a periodically driven, dimerized chain.

    ``period`` is the drive period ``T`` (the curving period of a waveguide
    array); ``omega = 2 pi / T``.  ``dw_cells`` lists the bonds at which the
    staggering sign flips.  ``periodic`` closes the chain with a bond between
    the last and first sites.
    """

    kappa0: float
    dkappa0: float = 0.0
    dkappa1: float = 0.0
    period: float = 2 * math.pi
    theta: float = 0.0
    n_sites: int = 2
    dw_cells: tuple[int, ...] = field(default_factory=tuple)
    periodic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "dw_cells", tuple(int(m) for m in self.dw_cells))
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")
        cells = self.dw_cells
        if any(b <= a for a, b in zip(cells, cells[1:])):
            raise ValueError(f"dw_cells must be strictly increasing, got {cells}")
        if cells and (cells[0] < 1 or cells[-1] > self.n_sites - 1):
            raise ValueError(f"dw_cells must lie in [1, {self.n_sites - 1}], got {cells}")
        if self.periodic and (self.n_sites % 2 or cells):
            raise ValueError("periodic closure needs an even, domain-wall-free chain")
        k0 = abs(self.kappa0)
        if abs(self.dkappa0) >= k0 or abs(self.dkappa1) >= k0:
            warnings.warn(
                f"staggering (dkappa0={self.dkappa0}, dkappa1={self.dkappa1}) is not "
                f"small against kappa0={self.kappa0}",
                DimerizationWarning,
                stacklevel=3,
            )

    @classmethod
    def from_period_ratio(cls, kappa0, dkappa0, dkappa1, period_ratio, **kwargs):
        """Build a protocol whose period is ``period_ratio`` coupling lengths."""
        return cls(kappa0, dkappa0, dkappa1, period=period_ratio * coupling_length(kappa0), **kwargs)

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    @property
    def coupling_length(self) -> float:
        return coupling_length(self.kappa0)

    @property
    def period_ratio(self) -> float:
        """Drive period in units of the coupling length, ``T / l_c``."""
        return self.period / self.coupling_length

    @property
    def n_bonds(self) -> int:
        return self.n_sites if self.periodic else self.n_sites - 1

    def replace(self, **changes) -> "DriveProtocol":
        return dataclasses.replace(self, **changes)

    def stagger(self, t):
        """Total staggered strength ``dkappa0 + dkappa1 cos(omega t + theta)``."""
        return self.dkappa0 + self.dkappa1 * np.cos(self.omega * np.asarray(t) + self.theta)

    def hamiltonian(self, t) -> np.ndarray:
        return hamiltonian_real_space(self, t)


def coupling_length(kappa0: float) -> float:
    """Distance for complete transfer between two guides, ``pi / (2 kappa0)``."""
    return math.pi / (2 * kappa0)


def bond_signs(p: DriveProtocol) -> np.ndarray:
    """Staggering sign ``s_i * (-1)**i`` for every bond, as a float array."""
    bonds = np.arange(1, p.n_bonds + 1)
    parity = np.where(bonds % 2 == 0, 1.0, -1.0)
    if p.dw_cells:
        flips = np.searchsorted(np.asarray(p.dw_cells), bonds, side="right")
        parity = parity * np.where(flips % 2 == 0, 1.0, -1.0)
    return parity


def bond_couplings(p: DriveProtocol, t: float) -> np.ndarray:
    """All bond couplings at time ``t``; entry ``i - 1`` belongs to bond ``i``."""
    return p.kappa0 + bond_signs(p) * p.stagger(t)


def coupling_at(p: DriveProtocol, bond: int, t: float) -> float:
    if not 1 <= bond <= p.n_bonds:
        raise IndexError(f"bond {bond} outside [1, {p.n_bonds}]")
    return float(bond_couplings(p, t)[bond - 1])


def hamiltonian_real_space(p: DriveProtocol, t: float) -> np.ndarray:
    """Real symmetric ``n_sites x n_sites`` tight-binding matrix at time ``t``.

    Open boundaries unless ``p.periodic``; the diagonal is zero.
    """
    n = p.n_sites
    h = np.zeros((n, n))
    if n == 1:
        return h
    c = bond_couplings(p, t)
    idx = np.arange(n - 1)
    h[idx, idx + 1] = c[: n - 1]
    h[idx + 1, idx] = c[: n - 1]
    if p.periodic:
        h[n - 1, 0] = h[0, n - 1] = c[n - 1]
    return h


def bloch_coefficients(p: DriveProtocol, k, t, intracell: str = "even"):
    """Return ``(a, b)`` with ``H(k, t) = a sigma_x + b sigma_y``.

    ``intracell="even"`` puts the even-bond coupling ``kappa0 + dk`` inside the
    unit cell (the usual momentum-space form of the driven SSH chain).
    ``intracell="odd"`` uses bond 1 as the intracell link, which is the cell
    that tiles an open chain starting at its first site.  Both cells give the
    same spectrum; winding numbers differ by one.
    """
    if p.dw_cells:
        raise UnsupportedConfigurationError("Bloch form is defined for domain-wall-free chains only")
    if intracell not in ("even", "odd"):
        raise ValueError(f"intracell must be 'even' or 'odd', got {intracell!r}")
    dk = p.stagger(t)
    if intracell == "odd":
        dk = -dk
    k = np.asarray(k)
    intra = p.kappa0 + dk
    inter = p.kappa0 - dk
    return intra + inter * np.cos(k), inter * np.sin(k)


def bloch_hamiltonian(p: DriveProtocol, k: float, t: float, intracell: str = "even") -> np.ndarray:
    a, b = bloch_coefficients(p, k, t, intracell)
    return a * PAULI_X + b * PAULI_Y


def majorana_matrix(p: DriveProtocol, t: float) -> np.ndarray:
    """Real antisymmetric coupling matrix ``A`` with ``H = -(i/2) sum A_ij g_i g_j``.

    ``n_sites`` counts Majorana operators.  Nearest-neighbour entries carry
    twice the bond coupling.
    """
    n = p.n_sites
    a = np.zeros((n, n))
    if n == 1:
        return a
    c = 2.0 * bond_couplings(p, t)[: n - 1]
    idx = np.arange(n - 1)
    a[idx, idx + 1] = c
    a[idx + 1, idx] = -c
    return a


def domain_wall_sites(p: DriveProtocol) -> list[int]:
    """Site (1-based) at the centre of each domain wall.

    A flip at bond ``m`` makes bonds ``m - 1`` and ``m`` equal; the site they
    share, ``m``, is the wall centre.
    """
    return list(p.dw_cells)


def pristine(p: DriveProtocol) -> DriveProtocol:
    return p.replace(dw_cells=())


def sample_times(p: DriveProtocol, n: int) -> np.ndarray:
    return np.linspace(0.0, p.period, n, endpoint=False)


def hermiticity_residual(h: np.ndarray) -> float:
    scale = max(np.abs(h).max(), 1e-300)
    return float(np.abs(h - h.conj().T).max() / scale)


def protocol_from_mapping(values: dict, n_sites: int | None = None, dw_cells: Sequence[int] = ()) -> DriveProtocol:
    """Build a protocol from a flat mapping (config sections, CSV rows).

    Accepts either ``period`` or ``period_ratio`` (period in coupling lengths).
    """
    vals = dict(values)
    if n_sites is not None:
        vals["n_sites"] = n_sites
    if dw_cells:
        vals["dw_cells"] = tuple(dw_cells)
    ratio = vals.pop("period_ratio", None)
    if ratio is not None:
        if "period" in vals:
            raise ValueError("give either period or period_ratio, not both")
        vals["period"] = float(ratio) * coupling_length(float(vals["kappa0"]))
    return DriveProtocol(**vals)
