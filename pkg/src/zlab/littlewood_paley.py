"""Dyadic cutoffs, Littlewood-Paley projectors and paraproduct pieces.

Conventions
-----------
``mother`` is the radial cutoff equal to 1 on [0, 5/4] and 0 on [8/5, inf).
``phi(s) = mother(s) - mother(2 s)`` and ``phi_j(s) = phi(s / 2**j)``,
``varphi_j(s) = mother(s / 2**j)``.

Paraproduct pieces for a product ``f g``::

    LH = sum_k P_{<=k-4} f * P_k g        LR / LX : |k| <= 2 / |k| >= 3
    HL = sum_j P_j f * P_{<=j-4} g        RL / XL : |j| <= 2 / |j| >= 3
    HH = sum_{|j-k|<=3} P_j f * P_k g

The first argument always sits in the first slot of the label.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .errors import UnresolvedBandWarning
from .spectral import PHYSICAL, SPECTRAL, RadialField, RadialGrid

LOWER = 5.0 / 4.0
UPPER = 8.0 / 5.0
SUPPORT_LO = 5.0 / 8.0
SUPPORT_HI = 8.0 / 5.0

BASIC_KINDS = ("LH", "HL", "HH")
ALL_KINDS = ("LH", "HL", "HH", "RL", "XL", "LR", "LX")
RESONANT_WINDOW = 2


def mother(s):
    """Smooth radial cutoff: 1 for s <= 5/4, 0 for s >= 8/5, monotone between."""
    s = np.asarray(s, dtype=float)
    x = (UPPER - s) / (UPPER - LOWER)
    inside = (x > 0) & (x < 1)
    xi = np.where(inside, x, 0.5)
    with np.errstate(divide="ignore", over="ignore"):
        val = expit(1.0 / (1.0 - xi) - 1.0 / xi)
    out = np.where(x >= 1, 1.0, np.where(x <= 0, 0.0, val))
    return float(out) if out.ndim == 0 else out


def phi(s):
    s = np.asarray(s, dtype=float)
    return mother(s) - mother(2.0 * s)


def phi_j(s, j: int):
    return phi(np.asarray(s, dtype=float) / 2.0**j)


def varphi_j(s, j: int):
    return mother(np.asarray(s, dtype=float) / 2.0**j)


def resolved_range(grid: RadialGrid) -> tuple[int, int]:
    """(j_min, j_max) of bands considered resolved on the grid."""
    j_min = math.ceil(math.log2(grid.drho)) + 1
    j_max = math.floor(math.log2(grid.rho_max)) - 1
    return j_min, j_max


@dataclass(frozen=True)
class DyadicSystem:
    """Band masks sampled on a grid.

    ``bands`` lists every j whose ``phi_j`` is non-zero at some grid node, so
    that the masks sum to one at every node and ``varphi_j`` equals the sum
    of the listed ``phi_k`` with ``k <= j``.
    """

    grid: RadialGrid
    bands: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    j_min: int = 0
    j_max: int = 0

    @classmethod
    def for_grid(cls, grid: RadialGrid) -> "DyadicSystem":
        return _dyadic_cached(grid)

    def index(self, j: int) -> int | None:
        pos = int(j - self.bands[0])
        return pos if 0 <= pos < len(self.bands) else None

    def phi_mask(self, j: int) -> np.ndarray:
        pos = self.index(j)
        if pos is None:
            return np.zeros(self.grid.n_r)
        return self.phi[pos]

    def leq_mask(self, j: int) -> np.ndarray:
        return varphi_j(self.grid.rho, j)

    def band_interval(self, j: int) -> tuple[float, float]:
        return SUPPORT_LO * 2.0**j, SUPPORT_HI * 2.0**j

    def partition_deviation(self) -> float:
        """Max deviation from one of the on-grid sum of band masks."""
        return float(np.max(np.abs(self.phi.sum(axis=0) - 1.0)))

    def is_resonant(self, j: int) -> bool:
        return abs(j) <= RESONANT_WINDOW


@lru_cache(maxsize=32)
def _dyadic_cached(grid: RadialGrid) -> DyadicSystem:
    rho = grid.rho
    lo = math.floor(math.log2(grid.drho / SUPPORT_HI)) - 1
    hi = math.ceil(math.log2(grid.rho_max / SUPPORT_LO)) + 1
    bands, rows = [], []
    for j in range(lo, hi + 1):
        row = phi_j(rho, j)
        if np.any(row > 0):
            bands.append(j)
            rows.append(row)
    j_min, j_max = resolved_range(grid)
    return DyadicSystem(grid, np.array(bands), np.array(rows), j_min, j_max)


def project(F: RadialField, j: int) -> RadialField:
    """P_j as a spectral mask."""
    F = F.spectral()
    return RadialField(F.grid, F.values * DyadicSystem.for_grid(F.grid).phi_mask(j), SPECTRAL)


def project_leq(F: RadialField, j: int) -> RadialField:
    F = F.spectral()
    return RadialField(F.grid, F.values * DyadicSystem.for_grid(F.grid).leq_mask(j), SPECTRAL)


def unresolved_fraction(F: RadialField) -> float:
    """Spectral mass fraction outside [2^j_min, 2^j_max]."""
    F = F.spectral()
    ds = DyadicSystem.for_grid(F.grid)
    mass = F.grid.rho_weights * np.abs(F.values) ** 2
    total = mass.sum()
    if total == 0:
        return 0.0
    rho = F.grid.rho
    outside = (rho < 2.0**ds.j_min) | (rho > 2.0**ds.j_max)
    return float(mass[outside].sum() / total)


def check_resolved(F: RadialField, name: str = "field", tol: float = 1e-8) -> float:
    frac = unresolved_fraction(F)
    if frac > tol:
        warnings.warn(f"unresolved band: {frac:.3e} of {name} spectral mass outside the resolved range",
                      UnresolvedBandWarning, stacklevel=3)
    return frac


def parse_kinds(kind: str) -> tuple[str, ...]:
    parts = tuple(p.strip().upper() for p in kind.split("+"))
    for p in parts:
        if p not in ALL_KINDS:
            raise ValueError(f"unknown paraproduct kind {p!r}")
    return parts


class BandPieces:
    """Physical-space dyadic pieces of one field, computed once and reused."""

    def __init__(self, F: RadialField):
        F = F.spectral()
        self.grid = F.grid
        self.ds = DyadicSystem.for_grid(F.grid)
        self.spec = F.values
        self.P = self.grid.to_physical(self.ds.phi * F.values)
        # low parts P_{<=j-4} are cumulative sums of the band pieces
        self.L = np.cumsum(self.P, axis=0)

    def band(self, j: int) -> np.ndarray:
        pos = self.ds.index(j)
        return self.P[pos] if pos is not None else np.zeros(self.grid.n_r, complex)

    def low(self, j: int) -> np.ndarray:
        """P_{<=j} in physical space."""
        pos = int(j - self.ds.bands[0])
        if pos < 0:
            return np.zeros(self.grid.n_r, complex)
        return self.L[min(pos, len(self.ds.bands) - 1)]

    def near(self, j: int, width: int = 3) -> np.ndarray:
        lo = self.low(j + width)
        hi = self.low(j - width - 1)
        return lo - hi


def _piece_sum(fp: BandPieces, gp: BandPieces, kind: str) -> np.ndarray:
    out = np.zeros(fp.grid.n_r, complex)
    for j in fp.ds.bands:
        j = int(j)
        res = abs(j) <= RESONANT_WINDOW
        if kind in ("HL", "RL", "XL"):
            if (kind == "RL" and not res) or (kind == "XL" and res):
                continue
            out += fp.band(j) * gp.low(j - 4)
        elif kind in ("LH", "LR", "LX"):
            if (kind == "LR" and not res) or (kind == "LX" and res):
                continue
            out += fp.low(j - 4) * gp.band(j)
        elif kind == "HH":
            out += fp.band(j) * gp.near(j)
    return out


def paraproduct(f: RadialField, g: RadialField, kind: str, check_resolution: bool = True) -> RadialField:
    """Frequency-localized piece of the product ``f g``.

    Parameters
    ----------
    f, g : RadialField
        Factors in either domain; ``f`` occupies the first slot.
    kind : str
        One of LH, HL, HH, RL, XL, LR, LX, or a ``+``-joined combination
        such as ``"RL+LH+HH"``.

    Returns
    -------
    RadialField
        Physical-domain result.
    """
    kinds = parse_kinds(kind)
    if f.grid != g.grid:
        raise ValueError("factors live on different grids")
    if check_resolution:
        check_resolved(f, "first factor")
        check_resolved(g, "second factor")
    fp, gp = BandPieces(f), BandPieces(g)
    return RadialField(f.grid, paraproduct_pieces(fp, gp, kinds), PHYSICAL)


def paraproduct_pieces(fp: BandPieces, gp: BandPieces, kinds) -> np.ndarray:
    if isinstance(kinds, str):
        kinds = parse_kinds(kinds)
    out = np.zeros(fp.grid.n_r, complex)
    for k in kinds:
        out += _piece_sum(fp, gp, k)
    return out


def product(f: RadialField, g: RadialField) -> RadialField:
    """Pointwise physical-space product."""
    return RadialField(f.grid, f.physical().values * g.physical().values, PHYSICAL)


def lp_report(grid: RadialGrid, f: RadialField | None = None, g: RadialField | None = None) -> dict:
    """Partition deviation, per-band support leakage and reconstruction residual."""
    ds = DyadicSystem.for_grid(grid)
    rho = grid.rho
    leakage = {}
    for pos, j in enumerate(ds.bands):
        lo, hi = ds.band_interval(int(j))
        outside = (rho < lo) | (rho > hi)
        leakage[int(j)] = float(np.max(ds.phi[pos][outside], initial=0.0))
    report = {
        "j_min": ds.j_min,
        "j_max": ds.j_max,
        "bands": [int(j) for j in ds.bands],
        "partition_deviation": ds.partition_deviation(),
        "leakage": leakage,
    }
    if f is not None and g is not None:
        direct = product(f, g).values
        rec = paraproduct(f, g, "LH+HL+HH", check_resolution=False).values
        report["reconstruction_residual"] = float(
            np.linalg.norm(rec - direct) / max(np.linalg.norm(direct), 1e-300))
    return report
