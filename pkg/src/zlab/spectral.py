"""Radial grids, the unitary radial 3D Fourier transform and free propagators.

A radial function ``f(|x|)`` on R^3 has the 3D Fourier transform

    F(rho) = sqrt(2/pi) / rho * int_0^inf sin(r rho) r f(r) dr,

which is a sine transform of ``r f(r)``.  On the uniform grid

    r_k = k dr,  rho_m = m drho,  k, m = 1..n_r,  dr * drho * (n_r + 1) = pi,

the discretization is an exact DST-I pair, so forward and inverse are
mutually inverse and discrete Plancherel holds to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import DomainMismatchError, GridSizingError, ZeroModeError

PHYSICAL = "physical"
SPECTRAL = "spectral"

_WORKERS = 1


def set_workers(n: int) -> None:
    """Set the worker count used by scipy.fft and chunked quadratures."""
    global _WORKERS
    _WORKERS = max(1, int(n))


def get_workers() -> int:
    return _WORKERS


def _dst1(x: np.ndarray) -> np.ndarray:
    # sum_k x_k sin(pi k m / (n+1)); scipy's DST-I carries a factor 2
    return 0.5 * scipy.fft.dst(x, type=1, axis=-1, workers=_WORKERS)


@dataclass(frozen=True)
class RadialGrid:
    """Uniform interior radial grid paired with its sine-transform dual."""

    n_r: int
    r_max: float

    def __post_init__(self):
        if not isinstance(self.n_r, (int, np.integer)) or isinstance(self.n_r, bool):
            raise GridSizingError(f"n_r must be an integer, got {self.n_r!r}")
        if self.n_r < 8:
            raise GridSizingError(f"n_r must be >= 8, got {self.n_r}")
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise GridSizingError(f"r_max must be positive and finite, got {self.r_max}")
        object.__setattr__(self, "n_r", int(self.n_r))
        object.__setattr__(self, "r_max", float(self.r_max))

    @property
    def dr(self) -> float:
        return self.r_max / (self.n_r + 1)

    @property
    def drho(self) -> float:
        return math.pi / self.r_max

    @property
    def rho_max(self) -> float:
        return math.pi / self.dr

    @cached_property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(1, self.n_r + 1)

    @cached_property
    def rho(self) -> np.ndarray:
        return self.drho * np.arange(1, self.n_r + 1)

    @cached_property
    def r_weights(self) -> np.ndarray:
        """Quadrature weights for int ... 4 pi r^2 dr (trapezoid, zero endpoints)."""
        return 4.0 * math.pi * self.r**2 * self.dr

    @cached_property
    def rho_weights(self) -> np.ndarray:
        return 4.0 * math.pi * self.rho**2 * self.drho

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        """Forward transform of raw samples (last axis is the radial axis)."""
        return math.sqrt(2.0 / math.pi) * self.dr / self.rho * _dst1(self.r * values)

    def to_physical(self, values: np.ndarray) -> np.ndarray:
        return math.sqrt(2.0 / math.pi) * self.drho / self.r * _dst1(self.rho * values)

    def l2_spectral(self, values: np.ndarray, weight: np.ndarray | None = None) -> float:
        """L^2 norm (radial measure) of ``weight * values`` given spectral samples."""
        v = values if weight is None else weight * values
        return float(np.sqrt(np.sum(self.rho_weights * np.abs(v) ** 2, axis=-1)))

    def describe(self) -> dict:
        return {
            "n_r": self.n_r,
            "r_max": self.r_max,
            "dr": self.dr,
            "drho": self.drho,
            "rho_max": self.rho_max,
            "pairing": self.dr * self.drho * (self.n_r + 1),
        }


def build_grid(n_r: int, r_max: float) -> RadialGrid:
    return RadialGrid(n_r, r_max)


@dataclass(frozen=True)
class RadialField:
    """Samples of a radial function on a RadialGrid, tagged by domain."""

    grid: RadialGrid
    values: np.ndarray = field(repr=False)
    domain: str = PHYSICAL

    def __post_init__(self):
        if self.domain not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown domain {self.domain!r}")
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n_r,):
            raise ValueError(f"values must have shape ({self.grid.n_r},), got {vals.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: RadialGrid, func, domain: str = PHYSICAL) -> "RadialField":
        nodes = grid.r if domain == PHYSICAL else grid.rho
        return cls(grid, func(nodes), domain)

    @classmethod
    def zeros(cls, grid: RadialGrid, domain: str = PHYSICAL) -> "RadialField":
        return cls(grid, np.zeros(grid.n_r, complex), domain)

    def spectral(self) -> "RadialField":
        return self if self.domain == SPECTRAL else forward(self)

    def physical(self) -> "RadialField":
        return self if self.domain == PHYSICAL else inverse(self)

    def conj(self) -> "RadialField":
        # the radial transform kernel is real, so conjugation commutes with it
        return RadialField(self.grid, np.conj(self.values), self.domain)

    def _coerce(self, other):
        if isinstance(other, RadialField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            if other.domain != self.domain:
                raise DomainMismatchError(f"cannot combine {self.domain} with {other.domain}")
            return other.values
        return other

    def __add__(self, other):
        return RadialField(self.grid, self.values + self._coerce(other), self.domain)

    __radd__ = __add__

    def __sub__(self, other):
        return RadialField(self.grid, self.values - self._coerce(other), self.domain)

    def __neg__(self):
        return RadialField(self.grid, -self.values, self.domain)

    def __mul__(self, scalar):
        if isinstance(scalar, RadialField):
            raise TypeError("use paraproduct or pointwise helpers for field products")
        return RadialField(self.grid, self.values * scalar, self.domain)

    __rmul__ = __mul__


def _require(f: RadialField, domain: str) -> None:
    if f.domain != domain:
        raise DomainMismatchError(f"expected a {domain} field, got {f.domain}")


def forward(f: RadialField) -> RadialField:
    _require(f, PHYSICAL)
    return RadialField(f.grid, f.grid.to_spectral(f.values), SPECTRAL)


def inverse(F: RadialField) -> RadialField:
    _require(F, SPECTRAL)
    return RadialField(F.grid, F.grid.to_physical(F.values), PHYSICAL)


def frac_derivative(F: RadialField, s: float) -> RadialField:
    """Apply |∇|^s, i.e. multiply spectral samples by rho^s."""
    _require(F, SPECTRAL)
    if s == 0:
        return F
    return RadialField(F.grid, F.values * F.grid.rho**s, SPECTRAL)


def bracket_derivative(F: RadialField, s: float) -> RadialField:
    """Apply <∇>^s with symbol (1 + rho^2)^(s/2)."""
    _require(F, SPECTRAL)
    if s == 0:
        return F
    return RadialField(F.grid, F.values * (1.0 + F.grid.rho**2) ** (0.5 * s), SPECTRAL)


def schrodinger_multiplier(grid: RadialGrid, t: float) -> np.ndarray:
    return np.exp(1j * t * grid.rho**2)


def wave_multiplier(grid: RadialGrid, t: float) -> np.ndarray:
    return np.exp(1j * t * grid.rho)


def schrodinger_prop(F: RadialField, t: float) -> RadialField:
    """S(t) = exp(-it Δ), spectral multiplier exp(i t rho^2)."""
    _require(F, SPECTRAL)
    return RadialField(F.grid, F.values * schrodinger_multiplier(F.grid, t), SPECTRAL)


def wave_prop(F: RadialField, t: float) -> RadialField:
    """W(t) = exp(it|∇|), spectral multiplier exp(i t rho)."""
    _require(F, SPECTRAL)
    return RadialField(F.grid, F.values * wave_multiplier(F.grid, t), SPECTRAL)


def lowest_bin_fraction(F: RadialField) -> float:
    _require(F, SPECTRAL)
    mass = F.grid.rho_weights * np.abs(F.values) ** 2
    total = mass.sum()
    return float(mass[0] / total) if total > 0 else 0.0


def init_from_physical(u0: RadialField, n0: RadialField, n1: RadialField,
                       zero_mode_tol: float = 1e-8):
    """Reduce (u0, n0, n1) to first-order data (u0, N0) with N0 = n0 - i|∇|^{-1} n1.

    Raises
    ------
    ZeroModeError
        If the lowest spectral bin of ``n1`` carries more than ``zero_mode_tol``
        of its L^2 mass.
    """
    for f in (u0, n0, n1):
        _require(f, PHYSICAL)
    if np.max(np.abs(n0.values.imag)) > 0 or np.max(np.abs(n1.values.imag)) > 0:
        raise ValueError("n0 and n1 must be real-valued")
    n1_hat = forward(n1)
    if np.any(n1_hat.values != 0):
        frac = lowest_bin_fraction(n1_hat)
        if frac > zero_mode_tol:
            raise ZeroModeError(
                f"zero-mode excess: lowest bin holds {frac:.3e} of n1 mass (tol {zero_mode_tol:.1e})")
    im = inverse(frac_derivative(n1_hat, -1.0)).values.real
    N0 = RadialField(n0.grid, n0.values.real - 1j * im, PHYSICAL)
    return u0, N0


def recover_wave_data(N0: RadialField):
    """Invert the first-order reduction: n0 = Re N0, n1 = -|∇| Im N0."""
    N0 = N0.physical()
    n0 = RadialField(N0.grid, N0.values.real, PHYSICAL)
    im = RadialField(N0.grid, N0.values.imag, PHYSICAL)
    n1 = inverse(frac_derivative(forward(im), 1.0))
    return n0, RadialField(N0.grid, -n1.values.real, PHYSICAL)


def spectral_tail_fraction(F: RadialField, cutoff: float) -> float:
    """Fraction of spectral L^2 mass at rho > cutoff."""
    F = F.spectral()
    mass = F.grid.rho_weights * np.abs(F.values) ** 2
    total = mass.sum()
    if total == 0:
        return 0.0
    return float(mass[F.grid.rho > cutoff].sum() / total)


# --- snapshot export -------------------------------------------------------

def write_snapshot(path, u: RadialField, N: RadialField, *, gamma: float, t: float,
                   domain: str = PHYSICAL) -> None:
    """Write one state as columnar text: node, Re u, Im u, Re N, Im N."""
    grid = u.grid
    if domain == PHYSICAL:
        u, N, nodes, label = u.physical(), N.physical(), grid.r, "r"
    else:
        u, N, nodes, label = u.spectral(), N.spectral(), grid.rho, "rho"
    header = (f"gamma={gamma!r} t={t!r} n_r={grid.n_r} r_max={grid.r_max!r} "
              f"domain={domain}\n{label} re_u im_u re_N im_N")
    data = np.column_stack([nodes, u.values.real, u.values.imag, N.values.real, N.values.imag])
    np.savetxt(path, data, header=header, fmt="%.17e")


def read_snapshot(path):
    """Inverse of write_snapshot; returns (u, N, meta) with fields in the stored domain."""
    with open(path) as fh:
        first = fh.readline().lstrip("#").strip()
    meta = dict(item.split("=", 1) for item in first.split())
    grid = RadialGrid(int(meta["n_r"]), float(meta["r_max"]))
    data = np.loadtxt(path)
    domain = meta["domain"]
    u = RadialField(grid, data[:, 1] + 1j * data[:, 2], domain)
    N = RadialField(grid, data[:, 3] + 1j * data[:, 4], domain)
    parsed = {"gamma": float(meta["gamma"]), "t": float(meta["t"]), "domain": domain}
    return u, N, parsed
