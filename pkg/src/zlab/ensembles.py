"""Random frequency-localized radial fields for ensemble experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .littlewood_paley import unresolved_fraction
from .spectral import SPECTRAL, RadialField, RadialGrid


def bump(x: np.ndarray) -> np.ndarray:
    """C-infinity bump exp(1 - 1/(1 - x^2)) supported on |x| < 1, peak value 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def spectral_bump(grid: RadialGrid, center: float, width: float, amplitude: complex = 1.0) -> RadialField:
    """Field whose spectrum is a compact bump around ``center`` of half-width ``width``."""
    return RadialField(grid, amplitude * bump((grid.rho - center) / width), SPECTRAL)


@dataclass(frozen=True)
class BandRange:
    """Log-uniform range of bump centers with a relative half-width."""

    lo: float
    hi: float
    rel_width: float = 0.25
    max_bumps: int = 2

    def sample(self, grid: RadialGrid, rng: np.random.Generator) -> RadialField:
        n = int(rng.integers(1, self.max_bumps + 1))
        vals = np.zeros(grid.n_r, complex)
        for _ in range(n):
            c = float(np.exp(rng.uniform(np.log(self.lo), np.log(self.hi))))
            w = max(self.rel_width * c, 1.2 * grid.drho)
            amp = rng.normal() + 1j * rng.normal()
            vals += amp * bump((grid.rho - c) / w)
        return RadialField(grid, vals, SPECTRAL)


def is_resolved(f: RadialField, tol: float = 1e-8) -> bool:
    return unresolved_fraction(f) <= tol


def random_field(grid: RadialGrid, rng: np.random.Generator, lo: float, hi: float,
                 rel_width: float = 0.25, max_bumps: int = 2) -> RadialField:
    return BandRange(lo, hi, rel_width, max_bumps).sample(grid, rng)
