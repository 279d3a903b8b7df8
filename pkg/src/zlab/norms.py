"""Lebesgue, Sobolev and Besov norms with the radial measure, plus space-time norms.

All spatial integrals use the measure 4 pi r^2 dr (respectively 4 pi rho^2
drho), discretized by the grid trapezoid rule (the endpoint samples vanish).
Time integrals use the trapezoid rule over snapshot times and L^inf in time
is a maximum over snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import littlewood_paley as lp
from .spectral import PHYSICAL, SPECTRAL, RadialField, RadialGrid

INF = math.inf


@dataclass(frozen=True)
class NormSpec:
    """Spatial norm kind and parameters, with an optional Lebesgue-in-time exponent."""

    space: str = "lebesgue"
    s: float = 0.0
    q: float = 2.0
    time_p: float | None = None

    def __post_init__(self):
        if self.space not in ("lebesgue", "sobolev", "homogeneous_sobolev", "besov"):
            raise ValueError(f"unknown space kind {self.space!r}")
        if not (1.0 <= self.q <= INF):
            raise ValueError("q must lie in [1, inf]")
        if self.time_p is not None and not (1.0 <= self.time_p <= INF):
            raise ValueError("time exponent must lie in [1, inf]")

    def evaluate(self, f: RadialField) -> float:
        if self.space == "lebesgue":
            return lebesgue(f, self.q)
        if self.space == "sobolev":
            return sobolev(f, self.s)
        if self.space == "homogeneous_sobolev":
            return homogeneous_sobolev(f, self.s)
        return besov(f, self.s, self.q)


# --- raw-array kernels (last axis radial) ----------------------------------

def lebesgue_values(grid: RadialGrid, values: np.ndarray, q: float) -> np.ndarray:
    mod = np.abs(values)
    if q == INF:
        return mod.max(axis=-1)
    return (np.sum(grid.r_weights * mod**q, axis=-1)) ** (1.0 / q)


def spectral_l2_values(grid: RadialGrid, spec: np.ndarray, weight=None) -> np.ndarray:
    v = spec if weight is None else spec * weight
    return np.sqrt(np.sum(grid.rho_weights * np.abs(v) ** 2, axis=-1))


def besov_values(grid: RadialGrid, spec: np.ndarray, s: float, q: float) -> np.ndarray:
    """Homogeneous Besov norm (third index 2) of spectral samples."""
    ds = lp.DyadicSystem.for_grid(grid)
    spec = np.asarray(spec)
    pieces = grid.to_physical(spec[..., None, :] * ds.phi)
    band_norms = lebesgue_values(grid, pieces, q)
    weights = 2.0 ** (2.0 * s * ds.bands)
    return np.sqrt(np.sum(weights * band_norms**2, axis=-1))


def bracket(grid: RadialGrid, s: float) -> np.ndarray:
    return (1.0 + grid.rho**2) ** (0.5 * s)


def time_lp(times: np.ndarray, series: np.ndarray, p: float) -> float:
    """L^p norm in time of a sampled non-negative series."""
    series = np.asarray(series, dtype=float)
    if p == INF:
        return float(series.max()) if series.size else 0.0
    if series.size < 2:
        return 0.0
    return float(np.trapezoid(series**p, times) ** (1.0 / p))


# --- field-level norms -----------------------------------------------------

def lebesgue(f: RadialField, q: float) -> float:
    """(int |f|^q 4 pi r^2 dr)^(1/q); q = inf gives the max."""
    f = f.physical()
    return float(lebesgue_values(f.grid, f.values, q))


def sobolev(f: RadialField, s: float) -> float:
    """||<grad>^s f||_L2 computed spectrally."""
    F = f.spectral()
    if s == 0:
        return float(spectral_l2_values(F.grid, F.values))
    return float(spectral_l2_values(F.grid, F.values, bracket(F.grid, s)))


def homogeneous_sobolev(f: RadialField, s: float) -> float:
    F = f.spectral()
    return float(spectral_l2_values(F.grid, F.values, F.grid.rho**s))


def besov(f: RadialField, s: float, q: float) -> float:
    """(sum_j 2^(2 s j) ||P_j f||_{L^q}^2)^(1/2) over the grid's bands."""
    F = f.spectral()
    return float(besov_values(F.grid, F.values, s, q))


def q_of_eps(eps: float) -> float:
    """Exponent with 1/q = 1/4 + eps/3."""
    return 1.0 / (0.25 + eps / 3.0)


def admissible(kind: str, p: float, q: float) -> bool:
    """Radial Strichartz admissibility for the Schroedinger or wave propagator."""
    if not (2.0 <= p <= INF) or not (1.0 <= q <= INF):
        return False
    if p == INF and q == 2.0:
        return True
    ip = 0.0 if p == INF else 1.0 / p
    iq = 0.0 if q == INF else 1.0 / q
    if kind == "schrodinger":
        return 2 * ip + 5 * iq < 2.5
    if kind == "wave":
        return ip + 2 * iq < 1.0
    raise ValueError(f"unknown propagator kind {kind!r}")


def mass(u: RadialField) -> float:
    """||u||_L2."""
    return sobolev(u, 0.0)


def energy(u: RadialField, N: RadialField, gamma: float) -> float:
    """||grad u||^2 + 1/2 || |grad|^((1-gamma)/2) N ||^2 - int Re(N) |u|^2."""
    U = u.spectral()
    Nh = N.spectral()
    grid = U.grid
    kinetic = float(spectral_l2_values(grid, U.values, grid.rho)) ** 2
    wave = 0.5 * float(spectral_l2_values(grid, Nh.values, grid.rho ** (0.5 * (1 - gamma)))) ** 2
    up = U.physical().values
    nphys = Nh.physical().values.real
    coupling = float(np.sum(grid.r_weights * nphys * np.abs(up) ** 2))
    return kinetic + wave - coupling


# --- space-time norms ------------------------------------------------------

def strichartz_values(grid: RadialGrid, times, spec_series, p: float, s: float, q: float,
                      weight=None) -> float:
    """||(weight) F(t)||_{L^p_t B^s_q} for a stack of spectral samples."""
    series = np.asarray(spec_series)
    if weight is not None:
        series = series * weight
    per_time = besov_values(grid, series, s, q)
    return time_lp(np.asarray(times), per_time, p)


def _series(traj, name: str):
    return np.asarray(getattr(traj, name))


def strichartz(traj, p: float, s: float, q: float, field: str = "u") -> float:
    """||F||_{L^p_t B^s_q} for the trajectory component ``field``."""
    return strichartz_values(traj.grid, traj.times, _series(traj, field), p, s, q)


def x_norm_S_values(grid, times, u_hat, eps: float) -> float:
    w = bracket(grid, 1.0)
    sup = spectral_l2_values(grid, u_hat * w)
    first = time_lp(times, sup, INF)
    second = strichartz_values(grid, times, u_hat, 2.0, 0.25 + eps, q_of_eps(eps), weight=w)
    return first + second


def x_norm_W_values(grid, times, N_hat, gamma: float, eps: float) -> float:
    w = bracket(grid, 0.5 * (1 - gamma))
    sup = spectral_l2_values(grid, N_hat * w)
    first = time_lp(times, sup, INF)
    second = strichartz_values(grid, times, N_hat, 2.0, -0.25 - eps, q_of_eps(-eps), weight=w)
    return first + second


def x_norm_S(traj, eps: float = 0.03) -> float:
    """||<grad>u||_{L^inf L^2} + ||<grad>u||_{L^2_t B^{1/4+eps}_{q(eps)}}."""
    return x_norm_S_values(traj.grid, np.asarray(traj.times), _series(traj, "u"), eps)


def x_norm_W(traj, gamma: float, eps: float = 0.03) -> float:
    """Wave X-norm with weight <grad>^((1-gamma)/2) and B^{-1/4-eps}_{q(-eps)}."""
    return x_norm_W_values(traj.grid, np.asarray(traj.times), _series(traj, "N"), gamma, eps)


def estimate_ratio(lemma_id: str, *args, **kwargs):
    """Ensemble ratio check for one of the registered estimates; see ``zlab.estimates``."""
    from .estimates import estimate_ratio as _impl

    return _impl(lemma_id, *args, **kwargs)


__all__ = [
    "NormSpec", "lebesgue", "sobolev", "homogeneous_sobolev", "besov", "q_of_eps",
    "admissible", "mass", "energy", "strichartz", "x_norm_S", "x_norm_W", "estimate_ratio",
    "PHYSICAL", "SPECTRAL",
]
