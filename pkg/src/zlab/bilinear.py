"""Resonance functions, masked bilinear multipliers and the operators Omega, Theta.

A bilinear multiplier acts on radial factors ``f`` (first slot, frequency
``xi``) and ``g`` (second slot, frequency ``eta``) through

    T(f, g)^(zeta) = (2 pi)^(-3/2) int m(xi, eta) f^(xi) g^(eta) d eta,
    xi = zeta - eta,

which in radial variables a = |xi|, b = |eta|, sigma = |zeta| becomes

    T^(sigma) = (2 pi)^(-1/2) / sigma * int_0^inf b g^(b)
                int_{|sigma-b|}^{sigma+b} a f^(a) m(a, b, sigma) da db.

The b integral is a trapezoid over the spectral grid and the a integral is
Gauss-Legendre over the part of [|sigma-b|, sigma+b] inside a window around
the first-slot mask support.  Paraproduct masks are applied to the factor
spectra at the grid nodes, and the first factor is evaluated off-grid through its
sine-series interpolant, so a unit symbol reproduces the physical-space
paraproduct up to quadrature error.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy.interpolate import CubicSpline

from . import littlewood_paley as lp
from .errors import ResonanceGuardError, SymbolBoundViolation
from .spectral import SPECTRAL, RadialField, RadialGrid, get_workers

UNIT = "unit"
OMEGA = "omega"
THETA = "theta"


@dataclass(frozen=True)
class FreqPair:
    """Magnitudes a = |xi|, b = |eta| and the cosine mu of their angle."""

    a: float
    b: float
    mu: float = 1.0

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("magnitudes must be non-negative")
        if not -1.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [-1, 1]")

    @property
    def sum_abs(self) -> float:
        """|xi + eta|."""
        return math.sqrt(max(self.a**2 + self.b**2 + 2 * self.a * self.b * self.mu, 0.0))


def omega_abs(a, b, sigma):
    """Schroedinger-side resonance -sigma^2 + a + b^2 in magnitude variables."""
    return -sigma**2 + a + b**2


def theta_abs(a, b, sigma):
    """Wave-side resonance -sigma + a^2 - b^2 in magnitude variables."""
    return -sigma + a**2 - b**2


def omega(p: FreqPair) -> float:
    return omega_abs(p.a, p.b, p.sum_abs)


def theta(p: FreqPair) -> float:
    return theta_abs(p.a, p.b, p.sum_abs)


_RESONANCES = {OMEGA: omega_abs, THETA: theta_abs}

# The inner integral runs over the first-slot mask support widened by this
# factor: the sine-series interpolant of masked data leaks slightly past the
# support, while both resonances stay bounded away from zero on the window.
WINDOW = 2.0
DROP_TOL = 1e-16


@dataclass(frozen=True)
class MultiplierSpec:
    """Bilinear symbol: resonance weight, paraproduct mask and output weights.

    Parameters
    ----------
    resonance : {"unit", "omega", "theta"}
        The symbol is ``mask / resonance`` (or just ``mask`` for unit).
    mask : str
        Paraproduct kinds over (first, second) slots, e.g. ``"XL"`` or
        ``"XL+LX"``.
    prefactor : tuple of float
        Exponents ``(out_abs, out_bracket, first_abs)`` applying
        ``|zeta|^out_abs <zeta>^out_bracket`` to the output and ``|xi|^first_abs``
        to the first factor.
    """

    resonance: str = UNIT
    mask: str = "XL"
    prefactor: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.resonance not in (UNIT, OMEGA, THETA):
            raise ValueError(f"unknown resonance {self.resonance!r}")
        kinds = lp.parse_kinds(self.mask)
        if "HH" in kinds:
            raise ValueError("HH pieces are not supported by the bilinear quadrature")
        if len(self.prefactor) != 3:
            raise ValueError("prefactor must be an exponent triple")


OMEGA_SPEC = MultiplierSpec(OMEGA, "XL")
THETA_SPEC = MultiplierSpec(THETA, "XL+LX")


@dataclass(frozen=True)
class _Piece:
    high_first: bool  # first slot carries phi_j, second varphi_{j-4}
    j: int


def _pieces(kind: str, bands) -> list[_Piece]:
    out = []
    for j in bands:
        j = int(j)
        res = abs(j) <= lp.RESONANT_WINDOW
        if kind in ("HL", "RL", "XL"):
            if (kind == "RL" and not res) or (kind == "XL" and res):
                continue
            out.append(_Piece(True, j))
        elif kind in ("LH", "LR", "LX"):
            if (kind == "LR" and not res) or (kind == "LX" and res):
                continue
            out.append(_Piece(False, j))
    return out


@lru_cache(maxsize=8)
def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


class _SineInterpolant:
    """Cubic spline of a * F(a) from the sine series on a refined grid."""

    def __init__(self, grid: RadialGrid, spec_values: np.ndarray, refine: int):
        phys = grid.to_physical(spec_values)
        n = grid.n_r
        size = refine * (n + 1) - 1
        padded = np.zeros(size, complex)
        padded[:n] = grid.r * phys
        vals = math.sqrt(2.0 / math.pi) * grid.dr * 0.5 * scipy.fft.dst(padded, type=1,
                                                                       workers=get_workers())
        nodes = grid.drho / refine * np.arange(0, size + 2)
        samples = np.concatenate([[0.0], vals, [0.0]])
        self.a_max = grid.rho_max
        self.h = grid.drho / refine
        # piecewise-cubic coefficients from scipy, evaluated directly since
        # the breakpoints are uniform
        self.c = CubicSpline(nodes, samples).c
        self.n_int = self.c.shape[1]

    def __call__(self, a: np.ndarray) -> np.ndarray:
        k = np.clip((a / self.h).astype(np.intp), 0, self.n_int - 1)
        t = a - k * self.h
        c = self.c
        out = ((c[0, k] * t + c[1, k]) * t + c[2, k]) * t + c[3, k]
        return np.where(a < self.a_max, out, 0.0)


def _slot_masks(ds: lp.DyadicSystem, piece: _Piece):
    j = piece.j
    if piece.high_first:
        first = ds.phi_mask(j)
        second = ds.leq_mask(j - 4)
        first_support = (lp.SUPPORT_LO * 2.0**j / WINDOW, lp.SUPPORT_HI * 2.0**j * WINDOW)
    else:
        first = ds.leq_mask(j - 4)
        second = ds.phi_mask(j)
        first_support = (0.0, lp.UPPER * 2.0 ** (j - 4) * WINDOW)
    return first, second, first_support


def _piece_quadrature(grid, f_hat, g_hat, spec, piece, ds, n_a, refine, guard):
    first, second, (a_lo, a_hi) = _slot_masks(ds, piece)
    fm = f_hat * first
    gm = g_hat * second
    # b nodes that cannot affect the result at double precision are dropped;
    # the cutoff is relative, so bilinearity is preserved exactly
    g_scale = np.abs(g_hat).max()
    b_idx = np.nonzero(np.abs(gm) > DROP_TOL * g_scale)[0]
    if b_idx.size == 0 or not np.any(fm):
        return None
    rho = grid.rho
    b_all = rho[b_idx]
    coef_all = b_all * gm[b_idx]
    a_hi = min(a_hi, grid.rho_max)
    b_max = b_all.max()
    s_idx = np.nonzero((rho > a_lo - b_max) & (rho < a_hi + b_max))[0]
    if s_idx.size == 0:
        return None
    S = _SineInterpolant(grid, fm, refine)
    x, w = _gauss(n_a)
    res_fn = _RESONANCES.get(spec.resonance)

    def block(idx):
        # active (sigma, b) pairs, ordered by sigma then b
        sig2 = rho[idx][:, None]
        lo2 = np.maximum(np.abs(sig2 - b_all[None, :]), a_lo)
        hi2 = np.minimum(sig2 + b_all[None, :], a_hi)
        si, bi = np.nonzero(hi2 > lo2)
        out = np.zeros(idx.size, complex)
        if si.size == 0:
            return out
        lo, hi = lo2[si, bi], hi2[si, bi]
        half = 0.5 * (hi - lo)
        a = (0.5 * (hi + lo))[:, None] + half[:, None] * x
        vals = S(a)
        if res_fn is not None:
            sigma = rho[idx][si]
            res = res_fn(a, b_all[bi][:, None], sigma[:, None])
            bad = np.abs(res) < guard
            if np.any(bad):
                k = np.argwhere(bad)[0]
                raise ResonanceGuardError(
                    f"resonance {spec.resonance} near zero inside mask window at "
                    f"a={a[tuple(k)]:.6g}, b={b_all[bi[k[0]]]:.6g}, sigma={sigma[k[0]]:.6g} "
                    f"(band {piece.j})")
            vals = vals / res
        contrib = half * (vals @ w) * coef_all[bi]
        starts = np.flatnonzero(np.r_[True, si[1:] != si[:-1]])
        out[si[starts]] = np.add.reduceat(contrib, starts)
        return out

    workers = get_workers()
    if workers > 1 and s_idx.size > 4 * workers:
        chunks = np.array_split(s_idx, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, chunks))
        acc = np.concatenate(parts)
    else:
        acc = block(s_idx)
    out = np.zeros(grid.n_r, complex)
    out[s_idx] = acc
    return out


def apply_bilinear(spec: MultiplierSpec, f: RadialField, g: RadialField, *,
                   n_a: int = 64, refine: int = 16, guard: float = 1e-9) -> RadialField:
    """Apply a masked bilinear multiplier; ``f`` occupies the first slot.

    Parameters
    ----------
    n_a : int
        Gauss-Legendre nodes for the inner integral.
    refine : int
        Refinement factor of the grid on which the first factor's sine
        series is tabulated before spline interpolation.
    guard : float
        Minimum admissible |resonance| on the mask support.

    Returns
    -------
    RadialField
        Spectral-domain result.
    """
    if f.grid != g.grid:
        raise ValueError("factors live on different grids")
    grid = f.grid
    f_hat = f.spectral().values
    g_hat = g.spectral().values
    out_abs, out_bracket, first_abs = spec.prefactor
    if first_abs:
        f_hat = f_hat * grid.rho**first_abs
    total = np.zeros(grid.n_r, complex)
    if not np.any(f_hat) or not np.any(g_hat):
        return RadialField(grid, total, SPECTRAL)
    ds = lp.DyadicSystem.for_grid(grid)
    for kind in lp.parse_kinds(spec.mask):
        for piece in _pieces(kind, ds.bands):
            q = _piece_quadrature(grid, f_hat, g_hat, spec, piece, ds, n_a, refine, guard)
            if q is not None:
                total += q
    total *= grid.drho / (math.sqrt(2.0 * math.pi) * grid.rho)
    if out_abs:
        total *= grid.rho**out_abs
    if out_bracket:
        total *= (1.0 + grid.rho**2) ** (0.5 * out_bracket)
    return RadialField(grid, total, SPECTRAL)


def Omega(N: RadialField, u: RadialField, **kw) -> RadialField:
    """Normal-form operator with symbol P_XL(xi, eta) / omega(xi, eta).

    ``N`` sits in the high (first) slot and ``u`` in the low slot.
    """
    return apply_bilinear(OMEGA_SPEC, N, u, **kw)


def Theta(u: RadialField, v: RadialField, **kw) -> RadialField:
    """Normal-form operator with symbol P_{XL+LX}(xi, eta) / theta(xi, eta).

    Callers pass the conjugated factor explicitly in the second slot, for
    example ``Theta(u, u.conj())``.
    """
    return apply_bilinear(THETA_SPEC, u, v, **kw)


# --- symbol certification -------------------------------------------------

def resonance_bound(case: str, j: int) -> float:
    """Lower bound on |resonance| over the support of the j-th XL mask piece."""
    if case == OMEGA:
        return (1 / 4 - 1 / 5 - 1 / 64) * 4.0**j if j >= 3 else (5 / 8 - 4 / 8) * 2.0**j
    if case == THETA:
        return (25 / 64 - 1 / 4 - 1 / 64) * 4.0**j if j >= 3 else (1 / 2 - 8 / 25) * 2.0**j
    raise ValueError(case)


def sample_xl_support(j: int, n: int, rng: np.random.Generator):
    """Uniform samples (a, b, mu) over the support of phi_j(a) varphi_{j-4}(b)."""
    a = rng.uniform(lp.SUPPORT_LO * 2.0**j, lp.SUPPORT_HI * 2.0**j, n)
    b = rng.uniform(0.0, lp.UPPER * 2.0 ** (j - 4), n)
    mu = rng.uniform(-1.0, 1.0, n)
    return a, b, mu


@dataclass
class SymbolRow:
    j: int
    case: str
    samples: int
    min_ratio: float
    max_m: float

    def line(self) -> str:
        return f"{self.j:>4d} {self.case:>5s} {self.samples:>8d} {self.min_ratio:>12.6f} {self.max_m:>12.6f}"


def verify_symbol_bounds(j_set, n_samples: int = 10_000, seed: int = 0,
                         cases=(OMEGA, THETA)) -> list[SymbolRow]:
    """Check the resonance lower bounds on sampled mask supports.

    Returns one row per (j, case) with the minimum of |resonance| / bound and
    the maximum of the weighted symbol sigma <sigma> / resonance.

    Raises
    ------
    SymbolBoundViolation
        With the offending (a, b, mu) if any sample falls below the bound.
    """
    rows = []
    for j in j_set:
        j = int(j)
        if abs(j) < 3:
            raise ValueError("symbol bounds are stated for |j| >= 3")
        rng = np.random.default_rng([seed, j + 1000])
        a, b, mu = sample_xl_support(j, n_samples, rng)
        sigma = np.sqrt(a**2 + b**2 + 2 * a * b * mu)
        for case in cases:
            res = _RESONANCES[case](a, b, sigma)
            bound = resonance_bound(case, j)
            ratio = np.abs(res) / bound
            k = int(np.argmin(ratio))
            if ratio[k] < 1.0:
                raise SymbolBoundViolation(
                    f"{case} bound violated at j={j}",
                    witness={"j": j, "case": case, "a": float(a[k]), "b": float(b[k]),
                             "mu": float(mu[k]), "resonance": float(res[k]), "bound": bound})
            m = sigma * np.sqrt(1 + sigma**2) / np.abs(res)
            rows.append(SymbolRow(j, case, n_samples, float(ratio[k]), float(m.max())))
    return rows


def symbol_value(case: str, j: int, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """m^j(xi, eta) = |xi+eta| <xi+eta> / res * phi_j(|xi|) varphi_{j-4}(|eta|) for 3-vectors."""
    a = np.linalg.norm(xi, axis=-1)
    b = np.linalg.norm(eta, axis=-1)
    sigma = np.linalg.norm(xi + eta, axis=-1)
    res = _RESONANCES[case](a, b, sigma)
    return sigma * np.sqrt(1 + sigma**2) / res * lp.phi_j(a, j) * lp.varphi_j(b, j - 4)


def _fd_derivative(fun, xi, eta, alpha, beta, h_xi, h_eta):
    """Central finite difference of ``fun`` for multi-indices of order <= 2."""
    steps = [(0, i, h_xi) for i in alpha] + [(1, i, h_eta) for i in beta]
    if not steps:
        return fun(xi, eta)

    def shifted(signs):
        x, e = xi.copy(), eta.copy()
        for (slot, i, h), s in zip(steps, signs):
            if slot == 0:
                x[..., i] += s * h
            else:
                e[..., i] += s * h
        return fun(x, e)

    total = 0.0
    n = len(steps)
    denom = np.prod([2 * h for (_, _, h) in steps], axis=0)
    for signs in np.ndindex(*([2] * n)):
        sg = [1 if s == 0 else -1 for s in signs]
        total = total + np.prod(sg) * shifted(sg)
    return total / denom


def verify_multiplier_derivatives(order: int = 2, j_set=(3, 4, 5, 6, 7, 8), n_samples: int = 500,
                                  seed: int = 0, cases=(OMEGA, THETA), rel_step: float = 1e-4) -> dict:
    """Estimate C_{alpha beta} in |d_xi^alpha d_eta^beta m^j| <= C |xi|^-|alpha| |eta|^-|beta|.

    Derivatives are taken in Cartesian coordinates with ``xi = a e1`` and
    ``eta = b (mu e1 + sqrt(1 - mu^2) e2)``.  Returns a mapping
    ``{(case, j): {order: constant}}``.
    """
    if order > 2:
        raise ValueError("order must be <= 2")
    out = {}
    for case in cases:
        for j in j_set:
            j = int(j)
            rng = np.random.default_rng([seed, j + 2000])
            a, b, mu = sample_xl_support(j, n_samples, rng)
            # stay off the mask edges so the stencil does not straddle them
            a = np.clip(a, lp.SUPPORT_LO * 2.0**j * 1.01, lp.SUPPORT_HI * 2.0**j * 0.99)
            b = np.clip(b, 1e-3 * 2.0**j, lp.UPPER * 2.0 ** (j - 4) * 0.99)
            xi = np.stack([a, np.zeros_like(a), np.zeros_like(a)], axis=-1)
            eta = np.stack([b * mu, b * np.sqrt(1 - mu**2), np.zeros_like(b)], axis=-1)
            fun = lambda x, e: symbol_value(case, j, x, e)
            h_xi = rel_step * 2.0**j * (10 if order == 2 else 1)
            h_eta = rel_step * 2.0 ** (j - 4) * (10 if order == 2 else 1)
            consts = {}
            for k in range(order + 1):
                best = 0.0
                for na in range(k + 1):
                    nb = k - na
                    for alpha in _multi(na):
                        for beta in _multi(nb):
                            d = _fd_derivative(fun, xi, eta, alpha, beta, h_xi, h_eta)
                            if not np.all(np.isfinite(d)):
                                raise ArithmeticError(f"non-finite derivative estimate at j={j}")
                            scaled = np.abs(d) * a**na * b**nb
                            best = max(best, float(scaled.max()))
                consts[k] = best
            out[(case, j)] = consts
    return out


def _multi(n: int):
    """Index tuples over the three coordinates for a derivative of order n."""
    if n == 0:
        return [()]
    if n == 1:
        return [(i,) for i in range(3)]
    return [(i, k) for i in range(3) for k in range(i, 3)]
