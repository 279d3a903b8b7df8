"""Ensemble ratio checks for the bilinear and trilinear estimates.

Each registered estimate is evaluated in its time-independent form: for
fields constant on a unit time interval every L^p_t norm reduces to the
spatial norm, so both sides become spatial norms of single-time fields.
For each ensemble member the ratio LHS / RHS is recorded; the report holds
the ensemble maximum and median, the number of skipped (unresolved)
members and the number of non-finite ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bilinear as bl
from . import littlewood_paley as lp
from .ensembles import BandRange, is_resolved
from .norms import besov, lebesgue, q_of_eps
from .spectral import PHYSICAL, SPECTRAL, RadialField, build_grid


# --- small field helpers -----------------------------------------------------

def _abs_d(F: RadialField, s: float) -> RadialField:
    F = F.spectral()
    return RadialField(F.grid, F.values * F.grid.rho**s, SPECTRAL) if s else F


def _br_d(F: RadialField, s: float) -> RadialField:
    F = F.spectral()
    return RadialField(F.grid, F.values * (1 + F.grid.rho**2) ** (0.5 * s), SPECTRAL) if s else F


def _l2(F: RadialField) -> float:
    F = F.spectral()
    return F.grid.l2_spectral(F.values)


def _hs(F: RadialField, s: float) -> float:
    return _l2(_br_d(F, s))


def _mul(f: RadialField, g: RadialField) -> RadialField:
    return RadialField(f.grid, f.physical().values * g.physical().values, PHYSICAL)


def _para(f, g, kind):
    return lp.paraproduct(f, g, kind, check_resolution=False)


def _band_products(f, g, shifts, lam, p, squared):
    """Sum over j of 2^(lam j) ||P_j f P_{j+l} g||_{L^p} (or its square-sum form)."""
    fp, gp = lp.BandPieces(f), lp.BandPieces(g)
    total = 0.0
    for j in fp.ds.bands:
        j = int(j)
        for l in shifts:
            other = gp.low(j - 4) if l is None else gp.band(j + l)
            val = lp_norm_values(f.grid, fp.band(j) * other, p)
            total += (2.0 ** (2 * lam * j) * val**2) if squared else 2.0 ** (lam * j) * val
    return math.sqrt(total) if squared else total


def lp_norm_values(grid, values, p):
    from .norms import lebesgue_values

    return float(lebesgue_values(grid, values, p))


def _strichartz_pair(eps):
    """(s, q) of the Schroedinger and wave Besov-Strichartz components."""
    return (0.25 + eps, q_of_eps(eps)), (-0.25 - eps, q_of_eps(-eps))


def _dual(x: float) -> float:
    return x / (x - 1.0)


# --- estimate definitions ----------------------------------------------------

# Spectral spacings 1/4 and 1/16: the resolved bands then start at 1/2 and 1/8
DEFAULT_R_MAX = 4 * math.pi
RESONANT_R_MAX = 16 * math.pi

@dataclass(frozen=True)
class Estimate:
    lemma_id: str
    slots: tuple
    func: object
    description: str
    defaults: dict = field(default_factory=dict)
    r_max: float = 0.0

    def __post_init__(self):
        if not self.r_max:
            # resonant RL pieces need a finer spectral spacing to be resolved
            resonant = "resonant" in self.slots
            object.__setattr__(self, "r_max", RESONANT_R_MAX if resonant else DEFAULT_R_MAX)


def _e31_1(f, g, gamma, eps, lam=0.25, p=2.0):
    lhs = lebesgue(_abs_d(_para(f, g, "HL").spectral(), lam), p)
    rhs = _band_products(f, g, (None,), lam, p, squared=True)
    return lhs, rhs


def _e31_2(f, g, gamma, eps, lam=0.5, p=2.0):
    lhs = lebesgue(_abs_d(_para(f, g, "HH").spectral(), lam), p)
    rhs = _band_products(f, g, range(-3, 4), lam, p, squared=False)
    return lhs, rhs


def _e31_3(f, g, gamma, eps):
    lhs = lebesgue(_para(f, g, "HH"), 2.0)
    rhs = _band_products(f, g, range(-3, 4), 0.0, 2.0, squared=False)
    return lhs, rhs


def _e32_1(N, u, gamma, eps, kind="LH"):
    (ss, qs), (sw, qw) = _strichartz_pair(eps)
    lhs = _hs(_para(N, u, kind), 1.0)
    rhs = besov(N, sw, qw) * besov(_br_d(u, 1.0), ss, qs)
    return lhs, rhs


def _e32_1hh(N, u, gamma, eps):
    return _e32_1(N, u, gamma, eps, kind="HH")


def _xs0(u, eps):
    """||u||_{L^inf L^2 cap L^2 B^{1/4+eps}_{q(eps)}} for a stationary field."""
    (ss, qs), _ = _strichartz_pair(eps)
    return _l2(u) + besov(u, ss, qs)


def _e32_2(N, u, gamma, eps, theta=None):
    theta = 3 / 8 - 2.5 * eps if theta is None else theta
    inv_a = 0.5 - theta / 2
    inv_b = 1 / q_of_eps(eps) + theta / 3
    s_exp = 1.5 - 2 * inv_a - 3 * inv_b
    b_dual = _dual(1 / inv_b)
    _, (sw, qw) = _strichartz_pair(eps)
    lhs = besov(_br_d(_para(N, u, "RL").spectral(), 1.0), s_exp, b_dual)
    rhs = besov(N, sw, qw) * _xs0(u, eps)
    return lhs, rhs


def _e33_1(u, v, gamma, eps):
    (ss, qs), _ = _strichartz_pair(eps)
    out = _br_d(_abs_d(_para(u, v, "HH").spectral(), gamma), 0.5 * (1 - gamma))
    lhs = _l2(out)
    rhs = besov(u, ss, qs) * besov(_br_d(v, 0.5 * gamma), ss, qs)
    return lhs, rhs


def _e33_2(u, v, gamma, eps, theta=None):
    theta = 4 * eps if theta is None else theta
    inv_a = 0.5 - theta / 2
    inv_b = 1 / q_of_eps(-eps) + theta / 3
    s_exp = 1.5 - inv_a - 3 * inv_b
    b_dual = _dual(1 / inv_b)
    out = _br_d(_abs_d(_para(u, v, "RL").spectral(), gamma), 0.5 * (1 - gamma))
    lhs = besov(out, s_exp, b_dual)
    rhs = _xs0(u, eps) * _xs0(v, eps)
    return lhs, rhs


def _theta_out(u, v, gamma):
    th = bl.Theta(u, v)
    return _br_d(_abs_d(th, gamma), 0.5 * (1 - gamma))


def _e34_1(N, u, gamma, eps, s=0.6):
    lhs = _hs(bl.Omega(N, u), 1.0)
    rhs = _l2(N) * _hs(u, s)
    return lhs, rhs


def _e34_2(u, v, gamma, eps, s=None):
    s = 0.25 * gamma + 0.1 if s is None else s
    lhs = _l2(_theta_out(u, v, gamma))
    rhs = _hs(u, s) * _hs(v, s)
    return lhs, rhs


def _e35_1(N, u, gamma, eps):
    (ss, qs), _ = _strichartz_pair(eps)
    lhs = besov(_br_d(bl.Omega(N, u), 1.0), ss, qs)
    rhs = _l2(N) * lebesgue(_br_d(u, 1.0), 6.0)
    return lhs, rhs


def _e35_2(u, v, gamma, eps):
    _, (sw, qw) = _strichartz_pair(eps)
    lhs = besov(_theta_out(u, v, gamma), sw, qw)
    rhs = _l2(u) * lebesgue(v, 6.0) + lebesgue(u, 6.0) * _l2(v)
    return lhs, rhs


def _e36_1(N, u, gamma, eps):
    _, (sw, qw) = _strichartz_pair(eps)
    lhs = _hs(bl.Omega(N, u), 1.0)
    rhs = besov(N, sw, qw) * _l2(u)
    return lhs, rhs


def _e36_2(u, v, gamma, eps):
    lhs = _l2(_theta_out(u, v, gamma))
    rhs = (_l2(u) * lebesgue(_br_d(v, 1.0), 6.0)
           + lebesgue(_br_d(u, 1.0), 6.0) * _l2(v))
    return lhs, rhs


def _e37_1(u, v, w, gamma, eps):
    uv = _abs_d(_mul(u, v).spectral(), gamma)
    lhs = _hs(bl.Omega(uv, w), 1.0)
    rhs = _l2(u) * lebesgue(_br_d(v, 1.0), 6.0) * lebesgue(_br_d(w, 1.0), 6.0)
    return lhs, rhs


def _e37_2(N, W, u, gamma, eps):
    _, (sw, qw) = _strichartz_pair(eps)
    lhs = _hs(bl.Omega(N, _mul(W, u)), 1.0)
    rhs = besov(N, sw, qw) * _l2(W) * lebesgue(_br_d(u, 1.0), 6.0)
    return lhs, rhs


def _e37_3(N, u, v, gamma, eps):
    lhs = _l2(_theta_out(_mul(N, u), v, gamma))
    rhs = _l2(N) * lebesgue(_br_d(u, 1.0), 6.0) * lebesgue(_br_d(v, 1.0), 6.0)
    return lhs, rhs


def _e61(N, u, gamma, eps, delta=0.25, s=None):
    s = 0.5 + delta + 0.05 if s is None else s
    lhs = _hs(bl.Omega(N, u), 1.0)
    rhs = _hs(N, -delta) * _hs(u, s)
    return lhs, rhs


REGISTRY = {
    "3.1(1)": Estimate("3.1(1)", ("generic", "generic"), _e31_1,
                       "|grad|^lam (fg)_HL in L^p vs square sum of band products", {"lam": 0.25, "p": 2.0}),
    "3.1(2)": Estimate("3.1(2)", ("generic", "generic"), _e31_2,
                       "|grad|^lam (fg)_HH in L^p vs sum of near-diagonal band products", {"lam": 0.5, "p": 2.0}),
    "3.1(3)": Estimate("3.1(3)", ("generic", "generic"), _e31_3,
                       "(fg)_HH in L^2 vs sum of near-diagonal band products"),
    "3.2(1)": Estimate("3.2(1)", ("low", "high"), _e32_1,
                       "(Nu)_LH in H^1 vs wave and Schroedinger Besov norms"),
    "3.2(1)HH": Estimate("3.2(1)HH", ("generic", "generic"), _e32_1hh,
                         "(Nu)_HH in H^1 vs wave and Schroedinger Besov norms"),
    "3.2(2)": Estimate("3.2(2)", ("resonant", "resonant_low"), _e32_2,
                       "<grad>(Nu)_RL in the dual Besov space, theta = 3/8 - 5 eps / 2"),
    "3.3(1)": Estimate("3.3(1)", ("generic", "generic"), _e33_1,
                       "<grad>^((1-g)/2) |grad|^g (uv)_HH in L^2"),
    "3.3(2)": Estimate("3.3(2)", ("resonant", "resonant_low"), _e33_2,
                       "<grad>^((1-g)/2) |grad|^g (uv)_RL in the dual Besov space, theta = 4 eps"),
    "3.4(1)": Estimate("3.4(1)", ("high", "low"), _e34_1,
                       "Omega(N,u) in H^1 vs ||N||_L2 ||u||_H^s", {"s": 0.6}),
    "3.4(2)": Estimate("3.4(2)", ("high", "low"), _e34_2,
                       "<grad>^((1-g)/2)|grad|^g Theta(u,v) in L^2 vs H^s norms with s > g/4"),
    "3.5(1)": Estimate("3.5(1)", ("high", "low"), _e35_1,
                       "<grad>Omega(N,u) in B^{1/4+eps}_{q(eps)} vs ||N||_L2 ||<grad>u||_L6"),
    "3.5(2)": Estimate("3.5(2)", ("high", "low"), _e35_2,
                       "Theta(u,v) in B^{-1/4-eps}_{q(-eps)} vs L^2 x L^6"),
    "3.6(1)": Estimate("3.6(1)", ("high", "low"), _e36_1,
                       "<grad>Omega(N,u) in L^2 vs ||N||_{B^{-1/4-eps}_{q(-eps)}} ||u||_L2"),
    "3.6(2)": Estimate("3.6(2)", ("high", "low"), _e36_2,
                       "Theta(u,v) in L^2 vs L^2 x <grad>L^6"),
    "3.7(1)": Estimate("3.7(1)", ("high", "high", "low"), _e37_1,
                       "<grad>Omega(|grad|^g(uv), w) in L^2"),
    "3.7(2)": Estimate("3.7(2)", ("high", "low", "low"), _e37_2,
                       "<grad>Omega(N, W u) in L^2"),
    "3.7(3)": Estimate("3.7(3)", ("high", "low", "low"), _e37_3,
                       "Theta(N u, v) in L^2"),
    "6.1": Estimate("6.1", ("high", "low"), _e61,
                    "Omega(N,u) in H^1 vs ||N||_{H^-delta} ||u||_{H^s}", {"delta": 0.25}),
}


@dataclass(frozen=True)
class EnsembleConfig:
    """Grid and band ranges for ratio ensembles.

    ``high`` and ``low`` feed the high and low slots of the normal-form
    operators, ``resonant`` feeds the high slot of resonant RL pieces and
    ``generic`` is used for the paraproduct estimates.
    """

    n_samples: int = 50
    seed: int = 0
    n_r: int = 128
    r_max: float | None = None
    generic: BandRange = BandRange(1.2, 12.0, 0.2)
    high: BandRange = BandRange(10.5, 13.5, 0.1, 1)
    low: BandRange = BandRange(0.9, 1.1, 0.3, 1)
    resonant: BandRange = BandRange(2.9, 3.3, 0.15, 1)
    resonant_low: BandRange = BandRange(0.24, 0.28, 0.3, 1)

    def with_grid(self, n_r: int, r_max: float | None = None) -> "EnsembleConfig":
        from dataclasses import replace

        return replace(self, n_r=n_r, r_max=self.r_max if r_max is None else r_max)


@dataclass
class RatioReport:
    lemma_id: str
    ratios: np.ndarray
    skipped: int
    nonfinite: int
    params: dict

    @property
    def max(self) -> float:
        finite = self.ratios[np.isfinite(self.ratios)]
        return float(finite.max()) if finite.size else 0.0

    @property
    def median(self) -> float:
        finite = self.ratios[np.isfinite(self.ratios)]
        return float(np.median(finite)) if finite.size else 0.0

    def line(self) -> str:
        return (f"{self.lemma_id:<9s} n={self.ratios.size:<4d} skipped={self.skipped:<3d} "
                f"nonfinite={self.nonfinite:<3d} max={self.max:.6g} median={self.median:.6g}")


def ratio(lhs: float, rhs: float) -> float:
    """LHS / RHS with 0/0 defined as 0."""
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


def estimate_ratio(lemma_id: str, ensemble_config: EnsembleConfig | None = None,
                   gamma: float = 1.0, eps: float = 0.03, **params) -> RatioReport:
    """Evaluate LHS / RHS of a registered estimate over a random ensemble.

    Members with spectral mass outside the resolved band are skipped and
    counted.  ``params`` override the estimate's exponents (for example
    ``s`` for "3.4(1)").
    """
    if lemma_id not in REGISTRY:
        raise KeyError(f"unknown estimate {lemma_id!r}; known: {sorted(REGISTRY)}")
    est = REGISTRY[lemma_id]
    cfg = ensemble_config or EnsembleConfig()
    r_max = cfg.r_max or est.r_max
    grid = build_grid(cfg.n_r, r_max)
    rng = np.random.default_rng([cfg.seed, sum(map(ord, lemma_id))])
    ratios, skipped, nonfinite = [], 0, 0
    for _ in range(cfg.n_samples):
        fields = [getattr(cfg, slot).sample(grid, rng) for slot in est.slots]
        if not all(is_resolved(f) for f in fields):
            skipped += 1
            continue
        lhs, rhs = est.func(*fields, gamma, eps, **params)
        r = ratio(lhs, rhs)
        if not math.isfinite(r):
            nonfinite += 1
        ratios.append(r)
    merged = dict(est.defaults)
    merged.update(params)
    return RatioReport(lemma_id, np.array(ratios), skipped, nonfinite,
                       {"gamma": gamma, "eps": eps, "n_r": cfg.n_r, "r_max": r_max,
                        "seed": cfg.seed, **merged})


def zero_ratio(lemma_id: str, n_r: int = 128, gamma: float = 1.0, eps: float = 0.03) -> float:
    """Ratio for all-zero inputs (0 by convention)."""
    est = REGISTRY[lemma_id]
    grid = build_grid(n_r, est.r_max)
    zeros = [RadialField.zeros(grid, SPECTRAL) for _ in est.slots]
    return ratio(*est.func(*zeros, gamma, eps))


# --- threshold probe -------------------------------------------------------

@dataclass(frozen=True)
class ProbeConfig:
    """Ensemble for the H^s threshold probe of the Omega boundary estimate.

    The low factor sits at frequency B, log-uniform in [b_lo, b_hi], and the
    high factor at ``separation * B`` so that the pair lies in the XL region.
    """

    n_samples: int = 24
    seed: int = 0
    n_r: int = 2047
    r_max: float = 16.0
    b_lo: float = 1.0
    b_hi: float = 2.0
    separation: float = 14.0
    low_width: float = 0.25
    high_width: float = 0.05


def threshold_probe(s_values=(0.4, 0.6), config: ProbeConfig | None = None) -> dict:
    """Ensemble maxima of ||Omega(N,u)||_H1 / (||N||_L2 ||u||_{H^s}) for each s."""
    from .ensembles import spectral_bump

    cfg = config or ProbeConfig()
    grid = build_grid(cfg.n_r, cfg.r_max)
    rng = np.random.default_rng([cfg.seed, 34])
    best = {s: 0.0 for s in s_values}
    for _ in range(cfg.n_samples):
        B = float(np.exp(rng.uniform(np.log(cfg.b_lo), np.log(cfg.b_hi))))
        u = spectral_bump(grid, B, cfg.low_width * B)
        N = spectral_bump(grid, cfg.separation * B, cfg.high_width * cfg.separation * B)
        lhs = _hs(bl.Omega(N, u), 1.0)
        for s in s_values:
            best[s] = max(best[s], ratio(lhs, _l2(N) * _hs(u, s)))
    return best
