"""Direct split-step and normal-form Picard solvers for the first-order system.

Unknowns are the Schroedinger field ``u`` and the reduced wave field
``N = n - i |grad|^-1 n_t``, evolving by

    i u_t - Lap u = F(u, N),        F = Re(N) u  (physical) or N u  (paper)
    i N_t + |grad| N = |grad|^gamma |u|^2.

States are stored spectrally.  The Picard solver iterates the normal-form
integral equations in which the non-resonant high-low interactions have been
integrated by parts in time, replacing them with boundary terms built from
Omega and Theta and with cubic Duhamel terms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import bilinear as bl
from . import littlewood_paley as lp
from . import norms
from .errors import ConfigError, NoContractionError, SpectralBlowupError, TrajectoryError
from .spectral import (PHYSICAL, SPECTRAL, RadialField, RadialGrid, init_from_physical,
                       schrodinger_multiplier, wave_multiplier)

MODES = ("physical", "paper")


@dataclass(frozen=True)
class SimState:
    """Time and spectral samples of (u, N)."""

    t: float
    u: RadialField
    N: RadialField

    def __post_init__(self):
        if self.u.grid != self.N.grid:
            raise ValueError("u and N must share a grid")
        if not math.isfinite(self.t):
            raise ValueError("time must be finite")
        object.__setattr__(self, "u", self.u.spectral())
        object.__setattr__(self, "N", self.N.spectral())

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping and solver parameters.

    ``mode`` selects the Schroedinger nonlinearity: ``"physical"`` uses
    Re(N) u, ``"paper"`` uses N u.  ``nonlinear=False`` switches the coupling
    off entirely (free evolution).
    """

    dt: float
    T: float
    gamma: float = 1.0
    mode: str = "physical"
    snapshot_every: int = 1
    eps: float = 0.03
    picard_tol: float = 1e-8
    picard_max_iter: int = 50
    rho_data: float = 1e-2
    nonlinear: bool = True
    blowup_fraction: float = 0.01
    n_a: int = 64

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt must be positive", key="dt")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError("T must be positive", key="T")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}", key="mode")
        if not -1.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [-1, 1]", key="gamma")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be >= 1", key="snapshot_every")
        if not self.picard_tol > 0:
            raise ConfigError("picard_tol must be positive", key="picard_tol")

    @property
    def n_steps(self) -> int:
        n = int(round(self.T / self.dt))
        if abs(n * self.dt - self.T) > 1e-9 * max(1.0, self.T):
            raise ConfigError("T must be an integer multiple of dt", key="T")
        return n


@dataclass
class Trajectory:
    """Uniformly spaced spectral snapshots of (u, N) with run metadata."""

    grid: RadialGrid
    times: np.ndarray
    u: np.ndarray
    N: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.u = np.asarray(self.u, dtype=complex)
        self.N = np.asarray(self.N, dtype=complex)
        n = self.times.size
        if self.u.shape != (n, self.grid.n_r) or self.N.shape != (n, self.grid.n_r):
            raise TrajectoryError("snapshot arrays do not match times and grid")
        if n > 1:
            steps = np.diff(self.times)
            if np.any(steps <= 0):
                raise TrajectoryError("snapshot times must be strictly increasing")
            if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
                raise TrajectoryError("snapshot times must be uniformly spaced")

    def __len__(self) -> int:
        return self.times.size

    @property
    def cadence(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    def state(self, i: int) -> SimState:
        return SimState(float(self.times[i]), RadialField(self.grid, self.u[i], SPECTRAL),
                        RadialField(self.grid, self.N[i], SPECTRAL))

    def physical(self, name: str = "u") -> np.ndarray:
        return self.grid.to_physical(getattr(self, name))

    def subsample(self, every: int) -> "Trajectory":
        sl = slice(None, None, every)
        return Trajectory(self.grid, self.times[sl], self.u[sl], self.N[sl], dict(self.meta))

    def window(self, t0: float, t1: float) -> "Trajectory":
        tol = 1e-9 * max(1.0, abs(t1))
        keep = (self.times >= t0 - tol) & (self.times <= t1 + tol)
        return Trajectory(self.grid, self.times[keep], self.u[keep], self.N[keep], dict(self.meta))


def zero_trajectory(grid: RadialGrid, times) -> Trajectory:
    n = len(times)
    z = np.zeros((n, grid.n_r), complex)
    return Trajectory(grid, times, z, z.copy(), {"solver": "none"})


# --- initial data ------------------------------------------------------------

def data_size(u0: RadialField, N0: RadialField, gamma: float) -> float:
    """||u0||_{H^1} + ||N0||_{H^{(1-gamma)/2}}."""
    return norms.sobolev(u0, 1.0) + norms.sobolev(N0, 0.5 * (1.0 - gamma))


def gaussian_data(grid: RadialGrid, gamma: float, rho_data: float, *, u_width: float = 1.0,
                  n_width: float = 1.0, n_weight: float = 1.0, n1_weight: float = 0.0,
                  u_phase: float = 0.0, zero_mode_tol: float = 1e-8):
    """Gaussian profiles scaled so that the data size equals ``rho_data``.

    Shapes before scaling are ``u0 = e^{i u_phase} e^{-r^2/(2 u_width^2)}``,
    ``n0 = n_weight e^{-r^2/(2 n_width^2)}`` and ``n1 = n1_weight (-Lap)`` of
    the same Gaussian, so that ``n1`` has no zero-frequency content.
    """
    gu = np.exp(-grid.r**2 / (2 * u_width**2)) * np.exp(1j * u_phase)
    gn = np.exp(-grid.r**2 / (2 * n_width**2))
    u0 = RadialField(grid, gu, PHYSICAL)
    n0 = RadialField(grid, n_weight * gn, PHYSICAL)
    gn_hat = grid.to_spectral(gn)
    n1 = RadialField(grid, (n1_weight * grid.to_physical(grid.rho**2 * gn_hat)).real, PHYSICAL)
    u0, N0 = init_from_physical(u0, n0, n1, zero_mode_tol=zero_mode_tol)
    size = data_size(u0, N0, gamma)
    if size == 0 or rho_data == 0:
        return u0 * 0.0, N0 * 0.0
    c = rho_data / size
    return u0 * c, N0 * c


# --- nonlinear terms -----------------------------------------------------------

def _nonlinearity(u_phys: np.ndarray, N_phys: np.ndarray, mode: str) -> np.ndarray:
    if mode == "physical":
        return N_phys.real * u_phys
    return N_phys * u_phys


def _high_fraction(grid: RadialGrid, spec: np.ndarray) -> float:
    mass = grid.rho_weights * np.abs(spec) ** 2
    total = mass.sum()
    if total == 0:
        return 0.0
    return float(mass[grid.rho > 0.5 * grid.rho_max].sum() / total)


def _check_blowup(grid, u_hat, N_hat, limit, t):
    for name, spec in (("u", u_hat), ("N", N_hat)):
        frac = _high_fraction(grid, spec)
        if frac > limit:
            raise SpectralBlowupError(
                f"spectral blow-up: {frac:.3e} of {name} mass above rho_max/2 at t={t:.6g}")


def _step_arrays(grid, u_hat, N_hat, dt, mode, gamma, nonlinear=True):
    half_s = schrodinger_multiplier(grid, 0.5 * dt)
    half_w = wave_multiplier(grid, 0.5 * dt)
    u_hat = u_hat * half_s
    N_hat = N_hat * half_w
    if nonlinear:
        rho_g = grid.rho**gamma
        u = grid.to_physical(u_hat)
        N = grid.to_physical(N_hat)
        if mode == "physical":
            # Re N is frozen over the substep because the wave source is real
            u_new = np.exp(-1j * dt * N.real) * u
            N_hat = N_hat - 1j * dt * rho_g * grid.to_spectral(np.abs(u) ** 2)
        else:
            src0 = grid.to_spectral(np.abs(u) ** 2)
            N_mid = N - 0.5j * dt * grid.to_physical(rho_g * src0)
            u_new = np.exp(-1j * dt * N_mid) * u
            src1 = grid.to_spectral(np.abs(u_new) ** 2)
            N_hat = N_hat - 0.5j * dt * rho_g * (src0 + src1)
        u_hat = grid.to_spectral(u_new)
    return u_hat * half_s, N_hat * half_w


def step_direct(state: SimState, dt: float, mode: str = "physical", gamma: float = 1.0,
                nonlinear: bool = True, blowup_fraction: float = 0.01) -> SimState:
    """One Strang step: half linear, full nonlinear, half linear.

    The physical-mode nonlinear substep is exact.  The paper-mode substep
    uses a midpoint wave field in the phase and the trapezoid rule for the
    wave source, which keeps the step second order.

    Raises
    ------
    SpectralBlowupError
        If more than ``blowup_fraction`` of the mass of u or N sits above
        rho_max / 2 after the step.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    grid = state.grid
    u_hat, N_hat = _step_arrays(grid, state.u.values, state.N.values, dt, mode, gamma, nonlinear)
    t = state.t + dt
    _check_blowup(grid, u_hat, N_hat, blowup_fraction, t)
    return SimState(t, RadialField(grid, u_hat, SPECTRAL), RadialField(grid, N_hat, SPECTRAL))


def run_direct(config: SolverConfig, u0: RadialField, N0: RadialField) -> Trajectory:
    """Integrate with step_direct and store every ``snapshot_every``-th state."""
    grid = u0.grid
    u_hat = u0.spectral().values.copy()
    N_hat = N0.spectral().values.copy()
    n_steps = config.n_steps
    times, us, Ns = [0.0], [u_hat], [N_hat]
    for n in range(1, n_steps + 1):
        u_hat, N_hat = _step_arrays(grid, u_hat, N_hat, config.dt, config.mode, config.gamma,
                                    config.nonlinear)
        _check_blowup(grid, u_hat, N_hat, config.blowup_fraction, n * config.dt)
        if n % config.snapshot_every == 0:
            times.append(n * config.dt)
            us.append(u_hat)
            Ns.append(N_hat)
    meta = {"solver": "direct-strang", "dt": config.dt, "mode": config.mode,
            "gamma": config.gamma, "steps": n_steps, "snapshot_every": config.snapshot_every,
            "nonlinear": config.nonlinear}
    return Trajectory(grid, np.array(times), np.array(us), np.array(Ns), meta)


# --- normal-form pieces --------------------------------------------------------

def normal_form_boundary(state: SimState, gamma: float, n_a: int = 64):
    """Boundary operators (Omega(N, u), |grad|^gamma Theta(u, conj u)) at one time."""
    grid = state.grid
    u, N = state.u, state.N
    om = bl.Omega(N, u, n_a=n_a)
    th = bl.Theta(u, u.conj(), n_a=n_a)
    return om, RadialField(grid, th.values * grid.rho**gamma, SPECTRAL)


@dataclass
class _NodeTerms:
    dS: np.ndarray
    dW: np.ndarray
    bS: np.ndarray
    bW: np.ndarray


def _node_terms(grid: RadialGrid, u_hat: np.ndarray, N_hat: np.ndarray, gamma: float,
                n_a: int) -> _NodeTerms:
    """Duhamel integrands and boundary terms of the normal-form equations at one time."""
    rho_g = grid.rho**gamma
    u = RadialField(grid, u_hat, SPECTRAL)
    N = RadialField(grid, N_hat, SPECTRAL)
    if not np.any(u_hat):
        z = np.zeros(grid.n_r, complex)
        return _NodeTerms(z, z.copy(), z.copy(), z.copy())
    u_bar = u.conj()
    pu, pN, pub = lp.BandPieces(u), lp.BandPieces(N), lp.BandPieces(u_bar)
    up = grid.to_physical(u_hat)
    Np = grid.to_physical(N_hat)
    Nu = RadialField(grid, Np * up, PHYSICAL).spectral()
    uu_hat = grid.to_spectral(np.abs(up) ** 2)
    low_S = grid.to_spectral(lp.paraproduct_pieces(pN, pu, ("RL", "LH", "HH")))
    low_W = grid.to_spectral(lp.paraproduct_pieces(pu, pub, ("RL", "LR", "HH")))
    grad_uu = RadialField(grid, rho_g * uu_hat, SPECTRAL)
    dS = (low_S
          + bl.Omega(grad_uu, u, n_a=n_a).values
          + bl.Omega(N, Nu, n_a=n_a).values)
    dW = rho_g * (low_W
                  + bl.Theta(Nu, u_bar, n_a=n_a).values
                  - bl.Theta(u, Nu.conj(), n_a=n_a).values)
    bS = bl.Omega(N, u, n_a=n_a).values
    bW = rho_g * bl.Theta(u, u_bar, n_a=n_a).values
    return _NodeTerms(dS, dW, bS, bW)


def _cumtrapz_profile(times, integrand):
    """Cumulative trapezoid along axis 0, starting at zero."""
    out = np.zeros_like(integrand)
    if len(times) > 1:
        dt = np.diff(times)[:, None]
        out[1:] = np.cumsum(0.5 * dt * (integrand[1:] + integrand[:-1]), axis=0)
    return out


@dataclass
class PicardLog:
    iterations: list = field(default_factory=list)
    converged: bool = False

    @property
    def contraction_factors(self) -> list:
        return [it["factor"] for it in self.iterations if it["factor"] is not None]

    @property
    def contraction_factor(self) -> float:
        """Largest successive-difference ratio observed."""
        f = self.contraction_factors
        return max(f) if f else 0.0

    def rows(self):
        for it in self.iterations:
            yield it["iteration"], it["diff"], it["factor"]


def picard_solve(config: SolverConfig, u0: RadialField, N0: RadialField,
                 callback=None) -> tuple[Trajectory, PicardLog]:
    """Fixed-point iteration of the normal-form integral equations.

    The iteration starts from zero, so the first iterate is the free evolution
    of the data corrected by the boundary terms at t = 0.  Time integrals use
    the trapezoid rule on the uniform grid ``t_n = n dt``; the distance between
    successive iterates is measured by the discrete X-norm.

    Raises
    ------
    NoContractionError
        If the successive-difference ratio exceeds one three times in a row.
    """
    grid = u0.grid
    gamma, eps = config.gamma, config.eps
    if not 0.5 <= gamma <= 1.0:
        warnings.warn("contraction is only expected for gamma in [1/2, 1]", RuntimeWarning,
                      stacklevel=2)
    if data_size(u0, N0, gamma) > config.rho_data * (1 + 1e-9):
        raise ConfigError("initial data exceed rho_data", key="rho_data")
    n_steps = config.n_steps
    times = config.dt * np.arange(n_steps + 1)
    S = np.exp(1j * times[:, None] * grid.rho[None, :] ** 2)
    W = np.exp(1j * times[:, None] * grid.rho[None, :])
    u0h, N0h = u0.spectral().values, N0.spectral().values
    t0 = _node_terms(grid, u0h, N0h, gamma, config.n_a)
    lin_u = S * (u0h + t0.bS)[None, :]
    lin_N = W * (N0h + t0.bW)[None, :]

    U = np.zeros((times.size, grid.n_r), complex)
    Nn = np.zeros_like(U)
    log = PicardLog()
    prev, over = None, 0
    for k in range(1, config.picard_max_iter + 1):
        terms = [_node_terms(grid, U[n], Nn[n], gamma, config.n_a) for n in range(times.size)]
        dS = np.array([t.dS for t in terms])
        dW = np.array([t.dW for t in terms])
        bS = np.array([t.bS for t in terms])
        bW = np.array([t.bW for t in terms])
        IS = _cumtrapz_profile(times, np.conj(S) * dS)
        IW = _cumtrapz_profile(times, np.conj(W) * dW)
        U_new = lin_u - bS - 1j * S * IS
        N_new = lin_N - bW - 1j * W * IW
        diff = (norms.x_norm_S_values(grid, times, U_new - U, eps)
                + norms.x_norm_W_values(grid, times, N_new - Nn, gamma, eps))
        factor = diff / prev if prev not in (None, 0.0) else None
        log.iterations.append({"iteration": k, "diff": diff, "factor": factor})
        if callback is not None:
            callback(k, diff, factor)
        U, Nn = U_new, N_new
        if diff < config.picard_tol:
            log.converged = True
            break
        over = over + 1 if (factor is not None and factor > 1.0) else 0
        if over >= 3:
            raise NoContractionError(
                f"no contraction: difference ratio above 1 for 3 iterations (last {factor:.3g})")
        prev = diff
    if not log.converged:
        warnings.warn("Picard iteration reached picard_max_iter without meeting the tolerance",
                      RuntimeWarning, stacklevel=2)
    sl = slice(None, None, config.snapshot_every)
    meta = {"solver": "picard-normal-form", "dt": config.dt, "mode": "paper", "gamma": gamma,
            "iterations": len(log.iterations), "converged": log.converged,
            "tol": config.picard_tol, "snapshot_every": config.snapshot_every}
    return Trajectory(grid, times[sl], U[sl], Nn[sl], meta), log


# --- residuals -----------------------------------------------------------------

def _mode_of(traj: Trajectory, mode: str | None) -> str:
    mode = mode or traj.meta.get("mode", "physical")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    return mode


def duhamel_residual(traj: Trajectory, gamma: float, mode: str | None = None):
    """Distance between a trajectory and its own plain Duhamel reconstruction.

    Returns ``(times, res_S, res_W)`` with res_S in H^1 and res_W in
    H^{(1-gamma)/2}; the maximum over times is the residual in L^inf_t.
    """
    mode = _mode_of(traj, mode)
    grid, times = traj.grid, traj.times
    if len(traj) == 0:
        raise TrajectoryError("empty trajectory")
    S = np.exp(1j * times[:, None] * grid.rho**2)
    W = np.exp(1j * times[:, None] * grid.rho)
    up = grid.to_physical(traj.u)
    Np = grid.to_physical(traj.N)
    FS = grid.to_spectral(_nonlinearity(up, Np, mode))
    FW = grid.rho**gamma * grid.to_spectral(np.abs(up) ** 2)
    u_rec = S * (traj.u[0] - 1j * _cumtrapz_profile(times, np.conj(S) * FS))
    N_rec = W * (traj.N[0] - 1j * _cumtrapz_profile(times, np.conj(W) * FW))
    rs = norms.spectral_l2_values(grid, (traj.u - u_rec) * norms.bracket(grid, 1.0))
    rw = norms.spectral_l2_values(grid, (traj.N - N_rec) * norms.bracket(grid, 0.5 * (1 - gamma)))
    return times, rs, rw


def pde_residual(traj: Trajectory, gamma: float, mode: str | None = None):
    """Residuals of the differential system at interior snapshots.

    R_S = i u_t - Lap u - F(u, N) in H^{-1} and
    R_W = i N_t + |grad| N - |grad|^gamma |u|^2 in H^{-(1+gamma)/2}.
    Time derivatives are centered differences of the interaction profiles
    S(-t) u and W(-t) N, so the free evolution is differentiated exactly.

    Returns
    -------
    times, res_S, res_W : ndarray
    """
    mode = _mode_of(traj, mode)
    if len(traj) < 3:
        raise TrajectoryError("pde_residual needs at least 3 snapshots")
    grid, times = traj.grid, traj.times
    h = traj.cadence
    S = np.exp(1j * times[:, None] * grid.rho**2)
    W = np.exp(1j * times[:, None] * grid.rho)
    f = np.conj(S) * traj.u
    g = np.conj(W) * traj.N
    df = (f[2:] - f[:-2]) / (2 * h)
    dg = (g[2:] - g[:-2]) / (2 * h)
    up = grid.to_physical(traj.u[1:-1])
    Np = grid.to_physical(traj.N[1:-1])
    RS = S[1:-1] * 1j * df - grid.to_spectral(_nonlinearity(up, Np, mode))
    RW = W[1:-1] * 1j * dg - grid.rho**gamma * grid.to_spectral(np.abs(up) ** 2)
    rs = norms.spectral_l2_values(grid, RS * norms.bracket(grid, -1.0))
    rw = norms.spectral_l2_values(grid, RW * norms.bracket(grid, -0.5 * (1 + gamma)))
    return times[1:-1], rs, rw


def max_h1_difference(a: Trajectory, b: Trajectory) -> float:
    """||u_a - u_b||_{L^inf_t H^1} over common snapshot times."""
    if a.grid != b.grid or a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise TrajectoryError("trajectories are not on a common grid and time base")
    d = norms.spectral_l2_values(a.grid, (a.u - b.u) * norms.bracket(a.grid, 1.0))
    return float(d.max())


__all__ = [
    "SimState", "SolverConfig", "Trajectory", "gaussian_data", "data_size", "init_from_physical",
    "step_direct", "run_direct", "picard_solve", "PicardLog", "duhamel_residual", "pde_residual",
    "normal_form_boundary", "max_h1_difference", "zero_trajectory",
]
