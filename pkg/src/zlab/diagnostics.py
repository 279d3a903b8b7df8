"""Scattering and conservation diagnostics computed from trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import norms
from .errors import TrajectoryError
from .evolution import Trajectory, normal_form_boundary
from .spectral import SPECTRAL, RadialField


def interaction_profiles(traj: Trajectory):
    """Profiles f(t) = S(-t) u(t) and g(t) = W(-t) N(t) as spectral stacks."""
    rho = traj.grid.rho
    t = traj.times[:, None]
    f = np.exp(-1j * t * rho**2) * traj.u
    g = np.exp(-1j * t * rho) * traj.N
    return f, g


def _cauchy(grid, stack, s):
    w = norms.bracket(grid, s)
    n = stack.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        d = norms.spectral_l2_values(grid, (stack[i + 1:] - stack[i]) * w)
        out[i, i + 1:] = d
        out[i + 1:, i] = d
    return out


def _running_l2(times, series):
    out = np.zeros_like(series, dtype=float)
    if series.size > 1:
        out[1:] = np.cumsum(0.5 * np.diff(times) * (series[1:] ** 2 + series[:-1] ** 2))
    return np.sqrt(out)


@dataclass
class ScatterReport:
    """Boundary-term norms, profile Cauchy matrices and L^2-in-time accumulations."""

    times: np.ndarray
    omega_norm: np.ndarray
    theta_norm: np.ndarray
    cauchy_f: np.ndarray
    cauchy_g: np.ndarray
    omega_l2: np.ndarray
    theta_l2: np.ndarray
    gamma: float

    def _index(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise TrajectoryError(f"no snapshot at t={t}")
        return k

    def profile_difference(self, t1: float, t2: float, which: str = "f") -> float:
        mat = self.cauchy_f if which == "f" else self.cauchy_g
        return float(mat[self._index(t1), self._index(t2)])

    def boundary_l2(self, t0: float, t1: float) -> float:
        """L^2 norm over [t0, t1] of the combined boundary-term norm."""
        keep = (self.times >= t0 - 1e-12) & (self.times <= t1 + 1e-12)
        combined = self.omega_norm[keep] ** 2 + self.theta_norm[keep] ** 2
        if keep.sum() < 2:
            return 0.0
        return float(np.sqrt(np.trapezoid(combined, self.times[keep])))

    def dyadic_summary(self) -> dict:
        T = float(self.times[-1])
        return {
            "T": T,
            "f_T_T2": self.profile_difference(T, T / 2),
            "f_T2_T4": self.profile_difference(T / 2, T / 4),
            "g_T_T2": self.profile_difference(T, T / 2, "g"),
            "g_T2_T4": self.profile_difference(T / 2, T / 4, "g"),
            "boundary_l2_head": self.boundary_l2(0.0, T / 2),
            "boundary_l2_tail": self.boundary_l2(T / 2, T),
        }

    def rows(self):
        for i, t in enumerate(self.times):
            yield (float(t), float(self.omega_norm[i]), float(self.theta_norm[i]),
                   float(self.omega_l2[i]), float(self.theta_l2[i]))


def boundary_norms(traj: Trajectory, gamma: float, n_a: int = 64):
    """||Omega(N,u)||_H1 and || |grad|^g Theta(u, conj u) ||_{H^{(1-g)/2}} per snapshot."""
    grid = traj.grid
    om = np.zeros(len(traj))
    th = np.zeros(len(traj))
    w_s = norms.bracket(grid, 1.0)
    w_w = norms.bracket(grid, 0.5 * (1 - gamma))
    for i in range(len(traj)):
        if not np.any(traj.u[i]):
            continue
        o, t = normal_form_boundary(traj.state(i), gamma, n_a=n_a)
        om[i] = norms.spectral_l2_values(grid, o.values * w_s)
        th[i] = norms.spectral_l2_values(grid, t.values * w_w)
    return om, th


def scattering_report(traj: Trajectory, gamma: float, n_a: int = 64) -> ScatterReport:
    """Profile Cauchy matrices and boundary-term decay for a trajectory.

    Raises
    ------
    TrajectoryError
        If the trajectory has fewer than 4 snapshots.
    """
    if len(traj) < 4:
        raise TrajectoryError("scattering_report needs at least 4 snapshots")
    grid = traj.grid
    f, g = interaction_profiles(traj)
    om, th = boundary_norms(traj, gamma, n_a)
    return ScatterReport(
        times=traj.times.copy(),
        omega_norm=om,
        theta_norm=th,
        cauchy_f=_cauchy(grid, f, 1.0),
        cauchy_g=_cauchy(grid, g, 0.5 * (1 - gamma)),
        omega_l2=_running_l2(traj.times, om),
        theta_l2=_running_l2(traj.times, th),
        gamma=gamma,
    )


@dataclass
class ConservationSeries:
    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray

    @property
    def mass_drift(self) -> float:
        """max_t |M(t) - M(0)| / M(0)."""
        m0 = self.mass[0]
        return float(np.max(np.abs(self.mass - m0)) / m0) if m0 else 0.0

    @property
    def energy_drift(self) -> float:
        """max_t |E(t) - E(0)|."""
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def rows(self):
        for t, m, e in zip(self.times, self.mass, self.energy):
            yield float(t), float(m), float(e)


def conservation_report(traj: Trajectory, gamma: float) -> ConservationSeries:
    """Mass and energy at each snapshot.

    Both are conserved by the physical-mode system; for paper-mode runs the
    series are informational only.
    """
    grid = traj.grid
    mass = norms.spectral_l2_values(grid, traj.u)
    energy = np.array([
        norms.energy(RadialField(grid, traj.u[i], SPECTRAL), RadialField(grid, traj.N[i], SPECTRAL),
                     gamma)
        for i in range(len(traj))
    ])
    return ConservationSeries(traj.times.copy(), mass, energy)
