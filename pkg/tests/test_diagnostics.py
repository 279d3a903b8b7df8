import numpy as np
import pytest

from zlab import diagnostics as dg
from zlab import evolution as ev
from zlab.errors import TrajectoryError
from zlab.spectral import build_grid


@pytest.fixture(scope="module")
def run():
    grid = build_grid(64, 12.0)
    u0, N0 = ev.gaussian_data(grid, 1.0, 1e-2)
    cfg = ev.SolverConfig(dt=0.05, T=1.0, snapshot_every=5)
    return ev.run_direct(cfg, u0, N0)


class TestProfiles:
    def test_free_profiles_constant(self):
        grid = build_grid(64, 12.0)
        u0, N0 = ev.gaussian_data(grid, 1.0, 1.0)
        traj = ev.run_direct(ev.SolverConfig(dt=0.1, T=1.0, nonlinear=False, snapshot_every=2),
                             u0, N0)
        f, g = dg.interaction_profiles(traj)
        assert np.max(np.abs(f - f[0])) < 1e-15
        assert np.max(np.abs(g - g[0])) < 1e-15

    def test_report(self, run):
        rep = dg.scattering_report(run, 1.0)
        assert rep.cauchy_f.shape == (len(run), len(run))
        assert np.allclose(rep.cauchy_f, rep.cauchy_f.T)
        assert np.all(np.diag(rep.cauchy_f) == 0)
        assert np.all(rep.omega_norm > 0) and np.all(rep.theta_norm > 0)
        assert rep.omega_l2[0] == 0 and np.all(np.diff(rep.omega_l2) >= 0)
        summary = rep.dyadic_summary()
        assert summary["T"] == pytest.approx(1.0)
        assert summary["boundary_l2_head"] > 0

    def test_profile_difference_requires_snapshot(self, run):
        rep = dg.scattering_report(run, 1.0)
        with pytest.raises(TrajectoryError):
            rep.profile_difference(0.33, 0.5)

    def test_too_short(self):
        grid = build_grid(64, 12.0)
        with pytest.raises(TrajectoryError):
            dg.scattering_report(ev.zero_trajectory(grid, [0.0, 1.0, 2.0]), 1.0)

    def test_zero_trajectory_boundary(self):
        grid = build_grid(64, 12.0)
        om, th = dg.boundary_norms(ev.zero_trajectory(grid, np.arange(4.0)), 1.0)
        assert not np.any(om) and not np.any(th)


class TestConservation:
    def test_physical_mode(self, run):
        series = dg.conservation_report(run, 1.0)
        assert series.mass_drift < 1e-12
        assert series.energy_drift < 1e-5 * abs(series.energy[0])
        rows = list(series.rows())
        assert len(rows) == len(run) and rows[0][0] == 0.0

    def test_energy_drift_second_order(self):
        grid = build_grid(64, 12.0)
        u0, N0 = ev.gaussian_data(grid, 1.0, 1.0)
        drifts = []
        for dt in (0.02, 0.01):
            traj = ev.run_direct(ev.SolverConfig(dt=dt, T=0.5), u0, N0)
            drifts.append(dg.conservation_report(traj, 1.0).energy_drift)
        assert 3.0 < drifts[0] / drifts[1] < 5.0
