import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zlab.errors import DomainMismatchError, GridSizingError, ZeroModeError
from zlab.spectral import (
    PHYSICAL, SPECTRAL, RadialField, RadialGrid, build_grid, forward, frac_derivative,
    init_from_physical, inverse, read_snapshot, recover_wave_data, schrodinger_prop,
    spectral_tail_fraction, wave_prop, write_snapshot,
)

complex_arrays = st.integers(0, 2**32 - 1).map(
    lambda s: np.random.default_rng(s).normal(size=(2, 64)) @ np.array([1, 1j]))


def _vec(seed, n):
    r = np.random.default_rng(seed)
    return r.normal(size=n) + 1j * r.normal(size=n)


class TestGrid:
    def test_spacing(self):
        g = build_grid(63, 8.0)
        assert g.dr == pytest.approx(8.0 / 64)
        assert g.drho == pytest.approx(np.pi / 8.0)
        assert g.dr * g.drho * (g.n_r + 1) == pytest.approx(np.pi)
        assert g.r[-1] < g.r_max

    @pytest.mark.parametrize("n_r, r_max", [(1, 1.0), (16, 0.0), (16, -2.0), (16, np.inf)])
    def test_bad_sizes(self, n_r, r_max):
        with pytest.raises(GridSizingError):
            RadialGrid(n_r, r_max)

    def test_grid_is_hashable_and_comparable(self):
        assert build_grid(32, 4.0) == build_grid(32, 4.0)
        assert len({build_grid(32, 4.0), build_grid(32, 4.0)}) == 1


class TestTransform:
    def test_gaussian_fixed_point(self, fine_grid):
        g = fine_grid
        F = forward(RadialField.from_function(g, lambda r: np.exp(-r**2 / 2)))
        assert np.max(np.abs(F.values - np.exp(-g.rho**2 / 2))) < 1e-12

    def test_second_moment_gaussian(self, fine_grid):
        # transform of r^2 e^{-r^2/2} is (3 - rho^2) e^{-rho^2/2}
        g = fine_grid
        F = forward(RadialField.from_function(g, lambda r: r**2 * np.exp(-r**2 / 2)))
        assert np.max(np.abs(F.values - (3 - g.rho**2) * np.exp(-g.rho**2 / 2))) < 1e-12

    def test_against_quadrature(self, fine_grid):
        # independent oracle: adaptive quadrature of the sine transform
        from scipy.integrate import quad

        g = fine_grid
        f = lambda r: np.exp(-r**2 / 2) / (1.0 + r**2)
        F = forward(RadialField.from_function(g, f)).values.real
        for k in (0, 5, 20, 60):
            rho = g.rho[k]
            val, _ = quad(lambda r: r * f(r) * np.sin(rho * r), 0, 20, limit=200,
                          epsabs=1e-14, epsrel=1e-13)
            assert F[k] == pytest.approx(np.sqrt(2 / np.pi) / rho * val, rel=1e-9, abs=1e-13)

    def test_algebraic_decay_closed_form(self):
        # (1 + r^2)^{-2} has transform sqrt(pi/8) e^{-rho}; its slow decay
        # limits the accuracy reachable on a truncated domain
        g = build_grid(2047, 200.0)
        F = forward(RadialField.from_function(g, lambda r: (1.0 + r**2) ** -2.0)).values.real
        for k in (40, 100, 200):
            assert F[k] == pytest.approx(np.sqrt(np.pi / 8) * np.exp(-g.rho[k]), rel=2e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        g = build_grid(64, 8.0)
        v = _vec(seed, 64)
        back = inverse(forward(RadialField(g, v))).values
        assert np.max(np.abs(back - v)) < 1e-10 * np.max(np.abs(v))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_plancherel(self, seed):
        g = build_grid(64, 8.0)
        v = _vec(seed, 64)
        phys = np.sqrt(np.sum(g.r_weights * np.abs(v) ** 2))
        spec = g.l2_spectral(forward(RadialField(g, v)).values)
        assert abs(phys - spec) < 1e-10 * phys

    def test_domain_checks(self, grid):
        f = RadialField.zeros(grid)
        with pytest.raises(DomainMismatchError):
            inverse(f)
        with pytest.raises(DomainMismatchError):
            f + RadialField.zeros(grid, SPECTRAL)

    def test_conj_commutes(self, grid, rng):
        v = rng.normal(size=grid.n_r) + 1j * rng.normal(size=grid.n_r)
        f = RadialField(grid, v)
        assert np.allclose(f.conj().spectral().values, np.conj(f.spectral().values), atol=1e-14)


class TestOperators:
    def test_negative_laplacian(self, fine_grid):
        # rho^2 is -Lap: -Lap e^{-r^2/2} = (3 - r^2) e^{-r^2/2}
        g = fine_grid
        F = forward(RadialField.from_function(g, lambda r: np.exp(-r**2 / 2)))
        out = inverse(frac_derivative(F, 2.0)).values
        assert np.max(np.abs(out - (3 - g.r**2) * np.exp(-g.r**2 / 2))) < 1e-11

    def test_free_schrodinger_gaussian(self, fine_grid):
        # i u_t - Lap u = 0 with u0 = e^{-r^2/2}: u = (1 - 2it)^{-3/2} e^{-r^2 / (2 (1 - 2it))}
        g = fine_grid
        t = 0.7
        F = forward(RadialField.from_function(g, lambda r: np.exp(-r**2 / 2)))
        out = inverse(schrodinger_prop(F, t)).values
        z = 1 - 2j * t
        exact = z**-1.5 * np.exp(-g.r**2 / (2 * z))
        assert np.max(np.abs(out - exact)) < 1e-10

    def test_wave_cosine_part(self, fine_grid):
        # cos(t|grad|) f = ((r + t) f(r + t) + (r - t) f(|r - t|)) / (2 r) for radial f
        g = fine_grid
        t = 3.0
        f = lambda r: np.exp(-np.asarray(r)**2 / 2)
        F = forward(RadialField.from_function(g, f))
        out = inverse(wave_prop(F, t)).values.real
        r = g.r
        exact = ((r + t) * f(r + t) + (r - t) * f(r - t)) / (2 * r)
        assert np.max(np.abs(out - exact)) < 1e-10

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
    def test_propagators_unitary(self, seed, t):
        g = build_grid(64, 8.0)
        F = RadialField(g, _vec(seed, 64), SPECTRAL)
        n0 = g.l2_spectral(F.values)
        for prop in (schrodinger_prop, wave_prop):
            assert abs(g.l2_spectral(prop(F, t).values) - n0) < 1e-13 * n0
            back = prop(prop(F, t), -t).values
            assert np.max(np.abs(back - F.values)) < 1e-13 * np.max(np.abs(F.values))


class TestInitialData:
    def test_reduction_round_trip(self, fine_grid):
        g = fine_grid
        u0 = RadialField.from_function(g, lambda r: np.exp(-r**2))
        n0 = RadialField.from_function(g, lambda r: np.exp(-r**2 / 2))
        n1 = RadialField.from_function(g, lambda r: (3 - r**2) * np.exp(-r**2 / 2))
        _, N0 = init_from_physical(u0, n0, n1, zero_mode_tol=1e-6)
        a, b = recover_wave_data(N0)
        assert np.max(np.abs(a.values - n0.values)) < 1e-13
        assert np.max(np.abs(b.values - n1.values)) < 1e-11
        # |grad|^{-1} of -Lap G is |grad| G, whose imaginary part sits in N0
        assert np.max(np.abs(N0.values.real - n0.values.real)) == 0

    def test_zero_mode_guard(self, fine_grid):
        g = fine_grid
        gauss = RadialField.from_function(g, lambda r: np.exp(-r**2 / 2))
        with pytest.raises(ZeroModeError):
            init_from_physical(gauss, gauss, gauss)

    def test_complex_wave_data_rejected(self, grid):
        z = RadialField.zeros(grid)
        bad = RadialField(grid, 1j * np.ones(grid.n_r))
        with pytest.raises(ValueError):
            init_from_physical(z, bad, z)

    def test_tail_fraction(self, grid):
        F = RadialField(grid, (grid.rho > 0.5 * grid.rho_max).astype(float), SPECTRAL)
        assert spectral_tail_fraction(F, 0.5 * grid.rho_max) == pytest.approx(1.0)
        assert spectral_tail_fraction(RadialField.zeros(grid, SPECTRAL), 1.0) == 0.0


class TestSnapshot:
    @pytest.mark.parametrize("domain", [PHYSICAL, SPECTRAL])
    def test_round_trip(self, tmp_path, grid, rng, domain):
        u = RadialField(grid, rng.normal(size=grid.n_r) + 1j * rng.normal(size=grid.n_r))
        N = RadialField(grid, rng.normal(size=grid.n_r) + 0j)
        path = tmp_path / "snap.txt"
        write_snapshot(path, u, N, gamma=0.75, t=1.25, domain=domain)
        u2, N2, meta = read_snapshot(path)
        assert meta == {"gamma": 0.75, "t": 1.25, "domain": domain}
        assert u2.grid == grid
        ref = u if domain == PHYSICAL else u.spectral()
        assert np.array_equal(u2.values, ref.values)
        assert path.read_text().splitlines()[1].split()[2:] == ["re_u", "im_u", "re_N", "im_N"]
