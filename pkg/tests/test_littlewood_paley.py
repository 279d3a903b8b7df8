import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zlab import littlewood_paley as lp
from zlab.ensembles import BandRange, spectral_bump
from zlab.errors import UnresolvedBandWarning
from zlab.spectral import SPECTRAL, RadialField, build_grid

positive = st.floats(1e-3, 1e3, allow_nan=False)


class TestCutoffs:
    def test_plateau_and_support(self):
        # cutoff equals 1 on |xi| <= 5/4 and vanishes for |xi| > 8/5
        s = np.linspace(0, 1.25, 50)
        assert np.all(lp.mother(s) == 1.0)
        assert np.all(lp.mother(np.linspace(1.6, 10, 50)) == 0.0)

    def test_monotone_between(self):
        s = np.linspace(1.25, 1.6, 400)
        assert np.all(np.diff(lp.mother(s)) <= 0)

    @given(positive)
    def test_partition_of_unity(self, s):
        total = sum(lp.phi_j(s, j) for j in range(-15, 15))
        assert total == pytest.approx(1.0, abs=1e-14)

    @given(positive, st.integers(-6, 6))
    def test_band_support(self, s, j):
        # supp phi_j lies in [5/8 2^j, 8/5 2^j]
        v = lp.phi_j(s, j)
        assert 0.0 <= v <= 1.0
        if v > 0:
            assert lp.SUPPORT_LO * 2.0**j <= s <= lp.SUPPORT_HI * 2.0**j

    @given(positive, st.integers(-6, 6), st.integers(2, 6))
    def test_almost_orthogonal(self, s, j, gap):
        assert lp.phi_j(s, j) * lp.phi_j(s, j + gap) == 0.0

    @given(positive, st.integers(-6, 6))
    def test_low_part_is_cumulative(self, s, j):
        total = sum(lp.phi_j(s, k) for k in range(-40, j + 1))
        assert lp.varphi_j(s, j) == pytest.approx(total, abs=1e-12)


class TestDyadicSystem:
    def test_on_grid_partition(self, grid):
        ds = lp.DyadicSystem.for_grid(grid)
        assert ds.partition_deviation() < 1e-12

    def test_leakage(self, grid):
        report = lp.lp_report(grid)
        assert max(report["leakage"].values()) < 1e-10

    def test_resolved_range(self, grid):
        j_min, j_max = lp.resolved_range(grid)
        assert 2.0 ** (j_min - 1) >= grid.drho
        assert 2.0 ** (j_max + 1) <= grid.rho_max

    def test_leq_mask_matches_bands(self, grid):
        ds = lp.DyadicSystem.for_grid(grid)
        for pos, j in enumerate(ds.bands):
            assert np.allclose(ds.leq_mask(int(j)), ds.phi[: pos + 1].sum(axis=0), atol=1e-13)

    def test_cached(self, grid):
        assert lp.DyadicSystem.for_grid(grid) is lp.DyadicSystem.for_grid(build_grid(128, 16.0))

    def test_projection_sum(self, grid, rng):
        F = RadialField(grid, rng.normal(size=grid.n_r) + 0j, SPECTRAL)
        ds = lp.DyadicSystem.for_grid(grid)
        total = sum(lp.project(F, int(j)).values for j in ds.bands)
        assert np.allclose(total, F.values, atol=1e-13)


class TestParaproducts:
    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_reconstruction(self, seed):
        grid = build_grid(128, 16.0)
        band = BandRange(4.0 * grid.drho, 0.2 * grid.rho_max, 0.25, 2)
        rng = np.random.default_rng(seed)
        f, g = band.sample(grid, rng), band.sample(grid, rng)
        rec = lp.paraproduct(f, g, "LH+HL+HH").values
        direct = lp.product(f, g).values
        assert np.linalg.norm(rec - direct) < 1e-8 * np.linalg.norm(direct)

    def test_split_by_resonant_window(self, grid, resolved_band, rng):
        f, g = resolved_band.sample(grid, rng), resolved_band.sample(grid, rng)
        hl = lp.paraproduct(f, g, "HL").values
        assert np.allclose(lp.paraproduct(f, g, "RL+XL").values, hl, atol=1e-15)
        lh = lp.paraproduct(f, g, "LH").values
        assert np.allclose(lp.paraproduct(f, g, "LR+LX").values, lh, atol=1e-15)

    def test_separated_bumps(self):
        # f lives where phi_3 = 1 and g where varphi_{-1} = 1, so the whole
        # product is the XL piece and every other piece vanishes
        grid = build_grid(1023, 64.0)
        f = spectral_bump(grid, 8.0, 1.0)
        g = spectral_bump(grid, 0.4, 0.1)
        direct = lp.product(f, g).values
        scale = np.max(np.abs(direct))
        assert np.max(np.abs(lp.paraproduct(f, g, "XL").values - direct)) < 1e-12 * scale
        for kind in ("LH", "HH", "RL"):
            assert np.max(np.abs(lp.paraproduct(f, g, kind).values)) < 1e-12 * scale

    def test_symmetry_of_labels(self, grid, resolved_band, rng):
        f, g = resolved_band.sample(grid, rng), resolved_band.sample(grid, rng)
        assert np.allclose(lp.paraproduct(f, g, "LH").values, lp.paraproduct(g, f, "HL").values,
                           atol=1e-15)

    def test_bilinear(self, grid, resolved_band, rng):
        f1, f2, g = (resolved_band.sample(grid, rng) for _ in range(3))
        lhs = lp.paraproduct(f1 * 2.0 + f2, g, "HH").values
        rhs = 2.0 * lp.paraproduct(f1, g, "HH").values + lp.paraproduct(f2, g, "HH").values
        assert np.allclose(lhs, rhs, atol=1e-14 * np.max(np.abs(rhs)))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            lp.parse_kinds("LH+QQ")
        assert lp.parse_kinds("rl+lh+hh") == ("RL", "LH", "HH")

    def test_unresolved_warning(self, grid):
        F = spectral_bump(grid, 0.9 * grid.rho_max, 1.0)
        with pytest.warns(UnresolvedBandWarning):
            lp.paraproduct(F, F, "HH")

    def test_report_reconstruction(self, grid, resolved_band, rng):
        f, g = resolved_band.sample(grid, rng), resolved_band.sample(grid, rng)
        report = lp.lp_report(grid, f, g)
        assert report["reconstruction_residual"] < 1e-8
        assert report["j_min"] <= report["j_max"]
