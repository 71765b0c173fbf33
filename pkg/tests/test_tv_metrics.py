"""Tests for tv_metrics.py: CF inversion, Pareto closed forms, source CFs and distances."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from stable_lab.decomposition import Partition
from stable_lab.exceptions import AccuracyError, DomainError
from stable_lab.samplers import RngStream, normalized_sums, stable_batch
from stable_lab.spectral_core import SpectralMeasure, StableLaw
from stable_lab.tail_models import dna_model, pareto_model
from stable_lab.tv_metrics import (
    DistanceEstimate,
    DistanceMethod,
    SplineCF,
    StableQuantile,
    cf_of_Sn_pareto,
    delta_limit,
    delta_n,
    invert_cf_to_density,
    kolmogorov_1d,
    model_cf_1d,
    pareto_cf_1d,
    range_half_width,
    sn_characteristic_function,
    stable_cutoff,
    tv_1d_exact,
    tv_between_cfs,
    tv_between_densities,
    tv_histogram_lb,
)

NODES = 2**14


def gaussian_cf(lam):
    return np.exp(-0.5 * np.asarray(lam) ** 2).astype(complex)


def shifted_gaussian_cf(lam):
    lam = np.asarray(lam)
    return np.exp(1j * lam - 0.5 * lam**2)


def pareto_cf_by_quadrature(t, alpha, one_sided=False):
    """E e^{itX} for the (one- or two-sided) Pareto law by QUADPACK with Fourier weights."""

    def density(r):
        return alpha * r ** (-alpha - 1.0)

    cos_part, _ = integrate.quad(density, 1.0, np.inf, weight="cos", wvar=t, epsabs=1e-12, limlst=200)
    if not one_sided:
        return complex(cos_part)
    sin_part, _ = integrate.quad(density, 1.0, np.inf, weight="sin", wvar=t, epsabs=1e-12, limlst=200)
    return complex(cos_part, sin_part)


# ---------------------------------------------------------------------------
# Inversion
# ---------------------------------------------------------------------------


class TestInversion:
    def test_gaussian_density(self):
        density = invert_cf_to_density(gaussian_cf, 6.5, NODES)
        x = density.grid
        assert density.values == pytest.approx(stats.norm.pdf(x), abs=1e-9)
        assert density.integral() == pytest.approx(1.0, abs=1e-9)
        assert density.negativity > -1e-9

    def test_round_trip_cf(self):
        density = invert_cf_to_density(gaussian_cf, 6.5, NODES)
        assert density.cf(np.array([0.7]))[0] == pytest.approx(math.exp(-0.245), abs=1e-8)

    def test_integral_is_trapezoid(self):
        density = invert_cf_to_density(gaussian_cf, 6.5, NODES)
        v = density.values
        assert density.integral() == pytest.approx(density.dx * (v.sum() - 0.5 * (v[0] + v[-1])), rel=1e-12)
        assert density.cdf()[-1] == pytest.approx(density.integral(), rel=1e-12)

    def test_stable_integral_within_tail_bound(self):
        law = StableLaw(0.8, SpectralMeasure.two_point(0.5))
        edge = 0.5 * NODES * math.pi / (4.0 * stable_cutoff(law))
        tail = law.d_alpha * edge ** (-0.8) / 0.8
        density = invert_cf_to_density(
            lambda lam: np.asarray(law.cf(lam), dtype=complex), stable_cutoff(law), NODES, tail_mass_bound=tail
        )
        assert 1.0 - density.tail_mass_bound - 1e-6 <= density.integral() <= 1.0 + 1e-6

    def test_small_cutoff_suggests_larger(self):
        with pytest.raises(AccuracyError) as info:
            invert_cf_to_density(gaussian_cf, 1.0, NODES)
        assert info.value.suggested_cutoff > 1.0
        assert info.value.code == "ACCURACY_ERROR"

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            invert_cf_to_density(gaussian_cf, 0.0, NODES)

    def test_tv_between_shifted_gaussians(self):
        estimate = tv_between_cfs(gaussian_cf, shifted_gaussian_cf, 7.0, NODES)
        assert estimate.value == pytest.approx(2.0 * stats.norm.cdf(0.5) - 1.0, abs=2e-3)
        assert estimate.method is DistanceMethod.CF_INVERSION

    def test_grid_mismatch(self):
        a = invert_cf_to_density(gaussian_cf, 6.5, NODES)
        b = invert_cf_to_density(gaussian_cf, 6.5, NODES // 2)
        with pytest.raises(DomainError, match="different grids"):
            tv_between_densities(a, b)

    def test_stable_cutoff(self):
        law = StableLaw(1.5, SpectralMeasure.two_point(0.5))
        cutoff = stable_cutoff(law)
        assert abs(law.cf(cutoff)) == pytest.approx(1e-8, rel=1e-6)

    def test_estimate_row(self):
        row = DistanceEstimate(0.1, 1e-6, DistanceMethod.KOLMOGOROV, {"n": 8}).to_row()
        assert row == {"value": 0.1, "error": 1e-6, "method": "kolmogorov", "n": 8}


# ---------------------------------------------------------------------------
# Pareto closed forms
# ---------------------------------------------------------------------------


class TestParetoCF:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("t", [0.3, 2.0, 12.0])
    def test_matches_quadrature(self, alpha, t):
        assert pareto_cf_1d(t, alpha) == pytest.approx(pareto_cf_by_quadrature(t, alpha).real, abs=1e-7)

    def test_continuous_at_series_limit(self):
        assert pareto_cf_1d(8.0 - 1e-9, 1.2) == pytest.approx(pareto_cf_1d(8.0 + 1e-9, 1.2), abs=1e-8)

    def test_even_and_normalized(self):
        assert pareto_cf_1d(0.0, 0.7) == 1.0
        values = pareto_cf_1d(np.array([-1.5, 1.5]), 0.7)
        assert values[0] == pytest.approx(values[1])

    def test_n_one_is_scaled_source(self):
        sigma = pareto_model(1, 1.5).sigma
        assert cf_of_Sn_pareto(1, 1.5, 1, 2.0).real == pytest.approx(pareto_cf_1d(2.0 / sigma, 1.5), abs=1e-8)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_large_n_approaches_stable(self, d):
        law = pareto_model(d, 1.5).stable_limit()
        e1 = np.eye(d)[0]
        assert cf_of_Sn_pareto(10**8, 1.5, d, 1.0).real == pytest.approx(law.cf(e1).real, abs=1e-3)

    def test_dimension_limit(self):
        with pytest.raises(DomainError, match="d <= 3"):
            cf_of_Sn_pareto(10, 1.5, 4, 1.0)

    def test_delta_limit_alpha_one(self):
        assert delta_limit(1.0) == pytest.approx(2.0 / math.pi**2 - 0.5, rel=1e-10)

    def test_delta_limit_above_one(self):
        sigma = pareto_model(1, 1.5).sigma
        assert delta_limit(1.5) == pytest.approx(1.5 / (2.0 * 0.5 * sigma**2))

    def test_delta_converges_above_one(self):
        assert delta_n(10**4, 1.5) == pytest.approx(delta_limit(1.5), rel=0.02)

    def test_delta_cauchy_beyond_thousand(self):
        values = [delta_n(10**k, 1.5) for k in range(3, 7)]
        gaps = [abs(v - delta_limit(1.5)) for v in values]
        steps = [abs(b - a) for a, b in zip(values[:-1], values[1:], strict=True)]
        assert gaps == sorted(gaps, reverse=True)
        assert steps == sorted(steps, reverse=True)

    def test_delta_rejects_zero_n(self):
        with pytest.raises(DomainError):
            delta_n(0, 1.5)


@pytest.mark.slow
class TestDeltaAtScale:
    """Δ_n within 1% of its limit at n = 10^6."""

    @pytest.mark.parametrize("alpha", [0.8, 1.0, 1.5])
    def test_relative_gap(self, alpha):
        assert delta_n(10**6, alpha) == pytest.approx(delta_limit(alpha), rel=0.01)


# ---------------------------------------------------------------------------
# Source CFs
# ---------------------------------------------------------------------------


class TestModelCF:
    @pytest.mark.parametrize("t", [0.3, 2.0, 15.0])
    def test_symmetric_dna_equals_pareto(self, t):
        model = dna_model(1.5)
        assert model_cf_1d(model, t) == pytest.approx(complex(pareto_cf_1d(t, 1.5)), abs=1e-8)

    @pytest.mark.parametrize("t", [0.3, 2.0, -4.0])
    def test_one_sided_pareto(self, t):
        model = dna_model(0.7, w_plus=1.0)
        expected = pareto_cf_by_quadrature(abs(t), 0.7, one_sided=True)
        expected = expected if t > 0 else expected.conjugate()
        assert model_cf_1d(model, t) == pytest.approx(expected, abs=1e-7)

    def test_array_input(self):
        values = model_cf_1d(dna_model(1.2, w_plus=0.7), np.array([0.0, 1.0, -1.0]))
        assert values.shape == (3,)
        assert values[0] == 1.0
        assert values[2] == pytest.approx(np.conj(values[1]))

    def test_needs_one_dimension(self):
        with pytest.raises(DomainError, match="1-D"):
            model_cf_1d(pareto_model(2, 1.5), 1.0)

    def test_spline_matches_direct(self):
        model = dna_model(1.2, w_plus=0.7, eps="power", eps_params={"c": 0.3}, gamma=1.0, K=1.0)
        spline = SplineCF(model, 1e-2, 10.0)
        t = np.array([2e-2, 0.05, 0.7, 3.3, -5.0])
        direct = model_cf_1d(model, t)
        assert spline(t) == pytest.approx(direct, abs=1e-5)

    def test_spline_range(self):
        spline = SplineCF(dna_model(1.5), 0.1, 1.0)
        with pytest.raises(DomainError, match="tabulated range"):
            spline(np.array([5.0]))


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


class TestDistances:
    def test_exact_tv_decreases(self):
        model = pareto_model(1, 1.5)
        small = tv_1d_exact(model, 16, NODES)
        large = tv_1d_exact(model, 1024, NODES)
        assert 0.0 < large.value < small.value < 1.0
        assert small.error < 0.1 * small.value
        assert small.meta["n"] == 16

    def test_kolmogorov_below_tv(self):
        estimate = kolmogorov_1d(pareto_model(1, 0.8), 32, NODES)
        assert estimate.method is DistanceMethod.KOLMOGOROV
        assert 0.0 < estimate.value <= estimate.meta["tv"] + estimate.error

    def test_exact_tv_needs_one_dimension(self):
        with pytest.raises(DomainError, match="d = 1"):
            tv_1d_exact(pareto_model(2, 1.5), 16, NODES)

    def test_heavy_source_raises_cutoff(self):
        model = pareto_model(1, 1.5)
        estimate = tv_1d_exact(model, 16, NODES)
        assert estimate.meta["cutoff"] > stable_cutoff(model.stable_limit())
        assert 0.0 < estimate.value < 1.0

    def test_single_summand_still_too_heavy(self):
        with pytest.raises(AccuracyError) as info:
            tv_1d_exact(pareto_model(1, 1.5), 1, NODES)
        assert info.value.suggested_cutoff is not None

    @pytest.mark.parametrize("alpha", [0.8, 1.5])
    def test_grid_spans_range(self, alpha):
        model = pareto_model(1, alpha)
        estimate = tv_1d_exact(model, 64, NODES)
        assert estimate.meta["half_width"] >= range_half_width(model.stable_limit())
        assert estimate.meta["nodes"] >= NODES

    @pytest.mark.parametrize("n", [16, 1024])
    def test_error_below_value(self, n):
        estimate = tv_1d_exact(pareto_model(1, 1.5), n, NODES)
        assert estimate.error < 0.1 * estimate.value
        assert estimate.meta["offgrid_tail"] > 0.0

    def test_offgrid_allowance_needs_positive_index(self):
        a = invert_cf_to_density(gaussian_cf, 6.5, NODES)
        with pytest.raises(DomainError, match="tail_index"):
            tv_between_densities(a, a, tail_index=0.0)

    def test_symmetry_and_triangle(self):
        model = pareto_model(1, 1.5)
        law = model.stable_limit()
        cutoff = 40.0
        dlam = 2.0 * math.pi / (NODES * math.pi / (4.0 * cutoff))
        top = dlam * (NODES // 2 + 1)
        p16 = invert_cf_to_density(sn_characteristic_function(model, 16, top, dlam), cutoff, NODES)
        p64 = invert_cf_to_density(sn_characteristic_function(model, 64, top, dlam), cutoff, NODES)
        p_y = invert_cf_to_density(lambda lam: np.asarray(law.cf(lam), dtype=complex), cutoff, NODES)
        forward, _ = tv_between_densities(p16, p_y)
        backward, _ = tv_between_densities(p_y, p16)
        assert forward == backward
        via, _ = tv_between_densities(p16, p64)
        rest, _ = tv_between_densities(p64, p_y)
        assert forward <= via + rest + 1e-12

    def test_histogram_below_exact(self):
        model = pareto_model(1, 1.5)
        size = 200_000
        sums = normalized_sums(model, 16, size, RngStream(3)).points
        limit = stable_batch(model.stable_limit(), size, RngStream(4)).points
        lower = tv_histogram_lb(sums, limit, Partition.uniform(1, 3.0, 4))
        exact = tv_1d_exact(model, 16, NODES)
        assert lower.value <= exact.value + exact.error + 3.0 * lower.error

    def test_histogram_identical_batches(self):
        pts = np.random.default_rng(0).standard_normal(5000)
        estimate = tv_histogram_lb(pts, pts, Partition.uniform(1, 4.0, 32))
        assert estimate.value == 0.0
        assert estimate.meta["cells"] == 33

    def test_histogram_disjoint_batches(self):
        a = np.full((1000, 1), -2.0)
        b = np.full((1000, 1), 2.0)
        assert tv_histogram_lb(a, b, Partition.uniform(1, 4.0, 8)).value == pytest.approx(1.0)

    def test_histogram_size_mismatch(self):
        with pytest.raises(DomainError, match="differ in size"):
            tv_histogram_lb(np.zeros(5), np.zeros(6), Partition.uniform(1, 1.0, 4))


class TestStableQuantile:
    @pytest.fixture(scope="class")
    def quantile(self):
        return StableQuantile(StableLaw(1.5, SpectralMeasure.two_point(0.5)), NODES)

    def test_median(self, quantile):
        assert float(quantile(np.array(0.5))) == pytest.approx(0.0, abs=1e-3)

    def test_inverts_cdf(self, quantile):
        u = np.array([0.05, 0.3, 0.7, 0.95])
        assert quantile.cdf(quantile(u)) == pytest.approx(u, abs=1e-6)

    def test_tails_follow_power_law(self, quantile):
        deep = float(quantile(np.array(1e-9)))
        assert deep < -1e4
        assert float(quantile(np.array(1.0 - 1e-9))) == pytest.approx(-deep, rel=1e-6)

    def test_needs_one_dimension(self):
        with pytest.raises(DomainError):
            StableQuantile(StableLaw(1.5, SpectralMeasure.uniform(2)), NODES)
