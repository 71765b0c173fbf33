"""Tests for spectral_core.py: spectral measures, stable CFs, test functions and the generator."""

import dataclasses
import math

import numpy as np
import pytest

from stable_lab.exceptions import DomainError
from stable_lab.spectral_core import (
    MeasureKind,
    QuadConfig,
    SpectralMeasure,
    StableLaw,
    TestFunction,
    check_alpha,
    check_declared_norms,
    d_alpha,
    density_names,
    generator_apply,
    psi_alpha,
    stable_cf,
    stable_cf_with_error,
    uniform_abs_moment,
)


def _closed_form_d_alpha(alpha: float) -> float:
    # ∫_0^∞ (1 - cos y) y^{-1-α} dy = -Γ(-α) cos(πα/2) for α ≠ 1
    return 1.0 / (-math.gamma(-alpha) * math.cos(math.pi * alpha / 2.0))


# ---------------------------------------------------------------------------
# Constants and ψ_α
# ---------------------------------------------------------------------------


class TestConstants:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8, 1.2, 1.5, 1.9])
    def test_d_alpha_closed_form(self, alpha):
        assert d_alpha(alpha) == pytest.approx(_closed_form_d_alpha(alpha), rel=1e-9)

    @pytest.mark.parametrize("alpha", [round(0.05 * k, 2) for k in range(1, 40) if k != 20])
    def test_d_alpha_across_range(self, alpha):
        assert d_alpha(alpha) == pytest.approx(_closed_form_d_alpha(alpha), rel=1e-8)

    def test_d_alpha_at_one(self):
        assert d_alpha(1.0) == pytest.approx(2.0 / math.pi, rel=1e-10)

    @pytest.mark.parametrize("alpha", [0.0, 2.0, -1.0, float("nan")])
    def test_alpha_domain(self, alpha):
        with pytest.raises(DomainError, match="alpha must lie in"):
            check_alpha(alpha)

    def test_uniform_moment_circle(self):
        # E|cos φ| = 2/π
        assert uniform_abs_moment(1.0, 2) == pytest.approx(2.0 / math.pi, rel=1e-9)

    def test_uniform_moment_sphere(self):
        # θ₁ is uniform on [-1, 1] in d=3
        assert uniform_abs_moment(1.5, 3) == pytest.approx(1.0 / 2.5, rel=1e-9)


class TestPsi:
    def test_zero(self):
        assert psi_alpha(0.0, 1.5) == 0

    def test_conjugate_symmetry(self):
        assert psi_alpha(-2.0, 0.7) == pytest.approx(np.conj(psi_alpha(2.0, 0.7)))

    def test_alpha_one_log_term(self):
        value = psi_alpha(math.e, 1.0)
        assert value.real == pytest.approx(math.e)
        assert value.imag == pytest.approx(math.e * 2.0 / math.pi)


# ---------------------------------------------------------------------------
# SpectralMeasure
# ---------------------------------------------------------------------------


class TestSpectralMeasure:
    def test_two_point_drops_zero_weight(self):
        nu = SpectralMeasure.two_point(1.0)
        assert nu.kind is MeasureKind.ATOMS
        assert nu.directions.tolist() == [[1.0]]

    def test_symmetry(self):
        assert SpectralMeasure.two_point(0.5).is_symmetric()
        assert not SpectralMeasure.two_point(0.7).is_symmetric()
        assert SpectralMeasure.uniform(3).is_symmetric()
        assert not SpectralMeasure.from_density(2, "cardioid").is_symmetric()
        assert SpectralMeasure.from_density(2, "axial").is_symmetric()

    def test_non_unit_direction_rejected(self):
        with pytest.raises(DomainError, match="unit vectors"):
            SpectralMeasure.atoms([[1.0, 1.0]], [1.0])

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(DomainError, match="strictly positive"):
            SpectralMeasure.atoms([[1.0], [-1.0]], [1.0, 0.0])

    def test_mass_mismatch_rejected(self):
        with pytest.raises(DomainError, match="declared total mass"):
            SpectralMeasure.atoms([[1.0], [-1.0]], [0.5, 0.5], total_mass=2.0)

    def test_density_is_never_renormalized(self):
        with pytest.raises(DomainError, match="never renormalized"):
            SpectralMeasure.from_density(2, lambda th: np.ones(th.shape[0]), total_mass=1.0)

    def test_unknown_density(self):
        with pytest.raises(DomainError, match="Unknown spectral density"):
            SpectralMeasure.from_density(2, "nope")
        assert {"isotropic", "cardioid", "axial"} <= set(density_names())

    def test_cardioid_mean_direction(self):
        mean = SpectralMeasure.from_density(3, "cardioid").mean_direction()
        # ∫ θ (1 + θ₁/2) dθ / |S²| = e₁/6
        assert mean == pytest.approx([1.0 / 6.0, 0.0, 0.0], abs=1e-9)

    def test_atomize_is_symmetric_and_keeps_mass(self):
        atoms = SpectralMeasure.from_density(2, "axial").atomize(64)
        assert atoms.kind is MeasureKind.ATOMS
        assert atoms.weights.sum() == pytest.approx(1.0, rel=1e-9)
        assert atoms.is_symmetric()

    def test_integrate_reports_scramble_error(self):
        nu = SpectralMeasure.from_density(5, "cardioid")
        mass, err = nu.integrate(lambda dirs: np.ones(dirs.shape[0]))
        assert err > 0.0
        assert float(mass) == pytest.approx(1.0, abs=6.0 * err + 1e-3)

    @pytest.mark.parametrize("nu", [SpectralMeasure.two_point(0.3), SpectralMeasure.from_density(3, "axial")])
    def test_integrate_is_exact_on_fixed_rules(self, nu):
        _, err = nu.integrate(lambda dirs: dirs[:, 0] ** 2)
        assert err == 0.0

    def test_config_text(self):
        nu = SpectralMeasure.two_point(0.25)
        back = SpectralMeasure.from_config_text(nu.to_config_text(), 1)
        assert back.weights.tolist() == [0.25, 0.75]
        assert SpectralMeasure.from_config_text("uniform", 2).kind is MeasureKind.UNIFORM
        assert SpectralMeasure.from_config_text("density:axial", 3).density_name == "axial"

    def test_config_text_column_count(self):
        with pytest.raises(DomainError, match="columns"):
            SpectralMeasure.from_config_text("1 0 0.5", 1)


# ---------------------------------------------------------------------------
# StableLaw
# ---------------------------------------------------------------------------


class TestStableLaw:
    def test_symmetric_cf(self):
        law = StableLaw(1.5, SpectralMeasure.two_point(0.5))
        assert law.cf(2.0) == pytest.approx(math.exp(-(2.0**1.5)))

    def test_vectorized_cf_in_one_dimension(self):
        law = StableLaw(0.8, SpectralMeasure.two_point(0.5))
        values = law.cf(np.array([0.5, 1.0, 2.0]))
        assert values.shape == (3,)
        assert values == pytest.approx(np.exp(-np.array([0.5, 1.0, 2.0]) ** 0.8))

    def test_skewed_exponent(self):
        law = StableLaw(1.5, SpectralMeasure.two_point(0.8))
        expected = 0.8 * psi_alpha(1.0, 1.5) + 0.2 * psi_alpha(-1.0, 1.5)
        assert law.spectral_exponent(1.0) == pytest.approx(expected)

    def test_alpha_one_needs_mean_zero(self):
        with pytest.raises(DomainError, match="mean-zero"):
            StableLaw(1.0, SpectralMeasure.two_point(0.7))

    def test_uniform_matches_atomized(self):
        law = StableLaw(1.3, SpectralMeasure.uniform(2))
        approx = StableLaw(1.3, SpectralMeasure.uniform(2).atomize(512))
        lam = np.array([[0.7, -0.4], [1.5, 0.2]])
        assert approx.cf(lam) == pytest.approx(law.cf(lam), abs=1e-4)

    @pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5])
    @pytest.mark.parametrize("t", [2.0, 3.0, 10.0])
    def test_strict_stability_scaling(self, alpha, t):
        third = math.sqrt(3.0) / 2.0
        nu = SpectralMeasure.atoms([[1.0, 0.0], [-0.5, third], [-0.5, -third]], [1.0 / 3.0] * 3)
        law = StableLaw(alpha, nu)
        lam = np.array([0.3, -0.2])
        scaled = stable_cf(law, t ** (1.0 / alpha) * lam)
        assert scaled == pytest.approx(complex(np.exp(-t * law.spectral_exponent(lam))), abs=1e-9)
        assert abs(scaled) == pytest.approx(abs(stable_cf(law, lam)) ** t, abs=1e-9)

    def test_high_dimension_cf_carries_error(self):
        law = StableLaw(1.5, SpectralMeasure.from_density(5, "isotropic"))
        lam = np.array([[0.8, 0.0, 0.0, 0.0, 0.0], [0.3, -0.4, 0.5, 0.0, 0.1]])
        result = stable_cf_with_error(law, lam)
        assert 0.0 < result.std_err < 1e-2
        exact = StableLaw(1.5, SpectralMeasure.uniform(5)).cf(lam)
        assert np.max(np.abs(result.value - exact)) <= 5.0 * result.std_err + 1e-4

    def test_low_dimension_cf_error_is_zero(self):
        law = StableLaw(1.2, SpectralMeasure.from_density(2, "cardioid"))
        result = stable_cf_with_error(law, [0.4, -0.9])
        assert result.std_err == 0.0
        assert result.value == pytest.approx(stable_cf(law, [0.4, -0.9]), abs=1e-12)

    def test_frequency_dimension_checked(self):
        law = StableLaw(1.3, SpectralMeasure.uniform(2))
        with pytest.raises(DomainError, match="frequency has dimension"):
            law.cf([1.0, 2.0, 3.0])


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


class TestTestFunctions:
    def test_cosine_norms(self):
        f = TestFunction.cosine([3.0, 4.0], amplitude=2.0)
        assert f.norms == pytest.approx((2.0, 10.0, 50.0, 250.0, 1250.0))
        assert f.is_trigonometric

    def test_declared_norms_pass(self):
        for f in (TestFunction.cosine(2.0), TestFunction.biweight(2, 1.5), TestFunction.constant(2.0, 2)):
            assert check_declared_norms(f).passed, f.name

    def test_understated_norm_fails(self):
        f = dataclasses.replace(TestFunction.cosine(2.0), norms=(1.0, 0.5, 4.0, 8.0, 16.0))
        check = check_declared_norms(f)
        assert not check.passed
        assert check.observed[1] > 0.5

    def test_biweight_support(self):
        f = TestFunction.biweight(1, 2.0)
        assert float(f(np.array([[0.0]]))[0]) == 1.0
        assert float(f(np.array([[2.5]]))[0]) == 0.0

    def test_step_has_no_derivative_norms(self):
        f = TestFunction.step(1)
        assert f.norms[1:] == (None, None, None, None)
        with pytest.raises(DomainError, match="no gradient oracle"):
            f.grad(np.zeros(1))


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


class TestGenerator:
    @pytest.mark.parametrize("alpha, w_plus", [(1.5, 0.5), (1.5, 0.8), (0.8, 0.3), (1.0, 0.5)])
    def test_eigen_identity_one_dimension(self, alpha, w_plus):
        law = StableLaw(alpha, SpectralMeasure.two_point(w_plus))
        xi, phase, x = 1.7, 0.4, 0.3
        f = TestFunction.cosine(xi, phase=phase)
        expected = (-law.spectral_exponent(xi) * np.exp(1j * (xi * x + phase))).real
        result = generator_apply(law, f, x)
        assert result.value == pytest.approx(expected, abs=1e-6)

    def test_eigen_identity_skewed_plane(self):
        nu = SpectralMeasure.atoms([[1.0, 0.0], [0.0, 1.0], [-0.6, -0.8]], [0.5, 0.3, 0.2])
        law = StableLaw(1.2, nu)
        xi = np.array([0.6, -0.9])
        x = np.array([0.2, 0.5])
        result = generator_apply(law, TestFunction.cosine(xi), x)
        expected = (-law.spectral_exponent(xi) * np.exp(1j * float(x @ xi))).real
        assert result.value == pytest.approx(expected, abs=1e-6)

    def test_uniform_plane_close_to_closed_form(self):
        law = StableLaw(1.2, SpectralMeasure.uniform(2))
        xi = np.array([0.6, -0.9])
        result = generator_apply(law, TestFunction.cosine(xi), np.zeros(2), QuadConfig(sphere_nodes=1024))
        assert result.value == pytest.approx(-law.spectral_exponent(xi).real, rel=1e-3)

    def test_affine_functions_are_harmonic(self):
        law = StableLaw(1.5, SpectralMeasure.two_point(0.7))
        assert generator_apply(law, TestFunction.linear(2.0), 0.9).value == pytest.approx(0.0, abs=1e-10)
        assert generator_apply(law, TestFunction.constant(3.0), 0.9).value == pytest.approx(0.0, abs=1e-10)

    def test_unbounded_function_rejected_below_one(self):
        law = StableLaw(0.7, SpectralMeasure.two_point(0.5))
        with pytest.raises(DomainError, match="undefined"):
            generator_apply(law, TestFunction.linear(1.0), 0.0)

    def test_biweight_outside_support_is_positive(self):
        law = StableLaw(1.5, SpectralMeasure.two_point(0.5))
        value = generator_apply(law, TestFunction.biweight(1, 1.0), 3.0)
        assert value.value > 0.0
        assert value.error_bound < 1e-6

    def test_dimension_mismatch(self):
        law = StableLaw(1.5, SpectralMeasure.uniform(2))
        with pytest.raises(DomainError, match="dimension"):
            generator_apply(law, TestFunction.cosine(1.0), [0.0, 0.0])
