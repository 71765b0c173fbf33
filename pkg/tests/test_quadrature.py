"""Tests for quadrature.py: QUADPACK wrapper, fixed rules and sphere integration."""

import math

import numpy as np
import pytest
from scipy import special

from stable_lab.exceptions import DomainError, NumericError
from stable_lab.quadrature import (
    integrate,
    jacobi_rule,
    legendre_rule,
    power_fourier_tail,
    projection_constant,
    sphere_area,
    sphere_integral,
    sphere_rule,
)


class TestIntegrate:
    def test_gaussian_integral(self):
        value, err = integrate(lambda x: math.exp(-x * x), -math.inf, math.inf, what="gaussian")
        assert value == pytest.approx(math.sqrt(math.pi), rel=1e-10)
        assert err < 1e-9

    def test_fourier_weight(self):
        value, _ = integrate(lambda t: t**-2.0, 1.0, math.inf, weight="cos", wvar=1.0, what="cos tail", max_error=1e-9)
        assert value == pytest.approx(math.cos(1.0) - (math.pi / 2 - 0.9460830703671830), abs=1e-8)

    def test_divergent_integral_raises(self):
        with pytest.raises(NumericError, match="did not converge for divergent"):
            integrate(lambda x: 1.0 / x, 0.0, 1.0, what="divergent")

    def test_error_limit_enforced(self):
        with pytest.raises(NumericError):
            integrate(lambda x: math.sin(1.0 / x) if x else 0.0, 0.0, 1.0, what="oscillating", limit=5)


class TestPowerFourierTail:
    @pytest.mark.parametrize("a", [0.2, 1.0, 7.5])
    @pytest.mark.parametrize("omega", [0.5, 1.0, 3.0])
    def test_inverse_square(self, a, omega):
        u = omega * a
        si, ci = special.sici(u)
        cos_value, cos_err = power_fourier_tail(a, 2.0, omega, "cos", what="cos")
        sin_value, _ = power_fourier_tail(a, 2.0, omega, "sin", what="sin")
        assert cos_value == pytest.approx(omega * (math.cos(u) / u - (math.pi / 2.0 - si)), abs=1e-10)
        assert sin_value == pytest.approx(omega * (math.sin(u) / u - ci), abs=1e-10)
        assert cos_err < 1e-9

    @pytest.mark.parametrize("power", [1.05, 1.3, 1.9])
    def test_slow_decay_from_one(self, power):
        # ∫_0^∞ (cos y - 1) y^{-p} dy = Γ(1-p) cos(π(1-p)/2) for 1 < p < 3
        head, _ = integrate(lambda y: (math.cos(y) - 1.0) * y**-power, 0.0, 1.0, what="head", epsrel=1e-12)
        whole = math.gamma(1.0 - power) * math.cos(math.pi * (1.0 - power) / 2.0)
        expected = whole - head + 1.0 / (power - 1.0)
        value, _ = power_fourier_tail(1.0, power, what="slow")
        assert value == pytest.approx(expected, rel=1e-9)

    def test_rejects_bad_arguments(self):
        with pytest.raises(DomainError, match="need a, power, omega > 0"):
            power_fourier_tail(0.0, 1.5, what="bad")
        with pytest.raises(DomainError, match="kind"):
            power_fourier_tail(1.0, 1.5, kind="tan", what="bad")


class TestFixedRules:
    def test_jacobi_moments(self):
        r, w = jacobi_rule(20, -0.5)
        # ∫_0^1 r² r^{-1/2} dr = 1/2.5
        assert float(w @ r**2) == pytest.approx(1.0 / 2.5, rel=1e-12)

    def test_jacobi_rejects_nonintegrable_weight(self):
        with pytest.raises(DomainError, match="must exceed -1"):
            jacobi_rule(10, -1.0)

    def test_rules_are_read_only(self):
        r, w = legendre_rule(8)
        with pytest.raises(ValueError):
            r[0] = 1.0
        assert float(w.sum()) == pytest.approx(1.0)

    def test_legendre_on_unit_interval(self):
        r, w = legendre_rule(10)
        assert np.all((r > 0) & (r < 1))
        assert float(w @ r**3) == pytest.approx(0.25, rel=1e-12)


class TestSphere:
    @pytest.mark.parametrize("dim, area", [(1, 2.0), (2, 2 * math.pi), (3, 4 * math.pi)])
    def test_sphere_area(self, dim, area):
        assert sphere_area(dim) == pytest.approx(area)

    def test_sphere_area_rejects_zero(self):
        with pytest.raises(DomainError):
            sphere_area(0)

    def test_projection_constant_normalizes(self):
        c = projection_constant(3)
        assert c == pytest.approx(0.5)

    def test_two_point_rule(self):
        nodes, weights = sphere_rule(1, 10)
        assert nodes.tolist() == [[1.0], [-1.0]]
        assert weights.tolist() == [0.5, 0.5]

    @pytest.mark.parametrize("dim", [2, 3])
    def test_second_moment(self, dim):
        value, std_err = sphere_integral(lambda th: th[:, 0] ** 2, dim, count=400)
        assert float(value) == pytest.approx(1.0 / dim, rel=1e-8)
        assert std_err == 0.0

    def test_high_dimension_uses_scrambled_replicates(self):
        value, std_err = sphere_integral(lambda th: th[:, 0] ** 2, 5, count=4096)
        assert float(value) == pytest.approx(0.2, abs=0.02)
        assert std_err > 0.0
