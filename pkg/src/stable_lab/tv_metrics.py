#!/usr/bin/env python3

# /*
#  * Copyright Said Sef
#  *
#  * Licensed under the Apache License, Version 2.0 (the "License");
#  * you may not use this file except in compliance with the License.
#  * You may obtain a copy of the License at
#  *
#  *      https://www.apache.org/licenses/LICENSE-2.0
#  *
#  * Unless required by applicable law or agreed to in writing, software
#  * distributed under the License is distributed on an "AS IS" BASIS,
#  * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  * See the License for the specific language governing permissions and
#  * limitations under the License.
#  */

"""Distances between the law of S_n and its stable limit.

Exact 1-D total variation comes from inverting both characteristic functions on
one FFT grid. For the isotropic Pareto family the characteristic function of
S_n and the normalized log-CF gap Δ_n are evaluated in closed form up to one
radial quadrature.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum
from functools import lru_cache
from typing import Any

import numpy as np
from scipy import interpolate, special

from .decomposition import Partition
from .exceptions import AccuracyError, DomainError, NumericError
from .quadrature import integrate, power_fourier_tail, sphere_area
from .spectral_core import StableLaw, check_alpha, d_alpha, uniform_abs_moment
from .tail_models import ModelKind, TailModel

logger = logging.getLogger(__name__)

DEFAULT_NODES = 2**18
OVERSAMPLE = 4
CF_FLOOR = 1e-8
CUTOFF_MASS = 1e-6
SERIES_LIMIT = 8.0
SPLINE_NODES_PER_DECADE = 100
MIN_HALF_WIDTH = 50.0
RANGE_TAIL_LEVEL = 0.01
MAX_NODES = 2**22
CUTOFF_RETRIES = 2
MAX_CUTOFF_GROWTH = 16.0

CharacteristicFunction = Callable[[np.ndarray], np.ndarray]


class DistanceMethod(StrEnum):
    CF_INVERSION = "cf-inversion"
    HISTOGRAM_LB = "histogram-lb"
    KOLMOGOROV = "kolmogorov"


@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    error: float
    method: DistanceMethod
    meta: dict[str, Any] = field(default_factory=dict)

    def to_row(self) -> dict[str, Any]:
        return {"value": self.value, "error": self.error, "method": str(self.method), **self.meta}


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density on the uniform mesh x_k = x_min + k·dx; raw inversion output, negativity recorded."""

    x_min: float
    dx: float
    values: np.ndarray
    tail_mass_bound: float = 0.0
    inversion_error: float = 0.0

    @property
    def grid(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.values.size)

    @property
    def negativity(self) -> float:
        return float(min(0.0, self.values.min()))

    def integral(self) -> float:
        return float(np.trapezoid(self.values, dx=self.dx))

    def cdf(self, left_mass: float = 0.0) -> np.ndarray:
        increments = 0.5 * (self.values[1:] + self.values[:-1]) * self.dx
        return left_mass + np.concatenate([[0.0], np.cumsum(increments)])

    def cf(self, lam: np.ndarray) -> np.ndarray:
        """Re-transform Σ p(x) e^{iλx} dx (round-trip check)."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        return np.exp(1j * np.outer(lam, self.grid)) @ self.values * self.dx


# ---------------------------------------------------------------------------
# FFT inversion
# ---------------------------------------------------------------------------


def stable_cutoff(law: StableLaw) -> float:
    """Λ_max with exp(-c Λ^α) = 1e-8, c = Re Ψ(e₁)."""
    e1 = np.zeros(law.dim)
    e1[0] = 1.0
    c = float(np.real(law.spectral_exponent(e1)))
    return (math.log(1.0 / CF_FLOOR) / c) ** (1.0 / law.alpha)


def invert_cf_to_density(
    cf: CharacteristicFunction,
    cutoff: float,
    nodes: int = DEFAULT_NODES,
    oversample: int = OVERSAMPLE,
    tail_mass_bound: float = 0.0,
    check_cutoff: bool = True,
) -> GridDensity:
    """p(x) = (2π)^{-1} ∫ e^{-iλx} φ(λ) dλ by an FFT-accelerated trapezoid rule.

    The frequency grid reaches ``oversample·cutoff``; the mass of |φ| beyond the
    cutoff must stay below 1e-6, otherwise AccuracyError suggests a larger cutoff.
    """
    if cutoff <= 0.0 or nodes < 16:
        raise DomainError(f"need cutoff > 0 and at least 16 nodes, got {cutoff}, {nodes}")
    dx = math.pi / (oversample * cutoff)
    dlam = 2.0 * math.pi / (nodes * dx)
    j = np.arange(nodes)
    offset = j - nodes // 2
    lam = offset * dlam
    x = offset * dx
    values = np.asarray(cf(lam), dtype=complex)
    beyond = np.abs(lam) > cutoff
    beyond_mass = float(np.sum(np.abs(values[beyond])) * dlam)
    if check_cutoff and beyond_mass > CUTOFF_MASS:
        cumulative = np.cumsum((np.abs(values) * dlam)[::-1])[::-1]
        ok = np.flatnonzero((cumulative <= CUTOFF_MASS / 2.0) & (lam > 0.0))
        suggestion = float(lam[ok[0]]) if ok.size else 2.0 * oversample * cutoff
        raise AccuracyError(
            f"characteristic function mass beyond cutoff {cutoff:.6g} is {beyond_mass:.3g}",
            achieved_tolerance=beyond_mass,
            suggested_cutoff=suggestion,
        )
    spectrum = values * np.exp(-1j * j * dlam * x[0])
    density = (dlam / (2.0 * math.pi)) * np.real(np.exp(-1j * lam[0] * x) * np.fft.fft(spectrum))
    outer = np.abs(lam) > 0.75 * lam.max()
    inversion_error = float(np.sum(np.abs(values[outer])) * dlam) / (2.0 * math.pi)
    return GridDensity(float(x[0]), dx, density, tail_mass_bound, inversion_error)


def tv_between_densities(
    first: GridDensity, second: GridDensity, tail_index: float | None = None
) -> tuple[float, float]:
    """½∫|p - q| on a shared grid and its error allowance.

    The allowance is the pointwise inversion error over the grid width. With
    ``tail_index`` set, the off-grid part of ½∫|p - q| is added, extrapolated from
    the outer half of the grid assuming |p - q| decays like |x|^{-1-tail_index}.
    """
    if first.values.size != second.values.size or not math.isclose(first.dx, second.dx):
        raise DomainError("densities live on different grids")
    gap = np.abs(first.values - second.values)
    value = 0.5 * float(np.sum(gap) * first.dx)
    width = first.values.size * first.dx
    error = 0.5 * width * (first.inversion_error + second.inversion_error)
    if tail_index is not None:
        if tail_index <= 0.0:
            raise DomainError(f"tail_index must be positive, got {tail_index}")
        mag = np.abs(first.grid)
        outer = mag > 0.5 * mag.max()
        error += 0.5 * float(np.sum(gap[outer]) * first.dx) / (2.0**tail_index - 1.0)
    return value, error


def tv_between_cfs(
    cf_a: CharacteristicFunction, cf_b: CharacteristicFunction, cutoff: float, nodes: int = DEFAULT_NODES
) -> DistanceEstimate:
    first = invert_cf_to_density(cf_a, cutoff, nodes)
    value, error = tv_between_densities(first, invert_cf_to_density(cf_b, cutoff, nodes))
    return DistanceEstimate(min(1.0, value), error, DistanceMethod.CF_INVERSION, {"cutoff": cutoff, "nodes": nodes})


# ---------------------------------------------------------------------------
# Pareto closed forms
# ---------------------------------------------------------------------------


def _cosine_tail(u: float, alpha: float) -> float:
    """∫_u^∞ y^{-1-α} cos y dy for u > 0."""
    value, _ = power_fourier_tail(u, 1.0 + alpha, what="Pareto CF tail")
    return value


def _tabulated(func: Callable[[float], float], points: np.ndarray, nodes: int = 256) -> np.ndarray:
    """Evaluate ``func`` pointwise, or through a cubic spline in log u when there are many points."""
    if points.size <= nodes:
        return np.array([func(float(u)) for u in points])
    knots = np.geomspace(points.min(), points.max(), nodes)
    spline = interpolate.CubicSpline(np.log(knots), [func(float(u)) for u in knots])
    return spline(np.log(points))


def pareto_cf_1d(t: float | np.ndarray, alpha: float) -> float | np.ndarray:
    """E cos(tX) for the symmetric Pareto law: 1 - α|t|^α ∫_{|t|}^∞ (1 - cos y) y^{-1-α} dy.

    Power series for |t| ≤ 8, Fourier-weighted quadrature beyond.
    """
    alpha = check_alpha(alpha)
    u = np.abs(np.atleast_1d(np.asarray(t, dtype=float)))
    out = np.ones_like(u)
    near = (u > 0.0) & (u <= SERIES_LIMIT)
    if np.any(near):
        un = u[near]
        partial = np.zeros_like(un)
        log_u = np.log(un)
        for k in range(1, 60):
            sign = 1.0 if k % 2 else -1.0
            partial += sign * np.exp((2 * k - alpha) * log_u - special.gammaln(2 * k + 1)) / (2 * k - alpha)
        out[near] = 1.0 - alpha * un**alpha * (1.0 / d_alpha(alpha) - partial)
    far = u > SERIES_LIMIT
    if np.any(far):
        uf = u[far]
        out[far] = alpha * uf**alpha * _tabulated(lambda v: _cosine_tail(v, alpha), uf)
    return float(out[0]) if np.ndim(t) == 0 else out


def _angular_profile(s: np.ndarray, dim: int) -> np.ndarray:
    """A_d(s)/s² with A_d(s) = ∫_{S^{d-1}} (1 - cos(sθ₁)) dθ."""
    s = np.asarray(s, dtype=float)
    small = s < 1e-2
    safe = np.where(small, 1.0, s)
    match dim:
        case 1:
            return np.sinc(s / (2.0 * math.pi)) ** 2
        case 2:
            series = 2.0 * math.pi * (0.25 - s**2 / 64.0 + s**4 / 2304.0)
            return np.where(small, series, 2.0 * math.pi * (1.0 - special.j0(safe)) / safe**2)
        case 3:
            series = 4.0 * math.pi * (1.0 / 6.0 - s**2 / 120.0 + s**4 / 5040.0)
            return np.where(small, series, 4.0 * math.pi * (1.0 - np.sin(safe) / safe) / safe**2)
        case _:
            raise DomainError(f"exact Pareto path supports d <= 3, got d={dim}")


@lru_cache(maxsize=4096)
def angular_integral(rho: float, alpha: float, dim: int) -> float:
    """J(ρ) = ∫_0^ρ s^{-1-α} A_d(s) ds."""
    if rho <= 0.0:
        return 0.0
    head_end = min(rho, 1.0)
    total, _ = integrate(
        lambda s: float(_angular_profile(np.array(s), dim)),
        0.0,
        head_end,
        weight="alg",
        wvar=(1.0 - alpha, 0.0),
        what=f"angular integral head (alpha={alpha}, d={dim})",
        epsabs=0.0,
        epsrel=1e-12,
    )
    edges = np.arange(1.0, rho, 10.0 * math.pi).tolist() + [rho] if rho > 1.0 else []
    for lo, hi in zip(edges[:-1], edges[1:], strict=True):
        piece, _ = integrate(
            lambda s: float(_angular_profile(np.array(s), dim)) * s ** (1.0 - alpha),
            lo,
            hi,
            what="angular integral body",
            epsabs=1e-14,
            epsrel=1e-12,
            max_error=1e-11,
        )
        total += piece
    return total


def _pareto_constants(alpha: float, dim: int) -> tuple[float, float, float]:
    """(σ, C₀, I(0)) with C₀·I(0) = m_α."""
    alpha = check_alpha(alpha)
    if dim > 3 or dim < 1:
        raise DomainError(f"exact Pareto path supports 1 <= d <= 3, got d={dim}")
    da = d_alpha(alpha)
    sigma = (alpha / da) ** (1.0 / alpha)
    c_d = alpha * math.gamma(dim / 2.0 + 1.0) / (math.pi ** (dim / 2.0) * dim)
    c0 = c_d / sigma**alpha
    i0 = sphere_area(dim) * uniform_abs_moment(alpha, dim) / da
    return sigma, c0, i0


def cf_of_Sn_pareto(n: int, alpha: float, d: int, lambda_mag: float) -> complex:
    """φ_{S_n}(λe₁) = (1 - C₀ λ^α [I(0) - J(λ/(σ n^{1/α}))] / n)^n."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    sigma, c0, i0 = _pareto_constants(alpha, d)
    lam = abs(float(lambda_mag))
    if lam == 0.0:
        return complex(1.0)
    rho = lam / (sigma * n ** (1.0 / alpha))
    base = 1.0 - c0 * lam**alpha * (i0 - angular_integral(rho, alpha, d)) / n
    return complex(base**n)


def delta_n(n: int, alpha: float, d: int = 1) -> float:
    """Δ_n = n^{((2-α)∧α)/α} (ln φ_{S_n}(e₁) - ln φ_Y(e₁)), evaluated without cancellation."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    sigma, c0, i0 = _pareto_constants(alpha, d)
    rho = 1.0 / (sigma * n ** (1.0 / alpha))
    j = angular_integral(rho, alpha, d)
    x = -c0 * (i0 - j) / n
    if x <= -1.0:
        raise NumericError(f"φ_Sn(e1) <= 0 at n={n}")
    exponent = min(2.0 - alpha, alpha) / alpha
    return n**exponent * (n * (math.log1p(x) - x) + c0 * j)


def delta_limit(alpha: float, d: int = 1) -> float:
    """lim Δ_n: α/(2d(2-α)σ²) for α > 1, -m_α²/2 for α < 1, 1/(2dσ²) - m₁²/2 for α = 1."""
    sigma, _, _ = _pareto_constants(alpha, d)
    m = uniform_abs_moment(alpha, d)
    if alpha > 1.0:
        return alpha / (2.0 * d * (2.0 - alpha) * sigma**2)
    if alpha < 1.0:
        return -0.5 * m**2
    return 1.0 / (2.0 * d * sigma**2) - 0.5 * m**2


# ---------------------------------------------------------------------------
# Characteristic function of a 1-D source law
# ---------------------------------------------------------------------------


def _radial_gap(model: TailModel, sign: float, t: float) -> complex:
    """1 - E[e^{itR} | θ = sign] for t > 0, using y = t·r so the oscillation has unit frequency."""
    theta = np.array([sign])
    r_s = model._saturation_radius(theta)
    A = model.tail_constant
    alpha = model.alpha

    def profile(y: float) -> float:
        return float((A + model.epsilon(np.array([y / t]), theta[None, :])[0]) * y ** (-alpha))

    a = t * r_s
    cos_part = sin_part = 0.0
    start = max(a, math.pi)
    if a < math.pi:
        for trig, slot in ((math.cos, 0), (math.sin, 1)):
            piece, _ = integrate(
                lambda v, trig=trig: profile(math.exp(v)) * math.exp(v) * trig(math.exp(v)),
                math.log(a),
                math.log(math.pi),
                what="source CF head",
                epsabs=1e-13,
                epsrel=1e-11,
                max_error=1e-9,
            )
            if slot == 0:
                cos_part += piece
            else:
                sin_part += piece
    for weight in ("cos", "sin"):
        piece, _ = power_fourier_tail(start, alpha, 1.0, weight, what="source CF tail")
        piece *= A
        if model.params.get("eps_name") != "zero":
            rest, _ = integrate(
                lambda y: float(model.epsilon(np.array([y / t]), theta[None, :])[0]) * y ** (-alpha),
                start,
                math.inf,
                weight=weight,
                wvar=1.0,
                what="source CF remainder tail",
                epsabs=1e-12,
                limlst=200,
                max_error=1e-9,
            )
            piece += rest
        if weight == "cos":
            cos_part += piece
        else:
            sin_part += piece
    scale = t**alpha
    return complex(1.0 - math.cos(a) + scale * sin_part, -math.sin(a) - scale * cos_part)


def _direct_model_cf(model: TailModel, t: float) -> complex:
    if t == 0.0:
        return complex(1.0)
    if model.kind is ModelKind.PARETO:
        return complex(pareto_cf_1d(t, model.alpha))
    w_plus = float(model.params.get("w_plus", 0.5))
    mag = abs(t)
    value = 0j
    if w_plus > 0.0:
        value += w_plus * (1.0 - _radial_gap(model, 1.0, mag))
    if w_plus < 1.0:
        value += (1.0 - w_plus) * np.conj(1.0 - _radial_gap(model, -1.0, mag))
    return value if t > 0.0 else complex(np.conj(value))


def model_cf_1d(model: TailModel, t: float | np.ndarray) -> complex | np.ndarray:
    """φ_X(t) for a 1-D model by closed form (Pareto) or radial quadrature."""
    if model.dim != 1:
        raise DomainError(f"model_cf_1d needs a 1-D model, got d={model.dim}")
    if model.kind is ModelKind.PARETO:
        value = pareto_cf_1d(t, model.alpha)
        return value if np.ndim(t) == 0 else np.asarray(value, dtype=complex)
    if np.ndim(t) == 0:
        return _direct_model_cf(model, float(t))
    return np.array([_direct_model_cf(model, float(v)) for v in np.ravel(t)]).reshape(np.shape(t))


class SplineCF:
    """φ_X tabulated as h(t) = (1 - φ_X(t))/t^α on a log grid over [t_lo, t_hi].

    The grid is refined until midpoints agree with direct quadrature to ``rtol``.
    """

    def __init__(self, model: TailModel, t_lo: float, t_hi: float, rtol: float = 1e-7):
        self.model = model
        self.alpha = model.alpha
        self.t_lo, self.t_hi = t_lo, t_hi
        decades = max(1.0, math.log10(t_hi / t_lo))
        count = int(SPLINE_NODES_PER_DECADE * decades) + 2
        for _ in range(3):
            knots = np.geomspace(t_lo, t_hi, count)
            h = np.array([self._h(t) for t in knots])
            self._re = interpolate.CubicSpline(np.log(knots), h.real)
            self._im = interpolate.CubicSpline(np.log(knots), h.imag)
            probes = np.sqrt(knots[:-1] * knots[1:])[:: max(1, count // 40)]
            exact = np.array([self._h(t) for t in probes])
            err = float(np.max(np.abs(self._eval_h(probes) - exact) / np.maximum(1.0, np.abs(exact))))
            if err <= rtol:
                break
            count *= 2
        else:
            raise AccuracyError(f"spline CF of {model.model_id()} misses tolerance", achieved_tolerance=err)
        logger.debug(f"spline CF for {model.model_id()} on [{t_lo:.3g}, {t_hi:.3g}] with {count} knots")

    def _h(self, t: float) -> complex:
        return (1.0 - _direct_model_cf(self.model, t)) / t**self.alpha

    def _eval_h(self, t: np.ndarray) -> np.ndarray:
        log_t = np.log(t)
        return self._re(log_t) + 1j * self._im(log_t)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        mag = np.abs(t)
        out = np.ones(t.shape, dtype=complex)
        nonzero = mag > 0.0
        if np.any(nonzero & ((mag < self.t_lo * (1 - 1e-12)) | (mag > self.t_hi * (1 + 1e-12)))):
            raise DomainError("frequency outside the tabulated range")
        m = np.clip(mag[nonzero], self.t_lo, self.t_hi)
        values = 1.0 - self._eval_h(m) * m**self.alpha
        out[nonzero] = np.where(t[nonzero] > 0.0, values, np.conj(values))
        return out


# ---------------------------------------------------------------------------
# Exact 1-D TV and Kolmogorov distance
# ---------------------------------------------------------------------------


def _stable_tail(law: StableLaw, r: float) -> float:
    """P(|Y| > r) ≈ d_α ν(S) r^{-α}/α."""
    return law.d_alpha * law.nu.total_mass * r ** (-law.alpha) / law.alpha


def sn_characteristic_function(
    model: TailModel, n: int, max_frequency: float, min_frequency: float
) -> CharacteristicFunction:
    """λ ↦ e^{-iλnω/s} φ_X(λ/s)^n with s = n^{1/α}σ."""
    scale = n ** (1.0 / model.alpha) * model.sigma
    shift = float(model.omega_shift(n).value[0]) if model.dim == 1 else 0.0
    if model.kind is ModelKind.PARETO:
        base: Callable[[np.ndarray], np.ndarray] = lambda t: np.asarray(pareto_cf_1d(t, model.alpha), dtype=complex)
    else:
        base = SplineCF(model, min_frequency / scale, max_frequency / scale)

    def cf(lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        phase = np.exp(-1j * lam * n * shift / scale)
        return phase * np.power(np.asarray(base(lam / scale), dtype=complex), n)

    return cf


@dataclass(frozen=True, eq=False)
class PairedGrid:
    """Densities of S_n and of its limit on one FFT grid."""

    p_sn: GridDensity
    p_y: GridDensity
    cutoff: float
    nodes: int

    @property
    def half_width(self) -> float:
        return 0.5 * self.nodes * self.p_sn.dx

    @property
    def offgrid_tail(self) -> float:
        return self.p_sn.tail_mass_bound + self.p_y.tail_mass_bound


def range_half_width(law: StableLaw) -> float:
    """max(50, 10·q) with q the upper 1% quantile of |Y| read off its r^{-α} tail."""
    quantile = (law.d_alpha * law.nu.total_mass / (law.alpha * RANGE_TAIL_LEVEL)) ** (1.0 / law.alpha)
    return max(MIN_HALF_WIDTH, 10.0 * quantile)


def _grid_nodes(cutoff: float, nodes: int, half_width: float) -> int:
    dx = math.pi / (OVERSAMPLE * cutoff)
    needed = 2 ** math.ceil(math.log2(2.0 * half_width / dx))
    if needed > MAX_NODES:
        logger.warning(f"x-range ±{half_width:.4g} needs {needed} nodes; capped at {MAX_NODES}")
        needed = MAX_NODES
    return max(nodes, needed)


def _paired_densities(model: TailModel, n: int, nodes: int) -> PairedGrid:
    """Invert both CFs on one grid, raising the cutoff when the S_n CF decays too slowly."""
    if model.dim != 1:
        raise DomainError(f"exact TV needs d = 1, got d={model.dim}")
    law = model.stable_limit()
    base_cutoff = cutoff = stable_cutoff(law)
    half_width = range_half_width(law)
    scale = n ** (1.0 / model.alpha) * model.sigma
    retries = 0
    while True:
        size = _grid_nodes(cutoff, nodes, half_width)
        dx = math.pi / (OVERSAMPLE * cutoff)
        dlam = 2.0 * math.pi / (size * dx)
        edge = 0.5 * size * dx
        sn_tail = min(1.0, n * model.tail_probability(scale * edge))
        cf_sn = sn_characteristic_function(model, n, dlam * (size // 2 + 1), dlam)
        try:
            p_sn = invert_cf_to_density(cf_sn, cutoff, size, tail_mass_bound=sn_tail)
            break
        except AccuracyError as e:
            suggestion = 1.05 * (e.suggested_cutoff or 2.0 * OVERSAMPLE * cutoff)
            if retries == CUTOFF_RETRIES or suggestion > MAX_CUTOFF_GROWTH * base_cutoff:
                raise
            logger.debug(f"S_n CF for n={n} too heavy at cutoff {cutoff:.4g}; retrying at {suggestion:.4g}")
            cutoff = suggestion
            retries += 1
    y_tail = min(1.0, _stable_tail(law, edge))
    p_y = invert_cf_to_density(
        lambda lam: np.asarray(law.cf(lam), dtype=complex), cutoff, size, tail_mass_bound=y_tail
    )
    return PairedGrid(p_sn, p_y, cutoff, size)


def _grid_meta(model: TailModel, n: int, paired: PairedGrid) -> dict[str, Any]:
    return {
        "n": n,
        "alpha": model.alpha,
        "model": model.model_id(),
        "cutoff": paired.cutoff,
        "nodes": paired.nodes,
        "half_width": paired.half_width,
        "offgrid_tail": paired.offgrid_tail,
    }


def tv_1d_exact(model: TailModel, n: int, nodes: int = DEFAULT_NODES) -> DistanceEstimate:
    """d_TV(S_n, S_α(ν)) from inverted characteristic functions, with an explicit error allowance.

    ``nodes`` is a floor: the grid grows until it spans ±``range_half_width``.
    ``meta["offgrid_tail"]`` is the cruder P(|Y| > H) + n·P(|X| > sH) bound on the
    mass the grid misses.
    """
    paired = _paired_densities(model, n, nodes)
    value, error = tv_between_densities(paired.p_sn, paired.p_y, tail_index=model.alpha)
    logger.debug(f"TV({model.model_id()}, n={n}) = {value:.6g} ± {error:.2g}")
    return DistanceEstimate(min(1.0, value), error, DistanceMethod.CF_INVERSION, _grid_meta(model, n, paired))


def kolmogorov_1d(model: TailModel, n: int, nodes: int = DEFAULT_NODES) -> DistanceEstimate:
    """sup |F_{S_n} - F_Y| from the same inverted densities; never exceeds the TV estimate."""
    paired = _paired_densities(model, n, nodes)
    value = float(np.max(np.abs(paired.p_sn.cdf() - paired.p_y.cdf())))
    tv, tv_err = tv_between_densities(paired.p_sn, paired.p_y, tail_index=model.alpha)
    if value > tv + tv_err + 1e-9:
        raise NumericError(f"Kolmogorov distance {value:.6g} exceeds TV {tv:.6g}")
    meta = _grid_meta(model, n, paired) | {"tv": tv}
    return DistanceEstimate(value, tv_err, DistanceMethod.KOLMOGOROV, meta)


def _as_rows(points: np.ndarray) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def tv_histogram_lb(
    batch_p: np.ndarray, batch_q: np.ndarray, partition: Partition, resamples: int = 200, seed: int = 0
) -> DistanceEstimate:
    """½Σ|p̂_i - q̂_i| over the partition cells; a lower-bound estimator with bootstrap s.e."""
    a = _as_rows(batch_p)
    b = _as_rows(batch_q)
    if a.shape[0] != b.shape[0]:
        raise DomainError(f"batches differ in size: {a.shape[0]} vs {b.shape[0]}")
    cells = partition.cells
    count_a = np.bincount(partition.assign(a), minlength=cells)
    count_b = np.bincount(partition.assign(b), minlength=cells)
    size = a.shape[0]
    value = 0.5 * float(np.sum(np.abs(count_a - count_b))) / size
    rng = np.random.default_rng(seed)
    boot = [
        0.5 * float(np.sum(np.abs(rng.multinomial(size, count_a / size) - rng.multinomial(size, count_b / size))))
        / size
        for _ in range(resamples)
    ]
    meta = {"cells": cells, "size": size}
    return DistanceEstimate(value, float(np.std(boot, ddof=1)), DistanceMethod.HISTOGRAM_LB, meta)


# ---------------------------------------------------------------------------
# Stable quantile function (d = 1)
# ---------------------------------------------------------------------------


class StableQuantile:
    """Inverse CDF of a 1-D stable law: tabulated centre, exact r^{-α} tails with constants w±d_α/α."""

    def __init__(self, law: StableLaw, nodes: int = DEFAULT_NODES):
        if law.dim != 1:
            raise DomainError("StableQuantile needs a 1-D law")
        self.alpha = law.alpha
        dirs, wts = law.nu.nodes()
        self.lower_const = float(wts[dirs[:, 0] < 0.0].sum()) * law.d_alpha / law.alpha
        self.upper_const = float(wts[dirs[:, 0] > 0.0].sum()) * law.d_alpha / law.alpha
        density = invert_cf_to_density(lambda lam: np.asarray(law.cf(lam), dtype=complex), stable_cutoff(law), nodes)
        x = density.grid
        keep = np.abs(x) <= 0.125 * abs(x[0])
        xs = x[keep]
        left = self.lower_const * abs(xs[0]) ** (-self.alpha) if xs[0] < 0.0 else 0.0
        values = np.clip(density.values[keep], 0.0, None)
        cdf = left + np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * density.dx)])
        self._x = xs
        self._cdf = np.maximum.accumulate(cdf)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = np.interp(u, self._cdf, self._x)
        low = u < self._cdf[0]
        high = u > self._cdf[-1]
        if self.lower_const > 0.0:
            out = np.where(low, -((self.lower_const / np.maximum(u, 1e-300)) ** (1.0 / self.alpha)), out)
        if self.upper_const > 0.0:
            out = np.where(high, (self.upper_const / np.maximum(1.0 - u, 1e-300)) ** (1.0 / self.alpha), out)
        return out

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return np.interp(x, self._x, self._cdf)
