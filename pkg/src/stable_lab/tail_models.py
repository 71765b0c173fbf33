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

"""Heavy-tailed source laws in the normal domain of attraction of S_α(ν).

A model fixes the polar tail

    P(|X| ≥ r, X/|X| ∈ B) = ∫_B T(r, θ) ν(dθ),   T(r, θ) = min(1, (A + ε(r, θ)) r^{-α})

and is valid when T is non-increasing in r and the effective remainder
ε_eff = r^α T - A satisfies |ε_eff(r, θ)| ≤ K (1 ∧ r^{-γ}).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import Any, NamedTuple

import numpy as np
from scipy import optimize

from .exceptions import DomainError, ModelValidityError, NumericError
from .quadrature import integrate, sphere_area, sphere_rule
from .spectral_core import MeasureKind, SpectralMeasure, StableLaw, check_alpha, d_alpha

logger = logging.getLogger(__name__)

EpsilonFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

VALIDITY_GRID = np.geomspace(1e-3, 1e6, 2000)
BISECTION_TOL = 1e-12
_LOG_R_FLOOR = -60.0

# ---------------------------------------------------------------------------
# ε registry: factories(**params) -> ε(r, θ)
# ---------------------------------------------------------------------------

_EPSILONS: dict[str, Callable[..., EpsilonFn]] = {}


def register_epsilon(name: str) -> Callable[[Callable[..., EpsilonFn]], Callable[..., EpsilonFn]]:
    def deco(factory: Callable[..., EpsilonFn]) -> Callable[..., EpsilonFn]:
        _EPSILONS[name] = factory
        return factory

    return deco


def epsilon_names() -> list[str]:
    return sorted(_EPSILONS)


def make_epsilon(name: str, **params: float) -> EpsilonFn:
    try:
        factory = _EPSILONS[name]
    except KeyError as e:
        raise DomainError(f"Unknown epsilon function '{name}'. Known: {epsilon_names()}") from e
    try:
        return factory(**params)
    except TypeError as e:
        raise DomainError(f"bad parameters for epsilon '{name}': {e}") from e


@register_epsilon("zero")
def _eps_zero() -> EpsilonFn:
    return lambda r, theta: np.zeros_like(r, dtype=float)


@register_epsilon("power")
def _eps_power(c: float = 1.0, p: float = 1.0) -> EpsilonFn:
    """c · min(1, r^{-p})."""
    return lambda r, theta: c * np.minimum(1.0, np.asarray(r, dtype=float) ** -p)


@register_epsilon("damped_cosine")
def _eps_damped_cosine(c: float = 0.5, p: float = 1.0, freq: float = 1.0) -> EpsilonFn:
    """c · cos(freq·r) · min(1, r^{-p})."""

    def eps(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return c * np.cos(freq * r) * np.minimum(1.0, r**-p)

    return eps


# ---------------------------------------------------------------------------
# Model types
# ---------------------------------------------------------------------------


class ModelKind(StrEnum):
    PARETO = "pareto"
    DNA = "dna"
    CUSTOM = "custom"


@dataclass(frozen=True)
class LocalLowerBound:
    """Witness that X has density ≥ eps0 on the ball B(center, radius)."""

    eps0: float
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))
        if self.eps0 <= 0.0 or self.radius <= 0.0:
            raise DomainError("local lower bound needs eps0 > 0 and radius > 0")


class ShiftValue(NamedTuple):
    value: np.ndarray
    error_bound: float


@dataclass(frozen=True, eq=False)
class TailModel:
    kind: ModelKind
    alpha: float
    tail_constant: float
    nu: SpectralMeasure
    epsilon: EpsilonFn
    gamma: float
    eps_bound: float
    llb: LocalLowerBound | None = None
    label: str = ""
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        if self.tail_constant <= 0.0:
            raise ModelValidityError(f"tail constant A must be positive, got {self.tail_constant}")
        if self.eps_bound < 0.0 or self.gamma <= 0.0:
            raise ModelValidityError(f"need K >= 0 and gamma > 0, got K={self.eps_bound}, gamma={self.gamma}")
        if abs(self.nu.total_mass - 1.0) > 1e-12:
            raise ModelValidityError(f"spectral measure of a tail model must have mass 1, got {self.nu.total_mass}")
        if self.llb is not None and self.llb.center.shape != (self.dim,):
            raise DomainError(f"witness center has shape {self.llb.center.shape}, expected ({self.dim},)")
        self._validate_tail()

    @property
    def dim(self) -> int:
        return self.nu.dim

    @property
    def is_symmetric(self) -> bool:
        return self.nu.is_symmetric() and self.params.get("symmetric_eps", True)

    def model_id(self) -> str:
        return self.label or f"{self.kind}:d={self.dim},alpha={self.alpha:g}"

    def _probe_directions(self) -> np.ndarray:
        if self.nu.kind is MeasureKind.ATOMS:
            assert self.nu.directions is not None
            return self.nu.directions
        return sphere_rule(self.dim, 64)[0]

    def _validate_tail(self) -> None:
        dirs = self._probe_directions()
        r = np.broadcast_to(VALIDITY_GRID[:, None], (VALIDITY_GRID.size, dirs.shape[0]))
        theta = np.broadcast_to(dirs[None, :, :], (*r.shape, self.dim))
        tail = self.conditional_tail(r, theta)
        if np.any(tail < 0.0) or np.any(np.diff(tail, axis=0) > 1e-12):
            raise ModelValidityError(
                f"conditional tail of {self.model_id()} is not a non-increasing function of r with values in [0, 1]"
            )
        excess = np.abs(r**self.alpha * tail - self.tail_constant) - self.eps_bound * _decay(r, self.gamma)
        if np.any(excess > 1e-9 * np.maximum(1.0, self.tail_constant)):
            worst = float(r.flat[np.argmax(excess)])
            raise ModelValidityError(
                f"|eps(r)| exceeds K(1 ∧ r^-gamma) for {self.model_id()} (worst r = {worst:.4g})",
                details={"r": worst, "K": self.eps_bound, "gamma": self.gamma},
            )

    # -- tail ---------------------------------------------------------------

    def conditional_tail(self, r: np.ndarray | float, theta: np.ndarray) -> np.ndarray:
        """T(r, θ) = P(|X| ≥ r | X/|X| = θ)."""
        r_arr = np.asarray(r, dtype=float)
        raw = (self.tail_constant + self.epsilon(r_arr, np.asarray(theta, dtype=float))) * np.where(
            r_arr > 0.0, r_arr, 1.0
        ) ** (-self.alpha)
        return np.where(r_arr > 0.0, np.clip(raw, 0.0, 1.0), 1.0)

    def effective_epsilon(self, r: np.ndarray | float, theta: np.ndarray) -> np.ndarray:
        r_arr = np.asarray(r, dtype=float)
        return r_arr**self.alpha * self.conditional_tail(r_arr, theta) - self.tail_constant

    def tail_probability(self, r: float, cap: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
        """P(|X| ≥ r, X/|X| ∈ B) with B given as an indicator on directions."""
        dirs, wts = self.nu.nodes()
        inside = np.ones(dirs.shape[0]) if cap is None else np.asarray(cap(dirs), dtype=float)
        return float(wts @ (inside * self.conditional_tail(np.full(dirs.shape[0], r), dirs)))

    def invert_tail(self, u: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Radii R with T(R, θ) = u by log-space bisection (tolerance 1e-12 in probability)."""
        u = np.asarray(u, dtype=float)
        if self.kind is ModelKind.PARETO:
            return u ** (-1.0 / self.alpha)
        lo = np.full(u.shape, _LOG_R_FLOOR)
        hi = np.log((self.tail_constant + self.eps_bound) / u) / self.alpha + 1e-9
        if np.any(self.conditional_tail(np.exp(hi), theta) > u):
            raise NumericError("tail inversion bracket does not contain the target probability")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = self.conditional_tail(np.exp(mid), theta) >= u
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            gap = self.conditional_tail(np.exp(lo), theta) - self.conditional_tail(np.exp(hi), theta)
            if np.all((gap <= BISECTION_TOL) | (hi - lo <= 1e-13)):
                break
        else:
            raise NumericError("tail inversion did not converge", achieved_tolerance=float(np.max(gap)))
        return np.exp(0.5 * (lo + hi))

    # -- normalization ------------------------------------------------------

    @cached_property
    def sigma(self) -> float:
        return sigma_scale(self)

    def stable_limit(self) -> StableLaw:
        """The law S_α(ν) that S_n converges to."""
        return StableLaw(self.alpha, self.nu, label=f"stable:d={self.dim},alpha={self.alpha:g}")

    def _saturation_radius(self, theta: np.ndarray) -> float:
        def excess(u: float) -> float:
            r = np.array([math.exp(u)])
            return float((self.tail_constant + self.epsilon(r, theta[None, :])[0]) * r[0] ** (-self.alpha) - 1.0)

        hi = math.log(self.tail_constant + self.eps_bound) / self.alpha + 1.0
        if excess(_LOG_R_FLOOR) <= 0.0:
            return 0.0
        if excess(hi) > 0.0:
            raise NumericError(f"no saturation radius below e^{hi:.3g} for {self.model_id()}")
        return math.exp(optimize.brentq(excess, _LOG_R_FLOOR, hi, xtol=1e-14))

    def _eps_integral(self, theta: np.ndarray, lo: float, hi: float, power: float) -> tuple[float, float]:
        """∫_lo^hi ε(r, θ) r^{-power} dr."""
        if self.params.get("eps_name") == "zero" or lo >= hi:
            return 0.0, 0.0
        return integrate(
            lambda r: float(self.epsilon(np.array([r]), theta[None, :])[0]) * r ** (-power),
            lo,
            hi,
            what=f"tail remainder integral of {self.model_id()}",
            epsabs=1e-12,
            epsrel=1e-10,
            max_error=1e-8,
        )

    def _radial_mean(self, theta: np.ndarray, cutoff: float | None) -> tuple[float, float]:
        """E[R · 1{R ≤ cutoff} | θ] (cutoff None = untruncated, α > 1)."""
        r_s = self._saturation_radius(theta)
        A = self.tail_constant
        if cutoff is None:
            extra, err = self._eps_integral(theta, r_s, math.inf, self.alpha)
            return r_s + A * r_s ** (1.0 - self.alpha) / (self.alpha - 1.0) + extra, err
        if cutoff <= r_s:
            return 0.0, 0.0
        extra, err = self._eps_integral(theta, r_s, cutoff, 1.0)
        tail_at_cutoff = float(self.conditional_tail(np.array([cutoff]), theta[None, :])[0])
        return r_s + A * math.log(cutoff / r_s) + extra - cutoff * tail_at_cutoff, err

    def omega_shift(self, n: int) -> ShiftValue:
        return omega_shift(self, n)


def _decay(r: np.ndarray, gamma: float) -> np.ndarray:
    if math.isinf(gamma):
        return np.where(r < 1.0, 1.0, 0.0)
    return np.minimum(1.0, r**-gamma)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def pareto_density(x: np.ndarray, alpha: float) -> np.ndarray:
    """α Γ(d/2+1) / (π^{d/2} d |x|^{d+α}) on |x| ≥ 1, zero inside the unit ball."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dim = x.shape[-1]
    mag = np.linalg.norm(x, axis=-1)
    const = alpha * math.gamma(dim / 2.0 + 1.0) / (math.pi ** (dim / 2.0) * dim)
    return np.where(mag >= 1.0, const * np.where(mag > 0.0, mag, 1.0) ** (-dim - alpha), 0.0)


def pareto_model(d: int, alpha: float) -> TailModel:
    """Isotropic Pareto law: P(|X| ≥ r) = min(1, r^{-α}), uniform direction."""
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    alpha = check_alpha(alpha)
    center = np.zeros(d)
    center[0] = 1.5
    witness = LocalLowerBound(
        eps0=0.5 * float(pareto_density(np.eye(d)[:1] * 2.0, alpha)[0]),
        center=center,
        radius=0.5,
    )
    return TailModel(
        kind=ModelKind.PARETO,
        alpha=alpha,
        tail_constant=1.0,
        nu=SpectralMeasure.uniform(d),
        epsilon=make_epsilon("zero"),
        gamma=math.inf,
        eps_bound=1.0,
        llb=witness,
        label=f"pareto:d={d},alpha={alpha:g}",
        params={"eps_name": "zero"},
    )


def dna_model(
    alpha: float,
    A: float = 1.0,
    w_plus: float = 0.5,
    eps: str | EpsilonFn = "zero",
    gamma: float = math.inf,
    K: float = 1.0,
    eps_minus: str | EpsilonFn | None = None,
    eps_params: dict[str, float] | None = None,
    llb: LocalLowerBound | None = None,
) -> TailModel:
    """1-D law with F(x) = 1 - w₊T(x, +1) for x ≥ 0 and F(x) = w₋T(|x|, -1) for x < 0.

    T saturates at 1 below r = A^{1/α}, so A > 1 gives ε_eff = r^α - A on (0, A^{1/α}).
    That needs a finite ``gamma`` and K ≥ A; the default γ = ∞ only allows A ≤ 1.
    """
    if not 0.0 <= w_plus <= 1.0:
        raise DomainError(f"w_plus must lie in [0, 1], got {w_plus}")
    eps_params = eps_params or {}
    plus = make_epsilon(eps, **eps_params) if isinstance(eps, str) else eps
    if eps_minus is None:
        epsilon = plus
    else:
        minus = make_epsilon(eps_minus, **eps_params) if isinstance(eps_minus, str) else eps_minus

        def epsilon(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
            return np.where(np.asarray(theta)[..., 0] > 0.0, plus(r, theta), minus(r, theta))

    eps_name = eps if isinstance(eps, str) and eps_minus is None else "custom"
    label = f"dna:alpha={alpha:g},A={A:g},w_plus={w_plus:g},eps={eps_name},gamma={gamma:g},K={K:g}"
    label += "".join(f",{k}={v:g}" for k, v in sorted(eps_params.items()))
    return TailModel(
        kind=ModelKind.DNA,
        alpha=alpha,
        tail_constant=A,
        nu=SpectralMeasure.two_point(w_plus),
        epsilon=epsilon,
        gamma=gamma,
        eps_bound=K,
        llb=llb,
        label=label,
        params={"eps_name": eps_name, "w_plus": w_plus, "symmetric_eps": eps_minus is None, **eps_params},
    )


def custom_model(
    alpha: float,
    A: float,
    epsilon: EpsilonFn,
    gamma: float,
    K: float,
    nu: SpectralMeasure,
    llb: LocalLowerBound | None = None,
    label: str = "",
    symmetric_eps: bool = False,
) -> TailModel:
    """Polar model with caller-supplied ε, γ and K; γ and K are verified, never inferred."""
    return TailModel(
        kind=ModelKind.CUSTOM,
        alpha=alpha,
        tail_constant=A,
        nu=nu,
        epsilon=epsilon,
        gamma=gamma,
        eps_bound=K,
        llb=llb,
        label=label,
        params={"symmetric_eps": symmetric_eps},
    )


# ---------------------------------------------------------------------------
# Normalization and 1-D CDF
# ---------------------------------------------------------------------------


def sigma_scale(model: TailModel) -> float:
    """σ = (A α / d_α)^{1/α}."""
    return (model.tail_constant * model.alpha / d_alpha(model.alpha)) ** (1.0 / model.alpha)


def omega_shift(model: TailModel, n: int) -> ShiftValue:
    """Centering ω_{n,α}: E X (α > 1), E[X 1{|X| ≤ σn}] (α = 1), 0 (α < 1 or symmetric)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    zero = ShiftValue(np.zeros(model.dim), 0.0)
    if model.alpha < 1.0 or model.is_symmetric:
        return zero
    cutoff = None if model.alpha > 1.0 else model.sigma * n
    dirs, wts = model.nu.nodes()
    total = np.zeros(model.dim)
    err = 0.0
    for theta, w in zip(dirs, wts, strict=True):
        mean, e = model._radial_mean(theta, cutoff)
        total += w * mean * theta
        err += w * e
    logger.debug(f"omega_shift({model.model_id()}, n={n}) = {total}")
    return ShiftValue(total, err)


def dna_cdf(model: TailModel, x: float | np.ndarray) -> float | np.ndarray:
    if model.dim != 1:
        raise DomainError("dna_cdf needs a one-dimensional model")
    x_arr = np.asarray(x, dtype=float)
    w_plus = model.params.get("w_plus", 0.5) if model.kind is ModelKind.DNA else half_weight(model, 1.0)
    w_minus = 1.0 - w_plus
    up = model.conditional_tail(np.abs(x_arr), np.ones((*x_arr.shape, 1)))
    down = model.conditional_tail(np.abs(x_arr), -np.ones((*x_arr.shape, 1)))
    out = np.where(x_arr >= 0.0, 1.0 - w_plus * up, w_minus * down)
    return float(out) if out.ndim == 0 else out


def half_weight(model: TailModel, sign: float) -> float:
    dirs, wts = model.nu.nodes()
    return float(wts[dirs[:, 0] * sign > 0.0].sum())


def witness_volume(llb: LocalLowerBound) -> float:
    dim = llb.center.size
    return sphere_area(dim) * llb.radius**dim / dim


def model_density(model: TailModel, x: np.ndarray) -> np.ndarray:
    """Pointwise Lebesgue density: closed form for Pareto, CDF central differences for 1-D models."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    match model.kind:
        case ModelKind.PARETO:
            return pareto_density(pts, model.alpha)
        case ModelKind.DNA:
            z = pts[:, 0]
            h = 1e-6 * np.maximum(1.0, np.abs(z))
            upper = np.asarray(dna_cdf(model, z + h))
            lower = np.asarray(dna_cdf(model, z - h))
            return (upper - lower) / (2.0 * h)
        case _:
            raise DomainError(f"{model.model_id()} has no pointwise density")
