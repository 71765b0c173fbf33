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

"""Spectral measures, strictly α-stable laws and their generator.

The stable law S_α(ν) has characteristic function
``exp(-∫ ψ_α(<λ, θ>) ν(dθ))`` with

    ψ_α(t) = |t|^α (1 - i sgn(t) tan(πα/2))          α ≠ 1
    ψ_1(t) = |t| (1 + i (2/π) sgn(t) ln|t|)

and generator ``L f(x) = d_α ∫∫ [f(x+rθ) - f(x) - k_α(r) <∇f(x), rθ>] r^{-1-α} dr ν(dθ)``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property, lru_cache
from typing import ClassVar, NamedTuple

import numpy as np

from .exceptions import DomainError, NumericError
from .quadrature import (
    integrate,
    jacobi_rule,
    legendre_rule,
    power_fourier_tail,
    projection_constant,
    sphere_area,
    sphere_integral,
    sphere_rule,
)

logger = logging.getLogger(__name__)

UNIT_TOL = 1e-12
MEAN_ZERO_TOL = 1e-10
DENSITY_MASS_RTOL = 1e-6
SMALL_FREQUENCY = 1e-6

SphereDensity = Callable[[np.ndarray], np.ndarray]


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    return alpha


def psi_alpha(t: float | np.ndarray, alpha: float) -> complex | np.ndarray:
    """ψ_α evaluated elementwise; ψ_α(0) = 0."""
    alpha = check_alpha(alpha)
    t_arr = np.asarray(t, dtype=float)
    mag = np.abs(t_arr)
    sign = np.sign(t_arr)
    if alpha == 1.0:
        log_mag = np.log(np.where(mag > 0.0, mag, 1.0))
        out = mag * (1.0 + 1j * (2.0 / math.pi) * sign * log_mag)
    else:
        out = mag**alpha * (1.0 - 1j * sign * math.tan(math.pi * alpha / 2.0))
    if out.ndim == 0:
        return complex(out)
    return out


def _half_sinc_sq(y: float) -> float:
    # (1 - cos y) / y^2 without cancellation
    return 0.5 * float(np.sinc(y / (2.0 * math.pi))) ** 2


@lru_cache(maxsize=512)
def cosine_tail_integral(alpha: float) -> float:
    """∫_0^∞ (1 - cos y) y^{-1-α} dy, relative error below 1e-10."""
    alpha = check_alpha(alpha)
    head, head_err = integrate(
        _half_sinc_sq, 0.0, 1.0, weight="alg", wvar=(1.0 - alpha, 0.0), what=f"cosine integral head (alpha={alpha})"
    )
    tail_cos, tail_err = power_fourier_tail(1.0, 1.0 + alpha, what=f"cosine integral tail (alpha={alpha})")
    value = head + 1.0 / alpha - tail_cos
    err = head_err + tail_err
    if err > 1e-10 * abs(value):
        raise NumericError(f"d_alpha quadrature for alpha={alpha}", achieved_tolerance=err / abs(value))
    return value


def d_alpha(alpha: float) -> float:
    """d_α = (∫_0^∞ (1 - cos y) / y^{1+α} dy)^{-1}."""
    return 1.0 / cosine_tail_integral(alpha)


@lru_cache(maxsize=512)
def uniform_abs_moment(alpha: float, dim: int) -> float:
    """E|θ₁|^α for θ uniform on S^{dim-1}."""
    if dim == 1:
        return 1.0
    beta = (dim - 3) / 2.0
    value, _ = integrate(
        lambda u: (1.0 + u) ** beta,
        0.0,
        1.0,
        weight="alg",
        wvar=(alpha, beta),
        what=f"uniform sphere moment (alpha={alpha}, d={dim})",
    )
    return 2.0 * projection_constant(dim) * value


# ---------------------------------------------------------------------------
# Registered spectral densities (w.r.t. unnormalized surface measure)
# ---------------------------------------------------------------------------

_DENSITIES: dict[str, Callable[[int], SphereDensity]] = {}


def register_density(name: str) -> Callable[[Callable[[int], SphereDensity]], Callable[[int], SphereDensity]]:
    def deco(factory: Callable[[int], SphereDensity]) -> Callable[[int], SphereDensity]:
        _DENSITIES[name] = factory
        return factory

    return deco


def density_names() -> list[str]:
    return sorted(_DENSITIES)


def get_density(name: str, dim: int) -> SphereDensity:
    try:
        factory = _DENSITIES[name]
    except KeyError as e:
        raise DomainError(f"Unknown spectral density '{name}'. Known: {density_names()}") from e
    return factory(dim)


@register_density("isotropic")
def _isotropic(dim: int) -> SphereDensity:
    area = sphere_area(dim)
    return lambda theta: np.full(np.shape(theta)[:-1], 1.0 / area)


@register_density("cardioid")
def _cardioid(dim: int) -> SphereDensity:
    area = sphere_area(dim)
    return lambda theta: (1.0 + 0.5 * np.asarray(theta)[..., 0]) / area


@register_density("axial")
def _axial(dim: int) -> SphereDensity:
    area = sphere_area(dim)
    return lambda theta: (1.0 + 0.5 * (dim * np.asarray(theta)[..., 0] ** 2 - 1.0)) / area


# ---------------------------------------------------------------------------
# SpectralMeasure
# ---------------------------------------------------------------------------


class MeasureKind(StrEnum):
    ATOMS = "atoms"
    UNIFORM = "uniform"
    DENSITY = "density"


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Finite measure on S^{dim-1} as atoms, the uniform probability, or a density.

    A density is taken w.r.t. the unnormalized surface measure and is never
    renormalized: its integral must match ``total_mass``.
    """

    dim: int
    kind: MeasureKind
    directions: np.ndarray | None = None
    weights: np.ndarray | None = None
    density: SphereDensity | None = None
    density_name: str | None = None
    total_mass: float = 1.0
    quad_nodes: int = 256

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dimension must be >= 1, got {self.dim}")
        match self.kind:
            case MeasureKind.ATOMS:
                self._validate_atoms()
            case MeasureKind.UNIFORM:
                if abs(self.total_mass - 1.0) > UNIT_TOL:
                    raise DomainError("the uniform spectral measure is a probability measure")
            case MeasureKind.DENSITY:
                self._validate_density()

    def _validate_atoms(self) -> None:
        if self.directions is None or self.weights is None:
            raise DomainError("atoms representation needs directions and weights")
        dirs = np.array(self.directions, dtype=float, copy=True).reshape(-1, self.dim)
        wts = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if dirs.shape[0] != wts.shape[0] or dirs.shape[0] == 0:
            raise DomainError(f"{dirs.shape[0]} directions but {wts.shape[0]} weights")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise DomainError(f"atom directions must be unit vectors (max deviation {np.max(np.abs(norms - 1.0)):.3g})")
        if np.any(wts <= 0.0):
            raise DomainError("atom weights must be strictly positive")
        if abs(wts.sum() - self.total_mass) > UNIT_TOL * max(1.0, self.total_mass):
            raise DomainError(f"atom weights sum to {wts.sum():.15g}, declared total mass {self.total_mass}")
        dirs.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "weights", wts)

    def _validate_density(self) -> None:
        if self.density is None:
            raise DomainError("density representation needs a density function")
        values, std_err = sphere_integral(self.density, self.dim, self.quad_nodes)
        mass = float(values) * sphere_area(self.dim)
        tol = DENSITY_MASS_RTOL * self.total_mass + 5.0 * std_err * sphere_area(self.dim)
        if abs(mass - self.total_mass) > tol:
            raise DomainError(
                f"density '{self.density_name}' integrates to {mass:.9g} but total_mass is {self.total_mass}; "
                "densities are never renormalized"
            )

    # -- constructors -------------------------------------------------------

    @classmethod
    def atoms(
        cls,
        directions: Sequence[Sequence[float]] | np.ndarray,
        weights: Sequence[float] | np.ndarray,
        total_mass: float | None = None,
    ) -> SpectralMeasure:
        dirs = np.asarray(directions, dtype=float)
        dim = 1 if dirs.ndim == 1 else dirs.shape[1]
        wts = np.asarray(weights, dtype=float)
        mass = float(wts.sum()) if total_mass is None else float(total_mass)
        return cls(dim=dim, kind=MeasureKind.ATOMS, directions=dirs, weights=wts, total_mass=mass)

    @classmethod
    def two_point(cls, w_plus: float, w_minus: float | None = None) -> SpectralMeasure:
        """ν = w₊δ₊₁ + w₋δ₋₁ on S^0; zero weights are dropped."""
        w_minus = 1.0 - w_plus if w_minus is None else w_minus
        pairs = [(d, w) for d, w in ((1.0, w_plus), (-1.0, w_minus)) if w > 0.0]
        return cls.atoms([[d] for d, _ in pairs], [w for _, w in pairs], total_mass=w_plus + w_minus)

    @classmethod
    def uniform(cls, dim: int) -> SpectralMeasure:
        return cls(dim=dim, kind=MeasureKind.UNIFORM)

    @classmethod
    def from_density(
        cls, dim: int, density: str | SphereDensity, total_mass: float = 1.0, quad_nodes: int = 256
    ) -> SpectralMeasure:
        if isinstance(density, str):
            return cls(
                dim=dim,
                kind=MeasureKind.DENSITY,
                density=get_density(density, dim),
                density_name=density,
                total_mass=total_mass,
                quad_nodes=quad_nodes,
            )
        return cls(dim=dim, kind=MeasureKind.DENSITY, density=density, total_mass=total_mass, quad_nodes=quad_nodes)

    # -- queries ------------------------------------------------------------

    def nodes(self, count: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Directions and weights integrating against ν (weights sum to ν(S))."""
        count = count or self.quad_nodes
        match self.kind:
            case MeasureKind.ATOMS:
                assert self.directions is not None and self.weights is not None
                return self.directions, self.weights
            case MeasureKind.UNIFORM:
                return sphere_rule(self.dim, count)
            case _:
                assert self.density is not None
                dirs, wts = sphere_rule(self.dim, count)
                return dirs, wts * sphere_area(self.dim) * self.density(dirs)

    def integrate(self, func: Callable[[np.ndarray], np.ndarray]) -> tuple[np.ndarray, float]:
        """∫ func(θ) ν(dθ) with its quadrature standard error.

        The error is zero for atoms and d ≤ 3 grids. Continuous measures in d > 3
        use independently scrambled Sobol directions.
        """
        match self.kind:
            case MeasureKind.UNIFORM:
                return sphere_integral(func, self.dim, self.quad_nodes)
            case MeasureKind.DENSITY:
                assert self.density is not None
                density = self.density
                area = sphere_area(self.dim)

                def weighted(dirs: np.ndarray) -> np.ndarray:
                    vals = np.asarray(func(dirs))
                    dens = density(dirs)
                    return vals * dens.reshape(dens.shape + (1,) * (vals.ndim - 1))

                value, std_err = sphere_integral(weighted, self.dim, self.quad_nodes)
                return area * value, area * std_err
            case _:
                dirs, wts = self.nodes()
                return np.tensordot(wts, np.asarray(func(dirs)), axes=(0, 0)), 0.0

    def is_symmetric(self) -> bool:
        match self.kind:
            case MeasureKind.UNIFORM:
                return True
            case MeasureKind.ATOMS:
                assert self.directions is not None and self.weights is not None
                dirs, wts = self.directions, self.weights
                gap = np.linalg.norm(dirs[:, None, :] + dirs[None, :, :], axis=2)
                for j in range(dirs.shape[0]):
                    partners = np.flatnonzero(gap[j] <= 1e-9)
                    if not np.any(np.abs(wts[partners] - wts[j]) <= UNIT_TOL * max(1.0, wts[j])):
                        return False
                return True
            case _:
                assert self.density is not None
                dirs, _ = sphere_rule(self.dim, self.quad_nodes)
                here, there = self.density(dirs), self.density(-dirs)
                return bool(np.all(np.abs(here - there) <= UNIT_TOL * np.maximum(1.0, np.abs(here))))

    def mean_direction(self) -> np.ndarray:
        """∫ θ ν(dθ)."""
        if self.kind is MeasureKind.UNIFORM:
            return np.zeros(self.dim)
        dirs, wts = self.nodes()
        return wts @ dirs

    def atomize(self, count: int | None = None) -> SpectralMeasure:
        """Symmetric atom set (±θ pairs) approximating ν; exact for atoms and for d=1."""
        if self.kind is MeasureKind.ATOMS:
            return self
        count = count or 64 * self.dim
        count += count % 2
        match self.dim:
            case 1:
                half = np.array([[1.0]])
            case 2:
                phi = 2.0 * math.pi * (np.arange(count // 2) + 0.5) / count
                half = np.column_stack([np.cos(phi), np.sin(phi)])
            case 3:
                k = np.arange(count // 2) + 0.5
                z = 1.0 - 2.0 * k / (count // 2)
                phi = math.pi * (3.0 - math.sqrt(5.0)) * k
                s = np.sqrt(1.0 - z**2)
                half = np.column_stack([z, s * np.cos(phi), s * np.sin(phi)])
            case _:
                half, _ = sphere_rule(self.dim, count // 2)
        dirs = np.concatenate([half, -half])
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        if self.kind is MeasureKind.UNIFORM:
            wts = np.full(dirs.shape[0], 1.0 / dirs.shape[0])
        else:
            assert self.density is not None
            wts = self.density(dirs) * sphere_area(self.dim) / dirs.shape[0]
        return SpectralMeasure.atoms(dirs, wts)

    # -- text config --------------------------------------------------------

    def to_config_text(self) -> str:
        match self.kind:
            case MeasureKind.UNIFORM:
                return "uniform"
            case MeasureKind.DENSITY:
                if self.density_name is None:
                    raise DomainError("anonymous densities cannot be serialized; register the density first")
                return f"density:{self.density_name}"
            case _:
                assert self.directions is not None and self.weights is not None
                rows = (
                    " ".join(f"{c:.17g}" for c in theta) + f" {w:.17g}"
                    for theta, w in zip(self.directions, self.weights, strict=True)
                )
                return "\n".join(rows)

    @classmethod
    def from_config_text(cls, text: str, dim: int) -> SpectralMeasure:
        text = text.strip()
        if text == "uniform":
            return cls.uniform(dim)
        if text.startswith("density:"):
            return cls.from_density(dim, text.removeprefix("density:"))
        rows = [row.split() for row in text.replace(";", "\n").splitlines() if row.strip()]
        try:
            values = np.array([[float(v) for v in row] for row in rows])
        except ValueError as e:
            raise DomainError(f"cannot parse atom rows: {e}") from e
        if values.ndim != 2 or values.shape[1] != dim + 1:
            raise DomainError(f"atom rows must have {dim + 1} columns ('θ_1 … θ_d w')")
        return cls.atoms(values[:, :dim], values[:, dim])


# ---------------------------------------------------------------------------
# StableLaw
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StableLaw:
    alpha: float
    nu: SpectralMeasure
    label: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        if self.alpha == 1.0:
            drift = np.linalg.norm(self.nu.mean_direction())
            if drift > MEAN_ZERO_TOL:
                raise DomainError(f"alpha = 1 requires a mean-zero spectral measure (|∫θν(dθ)| = {drift:.3g})")

    @property
    def dim(self) -> int:
        return self.nu.dim

    @cached_property
    def d_alpha(self) -> float:
        return d_alpha(self.alpha)

    @property
    def is_symmetric(self) -> bool:
        return self.nu.is_symmetric()

    def law_id(self) -> str:
        return self.label or f"stable:d={self.dim},alpha={self.alpha:g}"

    def spectral_exponent(self, lam: float | Sequence[float] | np.ndarray) -> complex | np.ndarray:
        """Ψ(λ) = ∫ ψ_α(<λ, θ>) ν(dθ); accepts one vector or a batch of shape (..., d)."""
        lam_arr, single = _as_frequencies(lam, self.dim)
        match self.nu.kind:
            case MeasureKind.UNIFORM:
                mag = np.linalg.norm(lam_arr, axis=-1)
                out = (mag**self.alpha * uniform_abs_moment(self.alpha, self.dim)).astype(complex)
            case _:
                dirs, wts = self.nu.nodes()
                out = np.asarray(psi_alpha(lam_arr @ dirs.T, self.alpha)) @ wts
        return complex(out[0]) if single else out

    def spectral_exponent_with_error(
        self, lam: float | Sequence[float] | np.ndarray
    ) -> tuple[complex | np.ndarray, float]:
        """Ψ(λ) with the quadrature standard error over ν (largest over the batch)."""
        if self.nu.kind is not MeasureKind.DENSITY:
            return self.spectral_exponent(lam), 0.0
        lam_arr, single = _as_frequencies(lam, self.dim)
        out, std_err = self.nu.integrate(lambda dirs: np.asarray(psi_alpha(dirs @ lam_arr.T, self.alpha)))
        return (complex(out[0]) if single else out), std_err

    def cf(self, lam
: float | Sequence[float] | np.ndarray) -> complex | np.ndarray:
        exponent = self.spectral_exponent(lam)
        if isinstance(exponent, complex):
            return complex(np.exp(-exponent))
        return np.exp(-exponent)


def _as_frequencies(lam: float | Sequence[float] | np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(lam, dtype=float)
    if dim == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        arr = arr[..., None]
    if arr.shape[-1] != dim:
        raise DomainError(f"frequency has dimension {arr.shape[-1]}, law has dimension {dim}")
    single = arr.ndim == 1
    return np.atleast_2d(arr), single


def stable_cf(law: StableLaw, lam: float | Sequence[float] | np.ndarray) -> complex | np.ndarray:
    """exp(-∫ ψ_α(<λ, θ>) ν(dθ))."""
    return law.cf(lam)


class CFValue(NamedTuple):
    value: complex | np.ndarray
    std_err: float


def stable_cf_with_error(law: StableLaw, lam: float | Sequence[float] | np.ndarray) -> CFValue:
    """Like :func:`stable_cf` but averages scrambled quadratures for densities in d > 3.

    ``std_err`` bounds the standard error of every entry (|∂e^{-Ψ}/∂Ψ| ≤ 1).
    """
    exponent, err = law.spectral_exponent_with_error(lam)
    value = np.exp(-np.asarray(exponent))
    if err > 0.0:
        logger.debug(f"CF of {law.law_id()} carries quadrature std err {err:.3g}")
    if isinstance(exponent, complex):
        return CFValue(complex(value), err)
    return CFValue(value, err)


def as_point(
x: float | Sequence[float] | np.ndarray, dim: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.shape != (dim,):
        raise DomainError(f"point has shape {arr.shape}, expected ({dim},)")
    return arr


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


class NormCheck(NamedTuple):
    passed: bool
    observed: dict[int, float]
    declared: dict[int, float]


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A function with declared sup norms ‖∇^κ f‖_op,∞ for κ = 0..4 (None if unbounded or unknown)."""

    __test__: ClassVar[bool] = False

    name: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    norms: tuple[float | None, ...]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    directional: Callable[[np.ndarray, np.ndarray, int], float] | None = None
    frequency: np.ndarray | None = None
    phase: float = 0.0
    amplitude: float = 1.0
    kink_radius: float | None = None
    support_radius: float | None = None
    affine: bool = False

    def __call__(self, points: np.ndarray | Sequence[float] | float) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        return self.func(pts)

    def norm(self, order: int) -> float | None:
        return self.norms[order] if order < len(self.norms) else None

    def grad(self, x: np.ndarray) -> np.ndarray:
        if self.gradient is None:
            raise DomainError(f"test function '{self.name}' has no gradient oracle")
        return self.gradient(x)

    @property
    def is_trigonometric(self) -> bool:
        return self.frequency is not None

    @property
    def is_bounded(self) -> bool:
        sup = self.norm(0)
        return sup is not None and math.isfinite(sup)

    @classmethod
    def cosine(
        cls, frequency: float | Sequence[float], phase: float = 0.0, amplitude: float = 1.0, name: str | None = None
    ) -> TestFunction:
        lam = np.atleast_1d(np.asarray(frequency, dtype=float))
        mag = float(np.linalg.norm(lam))

        def func(points: np.ndarray) -> np.ndarray:
            return amplitude * np.cos(points @ lam + phase)

        def gradient(x: np.ndarray) -> np.ndarray:
            return -amplitude * math.sin(float(x @ lam) + phase) * lam

        def directional(x: np.ndarray, v: np.ndarray, order: int) -> float:
            return amplitude * float(v @ lam) ** order * math.cos(float(x @ lam) + phase + order * math.pi / 2.0)

        return cls(
            name=name or f"cos(<{','.join(f'{c:g}' for c in lam)},x>+{phase:g})",
            dim=lam.size,
            func=func,
            norms=tuple(abs(amplitude) * mag**k for k in range(5)),
            gradient=gradient,
            directional=directional,
            frequency=lam,
            phase=phase,
            amplitude=amplitude,
        )

    @classmethod
    def sine(cls, frequency: float | Sequence[float], amplitude: float = 1.0) -> TestFunction:
        lam = np.atleast_1d(np.asarray(frequency, dtype=float))
        name = f"sin(<{','.join(f'{c:g}' for c in lam)},x>)"
        return cls.cosine(lam, phase=-math.pi / 2.0, amplitude=amplitude, name=name)

    @classmethod
    def linear(cls, coefficients: float | Sequence[float]) -> TestFunction:
        c = np.atleast_1d(np.asarray(coefficients, dtype=float))

        def directional(x: np.ndarray, v: np.ndarray, order: int) -> float:
            match order:
                case 0:
                    return float(x @ c)
                case 1:
                    return float(v @ c)
                case _:
                    return 0.0

        return cls(
            name="linear",
            dim=c.size,
            func=lambda points: points @ c,
            norms=(math.inf, float(np.linalg.norm(c)), 0.0, 0.0, 0.0),
            gradient=lambda x: c.copy(),
            directional=directional,
            affine=True,
        )

    @classmethod
    def constant(cls, value: float = 1.0, dim: int = 1) -> TestFunction:
        return cls(
            name=f"const({value:g})",
            dim=dim,
            func=lambda points: np.full(points.shape[:-1], float(value)),
            norms=(abs(value), 0.0, 0.0, 0.0, 0.0),
            gradient=lambda x: np.zeros(dim),
            directional=lambda x, v, order: float(value) if order == 0 else 0.0,
            affine=True,
        )

    @classmethod
    def biweight(cls, dim: int = 1, radius: float = 1.0) -> TestFunction:
        """(1 - |x|²/R²)²₊: bounded, Lipschitz gradient, second derivative jumps on |x| = R."""
        r2 = radius**2

        def func(points: np.ndarray) -> np.ndarray:
            s = np.sum(points**2, axis=-1) / r2
            return np.where(s < 1.0, (1.0 - s) ** 2, 0.0)

        def gradient(x: np.ndarray) -> np.ndarray:
            s = float(x @ x) / r2
            return -4.0 * (1.0 - s) * x / r2 if s < 1.0 else np.zeros(dim)

        def directional(x: np.ndarray, v: np.ndarray, order: int) -> float:
            s = float(x @ x) / r2
            if s >= 1.0:
                return 0.0
            ds = 2.0 * float(x @ v) / r2
            dds = 2.0 * float(v @ v) / r2
            derivatives = (
                (1.0 - s) ** 2,
                -2.0 * (1.0 - s) * ds,
                2.0 * ds**2 - 2.0 * (1.0 - s) * dds,
                6.0 * ds * dds,
                6.0 * dds**2,
            )
            return derivatives[order]

        return cls(
            name=f"biweight(R={radius:g})",
            dim=dim,
            func=func,
            norms=(1.0, 8.0 / (3.0 * math.sqrt(3.0) * radius), 8.0 / r2, None, None),
            gradient=gradient,
            directional=directional,
            kink_radius=radius,
            support_radius=radius,
        )

    @classmethod
    def step(cls, dim: int = 1) -> TestFunction:
        """1{x₁ > 0}: bounded, no derivatives."""
        return cls(
            name="step",
            dim=dim,
            func=lambda points: (points[..., 0] > 0.0).astype(float),
            norms=(1.0, None, None, None, None),
        )


_FD_STEPS = {1: 1e-5, 2: 1e-4, 3: 1e-3, 4: 1e-2}
_FD_STENCILS = {
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
    4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
}


def _fd_directional(f: TestFunction, x: np.ndarray, v: np.ndarray, order: int, h: float) -> float:
    total = sum(c * float(f(x + k * h * v)) for k, c in _FD_STENCILS[order])
    return total / h**order


def check_declared_norms(
    f: TestFunction, probes: int = 100, box: float = 3.0, rng: np.random.Generator | None = None
) -> NormCheck:
    """Compare declared norms with finite-difference directional derivatives at random probes.

    A probe passes when |D_h| ≤ declared + 1e-6 + 2|D_h - D_{2h}|.
    """
    rng = rng or np.random.default_rng(0)
    observed: dict[int, float] = {}
    declared: dict[int, float] = {}
    passed = True
    points = rng.uniform(-box, box, size=(probes, f.dim))
    dirs = rng.standard_normal((probes, f.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for order in range(5):
        bound = f.norm(order)
        if bound is None or not math.isfinite(bound):
            continue
        declared[order] = bound
        worst = 0.0
        for x, v in zip(points, dirs, strict=True):
            if order == 0:
                est, fd_err = abs(float(f(x))), 0.0
            else:
                h = _FD_STEPS[order]
                d_h = _fd_directional(f, x, v, order, h)
                fd_err = abs(d_h - _fd_directional(f, x, v, order, 2.0 * h))
                est = abs(d_h)
            worst = max(worst, est)
            if est > bound + 1e-6 + 2.0 * fd_err:
                logger.warning(f"declared norm of order {order} for {f.name} violated at {x}: {est:.6g} > {bound:.6g}")
                passed = False
        observed[order] = worst
    return NormCheck(passed, observed, declared)


# ---------------------------------------------------------------------------
# Generator L^{α,ν}
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadConfig:
    """Radial Gauss node count, sphere node count and outer truncation radius."""

    radial_nodes: int = 96
    sphere_nodes: int = 256
    r_max: float = 1e4


class GeneratorValue(NamedTuple):
    value: float
    error_bound: float


def _sin_minus_id(u: np.ndarray) -> np.ndarray:
    small = np.abs(u) < 1e-2
    series = -(u**3) / 6.0 + u**5 / 120.0 - u**7 / 5040.0
    return np.where(small, series, np.sin(u) - u)


@lru_cache(maxsize=4096)
def _cos_radial(s_abs: float, alpha: float, nodes: int) -> tuple[float, float]:
    """∫_0^∞ (cos(rs) - 1) r^{-1-α} dr and its error estimate."""
    if s_abs == 0.0:
        return 0.0, 0.0
    if s_abs < SMALL_FREQUENCY:
        # exact scaling in s
        value, err = _cos_radial(1.0, alpha, nodes)
        return value * s_abs**alpha, err * s_abs**alpha
    r, w = jacobi_rule(nodes, 1.0 - alpha)
    inner = float(w @ (-2.0 * np.sin(0.5 * r * s_abs) ** 2 / r**2))
    outer, err = power_fourier_tail(1.0, 1.0 + alpha, s_abs, "cos", what="generator cosine tail")
    return inner + outer - 1.0 / alpha, err


@lru_cache(maxsize=4096)
def _sin_radial(s_abs: float, alpha: float, nodes: int) -> tuple[float, float]:
    """∫_0^∞ (sin(rs) - k_α(r) rs) r^{-1-α} dr for s ≥ 0."""
    if s_abs == 0.0:
        return 0.0, 0.0
    if s_abs < SMALL_FREQUENCY:
        value, err = _sin_radial(1.0, alpha, nodes)
        if alpha == 1.0:
            return s_abs * (value - math.log(s_abs)), s_abs * err
        return value * s_abs**alpha, err * s_abs**alpha
    if alpha >= 1.0:
        r, w = jacobi_rule(nodes, 1.0 - alpha)
        inner = float(w @ (_sin_minus_id(r * s_abs) / r**2))
    else:
        r, w = jacobi_rule(nodes, -alpha)
        inner = float(w @ (np.sin(r * s_abs) / r))
    outer, err = power_fourier_tail(1.0, 1.0 + alpha, s_abs, "sin", what="generator sine tail")
    if alpha > 1.0:
        outer -= s_abs / (alpha - 1.0)
    return inner + outer, err


def _ray_breakpoints(x: np.ndarray, theta: np.ndarray, radius: float | None) -> list[float]:
    """Positive r with |x + rθ| = radius."""
    if radius is None:
        return []
    b = float(x @ theta)
    c = float(x @ x) - radius**2
    disc = b * b - c
    if disc <= 0.0:
        return []
    root = math.sqrt(disc)
    return sorted(r for r in (-b - root, -b + root) if r > 1e-14)


def _inner_radial(h: Callable[[np.ndarray], np.ndarray], breaks: list[float], alpha: float, nodes: int) -> float:
    """∫_0^1 h(r) r^{-1-α} dr with Gauss-Jacobi on the first segment and Gauss-Legendre after each break."""
    power, div = (1.0 - alpha, 2) if alpha >= 1.0 else (-alpha, 1)
    edges = [0.0, *(b for b in breaks if b < 1.0), 1.0]
    t, w = jacobi_rule(nodes, power)
    first = edges[1]
    r = first * t
    total = first ** (power + 1.0) * float(w @ (h(r) / r**div))
    u, wu = legendre_rule(nodes)
    for lo, hi in zip(edges[1:-1], edges[2:], strict=True):
        r = lo + (hi - lo) * u
        total += (hi - lo) * float(wu @ (h(r) * r ** (-1.0 - alpha)))
    return total


def _trig_generator(law: StableLaw, f: TestFunction, x: np.ndarray, quad: QuadConfig) -> tuple[float, float]:
    assert f.frequency is not None
    dirs, wts = law.nu.nodes(quad.sphere_nodes)
    s = dirs @ f.frequency
    z = float(x @ f.frequency) + f.phase
    total, err = 0.0, 0.0
    for s_k, w_k in zip(s, wts, strict=True):
        c_val, c_err = _cos_radial(abs(float(s_k)), law.alpha, quad.radial_nodes)
        s_val, s_err = _sin_radial(abs(float(s_k)), law.alpha, quad.radial_nodes)
        s_val *= math.copysign(1.0, s_k)
        total += w_k * (math.cos(z) * c_val - math.sin(z) * s_val)
        err += w_k * (c_err + s_err)
    return f.amplitude * total, abs(f.amplitude) * err


def _general_generator(law: StableLaw, f: TestFunction, x: np.ndarray, quad: QuadConfig) -> tuple[float, float]:
    alpha = law.alpha
    if alpha <= 1.0 and not f.is_bounded:
        raise DomainError(f"the generator of an unbounded function is undefined for alpha={alpha}")
    if not f.is_bounded and not f.affine:
        raise DomainError(f"test function '{f.name}' must be bounded or affine")
    grad = f.grad(x) if alpha >= 1.0 else np.zeros(law.dim)
    fx = float(f(x))
    dirs, wts = law.nu.nodes(quad.sphere_nodes)
    r_out = max(1.0, float(np.linalg.norm(x)) + f.support_radius) if f.support_radius is not None else quad.r_max
    total, quad_err = 0.0, 0.0
    for theta, w_k in zip(dirs, wts, strict=True):
        g_theta = float(grad @ theta)
        breaks = _ray_breakpoints(x, theta, f.kink_radius)

        def h(r: np.ndarray, theta: np.ndarray = theta, g_theta: float = g_theta) -> np.ndarray:
            return f(x + r[:, None] * theta) - fx - r * g_theta

        inner = _inner_radial(h, breaks, alpha, quad.radial_nodes)
        if f.affine:
            outer = 0.0
        else:
            outer_points = [b for b in breaks if 1.0 < b < r_out]
            main, err = (0.0, 0.0)
            if r_out > 1.0:
                main, err = integrate(
                    lambda r, theta=theta: float(f(x + r * theta)) * r ** (-1.0 - alpha),
                    1.0,
                    r_out,
                    points=outer_points,
                    what=f"generator outer integral for {f.name}",
                    epsabs=1e-12,
                    epsrel=1e-10,
                    max_error=1e-8,
                )
            outer = main - fx / alpha - (g_theta / (alpha - 1.0) if alpha > 1.0 else 0.0)
            quad_err += w_k * err
        total += w_k * (inner + outer)
    if f.affine or f.support_radius is not None:
        truncation = 0.0
    else:
        sup = f.norm(0) or 0.0
        truncation = 2.0 * sup * law.d_alpha * law.nu.total_mass * quad.r_max ** (-alpha) / alpha
    return total, law.d_alpha * quad_err + truncation


def generator_apply(
    law: StableLaw, f: TestFunction, x: float | Sequence[float] | np.ndarray, quad: QuadConfig | None = None
) -> GeneratorValue:
    """L^{α,ν} f(x) by radial Gauss-Jacobi quadrature near the origin and QUADPACK beyond r = 1.

    Trigonometric functions integrate the outer radial pieces to infinity with
    Fourier-weighted quadrature; other bounded functions are truncated at
    ``quad.r_max`` (or at their support) and report the truncation bound.
    """
    quad = quad or QuadConfig()
    point = as_point(x, law.dim)
    if f.dim != law.dim:
        raise DomainError(f"test function dimension {f.dim} != law dimension {law.dim}")
    if f.is_trigonometric:
        value, err = _trig_generator(law, f, point, quad)
        return GeneratorValue(law.d_alpha * value, law.d_alpha * err)
    value, bound = _general_generator(law, f, point, quad)
    return GeneratorValue(law.d_alpha * value, bound)
