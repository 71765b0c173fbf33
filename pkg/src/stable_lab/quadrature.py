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

"""Quadrature building blocks shared by the numerical modules.

Adaptive QUADPACK calls go through :func:`integrate`, which promotes SciPy
integration warnings to :class:`NumericError`. Fixed-node rules are cached per
(node count, weight exponent) and returned read-only.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable, Sequence
from functools import lru_cache

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special
from scipy.stats import qmc

from .exceptions import DomainError, NumericError

logger = logging.getLogger(__name__)

DEFAULT_EPSABS = 1e-13
DEFAULT_EPSREL = 1e-11
DEFAULT_LIMIT = 400


def integrate(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    what: str,
    epsabs: float = DEFAULT_EPSABS,
    epsrel: float = DEFAULT_EPSREL,
    limit: int = DEFAULT_LIMIT,
    weight: str | None = None,
    wvar: float | tuple[float, float] | None = None,
    points: Sequence[float] | None = None,
    max_error: float | None = None,
    limlst: int | None = None,
) -> tuple[float, float]:
    """Run ``scipy.integrate.quad`` and return ``(value, abs_error)``.

    Raises NumericError if QUADPACK warns or the error estimate exceeds
    ``max_error`` (default: ``max(epsabs, epsrel * |value|) * 100``).
    """
    kwargs: dict = {"epsabs": epsabs, "epsrel": epsrel, "limit": limit}
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar
    if points is not None and len(points) > 0:
        kwargs["points"] = sorted(points)
    if limlst is not None:
        kwargs["limlst"] = limlst
    with warnings.catch_warnings():
        warnings.simplefilter("error", sp_integrate.IntegrationWarning)
        try:
            value, err = sp_integrate.quad(func, a, b, **kwargs)
        except sp_integrate.IntegrationWarning as e:
            logger.debug(f"quad warning while integrating {what}: {e}")
            raise NumericError(f"Quadrature did not converge for {what}: {e}") from e
    limit_err = max_error if max_error is not None else 100.0 * max(epsabs, epsrel * abs(value))
    if not math.isfinite(value) or err > limit_err:
        raise NumericError(f"Quadrature did not converge for {what}", achieved_tolerance=err)
    return float(value), float(err)


def power_fourier_tail(
    a: float, power: float, omega: float = 1.0, kind: str = "cos", *, what: str, parts: int = 2
) -> tuple[float, float]:
    """``∫_a^∞ y^{-power} cos(ωy) dy`` (or ``sin``) for a, power, ω > 0.

    After z = ωy the range [ωa, π] goes to a finite Fourier-weighted rule and the
    rest is integrated by parts ``parts`` times, so the infinite-range rule only
    sees z^{-power-parts} and converges in a few cycles.
    """
    if a <= 0.0 or omega <= 0.0 or power <= 0.0:
        raise DomainError(f"need a, power, omega > 0, got a={a}, power={power}, omega={omega}")
    if kind not in ("cos", "sin"):
        raise DomainError(f"kind must be 'cos' or 'sin', got '{kind}'")
    low = omega * a
    start = max(low, math.pi)
    total, err = 0.0, 0.0
    if start > low:
        total, err = integrate(lambda z: z**-power, low, start, weight=kind, wvar=1.0, what=f"{what} (head)")
    coef, q, trig = 1.0, power, kind
    for _ in range(parts):
        if trig == "cos":
            total -= coef * start**-q * math.sin(start)
            coef, trig = coef * q, "sin"
        else:
            total += coef * start**-q * math.cos(start)
            coef, trig = -coef * q, "cos"
        q += 1.0
    rest, rest_err = integrate(
        lambda z: z**-q, start, math.inf, weight=trig, wvar=1.0, what=f"{what} (tail)", epsabs=1e-12, limlst=200
    )
    scale = omega ** (power - 1.0)
    return scale * (total + coef * rest), scale * (err + abs(coef) * rest_err)


@lru_cache(maxsize=64)
def jacobi_rule(nodes: int, power: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi rule for ``∫_0^1 g(r) r^power dr`` (power > -1)."""
    if power <= -1.0:
        raise DomainError(f"Jacobi weight exponent must exceed -1, got {power}")
    x, w = special.roots_jacobi(nodes, 0.0, power)
    r = 0.5 * (1.0 + x)
    weights = w * 2.0 ** (-power - 1.0)
    r.setflags(write=False)
    weights.setflags(write=False)
    return r, weights


@lru_cache(maxsize=64)
def legendre_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * (1.0 + x)
    weights = 0.5 * w
    r.setflags(write=False)
    weights.setflags(write=False)
    return r, weights


def sphere_area(dim: int) -> float:
    """Surface measure of S^{dim-1}; counting measure (2) on S^0."""
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim}")
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def projection_constant(dim: int) -> float:
    """Normalizer of the density (1-u^2)^{(d-3)/2} of θ₁ under the uniform law on S^{d-1}."""
    return math.gamma(dim / 2.0) / (math.sqrt(math.pi) * math.gamma((dim - 1) / 2.0))


@lru_cache(maxsize=32)
def sphere_rule(dim: int, count: int, replicate: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights (summing to 1) for the normalized surface measure on S^{dim-1}.

    d=1 uses the two points ±1, d=2 uniform angles, d=3 a Gauss-Legendre(cos polar)
    by uniform-azimuth product grid with about ``count`` nodes, d>3 scrambled Sobol
    directions (``replicate`` selects the scramble).
    """
    match dim:
        case 1:
            nodes = np.array([[1.0], [-1.0]])
            weights = np.array([0.5, 0.5])
        case 2:
            phi = 2.0 * math.pi * (np.arange(count) + 0.5) / count
            nodes = np.column_stack([np.cos(phi), np.sin(phi)])
            weights = np.full(count, 1.0 / count)
        case 3:
            n_polar = max(4, int(round(math.sqrt(count / 2.0))))
            n_azimuth = 2 * n_polar
            u, wu = np.polynomial.legendre.leggauss(n_polar)
            phi = 2.0 * math.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
            uu, pp = np.meshgrid(u, phi, indexing="ij")
            s = np.sqrt(1.0 - uu**2)
            nodes = np.column_stack([uu.ravel(), (s * np.cos(pp)).ravel(), (s * np.sin(pp)).ravel()])
            weights = (np.repeat(wu, n_azimuth) / 2.0) / n_azimuth
        case _:
            m = max(4, int(math.ceil(math.log2(max(count, 16)))))
            sobol = qmc.Sobol(d=dim, scramble=True, rng=np.random.default_rng(replicate))
            z = special.ndtri(np.clip(sobol.random_base2(m), 1e-12, 1 - 1e-12))
            nodes = z / np.linalg.norm(z, axis=1, keepdims=True)
            weights = np.full(nodes.shape[0], 1.0 / nodes.shape[0])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def sphere_integral(
    func: Callable[[np.ndarray], np.ndarray], dim: int, count: int = 256, replicates: int = 8
) -> tuple[np.ndarray, float]:
    """Integrate ``func`` against the normalized surface measure; returns ``(value, std_err)``.

    ``func`` maps nodes of shape (k, d) to values of shape (k, ...). The standard
    error is zero for the deterministic grids and comes from independent scrambles
    for d > 3.
    """
    if dim <= 3:
        nodes, weights = sphere_rule(dim, count)
        return np.tensordot(weights, func(nodes), axes=(0, 0)), 0.0
    estimates = []
    for rep in range(replicates):
        nodes, weights = sphere_rule(dim, count, rep)
        estimates.append(np.tensordot(weights, func(nodes), axes=(0, 0)))
    stacked = np.asarray(estimates)
    std_err = float(np.max(np.abs(stacked.std(axis=0, ddof=1)))) / math.sqrt(replicates)
    return stacked.mean(axis=0), std_err
