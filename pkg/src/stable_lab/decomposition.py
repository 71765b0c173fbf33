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

"""Mixture decompositions of a source law and their statistical certification.

Light: X = χ·U + (1-χ)·X̂ with χ ~ Bernoulli(p), X̂ a smooth bump on the witness
ball. Heavy: X = ζ·V + (1-ζ)·X̃ with ζ ~ Bernoulli(q), X̃ a thinned copy of X
with the lighter tail index α̃.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
from scipy import stats

from .exceptions import DegenerateDecompositionError, DomainError, WitnessInvalidError
from .quadrature import integrate, sphere_area
from .samplers import RngStream, model_draw
from .tail_models import LocalLowerBound, TailModel, model_density

logger = logging.getLogger(__name__)

MIN_CERTIFY_SAMPLES = 100_000
MIN_CELL_COUNT = 10
SIGNIFICANCE = 0.01

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def bump_normalizer(a: float | Sequence[float] | np.ndarray, tau: float) -> float:
    """c = (∫_{B(a,τ)} exp(-1/(τ² - |z-a|²)) dz)^{-1}; independent of a."""
    if tau <= 0.0:
        raise DomainError(f"bump radius must be positive, got {tau}")
    dim = np.atleast_1d(np.asarray(a, dtype=float)).size
    t2 = tau * tau

    def radial(r: float) -> float:
        gap = t2 - r * r
        return math.exp(-1.0 / gap) * r ** (dim - 1) if gap > 0.0 else 0.0

    value, err = integrate(radial, 0.0, tau, what=f"bump mass (tau={tau}, d={dim})", epsabs=0.0, epsrel=1e-10)
    mass = sphere_area(dim) * value
    logger.debug(f"bump mass {mass:.12g} (abs err {err * sphere_area(dim):.2g})")
    return 1.0 / mass


def _uniform_ball(rng: np.random.Generator, size: int, center: np.ndarray, radius: float) -> np.ndarray:
    dim = center.size
    z = rng.standard_normal((size, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return center + radius * rng.random(size)[:, None] ** (1.0 / dim) * z


def _rejection(
    propose: Sampler, accept: Callable[[np.ndarray], np.ndarray], rng: np.random.Generator, size: int, rate: float
) -> np.ndarray:
    """Draw ``size`` points from ``propose`` kept with probability ``accept``."""
    chunks: list[np.ndarray] = []
    kept = 0
    while kept < size:
        batch = propose(rng, max(64, int(1.2 * (size - kept) / max(rate, 1e-6))))
        keep = rng.random(batch.shape[0]) < accept(batch)
        chunks.append(batch[keep])
        kept += int(keep.sum())
    return np.concatenate(chunks)[:size]


# ---------------------------------------------------------------------------
# Light decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LightDecomposition:
    p: float
    center: np.ndarray
    tau: float
    c: float
    eps0: float
    source: TailModel

    @property
    def mixing_weight(self) -> float:
        """Probability of drawing U."""
        return self.p

    def bump_density(self, x: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        gap = self.tau**2 - np.sum((pts - self.center) ** 2, axis=1)
        safe = np.where(gap > 0.0, gap, 1.0)
        return np.where(gap > 0.0, self.c * np.exp(-1.0 / safe), 0.0)

    def u_acceptance(self, x: np.ndarray) -> np.ndarray:
        """1 - (1-p) p_X̂(x) / p_μ(x), evaluated only where the bump is positive."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        bump = self.bump_density(pts)
        out = np.ones(pts.shape[0])
        inside = bump > 0.0
        if np.any(inside):
            out[inside] = 1.0 - (1.0 - self.p) * bump[inside] / model_density(self.source, pts[inside])
        if np.any(out < 0.0):
            raise WitnessInvalidError(
                f"U acceptance {float(out.min()):.3g} < 0 for {self.source.model_id()}; "
                f"eps0 = {self.eps0} is too large",
                details={"eps0": self.eps0},
            )
        return out

    def sample_xhat(self, rng: np.random.Generator, size: int) -> np.ndarray:
        peak = math.exp(-1.0 / self.tau**2)
        return _rejection(
            lambda g, k: _uniform_ball(g, k, self.center, self.tau),
            lambda pts: self.bump_density(pts) / (self.c * peak),
            rng,
            size,
            rate=0.05,
        )

    def sample_u(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return _rejection(lambda g, k: model_draw(self.source, g, k), self.u_acceptance, rng, size, rate=self.p)

    def sample_mixture(self, rng: np.random.Generator, size: int, weight: float | None = None) -> np.ndarray:
        weight = self.p if weight is None else weight
        n_u = int(rng.binomial(size, weight))
        points = np.concatenate([self.sample_u(rng, n_u), self.sample_xhat(rng, size - n_u)])
        return points[rng.permutation(size)]


def light_decompose(model: TailModel, witness: LocalLowerBound | None = None, probes: int = 4096) -> LightDecomposition:
    """p = 1 - ε₀/c with the bump centered on the local lower-bound witness."""
    witness = witness or model.llb
    if witness is None:
        raise DomainError(f"{model.model_id()} has no local lower-bound witness")
    c = bump_normalizer(witness.center, witness.radius)
    p = 1.0 - witness.eps0 / c
    if not 0.0 < p < 1.0:
        raise WitnessInvalidError(f"mixture weight p = {p:.6g} is outside (0, 1)")
    decomp = LightDecomposition(p, witness.center, witness.radius, c, witness.eps0, model)
    grid = _uniform_ball(np.random.default_rng(0), probes, witness.center, witness.radius)
    decomp.u_acceptance(grid)
    logger.info(f"light decomposition of {model.model_id()}: p = {p:.9f}, c = {c:.6g}")
    return decomp


# ---------------------------------------------------------------------------
# Heavy decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HeavyDecomposition:
    q: float
    alpha_tilde: float
    A_tilde: float
    eps_tilde_bound: float
    source: TailModel
    q_std_err: float = 0.0

    @property
    def mixing_weight(self) -> float:
        """Probability of drawing V."""
        return self.q

    def thinning_weight(self, x: np.ndarray) -> np.ndarray:
        """|x|^{α-α̃} ∧ 1."""
        mag = np.linalg.norm(np.atleast_2d(x), axis=1)
        return np.where(mag > 1.0, np.where(mag > 1.0, mag, 1.0) ** (self.source.alpha - self.alpha_tilde), 1.0)

    def sample_xtilde(self, rng: np.random.Generator, size: int) -> np.ndarray:
        def draw(g: np.random.Generator, k: int) -> np.ndarray:
            return model_draw(self.source, g, k)

        return _rejection(draw, self.thinning_weight, rng, size, rate=1.0 - self.q)

    def sample_v(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return _rejection(
            lambda g, k: model_draw(self.source, g, k), lambda x: 1.0 - self.thinning_weight(x), rng, size, rate=self.q
        )

    def sample_mixture(self, rng: np.random.Generator, size: int, weight: float | None = None) -> np.ndarray:
        weight = self.q if weight is None else weight
        n_v = int(rng.binomial(size, weight))
        points = np.concatenate([self.sample_v(rng, n_v), self.sample_xtilde(rng, size - n_v)])
        return points[rng.permutation(size)]


def heavy_decompose(
    model: TailModel,
    alpha_tilde: float,
    method: str = "quadrature",
    stream: RngStream | None = None,
    samples: int = 10**6,
) -> HeavyDecomposition:
    """q = 1 - E[|X|^{α-α̃} ∧ 1], Ã = Aα/((1-q)α̃) and the tail remainder bound K̃."""
    alpha = model.alpha
    if not alpha < alpha_tilde < 2.0:
        raise DomainError(f"alpha_tilde must lie in ({alpha}, 2), got {alpha_tilde}")
    gap = alpha_tilde - alpha
    std_err = 0.0
    match method:
        case "quadrature":
            value, _ = integrate(
                lambda r: r ** (-gap - 1.0) * model.tail_probability(r),
                1.0,
                math.inf,
                what=f"thinning mass of {model.model_id()}",
                epsabs=1e-12,
                epsrel=1e-10,
                max_error=1e-8,
            )
            q = gap * value
        case "monte_carlo":
            stream = stream or RngStream(0)
            draws = model_draw(model, stream.generator(0), samples)
            mag = np.linalg.norm(draws, axis=1)
            lost = 1.0 - np.where(mag > 1.0, np.where(mag > 1.0, mag, 1.0) ** -gap, 1.0)
            q = float(lost.mean())
            std_err = float(lost.std(ddof=1)) / math.sqrt(samples)
        case _:
            raise DomainError(f"unknown method '{method}' (quadrature or monte_carlo)")
    if not 1e-12 < q < 1.0 - 1e-12:
        raise DegenerateDecompositionError(f"mixture weight q = {q:.3g} is numerically degenerate")
    A = model.tail_constant
    A_tilde = A * alpha / ((1.0 - q) * alpha_tilde)
    gamma = model.gamma
    if math.isinf(gamma):
        remainder = model.eps_bound / (1.0 - q)
    else:
        remainder = model.eps_bound * (gamma + 2.0 * alpha_tilde - alpha) / ((1.0 - q) * (gamma + alpha_tilde))
    K_tilde = 2.0 * A / (1.0 - q) + remainder
    logger.info(f"heavy decomposition of {model.model_id()}: q = {q:.9f}, A~ = {A_tilde:.6g}, K~ = {K_tilde:.6g}")
    return HeavyDecomposition(q, alpha_tilde, A_tilde, K_tilde, model, std_err)


class HeavyTailRow(NamedTuple):
    radius: float
    scaled_tail: float
    std_err: float
    allowance: float
    passed: bool


def heavy_tail_check(
    decomp: HeavyDecomposition, stream: RngStream, samples: int = 10**6, radii: Sequence[float] = (2.0, 5.0, 10.0, 20.0)
) -> list[HeavyTailRow]:
    """r^{α̃} P̂(|X̃| ≥ r) ∈ Ã ± (K̃ (1 ∧ r^{-γ}) + 3 s.e.)."""
    draws = decomp.sample_xtilde(stream.generator(3), samples)
    mag = np.linalg.norm(draws, axis=1)
    gamma = decomp.source.gamma
    rows = []
    for r in radii:
        prob = float(np.mean(mag >= r))
        scale = r**decomp.alpha_tilde
        se = scale * math.sqrt(prob * (1.0 - prob) / samples)
        decay = 0.0 if math.isinf(gamma) else min(1.0, r**-gamma)
        allowance = decomp.eps_tilde_bound * decay + 3.0 * se
        rows.append(HeavyTailRow(r, scale * prob, se, allowance, abs(scale * prob - decomp.A_tilde) <= allowance))
    return rows


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Partition:
    """Product of per-axis bins inside [-cutoff, cutoff]^d plus one overflow cell."""

    edges: tuple[np.ndarray, ...]
    cutoff: float

    @property
    def dim(self) -> int:
        return len(self.edges)

    @property
    def cells(self) -> int:
        return math.prod(e.size - 1 for e in self.edges) + 1

    @classmethod
    def uniform(cls, dim: int, cutoff: float, bins_per_axis: int = 64) -> Partition:
        axis = np.linspace(-cutoff, cutoff, bins_per_axis + 1)
        return cls(tuple(axis for _ in range(dim)), cutoff)

    @classmethod
    def from_quantiles(cls, reference: np.ndarray, bins_per_axis: int = 64, coverage: float = 0.99) -> Partition:
        pts = np.atleast_2d(reference)
        pts = pts.T if pts.shape[0] == 1 and pts.shape[1] > 1 else pts
        cutoff = float(np.quantile(np.linalg.norm(pts, axis=1), coverage))
        edges = []
        for axis in range(pts.shape[1]):
            inner = pts[np.abs(pts[:, axis]) <= cutoff, axis]
            qs = np.quantile(inner, np.linspace(0.0, 1.0, bins_per_axis + 1))
            qs[0], qs[-1] = -cutoff, cutoff
            edges.append(np.unique(qs))
        return cls(tuple(edges), cutoff)

    def assign(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        overflow = np.linalg.norm(pts, axis=1) > self.cutoff
        index = np.zeros(pts.shape[0], dtype=np.int64)
        for axis, edges in enumerate(self.edges):
            k = np.clip(np.searchsorted(edges, pts[:, axis], side="right") - 1, 0, edges.size - 2)
            overflow |= (pts[:, axis] < edges[0]) | (pts[:, axis] > edges[-1])
            index = index * (edges.size - 1) + k
        return np.where(overflow, self.cells - 1, index)

    def describe(self) -> dict[str, Any]:
        return {"bins_per_axis": [int(e.size - 1) for e in self.edges], "cutoff": self.cutoff, "overflow": True}


@dataclass
class TestReport:
    __test__ = False

    statistic: float
    dof: int
    p_value: float
    passed: bool
    n_samples: int
    partition: dict[str, Any] = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)
    label: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self, path: str | Path) -> Path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return out


def two_sample_chi2(first: np.ndarray, second: np.ndarray, partition: Partition, label: str = "") -> TestReport:
    """χ² homogeneity test; cells with fewer than 10 pooled counts join the overflow cell."""
    cells = partition.cells
    a = np.bincount(partition.assign(first), minlength=cells).astype(float)
    b = np.bincount(partition.assign(second), minlength=cells).astype(float)
    sparse = (a + b) < MIN_CELL_COUNT
    sparse[-1] = False
    a[-1] += a[sparse].sum()
    b[-1] += b[sparse].sum()
    keep = ~sparse & ((a + b) > 0.0)
    table = np.vstack([a[keep], b[keep]])
    collapsed = int(sparse.sum())
    if collapsed:
        logger.warning(f"collapsed {collapsed} sparse cell(s) into the overflow cell")
    if table.shape[1] < 2:
        raise DomainError("partition has fewer than two populated cells")
    result = stats.chi2_contingency(table, correction=False)
    p_value = float(result.pvalue)
    layout = partition.describe() | {"collapsed_cells": collapsed, "used_cells": int(table.shape[1])}
    return TestReport(
        statistic=float(result.statistic),
        dof=int(result.dof),
        p_value=p_value,
        passed=p_value > SIGNIFICANCE,
        n_samples=int(min(len(first), len(second))),
        partition=layout,
        label=label,
    )


def certify_mixture(
    decomp: LightDecomposition | HeavyDecomposition,
    n_samples: int,
    bins: Partition | None = None,
    stream: RngStream | None = None,
    weight_shift: float = 0.0,
) -> TestReport:
    """Two-sample χ² of mixture draws against direct model draws (passes iff p-value > 0.01).

    ``weight_shift`` perturbs only the Bernoulli switch (p+δ, or p-δ when p+δ > 1).
    """
    if n_samples < MIN_CERTIFY_SAMPLES:
        raise DomainError(f"certification needs at least {MIN_CERTIFY_SAMPLES} samples, got {n_samples}")
    stream = stream or RngStream(0)
    weight = decomp.mixing_weight
    if weight_shift:
        weight = weight + weight_shift if weight + weight_shift <= 1.0 else weight - weight_shift
    mixture = decomp.sample_mixture(stream.generator(0), n_samples, weight)
    direct = model_draw(decomp.source, stream.generator(1), n_samples)
    partition = bins or Partition.from_quantiles(model_draw(decomp.source, stream.generator(2), n_samples))
    kind = "light" if isinstance(decomp, LightDecomposition) else "heavy"
    report = two_sample_chi2(mixture, direct, partition, label=f"{kind}:{decomp.source.model_id()}")
    report.seeds = {"master_seed": stream.master_seed, "stream": stream.stream_id}
    logger.info(f"{report.label}: chi2 = {report.statistic:.2f}, dof = {report.dof}, p = {report.p_value:.4f}")
    return report
