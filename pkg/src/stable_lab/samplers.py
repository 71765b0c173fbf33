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

"""Random generation: strictly stable variates, source-model draws and normalized sums.

All randomness flows from :class:`RngStream`; a batch is a pure function of
(master seed, stream id, shard index), never of the worker count.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from .exceptions import CalibrationError, DomainError
from .parallel import run_sharded
from .quadrature import sphere_rule
from .spectral_core import MeasureKind, SpectralMeasure, StableLaw, check_alpha, stable_cf_with_error
from .tail_models import LocalLowerBound, ModelKind, TailModel, half_weight

logger = logging.getLogger(__name__)

SHARD_BUDGET = 2**22
CF_PROBE_NORMS = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class RngStream:
    """Named sub-stream of a master seed; shard ``k`` gets its own PCG64 generator."""

    master_seed: int
    stream_id: int = 0

    def generator(self, shard: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_id, shard))
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, stream_id: int) -> RngStream:
        return RngStream(self.master_seed, stream_id)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    dim: int
    points: np.ndarray
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.dim)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_csv(self, path: str | Path) -> Path:
        from .artifacts import write_points_csv

        return write_points_csv(path, self.points, self.provenance)


# ---------------------------------------------------------------------------
# Strictly stable variates
# ---------------------------------------------------------------------------


def _cms(alpha: float, beta: float, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
    """Chambers-Mallows-Stuck draw with CF exp(-ψ) for ψ(λ) = |λ|^α(1 - iβ sgn λ tan(πα/2)) (α ≠ 1)
    or |λ|(1 + iβ(2/π) sgn λ ln|λ|) (α = 1).

    These are exactly w₊ψ_α(λ) + w₋ψ_α(-λ) with β = w₊ - w₋ and w₊ + w₋ = 1.
    """
    v = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size)
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        half_pi_bv = math.pi / 2.0 + beta * v
        return (2.0 / math.pi) * (half_pi_bv * np.tan(v) - beta * np.log((math.pi / 2.0) * w * np.cos(v) / half_pi_bv))
    zeta = beta * math.tan(math.pi * alpha / 2.0)
    shift = math.atan(zeta) / alpha
    scale = (1.0 + zeta**2) ** (1.0 / (2.0 * alpha))
    shifted = alpha * (v + shift)
    return (
        scale
        * np.sin(shifted)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - shifted) / w) ** ((1.0 - alpha) / alpha)
    )


def stable_1d(
    alpha: float,
    skew_weights: tuple[float, float] = (0.5, 0.5),
    rng: np.random.Generator | None = None,
    size: int | None = None,
) -> float | np.ndarray:
    """Variate(s) with CF exp(-w₊ψ_α(λ) - w₋ψ_α(-λ))."""
    alpha = check_alpha(alpha)
    w_plus, w_minus = skew_weights
    if w_plus < 0.0 or w_minus < 0.0 or abs(w_plus + w_minus - 1.0) > 1e-12:
        raise DomainError(f"skew weights must be non-negative and sum to 1, got {skew_weights}")
    if alpha == 1.0 and abs(w_plus - w_minus) > 1e-12:
        raise DomainError("alpha = 1 needs w_plus = w_minus (mean-zero spectral measure)")
    rng = rng or np.random.default_rng()
    draws = _cms(alpha, w_plus - w_minus, rng, 1 if size is None else size)
    return float(draws[0]) if size is None else draws


def _rows_per_chunk(width: int) -> int:
    return max(1, SHARD_BUDGET // max(1, width))


def stable_multivariate(
    law: StableLaw,
    rng: np.random.Generator | None = None,
    size: int | None = None,
    atoms: int | None = None,
) -> np.ndarray:
    """Y = Σ_j w_j^{1/α} Z_j θ_j (+ (2/π) Σ_j w_j ln w_j θ_j when α = 1), Z_j one-sided S_α.

    Uniform and density measures are replaced by a calibrated symmetric atom set
    (64·d atoms unless ``atoms`` is given).
    """
    rng = rng or np.random.default_rng()
    count = 1 if size is None else size
    alpha = law.alpha
    if law.dim == 1:
        dirs, wts = law.nu.nodes()
        w_plus = float(wts[dirs[:, 0] > 0.0].sum())
        w_minus = float(wts[dirs[:, 0] < 0.0].sum())
        mass = w_plus + w_minus
        draws = mass ** (1.0 / alpha) * _cms(alpha, (w_plus - w_minus) / mass, rng, count)
        out = draws[:, None]
        return out[0] if size is None else out
    measure = law.nu if law.nu.kind is MeasureKind.ATOMS else atomize_calibrated(law, atoms)
    dirs, wts = measure.nodes()
    coeff = wts ** (1.0 / alpha)
    drift = (2.0 / math.pi) * (wts * np.log(wts)) @ dirs if alpha == 1.0 else np.zeros(law.dim)
    rows = _rows_per_chunk(dirs.shape[0])
    out = np.empty((count, law.dim))
    for start in range(0, count, rows):
        stop = min(count, start + rows)
        z = _cms(alpha, 1.0, rng, (stop - start, dirs.shape[0]))
        out[start:stop] = (z * coeff) @ dirs + drift
    return out[0] if size is None else out


def probe_frequencies(dim: int) -> np.ndarray:
    """At least five probe vectors: three norms along e₁ plus two off-axis directions."""
    e1 = np.zeros(dim)
    e1[0] = 1.0
    probes = [s * e1 for s in CF_PROBE_NORMS]
    if dim == 1:
        probes += [np.array([-1.0]), np.array([3.0])]
    else:
        diag = np.ones(dim) / math.sqrt(dim)
        tilt = np.zeros(dim)
        tilt[:2] = (0.6, -0.8)
        probes += [diag, 1.5 * tilt]
    return np.array(probes)


def atomize_calibrated(law: StableLaw, atoms: int | None = None, tol: float = 4e-3) -> SpectralMeasure:
    """Symmetric atom set whose stable CF matches ``law`` within ``tol`` at the probe frequencies.

    For densities in d > 3 the reference CF is itself a quasi-Monte Carlo estimate,
    and the allowance widens by three of its standard errors.
    """
    measure = law.nu.atomize(atoms or 64 * law.dim)
    approx = StableLaw(law.alpha, measure)
    probes = probe_frequencies(law.dim)
    reference = stable_cf_with_error(law, probes)
    gap = float(np.max(np.abs(np.asarray(approx.cf(probes)) - np.asarray(reference.value))))
    allowance = tol + 3.0 * reference.std_err
    if gap > allowance:
        raise CalibrationError(
            f"{measure.weights.size if measure.weights is not None else 0} atoms do not reproduce "
            f"the CF of {law.law_id()}; "
            "increase the atom count",
            achieved_tolerance=gap,
            details={"cf_std_err": reference.std_err, "allowance": allowance},
        )
    logger.debug(f"atomized {law.law_id()} with CF gap {gap:.3g} (reference std err {reference.std_err:.2g})")
    return measure


# ---------------------------------------------------------------------------
# Source-model draws
# ---------------------------------------------------------------------------


def sphere_directions(nu: SpectralMeasure, rng: np.random.Generator, size: int) -> np.ndarray:
    """Directions distributed as ν / ν(S)."""
    match nu.kind:
        case MeasureKind.ATOMS:
            dirs, wts = nu.nodes()
            return dirs[rng.choice(dirs.shape[0], size=size, p=wts / wts.sum())]
        case MeasureKind.UNIFORM:
            if nu.dim == 1:
                return rng.choice(np.array([-1.0, 1.0]), size=size)[:, None]
            z = rng.standard_normal((size, nu.dim))
            return z / np.linalg.norm(z, axis=1, keepdims=True)
        case _:
            assert nu.density is not None
            grid, _ = sphere_rule(nu.dim, 1024)
            ceiling = 1.1 * float(np.max(nu.density(grid)))
            out = np.empty((0, nu.dim))
            while out.shape[0] < size:
                z = rng.standard_normal((2 * size, nu.dim))
                z /= np.linalg.norm(z, axis=1, keepdims=True)
                keep = rng.random(2 * size) * ceiling <= nu.density(z)
                out = np.concatenate([out, z[keep]])
            return out[:size]


def _unit_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    # (0, 1]
    return 1.0 - rng.random(size)


def pareto_draw(model: TailModel, rng: np.random.Generator | None = None, size: int | None = None) -> np.ndarray:
    """R = U^{-1/α} with a uniform direction."""
    if model.kind is not ModelKind.PARETO:
        raise DomainError(f"pareto_draw needs a Pareto model, got {model.kind}")
    rng = rng or np.random.default_rng()
    count = 1 if size is None else size
    radius = _unit_uniform(rng, count) ** (-1.0 / model.alpha)
    out = radius[:, None] * sphere_directions(model.nu, rng, count)
    return out[0] if size is None else out


def dna_draw(model: TailModel, rng: np.random.Generator | None = None, size: int | None = None) -> float | np.ndarray:
    """Inverse-CDF draw from the 1-D model by bisection on the conditional tail."""
    if model.kind is not ModelKind.DNA:
        raise DomainError(f"dna_draw needs a 1-D attraction model, got {model.kind}")
    rng = rng or np.random.default_rng()
    count = 1 if size is None else size
    out = quantile_1d(model, rng.random(count))
    return float(out[0]) if size is None else out


def quantile_1d(model: TailModel, u: np.ndarray) -> np.ndarray:
    """F⁻¹(u) for a 1-D model: the negative half takes u < w₋, the positive half the rest."""
    if model.dim != 1:
        raise DomainError(f"quantile_1d needs a 1-D model, got d={model.dim}")
    u = np.maximum(np.asarray(u, dtype=float), 1e-300)
    w_plus = float(model.params["w_plus"]) if model.kind is ModelKind.DNA else half_weight(model, 1.0)
    w_minus = 1.0 - w_plus
    negative = u < w_minus
    theta = np.where(negative, -1.0, 1.0)[..., None]
    target = np.where(negative, u / max(w_minus, 1e-300), (1.0 - u) / max(w_plus, 1e-300))
    radius = model.invert_tail(np.clip(target, 1e-300, 1.0), theta)
    return theta[..., 0] * radius


def model_draw(model: TailModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draws of shape (size, d) from any tail model."""
    match model.kind:
        case ModelKind.PARETO:
            return pareto_draw(model, rng, size)
        case ModelKind.DNA:
            return np.asarray(dna_draw(model, rng, size))[:, None]
        case _:
            theta = sphere_directions(model.nu, rng, size)
            return model.invert_tail(_unit_uniform(rng, size), theta)[:, None] * theta


# ---------------------------------------------------------------------------
# Normalized sums
# ---------------------------------------------------------------------------


def _neumaier_add(total: np.ndarray, comp: np.ndarray, value: np.ndarray) -> None:
    t = total + value
    big = np.abs(total) >= np.abs(value)
    comp += np.where(big, (total - t) + value, (value - t) + total)
    total[...] = t


def sum_rows(model: TailModel, n: int, rows: int, rng: np.random.Generator) -> np.ndarray:
    """Σᵢ Xᵢ for ``rows`` independent rows; pairwise within blocks, compensated across blocks."""
    width = max(1, min(n, SHARD_BUDGET // (rows * model.dim)))
    total = np.zeros((rows, model.dim))
    comp = np.zeros((rows, model.dim))
    done = 0
    while done < n:
        take = min(width, n - done)
        block = model_draw(model, rng, rows * take).reshape(rows, take, model.dim)
        _neumaier_add(total, comp, block.sum(axis=1))
        done += take
    return total + comp


def normalized_sum(model: TailModel, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """S_n = (Σᵢ Xᵢ - n ω_{n,α}) / (n^{1/α} σ)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = rng or np.random.default_rng()
    raw = sum_rows(model, n, 1, rng)[0]
    return (raw - n * model.omega_shift(n).value) / (n ** (1.0 / model.alpha) * model.sigma)


def normalized_sums(model: TailModel, n: int, count: int, stream: RngStream, workers: int = 1) -> SampleBatch:
    """``count`` independent copies of S_n, sharded by a fixed row budget."""
    if n < 1 or count < 1:
        raise DomainError(f"need n >= 1 and count >= 1, got n={n}, count={count}")
    rows = max(1, SHARD_BUDGET // (n * model.dim))
    shards = math.ceil(count / rows)
    shift = n * model.omega_shift(n).value
    scale = n ** (1.0 / model.alpha) * model.sigma

    def job(index: int) -> np.ndarray:
        k = min(rows, count - index * rows)
        return (sum_rows(model, n, k, stream.generator(index)) - shift) / scale

    logger.info(f"sampling {count} normalized sums of {model.model_id()} at n={n} in {shards} shard(s)")
    points = np.concatenate(run_sharded(job, shards, workers))
    return SampleBatch(
        model.dim,
        points,
        {"source": model.model_id(), "n": n, "seed": stream.master_seed, "stream": stream.stream_id},
    )


def stable_batch(
    law: StableLaw, count: int, stream: RngStream, workers: int = 1, atoms: int | None = None
) -> SampleBatch:
    rows = _rows_per_chunk(law.dim * 64)
    shards = math.ceil(count / rows)

    def job(index: int) -> np.ndarray:
        k = min(rows, count - index * rows)
        return stable_multivariate(law, stream.generator(index), k, atoms)

    points = np.concatenate(run_sharded(job, shards, workers))
    return SampleBatch(
        law.dim, points, {"source": law.law_id(), "n": 0, "seed": stream.master_seed, "stream": stream.stream_id}
    )


# ---------------------------------------------------------------------------
# Empirical checks
# ---------------------------------------------------------------------------


class CFCheck(NamedTuple):
    passed: bool
    max_deviation: float
    threshold: float


def empirical_cf(points: np.ndarray, lam: np.ndarray | Sequence[float]) -> np.ndarray:
    """mean_k exp(i<λ, x_k>) for each row λ."""
    pts = np.asarray(points, dtype=float)
    pts = pts[:, None] if pts.ndim == 1 else pts
    freqs = np.atleast_2d(np.asarray(lam, dtype=float))
    if freqs.shape[1] != pts.shape[1]:
        freqs = freqs.reshape(-1, pts.shape[1])
    rows = _rows_per_chunk(freqs.shape[0])
    acc = np.zeros(freqs.shape[0], dtype=complex)
    for start in range(0, pts.shape[0], rows):
        acc += np.exp(1j * (pts[start : start + rows] @ freqs.T)).sum(axis=0)
    return acc / pts.shape[0]


def cf_check(points: np.ndarray, cf: Callable[[np.ndarray], np.ndarray], probes: np.ndarray | None = None) -> CFCheck:
    """|φ̂ - φ| ≤ 4/√N at each probe frequency."""
    pts = np.asarray(points, dtype=float)
    pts = pts[:, None] if pts.ndim == 1 else pts
    probes = probe_frequencies(pts.shape[1]) if probes is None else probes
    dev = float(np.max(np.abs(empirical_cf(pts, probes) - np.asarray(cf(probes)))))
    threshold = 4.0 / math.sqrt(pts.shape[0])
    return CFCheck(dev <= threshold, dev, threshold)


class TailCheckRow(NamedTuple):
    radius: float
    region: str
    expected: float
    observed: float
    std_err: float
    passed: bool


def tail_frequency_check(
    model: TailModel, stream: RngStream, samples: int = 10**6, radii: Sequence[float] = (1.0, 2.0, 5.0, 10.0)
) -> list[TailCheckRow]:
    """Monte Carlo tail identity on the whole sphere and on the half-space θ₁ > 0, within 3 s.e."""
    draws = model_draw(model, stream.generator(0), samples)
    mag = np.linalg.norm(draws, axis=1)
    upper = draws[:, 0] > 0.0
    rows: list[TailCheckRow] = []
    for r in radii:
        for region, cap, mask in (
            ("sphere", None, np.ones(samples, dtype=bool)),
            ("upper", lambda d: d[:, 0] > 0.0, upper),
        ):
            expected = model.tail_probability(r, cap)
            observed = float(np.mean((mag >= r) & mask))
            se = math.sqrt(max(expected * (1.0 - expected), 0.0) / samples)
            rows.append(
                TailCheckRow(r, region, expected, observed, se, abs(observed - expected) <= 3.0 * se + 1.0 / samples)
            )
    failed = [row for row in rows if not row.passed]
    if failed:
        logger.warning(f"tail identity failed for {model.model_id()} at {[(row.radius, row.region) for row in failed]}")
    return rows


class LowerBoundCheck(NamedTuple):
    passed: bool
    min_density: float
    eps0: float
    cells: int


def check_local_lower_bound(
    model: TailModel,
    stream: RngStream,
    samples: int = 10**6,
    cells_per_axis: int = 4,
    witness: LocalLowerBound | None = None,
) -> LowerBoundCheck:
    """Histogram density on cubes inside B(a, τ) must reach ε₀ within 3 s.e."""
    witness = witness or model.llb
    if witness is None:
        raise DomainError(f"{model.model_id()} has no local lower-bound witness")
    dim = model.dim
    side = 2.0 * witness.radius / cells_per_axis
    corner = witness.center - witness.radius
    draws = model_draw(model, stream.generator(1), samples)
    index = np.floor((draws - corner) / side).astype(np.int64)
    inside = np.all((index >= 0) & (index < cells_per_axis), axis=1)
    flat = np.ravel_multi_index(tuple(index[inside].T), (cells_per_axis,) * dim)
    counts = np.bincount(flat, minlength=cells_per_axis**dim).astype(float)
    grid = np.stack(np.meshgrid(*([np.arange(cells_per_axis)] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    offsets = np.stack(np.meshgrid(*([np.array([0.0, 1.0])] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    corners = corner + (grid[:, None, :] + offsets[None, :, :]) * side
    in_ball = np.all(np.linalg.norm(corners - witness.center, axis=2) <= witness.radius + 1e-12, axis=1)
    if not np.any(in_ball):
        raise DomainError("no histogram cell fits inside the witness ball; lower cells_per_axis")
    volume = side**dim
    density = counts[in_ball] / (samples * volume)
    se = np.sqrt(counts[in_ball]) / (samples * volume)
    passed = bool(np.all(density + 3.0 * se >= witness.eps0))
    return LowerBoundCheck(passed, float(density.min()), witness.eps0, int(in_ball.sum()))
