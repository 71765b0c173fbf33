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

"""Rate experiments: theoretical rates, distance sweeps over n and the α = 1 headline check."""

from __future__ import annotations

import asyncio
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .artifacts import write_rows_csv
from .decomposition import Partition
from .exceptions import DomainError
from .fitting import RateFit, fit_loglog, ratio_spread
from .parallel import FailureRecord, pick, record_failures
from .samplers import RngStream, normalized_sums, stable_batch
from .spectral_core import StableLaw, check_alpha
from .tail_models import ModelKind, TailModel, pareto_model
from .tv_metrics import (
    DEFAULT_NODES,
    DistanceEstimate,
    DistanceMethod,
    delta_limit,
    delta_n,
    kolmogorov_1d,
    tv_1d_exact,
    tv_histogram_lb,
)

logger = logging.getLogger(__name__)

EXACT_GRID = tuple(2**k for k in range(4, 15))
MC_GRID = tuple(2**k for k in range(4, 11))
SWEEP_COLUMNS = ("n", "value", "error", "method")
HEADLINE_RATIO_LIMIT = 4.0
MIN_DECADES = 2.0
DEGENERATE_CI_WIDTH = 1e-6


# ---------------------------------------------------------------------------
# Theoretical rates
# ---------------------------------------------------------------------------


def rho(alpha: float, gamma: float, symmetric: bool = False) -> float:
    """ρ_{α,γ} for α ∈ (0, 1): (1-α)/α if γ > 1-α else γ/(1-γ); γ/(α ∨ (1-γ)) when symmetric."""
    alpha = check_alpha(alpha)
    if alpha >= 1.0 or gamma <= 0.0:
        raise DomainError(f"rho needs alpha < 1 and gamma > 0, got alpha={alpha}, gamma={gamma}")
    if symmetric:
        return gamma / max(alpha, 1.0 - gamma)
    return (1.0 - alpha) / alpha if gamma > 1.0 - alpha else gamma / (1.0 - gamma)


def _rate_terms(alpha: float, gamma: float, symmetric: bool) -> tuple[float, float, bool]:
    """(leading exponent, remainder exponent, log factor on the remainder)."""
    alpha = check_alpha(alpha)
    if gamma <= 0.0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if alpha > 1.0:
        return -(2.0 - alpha) / alpha, -gamma / alpha, gamma == 2.0 - alpha
    if alpha == 1.0:
        return -1.0, -gamma, gamma == 1.0
    return -1.0, -rho(alpha, gamma, symmetric), gamma == 1.0 - alpha


def lambda_rate(n: int, alpha: float, gamma: float, symmetric: bool = False) -> float:
    """Λ(n, α, γ) with its (ln n) factor at the critical γ."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    lead, rest, critical = _rate_terms(alpha, gamma, symmetric)
    return n**lead + n**rest * (math.log(n) if critical else 1.0)


def lambda_monotone_from(alpha: float, gamma: float, symmetric: bool = False) -> int:
    """First n from which Λ(n, α, γ) is non-increasing.

    Off the critical γ that is n = 3. At the critical γ the factor n^{-a} ln n only
    turns down once ln n ≥ 1/a.
    """
    _, rest, critical = _rate_terms(alpha, gamma, symmetric)
    if not critical:
        return 3
    return max(3, math.ceil(math.exp(-1.0 / rest)))


def theoretical_exponent(alpha: float, gamma: float, symmetric: bool = False) -> float:
    """Power of n governing Λ(n, α, γ) (log factors ignored)."""
    lead, rest, _ = _rate_terms(alpha, gamma, symmetric)
    return max(lead, rest)


def pareto_exponent(alpha: float) -> float:
    """-((2-α) ∧ α)/α: the exact TV rate for the Pareto family."""
    alpha = check_alpha(alpha)
    return -min(2.0 - alpha, alpha) / alpha


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateScenario:
    model: TailModel
    n_grid: tuple[int, ...]
    method: DistanceMethod = DistanceMethod.CF_INVERSION
    seed: int = 0
    label: str = ""
    samples: int = 100_000
    law: StableLaw | None = None

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if len(grid) < 4:
            raise DomainError(f"an n-grid needs at least 4 points, got {len(grid)}")
        if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise DomainError(f"n-grid must be strictly increasing positive integers, got {grid}")
        if math.log10(grid[-1] / grid[0]) < MIN_DECADES:
            logger.warning(f"n-grid {grid[0]}..{grid[-1]} spans under {MIN_DECADES:g} decades; fits will be loose")
        object.__setattr__(self, "n_grid", grid)
        if self.law is None:
            object.__setattr__(self, "law", self.model.stable_limit())
        if self.method is not DistanceMethod.HISTOGRAM_LB and self.model.dim != 1:
            raise DomainError(
                f"{self.method} needs a 1-D model; use {DistanceMethod.HISTOGRAM_LB} for d={self.model.dim}"
            )

    @property
    def symmetric(self) -> bool:
        return self.model.is_symmetric

    @property
    def name(self) -> str:
        return self.label or f"{self.model.model_id()}/{self.method}"

    def expected_exponent(self) -> float:
        if self.model.kind is ModelKind.PARETO:
            return pareto_exponent(self.model.alpha)
        return theoretical_exponent(self.model.alpha, self.model.gamma, self.symmetric)


@dataclass
class SweepResult:
    scenario: str
    rows: list[dict[str, Any]]
    failures: list[FailureRecord] = field(default_factory=list)
    fit: RateFit | None = None
    expected_exponent: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "rows": self.rows,
            "failures": list(self.failures),
            "fit": None if self.fit is None else asdict(self.fit),
            "expected_exponent": self.expected_exponent,
        }


def _distance_at(scenario: RateScenario, index: int, n: int) -> DistanceEstimate:
    match scenario.method:
        case DistanceMethod.CF_INVERSION:
            return tv_1d_exact(scenario.model, n)
        case DistanceMethod.KOLMOGOROV:
            return kolmogorov_1d(scenario.model, n)
        case DistanceMethod.HISTOGRAM_LB:
            assert scenario.law is not None
            stream = RngStream(scenario.seed, 2 * index + 1)
            sums = normalized_sums(scenario.model, n, scenario.samples, stream)
            limit = stable_batch(scenario.law, scenario.samples, stream.substream(2 * index + 2))
            bins = max(4, round(64 ** (1 / scenario.model.dim)))
            partition = Partition.from_quantiles(limit.points, bins_per_axis=bins)
            return tv_histogram_lb(sums.points, limit.points, partition, seed=scenario.seed)
        case _:
            raise DomainError(f"unknown distance method {scenario.method}")


async def run_sweep(scenario: RateScenario, workers: int = 1, out_dir: str | Path | None = None) -> SweepResult:
    """One DistanceEstimate per n; per-n failures are recorded and the sweep continues."""
    failures: list[FailureRecord] = []
    limit = asyncio.Semaphore(max(1, workers))

    async def one(index: int, n: int) -> DistanceEstimate | None:
        async with limit:
            async with record_failures(f"estimate distance at n={n}", failures):
                return await asyncio.to_thread(_distance_at, scenario, index, n)
        return None

    logger.info(f"sweeping {scenario.name} over {len(scenario.n_grid)} values of n")
    estimates = await asyncio.gather(*(one(i, n) for i, n in enumerate(scenario.n_grid)))
    rows = [
        pick({"n": n, **est.to_row()}, *SWEEP_COLUMNS)
        for n, est in zip(scenario.n_grid, estimates)
        if est is not None
    ]
    result = SweepResult(scenario.name, rows, failures, expected_exponent=scenario.expected_exponent())
    if len(rows) >= 4:
        result.fit = fit_loglog([r["n"] for r in rows], [r["value"] for r in rows])
        logger.info(f"{scenario.name}: slope {result.fit.slope:.4f} (expected {result.expected_exponent:.4f})")
    if out_dir is not None:
        provenance = {"scenario": scenario.name, "seed": scenario.seed, "method": str(scenario.method)}
        write_rows_csv(Path(out_dir) / f"sweep-{_slug(scenario.name)}.csv", rows, provenance, SWEEP_COLUMNS)
    return result


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in text)


def delta_sweep(alpha: float, d: int = 1, n_values: Sequence[int] | None = None) -> list[dict[str, Any]]:
    """Δ_n against its limit; ``rel_gap`` = |Δ_n - lim| / |lim|."""
    n_values = n_values or [10**k for k in range(1, 7)]
    limit = delta_limit(alpha, d)
    rows = []
    for n in n_values:
        value = delta_n(int(n), alpha, d)
        rows.append({"n": int(n), "delta": value, "limit": limit, "rel_gap": abs(value - limit) / abs(limit)})
    return rows


# ---------------------------------------------------------------------------
# α = 1 headline
# ---------------------------------------------------------------------------


@dataclass
class HeadlineReport:
    verdict: str
    passed: bool
    ratio_spread: float
    rss_power: float
    rss_log_squared: float
    fit: RateFit | None
    log_fit: RateFit | None
    n_grid: list[int]
    values: list[float]
    note: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _rss(log_d: np.ndarray, log_model: np.ndarray) -> float:
    """Residual sum of squares of ln d = c + model with the best constant c."""
    resid = log_d - log_model
    return float(np.sum((resid - resid.mean()) ** 2))


def headline_alpha1(
    n_grid: Sequence[int] = EXACT_GRID, values: Sequence[float] | None = None, nodes: int = DEFAULT_NODES
) -> HeadlineReport:
    """Decide between d_TV ≍ n^{-1} and n^{-1}(ln n)² for the symmetric Pareto law at α = 1.

    The verdict is "n^-1" iff n·d_n stays within a factor 4 over the grid and the
    fitted exponent of ln n excludes 2. ``values`` replaces the exact TV sweep
    (used for synthetic controls).
    """
    grid = [int(n) for n in n_grid]
    if values is None:
        model = pareto_model(1, 1.0)
        values = [tv_1d_exact(model, n, nodes).value for n in grid]
    d = np.asarray(values, dtype=float)
    n = np.asarray(grid, dtype=float)
    decades = math.log10(n.max() / n.min()) if n.size else 0.0
    if n.size < 5 or decades < MIN_DECADES:
        note = f"grid spans {decades:.2f} decades; need at least 5 points with n_max >= {100 * n.min():g}"
        logger.warning(f"headline check inconclusive: {note}")
        return HeadlineReport("inconclusive", False, math.nan, math.nan, math.nan, None, None, grid, d.tolist(), note)
    spread = ratio_spread(n, d, -1.0)
    fit = fit_loglog(n, d)
    log_fit = fit_loglog(n, d, loglog=True)
    log_n = np.log(n)
    rss_power = _rss(np.log(d), -log_n)
    rss_log = _rss(np.log(d), -log_n + 2.0 * np.log(log_n))
    assert log_fit.log_exponent_ci is not None
    lo, hi = log_fit.log_exponent_ci
    excludes_two = not lo <= 2.0 <= hi
    passed = spread < HEADLINE_RATIO_LIMIT and excludes_two
    verdict = "n^-1" if passed else "not n^-1"
    note = f"n*d_n spread {spread:.3f}; ln n exponent {log_fit.log_exponent:.3f} in [{lo:.3f}, {hi:.3f}]"
    if hi - lo < DEGENERATE_CI_WIDTH:
        # exact model values leave no residual scatter
        note += "; the CI has zero width, so excluding 2 rests on the point estimate alone"
    logger.info(f"alpha=1 headline: {verdict} ({note})")
    return HeadlineReport(verdict, passed, spread, rss_power, rss_log, fit, log_fit, grid, d.tolist(), note)
