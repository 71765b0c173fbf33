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

"""Log-log rate fits with residual-bootstrap confidence intervals."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .exceptions import DomainError

logger = logging.getLogger(__name__)

BOOTSTRAP_RESAMPLES = 200
MIN_FIT_POINTS = 4


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    ci95: tuple[float, float]
    r2: float
    residuals: tuple[float, ...]
    n_points: int
    log_exponent: float | None = None
    log_exponent_ci: tuple[float, float] | None = None
    dropped: tuple[int, ...] = field(default_factory=tuple)

    def predict(self, n: float | np.ndarray) -> float | np.ndarray:
        """Fitted power law c·n^slope (ignores the ln ln n term)."""
        return math.exp(self.intercept) * np.asarray(n, dtype=float) ** self.slope


def _design(log_n: np.ndarray, loglog: bool) -> np.ndarray:
    cols = [np.ones_like(log_n), log_n]
    if loglog:
        cols.append(np.log(log_n))
    return np.column_stack(cols)


def fit_loglog(
    n: Sequence[float] | np.ndarray,
    values: Sequence[float] | np.ndarray,
    loglog: bool = False,
    resamples: int = BOOTSTRAP_RESAMPLES,
    seed: int = 0,
) -> RateFit:
    """OLS of ln d_n on ln n (and ln ln n when ``loglog``); CIs from a residual bootstrap.

    The intercept refers to ln d at n = 1. Nonpositive values are dropped with a warning.
    """
    n_arr = np.asarray(n, dtype=float)
    v_arr = np.asarray(values, dtype=float)
    if n_arr.shape != v_arr.shape:
        raise DomainError(f"{n_arr.size} grid points but {v_arr.size} values")
    bad = ~(np.isfinite(v_arr) & (v_arr > 0.0))
    if loglog:
        bad |= n_arr <= 1.0
    if np.any(bad):
        logger.warning(f"dropping {int(bad.sum())} nonpositive or unusable point(s) from the log-log fit")
    keep = ~bad
    if keep.sum() < MIN_FIT_POINTS:
        raise DomainError(f"need at least {MIN_FIT_POINTS} positive values, got {int(keep.sum())}")
    log_n = np.log(n_arr[keep])
    y = np.log(v_arr[keep])
    X = _design(log_n, loglog)
    params_count = X.shape[1]
    if keep.sum() <= params_count:
        raise DomainError("not enough points for the requested regressors")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ beta
    resid = y - fitted
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if sst == 0.0 else float(np.clip(1.0 - np.sum(resid**2) / sst, 0.0, 1.0))

    rng = np.random.default_rng(seed)
    dof = y.size - params_count
    inflated = resid * math.sqrt(y.size / dof)
    boot = np.empty((resamples, params_count))
    for b in range(resamples):
        y_star = fitted + rng.choice(inflated, size=y.size, replace=True)
        boot[b], *_ = np.linalg.lstsq(X, y_star, rcond=None)
    crit = float(stats.t.ppf(0.975, dof))
    se = boot.std(axis=0, ddof=1)

    def interval(k: int) -> tuple[float, float]:
        return float(beta[k] - crit * se[k]), float(beta[k] + crit * se[k])

    return RateFit(
        slope=float(beta[1]),
        intercept=float(beta[0]),
        ci95=interval(1),
        r2=r2,
        residuals=tuple(float(r) for r in resid),
        n_points=int(y.size),
        log_exponent=float(beta[2]) if loglog else None,
        log_exponent_ci=interval(2) if loglog else None,
        dropped=tuple(int(i) for i in np.flatnonzero(bad)),
    )


def ratio_spread(n: Sequence[float] | np.ndarray, values: Sequence[float] | np.ndarray, exponent: float) -> float:
    """max/min of d_n · n^{-exponent} over the grid."""
    ratio = np.asarray(values, dtype=float) * np.asarray(n, dtype=float) ** (-exponent)
    return float(ratio.max() / ratio.min())
