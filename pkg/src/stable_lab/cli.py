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

"""Command-line front end: ``stable-lab <command> [options]``.

Exit codes: 0 success, 1 a check failed, 2 usage or domain error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import asyncio
import inspect
import json
import logging
import math
import sys
import traceback
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np

from .artifacts import RunManifest, summarize, write_json, write_rows_csv
from .config import (
    STABLE_LAB_LOG_LEVEL,
    ExperimentConfig,
    parse_law,
    parse_model,
    parse_test_function,
)
from .decomposition import certify_mixture, heavy_decompose, light_decompose
from .exceptions import StableLabError, UsageError
from .rate_lab import RateScenario, delta_sweep, headline_alpha1, run_sweep
from .samplers import RngStream, SampleBatch, model_draw, normalized_sums, stable_batch
from .semigroup_ops import OperatorConfig, gap_sweep, generator_error_sweep, gradient_decay_probe
from .tail_models import ModelKind
from .tv_metrics import DistanceMethod

logger = logging.getLogger(__name__)

SLOPE_TOLERANCE = 0.1
DELTA_TOLERANCE = 0.01

Argument = tuple[tuple[str, ...], dict[str, Any]]


def _arg(*flags: str, **kwargs: Any) -> Argument:
    return flags, kwargs


def _command(help_text: str, *arguments: Argument) -> Callable[[Callable[..., int]], Callable[..., int]]:
    def deco(fn: Callable[..., int]) -> Callable[..., int]:
        fn._cli_help = help_text  # type: ignore[attr-defined]
        fn._cli_arguments = arguments  # type: ignore[attr-defined]
        return fn

    return deco


def _grid(text: str) -> tuple[int, ...]:
    """``16,32,64`` or a dyadic range ``2^4..2^14``."""
    text = text.strip()
    if ".." in text:
        lo, hi = (part.strip() for part in text.split("..", 1))
        try:
            base, lo_exp = (int(v) for v in lo.split("^"))
            _, hi_exp = (int(v) for v in hi.split("^"))
        except ValueError as e:
            raise UsageError(f"range grids look like '2^4..2^14', got '{text}'") from e
        return tuple(base**k for k in range(lo_exp, hi_exp + 1))
    try:
        return tuple(int(float(v)) for v in text.split(","))
    except ValueError as e:
        raise UsageError(f"bad n-grid '{text}'") from e


class LabCommands:
    """Every method tagged with ``_command`` becomes a subcommand; each returns an exit code."""

    def __init__(self, config: ExperimentConfig, manifest: RunManifest):
        self.config = config
        self.manifest = manifest

    @property
    def out_dir(self) -> Path:
        return self.config.output_dir

    def _provenance(self, **extra: Any) -> dict[str, Any]:
        return {"config_hash": self.config.config_hash, "seed": self.config.seed, **extra}

    @_command(
        "draw a sample batch from a model or a stable law",
        _arg("--model", help="model id, e.g. pareto:d=1,alpha=1.5"),
        _arg("--law", help="stable law id, e.g. stable:d=2,alpha=1.2"),
        _arg("--n", type=int, default=1000, help="number of rows"),
        _arg("--sum-n", type=int, default=0, help="draw normalized sums S_n instead of single variates"),
        _arg("--out", help="CSV path (default <out-dir>/samples.csv)"),
    )
    def sample(self, args: argparse.Namespace) -> int:
        if (args.model is None) == (args.law is None):
            raise UsageError("give exactly one of --model or --law")
        stream = RngStream(self.config.seed, 0)
        if args.law is not None:
            batch = stable_batch(parse_law(args.law), args.n, stream, self.config.workers)
        elif args.sum_n > 0:
            model = parse_model(args.model, self.config.registry)
            batch = normalized_sums(model, args.sum_n, args.n, stream, self.config.workers)
        else:
            model = parse_model(args.model, self.config.registry)
            points = model_draw(model, stream.generator(0), args.n)
            batch = SampleBatch(model.dim, points, {"source": model.model_id(), "n": 1})
        batch = SampleBatch(batch.dim, batch.points, self._provenance(**batch.provenance))
        self.manifest.add(batch.to_csv(args.out or self.out_dir / "samples.csv"))
        return 0

    @_command(
        "exact 1-D total variation (or Kolmogorov) distance of S_n from its stable limit",
        _arg("--model", required=True),
        _arg("--n-grid", default="2^4..2^14"),
        _arg(
            "--method",
            choices=[str(DistanceMethod.CF_INVERSION), str(DistanceMethod.KOLMOGOROV)],
            default=str(DistanceMethod.CF_INVERSION),
        ),
    )
    def tv(self, args: argparse.Namespace) -> int:
        model = parse_model(args.model, self.config.registry)
        scenario = RateScenario(model, _grid(args.n_grid), DistanceMethod(args.method), self.config.seed)
        result = asyncio.run(run_sweep(scenario, self.config.workers))
        path = write_rows_csv(self.out_dir / "tv.csv", result.rows, self._provenance(model=args.model))
        self.manifest.add(path)
        return 0 if not result.failures else 1

    @_command(
        "normalized log-CF gap Δ_n of the Pareto family against its limit",
        _arg("--alpha", type=float, required=True),
        _arg("--d", type=int, default=1),
        _arg("--n-max", type=float, default=1e6),
    )
    def delta(self, args: argparse.Namespace) -> int:
        n_values = [10**k for k in range(1, int(round(math.log10(args.n_max))) + 1)]
        rows = delta_sweep(args.alpha, args.d, n_values)
        provenance = self._provenance(alpha=args.alpha, d=args.d)
        self.manifest.add(write_rows_csv(self.out_dir / "delta.csv", rows, provenance))
        final = rows[-1]["rel_gap"]
        logger.info(f"Δ_n at n={rows[-1]['n']}: relative gap {final:.3g}")
        return 0 if final < DELTA_TOLERANCE else 1

    @_command(
        "rate sweep for a scenario, with the α = 1 headline report for the Pareto scenario",
        _arg("--scenario", required=True),
        _arg("--slope-tolerance", type=float, default=SLOPE_TOLERANCE),
    )
    def rate(self, args: argparse.Namespace) -> int:
        scenario = self.config.rate_scenario(args.scenario)
        result = asyncio.run(run_sweep(scenario, self.config.workers, self.out_dir))
        payload: dict[str, Any] = {"sweep": result.to_dict(), **self._provenance()}
        ok = result.fit is not None and not result.failures
        if result.fit is not None and result.expected_exponent is not None:
            ok &= abs(result.fit.slope - result.expected_exponent) <= args.slope_tolerance
        model = scenario.model
        if model.kind is ModelKind.PARETO and model.alpha == 1.0 and scenario.method is DistanceMethod.CF_INVERSION:
            headline = headline_alpha1([r["n"] for r in result.rows], [r["value"] for r in result.rows])
            payload["headline"] = headline.to_dict()
            ok &= headline.passed
        payload["passed"] = ok
        self.manifest.add(write_json(self.out_dir / f"rate-{args.scenario}.json", payload))
        return 0 if ok else 1

    @_command(
        "build a light or heavy mixture decomposition and certify it with a two-sample χ² test",
        _arg("--model", required=True),
        _arg("--kind", choices=["light", "heavy"], default="light"),
        _arg("--alpha-tilde", type=float),
        _arg("--samples", type=int, default=10**6),
        _arg("--weight-shift", type=float, default=0.0, help="perturb the mixture weight (negative control)"),
    )
    def decompose(self, args: argparse.Namespace) -> int:
        model = parse_model(args.model, self.config.registry)
        if args.kind == "heavy":
            if args.alpha_tilde is None:
                raise UsageError("--kind heavy needs --alpha-tilde")
            decomp = heavy_decompose(model, args.alpha_tilde)
            summary = {
                "q": decomp.q,
                "alpha_tilde": decomp.alpha_tilde,
                "A_tilde": decomp.A_tilde,
                "K_tilde": decomp.eps_tilde_bound,
            }
        else:
            decomp = light_decompose(model)
            summary = {"p": decomp.p, "c": decomp.c, "eps0": decomp.eps0, "tau": decomp.tau}
        stream = RngStream(self.config.seed, 7)
        report = certify_mixture(decomp, args.samples, stream=stream, weight_shift=args.weight_shift)
        payload = {"decomposition": summary, "certification": report.to_dict(), **self._provenance(model=args.model)}
        self.manifest.add(write_json(self.out_dir / f"decompose-{args.kind}.json", payload))
        return 0 if report.passed else 1

    @_command(
        "semigroup probes: one-step gap, gradient decay or generator error",
        _arg("--model", required=True),
        _arg("--kind", choices=["gap", "gradient", "generator"], default="gap"),
        _arg("--test-function", default="cos:1"),
        _arg("--x", type=float, default=0.0),
        _arg("--n-grid", default="2^3..2^10"),
        _arg("--order", type=int, default=1),
        _arg("--mc-samples", type=int, default=10**6),
    )
    def probe(self, args: argparse.Namespace) -> int:
        model = parse_model(args.model, self.config.registry)
        f = parse_test_function(args.test_function, model.dim, self.config.registry)
        x = np.full(model.dim, args.x)
        grid = _grid(args.n_grid)
        match args.kind:
            case "gap":
                sweep = gap_sweep(
                    model, f, x, grid, mc_samples=args.mc_samples, seed=self.config.seed, workers=self.config.workers
                )
                rows, fit, expected, noisy = sweep.rows, sweep.fit, None, False
            case "gradient":
                cfg = OperatorConfig.for_model(
                    model, grid[-1], mc_samples=args.mc_samples, seed=self.config.seed, workers=self.config.workers
                )
                probe = gradient_decay_probe(cfg, f, grid, args.order, x)
                rows, fit, expected, noisy = probe.rows, probe.fit, probe.expected_slope, probe.inconclusive
            case _:
                probe = generator_error_sweep(model, f, x, grid, mc_samples=args.mc_samples, seed=self.config.seed)
                rows, fit, expected, noisy = probe.rows, probe.fit, probe.expected_slope, probe.inconclusive
        provenance = self._provenance(model=args.model, test_function=f.name, kind=args.kind)
        self.manifest.add(write_rows_csv(self.out_dir / f"probe-{args.kind}.csv", rows, provenance))
        payload = {"fit": fit, "expected_slope": expected, "inconclusive": noisy, **provenance}
        self.manifest.add(write_json(self.out_dir / f"probe-{args.kind}.json", payload))
        return 1 if noisy else 0

    @_command("aggregate the run manifests in the output directory")
    def report(self, args: argparse.Namespace) -> int:
        summary = summarize(self.out_dir)
        self.manifest.add(write_json(self.out_dir / "report.json", summary))
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))  # noqa: T201
        return 0 if summary["failed"] == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stable-lab", description="Numerical lab for the stable central limit theorem"
    )
    parser.add_argument("--config", help="JSON experiment file")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--workers", type=int, help="worker threads")
    parser.add_argument("--out-dir", help="output directory")
    parser.add_argument("--log-level", default=STABLE_LAB_LOG_LEVEL)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in dir(LabCommands):
        if name.startswith("_"):
            continue
        method = getattr(LabCommands, name)
        if inspect.isroutine(method) and hasattr(method, "_cli_help"):
            sub = subparsers.add_parser(name, help=method._cli_help)
            for flags, kwargs in method._cli_arguments:
                sub.add_argument(*flags, **kwargs)
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig.default(args.seed)
    if args.seed is not None:
        config.seed = args.seed
        config.raw = {**config.raw, "seed": args.seed}
    if args.workers is not None:
        config.workers = args.workers
    if args.out_dir is not None:
        config.output_dir = Path(args.out_dir)
    return config


def run(argv: list[str] | None = None) -> int:
    """Parse ``argv``, run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=str(args.log_level).upper())
    config = _load_config(args)
    parameters = {k: v for k, v in vars(args).items() if k not in ("config",)}
    manifest = RunManifest(args.command, config.config_hash, config.seed, parameters=parameters)
    commands = LabCommands(config, manifest)
    code = 1
    try:
        code = getattr(commands, args.command)(args)
        return code
    except StableLabError as e:
        code = e.exit_code
        raise
    finally:
        if args.command != "report" or config.output_dir.is_dir():
            manifest.finish(config.output_dir, code)


def main() -> None:
    """Main entry point."""
    try:
        sys.exit(run())
    except StableLabError as e:
        logger.error(f"{e}")
        sys.exit(e.exit_code)
    except Exception as e:
        logger.error(f"Error running stable-lab: {e}")
        traceback.print_exc()
        sys.exit(1)
