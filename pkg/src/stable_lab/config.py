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

"""Run configuration: environment defaults, id parsing and the JSON experiment file.

Model ids look like ``pareto:d=1,alpha=1.5`` or
``dna:alpha=0.8,A=1,w_plus=0.5,eps=power,gamma=1,K=1,c=0.5,p=1``; law ids like
``stable:d=2,alpha=1.2,nu=density:cardioid``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from os import getenv
from pathlib import Path
from typing import Any

from .exceptions import StableLabError, UsageError
from .rate_lab import EXACT_GRID, MC_GRID, RateScenario
from .spectral_core import SpectralMeasure, StableLaw, TestFunction, density_names
from .tail_models import TailModel, dna_model, epsilon_names, pareto_model
from .tv_metrics import DistanceMethod

logger = logging.getLogger(__name__)

STABLE_LAB_SEED = int(getenv("STABLE_LAB_SEED", "20240601"))
STABLE_LAB_WORKERS = int(getenv("STABLE_LAB_WORKERS", "1"))
STABLE_LAB_OUTPUT_DIR = getenv("STABLE_LAB_OUTPUT_DIR", "artifacts")
STABLE_LAB_LOG_LEVEL = getenv("STABLE_LAB_LOG_LEVEL", "WARNING")

BUILTIN_SCENARIOS: dict[str, dict[str, Any]] = {
    "pareto-a08": {"model": "pareto:d=1,alpha=0.8", "sweep": {"method": "cf-inversion", "n_grid": list(EXACT_GRID)}},
    "pareto-a1": {"model": "pareto:d=1,alpha=1", "sweep": {"method": "cf-inversion", "n_grid": list(EXACT_GRID)}},
    "pareto-a15": {"model": "pareto:d=1,alpha=1.5", "sweep": {"method": "cf-inversion", "n_grid": list(EXACT_GRID)}},
}

_DNA_KEYS = {"alpha", "A", "w_plus", "eps", "gamma", "K"}


def _fields(text: str, prefix: str) -> dict[str, str]:
    head, sep, body = text.strip().partition(":")
    if not sep or head != prefix:
        raise UsageError(f"expected an id of the form '{prefix}:key=value,...', got '{text}'")
    out: dict[str, str] = {}
    for item in filter(None, body.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise UsageError(f"malformed field '{item}' in '{text}'")
        out[key.strip()] = value.strip()
    return out


def _number(fields: dict[str, str], key: str, default: float | None = None) -> float:
    if key not in fields:
        if default is None:
            raise UsageError(f"missing required field '{key}'")
        return default
    try:
        return float(fields[key])
    except ValueError as e:
        raise UsageError(f"field '{key}' must be a number, got '{fields[key]}'") from e


def parse_model(model_id: str, registry: dict[str, Any] | None = None) -> TailModel:
    """Build a tail model from its id; ε aliases resolve through ``registry["epsilon"]``."""
    kind = model_id.strip().partition(":")[0]
    match kind:
        case "pareto":
            fields = _fields(model_id, "pareto")
            return pareto_model(int(_number(fields, "d")), _number(fields, "alpha"))
        case "dna":
            fields = _fields(model_id, "dna")
            eps_name = fields.get("eps", "zero")
            extra = {k: _number(fields, k) for k in fields if k not in _DNA_KEYS}
            aliases = (registry or {}).get("epsilon", {})
            if eps_name in aliases:
                entry = dict(aliases[eps_name])
                eps_name = entry.pop("kind", None)
                if eps_name is None:
                    raise UsageError(f"epsilon alias in registry lacks a 'kind': {aliases[fields['eps']]}")
                extra = {**{k: float(v) for k, v in entry.items()}, **extra}
            if eps_name not in epsilon_names():
                raise UsageError(f"unknown epsilon '{eps_name}'; known: {', '.join(epsilon_names())}")
            return dna_model(
                _number(fields, "alpha"),
                A=_number(fields, "A", 1.0),
                w_plus=_number(fields, "w_plus", 0.5),
                eps=eps_name,
                gamma=_number(fields, "gamma", math.inf),
                K=_number(fields, "K", 1.0),
                eps_params=extra,
            )
        case _:
            raise UsageError(f"unknown model '{model_id}'; expected 'pareto:...' or 'dna:...'")


def parse_measure(text: str, dim: int) -> SpectralMeasure:
    """``uniform``, ``symmetric`` (±e₁), ``skew:<w_plus>`` (on ±e₁) or ``density:<name>``."""
    e1 = [1.0] + [0.0] * (dim - 1)
    minus = [-1.0] + [0.0] * (dim - 1)
    match text.partition(":"):
        case ("uniform", "", ""):
            return SpectralMeasure.uniform(dim)
        case ("symmetric", "", ""):
            return SpectralMeasure.atoms([e1, minus], [0.5, 0.5])
        case ("skew", ":", weight):
            w = _number({"w_plus": weight}, "w_plus")
            if not 0.0 <= w <= 1.0:
                raise UsageError(f"skew weight must lie in [0, 1], got {w}")
            if dim == 1:
                return SpectralMeasure.two_point(w)
            pairs = [(d, x) for d, x in ((e1, w), (minus, 1.0 - w)) if x > 0.0]
            return SpectralMeasure.atoms([d for d, _ in pairs], [x for _, x in pairs], total_mass=1.0)
        case ("density", ":", name):
            if name not in density_names():
                raise UsageError(f"unknown density '{name}'; known: {', '.join(density_names())}")
            return SpectralMeasure.from_density(dim, name)
        case _:
            raise UsageError(f"unknown spectral measure '{text}'")


def parse_law(law_id: str) -> StableLaw:
    fields = _fields(law_id, "stable")
    dim = int(_number(fields, "d"))
    if dim < 1:
        raise UsageError(f"dimension must be >= 1, got {dim}")
    nu = parse_measure(fields.get("nu", "uniform"), dim)
    return StableLaw(_number(fields, "alpha"), nu, label=law_id.strip())


def parse_test_function(text: str, dim: int = 1, registry: dict[str, Any] | None = None) -> TestFunction:
    """``cos:<ξ>``, ``sin:<ξ>``, ``linear:<c>``, ``const:<v>``, ``biweight:<R>``, ``step`` or a registry alias."""
    aliases = (registry or {}).get("test_functions", {})
    if text in aliases:
        entry = aliases[text]
        text = f"{entry['kind']}:{entry['value']}" if "value" in entry else entry["kind"]
    kind, _, arg = text.partition(":")

    def vector() -> list[float]:
        try:
            values = [float(v) for v in arg.split(";")] if arg else [1.0]
        except ValueError as e:
            raise UsageError(f"bad test-function argument '{arg}'") from e
        return values * dim if len(values) == 1 else values

    match kind:
        case "cos":
            return TestFunction.cosine(vector())
        case "sin":
            return TestFunction.sine(vector())
        case "linear":
            return TestFunction.linear(vector())
        case "const":
            return TestFunction.constant(float(arg or 1.0), dim)
        case "biweight":
            return TestFunction.biweight(dim, float(arg or 1.0))
        case "step":
            return TestFunction.step(dim)
        case _:
            raise UsageError(f"unknown test function '{text}'")


# ---------------------------------------------------------------------------
# Experiment file
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    seed: int
    output_dir: Path = field(default_factory=lambda: Path(STABLE_LAB_OUTPUT_DIR))
    workers: int = STABLE_LAB_WORKERS
    registry: dict[str, Any] = field(default_factory=dict)
    scenarios: dict[str, dict[str, Any]] = field(default_factory=dict)
    raw: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def default(cls, seed: int | None = None) -> ExperimentConfig:
        data = {"seed": STABLE_LAB_SEED if seed is None else seed, "scenarios": {}}
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise UsageError(f"config file {path} not found") from e
        except json.JSONDecodeError as e:
            raise UsageError(f"config file {path} is not valid JSON: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        if "seed" not in data:
            raise UsageError("config must set a master 'seed'")
        registry = data.get("registry", {})
        unknown = set(registry) - {"epsilon", "test_functions"}
        if unknown:
            raise UsageError(f"unknown registry sections: {sorted(unknown)}")
        config = cls(
            seed=int(data["seed"]),
            output_dir=Path(data.get("output_dir", STABLE_LAB_OUTPUT_DIR)),
            workers=int(data.get("workers", STABLE_LAB_WORKERS)),
            registry=registry,
            scenarios={**BUILTIN_SCENARIOS, **data.get("scenarios", {})},
            raw=data,
        )
        for name in data.get("scenarios", {}):
            config.validate_scenario(name)
        return config

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def scenario(self, name: str) -> dict[str, Any]:
        if name not in self.scenarios:
            raise UsageError(f"unknown scenario '{name}'; known: {', '.join(sorted(self.scenarios))}")
        return self.scenarios[name]

    def validate_scenario(self, name: str) -> None:
        """Every id and registry name a scenario references must resolve."""
        block = self.scenario(name)
        if "model" not in block:
            raise UsageError(f"scenario '{name}' has no model")
        try:
            model = parse_model(block["model"], self.registry)
            if "law" in block:
                parse_law(block["law"])
            probe_fn = block.get("probes", {}).get("test_function")
            if probe_fn is not None:
                parse_test_function(probe_fn, model.dim, self.registry)
        except UsageError:
            raise
        except StableLabError as e:
            raise UsageError(f"scenario '{name}' is invalid: {e}") from e

    def rate_scenario(self, name: str) -> RateScenario:
        block = self.scenario(name)
        sweep = block.get("sweep", {})
        model = parse_model(block["model"], self.registry)
        try:
            method = DistanceMethod(sweep.get("method", DistanceMethod.CF_INVERSION))
        except ValueError as e:
            raise UsageError(f"unknown distance method '{sweep.get('method')}'") from e
        default_grid = EXACT_GRID if method is not DistanceMethod.HISTOGRAM_LB else MC_GRID
        law = parse_law(block["law"]) if "law" in block else None
        return RateScenario(
            model=model,
            n_grid=tuple(sweep.get("n_grid", default_grid)),
            method=method,
            seed=self.seed,
            label=name,
            samples=int(sweep.get("samples", 100_000)),
            law=law,
        )
