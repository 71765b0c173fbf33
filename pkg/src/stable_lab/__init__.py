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

"""Numerical lab for the stable central limit theorem."""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

from .exceptions import (
    AccuracyError,
    CalibrationError,
    DegenerateDecompositionError,
    DomainError,
    ModelValidityError,
    NumericError,
    StableLabError,
    UsageError,
    WitnessInvalidError,
)
from .spectral_core import SpectralMeasure, StableLaw, TestFunction, generator_apply
from .tail_models import TailModel, dna_model, pareto_model

try:
    __version__ = version("stable-clt-lab")
except PackageNotFoundError:
    __version__ = "0.0.0"

__all__ = [
    "AccuracyError",
    "CalibrationError",
    "DegenerateDecompositionError",
    "DomainError",
    "ModelValidityError",
    "NumericError",
    "SpectralMeasure",
    "StableLabError",
    "StableLaw",
    "TailModel",
    "TestFunction",
    "UsageError",
    "WitnessInvalidError",
    "__version__",
    "dna_model",
    "generator_apply",
    "pareto_model",
]
