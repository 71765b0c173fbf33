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

"""Custom exceptions for the stable CLT lab."""

from __future__ import annotations

from typing import Any


class StableLabError(Exception):
    """Base exception for the stable CLT lab."""

    exit_code = 1

    def __init__(self, message: str, code: str = "STABLE_LAB_ERROR", details: dict[str, Any] | None = None):
        super().__init__(f"[{code}] {message}")
        self.code = code
        self.details = details or {}


class DomainError(StableLabError):
    """A parameter lies outside the domain an operation is defined on."""

    exit_code = 2

    def __init__(self, message: str, details: dict[str, Any] | None = None, code: str = "DOMAIN_ERROR"):
        super().__init__(message, code=code, details=details)


class ModelValidityError(DomainError):
    def __init__(
        self,
        message: str = "Tail model is not valid.",
        details: dict[str, Any] | None = None,
        code: str = "MODEL_INVALID",
    ):
        super().__init__(message, details=details, code=code)


class WitnessInvalidError(ModelValidityError):
    def __init__(
        self,
        message: str = "Local lower-bound witness is invalid (eps0 too large).",
        details: dict[str, Any] | None = None,
    ):
        super().__init__(message, details=details, code="WITNESS_INVALID")


class UsageError(StableLabError):
    exit_code = 2

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message, code="USAGE_ERROR", details=details)


class NumericError(StableLabError):
    """A numerical routine did not reach its target tolerance."""

    exit_code = 3

    def __init__(
        self,
        message: str,
        achieved_tolerance: float | None = None,
        code: str = "NUMERIC_ERROR",
        details: dict[str, Any] | None = None,
    ):
        suffix = f" (achieved tolerance {achieved_tolerance:.3g})" if achieved_tolerance is not None else ""
        super().__init__(f"{message}{suffix}", code=code, details=details)
        self.achieved_tolerance = achieved_tolerance


class AccuracyError(NumericError):
    def __init__(
        self,
        message: str,
        achieved_tolerance: float | None = None,
        suggested_cutoff: float | None = None,
        details: dict[str, Any] | None = None,
    ):
        if suggested_cutoff is not None:
            message = f"{message}; suggested cutoff {suggested_cutoff:.6g}"
        super().__init__(message, achieved_tolerance, code="ACCURACY_ERROR", details=details)
        self.suggested_cutoff = suggested_cutoff


class CalibrationError(NumericError):
    def __init__(self, message: str, achieved_tolerance: float | None = None, details: dict[str, Any] | None = None):
        super().__init__(message, achieved_tolerance, code="CALIBRATION_ERROR", details=details)


class DegenerateDecompositionError(NumericError):
    def __init__(self, message: str = "Mixture weight is numerically 0 or 1.", details: dict[str, Any] | None = None):
        super().__init__(message, code="DEGENERATE_DECOMPOSITION", details=details)
