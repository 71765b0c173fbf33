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

"""Output files: provenance-stamped CSV, JSON results and per-run manifests."""

from __future__ import annotations

import csv
import json
import logging
import math
import platform
import time
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field, is_dataclass
from datetime import UTC, datetime
from enum import Enum
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from .exceptions import UsageError

logger = logging.getLogger(__name__)

PACKAGE = "stable-clt-lab"
MANIFEST_GLOB = "manifest-*.json"


def package_versions() -> dict[str, str]:
    try:
        own = version(PACKAGE)
    except PackageNotFoundError:
        own = "0.0.0"
    return {PACKAGE: own, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars and arrays unwrapped, non-finite floats as null."""
    match value:
        case dict():
            return {str(k): _plain(v) for k, v in value.items()}
        case list() | tuple():
            return [_plain(v) for v in value]
        case np.ndarray():
            return _plain(value.tolist())
        case np.generic():
            return _plain(value.item())
        case Enum():
            return value.value
        case Path():
            return str(value)
        case _ if is_dataclass(value) and not isinstance(value, type):
            return _plain(asdict(value))
        case float() if not math.isfinite(value):
            return None
        case _:
            return value


def _prepare(path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _cell(value: Any) -> str:
    if isinstance(value, float | np.floating):
        return f"{float(value):.17g}"
    return "" if value is None else str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], provenance: dict[str, Any]) -> Path:
    with path.open("w", encoding="utf-8", newline="") as handle:
        for key in sorted(provenance):
            handle.write(f"# {key}: {_plain(provenance[key])}\r\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows([_cell(v) for v in row] for row in rows)
    logger.debug(f"wrote {path}")
    return path


def write_points_csv(path: str | Path, points: np.ndarray, provenance: dict[str, Any] | None = None) -> Path:
    """One row per point, columns x1..xd, preceded by ``# key: value`` provenance lines."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    header = [f"x{k + 1}" for k in range(pts.shape[1])]
    return _write_csv(_prepare(path), header, pts.tolist(), provenance or {})


def write_rows_csv(
    path: str | Path,
    rows: Sequence[dict[str, Any]],
    provenance: dict[str, Any] | None = None,
    columns: Sequence[str] | None = None,
) -> Path:
    header = list(columns) if columns is not None else list(rows[0]) if rows else []
    return _write_csv(_prepare(path), header, ([row.get(c) for c in header] for row in rows), provenance or {})


def read_points_csv(path: str | Path) -> tuple[np.ndarray, dict[str, str]]:
    """Inverse of :func:`write_points_csv`."""
    provenance: dict[str, str] = {}
    body: list[str] = []
    with Path(path).open(encoding="utf-8", newline="") as handle:
        for line in handle:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\r\n").partition(": ")
                provenance[key] = value
            else:
                body.append(line)
    reader = csv.reader(body)
    next(reader, None)
    return np.array([[float(v) for v in row] for row in reader if row]), provenance


def write_json(path: str | Path, payload: Any) -> Path:
    out = _prepare(path)
    out.write_text(json.dumps(_plain(payload), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    logger.debug(f"wrote {out}")
    return out


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    started_at: str = field(default_factory=lambda: datetime.now(UTC).isoformat())
    wall_time: float = 0.0
    exit_code: int = 0
    outputs: list[str] = field(default_factory=list)
    parameters: dict[str, Any] = field(default_factory=dict)
    versions: dict[str, str] = field(default_factory=package_versions)
    _clock: float = field(default_factory=time.perf_counter, repr=False)

    def add(self, path: Path) -> Path:
        self.outputs.append(str(path))
        return path

    def finish(self, out_dir: str | Path, exit_code: int) -> Path:
        self.exit_code = exit_code
        self.wall_time = time.perf_counter() - self._clock
        payload = {k: v for k, v in asdict(self).items() if not k.startswith("_")}
        return write_json(Path(out_dir) / f"manifest-{self.command}-{self.config_hash}.json", payload)


def load_manifests(out_dir: str | Path) -> list[dict[str, Any]]:
    root = Path(out_dir)
    if not root.is_dir():
        raise UsageError(f"output directory {root} does not exist")
    manifests = []
    for path in sorted(root.glob(MANIFEST_GLOB)):
        try:
            manifests.append(json.loads(path.read_text(encoding="utf-8")))
        except json.JSONDecodeError as e:
            logger.warning(f"skipping unreadable manifest {path}: {e}")
    return manifests


def summarize(out_dir: str | Path) -> dict[str, Any]:
    """Aggregate every run manifest in ``out_dir`` into one report."""
    manifests = load_manifests(out_dir)
    return {
        "runs": len(manifests),
        "failed": sum(1 for m in manifests if m.get("exit_code", 0) != 0),
        "config_hashes": sorted({m.get("config_hash", "") for m in manifests}),
        "commands": [
            {k: m.get(k) for k in ("command", "exit_code", "wall_time", "started_at", "outputs")} for m in manifests
        ],
    }
