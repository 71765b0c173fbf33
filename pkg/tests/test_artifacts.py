"""Tests for artifacts.py: CSV/JSON writers, run manifests and the summary report."""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from stable_lab.artifacts import (
    PACKAGE,
    RunManifest,
    load_manifests,
    package_versions,
    read_points_csv,
    summarize,
    write_json,
    write_points_csv,
    write_rows_csv,
)
from stable_lab.exceptions import UsageError
from stable_lab.tv_metrics import DistanceMethod


@dataclass
class Pair:
    left: float
    right: np.ndarray


class TestWriters:
    def test_points_with_provenance(self, tmp_path):
        pts = np.array([[0.1, -2.5], [1e-17, 3.0]])
        path = write_points_csv(tmp_path / "sub" / "pts.csv", pts, {"seed": 7, "law": "stable:d=2,alpha=1.2"})
        back, provenance = read_points_csv(path)
        np.testing.assert_array_equal(back, pts)
        assert provenance == {"law": "stable:d=2,alpha=1.2", "seed": "7"}
        assert path.read_text().splitlines()[2] == "x1,x2"

    def test_rows_in_column_order(self, tmp_path):
        rows = [{"n": 16, "value": 0.5, "error": None}, {"n": 32, "value": 0.25, "error": 1e-3}]
        path = write_rows_csv(tmp_path / "rows.csv", rows, columns=("n", "value", "error"))
        assert path.read_text().splitlines() == ["n,value,error", "16,0.5,", "32,0.25,0.001"]

    def test_rows_header_from_first_row(self, tmp_path):
        path = write_rows_csv(tmp_path / "rows.csv", [{"b": 1, "a": 2}])
        assert path.read_text().splitlines()[0] == "b,a"

    def test_json_is_plain(self, tmp_path):
        payload = {
            "array": np.arange(3),
            "scalar": np.float64(0.5),
            "nan": math.nan,
            "method": DistanceMethod.KOLMOGOROV,
            "path": Path("out"),
            "pair": Pair(1.0, np.array([2.0, math.inf])),
            (1, 2): "tuple key",
        }
        data = json.loads(write_json(tmp_path / "p.json", payload).read_text())
        assert data == {
            "array": [0, 1, 2],
            "scalar": 0.5,
            "nan": None,
            "method": "kolmogorov",
            "path": "out",
            "pair": {"left": 1.0, "right": [2.0, None]},
            "(1, 2)": "tuple key",
        }


class TestManifests:
    def test_finish_writes_manifest(self, tmp_path):
        manifest = RunManifest("tv", "abc123", 11, parameters={"n_grid": [16, 32]})
        manifest.add(tmp_path / "tv.csv")
        path = manifest.finish(tmp_path, 0)
        assert path.name == "manifest-tv-abc123.json"
        data = json.loads(path.read_text())
        assert data["seed"] == 11
        assert data["outputs"] == [str(tmp_path / "tv.csv")]
        assert data["wall_time"] >= 0.0
        assert "_clock" not in data
        assert PACKAGE in data["versions"]

    def test_summary_counts_failures(self, tmp_path):
        RunManifest("tv", "h1", 1).finish(tmp_path, 0)
        RunManifest("rate", "h1", 1).finish(tmp_path, 1)
        (tmp_path / "manifest-broken-x.json").write_text("{")
        report = summarize(tmp_path)
        assert report["runs"] == 2
        assert report["failed"] == 1
        assert report["config_hashes"] == ["h1"]
        assert sorted(c["command"] for c in report["commands"]) == ["rate", "tv"]

    def test_missing_directory(self, tmp_path):
        with pytest.raises(UsageError, match="does not exist"):
            load_manifests(tmp_path / "absent")

    def test_versions(self):
        versions = package_versions()
        assert set(versions) == {PACKAGE, "numpy", "scipy", "python"}
        assert versions["numpy"] == np.__version__
