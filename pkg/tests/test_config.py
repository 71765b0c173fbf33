"""Tests for config.py: id parsing, registries and the experiment file."""

import json

import pytest

from stable_lab.config import (
    BUILTIN_SCENARIOS,
    ExperimentConfig,
    parse_law,
    parse_measure,
    parse_model,
    parse_test_function,
)
from stable_lab.exceptions import UsageError
from stable_lab.rate_lab import EXACT_GRID, MC_GRID
from stable_lab.spectral_core import MeasureKind
from stable_lab.tail_models import ModelKind
from stable_lab.tv_metrics import DistanceMethod


# ---------------------------------------------------------------------------
# Model ids
# ---------------------------------------------------------------------------


class TestParseModel:
    def test_pareto(self):
        model = parse_model("pareto:d=2,alpha=1.5")
        assert model.kind is ModelKind.PARETO
        assert model.dim == 2
        assert model.alpha == 1.5

    def test_dna_with_epsilon_parameters(self):
        model = parse_model("dna:alpha=0.8,w_plus=0.7,eps=power,gamma=1,K=1,c=0.5,p=1")
        assert model.kind is ModelKind.DNA
        assert model.gamma == 1.0
        assert model.params["w_plus"] == 0.7
        assert model.params["c"] == 0.5

    def test_epsilon_alias(self):
        registry = {"epsilon": {"soft": {"kind": "power", "c": 0.2}}}
        model = parse_model("dna:alpha=1.5,eps=soft,gamma=1,K=1", registry)
        assert model.params["eps_name"] == "power"
        assert model.params["c"] == 0.2

    def test_alias_without_kind(self):
        with pytest.raises(UsageError, match="lacks a 'kind'"):
            parse_model("dna:alpha=1.5,eps=soft", {"epsilon": {"soft": {"c": 0.2}}})

    def test_unknown_epsilon(self):
        with pytest.raises(UsageError, match="unknown epsilon 'wobble'"):
            parse_model("dna:alpha=1.5,eps=wobble")

    @pytest.mark.parametrize(
        ("model_id", "message"),
        [
            ("levy:alpha=1", "unknown model"),
            ("pareto:d=1,alpha", "malformed field"),
            ("pareto:d=1", "missing required field 'alpha'"),
            ("pareto:d=1,alpha=big", "must be a number"),
        ],
    )
    def test_bad_ids(self, model_id, message):
        with pytest.raises(UsageError, match=message):
            parse_model(model_id)


class TestParseMeasureAndLaw:
    def test_symmetric(self):
        nu = parse_measure("symmetric", 2)
        assert nu.kind is MeasureKind.ATOMS
        assert nu.is_symmetric()

    def test_skew_one_dimension(self):
        dirs, wts = parse_measure("skew:0.7", 1).nodes()
        assert sorted(wts.tolist()) == pytest.approx([0.3, 0.7])

    def test_skew_drops_empty_atom(self):
        dirs, wts = parse_measure("skew:1", 2).nodes()
        assert dirs.tolist() == [[1.0, 0.0]]
        assert wts.tolist() == [1.0]

    def test_density(self):
        assert parse_measure("density:cardioid", 2).kind is MeasureKind.DENSITY

    @pytest.mark.parametrize(("text", "message"), [("skew:1.5", "skew weight"), ("density:blob", "unknown density")])
    def test_bad_measures(self, text, message):
        with pytest.raises(UsageError, match=message):
            parse_measure(text, 2)

    def test_law(self):
        law = parse_law("stable:d=2,alpha=1.2,nu=density:cardioid")
        assert law.dim == 2
        assert law.alpha == 1.2
        assert law.law_id() == "stable:d=2,alpha=1.2,nu=density:cardioid"

    def test_law_dimension(self):
        with pytest.raises(UsageError, match="dimension"):
            parse_law("stable:d=0,alpha=1.2")


class TestParseTestFunction:
    def test_cosine(self):
        f = parse_test_function("cos:2")
        assert f.frequency.tolist() == [2.0]

    def test_vector_argument(self):
        f = parse_test_function("cos:1;2", dim=2)
        assert f.frequency.tolist() == [1.0, 2.0]

    def test_scalar_broadcast(self):
        assert parse_test_function("sin:3", dim=3).frequency.tolist() == [3.0, 3.0, 3.0]

    def test_constant_and_biweight(self):
        assert parse_test_function("const:3").norm(0) == 3.0
        assert parse_test_function("biweight:2").support_radius == 2.0
        assert parse_test_function("step").name == "step"

    def test_registry_alias(self):
        registry = {"test_functions": {"wave": {"kind": "cos", "value": "3"}}}
        assert parse_test_function("wave", registry=registry).frequency.tolist() == [3.0]

    @pytest.mark.parametrize(("text", "message"), [("tanh:1", "unknown test function"), ("cos:x", "bad test")])
    def test_bad_functions(self, text, message):
        with pytest.raises(UsageError, match=message):
            parse_test_function(text)


# ---------------------------------------------------------------------------
# Experiment file
# ---------------------------------------------------------------------------


class TestExperimentConfig:
    def test_default(self):
        config = ExperimentConfig.default(seed=5)
        assert config.seed == 5
        assert set(BUILTIN_SCENARIOS) <= set(config.scenarios)

    def test_seed_required(self):
        with pytest.raises(UsageError, match="master 'seed'"):
            ExperimentConfig.from_dict({"scenarios": {}})

    def test_unknown_registry_section(self):
        with pytest.raises(UsageError, match="unknown registry sections"):
            ExperimentConfig.from_dict({"seed": 1, "registry": {"laws": {}}})

    def test_scenario_without_model(self):
        with pytest.raises(UsageError, match="has no model"):
            ExperimentConfig.from_dict({"seed": 1, "scenarios": {"empty": {}}})

    def test_scenario_domain_error_becomes_usage_error(self):
        with pytest.raises(UsageError, match="scenario 'wild' is invalid"):
            ExperimentConfig.from_dict({"seed": 1, "scenarios": {"wild": {"model": "pareto:d=1,alpha=2.5"}}})

    def test_scenario_probe_function_checked(self):
        data = {"seed": 1, "scenarios": {"p": {"model": "pareto:d=1,alpha=1.5", "probes": {"test_function": "nope"}}}}
        with pytest.raises(UsageError, match="unknown test function"):
            ExperimentConfig.from_dict(data)

    def test_hash_ignores_key_order(self):
        a = ExperimentConfig.from_dict({"seed": 1, "workers": 2})
        b = ExperimentConfig.from_dict({"workers": 2, "seed": 1})
        c = ExperimentConfig.from_dict({"seed": 2, "workers": 2})
        assert a.config_hash == b.config_hash
        assert a.config_hash != c.config_hash
        assert len(a.config_hash) == 16

    def test_load(self, tmp_path):
        path = tmp_path / "lab.json"
        path.write_text(json.dumps({"seed": 9, "output_dir": str(tmp_path / "out"), "workers": 3}))
        config = ExperimentConfig.load(path)
        assert config.seed == 9
        assert config.workers == 3
        assert config.output_dir == tmp_path / "out"

    def test_load_missing(self, tmp_path):
        with pytest.raises(UsageError, match="not found"):
            ExperimentConfig.load(tmp_path / "absent.json")

    def test_load_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{seed: 1")
        with pytest.raises(UsageError, match="not valid JSON"):
            ExperimentConfig.load(path)

    def test_builtin_rate_scenario(self):
        scenario = ExperimentConfig.default(seed=4).rate_scenario("pareto-a15")
        assert scenario.method is DistanceMethod.CF_INVERSION
        assert scenario.n_grid == EXACT_GRID
        assert scenario.seed == 4
        assert scenario.name == "pareto-a15"

    def test_histogram_scenario_defaults_to_mc_grid(self):
        block = {"model": "pareto:d=2,alpha=1.5", "sweep": {"method": "histogram-lb"}}
        data = {"seed": 1, "scenarios": {"plane": block}}
        scenario = ExperimentConfig.from_dict(data).rate_scenario("plane")
        assert scenario.n_grid == MC_GRID
        assert scenario.law.dim == 2

    def test_unknown_method(self):
        data = {"seed": 1, "scenarios": {"x": {"model": "pareto:d=1,alpha=1.5", "sweep": {"method": "energy"}}}}
        with pytest.raises(UsageError, match="unknown distance method"):
            ExperimentConfig.from_dict(data).rate_scenario("x")

    def test_unknown_scenario(self):
        with pytest.raises(UsageError, match="unknown scenario 'nope'"):
            ExperimentConfig.default().scenario("nope")
