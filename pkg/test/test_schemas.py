import json
from pathlib import Path

import pytest

import app_config
from schemas.experiment_schema import (
    ExperimentConfig,
    LossWeights,
    load_experiment_config,
    parse_experiment_config,
)
from utils.exceptions import ConfigError
from workflow.config_lint import REFERENCE_SETTINGS, lint_config, lint_configs

BUNDLED = sorted(Path(app_config.CONFIG_DIR).glob("*.json"))


@pytest.mark.parametrize("path", BUNDLED, ids=[p.stem for p in BUNDLED])
def test_bundled_configs_load_and_match_reference(path):
    config = load_experiment_config(path)
    assert config.name == path.stem
    check = lint_config(path.stem, config)
    assert check.passed, check.detail


def test_every_reference_setting_is_bundled():
    checks = lint_configs()
    assert len(checks) == len(REFERENCE_SETTINGS)
    assert all(check.passed for check in checks), [c.detail for c in checks if not c.passed]


def test_lint_detects_drift(tiny_config):
    config = load_experiment_config(Path(app_config.CONFIG_DIR) / "poisson_idpinn3.json")
    drifted = config.model_copy(update={"schedule": config.schedule.model_copy(update={"learning_rate": 1e-3})})
    check = lint_config("poisson_idpinn3", drifted)
    assert not check.passed
    assert "learning_rate" in check.detail
    assert not lint_config("not_a_reference", tiny_config).passed


def test_lint_reports_missing_bundles(tmp_path):
    checks = lint_configs(tmp_path)
    assert not any(check.passed for check in checks)
    assert checks[0].detail == "bundled config missing"


def test_variant_follows_weights():
    assert LossWeights(lambda_5=1).variant() == 1
    assert LossWeights(lambda_6=1).variant() == 2
    assert LossWeights(lambda_5=1, lambda_6=1).variant() == 3
    assert LossWeights(lambda_4=1).variant() is None
    assert LossWeights(lambda_1=2, lambda_4=3, lambda_5=1).pinn_only() == LossWeights(lambda_1=2)


@pytest.mark.parametrize(
    "patch",
    [
        {"variant": 1},
        {"unknown_field": True},
        {"points": {"subdomains": [{"residual": 5}], "interface": [3]}},
        {"points": {"subdomains": [{"residual": 5}, {"residual": 5}], "interface": []}},
        {"subdomain_layers": [[2, 4, 1], [2, 5, 1]]},
        {"layers": [3, 4, 1]},
        {"problem": "wave"},
        {"weights": {"lambda_1": -1.0}},
    ],
)
def test_invalid_configs_raise_config_error(tiny_config_dict, patch):
    with pytest.raises(ConfigError) as err:
        parse_experiment_config({**tiny_config_dict, **patch})
    assert err.value.error_type == "invalid_config"
    assert err.value.details["errors"]


def test_heterogeneous_layers_without_init(tiny_config_dict):
    raw = {**tiny_config_dict, "mode": "xpinn", "variant": None,
           "weights": {"lambda_1": 1, "lambda_2": 20, "lambda_residual": 20, "lambda_avg": 20},
           "schedule": {**tiny_config_dict["schedule"], "init_iterations": 0},
           "subdomain_layers": [[2, 4, 1], [2, 3, 3, 1]]}
    config = parse_experiment_config(raw)
    assert [spec.sizes for spec in config.layer_specs()] == [[2, 4, 1], [2, 3, 3, 1]]


def test_parse_from_json_text(tiny_config_dict):
    config = parse_experiment_config(json.dumps(tiny_config_dict))
    assert config == ExperimentConfig.model_validate(tiny_config_dict)
    with pytest.raises(ConfigError):
        parse_experiment_config("{not json")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_experiment_config(tmp_path / "absent.json")
    assert err.value.details["path"].endswith("absent.json")


def test_with_overrides(tiny_config):
    updated = tiny_config.with_overrides(seed=7, iterations=11, output_dir="out")
    assert (updated.seed, updated.schedule.main_iterations, updated.output_dir) == (7, 11, "out")
    assert tiny_config.seed == 0
    with pytest.raises(ConfigError):
        tiny_config.with_overrides(iterations=-1)


def test_init_stage_needs_points(tiny_config_dict):
    schedule = {**tiny_config_dict["schedule"], "init_counts": {"residual": 0, "boundary": 0, "initial": 0}}
    with pytest.raises(ConfigError):
        parse_experiment_config({**tiny_config_dict, "schedule": schedule})

    disabled = parse_experiment_config({**tiny_config_dict, "schedule": {**schedule, "init_iterations": 0}})
    assert disabled.schedule.init_counts.total() == 0
