import copy
import json
import os

import pytest

# keep the app's default engine off the working directory
os.environ.setdefault("DATABASE_URL", "sqlite://")

TINY_HELMHOLTZ = {
    "name": "tiny_helmholtz",
    "problem": "helmholtz",
    "decomposition": "split_x0",
    "mode": "idpinn",
    "variant": 3,
    "layers": [2, 4, 1],
    "weights": {"lambda_1": 1, "lambda_2": 10, "lambda_4": 20, "lambda_5": 2, "lambda_6": 5},
    "schedule": {
        "init_iterations": 3,
        "main_iterations": 3,
        "learning_rate": 1e-3,
        "init_counts": {"residual": 10, "boundary": 6},
        "history_stride": 2,
    },
    "points": {
        "subdomains": [{"residual": 20, "boundary": 8}, {"residual": 20, "boundary": 8}],
        "interface": [6],
    },
    "seed": 0,
    "grid_shape": [12, 12],
    "interface_pool_count": 50,
    "slices": [{"axis": "y", "value": 0.125, "resolution": 20}],
}


@pytest.fixture
def tiny_config_dict():
    return copy.deepcopy(TINY_HELMHOLTZ)


@pytest.fixture
def tiny_config(tiny_config_dict):
    from schemas.experiment_schema import parse_experiment_config

    return parse_experiment_config(tiny_config_dict)


@pytest.fixture
def tiny_config_file(tmp_path, tiny_config_dict):
    path = tmp_path / "tiny_helmholtz.json"
    path.write_text(json.dumps(tiny_config_dict))
    return path


@pytest.fixture(scope="session")
def tiny_session_config():
    from schemas.experiment_schema import parse_experiment_config

    return parse_experiment_config(copy.deepcopy(TINY_HELMHOLTZ))
