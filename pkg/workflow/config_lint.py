"""
Lint the bundled experiment configs against the reference settings they are
meant to reproduce: loss weights, learning rate, iteration budgets and point
counts per region.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import app_config
from schemas.experiment_schema import ExperimentConfig, ValidationCheck, load_experiment_config
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

# weights are (l1, l2, l3, l4, l5, l6, l_residual, l_avg); counts are (residual, boundary, initial)
HELMHOLTZ_IDPINN3 = {
    "problem": "helmholtz",
    "mode": "idpinn",
    "layers": [2, 55, 55, 55, 55, 55, 1],
    "weights": (1, 10, 0, 20, 2, 5, 0, 0),
    "learning_rate": 8e-5,
    "init_iterations": 2000,
    "main_iterations": 98000,
    "init_counts": (500, 80, 0),
    "subdomains": [(3000, 200, 0), (3000, 200, 0)],
    "interface": [200],
}
HELMHOLTZ_XPINN = {
    **HELMHOLTZ_IDPINN3,
    "mode": "xpinn",
    "weights": (1, 20, 0, 0, 0, 0, 20, 80),
    "init_iterations": 0,
    "main_iterations": 100000,
    "init_counts": (0, 0, 0),
}

POISSON_IDPINN3 = {
    "problem": "poisson",
    "mode": "idpinn",
    "layers": [2, 20, 20, 20, 20, 1],
    "weights": (1, 20, 0, 2, 5, 5, 0, 0),
    "learning_rate": 8e-4,
    "init_iterations": 500,
    "main_iterations": 3500,
    "init_counts": (800, 50, 0),
    "subdomains": [(1000, 100, 0), (180, 0, 0), (120, 0, 0)],
    "interface": [50, 50],
}
POISSON_XPINN_U20 = {
    **POISSON_IDPINN3,
    "mode": "xpinn",
    "weights": (1, 20, 0, 0, 0, 0, 20, 20),
    "init_iterations": 0,
    "main_iterations": 4000,
    "init_counts": (0, 0, 0),
}

HEAT_IDPINN3 = {
    "problem": "heat",
    "mode": "idpinn",
    "layers": [2] + [20] * 9 + [1],
    "weights": (2, 10, 20, 20, 5, 5, 0, 0),
    "learning_rate": 5.5e-6,
    "init_iterations": 1000,
    "main_iterations": 14000,
    "init_counts": (1000, 50, 50),
    "subdomains": [(2000, 100, 200), (2000, 100, 0)],
    "interface": [200],
}

BURGERS_IDPINN1 = {
    "problem": "burgers",
    "mode": "idpinn",
    "layers": [2] + [20] * 7 + [1],
    "weights": (1, 20, 5, 20, 2, 0, 0, 0),
    "learning_rate": 7e-4,
    "init_iterations": 1000,
    "main_iterations": 14000,
    "init_counts": (1000, 60, 30),
    "subdomains": [(2450, 120, 60), (450, 0, 0)],
    "interface": [100],
}

REFERENCE_SETTINGS: Dict[str, dict] = {
    "helmholtz_idpinn3": HELMHOLTZ_IDPINN3,
    "helmholtz_idpinn3-desk": {**HELMHOLTZ_IDPINN3, "main_iterations": 18000},
    "helmholtz_idpinn3_noinit-desk": {
        **HELMHOLTZ_IDPINN3, "init_iterations": 0, "main_iterations": 20000, "init_counts": (0, 0, 0),
    },
    "helmholtz_idpinn3_noinit_highlr": {
        **HELMHOLTZ_IDPINN3, "init_iterations": 0, "main_iterations": 100000, "init_counts": (0, 0, 0),
        "learning_rate": 1e-2,
    },
    "helmholtz_xpinn": HELMHOLTZ_XPINN,
    "helmholtz_xpinn-desk": {**HELMHOLTZ_XPINN, "main_iterations": 20000},
    "helmholtz_xpinn_highlr": {**HELMHOLTZ_XPINN, "learning_rate": 1e-2},
    "poisson_idpinn1": {**POISSON_IDPINN3, "weights": (1, 20, 0, 2, 5, 0, 0, 0)},
    "poisson_idpinn2": {**POISSON_IDPINN3, "weights": (1, 20, 0, 2, 0, 5, 0, 0)},
    "poisson_idpinn3": POISSON_IDPINN3,
    "poisson_idpinn3_lambda6_2": {**POISSON_IDPINN3, "weights": (1, 20, 0, 2, 5, 2, 0, 0)},
    "poisson_xpinn_u20": POISSON_XPINN_U20,
    "poisson_xpinn": {
        **POISSON_XPINN_U20,
        "subdomain_layers": [[2, 20, 20, 20, 20, 1], [2, 25, 25, 25, 1], [2, 30, 30, 1]],
    },
    "heat_idpinn3": HEAT_IDPINN3,
    "heat_xpinn": {
        **HEAT_IDPINN3, "mode": "xpinn", "weights": (2, 10, 20, 0, 0, 0, 20, 20),
        "init_iterations": 0, "main_iterations": 15000, "init_counts": (0, 0, 0),
    },
    "heat_pinn": {
        **HEAT_IDPINN3, "mode": "pinn", "weights": (2, 10, 20, 0, 0, 0, 0, 0),
        "init_iterations": 0, "main_iterations": 15000, "init_counts": (0, 0, 0),
        "subdomains": [(2100, 100, 200), (2100, 100, 0)], "interface": [],
    },
    "burgers_idpinn1": BURGERS_IDPINN1,
    "burgers_idpinn3": {**BURGERS_IDPINN1, "weights": (1, 20, 5, 20, 2, 2, 0, 0)},
    "burgers_pinn": {
        **BURGERS_IDPINN1, "mode": "pinn", "weights": (1, 20, 5, 0, 0, 0, 0, 0),
        "init_iterations": 0, "main_iterations": 15000, "init_counts": (0, 0, 0),
        "subdomains": [(2550, 120, 60), (450, 0, 0)], "interface": [],
    },
}


def _observed(config: ExperimentConfig) -> dict:
    w = config.weights
    s = config.schedule
    return {
        "problem": config.problem,
        "mode": config.mode.value,
        "layers": config.layers,
        "subdomain_layers": config.subdomain_layers,
        "weights": (w.lambda_1, w.lambda_2, w.lambda_3, w.lambda_4, w.lambda_5, w.lambda_6,
                    w.lambda_residual, w.lambda_avg),
        "learning_rate": s.learning_rate,
        "init_iterations": s.init_iterations,
        "main_iterations": s.main_iterations,
        "init_counts": (s.init_counts.residual, s.init_counts.boundary, s.init_counts.initial),
        "subdomains": [(c.residual, c.boundary, c.initial) for c in config.points.subdomains],
        "interface": list(config.points.interface),
    }


def _normalize(value):
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return value


def lint_config(name: str, config: ExperimentConfig, expected: Optional[dict] = None) -> ValidationCheck:
    expected = REFERENCE_SETTINGS.get(name) if expected is None else expected
    if expected is None:
        return ValidationCheck(name=f"config {name}", passed=False, detail="no reference settings for this config")
    observed = _observed(config)
    mismatches = [
        f"{key}: expected {expected.get(key)}, found {observed[key]}"
        for key in observed
        if _normalize(observed[key]) != _normalize(expected.get(key))
    ]
    return ValidationCheck(name=f"config {name}", passed=not mismatches, detail="; ".join(mismatches))


def lint_configs(config_dir: Union[str, Path] = app_config.CONFIG_DIR) -> List[ValidationCheck]:
    config_dir = Path(config_dir)
    checks = []
    found = {path.stem: path for path in sorted(config_dir.glob("*.json"))}
    for name in REFERENCE_SETTINGS:
        if name not in found:
            checks.append(ValidationCheck(name=f"config {name}", passed=False, detail="bundled config missing"))
            continue
        try:
            checks.append(lint_config(name, load_experiment_config(found[name])))
        except ConfigError as e:
            checks.append(ValidationCheck(name=f"config {name}", passed=False, detail=e.message))
    return checks
