"""
One-axis parameter sweeps over a base experiment config. Each axis value is
trained for every seed; the summary keeps the best run per value.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

import app_config
from schemas.experiment_schema import ExperimentConfig
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

SWEEP_AXES: Dict[str, List[Any]] = {
    "lambda6": [0.01, 0.1, 1.0, 2.0, 20.0],
    "init_iterations": [100, 500, 2000],
    "layers": [(depth, width) for width, depth in product([20, 40, 60, 80], [2, 3, 4, 6, 8])],
}

RUN_COLUMNS = ["axis", "value", "seed", "run_id", "final_l2", "status", "error", "output_dir"]
SUMMARY_COLUMNS = ["axis", "value", "best_seed", "best_l2", "runs", "failures"]


def value_label(axis: str, value: Any) -> str:
    if axis == "layers":
        depth, width = value
        return f"{depth}x{width}"
    return f"{value:g}"


def apply_axis_value(config: ExperimentConfig, axis: str, value: Any) -> ExperimentConfig:
    data = config.model_dump(mode="json")
    if axis == "lambda6":
        data["weights"]["lambda_6"] = float(value)
    elif axis == "init_iterations":
        data["schedule"]["init_iterations"] = int(value)
    elif axis == "layers":
        depth, width = value
        input_dim, output_dim = config.layers[0], config.layers[-1]
        data["layers"] = [input_dim] + [int(width)] * int(depth) + [output_dim]
        data["subdomain_layers"] = None
    else:
        raise ConfigError(f"unknown sweep axis '{axis}'", expected=sorted(SWEEP_AXES))

    if config.variant is not None:
        weights = config.weights.model_copy(update={"lambda_6": data["weights"]["lambda_6"]})
        data["variant"] = weights.variant()
    data["name"] = f"{config.name}_{axis}_{value_label(axis, value)}"
    return ExperimentConfig.model_validate(data)


def _run_point(task: Dict[str, Any]) -> Dict[str, Any]:
    """Top-level so ProcessPoolExecutor can pickle it; never raises"""
    from workflow.run_graph import run_experiment

    row = {key: task[key] for key in ("axis", "value", "seed", "run_id", "output_dir")}
    try:
        config = ExperimentConfig.model_validate(task["config"])
        state = run_experiment(config, task["run_id"], task["output_dir"], task["cache_dir"])
    except Exception as e:
        logger.exception(f"Sweep run {task['run_id']} raised")
        return {**row, "final_l2": None, "status": "failed", "error": str(e)}
    if state.get("error"):
        return {**row, "final_l2": None, "status": "failed", "error": state["error"]}
    return {**row, "final_l2": state["summary"].final_l2, "status": "completed", "error": None}


def summarize(runs: pd.DataFrame) -> pd.DataFrame:
    if runs.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    rows = []
    for (axis, value), group in runs.groupby(["axis", "value"], sort=False):
        done = group[group["status"] == "completed"]
        best = done.loc[pd.to_numeric(done["final_l2"]).idxmin()] if not done.empty else None
        rows.append({
            "axis": axis,
            "value": value,
            "best_seed": None if best is None else int(best["seed"]),
            "best_l2": None if best is None else float(best["final_l2"]),
            "runs": len(group),
            "failures": int((group["status"] != "completed").sum()),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def sweep(base_config: ExperimentConfig, axis: str, values: Optional[Sequence[Any]] = None,
          seeds: Optional[Sequence[int]] = None, output_dir: Union[str, Path, None] = None,
          workers: int = app_config.NUM_WORKERS,
          cache_dir: Optional[str] = app_config.CACHE_DIR) -> pd.DataFrame:
    """
    Run base_config once per (value, seed) and write sweep_runs.csv and
    sweep_summary.csv under output_dir. Failed runs are recorded, not raised.
    Returns the summary frame.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis '{axis}'", expected=sorted(SWEEP_AXES))
    values = SWEEP_AXES[axis] if values is None else list(values)
    seeds = [base_config.seed] if not seeds else list(seeds)
    out = Path(output_dir or Path(app_config.OUTPUT_ROOT) / f"sweep_{base_config.name}_{axis}")
    out.mkdir(parents=True, exist_ok=True)

    tasks = []
    for value in values:
        label = value_label(axis, value)
        try:
            config = apply_axis_value(base_config, axis, value)
        except Exception as e:
            # invalid axis values become failed rows like any other run
            logger.error(f"Skipping {axis}={label}: {e}")
            tasks.extend({"axis": axis, "value": label, "seed": seed, "run_id": f"{axis}_{label}_s{seed}",
                          "output_dir": None, "invalid": str(e)} for seed in seeds)
            continue
        for seed in seeds:
            run_id = f"{axis}_{label}_s{seed}"
            tasks.append({
                "axis": axis,
                "value": label,
                "seed": seed,
                "run_id": run_id,
                "output_dir": str(out / run_id),
                "cache_dir": cache_dir,
                "config": config.with_overrides(seed=seed).model_dump(mode="json"),
            })

    runnable = [task for task in tasks if "invalid" not in task]
    logger.info(f"Sweep over {axis}: {len(values)} values x {len(seeds)} seeds, {len(runnable)} runs")
    if workers > 1 and len(runnable) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, runnable))
    else:
        results = [_run_point(task) for task in runnable]

    invalid = [{**{k: task[k] for k in ("axis", "value", "seed", "run_id", "output_dir")},
                "final_l2": None, "status": "invalid", "error": task["invalid"]}
               for task in tasks if "invalid" in task]
    runs = pd.DataFrame(results + invalid, columns=RUN_COLUMNS)
    summary = summarize(runs)
    runs.to_csv(out / "sweep_runs.csv", index=False)
    summary.to_csv(out / "sweep_summary.csv", index=False)
    logger.info(f"Sweep summary written to {out / 'sweep_summary.csv'}")
    return summary
