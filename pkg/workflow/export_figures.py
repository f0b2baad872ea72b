"""
Turn the CSVs of a finished run directory into plot-ready tables under
<run>/figures/. Works from files alone; nothing is retrained or re-evaluated.
"""

import logging
from pathlib import Path
from typing import Dict, List, Union

import pandas as pd

from utils.exceptions import MissingArtifactError

logger = logging.getLogger(__name__)

FIELD_COLUMNS = ["u", "u_hat", "abs_err"]


def _is_tensor_grid(frame: pd.DataFrame) -> bool:
    return frame["x"].nunique() * frame["y_or_t"].nunique() == len(frame)


def export_fields(pointwise: pd.DataFrame, out: Path) -> List[Path]:
    """Pivoted (y_or_t rows, x columns) fields on tensor grids; a scatter table otherwise"""
    written = []
    if _is_tensor_grid(pointwise):
        for column in FIELD_COLUMNS:
            path = out / f"field_{column}.csv"
            pointwise.pivot(index="y_or_t", columns="x", values=column).to_csv(path)
            written.append(path)
    else:
        path = out / "field_scatter.csv"
        pointwise.to_csv(path, index=False)
        written.append(path)
    return written


def export_histories(run_dir: Path, out: Path) -> List[Path]:
    frames = []
    for name, stage in (("init_history.csv", "init"), ("history.csv", "main")):
        path = run_dir / name
        if path.is_file():
            frame = pd.read_csv(path)
            if not frame.empty:
                frames.append(frame.assign(stage=stage))
    if not frames:
        return []

    history = pd.concat(frames, ignore_index=True)
    loss_columns = ["iteration", "stage"] + [c for c in history.columns
                                             if c not in ("iteration", "stage") and not c.startswith(("l2_", "interface_l2_"))]
    l2_columns = ["iteration", "stage"] + [c for c in history.columns if c.startswith(("l2_", "interface_l2_"))]

    written = [out / "loss_history.csv"]
    history[loss_columns].to_csv(written[0], index=False)
    if len(l2_columns) > 2:
        written.append(out / "l2_history.csv")
        history[l2_columns].to_csv(written[-1], index=False)
    return written


def export_slices(run_dir: Path, out: Path) -> List[Path]:
    slice_dir = run_dir / "slices"
    if not slice_dir.is_dir():
        return []
    frames = []
    for path in sorted(slice_dir.glob("*.csv")):
        axis, _, value = path.stem.partition("_")
        frames.append(pd.read_csv(path).assign(axis=axis, axis_value=float(value)))
    if not frames:
        return []
    combined = out / "slices.csv"
    pd.concat(frames, ignore_index=True).to_csv(combined, index=False)
    return [combined]


def export_figures(run_dir: Union[str, Path]) -> Dict[str, List[str]]:
    run_dir = Path(run_dir)
    pointwise_path = run_dir / "pointwise.csv"
    if not pointwise_path.is_file():
        raise MissingArtifactError(f"{pointwise_path} not found; is this a completed run?", run_dir=str(run_dir))

    out = run_dir / "figures"
    out.mkdir(exist_ok=True)
    written = {
        "fields": export_fields(pd.read_csv(pointwise_path), out),
        "histories": export_histories(run_dir, out),
        "slices": export_slices(run_dir, out),
    }
    points_path = run_dir / "training_points.csv"
    if points_path.is_file():
        written["points"] = [out / "training_points.csv"]
        pd.read_csv(points_path).to_csv(written["points"][0], index=False)

    logger.info(f"Exported {sum(len(v) for v in written.values())} figure tables to {out}")
    return {key: [str(p) for p in paths] for key, paths in written.items()}
