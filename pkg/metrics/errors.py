import hashlib
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from autodiff.jet import lift_input
from autodiff.tape import Tape, value_of
from geometry.decomposition import Decomposition
from network.mlp import NetworkModel, ParameterVector, SurrogateModel
from problems.benchmarks import ProblemDefinition
from utils.exceptions import DimensionMismatchError, UndefinedMetricError

logger = logging.getLogger(__name__)


def relative_l2(predicted, exact) -> float:
    predicted = np.asarray(predicted, dtype=np.float64).reshape(-1)
    exact = np.asarray(exact, dtype=np.float64).reshape(-1)
    if predicted.shape != exact.shape:
        raise DimensionMismatchError("predicted and exact differ in length",
                                     predicted=predicted.size, exact=exact.size)
    denominator = np.linalg.norm(exact)
    if denominator == 0.0:
        raise UndefinedMetricError("relative L2 error is undefined for an all-zero exact solution")
    return float(np.linalg.norm(predicted - exact) / denominator)


def route(models: Sequence[SurrogateModel], decomp: Decomposition, points: np.ndarray) -> np.ndarray:
    """Subdomain label used to pick the model for each point"""
    if len(models) == 1:
        return np.ones(len(points), dtype=np.int64)
    return decomp.membership(points)


def predict(models: Sequence[SurrogateModel], decomp: Decomposition, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    labels = route(models, decomp, points)
    out = np.empty(len(points))
    for k in np.unique(labels):
        mask = labels == k
        out[mask] = models[k - 1].evaluate(points[mask])
    return out


def exact_values(problem: ProblemDefinition, points: np.ndarray, cache_dir: Optional[Union[str, Path]] = None) -> np.ndarray:
    """Exact solution on points, cached as .npy keyed by a hash of the points when the problem asks for it"""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if not problem.cache_exact or cache_dir is None:
        return np.asarray(problem.exact_solution(points), dtype=np.float64)

    digest = hashlib.sha1(points.tobytes()).hexdigest()[:16]
    path = Path(cache_dir) / f"{problem.name}_exact_{digest}.npy"
    if path.is_file():
        cached = np.load(path)
        if cached.shape == (len(points),):
            return cached
        logger.warning(f"Ignoring stale exact-solution cache {path}")

    values = np.asarray(problem.exact_solution(points), dtype=np.float64)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, values)
    logger.info(f"Cached {len(values)} exact values for {problem.name} at {path}")
    return values


# ================== REPORTS ==================

class SliceResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    axis: str
    axis_value: float
    points: np.ndarray
    coordinate: np.ndarray
    subdomain: np.ndarray
    predicted: np.ndarray
    exact: np.ndarray
    residual: np.ndarray

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "coordinate": self.coordinate,
            "subdomain": self.subdomain,
            "u": self.exact,
            "u_hat": self.predicted,
            "residual": self.residual,
        })


class ErrorReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    l2_relative: float
    points: np.ndarray
    predicted: np.ndarray
    exact: np.ndarray
    interface_l2: Dict[str, float] = {}
    slices: Dict[str, SliceResult] = {}

    @property
    def pointwise_error(self) -> np.ndarray:
        return np.abs(self.predicted - self.exact)

    def pointwise_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "x": self.points[:, 0],
            "y_or_t": self.points[:, 1],
            "u": self.exact,
            "u_hat": self.predicted,
            "abs_err": self.pointwise_error,
        })


def interface_errors(models: Sequence[SurrogateModel], decomp: Decomposition,
                     interface_points: Mapping[Tuple[int, int], np.ndarray],
                     interface_exact: Mapping[Tuple[int, int], np.ndarray]) -> Dict[str, float]:
    """Relative L2 per interface; interfaces where the exact solution vanishes identically are left out"""
    errors = {}
    for (i, j), points in interface_points.items():
        if len(points) == 0:
            continue
        try:
            errors[f"{i}-{j}"] = relative_l2(predict(models, decomp, points), interface_exact[(i, j)])
        except UndefinedMetricError:
            logger.debug(f"Skipping interface {i}-{j}: exact solution is zero there")
    return errors


def evaluate_on_grid(models: Sequence[SurrogateModel], decomp: Decomposition, problem: ProblemDefinition,
                     grid: np.ndarray, interface_points: Optional[Mapping[Tuple[int, int], np.ndarray]] = None,
                     exact: Optional[np.ndarray] = None, cache_dir: Optional[Union[str, Path]] = None) -> ErrorReport:
    grid = np.asarray(grid, dtype=np.float64)
    exact = exact_values(problem, grid, cache_dir) if exact is None else exact
    predicted = predict(models, decomp, grid)

    interface_l2 = {}
    if interface_points and len(models) > 1:
        interface_exact = {key: exact_values(problem, points, cache_dir) for key, points in interface_points.items()}
        interface_l2 = interface_errors(models, decomp, interface_points, interface_exact)

    return ErrorReport(
        l2_relative=relative_l2(predicted, exact),
        points=grid,
        predicted=predicted,
        exact=exact,
        interface_l2=interface_l2,
    )


def slice_points(decomp: Decomposition, axis: str, axis_value: float, resolution: int = 300) -> Tuple[np.ndarray, np.ndarray]:
    """Points of a straight section inside the domain and the coordinate that varies along it"""
    (x0, x1), (y0, y1) = decomp.bounding_box
    if axis == "x":
        coordinate = np.linspace(y0, y1, resolution)
        points = np.column_stack([np.full(resolution, axis_value), coordinate])
    else:
        coordinate = np.linspace(x0, x1, resolution)
        points = np.column_stack([coordinate, np.full(resolution, axis_value)])
    inside = decomp.contains(points)
    return points[inside], coordinate[inside]


def slice_residual(models: Sequence[SurrogateModel], decomp: Decomposition, problem: ProblemDefinition,
                   points: np.ndarray) -> np.ndarray:
    labels = route(models, decomp, points)
    residual = np.empty(len(points))
    for k in np.unique(labels):
        mask = labels == k
        tape = Tape()
        coords = lift_input(points[mask], problem.residual_order, tape)
        u = models[k - 1].evaluate_jet(coords)
        values = value_of(problem.residual(u, coords).value)
        residual[mask] = np.broadcast_to(np.asarray(values, dtype=np.float64), (int(mask.sum()),))
    return residual


def extract_slice(models: Sequence[SurrogateModel], decomp: Decomposition, problem: ProblemDefinition,
                  axis_value: float, axis: str, resolution: int = 300) -> SliceResult:
    if axis not in ("x", "y", "t"):
        raise ValueError(f"unknown slice axis: {axis}")
    points, coordinate = slice_points(decomp, axis, axis_value, resolution)
    return SliceResult(
        name=f"{axis}={axis_value:g}",
        axis=axis,
        axis_value=axis_value,
        points=points,
        coordinate=coordinate,
        subdomain=route(models, decomp, points),
        predicted=predict(models, decomp, points),
        exact=np.asarray(problem.exact_solution(points), dtype=np.float64),
        residual=slice_residual(models, decomp, problem, points),
    )


# ================== TRAINING MONITOR ==================

class L2Monitor:
    """Relative L2 on a fixed evaluation set (and on the interface pools) for a list of parameter vectors"""

    def __init__(self, decomp: Decomposition, grid: np.ndarray, exact: np.ndarray,
                 interface_points: Optional[Mapping[Tuple[int, int], np.ndarray]] = None,
                 interface_exact: Optional[Mapping[Tuple[int, int], np.ndarray]] = None):
        self.decomp = decomp
        self.grid = grid
        self.exact = exact
        self.interface_points = interface_points or {}
        self.interface_exact = interface_exact or {}

    @classmethod
    def for_problem(cls, decomp: Decomposition, problem: ProblemDefinition, grid: np.ndarray,
                    interface_points: Optional[Mapping[Tuple[int, int], np.ndarray]] = None,
                    cache_dir: Optional[Union[str, Path]] = None) -> "L2Monitor":
        interface_points = interface_points or {}
        return cls(
            decomp,
            grid,
            exact_values(problem, grid, cache_dir),
            interface_points,
            {key: exact_values(problem, points, cache_dir) for key, points in interface_points.items()},
        )

    def __call__(self, parameters: List[ParameterVector]) -> Dict[str, float]:
        models = [NetworkModel(p) for p in parameters]
        row = {"l2_error": relative_l2(predict(models, self.decomp, self.grid), self.exact)}
        if len(models) > 1 and self.interface_points:
            errors = interface_errors(models, self.decomp, self.interface_points, self.interface_exact)
            row.update({f"interface_l2_{key}": value for key, value in errors.items()})
        return row
