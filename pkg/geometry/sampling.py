import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from geometry.decomposition import Decomposition
from problems.benchmarks import ProblemDefinition
from schemas.experiment_schema import DecompositionKind, PointCounts, RegionCounts
from utils.exceptions import ConfigError, PoolExhaustedError
from utils.rng import make_rng

logger = logging.getLogger(__name__)

POISSON_CLOUD_RESIDUAL = {1: 18211, 2: 2855, 3: 1291}
POISSON_CLOUD_EDGE = 6284
_REJECTION_BATCH = 20000

InterfaceKey = Tuple[int, int]


def _empty() -> np.ndarray:
    return np.empty((0, 2))


class SampleSets(BaseModel):
    """Point sets per region. Arrays have shape (N, 2)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    residual: Dict[int, np.ndarray]
    boundary: Dict[int, np.ndarray]
    initial: Dict[int, np.ndarray]
    interface: Dict[InterfaceKey, np.ndarray] = {}
    evaluation_grid: Optional[np.ndarray] = None
    rng_seed: int = 0

    @property
    def subdomains(self):
        return sorted(self.residual)

    def merged(self) -> "SampleSets":
        """Everything in one region, interfaces dropped"""

        def union(region: Dict[int, np.ndarray]) -> Dict[int, np.ndarray]:
            blocks = [region[k] for k in sorted(region)]
            return {1: np.concatenate(blocks) if blocks else _empty()}

        return SampleSets(
            residual=union(self.residual),
            boundary=union(self.boundary),
            initial=union(self.initial),
            evaluation_grid=self.evaluation_grid,
            rng_seed=self.rng_seed,
        )

    def counts(self) -> Dict[str, int]:
        summary = {}
        for region in ("residual", "boundary", "initial"):
            for k, points in getattr(self, region).items():
                summary[f"{region}_{k}"] = len(points)
        for (i, j), points in self.interface.items():
            summary[f"interface_{i}-{j}"] = len(points)
        return summary


# ================== POOLS ==================

def _grid_pools(decomp: Decomposition, grid_shape: Tuple[int, int], interface_count: int, rng, seed: int) -> SampleSets:
    (x0, x1), (y0, y1) = decomp.bounding_box
    xs = np.linspace(x0, x1, grid_shape[0])
    ys = np.linspace(y0, y1, grid_shape[1])
    mesh_x, mesh_y = np.meshgrid(xs, ys)
    grid = np.column_stack([mesh_x.ravel(), mesh_y.ravel()])

    on_x_edge = (grid[:, 0] == x0) | (grid[:, 0] == x1)
    if decomp.has_time:
        boundary_mask = on_x_edge
        initial_mask = (grid[:, 1] == y0) & ~boundary_mask
    else:
        boundary_mask = on_x_edge | (grid[:, 1] == y0) | (grid[:, 1] == y1)
        initial_mask = np.zeros(len(grid), dtype=bool)
    residual_mask = ~(boundary_mask | initial_mask)

    labels = decomp.membership(grid)
    subdomains = range(1, decomp.subdomain_count + 1)
    interface = {
        (iface.i, iface.j): iface.sample(rng.uniform(0.0, 1.0, interface_count)) for iface in decomp.interfaces
    }
    return SampleSets(
        residual={k: grid[residual_mask & (labels == k)] for k in subdomains},
        boundary={k: grid[boundary_mask & (labels == k)] for k in subdomains},
        initial={k: grid[initial_mask & (labels == k)] for k in subdomains},
        interface=interface,
        evaluation_grid=grid,
        rng_seed=seed,
    )


def _poisson_cloud(decomp: Decomposition, rng, seed: int) -> SampleSets:
    (x0, x1), (y0, y1) = decomp.bounding_box
    collected = {k: [] for k in POISSON_CLOUD_RESIDUAL}
    filled = {k: 0 for k in POISSON_CLOUD_RESIDUAL}
    while any(filled[k] < target for k, target in POISSON_CLOUD_RESIDUAL.items()):
        batch = np.column_stack([
            rng.uniform(x0, x1, _REJECTION_BATCH),
            rng.uniform(y0, y1, _REJECTION_BATCH),
        ])
        batch = batch[decomp.outer_curve.gap(batch) < 0.0]
        labels = decomp.membership(batch)
        for k, target in POISSON_CLOUD_RESIDUAL.items():
            accepted = batch[labels == k][: target - filled[k]]
            collected[k].append(accepted)
            filled[k] += len(accepted)

    residual = {k: np.concatenate(blocks) for k, blocks in collected.items()}
    boundary_points = decomp.outer_curve(rng.uniform(0.0, 1.0, POISSON_CLOUD_EDGE))
    interface = {
        (iface.i, iface.j): iface.sample(rng.uniform(0.0, 1.0, POISSON_CLOUD_EDGE)) for iface in decomp.interfaces
    }
    # the outer curve only touches subdomain 1
    boundary = {1: boundary_points, 2: _empty(), 3: _empty()}
    cloud = np.concatenate([residual[k] for k in sorted(residual)] + [boundary_points] + list(interface.values()))
    return SampleSets(
        residual=residual,
        boundary=boundary,
        initial={k: _empty() for k in residual},
        interface=interface,
        evaluation_grid=cloud,
        rng_seed=seed,
    )


def generate_pools(problem: ProblemDefinition, decomp: Decomposition, grid_shape: Tuple[int, int] = (300, 300),
                   interface_count: int = 5000, seed: int = 0) -> SampleSets:
    """
    Full candidate pools: a uniform grid over the bounding box (boundary and
    t=0 rows split off from the interior) plus uniformly parametrized
    interface samples. The Poisson domain uses a fixed-size rejection-sampled
    point cloud instead.
    """
    if problem.has_time != decomp.has_time:
        raise ConfigError(
            "problem and decomposition disagree on the time coordinate",
            problem=problem.name,
            decomposition=decomp.kind.value,
        )
    rng = make_rng(seed)
    if decomp.kind is DecompositionKind.POISSON_CURVES:
        pools = _poisson_cloud(decomp, rng, seed)
    else:
        if min(grid_shape) < 2:
            raise ConfigError("grid shape must be at least 2 x 2", grid_shape=grid_shape)
        pools = _grid_pools(decomp, grid_shape, interface_count, rng, seed)
    logger.info(f"Generated pools for {problem.name}: {pools.counts()}")
    return pools


# ================== SELECTION ==================

def _choose(pool: np.ndarray, count: int, rng, region: str) -> np.ndarray:
    if count > len(pool):
        raise PoolExhaustedError(f"requested {count} {region} points, pool holds {len(pool)}",
                                 region=region, requested=count, available=len(pool))
    if count == 0:
        return _empty()
    return pool[rng.choice(len(pool), size=count, replace=False)]


def select_training_points(pools: SampleSets, counts: PointCounts, seed: int) -> SampleSets:
    """Uniform selection without replacement, reproducible per seed"""
    if len(counts.subdomains) != len(pools.subdomains):
        raise ConfigError("point counts do not match the number of subdomains",
                          expected=len(pools.subdomains), received=len(counts.subdomains))
    rng = make_rng(seed)
    residual, boundary, initial = {}, {}, {}
    for k, region_counts in zip(pools.subdomains, counts.subdomains):
        residual[k] = _choose(pools.residual[k], region_counts.residual, rng, f"residual_{k}")
        boundary[k] = _choose(pools.boundary[k], region_counts.boundary, rng, f"boundary_{k}")
        initial[k] = _choose(pools.initial[k], region_counts.initial, rng, f"initial_{k}")

    interface = {}
    if counts.interface:
        if len(counts.interface) != len(pools.interface):
            raise ConfigError("interface counts do not match the decomposition",
                              expected=len(pools.interface), received=len(counts.interface))
        for key, count in zip(pools.interface, counts.interface):
            interface[key] = _choose(pools.interface[key], count, rng, f"interface_{key[0]}-{key[1]}")

    return SampleSets(residual=residual, boundary=boundary, initial=initial, interface=interface,
                      evaluation_grid=pools.evaluation_grid, rng_seed=seed)


def select_init_subset(training_sets: SampleSets, counts: RegionCounts, seed: int) -> SampleSets:
    """Whole-domain subset for the initialization stage, drawn from the main-stage sets"""
    merged = training_sets.merged()
    rng = make_rng(seed)
    return SampleSets(
        residual={1: _choose(merged.residual[1], counts.residual, rng, "init_residual")},
        boundary={1: _choose(merged.boundary[1], counts.boundary, rng, "init_boundary")},
        initial={1: _choose(merged.initial[1], counts.initial, rng, "init_initial")},
        rng_seed=seed,
    )


def sample_sets_frame(sets: SampleSets) -> pd.DataFrame:
    frames = []
    for region in ("residual", "boundary", "initial"):
        for k, points in getattr(sets, region).items():
            frames.append(pd.DataFrame({"x": points[:, 0], "y_or_t": points[:, 1], "region": f"{region}_{k}"}))
    for (i, j), points in sets.interface.items():
        frames.append(pd.DataFrame({"x": points[:, 0], "y_or_t": points[:, 1], "region": f"interface_{i}-{j}"}))
    if not frames:
        return pd.DataFrame(columns=["x", "y_or_t", "region"])
    return pd.concat(frames, ignore_index=True)


def export_sample_sets(sets: SampleSets, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sample_sets_frame(sets).to_csv(path, index=False)
    return path
