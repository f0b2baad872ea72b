"""
Domains, their disjoint decompositions and the interfaces between subdomains.

Membership is total on the closed domain. A point lying exactly on an
interface belongs to the lower-indexed subdomain.
"""

import logging
import math
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from schemas.experiment_schema import DecompositionKind

logger = logging.getLogger(__name__)

CIRCLE_CENTER = (0.5, 0.5)
CIRCLE_RADIUS = 0.3

POISSON_OUTER_CENTER = (0.02, 0.0)
POISSON_INNER_CENTER_1 = (-0.4, -0.4)
POISSON_INNER_CENTER_2 = (0.5, 0.6)


def poisson_outer_radius(theta):
    return 1.5 + 0.14 * np.sin(4 * theta) + 0.12 * np.cos(6 * theta) + 0.09 * np.cos(5 * theta)


def poisson_radius_1(theta):
    return 0.5 + 0.18 * np.sin(3 * theta) + 0.08 * np.cos(2 * theta) + 0.2 * np.cos(5 * theta)


def poisson_radius_2(theta):
    return 0.34 + 0.04 * np.sin(5 * theta) + 0.18 * np.cos(3 * theta) + 0.1 * np.cos(6 * theta)


class PolarCurve:
    """Closed star-shaped curve rho = r(theta) around a center"""

    def __init__(self, center: Tuple[float, float], radius: Callable[[np.ndarray], np.ndarray]):
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = radius

    def __call__(self, s) -> np.ndarray:
        """Point at parameter s in [0, 1)"""
        theta = 2.0 * math.pi * np.asarray(s, dtype=np.float64)
        r = self.radius(theta)
        return np.column_stack([self.center[0] + r * np.cos(theta), self.center[1] + r * np.sin(theta)])

    def gap(self, points: np.ndarray) -> np.ndarray:
        """rho - r(theta): negative inside, zero on the curve"""
        offset = np.asarray(points, dtype=np.float64) - self.center
        theta = np.mod(np.arctan2(offset[:, 1], offset[:, 0]), 2.0 * math.pi)
        return np.hypot(offset[:, 0], offset[:, 1]) - self.radius(theta)


class SegmentCurve:
    """Straight segment from start to stop, parametrized by s in [0, 1]"""

    def __init__(self, start: Tuple[float, float], stop: Tuple[float, float]):
        self.start = np.asarray(start, dtype=np.float64)
        self.stop = np.asarray(stop, dtype=np.float64)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)[:, None]
        return self.start + s * (self.stop - self.start)

    def gap(self, points: np.ndarray) -> np.ndarray:
        direction = self.stop - self.start
        normal = np.array([-direction[1], direction[0]]) / np.hypot(*direction)
        return (np.asarray(points, dtype=np.float64) - self.start) @ normal


Curve = Union[PolarCurve, SegmentCurve]


class Interface(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    i: int
    j: int
    curve: Curve

    @property
    def key(self) -> str:
        return f"{self.i}-{self.j}"

    def sample(self, s: np.ndarray) -> np.ndarray:
        return self.curve(s)

    def on_curve(self, points: np.ndarray, tolerance: float = 1e-12) -> np.ndarray:
        return np.abs(self.curve.gap(points)) <= tolerance


class Decomposition(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: DecompositionKind
    subdomain_count: int
    membership_fn: Callable[[np.ndarray], np.ndarray]
    interfaces: List[Interface]
    bounding_box: Tuple[Tuple[float, float], Tuple[float, float]]
    has_time: bool = False
    outer_curve: Optional[PolarCurve] = None

    def membership(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return self.membership_fn(points).astype(np.int64)

    def contains(self, points, tolerance: float = 1e-12) -> np.ndarray:
        """Inside the closed domain"""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self.outer_curve is not None:
            return self.outer_curve.gap(points) <= tolerance
        (x0, x1), (y0, y1) = self.bounding_box
        return (
            (points[:, 0] >= x0 - tolerance) & (points[:, 0] <= x1 + tolerance)
            & (points[:, 1] >= y0 - tolerance) & (points[:, 1] <= y1 + tolerance)
        )

    def interface(self, i: int, j: int) -> Interface:
        for interface in self.interfaces:
            if (interface.i, interface.j) == (i, j):
                return interface
        raise KeyError(f"no interface between subdomains {i} and {j}")


# ================== FACTORIES ==================

def _split_x0() -> Decomposition:
    return Decomposition(
        kind=DecompositionKind.SPLIT_X0,
        subdomain_count=2,
        membership_fn=lambda points: np.where(points[:, 0] <= 0.0, 1, 2),
        interfaces=[Interface(i=1, j=2, curve=SegmentCurve((0.0, -1.0), (0.0, 1.0)))],
        bounding_box=((-1.0, 1.0), (-1.0, 1.0)),
    )


def _split_t05() -> Decomposition:
    return Decomposition(
        kind=DecompositionKind.SPLIT_T05,
        subdomain_count=2,
        membership_fn=lambda points: np.where(points[:, 1] <= 0.5, 1, 2),
        interfaces=[Interface(i=1, j=2, curve=SegmentCurve((-1.0, 0.5), (1.0, 0.5)))],
        bounding_box=((-1.0, 1.0), (0.0, 1.0)),
        has_time=True,
    )


def _circle() -> Decomposition:
    circle = PolarCurve(CIRCLE_CENTER, lambda theta: np.full_like(theta, CIRCLE_RADIUS))
    return Decomposition(
        kind=DecompositionKind.CIRCLE,
        subdomain_count=2,
        # the circle itself goes to subdomain 1 (outside)
        membership_fn=lambda points: np.where(circle.gap(points) < 0.0, 2, 1),
        interfaces=[Interface(i=1, j=2, curve=circle)],
        bounding_box=((-1.0, 1.0), (0.0, 1.0)),
        has_time=True,
    )


def _poisson_curves() -> Decomposition:
    outer = PolarCurve(POISSON_OUTER_CENTER, poisson_outer_radius)
    gamma_1 = PolarCurve(POISSON_INNER_CENTER_1, poisson_radius_1)
    gamma_2 = PolarCurve(POISSON_INNER_CENTER_2, poisson_radius_2)

    def membership(points):
        labels = np.ones(points.shape[0], dtype=np.int64)
        labels[gamma_1.gap(points) < 0.0] = 2
        labels[gamma_2.gap(points) < 0.0] = 3
        return labels

    # box around the outer curve with a margin, used for slices and rejection sampling
    theta = np.linspace(0.0, 2.0 * math.pi, 4001)
    rim = outer(theta / (2.0 * math.pi))
    box = (
        (float(rim[:, 0].min()) - 0.01, float(rim[:, 0].max()) + 0.01),
        (float(rim[:, 1].min()) - 0.01, float(rim[:, 1].max()) + 0.01),
    )
    return Decomposition(
        kind=DecompositionKind.POISSON_CURVES,
        subdomain_count=3,
        membership_fn=membership,
        interfaces=[Interface(i=1, j=2, curve=gamma_1), Interface(i=1, j=3, curve=gamma_2)],
        bounding_box=box,
        outer_curve=outer,
    )


_FACTORIES = {
    DecompositionKind.SPLIT_X0: _split_x0,
    DecompositionKind.SPLIT_T05: _split_t05,
    DecompositionKind.CIRCLE: _circle,
    DecompositionKind.POISSON_CURVES: _poisson_curves,
}


def make_decomposition(kind: Union[DecompositionKind, str]) -> Decomposition:
    return _FACTORIES[DecompositionKind(kind)]()
