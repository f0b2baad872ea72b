import logging
import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from autodiff.jet import Jet, jet_exp, jet_sin, multi_factorial, multi_indices
from problems.burgers_reference import BURGERS_VISCOSITY, cole_hopf_reference

logger = logging.getLogger(__name__)

ResidualFn = Callable[[Jet, Sequence[Jet]], Jet]
PointFn = Callable[[np.ndarray], np.ndarray]

HELMHOLTZ_Q_FACTOR = 1.0 - 17.0 * math.pi ** 2
HEAT_SINH_COEFFICIENT = 0.1


class ProblemDefinition(BaseModel):
    """
    One benchmark PDE. Point arrays have shape (N, 2) with columns (x, y) or
    (x, t); every value function returns shape (N,).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    input_dim: int = 2
    has_time: bool = False
    coordinate_names: Tuple[str, str] = ("x", "y")
    residual_order: int = Field(2, description="Highest input-derivative order appearing in F")
    residual: ResidualFn
    boundary_value: PointFn
    initial_value: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_solution: PointFn
    exact_derivatives: Dict[Tuple[int, int], PointFn] = Field(
        default_factory=dict, description="Analytic d^alpha u keyed by multi-index, for exact-solution jets"
    )
    cache_exact: bool = Field(False, description="Exact values are expensive and worth caching on disk")

    def required_jet_order(self, pde_gradient: bool) -> int:
        return self.residual_order + 1 if pde_gradient else self.residual_order


def exact_jet(problem: ProblemDefinition, points: np.ndarray, order: int) -> Jet:
    """Jet of the exact solution built from the analytic derivatives"""
    if not problem.exact_derivatives:
        raise ValueError(f"{problem.name} has no analytic derivatives")
    points = np.asarray(points, dtype=np.float64)
    coeffs = {
        alpha: problem.exact_derivatives[alpha](points) / multi_factorial(alpha)
        for alpha in multi_indices(order, problem.input_dim)
    }
    return Jet(coeffs, order, problem.input_dim)


def _split(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    points = np.asarray(points, dtype=np.float64)
    return points[..., 0], points[..., 1]


# ================== HELMHOLTZ ==================

def _helmholtz_residual(u: Jet, coords: Sequence[Jet]) -> Jet:
    x, y = coords
    q = HELMHOLTZ_Q_FACTOR * (jet_sin(math.pi * x) * jet_sin(4.0 * math.pi * y))
    return u.partial(0).partial(0) + u.partial(1).partial(1) + u - q


def _helmholtz_derivative(alpha: Tuple[int, int]) -> PointFn:
    a, b = alpha

    def derivative(points):
        x, y = _split(points)
        # d^k sin(w z) = w^k sin(w z + k pi / 2)
        return (
            math.pi ** a * (4.0 * math.pi) ** b
            * np.sin(np.pi * x + a * np.pi / 2)
            * np.sin(4.0 * np.pi * y + b * np.pi / 2)
        )

    return derivative


def helmholtz() -> ProblemDefinition:
    return ProblemDefinition(
        name="helmholtz",
        residual=_helmholtz_residual,
        boundary_value=lambda points: np.zeros(np.shape(points)[0]),
        exact_solution=lambda points: np.sin(np.pi * _split(points)[0]) * np.sin(4.0 * np.pi * _split(points)[1]),
        exact_derivatives={alpha: _helmholtz_derivative(alpha) for alpha in multi_indices(3, 2)},
    )


# ================== POISSON ==================

def _poisson_residual(u: Jet, coords: Sequence[Jet]) -> Jet:
    x, y = coords
    return u.partial(0).partial(0) + u.partial(1).partial(1) - (jet_exp(x) + jet_exp(y))


def _poisson_derivative(alpha: Tuple[int, int]) -> PointFn:
    a, b = alpha

    def derivative(points):
        x, y = _split(points)
        if a == 0 and b == 0:
            return np.exp(x) + np.exp(y)
        if b == 0:
            return np.exp(x)
        if a == 0:
            return np.exp(y)
        return np.zeros_like(x)

    return derivative


def poisson_exact(points):
    x, y = _split(points)
    return np.exp(x) + np.exp(y)


def poisson2d() -> ProblemDefinition:
    return ProblemDefinition(
        name="poisson",
        residual=_poisson_residual,
        boundary_value=poisson_exact,
        exact_solution=poisson_exact,
        exact_derivatives={alpha: _poisson_derivative(alpha) for alpha in multi_indices(3, 2)},
    )


# ================== HEAT ==================

def _heat_terms(sinh_coefficient: float):
    """(amplitude, time rate, spatial frequency, profile) with u_t = u_xx per term"""
    return (
        (1.0, -math.pi ** 2, math.pi, "cos"),
        (0.6, -4.0 * math.pi ** 2, 2.0 * math.pi, "cos"),
        (0.3 * math.exp(-4.0), 4.0, 2.0, "cosh"),
        (sinh_coefficient * math.exp(-1.0), 1.0, 1.0, "sinh"),
    )


def _profile_derivative(profile: str, order: int, z):
    if profile == "cos":
        return np.cos(z + order * np.pi / 2)
    if profile == "cosh":
        return np.cosh(z) if order % 2 == 0 else np.sinh(z)
    return np.sinh(z) if order % 2 == 0 else np.cosh(z)


def _heat_derivative(alpha: Tuple[int, int], sinh_coefficient: float) -> PointFn:
    a, b = alpha

    def derivative(points):
        x, t = _split(points)
        total = np.zeros_like(x)
        for amplitude, rate, frequency, profile in _heat_terms(sinh_coefficient):
            total = total + (
                amplitude * rate ** b * frequency ** a * np.exp(rate * t) * _profile_derivative(profile, a, frequency * x)
            )
        return total

    return derivative


def heat_initial_value(x):
    x = np.asarray(x, dtype=np.float64)
    return (
        np.cos(np.pi * x)
        + 0.6 * np.cos(2.0 * np.pi * x)
        + 0.3 * np.exp(-4.0) * np.cosh(2.0 * x)
        + 0.1 * np.exp(-1.0) * np.sinh(x)
    )


def heat_boundary_value(points):
    x, t = _split(points)
    return (
        np.exp(-np.pi ** 2 * t) * np.cos(np.pi * x)
        + 0.6 * np.exp(-4.0 * np.pi ** 2 * t) * np.cos(2.0 * np.pi * x)
        + 0.3 * np.exp(4.0 * t - 4.0) * np.cosh(2.0 * x)
        + 0.1 * np.exp(t - 1.0) * np.sinh(x)
    )


def _heat_residual(u: Jet, coords: Sequence[Jet]) -> Jet:
    return u.partial(1) - u.partial(0).partial(0)


def heat(sinh_coefficient: float = HEAT_SINH_COEFFICIENT) -> ProblemDefinition:
    """
    sinh_coefficient only changes the exact solution; the initial and boundary
    data always carry 0.1, so any other value makes them disagree.
    """
    derivatives = {alpha: _heat_derivative(alpha, sinh_coefficient) for alpha in multi_indices(3, 2)}
    return ProblemDefinition(
        name="heat",
        has_time=True,
        coordinate_names=("x", "t"),
        residual=_heat_residual,
        boundary_value=heat_boundary_value,
        initial_value=heat_initial_value,
        exact_solution=derivatives[(0, 0)],
        exact_derivatives=derivatives,
    )


# ================== BURGERS ==================

def _burgers_residual(u: Jet, coords: Sequence[Jet]) -> Jet:
    u_x = u.partial(0)
    return u.partial(1) + u * u_x - BURGERS_VISCOSITY * u_x.partial(0)


def burgers_exact(points):
    x, t = _split(points)
    return cole_hopf_reference(x, t)


def burgers() -> ProblemDefinition:
    return ProblemDefinition(
        name="burgers",
        has_time=True,
        coordinate_names=("x", "t"),
        residual=_burgers_residual,
        boundary_value=lambda points: np.zeros(np.shape(points)[0]),
        initial_value=lambda x: -np.sin(np.pi * np.asarray(x, dtype=np.float64)),
        exact_solution=burgers_exact,
        cache_exact=True,
    )


PROBLEMS: Dict[str, Callable[[], ProblemDefinition]] = {
    "helmholtz": helmholtz,
    "poisson": poisson2d,
    "heat": heat,
    "burgers": burgers,
}


def get_problem(name: str) -> ProblemDefinition:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem '{name}', expected one of {sorted(PROBLEMS)}")
