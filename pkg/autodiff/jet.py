"""
Truncated multivariate Taylor jets in the PDE inputs.

A Jet of order k over d inputs stores, for every multi-index alpha with
|alpha| <= k, the coefficient (1/alpha!) * d^alpha u. Coefficients are either
tape nodes (DualScalar), plain numpy arrays (constants such as the lifted
coordinates) or the python float 0.0, which marks a structural zero and is
skipped by every operation.
"""

import logging
import math
from functools import lru_cache
from itertools import product
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from autodiff import tape as ad
from autodiff.tape import DualScalar, Tape
from utils.exceptions import (
    DimensionMismatchError,
    JetOrderError,
    JetShapeError,
    TapeMismatchError,
    UnsupportedOrderError,
)

logger = logging.getLogger(__name__)

MAX_ORDER = 3
MAX_INPUT_DIM = 2

MultiIndex = Tuple[int, ...]


@lru_cache(maxsize=None)
def multi_indices(order: int, input_dim: int) -> Tuple[MultiIndex, ...]:
    """All multi-indices of total degree <= order, lowest degree first"""
    indices = [alpha for alpha in product(range(order + 1), repeat=input_dim) if sum(alpha) <= order]
    return tuple(sorted(indices, key=lambda alpha: (sum(alpha), tuple(-a for a in alpha))))


@lru_cache(maxsize=None)
def _product_pairs(order: int, input_dim: int) -> Dict[MultiIndex, Tuple[Tuple[MultiIndex, MultiIndex], ...]]:
    table = {}
    for gamma in multi_indices(order, input_dim):
        pairs = []
        for alpha in multi_indices(order, input_dim):
            beta = tuple(g - a for g, a in zip(gamma, alpha))
            if min(beta) >= 0:
                pairs.append((alpha, beta))
        table[gamma] = tuple(pairs)
    return table


def multi_factorial(alpha: MultiIndex) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def unit_index(axis: int, input_dim: int) -> MultiIndex:
    return tuple(1 if i == axis else 0 for i in range(input_dim))


def check_jet_shape(order: int, input_dim: int) -> None:
    if not 0 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"jet order must be in 0..{MAX_ORDER}", order=order)
    if not 1 <= input_dim <= MAX_INPUT_DIM:
        raise DimensionMismatchError(f"jet input dimension must be in 1..{MAX_INPUT_DIM}", input_dim=input_dim)


# ================== COEFFICIENT ARITHMETIC ==================

def is_structural_zero(c) -> bool:
    return not isinstance(c, (DualScalar, np.ndarray)) and c == 0


def _c_add(a, b):
    if is_structural_zero(a):
        return b
    if is_structural_zero(b):
        return a
    return ad.add(a, b)


def _c_sub(a, b):
    if is_structural_zero(b):
        return a
    if is_structural_zero(a):
        return ad.scale(b, -1.0)
    return ad.sub(a, b)


def _c_mul(a, b):
    if is_structural_zero(a) or is_structural_zero(b):
        return 0.0
    return ad.mul(a, b)


def _c_scale(a, factor: float):
    if is_structural_zero(a) or factor == 0:
        return 0.0
    if factor == 1:
        return a
    return ad.scale(a, factor)


def _tape_among(coefficients) -> Optional[Tape]:
    tape = None
    for c in coefficients:
        if isinstance(c, DualScalar):
            if tape is None:
                tape = c.tape
            elif c.tape is not tape:
                raise TapeMismatchError("jet coefficients live on different tapes")
    return tape


# ================== JET ==================

class Jet:
    __slots__ = ("order", "input_dim", "coeffs", "tape")
    __array_ufunc__ = None

    def __init__(self, coeffs: Mapping[MultiIndex, object], order: int, input_dim: int, tape: Optional[Tape] = None):
        check_jet_shape(order, input_dim)
        expected = multi_indices(order, input_dim)
        if set(coeffs) != set(expected):
            raise JetShapeError(
                "coefficients must cover exactly the multi-indices of degree <= order",
                order=order,
                input_dim=input_dim,
            )
        self.order = order
        self.input_dim = input_dim
        self.coeffs = {alpha: coeffs[alpha] for alpha in expected}
        found = _tape_among(self.coeffs.values())
        if tape is not None and found is not None and found is not tape:
            raise TapeMismatchError("jet coefficients do not belong to the given tape")
        self.tape = tape if tape is not None else found

    @classmethod
    def constant(cls, value, order: int, input_dim: int, tape: Optional[Tape] = None) -> "Jet":
        coeffs = {alpha: 0.0 for alpha in multi_indices(order, input_dim)}
        coeffs[(0,) * input_dim] = value
        return cls(coeffs, order, input_dim, tape)

    @property
    def zero_index(self) -> MultiIndex:
        return (0,) * self.input_dim

    @property
    def value(self):
        return self.coeffs[self.zero_index]

    def coefficient(self, alpha: MultiIndex):
        return self.coeffs[tuple(alpha)]

    def derivative(self, alpha: MultiIndex):
        """d^alpha u, i.e. the stored coefficient times alpha!"""
        alpha = tuple(alpha)
        return _c_scale(self.coeffs[alpha], float(multi_factorial(alpha)))

    def gradient(self) -> list:
        if self.order < 1:
            raise JetOrderError("gradient needs a jet of order >= 1", order=self.order)
        return [self.derivative(unit_index(axis, self.input_dim)) for axis in range(self.input_dim)]

    def partial(self, axis: int) -> "Jet":
        """Jet of du/dx_axis, one order lower"""
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet", axis=axis)
        coeffs = {}
        for beta in multi_indices(self.order - 1, self.input_dim):
            raised = tuple(b + (1 if i == axis else 0) for i, b in enumerate(beta))
            coeffs[beta] = _c_scale(self.coeffs[raised], float(beta[axis] + 1))
        return Jet(coeffs, self.order - 1, self.input_dim, self.tape)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError("cannot raise the order of a jet", order=self.order, requested=order)
        if order == self.order:
            return self
        coeffs = {alpha: self.coeffs[alpha] for alpha in multi_indices(order, self.input_dim)}
        return Jet(coeffs, order, self.input_dim, self.tape)

    # ---- arithmetic ----

    def _aligned(self, other: "Jet") -> Tuple["Jet", "Jet", Optional[Tape]]:
        if other.input_dim != self.input_dim:
            raise JetShapeError("jets differ in input dimension", left=self.input_dim, right=other.input_dim)
        if self.tape is not None and other.tape is not None and self.tape is not other.tape:
            raise TapeMismatchError("jets belong to different tapes")
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order), self.tape or other.tape

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, tape = self._aligned(other)
            return Jet({alpha: _c_add(a.coeffs[alpha], b.coeffs[alpha]) for alpha in a.coeffs}, a.order, a.input_dim, tape)
        coeffs = dict(self.coeffs)
        coeffs[self.zero_index] = _c_add(coeffs[self.zero_index], other)
        return Jet(coeffs, self.order, self.input_dim, self.tape)

    __radd__ = __add__

    def __neg__(self):
        return Jet({alpha: _c_scale(c, -1.0) for alpha, c in self.coeffs.items()}, self.order, self.input_dim, self.tape)

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b, tape = self._aligned(other)
            return Jet({alpha: _c_sub(a.coeffs[alpha], b.coeffs[alpha]) for alpha in a.coeffs}, a.order, a.input_dim, tape)
        coeffs = dict(self.coeffs)
        coeffs[self.zero_index] = _c_sub(coeffs[self.zero_index], other)
        return Jet(coeffs, self.order, self.input_dim, self.tape)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, tape = self._aligned(other)
            coeffs = {}
            for gamma, pairs in _product_pairs(a.order, a.input_dim).items():
                acc = 0.0
                for alpha, beta in pairs:
                    acc = _c_add(acc, _c_mul(a.coeffs[alpha], b.coeffs[beta]))
                coeffs[gamma] = acc
            return Jet(coeffs, a.order, a.input_dim, tape)
        if isinstance(other, (DualScalar, np.ndarray)):
            return Jet({alpha: _c_mul(c, other) for alpha, c in self.coeffs.items()}, self.order, self.input_dim, self.tape)
        return Jet({alpha: _c_scale(c, float(other)) for alpha, c in self.coeffs.items()}, self.order, self.input_dim, self.tape)

    __rmul__ = __mul__

    def __repr__(self):
        return f"Jet(order={self.order}, input_dim={self.input_dim})"


# ================== COMPOSITION ==================

def _compose(a: Jet, derivatives: Sequence) -> Jet:
    """f(a) = f(a_0) + sum_k f^(k)(a_0) / k! * h^k with h = a - a_0"""
    zero = a.zero_index
    shifted = dict(a.coeffs)
    shifted[zero] = 0.0
    h = Jet(shifted, a.order, a.input_dim, a.tape)

    result = {alpha: 0.0 for alpha in a.coeffs}
    result[zero] = derivatives[0]
    power = h
    for k in range(1, a.order + 1):
        factor = _c_scale(derivatives[k], 1.0 / math.factorial(k))
        for alpha, c in power.coeffs.items():
            if is_structural_zero(c):
                continue
            result[alpha] = _c_add(result[alpha], _c_mul(factor, c))
        if k < a.order:
            power = power * h
    return Jet(result, a.order, a.input_dim, a.tape)


def jet_tanh(a: Jet) -> Jet:
    t = ad.tanh(a.value)
    derivatives = [t]
    if a.order >= 1:
        d1 = 1.0 - t * t
        derivatives.append(d1)
    if a.order >= 2:
        d2 = -2.0 * (t * d1)
        derivatives.append(d2)
    if a.order >= 3:
        derivatives.append(-2.0 * (d1 * d1 + t * d2))
    return _compose(a, derivatives)


def jet_exp(a: Jet) -> Jet:
    e = ad.exp(a.value)
    return _compose(a, [e] * (a.order + 1))


def jet_sin(a: Jet) -> Jet:
    s, c = ad.sin(a.value), ad.cos(a.value)
    cycle = [s, c, -1.0 * s, -1.0 * c]
    return _compose(a, cycle[: a.order + 1])


def jet_cos(a: Jet) -> Jet:
    s, c = ad.sin(a.value), ad.cos(a.value)
    cycle = [c, -1.0 * s, -1.0 * c, s]
    return _compose(a, cycle[: a.order + 1])


_UNARY = {"exp": jet_exp, "sin": jet_sin, "cos": jet_cos, "tanh": jet_tanh}


def jet_arith(a: Jet, b=None, kind: str = "add") -> Jet:
    """Dispatch on kind: add, sub, mul, scalar_mul (b is a real), exp, sin, cos"""
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        if not isinstance(b, Jet):
            raise JetShapeError("mul expects two jets; use scalar_mul for reals")
        return a * b
    if kind == "scalar_mul":
        return a * float(b)
    if kind in _UNARY:
        return _UNARY[kind](a)
    raise ValueError(f"unknown jet operation: {kind}")


def lift_input(point, order: int, tape: Optional[Tape] = None) -> list:
    """
    Seed jets for the coordinates of point (shape (d,) or a batch (N, d)).
    Coordinate i gets its value, a unit first-order coefficient along i and
    structural zeros everywhere else.
    """
    points = np.asarray(point, dtype=np.float64)
    if points.ndim == 0:
        points = points.reshape(1)
    input_dim = points.shape[-1]
    check_jet_shape(order, input_dim)

    jets = []
    for axis in range(input_dim):
        coeffs = {alpha: 0.0 for alpha in multi_indices(order, input_dim)}
        coeffs[(0,) * input_dim] = points[..., axis].copy()
        if order >= 1:
            coeffs[unit_index(axis, input_dim)] = 1.0
        jets.append(Jet(coeffs, order, input_dim, tape))
    return jets
