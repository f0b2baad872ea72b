"""
Reverse-mode computation record.

Every node stores a float64 array: one scalar per collocation point of the
batch being evaluated, or one block of network parameters. Nodes are appended
in execution order, so the node index is already a topological order and
backward() only has to walk it from the seed down to zero.
"""

import logging
from typing import Callable, List, Tuple, Union

import numpy as np

from utils.exceptions import TapeMismatchError

logger = logging.getLogger(__name__)

Vjp = Callable[[np.ndarray], np.ndarray]


class DualScalar:
    """Handle to one tape node. Arithmetic on it records new nodes on the same tape."""

    __slots__ = ("tape", "index")
    # ndarray <op> DualScalar must defer to the reflected methods below
    __array_ufunc__ = None

    def __init__(self, tape: "Tape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape._values[self.index]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __truediv__(self, other: float):
        return scale(self, 1.0 / float(other))

    def __repr__(self):
        return f"DualScalar(index={self.index}, shape={self.shape})"


Operand = Union[DualScalar, np.ndarray, float]


class Tape:
    """Append-only list of (kind, parents, local vector-Jacobian products)"""

    def __init__(self):
        self._values: List[np.ndarray] = []
        self._parents: List[Tuple[Tuple[int, Vjp], ...]] = []
        self._kinds: List[str] = []
        self.parameter_slots: List[int] = []

    def __len__(self) -> int:
        return len(self._values)

    def record(self, kind: str, value, parents: Tuple[Tuple[int, Vjp], ...] = ()) -> DualScalar:
        self._values.append(np.asarray(value, dtype=np.float64))
        self._parents.append(parents)
        self._kinds.append(kind)
        return DualScalar(self, len(self._values) - 1)

    def parameter(self, values: np.ndarray) -> DualScalar:
        """Register a leaf bound to a block of parameters; backward() reports its adjoint"""
        node = self.record("parameter", np.array(values, dtype=np.float64, copy=True))
        self.parameter_slots.append(node.index)
        return node

    def kind(self, node: DualScalar) -> str:
        return self._kinds[node.index]

    def backward(self, seed: DualScalar) -> np.ndarray:
        """d(seed)/d(parameters), concatenated over parameter slots in registration order"""
        if not isinstance(seed, DualScalar) or seed.tape is not self:
            raise TapeMismatchError("seed is not a node of this tape")
        if seed.value.size != 1:
            raise TapeMismatchError("seed must be a scalar node", shape=seed.value.shape)

        slots = set(self.parameter_slots)
        adjoints = {seed.index: np.ones_like(seed.value)}
        collected = {}
        for index in range(seed.index, -1, -1):
            adjoint = adjoints.pop(index, None)
            if adjoint is None:
                continue
            if index in slots:
                collected[index] = adjoint
                continue
            for parent, vjp in self._parents[index]:
                contribution = vjp(adjoint)
                previous = adjoints.get(parent)
                adjoints[parent] = contribution if previous is None else previous + contribution

        blocks = [
            np.asarray(collected.get(slot, np.zeros_like(self._values[slot])), dtype=np.float64).reshape(-1)
            for slot in self.parameter_slots
        ]
        return np.concatenate(blocks) if blocks else np.zeros(0)


# ================== HELPERS ==================

def is_dual(a) -> bool:
    return isinstance(a, DualScalar)


def value_of(a):
    return a.value if isinstance(a, DualScalar) else a


def _tape_of(*operands) -> Union[Tape, None]:
    tape = None
    for operand in operands:
        if isinstance(operand, DualScalar):
            if tape is None:
                tape = operand.tape
            elif operand.tape is not tape:
                raise TapeMismatchError("operands belong to different tapes")
    return tape


def _unbroadcast(grad, shape) -> np.ndarray:
    grad = np.asarray(grad)
    shape = tuple(shape)
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ================== PRIMITIVES ==================

def add(a: Operand, b: Operand) -> Operand:
    tape = _tape_of(a, b)
    va, vb = value_of(a), value_of(b)
    out = va + vb
    if tape is None:
        return out
    parents = []
    if is_dual(a):
        shape_a = np.shape(va)
        parents.append((a.index, lambda g: _unbroadcast(g, shape_a)))
    if is_dual(b):
        shape_b = np.shape(vb)
        parents.append((b.index, lambda g: _unbroadcast(g, shape_b)))
    return tape.record("add", out, tuple(parents))


def sub(a: Operand, b: Operand) -> Operand:
    tape = _tape_of(a, b)
    va, vb = value_of(a), value_of(b)
    out = va - vb
    if tape is None:
        return out
    parents = []
    if is_dual(a):
        shape_a = np.shape(va)
        parents.append((a.index, lambda g: _unbroadcast(g, shape_a)))
    if is_dual(b):
        shape_b = np.shape(vb)
        parents.append((b.index, lambda g: -_unbroadcast(g, shape_b)))
    return tape.record("sub", out, tuple(parents))


def mul(a: Operand, b: Operand) -> Operand:
    tape = _tape_of(a, b)
    va, vb = value_of(a), value_of(b)
    out = va * vb
    if tape is None:
        return out
    parents = []
    if is_dual(a):
        shape_a = np.shape(va)
        parents.append((a.index, lambda g: _unbroadcast(g * vb, shape_a)))
    if is_dual(b):
        shape_b = np.shape(vb)
        parents.append((b.index, lambda g: _unbroadcast(g * va, shape_b)))
    return tape.record("mul", out, tuple(parents))


def scale(a: Operand, factor: float) -> Operand:
    factor = float(factor)
    if not is_dual(a):
        return a * factor
    return a.tape.record("scale", a.value * factor, ((a.index, lambda g: g * factor),))


def _unary(kind: str, a: Operand, forward, local_derivative) -> Operand:
    if not is_dual(a):
        return forward(a)
    out = forward(a.value)
    local = local_derivative(a.value, out)
    return a.tape.record(kind, out, ((a.index, lambda g: g * local),))


def tanh(a: Operand) -> Operand:
    return _unary("tanh", a, np.tanh, lambda x, y: 1.0 - y * y)


def exp(a: Operand) -> Operand:
    return _unary("exp", a, np.exp, lambda x, y: y)


def sin(a: Operand) -> Operand:
    return _unary("sin", a, np.sin, lambda x, y: np.cos(x))


def cos(a: Operand) -> Operand:
    return _unary("cos", a, np.cos, lambda x, y: -np.sin(x))


def square(a: Operand) -> Operand:
    return _unary("square", a, np.square, lambda x, y: 2.0 * x)


def sum_all(a: Operand) -> Operand:
    if not is_dual(a):
        return np.sum(a)
    shape = a.value.shape
    return a.tape.record("sum", np.sum(a.value), ((a.index, lambda g: np.broadcast_to(g, shape)),))


def mean_all(a: Operand) -> Operand:
    if not is_dual(a):
        return np.mean(a)
    shape = a.value.shape
    size = max(a.value.size, 1)
    return a.tape.record("mean", np.mean(a.value), ((a.index, lambda g: np.broadcast_to(g / size, shape)),))


def take(a: Operand, key) -> Operand:
    """Basic (non-fancy) indexing; the adjoint is scattered back into a zero block"""
    if not is_dual(a):
        return a[key]
    shape = a.value.shape

    def vjp(g):
        full = np.zeros(shape)
        full[key] = g
        return full

    return a.tape.record("take", a.value[key], ((a.index, vjp),))


def reshape(a: Operand, shape) -> Operand:
    if not is_dual(a):
        return np.reshape(a, shape)
    original = a.value.shape
    return a.tape.record("reshape", a.value.reshape(shape), ((a.index, lambda g: np.reshape(g, original)),))


def dense(a: Operand, w: Operand) -> Operand:
    """a @ w.T for a of shape (..., k) and a weight matrix w of shape (m, k)"""
    tape = _tape_of(a, w)
    va, vw = value_of(a), value_of(w)
    out = va @ vw.T
    if tape is None:
        return out
    parents = []
    if is_dual(a):
        shape_a = np.shape(va)
        parents.append((a.index, lambda g: _unbroadcast(g @ vw, shape_a)))
    if is_dual(w):
        # leading axes of g and a are summed over
        parents.append((w.index, lambda g: np.reshape(g, (-1, np.shape(g)[-1])).T
                        @ np.reshape(va, (-1, np.shape(va)[-1]))))
    return tape.record("dense", out, tuple(parents))
