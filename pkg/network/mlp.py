import logging
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from autodiff import tape as ad
from autodiff.jet import Jet, is_structural_zero, jet_tanh, multi_indices
from autodiff.tape import DualScalar, Tape
from utils.exceptions import DimensionMismatchError, JetShapeError
from utils.rng import make_rng

logger = logging.getLogger(__name__)


class LayerSpec(BaseModel):
    """Widths [n, N_1, ..., N_L, 1] of a dense tanh network with an affine output layer"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    sizes: List[int] = Field(..., description="Input width, hidden widths, output width")

    @field_validator("sizes")
    @classmethod
    def check_sizes(cls, sizes: List[int]) -> List[int]:
        if len(sizes) < 3:
            raise ValueError("a network needs at least one hidden layer")
        if any(width < 1 for width in sizes):
            raise ValueError("layer widths must be >= 1")
        if sizes[0] not in (1, 2):
            raise ValueError("input width must be 1 or 2")
        if sizes[-1] != 1:
            raise ValueError("output width must be 1")
        return sizes

    @property
    def input_dim(self) -> int:
        return self.sizes[0]

    @property
    def n_parameters(self) -> int:
        return sum(n_out * n_in + n_out for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]))


def parameter_layout(sizes: Sequence[int]) -> List[Tuple[Tuple[int, int, Tuple[int, int]], Tuple[int, int]]]:
    """Per layer: (weight start, weight stop, weight shape), (bias start, bias stop)"""
    layout = []
    offset = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        w_stop = offset + n_out * n_in
        b_stop = w_stop + n_out
        layout.append(((offset, w_stop, (n_out, n_in)), (w_stop, b_stop)))
        offset = b_stop
    return layout


class ParameterVector:
    """Flat float64 parameters; W^l stored row-major (N_l x N_{l-1}) followed by b^l"""

    def __init__(self, spec: LayerSpec, values):
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size != spec.n_parameters:
            raise DimensionMismatchError(
                "parameter count does not match the layer spec",
                expected=spec.n_parameters,
                received=int(values.size),
            )
        self.spec = spec
        self.values = values

    def __len__(self) -> int:
        return self.values.size

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return [
            (self.values[w0:w1].reshape(shape), self.values[b0:b1])
            for (w0, w1, shape), (b0, b1) in parameter_layout(self.spec.sizes)
        ]

    @classmethod
    def from_layers(cls, spec: LayerSpec, layers: Sequence[Tuple[np.ndarray, np.ndarray]]) -> "ParameterVector":
        blocks = []
        for (weights, bias), ((_, _, shape), _) in zip(layers, parameter_layout(spec.sizes)):
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != shape:
                raise DimensionMismatchError("weight block has the wrong shape", expected=shape, received=weights.shape)
            blocks.extend([weights.reshape(-1), np.asarray(bias, dtype=np.float64).reshape(-1)])
        return cls(spec, np.concatenate(blocks))

    def copy(self) -> "ParameterVector":
        return ParameterVector(self.spec, self.values.copy())


def init_xavier(spec: LayerSpec, seed: int) -> ParameterVector:
    rng = make_rng(seed)
    layers = []
    for n_in, n_out in zip(spec.sizes[:-1], spec.sizes[1:]):
        bound = np.sqrt(6.0 / (n_in + n_out))
        layers.append((rng.uniform(-bound, bound, size=(n_out, n_in)), np.zeros(n_out)))
    return ParameterVector.from_layers(spec, layers)


def _check_inputs(spec: LayerSpec, width: int) -> None:
    if width != spec.input_dim:
        raise DimensionMismatchError("input dimension does not match the network", expected=spec.input_dim, received=width)


def forward(params: ParameterVector, spec: LayerSpec, inputs) -> np.ndarray:
    """Plain evaluation on a point (d,) or a batch (N, d)"""
    z = np.asarray(inputs, dtype=np.float64)
    _check_inputs(spec, z.shape[-1])
    layers = params.layers()
    for index, (weights, bias) in enumerate(layers):
        z = z @ weights.T + bias
        if index < len(layers) - 1:
            z = np.tanh(z)
    return z[..., 0]


# ================== JET EVALUATION ==================

class BoundParameters:
    """ParameterVector registered as one leaf of a tape, with per-layer views"""

    def __init__(self, params: ParameterVector, tape: Tape):
        self.tape = tape
        self.spec = params.spec
        self.leaf = tape.parameter(params.values)
        self.layers: List[Tuple[DualScalar, DualScalar]] = []
        for (w0, w1, shape), (b0, b1) in parameter_layout(self.spec.sizes):
            weights = ad.reshape(ad.take(self.leaf, slice(w0, w1)), shape)
            self.layers.append((weights, ad.take(self.leaf, slice(b0, b1))))
        first_weights = self.layers[0][0]
        self.input_columns = [ad.take(first_weights, (slice(None), i)) for i in range(self.spec.input_dim)]


def bind_parameters(params: ParameterVector, tape: Tape) -> BoundParameters:
    return BoundParameters(params, tape)


def _as_column(c):
    if isinstance(c, DualScalar):
        return ad.reshape(c, c.shape + (1,))
    if isinstance(c, np.ndarray):
        return c[..., None]
    return c


def forward_jet(params, spec: LayerSpec, input_jets: Sequence[Jet], tape: Optional[Tape] = None) -> Jet:
    """
    Push coordinate jets through the network. params is a ParameterVector
    (bound to tape here) or an already bound BoundParameters.
    """
    _check_inputs(spec, len(input_jets))
    order, input_dim = input_jets[0].order, input_jets[0].input_dim
    if any(jet.order != order or jet.input_dim != input_dim for jet in input_jets):
        raise JetShapeError("input jets must share order and input dimension")
    if isinstance(params, BoundParameters):
        tape = params.tape
    elif tape is None:
        tape = input_jets[0].tape or Tape()
    bound = params if isinstance(params, BoundParameters) else bind_parameters(params, tape)

    zero = (0,) * input_dim
    indices = multi_indices(order, input_dim)

    coeffs = {}
    for alpha in indices:
        acc = 0.0
        for column, jet in zip(bound.input_columns, input_jets):
            c = jet.coeffs[alpha]
            if is_structural_zero(c):
                continue
            term = ad.mul(_as_column(c), column)
            acc = term if is_structural_zero(acc) else ad.add(acc, term)
        coeffs[alpha] = acc
    first_bias = bound.layers[0][1]
    coeffs[zero] = first_bias if is_structural_zero(coeffs[zero]) else ad.add(coeffs[zero], first_bias)
    z = Jet(coeffs, order, input_dim, tape)

    for weights, bias in bound.layers[1:]:
        hidden = jet_tanh(z)
        coeffs = {alpha: (0.0 if is_structural_zero(c) else ad.dense(c, weights)) for alpha, c in hidden.coeffs.items()}
        coeffs[zero] = ad.add(coeffs[zero], bias)
        z = Jet(coeffs, order, input_dim, tape)

    squeezed = {alpha: (0.0 if is_structural_zero(c) else ad.take(c, (Ellipsis, 0))) for alpha, c in z.coeffs.items()}
    return Jet(squeezed, order, input_dim, tape)


class SurrogateModel(Protocol):
    """Anything the loss terms can query for u and its input derivatives"""

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        ...

    def evaluate_jet(self, input_jets: Sequence[Jet]) -> Jet:
        ...


class NetworkModel:
    def __init__(self, params: ParameterVector):
        self.params = params
        self._bound: Optional[BoundParameters] = None

    @property
    def spec(self) -> LayerSpec:
        return self.params.spec

    def bind(self, tape: Tape) -> BoundParameters:
        self._bound = bind_parameters(self.params, tape)
        return self._bound

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return forward(self.params, self.spec, points)

    def evaluate_jet(self, input_jets: Sequence[Jet]) -> Jet:
        tape = input_jets[0].tape
        if tape is None:
            tape = self._bound.tape if self._bound is not None else Tape()
        if self._bound is None or self._bound.tape is not tape:
            self.bind(tape)
        return forward_jet(self._bound, self.spec, input_jets, tape)
