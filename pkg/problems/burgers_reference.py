"""
Reference solution of the viscous Burgers equation
    u_t + u u_x = nu u_xx,  u(x, 0) = -sin(pi x),  u(+-1, t) = 0
via the Cole-Hopf transform. With the substitution y = x - sqrt(4 nu t) z the
solution is a ratio of two Gauss-Hermite quadratures:

    u(x, t) = - sum w_k sin(pi y_k) F(y_k) / sum w_k F(y_k),
    F(y) = exp(-cos(pi y) / (2 pi nu)).

The exponent is shifted by its maximum per point before exponentiating, which
leaves the ratio unchanged and keeps both sums representable.
"""

import logging
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss

from utils.exceptions import OracleConvergenceError

logger = logging.getLogger(__name__)

BURGERS_VISCOSITY = 0.01 / math.pi
DEFAULT_QUADRATURE_ORDER = 200
MIN_QUADRATURE_ORDER = 100
_CHUNK = 4096


@lru_cache(maxsize=8)
def _hermite_rule(order: int):
    return hermgauss(order)


def cole_hopf_reference(x, t, quadrature_order: int = DEFAULT_QUADRATURE_ORDER, viscosity: float = BURGERS_VISCOSITY):
    if quadrature_order < MIN_QUADRATURE_ORDER:
        raise ValueError(f"quadrature order must be >= {MIN_QUADRATURE_ORDER}")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    scalar = x.ndim == 0
    x, t = x.reshape(-1), t.reshape(-1)

    out = np.empty(x.shape)
    initial = t <= 0.0
    out[initial] = -np.sin(np.pi * x[initial])

    nodes, weights = _hermite_rule(quadrature_order)
    later = np.flatnonzero(~initial)
    for start in range(0, later.size, _CHUNK):
        rows = later[start:start + _CHUNK]
        shifted = x[rows, None] - np.sqrt(4.0 * viscosity * t[rows, None]) * nodes[None, :]
        exponent = -np.cos(np.pi * shifted) / (2.0 * np.pi * viscosity)
        exponent -= exponent.max(axis=1, keepdims=True)
        kernel = weights[None, :] * np.exp(exponent)
        denominator = kernel.sum(axis=1)
        if not np.all(np.isfinite(denominator)) or np.any(denominator <= np.finfo(np.float64).tiny):
            raise OracleConvergenceError(
                "Cole-Hopf denominator quadrature underflowed",
                quadrature_order=quadrature_order,
                bad_points=int(np.sum(~np.isfinite(denominator) | (denominator <= np.finfo(np.float64).tiny))),
            )
        out[rows] = -(kernel * np.sin(np.pi * shifted)).sum(axis=1) / denominator

    return float(out[0]) if scalar else out
