import logging

import numpy as np

from utils.exceptions import DimensionMismatchError, DivergenceError

logger = logging.getLogger(__name__)


class AdamState:
    def __init__(self, size: int, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                 epsilon: float = 1e-8, bias_correction: bool = True):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.step_count = 0
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        # only switched off to check that the first-step test notices
        self.bias_correction = bias_correction


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One Adam update of a flat parameter array; returns the new array"""
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != grad.shape or params.shape != state.m.shape:
        raise DimensionMismatchError("parameter, gradient and optimizer sizes differ",
                                     params=params.shape, grad=grad.shape, state=state.m.shape)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError(
            "non-finite gradient",
            step=state.step_count,
            bad_entries=int(np.sum(~np.isfinite(grad))),
        )

    state.step_count += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    if state.bias_correction:
        m_hat = state.m / (1.0 - state.beta1 ** state.step_count)
        v_hat = state.v / (1.0 - state.beta2 ** state.step_count)
    else:
        m_hat, v_hat = state.m, state.v
    return params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
