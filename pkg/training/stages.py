"""
Two-stage training. The initialization stage fits one network on a small
whole-domain subset with the PINN loss; its parameters (theta0) seed every
subdomain network of the main stage, which then trains all networks jointly
under one Adam state over their concatenated parameters.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from autodiff.tape import Tape, is_dual
from geometry.decomposition import Decomposition
from geometry.sampling import SampleSets
from losses.composite import total_loss
from network.checkpoint import save_checkpoint
from network.mlp import LayerSpec, NetworkModel, ParameterVector, init_xavier
from problems.benchmarks import ProblemDefinition
from schemas.experiment_schema import LossBreakdown, LossWeights, Schedule, TrainingMode
from training.adam import AdamState, adam_step
from utils.exceptions import ConfigError, DivergenceError

logger = logging.getLogger(__name__)

Monitor = Callable[[List[ParameterVector]], Dict[str, float]]

HISTORY_COLUMNS = ["iteration"] + list(LossBreakdown.model_fields)


class StageResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    parameters: List[ParameterVector]
    history: pd.DataFrame

    @property
    def theta0(self) -> ParameterVector:
        return self.parameters[0]


def flatten(parameters: Sequence[ParameterVector]) -> np.ndarray:
    return np.concatenate([p.values for p in parameters])


def unflatten(flat: np.ndarray, specs: Sequence[LayerSpec]) -> List[ParameterVector]:
    parameters, offset = [], 0
    for spec in specs:
        parameters.append(ParameterVector(spec, flat[offset:offset + spec.n_parameters].copy()))
        offset += spec.n_parameters
    return parameters


def loss_and_gradient(mode: TrainingMode, weights: LossWeights, parameters: Sequence[ParameterVector],
                      sets: SampleSets, problem: ProblemDefinition) -> Tuple[np.ndarray, LossBreakdown]:
    """Fresh tape per evaluation; gradient laid out like flatten(parameters)"""
    tape = Tape()
    models = [NetworkModel(p) for p in parameters]
    for model in models:
        model.bind(tape)
    total, breakdown = total_loss(mode, weights, models, sets, problem, tape)
    if is_dual(total):
        return tape.backward(total), breakdown
    return np.zeros(sum(len(p) for p in parameters)), breakdown


def check_mode_weights(mode: TrainingMode, weights: LossWeights) -> None:
    if mode is TrainingMode.XPINN and (weights.lambda_5 > 0 or weights.lambda_6 > 0):
        raise ConfigError("smoothness weights are not used by XPINN", weights=weights.model_dump())
    if mode is TrainingMode.IDPINN and (weights.lambda_residual > 0 or weights.lambda_avg > 0):
        raise ConfigError("XPINN interface weights are not used by IDPINN", weights=weights.model_dump())


def optimize(mode: TrainingMode, weights: LossWeights, parameters: Sequence[ParameterVector], sets: SampleSets,
             problem: ProblemDefinition, iterations: int, learning_rate: float, history_stride: int = 100,
             monitor: Optional[Monitor] = None, iteration_offset: int = 0, stage: str = "main",
             bias_correction: bool = True) -> StageResult:
    specs = [p.spec for p in parameters]
    flat = flatten(parameters)
    state = AdamState(flat.size, learning_rate, bias_correction=bias_correction)
    rows = []

    for step in range(iterations + 1):
        current = unflatten(flat, specs)
        grad, breakdown = loss_and_gradient(mode, weights, current, sets, problem)
        if not np.isfinite(breakdown.total):
            raise DivergenceError("loss is not finite", stage=stage, iteration=iteration_offset + step)

        if step % history_stride == 0 or step == iterations:
            row = {"iteration": iteration_offset + step, **breakdown.model_dump()}
            if monitor is not None:
                row.update(monitor(current))
            rows.append(row)
            l2 = row.get("l2_error")
            logger.info(
                f"[{stage}] iteration {row['iteration']}: loss={breakdown.total:.6e}"
                + (f" l2={l2:.4e}" if l2 is not None else "")
            )
        if step == iterations:
            break
        flat = adam_step(state, flat, grad)

    return StageResult(parameters=unflatten(flat, specs), history=pd.DataFrame(rows))


def _point_count(sets: SampleSets) -> int:
    return sum(len(batch) for region in (sets.residual, sets.boundary, sets.initial) for batch in region.values())


def train_init_stage(problem: ProblemDefinition, init_sets: Optional[SampleSets], schedule: Schedule, spec: LayerSpec,
                     weights: LossWeights, seed: int, monitor: Optional[Monitor] = None,
                     checkpoint_path: Optional[Union[str, Path]] = None) -> StageResult:
    theta = init_xavier(spec, seed)
    if schedule.init_iterations == 0:
        logger.info("Initialization stage disabled, using the Xavier draw as theta0")
        result = StageResult(parameters=[theta], history=pd.DataFrame(columns=HISTORY_COLUMNS))
    else:
        if init_sets is None or _point_count(init_sets) == 0:
            raise ConfigError("initialization stage has no points to train on", iterations=schedule.init_iterations)
        result = optimize(
            TrainingMode.PINN,
            weights.pinn_only(),
            [theta],
            init_sets,
            problem,
            schedule.init_iterations,
            schedule.effective_init_learning_rate,
            schedule.history_stride,
            monitor,
            stage="init",
        )
    if checkpoint_path is not None:
        save_checkpoint(result.theta0, checkpoint_path)
    return result


def train_main_stage(problem: ProblemDefinition, decomp: Decomposition, training_sets: SampleSets,
                     theta0: Union[ParameterVector, Sequence[ParameterVector]], weights: LossWeights,
                     mode: Union[TrainingMode, str], schedule: Schedule, monitor: Optional[Monitor] = None,
                     iteration_offset: int = 0) -> StageResult:
    """
    PINN mode trains one network on the union of all subdomain sets. The
    decomposed modes clone theta0 into every subdomain, or take one vector per
    subdomain when the networks differ.
    """
    mode = TrainingMode(mode)
    check_mode_weights(mode, weights)

    if mode is TrainingMode.PINN:
        first = theta0 if isinstance(theta0, ParameterVector) else theta0[0]
        parameters = [first.copy()]
        sets = training_sets.merged()
    else:
        if decomp.subdomain_count < 2 or not training_sets.interface:
            raise ConfigError(f"{mode.value} needs a decomposition with interface points",
                              subdomains=decomp.subdomain_count)
        if isinstance(theta0, ParameterVector):
            parameters = [theta0.copy() for _ in range(decomp.subdomain_count)]
        else:
            parameters = [p.copy() for p in theta0]
            if len(parameters) != decomp.subdomain_count:
                raise ConfigError("one parameter vector per subdomain is required",
                                  expected=decomp.subdomain_count, received=len(parameters))
        sets = training_sets

    return optimize(
        mode,
        weights,
        parameters,
        sets,
        problem,
        schedule.main_iterations,
        schedule.learning_rate,
        schedule.history_stride,
        monitor,
        iteration_offset,
        stage="main",
    )
