import logging
from typing import Dict, Optional, Sequence, Tuple, Union

from autodiff import tape as ad
from autodiff.tape import Tape, value_of
from geometry.sampling import SampleSets
from losses.terms import (
    average_from,
    boundary_loss,
    continuity_from,
    gradient_gap_from,
    initial_loss,
    interface_jets,
    residual_gap_from,
    residual_gradient_gap_from,
    residual_loss,
)
from network.mlp import SurrogateModel
from problems.benchmarks import ProblemDefinition
from schemas.experiment_schema import LossBreakdown, LossWeights, TrainingMode
from utils.exceptions import JetOrderError

logger = logging.getLogger(__name__)


def interface_order_needed(mode: TrainingMode, weights: LossWeights, problem: ProblemDefinition) -> int:
    if mode is TrainingMode.XPINN:
        return problem.residual_order if weights.lambda_residual > 0 else 0
    if weights.lambda_6 > 0:
        return problem.required_jet_order(pde_gradient=True)
    if weights.lambda_5 > 0:
        return 1
    return 0


def total_loss(mode: Union[TrainingMode, str], weights: LossWeights, models: Sequence[SurrogateModel],
               sets: SampleSets, problem: ProblemDefinition, tape: Optional[Tape],
               interface_order: Optional[int] = None) -> Tuple[object, LossBreakdown]:
    """
    Weighted composite for the given mode. PINN mode ignores interfaces,
    XPINN uses residual continuity plus the average-solution term, IDPINN
    uses continuity and the two smoothness terms. Terms with zero weight are
    not evaluated.
    """
    mode = TrainingMode(mode)
    factors = weights.as_mapping()
    terms: Dict[str, object] = {}

    if factors["residual"] > 0:
        terms["residual"] = residual_loss(models, sets.residual, problem, tape)
    if factors["boundary"] > 0:
        terms["boundary"] = boundary_loss(models, sets.boundary, problem, tape)
    if factors["initial"] > 0:
        terms["initial"] = initial_loss(models, sets.initial, problem, tape)

    if mode is not TrainingMode.PINN and sets.interface:
        needed = interface_order_needed(mode, weights, problem)
        if interface_order is not None:
            if interface_order < needed:
                raise JetOrderError("interface jet order too low for the active terms",
                                    order=interface_order, required=needed)
            needed = interface_order
        jets = interface_jets(models, sets.interface, tape, needed)

        if mode is TrainingMode.XPINN:
            if factors["xpinn_residual"] > 0:
                terms["xpinn_residual"] = residual_gap_from(jets, problem)
            if factors["xpinn_avg"] > 0:
                terms["xpinn_avg"] = average_from(jets)
            if weights.xpinn_continuity and factors["inter"] > 0:
                terms["inter"] = continuity_from(jets)
        else:
            if factors["inter"] > 0:
                terms["inter"] = continuity_from(jets)
            if factors["grad_smooth"] > 0:
                terms["grad_smooth"] = gradient_gap_from(jets)
            if factors["pde_grad_smooth"] > 0:
                terms["pde_grad_smooth"] = residual_gradient_gap_from(jets, problem)

    total = 0.0
    for name, term in terms.items():
        weighted = ad.scale(term, factors[name])
        total = weighted if isinstance(total, float) and total == 0.0 else ad.add(total, weighted)

    breakdown = LossBreakdown(
        **{name: float(value_of(term)) for name, term in terms.items()},
        total=float(value_of(total)),
    )
    return total, breakdown
