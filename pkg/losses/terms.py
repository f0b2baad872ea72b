"""
Individual loss terms. Every term is a per-subdomain (or per-interface)
mean of squared misfits, summed over subdomains (or interfaces). Empty point
sets contribute 0.
"""

import logging
from typing import List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from autodiff import tape as ad
from autodiff.jet import Jet, lift_input
from autodiff.tape import Tape
from network.mlp import SurrogateModel
from problems.benchmarks import ProblemDefinition
from utils.exceptions import ConfigError, JetOrderError

logger = logging.getLogger(__name__)

InterfaceKey = Tuple[int, int]


def model_for(models: Sequence[SurrogateModel], subdomain: int) -> SurrogateModel:
    """A single model serves every subdomain (PINN mode and the init stage)"""
    return models[0] if len(models) == 1 else models[subdomain - 1]


def _mean_square(values):
    return ad.mean_all(ad.square(values))


def _add(total, term):
    return term if isinstance(total, float) and total == 0.0 else ad.add(total, term)


# ================== DATA TERMS ==================

def residual_loss(models: Sequence[SurrogateModel], points: Mapping[int, np.ndarray], problem: ProblemDefinition,
                  tape: Optional[Tape], order: Optional[int] = None):
    order = problem.residual_order if order is None else order
    if order < problem.residual_order:
        raise JetOrderError("residual needs a higher jet order", order=order, required=problem.residual_order)
    total = 0.0
    for subdomain, batch in points.items():
        if len(batch) == 0:
            continue
        coords = lift_input(batch, order, tape)
        u = model_for(models, subdomain).evaluate_jet(coords)
        total = _add(total, _mean_square(problem.residual(u, coords).value))
    return total


def boundary_loss(models: Sequence[SurrogateModel], points: Mapping[int, np.ndarray], problem: ProblemDefinition,
                  tape: Optional[Tape]):
    total = 0.0
    for subdomain, batch in points.items():
        if len(batch) == 0:
            continue
        u = model_for(models, subdomain).evaluate_jet(lift_input(batch, 0, tape))
        total = _add(total, _mean_square(ad.sub(u.value, problem.boundary_value(batch))))
    return total


def initial_loss(models: Sequence[SurrogateModel], points: Mapping[int, np.ndarray], problem: ProblemDefinition,
                 tape: Optional[Tape]):
    total = 0.0
    for subdomain, batch in points.items():
        if len(batch) == 0:
            continue
        if problem.initial_value is None:
            raise ConfigError(f"{problem.name} has no initial condition but initial points were given")
        u = model_for(models, subdomain).evaluate_jet(lift_input(batch, 0, tape))
        total = _add(total, _mean_square(ad.sub(u.value, problem.initial_value(batch[:, 0]))))
    return total


# ================== INTERFACE TERMS ==================

class InterfaceJets(NamedTuple):
    key: InterfaceKey
    coords: List[Jet]
    inner: Jet
    outer: Jet


def interface_jets(models: Sequence[SurrogateModel], interface_points: Mapping[InterfaceKey, np.ndarray],
                   tape: Optional[Tape], order: int) -> List[InterfaceJets]:
    """Both neighbours evaluated once per interface at the highest order any term needs"""
    jets = []
    for (i, j), batch in interface_points.items():
        if len(batch) == 0:
            continue
        coords = lift_input(batch, order, tape)
        jets.append(InterfaceJets((i, j), coords, models[i - 1].evaluate_jet(coords), models[j - 1].evaluate_jet(coords)))
    return jets


def _squared_gradient_gap(a: Jet, b: Jet):
    gap = 0.0
    for da, db in zip(a.gradient(), b.gradient()):
        gap = _add(gap, ad.square(ad.sub(da, db)))
    return gap


def continuity_from(jets: Sequence[InterfaceJets]):
    total = 0.0
    for item in jets:
        total = _add(total, _mean_square(ad.sub(item.inner.value, item.outer.value)))
    return total


def average_from(jets: Sequence[InterfaceJets]):
    total = 0.0
    for item in jets:
        average = ad.scale(ad.add(item.inner.value, item.outer.value), 0.5)
        total = _add(total, _mean_square(ad.sub(item.inner.value, average)))
    return total


def gradient_gap_from(jets: Sequence[InterfaceJets]):
    total = 0.0
    for item in jets:
        if item.inner.order < 1:
            raise JetOrderError("gradient smoothness needs jets of order >= 1", order=item.inner.order)
        total = _add(total, ad.mean_all(_squared_gradient_gap(item.inner, item.outer)))
    return total


def residual_gap_from(jets: Sequence[InterfaceJets], problem: ProblemDefinition):
    total = 0.0
    for item in jets:
        inner = problem.residual(item.inner, item.coords)
        outer = problem.residual(item.outer, item.coords)
        total = _add(total, _mean_square(ad.sub(inner.value, outer.value)))
    return total


def residual_gradient_gap_from(jets: Sequence[InterfaceJets], problem: ProblemDefinition):
    total = 0.0
    for item in jets:
        if item.inner.order < problem.required_jet_order(pde_gradient=True):
            raise JetOrderError(
                "residual gradient smoothness needs one order above the residual",
                order=item.inner.order,
                required=problem.required_jet_order(pde_gradient=True),
            )
        inner = problem.residual(item.inner, item.coords)
        outer = problem.residual(item.outer, item.coords)
        total = _add(total, ad.mean_all(_squared_gradient_gap(inner, outer)))
    return total


# ================== PUBLIC TERMS ==================

def interface_continuity_loss(models, interface_points, tape: Optional[Tape]):
    return continuity_from(interface_jets(models, interface_points, tape, 0))


def gradient_smoothness_loss(models, interface_points, tape: Optional[Tape]):
    """Gap of the full input gradient, time included when present"""
    return gradient_gap_from(interface_jets(models, interface_points, tape, 1))


def residual_gradient_smoothness_loss(models, interface_points, problem: ProblemDefinition, tape: Optional[Tape],
                                      order: Optional[int] = None):
    order = problem.required_jet_order(pde_gradient=True) if order is None else order
    if order < problem.required_jet_order(pde_gradient=True):
        raise JetOrderError("residual gradient smoothness needs a higher jet order",
                            order=order, required=problem.required_jet_order(pde_gradient=True))
    return residual_gradient_gap_from(interface_jets(models, interface_points, tape, order), problem)


def xpinn_interface_losses(models, interface_points, problem: ProblemDefinition, tape: Optional[Tape]):
    """(residual continuity, average-solution term); the latter equals continuity / 4"""
    jets = interface_jets(models, interface_points, tape, problem.residual_order)
    return residual_gap_from(jets, problem), average_from(jets)
