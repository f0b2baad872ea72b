import numpy as np
import pytest

from autodiff.jet import Jet, lift_input
from autodiff.tape import Tape, value_of
from geometry.sampling import SampleSets
from losses.composite import interface_order_needed, total_loss
from losses.terms import (
    boundary_loss,
    gradient_smoothness_loss,
    initial_loss,
    interface_continuity_loss,
    residual_gradient_smoothness_loss,
    residual_loss,
    xpinn_interface_losses,
)
from network.mlp import LayerSpec, NetworkModel, forward, init_xavier
from problems.benchmarks import exact_jet, heat, helmholtz
from schemas.experiment_schema import LossWeights, TrainingMode
from training.stages import flatten, loss_and_gradient, unflatten
from utils.exceptions import JetOrderError
from utils.rng import make_rng


class ExactModel:
    """Exact solution plus an optional perturbation built from the coordinate jets"""

    def __init__(self, problem, perturbation=None):
        self.problem = problem
        self.perturbation = perturbation

    def evaluate(self, points):
        return self.problem.exact_solution(points)

    def evaluate_jet(self, coords) -> Jet:
        points = np.column_stack([np.broadcast_to(c.value, np.shape(coords[0].value)) for c in coords])
        u = exact_jet(self.problem, points, coords[0].order)
        return u if self.perturbation is None else u + self.perturbation(coords)


def shift(c):
    return lambda coords: coords[0] * 0.0 + c


def as_float(value) -> float:
    return float(value_of(value))


@pytest.fixture
def interface_points():
    y = make_rng(0).uniform(-1.0, 1.0, 40)
    return {(1, 2): np.column_stack([np.zeros_like(y), y])}


def test_exact_model_has_zero_residual():
    problem = helmholtz()
    points = {1: make_rng(1).uniform(-1, 1, (30, 2)), 2: make_rng(2).uniform(-1, 1, (20, 2))}
    models = [ExactModel(problem), ExactModel(problem)]
    assert as_float(residual_loss(models, points, problem, None)) < 1e-20


def test_boundary_and_initial_terms_sum_over_subdomains():
    problem = heat()
    models = [ExactModel(problem, shift(0.5)), ExactModel(problem, shift(-0.25))]
    boundary = {1: np.array([[-1.0, 0.2], [1.0, 0.3]]), 2: np.array([[1.0, 0.9]])}
    assert as_float(boundary_loss(models, boundary, problem, None)) == pytest.approx(0.25 + 0.0625)

    initial = {1: np.array([[0.1, 0.0], [0.4, 0.0]]), 2: np.empty((0, 2))}
    assert as_float(initial_loss(models, initial, problem, None)) == pytest.approx(0.25)


def test_residual_order_too_low():
    problem = helmholtz()
    with pytest.raises(JetOrderError):
        residual_loss([ExactModel(problem)], {1: np.zeros((2, 2))}, problem, None, order=1)


def test_continuity_and_average(interface_points):
    problem = helmholtz()
    models = [ExactModel(problem), ExactModel(problem, shift(0.3))]
    continuity = as_float(interface_continuity_loss(models, interface_points, None))
    assert continuity == pytest.approx(0.09)
    _, average = xpinn_interface_losses(models, interface_points, problem, None)
    assert as_float(average) == pytest.approx(continuity / 4, rel=1e-13)


def test_gradient_smoothness(interface_points):
    problem = helmholtz()
    shifted = [ExactModel(problem), ExactModel(problem, shift(1.0))]
    assert as_float(gradient_smoothness_loss(shifted, interface_points, None)) == pytest.approx(0.0, abs=1e-28)

    tilted = [ExactModel(problem), ExactModel(problem, lambda coords: coords[0] * 0.2 + coords[1] * 0.1)]
    assert as_float(gradient_smoothness_loss(tilted, interface_points, None)) == pytest.approx(0.05)


def test_residual_gradient_smoothness():
    problem = heat()
    x = make_rng(3).uniform(-1.0, 1.0, 25)
    points = {(1, 2): np.column_stack([x, np.full_like(x, 0.5)])}

    # a*x^2 only offsets the heat residual by a constant
    quadratic = [ExactModel(problem), ExactModel(problem, lambda c: c[0] * c[0] * 0.4)]
    assert as_float(residual_gradient_smoothness_loss(quadratic, points, problem, None)) == pytest.approx(0.0, abs=1e-24)

    # a*x^3 offsets it by -6 a x, whose gradient gap is (-6a, 0)
    cubic = [ExactModel(problem), ExactModel(problem, lambda c: c[0] * c[0] * c[0] * 0.5)]
    assert as_float(residual_gradient_smoothness_loss(cubic, points, problem, None)) == pytest.approx(9.0)

    with pytest.raises(JetOrderError):
        residual_gradient_smoothness_loss(cubic, points, problem, None, order=2)


def test_xpinn_residual_continuity(interface_points):
    problem = helmholtz()
    # the Helmholtz residual contains +u, so a constant shift moves it by the same constant
    models = [ExactModel(problem), ExactModel(problem, shift(0.5))]
    residual_gap, _ = xpinn_interface_losses(models, interface_points, problem, None)
    assert as_float(residual_gap) == pytest.approx(0.25)


# ================== COMPOSITE ==================

def sets_with(interface_points):
    rng = make_rng(5)
    return SampleSets(
        residual={1: rng.uniform(-1, 0, (10, 2)), 2: rng.uniform(0, 1, (10, 2))},
        boundary={1: np.array([[-1.0, 0.0]]), 2: np.array([[1.0, 0.5]])},
        initial={1: np.empty((0, 2)), 2: np.empty((0, 2))},
        interface=interface_points,
    )


def test_interface_order_needed():
    problem = helmholtz()
    assert interface_order_needed(TrainingMode.IDPINN, LossWeights(lambda_4=1, lambda_5=1, lambda_6=1), problem) == 3
    assert interface_order_needed(TrainingMode.IDPINN, LossWeights(lambda_4=1, lambda_5=1), problem) == 1
    assert interface_order_needed(TrainingMode.IDPINN, LossWeights(lambda_4=1), problem) == 0
    assert interface_order_needed(TrainingMode.XPINN, LossWeights(lambda_residual=1, lambda_avg=1), problem) == 2


def test_total_loss_weights_every_active_term(interface_points):
    problem = helmholtz()
    models = [ExactModel(problem), ExactModel(problem, shift(0.3))]
    weights = LossWeights(lambda_1=1, lambda_2=10, lambda_4=20, lambda_5=2, lambda_6=5)
    total, breakdown = total_loss(TrainingMode.IDPINN, weights, models, sets_with(interface_points), problem, None)

    assert breakdown.residual == pytest.approx(0.09)
    assert breakdown.boundary == pytest.approx(0.09)
    assert breakdown.inter == pytest.approx(0.09)
    assert breakdown.grad_smooth == pytest.approx(0.0, abs=1e-24)
    assert breakdown.pde_grad_smooth == pytest.approx(0.0, abs=1e-20)
    assert breakdown.xpinn_avg == 0.0
    expected = 1 * 0.09 + 10 * 0.09 + 20 * 0.09
    assert breakdown.total == pytest.approx(expected)
    assert as_float(total) == pytest.approx(expected)


def test_pinn_mode_ignores_interfaces(interface_points):
    problem = helmholtz()
    models = [ExactModel(problem, shift(0.3))]
    weights = LossWeights(lambda_1=1, lambda_2=1, lambda_4=100)
    _, breakdown = total_loss(TrainingMode.PINN, weights, models, sets_with(interface_points), problem, None)
    assert breakdown.inter == 0.0
    assert breakdown.total == pytest.approx(2 * 0.09 + 2 * 0.09)


def test_xpinn_mode_uses_residual_gap_and_average(interface_points):
    problem = helmholtz()
    models = [ExactModel(problem), ExactModel(problem, shift(0.2))]
    weights = LossWeights(lambda_1=0, lambda_2=0, lambda_4=1, lambda_residual=20, lambda_avg=20)
    _, breakdown = total_loss(TrainingMode.XPINN, weights, models, sets_with(interface_points), problem, None)
    assert breakdown.inter == 0.0
    assert breakdown.xpinn_residual == pytest.approx(0.04)
    assert breakdown.xpinn_avg == pytest.approx(0.01)

    with_continuity = weights.model_copy(update={"xpinn_continuity": True})
    _, breakdown = total_loss(TrainingMode.XPINN, with_continuity, models, sets_with(interface_points), problem, None)
    assert breakdown.inter == pytest.approx(0.04)


def test_explicit_interface_order_too_low(interface_points):
    problem = helmholtz()
    models = [ExactModel(problem), ExactModel(problem)]
    weights = LossWeights(lambda_4=1, lambda_6=1)
    with pytest.raises(JetOrderError):
        total_loss(TrainingMode.IDPINN, weights, models, sets_with(interface_points), problem, None, interface_order=2)


# ================== NETWORK CHECKS ==================

NET_SPEC = LayerSpec(sizes=[2, 8, 8, 1])


def network_pair(seed):
    return [init_xavier(NET_SPEC, seed), init_xavier(NET_SPEC, seed + 100)]


def random_interface(seed, n=12):
    return {(1, 2): make_rng(seed).uniform(-0.9, 0.9, (n, 2))}


def interface_only(interface):
    return SampleSets(residual={1: np.empty((0, 2)), 2: np.empty((0, 2))},
                      boundary={1: np.empty((0, 2)), 2: np.empty((0, 2))},
                      initial={1: np.empty((0, 2)), 2: np.empty((0, 2))},
                      interface=interface)


def central_gradient(f, points, h=1e-5):
    columns = []
    for axis in range(points.shape[1]):
        step = np.zeros(points.shape[1])
        step[axis] = h
        columns.append((f(points + step) - f(points - step)) / (2 * h))
    return np.column_stack(columns)


def residual_values(problem, params, points):
    coords = lift_input(points, problem.residual_order, Tape())
    u = NetworkModel(params).evaluate_jet(coords)
    return np.asarray(value_of(problem.residual(u, coords).value), dtype=np.float64)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_smoothness_value_matches_finite_differences(seed):
    params = network_pair(seed)
    points = random_interface(seed)[(1, 2)]
    models = [NetworkModel(p) for p in params]
    value = as_float(gradient_smoothness_loss(models, {(1, 2): points}, Tape()))

    grads = [central_gradient(lambda q, p=p: forward(p, NET_SPEC, q), points) for p in params]
    expected = np.mean(np.sum((grads[0] - grads[1]) ** 2, axis=1))
    assert value == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_residual_gradient_smoothness_value_matches_finite_differences(seed):
    problem = helmholtz()
    params = network_pair(seed)
    points = random_interface(seed)[(1, 2)]
    models = [NetworkModel(p) for p in params]
    value = as_float(residual_gradient_smoothness_loss(models, {(1, 2): points}, problem, Tape()))

    grads = [central_gradient(lambda q, p=p: residual_values(problem, p, q), points) for p in params]
    expected = np.mean(np.sum((grads[0] - grads[1]) ** 2, axis=1))
    assert value == pytest.approx(expected, rel=1e-5)


@pytest.mark.parametrize(
    "weights",
    [LossWeights(lambda_1=0, lambda_5=1), LossWeights(lambda_1=0, lambda_6=1),
     LossWeights(lambda_1=0, lambda_4=1, lambda_5=1, lambda_6=1)],
)
def test_smoothness_parameter_gradient_matches_finite_differences(weights):
    problem = helmholtz()
    params = network_pair(7)
    sets = interface_only(random_interface(7))
    grad, _ = loss_and_gradient(TrainingMode.IDPINN, weights, params, sets, problem)
    flat = flatten(params)
    assert grad.shape == flat.shape

    def loss_at(values):
        current = unflatten(values, [NET_SPEC, NET_SPEC])
        return loss_and_gradient(TrainingMode.IDPINN, weights, current, sets, problem)[1].total

    h = 1e-6
    # random coordinates across both networks
    for k in make_rng(8).choice(flat.size, 10, replace=False):
        plus, minus = flat.copy(), flat.copy()
        plus[k] += h
        minus[k] -= h
        fd = (loss_at(plus) - loss_at(minus)) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-6)


@pytest.mark.parametrize("term, field", [("grad_smooth", "lambda_5"), ("pde_grad_smooth", "lambda_6"),
                                         ("inter", "lambda_4")])
def test_scaling_one_weight_scales_only_its_term(term, field):
    problem = helmholtz()
    params = network_pair(3)
    rng = make_rng(4)
    sets = SampleSets(residual={1: rng.uniform(-1, 0, (8, 2)), 2: rng.uniform(0, 1, (8, 2))},
                      boundary={1: np.array([[-1.0, 0.3]]), 2: np.array([[1.0, -0.2]])},
                      initial={1: np.empty((0, 2)), 2: np.empty((0, 2))},
                      interface=random_interface(4))
    base = LossWeights(lambda_1=1, lambda_2=10, lambda_4=20, lambda_5=1, lambda_6=1)
    scaled = base.model_copy(update={field: getattr(base, field) * 3.0})

    grad_base, before = loss_and_gradient(TrainingMode.IDPINN, base, params, sets, problem)
    grad_scaled, after = loss_and_gradient(TrainingMode.IDPINN, scaled, params, sets, problem)
    for name in ("residual", "boundary", "inter", "grad_smooth", "pde_grad_smooth"):
        assert getattr(after, name) == pytest.approx(getattr(before, name), rel=1e-12)
    added = 2.0 * getattr(base, field) * getattr(before, term)
    assert after.total == pytest.approx(before.total + added, rel=1e-12)

    only = LossWeights(lambda_1=0, **{field: 2.0 * getattr(base, field)})
    grad_only, _ = loss_and_gradient(TrainingMode.IDPINN, only, params, interface_only(sets.interface), problem)
    np.testing.assert_allclose(grad_scaled - grad_base, grad_only, rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_average_term_is_a_quarter_of_continuity(seed):
    problem = helmholtz()
    params = network_pair(seed)
    weights = LossWeights(lambda_1=0, lambda_4=1, lambda_avg=1, xpinn_continuity=True)
    _, breakdown = loss_and_gradient(TrainingMode.XPINN, weights, params,
                                     interface_only(random_interface(seed, n=30)), problem)
    assert breakdown.inter > 0.0
    assert breakdown.xpinn_avg == pytest.approx(breakdown.inter / 4, rel=1e-12)
