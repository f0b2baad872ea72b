import numpy as np
import pytest

from autodiff import tape as ad
from autodiff.jet import Jet, jet_arith, jet_cos, jet_exp, jet_sin, jet_tanh, lift_input, multi_indices
from autodiff.tape import Tape, value_of
from losses.terms import residual_loss
from network.mlp import LayerSpec, NetworkModel, ParameterVector, forward, init_xavier
from problems.benchmarks import helmholtz
from utils.exceptions import DimensionMismatchError, JetShapeError, TapeMismatchError, UnsupportedOrderError
from utils.rng import make_rng


def as_float(c) -> float:
    return float(np.asarray(value_of(c)))


# ================== JETS ==================

def test_tanh_third_derivative_at_zero():
    u = jet_tanh(lift_input(np.array([0.0]), 3)[0])
    assert as_float(u.value) == 0.0
    assert as_float(u.derivative((1,))) == pytest.approx(1.0, abs=1e-15)
    assert as_float(u.derivative((2,))) == pytest.approx(0.0, abs=1e-15)
    assert as_float(u.derivative((3,))) == pytest.approx(-2.0, abs=1e-12)


def test_polynomial_derivatives():
    x, y = lift_input(np.array([0.5, 2.0]), 3)
    u = x * x * y
    assert as_float(u.value) == pytest.approx(0.5)
    assert as_float(u.derivative((1, 0))) == pytest.approx(2.0 * 0.5 * 2.0)
    assert as_float(u.derivative((0, 1))) == pytest.approx(0.25)
    assert as_float(u.derivative((2, 0))) == pytest.approx(4.0)
    assert as_float(u.derivative((2, 1))) == pytest.approx(2.0)
    assert as_float(u.derivative((0, 2))) == 0.0


@pytest.mark.parametrize(
    "fn, derivatives",
    [
        (jet_exp, lambda z: [np.exp(z)] * 4),
        (jet_sin, lambda z: [np.sin(z), np.cos(z), -np.sin(z), -np.cos(z)]),
        (jet_cos, lambda z: [np.cos(z), -np.sin(z), -np.cos(z), np.sin(z)]),
    ],
)
def test_elementary_functions_match_closed_forms(fn, derivatives):
    z = 0.37
    u = fn(lift_input(np.array([z]), 3)[0])
    for k, expected in enumerate(derivatives(z)):
        assert as_float(u.derivative((k,))) == pytest.approx(expected, rel=1e-12)


def test_chain_rule_in_two_variables():
    point = np.array([0.3, -0.4])
    x, y = lift_input(point, 2)
    u = jet_sin(x * y)
    s = point[0] * point[1]
    # d2/dxdy sin(xy) = cos(xy) - xy sin(xy)
    assert as_float(u.derivative((1, 1))) == pytest.approx(np.cos(s) - s * np.sin(s), rel=1e-12)
    assert as_float(u.derivative((0, 2))) == pytest.approx(-point[0] ** 2 * np.sin(s), rel=1e-12)


def test_mixed_orders_truncate_to_the_lower():
    x3 = lift_input(np.array([1.0, 2.0]), 3)[0]
    y1 = lift_input(np.array([1.0, 2.0]), 1)[1]
    assert (x3 + y1).order == 1
    assert (x3 * y1).order == 1


def test_partial_lowers_order():
    x, y = lift_input(np.array([0.5, 2.0]), 3)
    u = x * x * x
    u_x = u.partial(0)
    assert u_x.order == 2
    assert as_float(u_x.value) == pytest.approx(3 * 0.25)
    assert as_float(u_x.derivative((1, 0))) == pytest.approx(6 * 0.5)


def test_jet_arith_dispatch():
    x, y = lift_input(np.array([0.2, 0.7]), 2)
    assert as_float(jet_arith(x, y, "add").value) == pytest.approx(0.9)
    assert as_float(jet_arith(x, 3.0, "scalar_mul").derivative((1, 0))) == pytest.approx(3.0)
    assert as_float(jet_arith(x, kind="exp").value) == pytest.approx(np.exp(0.2))
    with pytest.raises(JetShapeError):
        jet_arith(x, 2.0, "mul")
    with pytest.raises(ValueError):
        jet_arith(x, y, "div")


def test_shape_limits():
    with pytest.raises(UnsupportedOrderError):
        lift_input(np.array([0.0, 0.0]), 4)
    with pytest.raises(DimensionMismatchError):
        lift_input(np.array([0.0, 0.0, 0.0]), 2)
    with pytest.raises(JetShapeError):
        Jet({(0, 0): 1.0}, 1, 2)
    assert len(multi_indices(3, 2)) == 10


def _fd_derivative(f, alpha, h):
    """Central differences for every multi-index up to order three in two inputs."""
    stencils = {
        0: ((0, 1.0),),
        1: ((1, 0.5), (-1, -0.5)),
        2: ((1, 1.0), (0, -2.0), (-1, 1.0)),
        3: ((2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)),
    }
    total = 0.0
    for sx, cx in stencils[alpha[0]]:
        for sy, cy in stencils[alpha[1]]:
            total += cx * cy * f(sx * h, sy * h)
    return total / h ** sum(alpha)


@pytest.mark.parametrize(
    "alpha, tolerance",
    [((1, 0), 1e-5), ((0, 1), 1e-5), ((2, 0), 1e-5), ((1, 1), 1e-5), ((0, 2), 1e-5),
     ((3, 0), 1e-3), ((2, 1), 1e-3), ((1, 2), 1e-3), ((0, 3), 1e-3)],
)
def test_network_jet_matches_finite_differences(alpha, tolerance):
    spec = LayerSpec(sizes=[2, 10, 10, 1])
    rng = make_rng(5)
    for seed in range(5):
        params = init_xavier(spec, seed)
        point = rng.uniform(-1.0, 1.0, 2)
        u = NetworkModel(params).evaluate_jet(lift_input(point, 3, Tape()))

        def f(dx, dy):
            return float(forward(params, spec, point + np.array([dx, dy])))

        assert as_float(u.value) == pytest.approx(f(0.0, 0.0), rel=1e-12, abs=1e-14)
        fd = _fd_derivative(f, alpha, 1e-3 if sum(alpha) < 3 else 5e-3)
        assert as_float(u.derivative(alpha)) == pytest.approx(fd, rel=tolerance, abs=tolerance)


def test_batched_jet_matches_pointwise():
    spec = LayerSpec(sizes=[2, 6, 1])
    params = init_xavier(spec, 1)
    points = make_rng(2).uniform(-1.0, 1.0, (7, 2))
    batched = NetworkModel(params).evaluate_jet(lift_input(points, 2, Tape()))
    for n, point in enumerate(points):
        single = NetworkModel(params).evaluate_jet(lift_input(point, 2, Tape()))
        for alpha in multi_indices(2, 2):
            assert np.asarray(value_of(batched.derivative(alpha)))[n] == pytest.approx(as_float(single.derivative(alpha)))


# ================== TAPE ==================

def test_backward_elementwise():
    tape = Tape()
    p = tape.parameter(np.array([0.3, -0.7]))
    loss = ad.sum_all(ad.mul(ad.tanh(p), p))
    grad = tape.backward(loss)
    t = np.tanh([0.3, -0.7])
    np.testing.assert_allclose(grad, t + np.array([0.3, -0.7]) * (1 - t ** 2), rtol=1e-14)


def test_backward_dense_matches_finite_differences():
    rng = make_rng(0)
    a = rng.normal(size=(4, 3))
    w0 = rng.normal(size=(2, 3))

    def loss_of(w):
        tape = Tape()
        leaf = tape.parameter(w.reshape(-1))
        out = ad.mean_all(ad.square(ad.dense(a, ad.reshape(leaf, (2, 3)))))
        return tape, out

    tape, out = loss_of(w0)
    grad = tape.backward(out)
    h = 1e-6
    for k in range(w0.size):
        plus, minus = w0.reshape(-1).copy(), w0.reshape(-1).copy()
        plus[k] += h
        minus[k] -= h
        fd = (float(loss_of(plus)[1].value) - float(loss_of(minus)[1].value)) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_backward_through_network_residual():
    spec = LayerSpec(sizes=[2, 4, 1])
    problem = helmholtz()
    points = {1: np.array([[0.2, -0.3], [-0.5, 0.6]])}

    def loss_of(values):
        tape = Tape()
        model = NetworkModel(ParameterVector(spec, values))
        model.bind(tape)
        return tape, residual_loss([model], points, problem, tape)

    theta = init_xavier(spec, 3).values
    tape, loss = loss_of(theta)
    grad = tape.backward(loss)
    assert grad.shape == theta.shape
    h = 1e-6
    for k in range(theta.size):
        plus, minus = theta.copy(), theta.copy()
        plus[k] += h
        minus[k] -= h
        fd = (as_float(loss_of(plus)[1]) - as_float(loss_of(minus)[1])) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_unused_parameter_gets_zero_gradient():
    tape = Tape()
    used = tape.parameter(np.array([2.0]))
    tape.parameter(np.array([5.0, 6.0]))
    grad = tape.backward(ad.sum_all(ad.square(used)))
    np.testing.assert_array_equal(grad, [4.0, 0.0, 0.0])


def test_backward_rejects_foreign_and_vector_seeds():
    tape, other = Tape(), Tape()
    p = tape.parameter(np.array([1.0, 2.0]))
    with pytest.raises(TapeMismatchError):
        other.backward(ad.sum_all(p))
    with pytest.raises(TapeMismatchError):
        tape.backward(ad.square(p))


def test_mixing_tapes_is_rejected():
    a = Tape().parameter(np.array([1.0]))
    b = Tape().parameter(np.array([1.0]))
    with pytest.raises(TapeMismatchError):
        ad.add(a, b)
