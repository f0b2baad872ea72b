import numpy as np
import pytest

from autodiff.jet import Jet
from geometry.decomposition import make_decomposition
from metrics.errors import L2Monitor, evaluate_on_grid, exact_values, extract_slice, predict, relative_l2
from network.mlp import LayerSpec, NetworkModel, init_xavier
from problems.benchmarks import exact_jet, heat, helmholtz
from utils.exceptions import DimensionMismatchError, UndefinedMetricError
from utils.rng import make_rng


class ConstantModel:
    def __init__(self, value: float):
        self.value = value

    def evaluate(self, points):
        return np.full(len(points), self.value)


class ExactModel:
    def __init__(self, problem):
        self.problem = problem

    def evaluate(self, points):
        return self.problem.exact_solution(points)

    def evaluate_jet(self, coords) -> Jet:
        points = np.column_stack([np.broadcast_to(c.value, np.shape(coords[0].value)) for c in coords])
        return exact_jet(self.problem, points, coords[0].order)


def test_relative_l2():
    assert relative_l2([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_l2([0.0, 0.0], [3.0, 4.0]) == pytest.approx(1.0)
    assert relative_l2(np.array([[1.0], [1.0]]), [1.0, 0.0]) == pytest.approx(1.0)
    with pytest.raises(UndefinedMetricError):
        relative_l2([1.0], [0.0])
    with pytest.raises(DimensionMismatchError):
        relative_l2([1.0, 2.0], [1.0])


def test_predict_routes_by_membership():
    decomp = make_decomposition("split_x0")
    points = np.array([[-0.5, 0.0], [0.0, 0.2], [0.7, -0.3]])
    np.testing.assert_array_equal(predict([ConstantModel(1.0), ConstantModel(2.0)], decomp, points), [1.0, 1.0, 2.0])
    np.testing.assert_array_equal(predict([ConstantModel(5.0)], decomp, points), [5.0, 5.0, 5.0])


def test_exact_values_cache(tmp_path):
    problem = helmholtz().model_copy(update={"cache_exact": True})
    points = make_rng(0).uniform(-1, 1, (7, 2))
    first = exact_values(problem, points, tmp_path)
    cached = list(tmp_path.glob("helmholtz_exact_*.npy"))
    assert len(cached) == 1
    np.testing.assert_array_equal(np.load(cached[0]), first)
    np.testing.assert_array_equal(exact_values(problem, points, tmp_path), first)

    exact_values(helmholtz(), points, tmp_path / "unused")
    assert not (tmp_path / "unused").exists()


def test_evaluate_on_grid_with_exact_models():
    problem = heat()
    decomp = make_decomposition("split_t05")
    grid = make_rng(1).uniform((-1, 0), (1, 1), (200, 2))
    x = np.linspace(-0.9, 0.9, 15)
    interface = {(1, 2): np.column_stack([x, np.full_like(x, 0.5)])}
    report = evaluate_on_grid([ExactModel(problem), ExactModel(problem)], decomp, problem, grid, interface)
    assert report.l2_relative < 1e-14
    assert report.interface_l2["1-2"] < 1e-14
    frame = report.pointwise_frame()
    assert list(frame.columns) == ["x", "y_or_t", "u", "u_hat", "abs_err"]
    assert len(frame) == 200

    shifted = evaluate_on_grid([ConstantModel(0.0), ExactModel(problem)], decomp, problem, grid, interface)
    assert shifted.l2_relative > 0.1
    assert shifted.interface_l2["1-2"] > 0.1


def test_interface_error_skips_vanishing_exact_solution():
    problem = helmholtz()
    y = np.linspace(-0.9, 0.9, 15)
    interface = {(1, 2): np.column_stack([np.zeros_like(y), y])}
    grid = make_rng(1).uniform(-1, 1, (50, 2))
    report = evaluate_on_grid([ExactModel(problem)] * 2, make_decomposition("split_x0"), problem, grid, interface)
    assert report.interface_l2 == {}


def test_extract_slice():
    problem = helmholtz()
    decomp = make_decomposition("split_x0")
    result = extract_slice([ExactModel(problem), ExactModel(problem)], decomp, problem, 0.125, "y", resolution=20)
    assert result.name == "y=0.125"
    assert len(result.coordinate) == 20
    np.testing.assert_array_equal(result.points[:, 1], 0.125)
    assert set(result.subdomain) == {1, 2}
    np.testing.assert_allclose(result.predicted, result.exact)
    assert np.max(np.abs(result.residual)) < 1e-10
    assert list(result.frame().columns) == ["coordinate", "subdomain", "u", "u_hat", "residual"]

    with pytest.raises(ValueError):
        extract_slice([ExactModel(problem)], decomp, problem, 0.0, "z")


def test_l2_monitor_reports_interfaces():
    problem = heat()
    decomp = make_decomposition("split_t05")
    grid = make_rng(2).uniform((-1, 0), (1, 1), (50, 2))
    x = np.linspace(-0.5, 0.5, 5)
    monitor = L2Monitor.for_problem(decomp, problem, grid, {(1, 2): np.column_stack([x, np.full_like(x, 0.5)])})

    spec = LayerSpec(sizes=[2, 4, 1])
    row = monitor([init_xavier(spec, 0), init_xavier(spec, 1)])
    assert set(row) == {"l2_error", "interface_l2_1-2"}
    expected = relative_l2(predict([NetworkModel(init_xavier(spec, 0)), NetworkModel(init_xavier(spec, 1))],
                                   decomp, grid), problem.exact_solution(grid))
    assert row["l2_error"] == pytest.approx(expected)

    assert set(monitor([init_xavier(spec, 0)])) == {"l2_error"}
