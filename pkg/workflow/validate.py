"""
Fast invariant suite behind `cli.py validate`.
Each check returns a ValidationCheck; nothing here trains a network.
"""

import logging
from typing import Callable, List, Tuple

import numpy as np

import app_config
from autodiff.jet import lift_input, jet_tanh
from autodiff.tape import Tape
from geometry.decomposition import make_decomposition
from geometry.sampling import generate_pools, select_training_points
from losses.terms import average_from, continuity_from, interface_jets, residual_loss
from network.mlp import LayerSpec, NetworkModel, ParameterVector, forward, init_xavier
from problems.benchmarks import exact_jet, get_problem, heat, helmholtz
from problems.burgers_reference import cole_hopf_reference
from schemas.experiment_schema import DecompositionKind, PointCounts, RegionCounts, ValidationCheck, ValidationReport
from training.adam import AdamState, adam_step
from utils.rng import make_rng
from workflow.config_lint import lint_configs

logger = logging.getLogger(__name__)

CheckResult = Tuple[bool, str]


# ================== CHECKS ==================

def check_tanh_jet() -> CheckResult:
    u = jet_tanh(lift_input(np.array([0.0]), 3)[0])
    third = float(u.derivative((3,)))
    return abs(third + 2.0) < 1e-12, f"third derivative of tanh at 0: {third:.15f}"


def check_jet_second_derivative(seed: int = 0) -> CheckResult:
    spec = LayerSpec(sizes=[2, 8, 1])
    params = init_xavier(spec, seed)
    rng = make_rng(seed)
    point = rng.uniform(-1.0, 1.0, 2)
    u = NetworkModel(params).evaluate_jet(lift_input(point, 2, Tape()))
    from_jet = float(np.asarray(u.derivative((2, 0)).value))
    h = 1e-4
    shift = np.array([h, 0.0])
    fd = float(forward(params, spec, point + shift) - 2.0 * forward(params, spec, point) + forward(params, spec, point - shift)) / h ** 2
    error = abs(from_jet - fd) / max(abs(fd), 1e-8)
    return error < 1e-5, f"relative gap to finite differences: {error:.2e}"


def check_parameter_gradient(seed: int = 0, samples: int = 10) -> CheckResult:
    problem = helmholtz()
    spec = LayerSpec(sizes=[2, 6, 6, 1])
    params = init_xavier(spec, seed)
    rng = make_rng(seed)
    points = {1: rng.uniform(-1.0, 1.0, (5, 2))}

    def loss_at(values: np.ndarray):
        tape = Tape()
        model = NetworkModel(ParameterVector(spec, values))
        model.bind(tape)
        return tape, residual_loss([model], points, problem, tape)

    tape, loss = loss_at(params.values)
    grad = tape.backward(loss)
    worst = 0.0
    h = 1e-5
    for k in rng.choice(len(params), size=samples, replace=False):
        plus, minus = params.values.copy(), params.values.copy()
        plus[k] += h
        minus[k] -= h
        fd = (float(loss_at(plus)[1].value) - float(loss_at(minus)[1].value)) / (2.0 * h)
        worst = max(worst, abs(grad[k] - fd) / max(abs(fd), 1e-6))
    return worst < 1e-5, f"worst relative gap over {samples} parameters: {worst:.2e}"


def _exact_residual_check(name: str, factory: Callable) -> Callable[[], CheckResult]:
    def check() -> CheckResult:
        problem = factory()
        decomp = make_decomposition(
            {"helmholtz": DecompositionKind.SPLIT_X0, "poisson": DecompositionKind.POISSON_CURVES,
             "heat": DecompositionKind.SPLIT_T05}[name]
        )
        (x0, x1), (y0, y1) = decomp.bounding_box
        rng = make_rng(7)
        points = np.column_stack([rng.uniform(x0, x1, 1000), rng.uniform(y0, y1, 1000)])
        coords = lift_input(points, problem.residual_order)
        residual = problem.residual(exact_jet(problem, points, problem.residual_order), coords)
        worst = float(np.max(np.abs(residual.value)))
        return worst < 1e-10, f"max |F(exact)| = {worst:.2e}"
    return check


def check_heat_data_consistency(sinh_coefficient: float = 0.1) -> CheckResult:
    problem = heat(sinh_coefficient=sinh_coefficient)
    x = np.linspace(-1.0, 1.0, 201)
    initial_gap = np.max(np.abs(problem.initial_value(x) - problem.exact_solution(np.column_stack([x, np.zeros_like(x)]))))
    t = np.linspace(0.0, 1.0, 101)
    edges = np.concatenate([np.column_stack([np.full_like(t, -1.0), t]), np.column_stack([np.full_like(t, 1.0), t])])
    boundary_gap = np.max(np.abs(problem.boundary_value(edges) - problem.exact_solution(edges)))
    worst = float(max(initial_gap, boundary_gap))
    return worst < 1e-12, f"max gap between initial/boundary data and the exact solution: {worst:.2e}"


def check_average_identity(seed: int = 0) -> CheckResult:
    spec = LayerSpec(sizes=[2, 8, 1])
    models = [NetworkModel(init_xavier(spec, seed)), NetworkModel(init_xavier(spec, seed + 1))]
    rng = make_rng(seed)
    points = {(1, 2): np.column_stack([np.zeros(50), rng.uniform(-1.0, 1.0, 50)])}
    jets = interface_jets(models, points, Tape(), 0)
    inter, avg = float(continuity_from(jets).value), float(average_from(jets).value)
    error = abs(avg - inter / 4.0) / max(inter / 4.0, 1e-300)
    return error < 1e-13, f"relative gap between L_avg and L_inter / 4: {error:.2e}"


def check_selection_determinism() -> CheckResult:
    problem = helmholtz()
    decomp = make_decomposition(DecompositionKind.SPLIT_X0)
    pools = generate_pools(problem, decomp, (60, 60), 500, seed=3)
    counts = PointCounts(subdomains=[RegionCounts(residual=100, boundary=20)] * 2, interface=[20])
    first = select_training_points(pools, counts, seed=11)
    second = select_training_points(pools, counts, seed=11)
    same = all(np.array_equal(first.residual[k], second.residual[k]) for k in first.residual)
    return same, "identical subsets for identical seeds" if same else "subsets differ for identical seeds"


def check_adam_first_step(bias_correction: bool = True) -> CheckResult:
    state = AdamState(1, learning_rate=1e-3, bias_correction=bias_correction)
    step = float(adam_step(state, np.zeros(1), np.ones(1))[0])
    expected = -1e-3 / (1.0 + 1e-8)
    return abs(step - expected) < 1e-15, f"first step {step:.12e}, expected {expected:.12e}"


def check_burgers_symmetry(seed: int = 0) -> CheckResult:
    rng = make_rng(seed)
    x = rng.uniform(-1.0, 1.0, 20)
    t = rng.uniform(0.05, 1.0, 20)
    gap = float(np.max(np.abs(cole_hopf_reference(x, t) + cole_hopf_reference(-x, t))))
    return gap < 1e-8, f"max |u(x,t) + u(-x,t)| = {gap:.2e}"


# ================== SUITE ==================

def run_validation(heat_sinh_coefficient: float = 0.1, adam_bias_correction: bool = True,
                   include_config_lint: bool = True, config_dir: str = app_config.CONFIG_DIR) -> ValidationReport:
    checks: List[Tuple[str, Callable[[], CheckResult]]] = [
        ("tanh jet third derivative", check_tanh_jet),
        ("jet second derivative vs finite differences", check_jet_second_derivative),
        ("parameter gradient vs finite differences", check_parameter_gradient),
        ("exact residual helmholtz", _exact_residual_check("helmholtz", lambda: get_problem("helmholtz"))),
        ("exact residual poisson", _exact_residual_check("poisson", lambda: get_problem("poisson"))),
        ("exact residual heat", _exact_residual_check("heat", lambda: heat(sinh_coefficient=heat_sinh_coefficient))),
        ("heat initial/boundary consistency", lambda: check_heat_data_consistency(heat_sinh_coefficient)),
        ("average term equals continuity / 4", check_average_identity),
        ("selection determinism", check_selection_determinism),
        ("adam first step", lambda: check_adam_first_step(adam_bias_correction)),
        ("burgers reference odd symmetry", check_burgers_symmetry),
    ]

    report = ValidationReport()
    for name, check in checks:
        try:
            passed, detail = check()
        except Exception as e:
            logger.exception(f"Check '{name}' raised")
            passed, detail = False, f"{type(e).__name__}: {e}"
        report.checks.append(ValidationCheck(name=name, passed=bool(passed), detail=detail))

    if include_config_lint:
        report.checks.extend(lint_configs(config_dir))
    return report


def print_report(report: ValidationReport) -> None:
    for check in report.checks:
        mark = "✅" if check.passed else "❌"
        print(f"{mark} {check.name}" + (f" ({check.detail})" if check.detail else ""))
    passed = sum(check.passed for check in report.checks)
    print(f"\n{passed}/{len(report.checks)} checks passed")
