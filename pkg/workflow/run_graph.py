import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from langgraph.graph import END, START, StateGraph
from typing_extensions import TypedDict

import app_config
from geometry.decomposition import Decomposition, make_decomposition
from geometry.sampling import SampleSets, export_sample_sets, generate_pools, select_init_subset, select_training_points
from metrics.errors import ErrorReport, L2Monitor, evaluate_on_grid, extract_slice
from network.checkpoint import save_checkpoint
from network.mlp import NetworkModel, ParameterVector, init_xavier
from problems.benchmarks import ProblemDefinition, get_problem
from schemas.experiment_schema import ErrorRecord, ExperimentConfig, RunSummary, TrainingMode
from training.stages import StageResult, train_init_stage, train_main_stage
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)


# ================== STATE DEFINITION ==================
class RunState(TypedDict, total=False):
    run_id: str
    config: ExperimentConfig
    output_dir: str
    cache_dir: Optional[str]
    problem: ProblemDefinition
    decomposition: Decomposition
    pools: SampleSets
    training_sets: SampleSets
    init_sets: Optional[SampleSets]
    monitor: L2Monitor
    initial_parameters: List[ParameterVector]
    init_result: Optional[StageResult]
    main_result: StageResult
    report: ErrorReport
    summary: RunSummary
    error: Optional[str]
    error_type: Optional[str]
    error_details: Optional[Dict[str, Any]]
    current_step: str


def _fail(state: RunState, step: str, e: Exception) -> RunState:
    logger.exception(f"{step} failed: {e}")
    state["error"] = f"{step} failed: {getattr(e, 'message', str(e))}"
    state["error_type"] = getattr(e, "error_type", type(e).__name__)
    state["error_details"] = getattr(e, "details", None)
    return state


# ================== NODES ==================
def prepare_node(state: RunState) -> RunState:
    """Resolve problem and decomposition, snapshot the config"""
    try:
        config = state["config"]
        out = Path(state["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.snapshot").write_text(config.model_dump_json(indent=2))

        problem = get_problem(config.problem)
        decomp = make_decomposition(config.decomposition)
        if problem.has_time != decomp.has_time:
            raise ConfigError(f"{config.decomposition.value} does not fit the {problem.name} problem")

        state["problem"] = problem
        state["decomposition"] = decomp
        state["current_step"] = "prepare_done"
        logger.info(f"Prepared run {state['run_id']} ({problem.name}, {config.mode.value}) in {out}")
    except Exception as e:
        _fail(state, "Prepare", e)
    return state


def pools_node(state: RunState) -> RunState:
    try:
        config = state["config"]
        state["pools"] = generate_pools(
            state["problem"], state["decomposition"], config.grid_shape, config.interface_pool_count, config.seed
        )
        state["current_step"] = "pools_done"
    except Exception as e:
        _fail(state, "Pool generation", e)
    return state


def selection_node(state: RunState) -> RunState:
    """Main-stage subsets, init subset drawn from them, and the L2 monitor"""
    try:
        config = state["config"]
        pools = state["pools"]
        training = select_training_points(pools, config.points, config.seed)
        state["training_sets"] = training
        state["init_sets"] = (
            select_init_subset(training, config.schedule.init_counts, config.seed + 1)
            if config.schedule.init_iterations > 0 else None
        )
        export_sample_sets(training, Path(state["output_dir"]) / "training_points.csv")

        interface_points = pools.interface if config.mode is not TrainingMode.PINN else None
        state["monitor"] = L2Monitor.for_problem(
            state["decomposition"], state["problem"], pools.evaluation_grid, interface_points, state.get("cache_dir")
        )
        state["current_step"] = "selection_done"
        logger.info(f"Selected training points: {training.counts()}")
    except Exception as e:
        _fail(state, "Point selection", e)
    return state


def init_node(state: RunState) -> RunState:
    try:
        config = state["config"]
        out = Path(state["output_dir"])
        if config.subdomain_layers is not None:
            # heterogeneous networks cannot share theta0
            state["initial_parameters"] = [
                init_xavier(spec, config.seed + k) for k, spec in enumerate(config.layer_specs())
            ]
            state["init_result"] = None
        else:
            result = train_init_stage(
                state["problem"],
                state["init_sets"],
                config.schedule,
                config.layer_specs()[0],
                config.weights,
                config.seed,
                monitor=state["monitor"],
                checkpoint_path=out / "theta0.ckpt",
            )
            if not result.history.empty:
                result.history.to_csv(out / "init_history.csv", index=False)
            state["init_result"] = result
            state["initial_parameters"] = [result.theta0]
        state["current_step"] = "init_done"
    except Exception as e:
        _fail(state, "Initialization stage", e)
    return state


def main_node(state: RunState) -> RunState:
    try:
        config = state["config"]
        out = Path(state["output_dir"])
        initial = state["initial_parameters"]
        result = train_main_stage(
            state["problem"],
            state["decomposition"],
            state["training_sets"],
            initial[0] if len(initial) == 1 else initial,
            config.weights,
            config.mode,
            config.schedule,
            monitor=state["monitor"],
            iteration_offset=config.schedule.init_iterations,
        )
        for k, params in enumerate(result.parameters, start=1):
            save_checkpoint(params, out / f"final_{k}.ckpt")
        result.history.to_csv(out / "history.csv", index=False)
        state["main_result"] = result
        state["current_step"] = "main_done"
    except Exception as e:
        _fail(state, "Main stage", e)
    return state


def evaluate_node(state: RunState) -> RunState:
    try:
        config = state["config"]
        out = Path(state["output_dir"])
        decomp, problem = state["decomposition"], state["problem"]
        monitor = state["monitor"]
        models = [NetworkModel(p) for p in state["main_result"].parameters]

        report = evaluate_on_grid(
            models, decomp, problem, monitor.grid,
            interface_points=state["pools"].interface, exact=monitor.exact, cache_dir=state.get("cache_dir"),
        )
        report.pointwise_frame().to_csv(out / "pointwise.csv", index=False)

        if config.slices:
            (out / "slices").mkdir(exist_ok=True)
        for spec in config.slices:
            section = extract_slice(models, decomp, problem, spec.value, spec.axis, spec.resolution)
            report.slices[section.name] = section
            section.frame().to_csv(out / "slices" / f"{spec.axis}_{spec.value:g}.csv", index=False)

        state["report"] = report
        state["current_step"] = "evaluate_done"
    except Exception as e:
        _fail(state, "Evaluation", e)
    return state


def artifacts_node(state: RunState) -> RunState:
    try:
        config = state["config"]
        report = state["report"]
        summary = RunSummary(
            run_id=state["run_id"],
            name=config.name,
            problem=config.problem,
            mode=config.mode,
            seed=config.seed,
            final_l2=report.l2_relative,
            interface_l2=report.interface_l2,
            init_iterations=config.schedule.init_iterations,
            main_iterations=config.schedule.main_iterations,
            output_dir=state["output_dir"],
        )
        (Path(state["output_dir"]) / "summary.json").write_text(summary.model_dump_json(indent=2))
        state["summary"] = summary
        state["current_step"] = "completed"
        logger.info(f"Run {summary.run_id} finished: relative L2 error {summary.final_l2:.4e}")
    except Exception as e:
        _fail(state, "Artifacts", e)
    return state


# ================== GRAPH ==================
def _next_or_end(next_node: str):
    def route(state: RunState) -> str:
        return END if state.get("error") else next_node
    return route


STEPS = [
    ("prepare", prepare_node),
    ("pools", pools_node),
    ("selection", selection_node),
    ("init", init_node),
    ("main", main_node),
    ("evaluate", evaluate_node),
    ("artifacts", artifacts_node),
]

run_graph_builder = StateGraph(RunState)
for name, node in STEPS:
    run_graph_builder.add_node(name, node)

run_graph_builder.add_edge(START, STEPS[0][0])
for (name, _), (next_name, _) in zip(STEPS[:-1], STEPS[1:]):
    run_graph_builder.add_conditional_edges(name, _next_or_end(next_name), [next_name, END])
run_graph_builder.add_edge(STEPS[-1][0], END)

run_graph = run_graph_builder.compile()


# ================== ENTRY POINT ==================
def error_record(state: RunState) -> ErrorRecord:
    return ErrorRecord(
        message=state.get("error") or "unknown failure",
        error_type=state.get("error_type"),
        details={"step": state.get("current_step"), **(state.get("error_details") or {})},
    )


def run_experiment(config: ExperimentConfig, run_id: str, output_dir: Union[str, Path],
                   cache_dir: Optional[Union[str, Path]] = app_config.CACHE_DIR) -> RunState:
    """Execute the full pipeline; on failure error.json is written and state['error'] is set"""
    initial: RunState = {
        "run_id": run_id,
        "config": config,
        "output_dir": str(output_dir),
        "cache_dir": str(cache_dir) if cache_dir is not None else None,
        "error": None,
        "current_step": "start",
    }
    state = run_graph.invoke(initial)
    if state.get("error"):
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        record = error_record(state)
        (out / "error.json").write_text(json.dumps(record.model_dump(), indent=2, default=str))
    return state
