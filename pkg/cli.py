import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import app_config
from schemas.experiment_schema import load_experiment_config
from utils.exceptions import ConfigError, IDPINNError
from utils.generate_uuid import generate_run_id

logger = logging.getLogger("idpinn")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID_CONFIG = 2


def _parse_axis_value(axis: str, raw: str):
    if axis == "layers":
        depth, _, width = raw.lower().partition("x")
        return int(depth), int(width)
    if axis == "init_iterations":
        return int(raw)
    return float(raw)


def cmd_run(args: argparse.Namespace) -> int:
    from workflow.run_graph import run_experiment

    config = load_experiment_config(args.config).with_overrides(seed=args.seed, iterations=args.iterations_override)
    run_id = generate_run_id(config.name)
    out = Path(args.out or config.output_dir or Path(app_config.OUTPUT_ROOT) / run_id)

    state = run_experiment(config, run_id, out)
    if state.get("error"):
        logger.error(f"Run {run_id} failed: {state['error']} (see {out / 'error.json'})")
        return EXIT_FAILED
    print(f"{run_id}: relative L2 error {state['summary'].final_l2:.4e} ({out})")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    from workflow.validate import print_report, run_validation

    report = run_validation(config_dir=args.config_dir)
    print_report(report)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_sweep(args: argparse.Namespace) -> int:
    from workflow.sweep import sweep

    config = load_experiment_config(args.config)
    if args.iterations_override is not None:
        config = config.with_overrides(iterations=args.iterations_override)
    values = None if args.values is None else [_parse_axis_value(args.axis, v) for v in args.values]
    summary = sweep(config, args.axis, values, seeds=args.seeds, output_dir=args.out)
    if not summary.empty:
        print(summary.to_string(index=False))
    return EXIT_OK


def cmd_export_figures(args: argparse.Namespace) -> int:
    from workflow.export_figures import export_figures

    written = export_figures(args.run_dir)
    for kind, paths in written.items():
        for path in paths:
            print(f"{kind}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idpinn", description="Interface-smoothness PINN domain decomposition")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Train one experiment config")
    run.add_argument("--config", required=True, help="Path to an experiment JSON config")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help="Run directory (default: $IDPINN_OUTPUT_ROOT/<run_id>)")
    run.add_argument("--iterations-override", type=int, default=None, help="Replace the main-stage iteration count")
    run.set_defaults(handler=cmd_run)

    validate = commands.add_parser("validate", help="Run the fast invariant suite")
    validate.add_argument("--config-dir", default=app_config.CONFIG_DIR)
    validate.set_defaults(handler=cmd_validate)

    sweep = commands.add_parser("sweep", help="Sweep one axis of a config")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--axis", required=True, choices=["lambda6", "init_iterations", "layers"])
    sweep.add_argument("--values", nargs="*", default=None, help="Axis values; layers are given as DEPTHxWIDTH")
    sweep.add_argument("--seeds", nargs="*", type=int, default=None)
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--iterations-override", type=int, default=None)
    sweep.set_defaults(handler=cmd_sweep)

    export = commands.add_parser("export-figures", help="Write plot-ready tables for a finished run")
    export.add_argument("run_dir")
    export.set_defaults(handler=cmd_export_figures)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=app_config.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"{e.message}: {e.details}" if e.details else e.message)
        return EXIT_INVALID_CONFIG
    except IDPINNError as e:
        logger.error(e.message)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
