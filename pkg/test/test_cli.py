import json

from cli import EXIT_FAILED, EXIT_INVALID_CONFIG, EXIT_OK, _parse_axis_value, build_parser, main


def test_run_command(tiny_config_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", str(tiny_config_file), "--out", str(out), "--iterations-override", "2"]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["main_iterations"] == 2
    assert "relative L2 error" in capsys.readouterr().out

    assert main(["export-figures", str(out)]) == EXIT_OK
    assert (out / "figures" / "loss_history.csv").is_file()


def test_invalid_config_exit_code(tiny_config_dict, tmp_path):
    tiny_config_dict["variant"] = 2
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(tiny_config_dict))
    assert main(["run", "--config", str(path)]) == EXIT_INVALID_CONFIG
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_INVALID_CONFIG


def test_failed_run_exit_code(tiny_config_dict, tmp_path):
    tiny_config_dict["points"]["subdomains"][1]["boundary"] = 10_000
    path = tmp_path / "exhausting.json"
    path.write_text(json.dumps(tiny_config_dict))
    out = tmp_path / "run"
    assert main(["run", "--config", str(path), "--out", str(out)]) == EXIT_FAILED
    assert json.loads((out / "error.json").read_text())["error_type"] == "pool_exhausted"


def test_export_figures_on_missing_run(tmp_path):
    assert main(["export-figures", str(tmp_path / "nothing")]) == EXIT_FAILED


def test_empty_sweep(tiny_config_file, tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(tiny_config_file), "--axis", "lambda6", "--values", "--out", str(out)]) == EXIT_OK
    assert (out / "sweep_summary.csv").is_file()


def test_layer_values_parse_as_depth_and_width():
    args = build_parser().parse_args(["sweep", "--config", "c.json", "--axis", "layers", "--values", "3x40", "4X20"])
    assert [_parse_axis_value(args.axis, v) for v in args.values] == [(3, 40), (4, 20)]
