import json
import os
import subprocess
import sys

import numpy as np
import pytest

from congeo import fileio
from congeo.cli import EXIT_INPUT, EXIT_NONCONVERGED, EXIT_OK, main

DEMO = os.path.join(os.path.dirname(__file__), "..", "demo")


def demo(name):
    return os.path.join(DEMO, name)


def run_cli(*argv):
    """In-process invocation; argparse usage errors surface as SystemExit."""
    try:
        return main(list(argv))
    except SystemExit as exc:
        return int(exc.code)


class TestExitCodes:
    def test_ncp_converged(self, tmp_path):
        assert run_cli("solve-ncp", demo("ncp_affine.json"), "--out", str(tmp_path)) == EXIT_OK
        sol = fileio.load_json(str(tmp_path / "ncp_solution.json"))
        assert sol["x_star"][0] == pytest.approx(2.0, abs=1e-8)
        assert sol["status"] == "converged"

    def test_ncp_infeasible_exits_2_with_best_iterate(self, tmp_path):
        problem = tmp_path / "infeasible.json"
        fileio.dump_json({"n": 1, "f": {"type": "affine", "M": [[0.0]], "q": [-1.0]}}, str(problem))
        assert run_cli("solve-ncp", str(problem), "--out", str(tmp_path)) == EXIT_NONCONVERGED
        sol = fileio.load_json(str(tmp_path / "ncp_solution.json"))
        assert sol["status"] in ("max_iter", "line_search_failure")
        assert np.isfinite(sol["x_star"][0])

    def test_ncp_missing_field_exits_1(self, tmp_path):
        problem = tmp_path / "broken.json"
        problem.write_text('{"n": 1, "f": {"type": "affine", "M": [[1.0]]}}')
        assert run_cli("solve-ncp", str(problem), "--out", str(tmp_path)) == EXIT_INPUT

    def test_missing_file_exits_1(self, tmp_path):
        assert run_cli("solve-ncp", str(tmp_path / "nope.json"), "--out", str(tmp_path)) == EXIT_INPUT

    def test_unknown_command_exits_1(self):
        assert run_cli("optimize-everything") == EXIT_INPUT

    def test_no_command_exits_1(self):
        assert run_cli() == EXIT_INPUT

    def test_route_saturated_exits_2(self, tmp_path):
        scenario = tmp_path / "saturated.json"
        fileio.dump_json(
            {"origin": [-2.0, 0.0], "destination": [2.0, 0.0], "field": "vortex(0, 0, 0.9995)"},
            str(scenario),
        )
        assert run_cli("route", str(scenario), "--out", str(tmp_path)) == EXIT_NONCONVERGED

    def test_validate_good_network_exits_0(self, tmp_path):
        assert run_cli("validate", demo("network_two_routes.json"), "--out", str(tmp_path)) == EXIT_OK
        report = fileio.load_json(str(tmp_path / "validate_report.json"))
        assert report["ok"] is True
        assert report["kind"] == "network"

    def test_validate_looping_route_exits_1_naming_route(self, tmp_path):
        doc = fileio.load_json(demo("network_two_routes.json"))
        doc["nodes"].append("m")
        doc["links"] += [
            {"id": "C", "from": "o", "to": "m", "t0": 1.0, "capacity": 1.0},
            {"id": "D", "from": "m", "to": "o", "t0": 1.0, "capacity": 1.0},
            {"id": "E", "from": "o", "to": "d", "t0": 1.0, "capacity": 1.0},
        ]
        doc["routes"].append({"id": "loopy", "od": "od1", "links": ["C", "D", "E"]})
        bad = tmp_path / "loopy.json"
        fileio.dump_json(doc, str(bad))
        assert run_cli("validate", str(bad), "--out", str(tmp_path)) == EXIT_INPUT
        report = fileio.load_json(str(tmp_path / "validate_report.json"))
        assert report["ok"] is False
        assert any("loopy" in f for f in report["failures"])

    def test_validate_saturated_field_exits_1(self, tmp_path):
        xs = ys = np.linspace(-1, 1, 3)
        vectors = np.zeros((3, 3, 2))
        vectors[1, 1, 0] = 0.9995
        grid = tmp_path / "field.csv"
        fileio.save_congestion_grid(str(grid), xs, ys, vectors)
        assert run_cli("validate", str(grid), "--out", str(tmp_path)) == EXIT_INPUT
        report = fileio.load_json(str(tmp_path / "validate_report.json"))
        assert any("saturated" in f for f in report["failures"])

    def test_validate_clean_field_exits_0(self, tmp_path):
        xs = ys = np.linspace(-1, 1, 3)
        vectors = np.full((3, 3, 2), 0.2)
        grid = tmp_path / "field.csv"
        fileio.save_congestion_grid(str(grid), xs, ys, vectors)
        assert run_cli("validate", str(grid), "--out", str(tmp_path)) == EXIT_OK

    def test_validate_scenario_kinds(self, tmp_path):
        assert run_cli("validate", demo("scenario_vortex.json"), "--out", str(tmp_path)) == EXIT_OK
        report = fileio.load_json(str(tmp_path / "validate_report.json"))
        assert report["kind"] == "scenario"
        bad = tmp_path / "sat.json"
        fileio.dump_json(
            {"origin": [0.0, 0.0], "destination": [1.0, 0.0], "field": "uniform(0.9999, 0)"},
            str(bad),
        )
        assert run_cli("validate", str(bad), "--out", str(tmp_path)) == EXIT_INPUT

    def test_validate_ncp_problem_kind(self, tmp_path):
        assert run_cli("validate", demo("ncp_affine.json"), "--out", str(tmp_path)) == EXIT_OK
        report = fileio.load_json(str(tmp_path / "validate_report.json"))
        assert report["kind"] == "ncp_problem"


class TestSolveUeCommand:
    def test_two_route_flows_and_times(self, tmp_path):
        assert run_cli("solve-ue", demo("network_two_routes.json"), "--out", str(tmp_path)) == EXIT_OK
        flows = fileio.read_flows_csv(str(tmp_path / "ue_flows.csv"))
        times = fileio.read_times_csv(str(tmp_path / "ue_times.csv"))
        assert flows["r1"] == pytest.approx(2.0, abs=1e-6)
        assert flows["r2"] == pytest.approx(1.0, abs=1e-6)
        assert times["od1"] == pytest.approx(3.0, abs=1e-6)
        resid = fileio.load_json(str(tmp_path / "ue_residuals.json"))
        assert resid["gap_value"] <= 1e-10

    def test_per_route_flag_documented_divergence(self, tmp_path):
        assert (
            run_cli(
                "solve-ue", demo("network_two_routes.json"), "--demand-block", "per_route",
                "--out", str(tmp_path),
            )
            == EXIT_OK
        )
        flows = fileio.read_flows_csv(str(tmp_path / "ue_flows.csv"))
        times = fileio.read_times_csv(str(tmp_path / "ue_times.csv"))
        assert flows["r1"] == pytest.approx(3.0, abs=1e-6)
        assert flows["r2"] == pytest.approx(3.0, abs=1e-6)
        assert times["r1"] == pytest.approx(4.0, abs=1e-6)
        assert times["r2"] == pytest.approx(5.0, abs=1e-6)

    def test_elastic_demo(self, tmp_path):
        assert run_cli("solve-ue", demo("network_elastic.json"), "--out", str(tmp_path)) == EXIT_OK
        flows = fileio.read_flows_csv(str(tmp_path / "ue_flows.csv"))
        times = fileio.read_times_csv(str(tmp_path / "ue_times.csv"))
        assert flows["r1"] == pytest.approx(1.5, abs=1e-6)
        assert times["od1"] == pytest.approx(2.5, abs=1e-6)


class TestRouteCommand:
    def test_demo_scenarios_roundtrip(self, tmp_path):
        code = run_cli(
            "route", demo("scenario_none.json"), demo("scenario_uniform.json"),
            "--svg", "--out", str(tmp_path),
        )
        assert code == EXIT_OK
        curve = fileio.read_curve_csv(str(tmp_path / "scenario_none_route.csv"))
        assert np.allclose(curve.points[-1], [1.0, 0.0], atol=1e-6)
        none_summary = fileio.load_json(str(tmp_path / "scenario_none_summary.json"))
        uniform_summary = fileio.load_json(str(tmp_path / "scenario_uniform_summary.json"))
        assert none_summary["travel_time"] == pytest.approx(1.0, abs=1e-6)
        assert uniform_summary["travel_time"] == pytest.approx(2.0, abs=1e-8)
        assert (tmp_path / "scenario_none_route.svg").exists()

    def test_jobs_flag_same_results(self, tmp_path):
        out1, out2 = tmp_path / "seq", tmp_path / "par"
        for out, jobs in ((out1, "1"), (out2, "2")):
            code = run_cli(
                "route", demo("scenario_none.json"), demo("scenario_grid.json"),
                "--jobs", jobs, "--out", str(out),
            )
            assert code == EXIT_OK
        for name in ("scenario_none_route.csv", "scenario_grid_route.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_deterministic_artifacts(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert (
                run_cli("route", demo("scenario_vortex.json"), "--seed", "7", "--out", str(out))
                == EXIT_OK
            )
        assert (out1 / "scenario_vortex_route.csv").read_bytes() == (
            out2 / "scenario_vortex_route.csv"
        ).read_bytes()
        s1 = fileio.load_json(str(out1 / "scenario_vortex_summary.json"))
        s2 = fileio.load_json(str(out2 / "scenario_vortex_summary.json"))
        assert s1 == s2


class TestDynamicCommand:
    def test_half_phi_value(self, tmp_path):
        assert (
            run_cli("dynamic", demo("trajectory_linear.csv"), "--variant", "half_phi",
                    "--out", str(tmp_path))
            == EXIT_OK
        )
        summary = fileio.load_json(str(tmp_path / "dynamic_summary.json"))
        assert summary["results"]["gap"] == pytest.approx(-0.146447, abs=1e-5)

    def test_half_phi_squared_value(self, tmp_path):
        assert (
            run_cli("dynamic", demo("trajectory_linear.csv"), "--variant", "half_phi_squared",
                    "--out", str(tmp_path))
            == EXIT_OK
        )
        summary = fileio.load_json(str(tmp_path / "dynamic_summary.json"))
        assert summary["results"]["gap"] == pytest.approx(0.057191, abs=1e-5)

    def test_minimize_identity_cost(self, tmp_path):
        code = run_cli(
            "dynamic", demo("trajectory_constant.csv"), "--cost-model", "identity",
            "--minimize", "--out", str(tmp_path),
        )
        assert code == EXIT_OK
        grid, h, c = fileio.read_trajectory_csv(str(tmp_path / "dynamic_minimized.csv"))
        assert np.max(np.abs(h)) <= 1e-3

    def test_missing_cost_model_exits_1(self, tmp_path):
        assert run_cli("dynamic", demo("trajectory_constant.csv"), "--out", str(tmp_path)) == EXIT_INPUT


class TestConfigMode:
    def test_inline_network_config(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert run_cli("--config", demo("run_ue_config.json")) == EXIT_OK
        flows = fileio.read_flows_csv(str(tmp_path / "demo_out" / "ue_flows.csv"))
        assert flows["r1"] == pytest.approx(1.5, abs=1e-6)

    def test_config_with_explicit_command_rejected(self, tmp_path):
        assert run_cli("--config", demo("run_ue_config.json"), "solve-ue", "x.json") == EXIT_INPUT

    def test_config_unknown_command(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"command": "fly"}')
        assert run_cli("--config", str(cfg)) == EXIT_INPUT

    def test_route_config_inline_scenario(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        fileio.dump_json(
            {
                "command": "route",
                "out": str(tmp_path / "out"),
                "origin": [0.0, 0.0],
                "destination": [1.0, 0.0],
                "field": "none",
            },
            str(cfg),
        )
        assert run_cli("--config", str(cfg)) == EXIT_OK
        assert (tmp_path / "out" / "scenario_route.csv").exists()

    def test_dynamic_config_with_csv_reference(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        fileio.dump_json(
            {
                "command": "dynamic",
                "trajectory_csv": os.path.join(DEMO, "trajectory_constant.csv"),
                "cost_model": "identity",
                "minimize": True,
                "out": str(tmp_path / "out"),
            },
            str(cfg),
        )
        assert run_cli("--config", str(cfg)) == EXIT_OK
        grid, h, _ = fileio.read_trajectory_csv(str(tmp_path / "out" / "dynamic_minimized.csv"))
        assert np.max(np.abs(h)) <= 1e-3

    def test_config_unknown_option_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        fileio.dump_json(
            {"command": "dynamic", "trajectory_csv": "x.csv", "verbosity": 3}, str(cfg)
        )
        assert run_cli("--config", str(cfg)) == EXIT_INPUT


class TestSubprocessEntryPoints:
    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "congeo", "solve-ncp", demo("ncp_affine.json"), "--out", str(tmp_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == EXIT_OK
        summary = json.loads(proc.stdout)
        assert summary["command"] == "solve-ncp"
        assert summary["status"] == "converged"

    def test_usage_error_returncode(self):
        proc = subprocess.run(
            [sys.executable, "-m", "congeo", "solve-ncp"], capture_output=True, text=True
        )
        assert proc.returncode == EXIT_INPUT
