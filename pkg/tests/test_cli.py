import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from capmdp import Strategy, save_instance, save_strategy, solve_exact
from capmdp.cli import main

from conftest import make_instance


@pytest.fixture
def runner():
    return CliRunner()


def gen_args(output, seed=1, states=2, horizon=3, scenarios=2):
    return [
        "generate",
        "--scenarios", str(scenarios),
        "--T", str(horizon),
        "--c", "0.4",
        "--epsilon", "0.25",
        "--seed", str(seed),
        "--states", str(states),
        "-o", output,
    ]


class TestGenerate:
    def test_writes_valid_instance_and_manifest(self, runner, tmp_path):
        out = str(tmp_path / "inst.json")
        res = runner.invoke(main, gen_args(out))
        assert res.exit_code == 0, res.output
        payload = json.loads(open(out).read())
        assert payload["T"] == 3 and len(payload["scenarios"]) == 2
        manifest = json.loads(open(out + ".manifest.json").read())
        assert manifest["command"] == "generate"
        assert manifest["seed"] == 1
        assert "wall_clock_seconds" in manifest

    def test_payload_byte_identical_across_runs(self, runner, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        assert runner.invoke(main, gen_args(a, seed=3)).exit_code == 0
        assert runner.invoke(main, gen_args(b, seed=3)).exit_code == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_seed_changes_payload(self, runner, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        runner.invoke(main, gen_args(a, seed=3))
        runner.invoke(main, gen_args(b, seed=4))
        assert open(a, "rb").read() != open(b, "rb").read()

    def test_env_seed_used_when_flag_absent(self, runner, tmp_path):
        flagged, env_out = str(tmp_path / "f.json"), str(tmp_path / "e.json")
        runner.invoke(main, gen_args(flagged, seed=11))
        args = gen_args(env_out, seed=11)
        i = args.index("--seed")
        del args[i : i + 2]
        res = runner.invoke(main, args, env={"CAPMDP_SEED": "11"})
        assert res.exit_code == 0
        assert open(flagged, "rb").read() == open(env_out, "rb").read()

    def test_invalid_epsilon_exits_2(self, runner, tmp_path):
        args = gen_args(str(tmp_path / "x.json"))
        args[args.index("--epsilon") + 1] = "1.5"
        res = runner.invoke(main, args)
        assert res.exit_code == 2

    def test_chronic_default_mode(self, runner, tmp_path):
        out = str(tmp_path / "cc.json")
        args = gen_args(out, seed=2)
        i = args.index("--states")
        del args[i : i + 2]
        args += ["--mc-iterations", "50"]
        res = runner.invoke(main, args)
        assert res.exit_code == 0, res.output
        assert len(json.loads(open(out).read())["states"]) == 6


class TestSolve:
    def make_files(self, tmp_path, **kw):
        inst = make_instance(**{"seed": 70, "n_states": 2, "horizon": 3, "n_scenarios": 2, **kw})
        path = str(tmp_path / "inst.json")
        save_instance(inst, path)
        return inst, path

    def test_exact_solution_file(self, runner, tmp_path):
        inst, path = self.make_files(tmp_path)
        out = str(tmp_path / "sol.json")
        res = runner.invoke(main, ["solve", path, "--method", "exact", "-o", out])
        assert res.exit_code == 0, res.output
        payload = json.loads(open(out).read())
        assert payload["status"] == "Optimal"
        assert payload["f_star"] == solve_exact(inst).best_value

    def test_padp_matches_exact_at_t2(self, runner, tmp_path):
        inst, path = self.make_files(tmp_path, horizon=2)
        oe, op = str(tmp_path / "e.json"), str(tmp_path / "p.json")
        runner.invoke(main, ["solve", path, "--method", "exact", "-o", oe])
        runner.invoke(main, ["solve", path, "--method", "padp", "-o", op])
        fe = json.loads(open(oe).read())["f_star"]
        fp = json.loads(open(op).read())["f_padp"]
        assert fp == fe

    def test_stationary_below_exact(self, runner, tmp_path):
        inst, path = self.make_files(tmp_path, horizon=4)
        oe, os_ = str(tmp_path / "e.json"), str(tmp_path / "s.json")
        runner.invoke(main, ["solve", path, "-o", oe])
        runner.invoke(main, ["solve", path, "--method", "stationary", "-o", os_])
        assert json.loads(open(os_).read())["f_star"] <= json.loads(open(oe).read())["f_star"]

    def test_node_limit_exits_4(self, runner, tmp_path):
        _, path = self.make_files(tmp_path, horizon=4)
        res = runner.invoke(main, ["solve", path, "--max-nodes", "2",
                                   "-o", str(tmp_path / "sol.json")])
        assert res.exit_code == 4

    def test_malformed_instance_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"T": 3}')
        res = runner.invoke(main, ["solve", str(bad), "-o", str(tmp_path / "s.json")])
        assert res.exit_code == 2
        assert "error" in res.output


class TestEvaluate:
    def test_reports_value_and_diagnostics(self, runner, tmp_path):
        inst = make_instance(80, 2, 3, 2)
        ipath, spath = str(tmp_path / "i.json"), str(tmp_path / "s.json")
        save_instance(inst, ipath)
        save_strategy(Strategy(actions=np.zeros((2, 2), dtype=np.int8)), spath)
        out = str(tmp_path / "eval.json")
        res = runner.invoke(main, ["evaluate", ipath, spath, "-o", out])
        assert res.exit_code == 0, res.output
        assert "U=" in res.output and "feasible=True" in res.output
        payload = json.loads(open(out).read())
        assert payload["proposition1_max_deviation"] <= 1e-9
        assert payload["proposition2_min_slack"] >= -1e-6

    def test_dimension_mismatch_exits_2(self, runner, tmp_path):
        inst = make_instance(81, 2, 3, 2)
        ipath, spath = str(tmp_path / "i.json"), str(tmp_path / "s.json")
        save_instance(inst, ipath)
        save_strategy(Strategy(actions=np.zeros((5, 2), dtype=np.int8)), spath)
        res = runner.invoke(main, ["evaluate", ipath, spath, "-o", str(tmp_path / "e.json")])
        assert res.exit_code == 2


class TestAnalyze:
    def test_single_scenario_all_suite(self, runner, tmp_path):
        inst = make_instance(90, 2, 3, 1)
        ipath = str(tmp_path / "i.json")
        save_instance(inst, ipath)
        outdir = str(tmp_path / "reports")
        res = runner.invoke(main, ["analyze", ipath, "--suite", "all",
                                   "--grid", "0.3:0.5:0.1", "-o", outdir])
        assert res.exit_code == 0, res.output
        for name in ("evss", "evpi", "flexibility", "sweep"):
            assert os.path.exists(os.path.join(outdir, f"{name}.json"))
            assert os.path.exists(os.path.join(outdir, f"{name}.csv"))
        evss = json.loads(open(os.path.join(outdir, "evss.json")).read())
        assert evss["evss_percent"] == pytest.approx(0.0, abs=1e-9)
        evpi = json.loads(open(os.path.join(outdir, "evpi.json")).read())
        assert evpi["evpi_absolute"] == pytest.approx(0.0, abs=1e-9)

    def test_plot_renders_figures(self, runner, tmp_path):
        inst = make_instance(91, 2, 3, 2)
        ipath = str(tmp_path / "i.json")
        save_instance(inst, ipath)
        outdir = str(tmp_path / "reports")
        res = runner.invoke(main, ["analyze", ipath, "--suite", "sweep",
                                   "--grid", "0.2:0.4:0.1", "--plot", "-o", outdir])
        assert res.exit_code == 0, res.output
        png = os.path.join(outdir, "sweep.png")
        assert os.path.getsize(png) > 0

    def test_bad_grid_exits_2(self, runner, tmp_path):
        inst = make_instance(92, 2, 3, 1)
        ipath = str(tmp_path / "i.json")
        save_instance(inst, ipath)
        res = runner.invoke(main, ["analyze", ipath, "--grid", "nope",
                                   "-o", str(tmp_path / "r")])
        assert res.exit_code == 2

    def test_csv_has_header_and_summary(self, runner, tmp_path):
        inst = make_instance(93, 2, 3, 2)
        ipath = str(tmp_path / "i.json")
        save_instance(inst, ipath)
        outdir = str(tmp_path / "reports")
        res = runner.invoke(main, ["analyze", ipath, "--suite", "evss", "-o", outdir])
        assert res.exit_code == 0, res.output
        lines = open(os.path.join(outdir, "evss.csv")).read().splitlines()
        assert lines[0].startswith("record,scenario")
        assert any(line.startswith("summary") for line in lines)
