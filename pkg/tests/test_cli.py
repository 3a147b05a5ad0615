"""Command-line contract: exit codes, artifacts, determinism, validation."""

import json
import subprocess
import sys

import pytest

from agres.cli import RunConfig, main, validate, _parse_pairs, _parse_range


def run_cli(args, tmp_path, sub="out"):
    out = tmp_path / sub
    code = main(list(args) + ["--out", str(out)])
    return code, out


class TestValidate:
    def test_s_out_of_range_message(self):
        cfg = RunConfig(command="solve", lam="1/4", s=1.0)
        msgs = validate(cfg)
        assert any("s must lie in (0,1)" in m and "out of scope" in m for m in msgs)

    def test_relations_guard_arithmetic(self):
        ok = RunConfig(command="relations", lam="1/7", guard=12)
        assert validate(ok) == []
        bad = RunConfig(command="relations", lam="1/7", guard=9)
        assert any("guard" in m for m in validate(bad))

    def test_empty_schedule_range(self):
        cfg = RunConfig(command="converge", target="1/sqrt8", s=0.5, n_range="")
        assert any(m.startswith("n:") for m in validate(cfg))

    def test_valid_configs_produce_no_violations(self):
        assert validate(RunConfig(command="solve", lam="1/4", s=0.5)) == []
        assert validate(RunConfig(command="converge", target="1/sqrt8", s=0.5,
                                  n_range="4..6", pairs="(4,1):(4,2)")) == []

    def test_pair_parsing(self):
        pairs = _parse_pairs("(4,1):(4,2);(,1):(,2)")
        assert pairs == [(((4,), 1), ((4,), 2)), (((), 1), ((), 2))]
        assert _parse_range("4..7") == [4, 5, 6, 7]
        assert _parse_range("3,5,9") == [3, 5, 9]


class TestCommands:
    def test_solve_writes_solution(self, tmp_path):
        code, out = run_cli(["solve", "--lambda", "1/4", "--s", "0.5"], tmp_path)
        assert code == 0
        obj = json.loads((out / "solution.json").read_text())
        assert set(obj) >= {"lambda", "s", "r", "C", "theta", "residual"}
        assert obj["lambda"] == "1/4" and 0.6 <= obj["r"] < 1.0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["command"] == "solve"
        assert manifest["config"]["eigen_tol"] == 1e-12  # defaults echoed

    def test_solve_validation_exit_2(self, tmp_path, capsys):
        code, _ = run_cli(["solve", "--lambda", "3/4", "--s", "0.5"], tmp_path)
        assert code == 2
        err = capsys.readouterr().err
        obj = json.loads(err.strip().splitlines()[-1])
        assert obj["error"]["type"] == "ValidationError"

    def test_boundary_fast_and_oracle(self, tmp_path):
        code, out = run_cli(["boundary", "--lambda", "1/8"], tmp_path)
        assert code == 0
        obj = json.loads((out / "boundary.json").read_text())
        assert obj["size"] == 9
        labels = [p["label"]["kind"] for p in obj["points"]]
        assert labels.count("corner") == 3
        code2, out2 = run_cli(["boundary", "--lambda", "1/8", "--mode", "oracle",
                               "--depth", "4"], tmp_path, "out2")
        assert code2 == 0
        obj2 = json.loads((out2 / "boundary.json").read_text())
        assert obj2["points"] == obj["points"]

    def test_graph_edge_list(self, tmp_path):
        code, out = run_cli(["graph", "--lambda", "1/4", "--level", "1"], tmp_path)
        assert code == 0
        lines = (out / "edges.csv").read_text().strip().splitlines()
        assert lines[0] == "vertex_id_1,vertex_id_2"
        assert len(lines) == 1 + 21
        vlines = (out / "vertices.csv").read_text().strip().splitlines()
        assert len(vlines) == 1 + 9
        assert "sqrt3" in vlines[1]

    def test_resistance_table(self, tmp_path):
        code, out = run_cli(["resistance", "--lambda", "1/4", "--s", "0.5",
                             "--level", "2", "--pairs", "(,1):(,2);(4,1):(4,2)"],
                            tmp_path)
        assert code == 0
        lines = (out / "resistance.csv").read_text().strip().splitlines()
        assert len(lines) == 3
        first = float(lines[1].split(",")[-1])
        assert first == pytest.approx(2 / 3, abs=1e-8)

    def test_resolvent_outputs(self, tmp_path):
        code, out = run_cli(["resolvent", "--lambda", "1/4", "--s", "0.5",
                             "--level", "1", "--alpha", "2.0"], tmp_path)
        assert code == 0
        obj = json.loads((out / "resolvent.json").read_text())
        assert obj["row_mass_error"] <= 1e-10
        assert obj["measure"]["scheme"] == "hausdorff"
        lines = (out / "resolvent.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 9 * 9

    def test_relations_report(self, tmp_path):
        code, out = run_cli(["relations", "--lambda", "1/4"], tmp_path)
        assert code == 0
        obj = json.loads((out / "relations.json").read_text())
        assert obj["count"] == 2 and obj["all_trivial"]

    def test_converge_report(self, tmp_path):
        code, out = run_cli(["converge", "--target", "1/sqrt8", "--s", "0.5",
                             "--n", "4..6", "--pairs", "(4,1):(4,2)",
                             "--level", "2"], tmp_path)
        assert code == 0
        lines = (out / "report.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 3
        obj = json.loads((out / "report.json").read_text())
        assert obj["rows"][0]["lambda"] == "3/8"

    def test_hausdorff_check(self, tmp_path):
        code, out = run_cli(["hausdorff", "--lambda", "1/8", "--lambda2", "3/8",
                             "--depth", "8"], tmp_path)
        assert code == 0
        obj = json.loads((out / "hausdorff.json").read_text())
        assert obj["pass"] and obj["bound"] == pytest.approx(0.5)

    def test_determinism_byte_identical(self, tmp_path):
        _, out1 = run_cli(["solve", "--lambda", "5/16", "--s", "0.8"], tmp_path, "a")
        _, out2 = run_cli(["solve", "--lambda", "5/16", "--s", "0.8"], tmp_path, "b")
        assert (out1 / "solution.json").read_bytes() == (out2 / "solution.json").read_bytes()
        assert (out1 / "manifest.json").read_text().replace('"out": "' + str(out1) + '"',
                                                            "") == \
               (out2 / "manifest.json").read_text().replace('"out": "' + str(out2) + '"',
                                                            "")

    def test_config_file_with_flag_override(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("lambda = 1/4\ns = 0.5\nlevel = 2  # comment\n")
        out = tmp_path / "cfg_out"
        code = main(["solve", "--config", str(cfgfile), "--s", "0.8",
                     "--out", str(out)])
        assert code == 0
        obj = json.loads((out / "solution.json").read_text())
        assert obj["s"] == 0.8  # flag wins over the file
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["lam"] == "1/4"

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "agres.cli", "solve", "--lambda", "1/2",
             "--s", "0.5", "--out", str(tmp_path / "x")],
            capture_output=True, text=True)
        assert proc.returncode == 2
        assert json.loads(proc.stderr.strip().splitlines()[-1])["error"]

    def test_estimates_report(self, tmp_path):
        code, out = run_cli(["estimates", "--lambda", "1/4", "--s", "0.5"], tmp_path)
        assert code == 0
        obj = json.loads((out / "estimates.json").read_text())
        assert all(row["pass"] for row in obj["bottom_edge_resistance"])
        fit = obj["exponent_fit"]
        assert abs(fit["theta_fit"] - fit["theta"]) <= 0.15
        assert fit["spread"] <= 50
        assert obj["global_envelope"]["c1"] <= obj["global_envelope"]["c2"]

    def test_numerical_failure_exit_3(self, tmp_path, capsys):
        code, _ = run_cli(["solve", "--lambda", "1/4", "--s", "0.5",
                           "--max-iters", "1"], tmp_path)
        assert code == 3
        err = capsys.readouterr().err
        obj = json.loads(err.strip().splitlines()[-1])
        assert obj["error"]["type"] == "NoConvergence"
