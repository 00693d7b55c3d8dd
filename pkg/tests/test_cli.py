from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from sdgame import examples as ex
from sdgame.cli import build_parser, cmd_example, main
from sdgame.instance import InstanceError, digest, load_document, parse_document, spec_to_document
from sdgame.model import TimeGrid
from sdgame.paths import MatrixPath

FAST = ["--paths", "2000", "--deviation-paths", "500"]


def report(path):
    return json.loads((path / "report.json").read_text())


def check(rep, name):
    return next(c for c in rep["checks"] if c["name"] == name)


def write_instance(tmp_path, doc, name="inst.json"):
    f = tmp_path / name
    f.write_text(json.dumps(doc))
    return str(f)


class TestSolve:
    def test_closed_loop_indefinite_player(self, tmp_path, capsys):
        out = tmp_path / "s"
        assert main(["solve", "--kind", "closed-loop", "--instance", "builtin:indefinite-player", "--out", str(out)]) == 0
        rep = report(out)
        assert rep["status"] == "Feasible"
        assert check(rep, "certificates")["P1_t0"][0][0] == pytest.approx(0.5, abs=1e-6)
        assert "overall PASS" in capsys.readouterr().out
        assert (out / "summary.txt").read_text().startswith("solve: status Feasible")
        manifest = json.loads((out / "solution.json").read_text())
        assert set(manifest["files"]) >= {"P1", "P2", "Theta", "eta1", "eta2", "v"}

    def test_singular_coupling_is_infeasible(self, tmp_path):
        out = tmp_path / "s"
        assert main(["solve", "--kind", "closed-loop", "--instance", "builtin:singular-coupling", "--out", str(out)]) == 1
        rep = report(out)
        assert rep["status"].startswith("Infeasible")
        assert "SingularCoupling" in rep["status"]
        assert json.loads((out / "solution.json").read_text())["status"] == rep["status"]

    def test_open_rep_feedback(self, tmp_path):
        out = tmp_path / "s"
        assert main(["solve", "--kind", "open-rep", "--instance", "builtin:distinct-outcomes", "--out", str(out)]) == 0
        grid = ex.default_grid()
        Th = MatrixPath.from_csv(out / "Theta.csv", grid)
        assert Th.values[0, 0, 0] == pytest.approx(-0.612700, abs=1e-6)
        Pi1 = MatrixPath.from_csv(out / "Pi1.csv", grid)
        assert Pi1.values[0, 0, 0] == pytest.approx(0.612700, abs=1e-6)

    def test_step_override(self, tmp_path):
        out = tmp_path / "s"
        assert main(["solve", "--kind", "slq", "--instance", "builtin:scalar-regulator",
                     "--out", str(out), "--dt-steps", "50"]) == 0
        assert json.loads((out / "solution.json").read_text())["grid"]["n_steps"] == 50
        assert len((out / "P.csv").read_text().splitlines()) == 52

    def test_zero_sum_on_general_game_is_usage_error(self, tmp_path, capsys):
        rc = main(["solve", "--kind", "zero-sum", "--instance", "builtin:distinct-outcomes", "--out", str(tmp_path / "s")])
        assert rc == 2
        assert "zero-sum" in capsys.readouterr().err

    def test_unknown_builtin(self, tmp_path):
        assert main(["solve", "--kind", "slq", "--instance", "builtin:nope", "--out", str(tmp_path / "s")]) == 2

    def test_bad_kind_rejected_by_parser(self):
        with pytest.raises(SystemExit) as e:
            build_parser().parse_args(["solve", "--kind", "nash", "--instance", "x", "--out", "y"])
        assert e.value.code == 2


class TestVerify:
    def solve(self, tmp_path, kind, inst, steps="200"):
        out = tmp_path / "sol"
        assert main(["solve", "--kind", kind, "--instance", inst, "--out", str(out), "--dt-steps", steps]) == 0
        return out

    def test_distinct_outcomes_closed_loop_all_checks(self, tmp_path):
        sol = self.solve(tmp_path, "closed-loop", "builtin:distinct-outcomes")
        assert main(["verify", "--instance", "builtin:distinct-outcomes", "--solution", str(sol), *FAST]) == 0
        rep = report(sol)
        names = {c["name"] for c in rep["checks"]}
        assert {"deviation-self"} <= names
        assert any(n.startswith("stationarity") for n in names)
        assert any(n.startswith("convexity") for n in names)
        assert any(n.startswith("value") for n in names)

    def test_open_rep_stationarity(self, tmp_path):
        sol = self.solve(tmp_path, "open-rep", "builtin:distinct-outcomes")
        out = tmp_path / "rep"
        assert main(["verify", "--instance", "builtin:distinct-outcomes", "--solution", str(sol),
                     "--checks", "stationarity", "--out", str(out), *FAST]) == 0
        assert all(c["passed"] for c in report(out)["checks"])

    def test_indefinite_player_convexity_fails(self, tmp_path):
        sol = self.solve(tmp_path, "closed-loop", "builtin:indefinite-player")
        assert main(["verify", "--instance", "builtin:indefinite-player", "--solution", str(sol),
                     "--checks", "convexity", *FAST]) == 1
        rep = report(sol)
        failed = [c["name"] for c in rep["checks"] if not c["passed"]]
        assert failed and all("2" in n for n in failed)

    def test_digest_mismatch(self, tmp_path, capsys):
        sol = self.solve(tmp_path, "closed-loop", "builtin:distinct-outcomes")
        rc = main(["verify", "--instance", "builtin:indefinite-player", "--solution", str(sol), *FAST])
        assert rc == 2
        assert "computed for" in capsys.readouterr().err

    def test_missing_solution(self, tmp_path):
        assert main(["verify", "--instance", "builtin:distinct-outcomes", "--solution", str(tmp_path), *FAST]) == 2

    def test_infeasible_solution_not_verifiable(self, tmp_path):
        out = tmp_path / "sol"
        main(["solve", "--kind", "closed-loop", "--instance", "builtin:singular-coupling", "--out", str(out)])
        assert main(["verify", "--instance", "builtin:singular-coupling", "--solution", str(out), *FAST]) == 2

    def test_unknown_check(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["verify", "--instance", "x", "--solution", "y", "--checks", "bogus"])


class TestExamples:
    @pytest.mark.parametrize("name", ["6.1", "singular-coupling", "6.2", "slq-corollary"])
    def test_examples_pass(self, tmp_path, name):
        out = tmp_path / "ex"
        assert main(["example", name, "--out", str(out), *FAST]) == 0
        assert report(out)["passed"]

    def test_zero_sum_coincidence(self, tmp_path):
        rep = cmd_example("zero-sum-coincidence", tmp_path, paths=500, deviation_paths=200)
        assert rep.passed
        assert sum(c.name.startswith("coincidence") for c in rep.checks) >= 2

    def test_distinct_outcomes(self, tmp_path):
        rep = cmd_example("6.3", tmp_path, paths=2000, deviation_paths=500)
        assert rep.passed

    def test_builtin_instance_written(self, tmp_path):
        out = tmp_path / "ex"
        main(["example", "6.1", "--out", str(out), *FAST])
        doc = load_document(out / "instance.json")
        assert report(out)["instance_digest"] == digest(doc)

    def test_unknown_example(self, tmp_path):
        assert main(["example", "9.9", "--out", str(tmp_path)]) == 2


class TestInstanceFiles:
    def base(self):
        return spec_to_document(ex.distinct_outcomes_game(), TimeGrid(0, 1, 100))

    def test_roundtrip_and_solve(self, tmp_path):
        f = write_instance(tmp_path, self.base())
        assert main(["solve", "--kind", "closed-loop", "--instance", f, "--out", str(tmp_path / "s")]) == 0
        assert report(tmp_path / "s")["instance_digest"] == digest(self.base())

    def test_profiles(self):
        doc = self.base()
        doc["coefficients"]["sigma"] = {"profile": "sinusoid",
                                        "params": {"offset": [0.0], "amplitude": [0.5], "omega": 2.0, "phase": 1.0}}
        doc["coefficients"]["b"] = {"profile": "linear", "params": {"a": [1.0], "b": [2.0]}}
        doc["coefficients"]["A"] = {"profile": "constant", "params": {"value": [[0.3]]}}
        spec, grid = parse_document(doc)
        np.testing.assert_allclose(spec.sigma(0.25), [0.5 * np.sin(1.5)])
        np.testing.assert_allclose(spec.b(0.5), [2.0])
        np.testing.assert_allclose(spec.A, [[0.3]])
        assert grid.n_steps == 100

    def test_digest_ignores_formatting(self):
        a = self.base()
        b = json.loads(json.dumps(a, indent=4))
        assert digest(a) == digest(b)
        b["grid"]["n_steps"] = 101
        assert digest(a) != digest(b)

    @pytest.mark.parametrize(
        "mutate,field",
        [
            (lambda d: d.pop("n"), "n"),
            (lambda d: d.update(m1=-1), "m1"),
            (lambda d: d["coefficients"].update(Z=[[1.0]]), "coefficients"),
            (lambda d: d["coefficients"]["player1"].update(W=[[1.0]]), "coefficients.player1"),
            (lambda d: d["coefficients"].update(A={"profile": "cubic", "params": {}}), "coefficients.A.profile"),
            (lambda d: d["coefficients"].update(A={"profile": "linear", "params": {"a": [[1.0]]}}),
             "coefficients.A.params"),
            (lambda d: d["coefficients"].update(A=[["x"]]), "coefficients.A"),
            (lambda d: d.pop("grid"), "grid"),
        ],
    )
    def test_malformed(self, mutate, field):
        doc = self.base()
        mutate(doc)
        with pytest.raises(InstanceError) as e:
            parse_document(doc)
        assert e.value.field == field

    def test_bad_json_reports_position(self, tmp_path, capsys):
        f = tmp_path / "bad.json"
        f.write_text('{"n": 1,\n  "m1": }')
        rc = main(["solve", "--kind", "slq", "--instance", str(f), "--out", str(tmp_path / "s")])
        assert rc == 2
        assert "line 2" in capsys.readouterr().err

    def test_dimension_mismatch_is_usage_error(self, tmp_path):
        doc = self.base()
        doc["coefficients"]["A"] = [[1.0, 0.0]]
        f = write_instance(tmp_path, doc)
        assert main(["solve", "--kind", "closed-loop", "--instance", f, "--out", str(tmp_path / "s")]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["solve", "--kind", "slq", "--instance", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "sdgame", "solve", "--kind", "slq", "--instance",
                        "builtin:scalar-regulator", "--out", str(tmp_path), "--dt-steps", "20"],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "overall PASS" in r.stdout


def test_help():
    r = subprocess.run([sys.executable, "-m", "sdgame", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "verify" in r.stdout
