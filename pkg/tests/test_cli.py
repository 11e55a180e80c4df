from __future__ import annotations

import json
import subprocess
import sys

import pytest

from realnet import cli
from realnet.sdp.sdpa import import_sdpa


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr().out


class TestReport:
    def test_schema_ok(self):
        rep = cli.cmd_ideal()
        assert cli.validate_report(rep.to_dict()) == []

    def test_schema_problems(self):
        d = cli.cmd_ideal().to_dict()
        d.pop("version")
        d["checks"][0].pop("kind")
        d["passed"] = not d["passed"]
        bad = cli.validate_report(d)
        assert len(bad) == 3

    def test_input_hash_deterministic(self):
        a, b = cli.cmd_ideal(0.9), cli.cmd_ideal(0.9)
        assert a.input_hash == b.input_hash != cli.cmd_ideal(0.8).input_hash
        assert a.to_dict()["results"] == b.to_dict()["results"]

    def test_failing_check_renders(self):
        rep = cli.RunReport("x", {})
        rep.check_close("value", 1.0, 2.0, 0.1)
        assert not rep.passed
        assert "[FAIL] value" in rep.render() and "CHECKS FAILED" in rep.render()


class TestCommands:
    def test_ideal(self, capsys):
        code, out = run(["ideal"], capsys)
        assert code == 0 and "all checks passed" in out

    def test_ideal_sampled_json(self, capsys):
        code, out = run(["ideal", "--sample", "20000", "--seed", "3", "--json", "-"], capsys)
        d = json.loads(out)
        assert code == 0 and d["parameters"]["seed"] == 3
        assert any(c["kind"] == "statistical" for c in d["checks"])

    def test_noisy_ideal(self, capsys):
        code, out = run(["ideal", "--visibility", "0.95", "--json", "-"], capsys)
        d = json.loads(out)
        assert code == 0
        assert d["results"]["expected_total"] == pytest.approx(6 * 2 ** 0.5 * 0.95 ** 2)

    def test_bound_level_one(self, capsys, tmp_path):
        path = tmp_path / "r.json"
        code, out = run(["bound", "--level", "1", "--json", str(path)], capsys)
        d = json.loads(path.read_text())
        assert code == 0 and cli.validate_report(d) == []
        assert d["results"]["bound"]["formulation"] == "reduced"
        assert len(d["results"]["bound"]["bounds"]) == 2

    def test_bound_full_formulation(self, capsys):
        code, out = run(["bound", "--level", "1,1", "--formulation", "full", "--json", "-"], capsys)
        d = json.loads(out)
        assert code == 0
        assert d["results"]["bound"]["problem"]["n_vars"] == 1160

    @pytest.mark.parametrize("formulation,n_vars", [("full", 1160), ("reduced", 7)])
    def test_bound_export(self, capsys, tmp_path, formulation, n_vars):
        path = tmp_path / "l11.dat-s"
        code, _ = run(["bound", "--level", "1", "--export", str(path), "--formulation", formulation],
                      capsys)
        assert code == 0
        assert import_sdpa(path).n_vars == n_vars

    def test_bound_separation_level_one_fails(self, capsys):
        # the ideal tensor is compatible with the level-(1,1) relaxation, so the check fails
        code, out = run(["bound", "--level", "1", "--separation", "--json", "-"], capsys)
        d = json.loads(out)
        assert code == 1
        names = {c["name"]: c["passed"] for c in d["checks"]}
        assert names["ideal tensor infeasible with PPT"] is False
        assert names["ideal point objective without PPT"] is True

    def test_selftest(self, capsys):
        code, out = run(["selftest", "--real-strategies", "1"], capsys)
        assert code == 0 and "PPT distance, ideal" in out

    def test_realsim(self, capsys):
        code, out = run(["realsim", "--random-trials", "5"], capsys)
        assert code == 0 and "swap transplant fails" in out

    def test_epsilon(self, capsys):
        code, out = run(["epsilon", "--angles", "1e-3", "1e-2"], capsys)
        assert code == 0 and "critical epsilon" in out

    def test_error_becomes_failed_report(self, capsys):
        code, out = run(["ideal", "--visibility", "2.0"], capsys)
        assert code == 1 and "command completed" in out

    def test_bad_level(self):
        with pytest.raises(SystemExit):
            cli.main(["bound", "--level", "1,2,3"])

    def test_level_parse(self):
        assert cli._level("2") == (2, 2) and cli._level("2,1") == (2, 1)


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "realnet.cli", "ideal"], capture_output=True, text=True)
    assert out.returncode == 0 and "T total" in out.stdout
