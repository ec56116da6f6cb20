"""CLI behavior: outputs, exit codes, determinism."""

import json
import subprocess
import sys

import pytest

from presburger.cli import main


def run_cli(*argv):
    r = subprocess.run(
        [sys.executable, "-m", "presburger.cli", *argv],
        capture_output=True,
        text=True,
    )
    return r.returncode, r.stdout, r.stderr


@pytest.fixture(scope="module")
def group_spec(tmp_path_factory):
    path = tmp_path_factory.mktemp("specs") / "spec.json"
    path.write_text(json.dumps({"s": 1, "r": 1, "b": [["1"]], "v": [["0;3"]]}))
    return str(path)


class TestCommands:
    def test_qe(self):
        code, out, _ = run_cli("qe", "exists y. x = 2*y")
        assert code == 0 and out == "2 | x\n"

    def test_decide(self):
        code, out, _ = run_cli("decide", "forall x. exists y. (x = 2*y or x = 2*y + 1)")
        assert code == 0 and out == "true\n"
        code, out, _ = run_cli("decide", "exists x. (x < 0 and x > 0)")
        assert code == 0 and out == "false\n"

    def test_enum(self):
        code, out, _ = run_cli("enum", "2 | x", "--box", "x=-4..4")
        assert code == 0
        assert out.splitlines() == ["-4", "-2", "0", "2", "4"]

    def test_enum_box_cap(self):
        code, _, err = run_cli("enum", "x > 0", "--box", "x=0..99999999", "--cap", "1000")
        assert code == 2 and "cap" in err

    def test_ubd(self):
        code, out, _ = run_cli("ubd", "x >= 0 and y >= 0 and y < x")
        assert code == 0
        assert out.splitlines()[0] == "r=2 s=0"
        json.loads(out.splitlines()[1])

    def test_normal_form_verified(self):
        code, out, _ = run_cli("--json", "normal-form", "2 | x", "--verify")
        assert code == 0
        data = json.loads(out)
        assert data["r"] == 1 and "errors" not in data

    def test_cells(self):
        code, out, _ = run_cli(
            "--json", "cells", "true", "--vars", "x",
            "--refine", "2 | x", "--refine", "not 2 | x",
        )
        assert code == 0
        data = json.loads(out)
        assert len(data["cells"]) == 2

    def test_cells_with_function(self):
        code, out, _ = run_cli(
            "--json", "cells", "true", "--vars", "x",
            "--func", "abs:y:(y = x and x >= 0) or (y = -x and x <= -1)",
        )
        assert code == 0
        data = json.loads(out)
        assert all("abs" in c["rules"] for c in data["cells"])

    def test_group_ops(self, group_spec):
        code, out, _ = run_cli("group", "add", group_spec, "(0;0 | 1/2;0)", "(0;0 | 3/4;0)")
        assert code == 0 and out == "(0;3 | 1/4;0)\n"
        # -(0;1 | 1/2;0): negating the x part wraps once, so the carry feeds
        # one -v into the u part: -(0;1) - (0;3) = (0;-4)
        code, out, _ = run_cli("group", "neg", group_spec, "(0;1 | 1/2;0)")
        assert code == 0 and out == "(0;-4 | 1/2;0)\n"
        code, out, _ = run_cli("group", "cocycle", group_spec, "(0;0 | 1/2;0)", "(0;0 | 1/2;1)")
        assert code == 0 and out == "0;3\n"

    def test_group_verify(self, group_spec):
        code, out, _ = run_cli(
            "group", "verify", group_spec, "--seed", "7", "--trials", "50"
        )
        assert code == 0
        assert out.splitlines()[0] == "PASS"

    def test_axioms(self):
        code, out, _ = run_cli("axioms", "--levels", "0", "1", "--trials", "100", "--seed", "3")
        assert code == 0
        assert all(line.endswith("PASS") for line in out.splitlines())

    def test_formula_from_file(self, tmp_path):
        p = tmp_path / "f.txt"
        p.write_text("exists y. x = 2*y")
        code, out, _ = run_cli("qe", f"@{p}")
        assert code == 0 and out == "2 | x\n"


class TestExitCodes:
    def test_parse_error_is_2(self):
        code, _, err = run_cli("qe", "x*y = 1")
        assert code == 2 and "non-linear" in err

    def test_usage_error_is_2(self):
        code, _, _ = run_cli("qe")
        assert code == 2

    def test_failed_verification_is_1(self, monkeypatch, group_spec, capsys):
        from presburger import cli as cli_mod
        from presburger.groups import ExtReport

        def fake_verify(spec, trials=0, seed=0):
            rep = ExtReport(spec_r=1, spec_s=1, trials=trials, seed=seed)
            rep.record("identity", False, "injected failure")
            return rep

        monkeypatch.setattr(cli_mod, "verify_extension", fake_verify)
        code = main(["group", "verify", group_spec, "--trials", "1", "--seed", "0"])
        captured = capsys.readouterr()
        assert code == 1
        assert captured.out.splitlines()[0] == "FAIL"


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ("qe", "exists y. (x < 3*y and 3*y < x + 7)"),
            ("--json", "ubd", "x >= 0 and y >= 0 and y < x"),
            ("--json", "cells", "0 < y and y < x and 2 | y"),
            ("enum", "3 | x + 1", "--box", "x=-9..9"),
            ("axioms", "--levels", "2", "--trials", "200", "--seed", "11"),
        ],
    )
    def test_byte_identical_reruns(self, argv):
        first = run_cli(*argv)
        second = run_cli(*argv)
        assert first == second
