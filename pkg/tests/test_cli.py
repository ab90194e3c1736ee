import json

import pytest

from defun.cli import main

from conftest import CORPUS, GOLDEN, corpus_text


@pytest.fixture
def mlg(tmp_path):
    def write(text, name="prog.mlg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


class TestCheck:
    def test_ok_exit_0(self, capsys):
        assert main(["check", str(CORPUS / "length.mlg")]) == 0
        assert "ok" in capsys.readouterr().out

    def test_ill_typed_exit_1(self, mlg, capsys):
        path = mlg("let f (u : unit) : int = true")
        assert main(["check", path]) == 1
        err = capsys.readouterr().err
        assert "mismatch" in err

    def test_parse_error_exit_1(self, mlg):
        assert main(["check", mlg("let f = = =")]) == 1

    def test_missing_file_exit_1(self, tmp_path):
        assert main(["check", str(tmp_path / "nope.mlg")]) == 1

    def test_usage_error_exit_2(self):
        assert main(["check"]) == 2
        assert main(["frobnicate"]) == 2


class TestRun:
    def test_source_eval(self, capsys):
        code = main(["run", str(CORPUS / "reverse.mlg"), "--entry", "reverse",
                     "--arg", "[1;2;3]"])
        assert code == 0
        assert capsys.readouterr().out.strip() == "[3;2;1]"

    def test_target_trace(self, capsys):
        code = main(["run", str(CORPUS / "reverse.mlg"), "--entry", "reverse",
                     "--arg", "[1;2;3]", "--target", "--trace"])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        assert out == [
            "[3;2;1]",
            "apply0 K0(3, K0(2, K0(1, K1))) []",
            "apply0 K0(2, K0(1, K1)) []",
            "apply0 K0(1, K1) []",
            "apply0 K1 []",
        ]

    def test_runtime_error_exit_1(self, mlg, capsys):
        path = mlg("let f (a : int) : int = a / 0")
        assert main(["run", path, "--entry", "f", "--arg", "3"]) == 1
        assert "division-by-zero" in capsys.readouterr().err

    def test_bad_literal_exit_1(self, mlg):
        path = mlg("let f (a : int) : int = a")
        assert main(["run", path, "--entry", "f", "--arg", "wat"]) == 1


class TestEmit:
    def test_whyml_matches_golden(self, tmp_path, capsys):
        code = main(["emit", str(CORPUS / "length.mlg"), "-o", str(tmp_path)])
        assert code == 0
        written = tmp_path / "length.mlw"
        assert capsys.readouterr().out.strip() == str(written)
        assert written.read_text() == (GOLDEN / "length.mlw").read_text()

    def test_smt_writes_vc_dir(self, tmp_path):
        code = main(["emit", str(CORPUS / "length.mlg"), "--format", "smt2",
                     "-o", str(tmp_path)])
        assert code == 0
        vcdir = tmp_path / "length_vcs"
        files = sorted(p.name for p in vcdir.iterdir())
        assert "index.json" in files
        assert sum(1 for f in files if f.endswith(".smt2")) == 5

    def test_untransformable_exit_1(self, mlg, capsys):
        path = mlg("let ap (f : bool -> bool) (x : bool) : bool = f x")
        assert main(["emit", path]) == 1
        assert "no-family" in capsys.readouterr().err


class TestEquiv:
    def test_pass_line(self, capsys):
        code = main(["equiv", str(CORPUS / "reverse.mlg"),
                     "--entry", "reverse", "--trials", "25"])
        assert code == 0
        out = capsys.readouterr().out
        assert "25" in out and ("pass" in out.lower() or "ok" in out.lower())


class TestCorpus:
    def test_table(self, tmp_path, capsys):
        code = main(["corpus", str(CORPUS), "-o", str(tmp_path),
                     "--trials", "10"])
        assert code == 0
        out = capsys.readouterr().out
        for stem in ("height", "length", "reverse", "smallstep"):
            assert stem in out

    def test_json(self, tmp_path, capsys):
        code = main(["corpus", str(CORPUS), "-o", str(tmp_path),
                     "--trials", "10", "--json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert {e["file"] for e in data} == {
            "height.mlg", "length.mlg", "reverse.mlg", "smallstep.mlg"}
        assert all(e["ok"] for e in data)

    def test_failure_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "c"
        bad.mkdir()
        (bad / "bad.mlg").write_text("let f (u : unit) : int = true")
        assert main(["corpus", str(bad), "--trials", "1"]) == 1
