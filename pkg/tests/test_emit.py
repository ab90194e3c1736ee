import re

import pytest

from defun.emit import emit_surface, emit_whyml, parse_whyml, render_doc
from defun.frontend import parse_program

from conftest import CORPUS_FILES, GOLDEN, corpus_text, pipeline


class TestGolden:
    def test_length_matches_golden_byte_exact(self, corpus_targets):
        _, _, t = corpus_targets["length.mlg"]
        expected = (GOLDEN / "length.mlw").read_text()
        assert emit_whyml(t, module_name="Length") == expected

    def test_emission_deterministic(self):
        out = [emit_whyml(pipeline(corpus_text("length.mlg"))[2]) for _ in range(3)]
        assert out[0] == out[1] == out[2]


class TestWhymlShape:
    @pytest.fixture(params=CORPUS_FILES)
    def text(self, request, corpus_targets):
        _, _, t = corpus_targets[request.param]
        return emit_whyml(t)

    def test_module_wrapper(self, text):
        lines = text.rstrip("\n").split("\n")
        assert lines[0].startswith("module ")
        assert lines[-1] == "end"

    def test_imports_are_used(self, text):
        if "use list.Length" in text:
            assert re.search(r"\blength\b", text.split("use list.Length")[1])
        if "use list.List" in text:
            assert "list int" in text or "Cons" in text or "Nil" in text

    def test_matches_end_terminated(self, text):
        # every match has a matching indented `end`; the final unindented
        # `end` closes the module
        indented_ends = len(re.findall(r"^ +end$", text, re.M))
        assert text.count("match ") == indented_ends

    def test_no_arrows_in_program_types(self, text):
        # arrow types may appear only inside logical binders (forall ... ->)
        for line in text.split("\n"):
            if line.lstrip().startswith(("let", "predicate", "type")):
                assert "->" not in line or "fun" in line, line


class TestWhymlRoundTrip:
    @pytest.mark.parametrize("name", CORPUS_FILES)
    def test_fixed_point(self, corpus_targets, name):
        _, _, t = corpus_targets[name]
        text = emit_whyml(t)
        doc = parse_whyml(text)
        assert render_doc(doc) == text


class TestSurfaceRoundTrip:
    @pytest.mark.parametrize("name", CORPUS_FILES)
    def test_fixed_point(self, name):
        src = corpus_text(name)
        p = parse_program(src)
        printed = emit_surface(p)
        p2 = parse_program(printed)
        assert emit_surface(p2) == printed

    @pytest.mark.parametrize("name", CORPUS_FILES)
    def test_reparse_preserves_semantics(self, name):
        src = corpus_text(name)
        p = parse_program(src)
        p2 = parse_program(emit_surface(p))
        assert p2 == p
