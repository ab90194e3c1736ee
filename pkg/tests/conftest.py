import pathlib

import pytest

from defun.defunc import defunctionalize
from defun.frontend import parse_program
from defun.typecheck import Checker

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDEN = pathlib.Path(__file__).resolve().parent / "golden"

CORPUS_FILES = ["reverse.mlg", "length.mlg", "height.mlg", "smallstep.mlg"]


def pipeline(text: str):
    """parse + typecheck + defunctionalize; returns (program, checker, target)."""
    program = parse_program(text)
    checker = Checker()
    checker.check_program(program)
    target = defunctionalize(program, checker)
    return program, checker, target


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text()


@pytest.fixture(scope="session")
def corpus_targets():
    """All four corpus programs through the full pipeline."""
    return {name: pipeline(corpus_text(name)) for name in CORPUS_FILES}
