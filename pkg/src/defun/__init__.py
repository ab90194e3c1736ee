"""defun: a defunctionalizing transpiler for specified higher-order programs.

Pipeline: frontend (parse) -> typecheck -> defunc (transform) -> emit
(WhyML) / vcgen (SMT-LIB2), with interp providing a dual interpreter used
as a semantic-preservation oracle.
"""

from .defunc import TargetProgram, defunctionalize
from .emit import emit_surface, emit_whyml, parse_whyml
from .frontend import parse_expr, parse_formula, parse_program
from .interp import equiv_check, eval_fo, eval_ho, render_value
from .syntax import Program
from .typecheck import Checker, check_program
from .vcgen import emit_smt, generate_vcs

__all__ = [
    "Checker",
    "Program",
    "TargetProgram",
    "check_program",
    "defunctionalize",
    "emit_smt",
    "emit_surface",
    "emit_whyml",
    "equiv_check",
    "eval_fo",
    "eval_ho",
    "generate_vcs",
    "parse_expr",
    "parse_formula",
    "parse_program",
    "parse_whyml",
    "render_value",
]
