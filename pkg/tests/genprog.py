"""Grammar-directed generator of small well-typed higher-order programs.

Each generated program folds a continuation over an int list or int tree
with randomly built integer-expression bodies, so that every program
exercises lambda capture, kont-family synthesis, and the apply rewrite.
"""

from __future__ import annotations

import random

INT_OPS = ["+", "-", "*"]


def gen_int_expr(rng: random.Random, scope: list[str], k: str | None,
                 depth: int) -> str:
    """A random well-typed int expression over int variables in `scope`;
    `k`, when given, is an int -> int function that may be applied."""
    choices = ["lit", "var", "binop"]
    if depth > 0:
        choices += ["binop", "ifte"]
        if k is not None:
            choices += ["call", "call"]
    kind = rng.choice(choices)
    if kind == "lit" or (kind == "var" and not scope):
        return str(rng.randint(0, 9))
    if kind == "var":
        return rng.choice(scope)
    if kind == "binop":
        op = rng.choice(INT_OPS)
        a = gen_int_expr(rng, scope, k, depth - 1)
        b = gen_int_expr(rng, scope, k, depth - 1)
        return f"({a} {op} {b})"
    if kind == "ifte":
        a = gen_int_expr(rng, scope, None, 0)
        b = gen_int_expr(rng, scope, k, depth - 1)
        c = gen_int_expr(rng, scope, k, depth - 1)
        return f"(if {a} <= {gen_int_expr(rng, scope, None, 0)} then {b} else {c})"
    # call
    arg = gen_int_expr(rng, scope, None, depth - 1)
    return f"({k} {arg})"


def gen_program(seed: int) -> str:
    """One random program; deterministic in `seed`."""
    rng = random.Random(seed)
    shape = rng.choice(["list", "tree"])
    lines = []
    if shape == "list":
        step = gen_int_expr(rng, ["h", "v"], "k", 2)
        base = gen_int_expr(rng, [], "k", 1)
        lines += [
            "let rec fold_cps (l : int list) (k : int -> int) : int =",
            "  match l with",
            f"  | [] -> {base if '(k' in base else f'k {base}'}",
            "  | h :: t ->",
            f"      fold_cps t (fun (v : int) : int -> {step})",
            "  end",
            "",
        ]
        entry_arg = "(l : int list)"
        call = "fold_cps l"
    else:
        step = gen_int_expr(rng, ["x", "v"], "k", 2)
        base = gen_int_expr(rng, [], "k", 1)
        lines += [
            "let rec fold_cps (t : int tree) (k : int -> int) : int =",
            "  match t with",
            f"  | Empty -> {base if '(k' in base else f'k {base}'}",
            "  | Node (lt, x, rt) ->",
            f"      fold_cps lt (fun (v : int) : int -> {step})",
            "  end",
            "",
        ]
        entry_arg = "(t : int tree)"
        call = "fold_cps t"
    final = gen_int_expr(rng, ["v"], None, 1)
    lines += [
        f"let main {entry_arg} : int =",
        f"  {call} (fun (v : int) : int -> {final})",
    ]
    if rng.random() < 0.4:
        # a named non-rec helper passed as a value (eta-expansion path)
        body = gen_int_expr(rng, ["w"], None, 2)
        lines += [
            "",
            f"let helper (w : int) : int = {body}",
            "",
            f"let main2 {entry_arg} : int =",
            f"  {call.replace('fold_cps', 'fold_cps')} helper",
        ]
    return "\n".join(lines) + "\n"
