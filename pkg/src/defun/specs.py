"""Translation of specification formulas into the first-order vocabulary.

The main job is expanding the `post` meta-predicate into applications of
the generated per-family post predicates, introducing a fresh quantified
intermediate for every extra argument, and renaming spec-header names to
the definition's actual parameters and the canonical `result`.
"""

from __future__ import annotations

from .errors import TransformError
from .syntax import (
    And, Or, Eq, FArith, FBool, FConstr, FInt, FLet, FLogicApp, FMatch, FTuple,
    FVar, Forall, Formula, Implies, LemmaDecl, LetDef, Lt, Le, Not, PostMeta,
    Spec, TArrow, TrueP,
)


def formula_names(f: Formula) -> set[str]:
    """All variable names occurring in a formula, free or bound."""
    out: set[str] = set()

    def go(f):
        if isinstance(f, FVar):
            out.add(f.name)
        elif isinstance(f, (FInt, FBool, TrueP)):
            pass
        elif isinstance(f, (FConstr, FLogicApp)):
            for a in f.args:
                go(a)
        elif isinstance(f, (FArith, Eq, Lt, Le, And, Or, Implies)):
            go(f.left)
            go(f.right)
        elif isinstance(f, FTuple):
            for a in f.items:
                go(a)
        elif isinstance(f, Not):
            go(f.body)
        elif isinstance(f, Forall):
            out.update(n for n, _ in f.binders)
            go(f.body)
        elif isinstance(f, PostMeta):
            go(f.fn)
            for a in f.args:
                go(a)
            go(f.result)
        elif isinstance(f, FLet):
            out.add(f.name)
            go(f.value)
            go(f.body)
        elif isinstance(f, FMatch):
            go(f.scrutinee)
            for _, b in f.arms:
                go(b)
        else:
            raise AssertionError(f"unhandled formula {f!r}")

    go(f)
    return out


def subst_formula(f: Formula, mapping: dict[str, Formula]) -> Formula:
    """Substitute terms for free variables; binders shadow as expected."""
    def go(f, mapping):
        if isinstance(f, FVar):
            return mapping.get(f.name, f)
        if isinstance(f, (FInt, FBool, TrueP)):
            return f
        if isinstance(f, FConstr):
            return FConstr(f.name, [go(a, mapping) for a in f.args], ty=f.ty, loc=f.loc)
        if isinstance(f, FLogicApp):
            return FLogicApp(f.name, [go(a, mapping) for a in f.args], ty=f.ty, loc=f.loc)
        if isinstance(f, FArith):
            return FArith(f.op, go(f.left, mapping), go(f.right, mapping), loc=f.loc)
        if isinstance(f, FTuple):
            return FTuple([go(a, mapping) for a in f.items], loc=f.loc)
        if isinstance(f, (Eq, Lt, Le, And, Or, Implies)):
            return type(f)(go(f.left, mapping), go(f.right, mapping), loc=f.loc)
        if isinstance(f, Not):
            return Not(go(f.body, mapping), loc=f.loc)
        if isinstance(f, Forall):
            inner = {k: v for k, v in mapping.items()
                     if k not in {n for n, _ in f.binders}}
            return Forall(list(f.binders), go(f.body, inner), loc=f.loc)
        if isinstance(f, PostMeta):
            return PostMeta(go(f.fn, mapping), f.fn_ty,
                            [go(a, mapping) for a in f.args],
                            go(f.result, mapping), loc=f.loc)
        if isinstance(f, FLet):
            inner = {k: v for k, v in mapping.items() if k != f.name}
            return FLet(f.name, go(f.value, mapping), go(f.body, inner), loc=f.loc)
        if isinstance(f, FMatch):
            return FMatch(go(f.scrutinee, mapping),
                          [(p, go(b, mapping)) for p, b in f.arms], loc=f.loc)
        raise AssertionError(f"unhandled formula {f!r}")

    return go(f, dict(mapping))


class FreshNames:
    """Deterministic var0, var1, ... supply skipping taken names."""

    def __init__(self, taken):
        self.taken = set(taken)
        self.counter = 0

    def fresh(self) -> str:
        while True:
            name = f"var{self.counter}"
            self.counter += 1
            if name not in self.taken:
                self.taken.add(name)
                return name


def expand_post_meta(f: Formula, resolver) -> Formula:
    """Replace every PostMeta with concrete post applications.

    `resolver` maps a source arrow type to its family; families carry
    `post_name` and `kont_ty` attributes.  Multi-argument posts become the
    right-nested forall chain over fresh kont-typed intermediates.
    """
    fresh = FreshNames(formula_names(f))

    def expand_pm(fn, fn_ty, args, result, loc):
        fam = resolver(fn_ty, loc)
        if len(args) == 1:
            return FLogicApp(fam.post_name, [fn, args[0], result], loc=loc)
        inner_ty = fn_ty.result
        if not isinstance(inner_ty, TArrow):
            raise TransformError(
                "no-family", "post applied to more arguments than its type has",
                loc)
        inner_fam = resolver(inner_ty, loc)
        v = fresh.fresh()
        step = FLogicApp(fam.post_name, [fn, args[0], FVar(v)], loc=loc)
        rest = expand_pm(FVar(v), inner_ty, args[1:], result, loc)
        return Forall([(v, inner_fam.kont_ty)], Implies(step, rest), loc=loc)

    def go(f):
        if isinstance(f, PostMeta):
            return expand_pm(go(f.fn), f.fn_ty, [go(a) for a in f.args],
                             go(f.result), f.loc)
        if isinstance(f, (FVar, FInt, FBool, TrueP)):
            return f
        if isinstance(f, FConstr):
            return FConstr(f.name, [go(a) for a in f.args], ty=f.ty, loc=f.loc)
        if isinstance(f, FLogicApp):
            return FLogicApp(f.name, [go(a) for a in f.args], ty=f.ty, loc=f.loc)
        if isinstance(f, FArith):
            return FArith(f.op, go(f.left), go(f.right), loc=f.loc)
        if isinstance(f, FTuple):
            return FTuple([go(a) for a in f.items], loc=f.loc)
        if isinstance(f, (Eq, Lt, Le, And, Or, Implies)):
            return type(f)(go(f.left), go(f.right), loc=f.loc)
        if isinstance(f, Not):
            return Not(go(f.body), loc=f.loc)
        if isinstance(f, Forall):
            return Forall(list(f.binders), go(f.body), loc=f.loc)
        if isinstance(f, FLet):
            return FLet(f.name, go(f.value), go(f.body), loc=f.loc)
        if isinstance(f, FMatch):
            return FMatch(go(f.scrutinee), [(p, go(b)) for p, b in f.arms],
                          loc=f.loc)
        raise AssertionError(f"unhandled formula {f!r}")

    return go(f)


def translate_spec(spec: Spec, d: LetDef, resolver, rewrite_ty) -> tuple[list, list]:
    """Rename header names to the actual parameters and `result`, expand
    PostMetas, and encode multiple result names as projections of a single
    result."""
    mapping: dict[str, Formula] = {}
    if spec.arg_names:
        if len(spec.arg_names) != len(d.params):
            raise TransformError(
                "header-arity",
                f"spec header of {d.name!r} names {len(spec.arg_names)} "
                f"arguments, definition has {len(d.params)}", spec.loc)
        for n, (actual, _) in zip(spec.arg_names, d.params):
            mapping[n] = FVar(actual)

    def translate(f: Formula) -> Formula:
        out = subst_formula(f, mapping)
        if len(spec.result_names) > 1:
            names = formula_names(out)
            if any(r in names for r in spec.result_names):
                binders = [(r, rewrite_ty(t, spec.loc))
                           for r, t in zip(spec.result_names, d.ret.items)]
                out = Forall(
                    binders,
                    Implies(Eq(FVar("result"),
                               FTuple([FVar(r) for r, _ in binders])), out),
                    loc=spec.loc)
        elif spec.result_names:
            out = subst_formula(out, {spec.result_names[0]: FVar("result")})
        return expand_post_meta(out, resolver)

    return ([translate(f) for f in spec.requires],
            [translate(f) for f in spec.ensures])


def passthrough_lemma(lemma: LemmaDecl, resolver) -> LemmaDecl:
    return LemmaDecl(lemma.name,
                     expand_post_meta(lemma.formula, resolver), loc=lemma.loc)
