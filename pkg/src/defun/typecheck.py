"""Annotation-driven type checking.

Variables live in a stack-per-name environment: entering a binder pushes,
leaving pops, so shadowing behaves like the source language.  The checker
resolves (and stores) a type on every expression node, which the
defunctionalization pass relies on for capture sets and family grouping.
"""

from __future__ import annotations

from .errors import Loc, TypeError_
from .syntax import (
    Absurd, App, BinOp, BoolLit, Cons, ConstructorApp, Eq, ExprStmt, FArith,
    FBool, FConstr, FInt, FLet, FLogicApp, FMatch, FTuple, FVar, Forall, If,
    Implies, IntLit, LemmaDecl, LetDef, LetIn, Lambda, LogicalDecl, Lt, Le,
    Match, NilLit, Not, Or, And, PCons, PConstr, PInt, PNil, PTuple, PVar,
    PWild, PostMeta, Program, Seq, Spec, TArrow, TNamed, TTuple, TrueP,
    TupleE, Ty, TypeDecl, UnitLit, Var, arrow, arrow_args, BOOL, INT, UNIT,
    int_list, int_tree,
)

# Builtin data types: lists and trees of integers (the monomorphic subset).
BUILTIN_CONSTRUCTORS = {
    "Nil": (int_list(), []),
    "Cons": (int_list(), [INT, int_list()]),
    "Empty": (int_tree(), []),
    "Node": (int_tree(), [int_tree(), INT, int_tree()]),
}

BUILTIN_LOGICALS = {
    "length": ([int_list()], INT),
    "height": ([int_tree()], INT),
    "max": ([INT, INT], INT),
}


class TypeEnv:
    def __init__(self):
        self.var_type: dict[str, list[Ty]] = {}
        self.type_decls: dict[str, TypeDecl] = {}
        self.constructors: dict[str, tuple[Ty, list[Ty]]] = dict(BUILTIN_CONSTRUCTORS)
        self.logicals: dict[str, tuple[list[Ty], Ty]] = dict(BUILTIN_LOGICALS)
        self.in_logic = False

    def push(self, name: str, ty: Ty):
        self.var_type.setdefault(name, []).append(ty)

    def pop(self, name: str):
        stack = self.var_type[name]
        stack.pop()
        if not stack:
            del self.var_type[name]

    def lookup(self, name: str, loc=None) -> Ty:
        stack = self.var_type.get(name)
        if not stack:
            raise TypeError_("unbound-variable", f"unbound variable {name!r}", loc)
        return stack[-1]

    def depths(self) -> dict[str, int]:
        return {n: len(s) for n, s in self.var_type.items()}

    # -- types -------------------------------------------------------------

    def expand(self, ty: Ty, loc=None) -> Ty:
        """Resolve aliases and validate named types."""
        if isinstance(ty, TArrow):
            return TArrow(self.expand(ty.param, loc), self.expand(ty.result, loc))
        if isinstance(ty, TTuple):
            return TTuple(tuple(self.expand(t, loc) for t in ty.items))
        if isinstance(ty, TNamed):
            if ty.name in ("list", "tree"):
                if ty.args != (INT,):
                    raise TypeError_(
                        "mismatch",
                        f"only integer {ty.name}s are supported, got {ty}", loc)
                return ty
            decl = self.type_decls.get(ty.name)
            if decl is None:
                raise TypeError_("unbound-variable",
                                 f"unknown type {ty.name!r}", loc)
            if ty.args:
                raise TypeError_("mismatch",
                                 f"type {ty.name!r} takes no arguments", loc)
            if decl.alias is not None:
                return self.expand(decl.alias, loc)
            return ty
        return ty


def mismatch(expected, found, loc, what="expression"):
    return TypeError_(
        "mismatch", f"{what} has type {found}, expected {expected}", loc)


class Checker:
    def __init__(self):
        self.env = TypeEnv()

    # -- programs ----------------------------------------------------------

    def check_program(self, p: Program) -> Program:
        # type declarations come into scope first so prelude logicals can
        # mention them regardless of their position in the file
        for item in p.items:
            if isinstance(item, TypeDecl):
                self.declare_type(item)
        for decl in p.prelude:
            self.declare_logical(decl)
        for decl in p.prelude:
            if decl.body is not None:
                self.check_logical_body(decl)
        for item in p.items:
            if isinstance(item, TypeDecl):
                pass
            elif isinstance(item, LetDef):
                self.check_letdef(item, toplevel=True)
            elif isinstance(item, LemmaDecl):
                self.check_formula(item.formula, {}, item.loc)
            elif isinstance(item, ExprStmt):
                self.type_of(item.expr)
        return p

    def declare_type(self, decl: TypeDecl):
        if decl.name in self.env.type_decls or decl.name in ("list", "tree"):
            raise TypeError_("mismatch", f"type {decl.name!r} redeclared", decl.loc)
        self.env.type_decls[decl.name] = decl
        self_ty = TNamed(decl.name)
        if decl.variants is not None:
            for ctor, fields in decl.variants:
                if ctor in self.env.constructors:
                    raise TypeError_("mismatch",
                                     f"constructor {ctor!r} redeclared", decl.loc)
                self.env.constructors[ctor] = (
                    self_ty, [self.env.expand(t, decl.loc) for t in fields])
        elif decl.alias is not None:
            self.env.expand(decl.alias, decl.loc)

    def declare_logical(self, decl: LogicalDecl):
        if decl.name in self.env.logicals:
            raise TypeError_("mismatch",
                             f"logical symbol {decl.name!r} redeclared", decl.loc)
        params = [self.env.expand(t, decl.loc) for _, t in decl.params]
        self.env.logicals[decl.name] = (params, self.env.expand(decl.ret, decl.loc))

    def check_logical_body(self, decl: LogicalDecl):
        self.env.in_logic = True
        try:
            for n, t in decl.params:
                self.env.push(n, self.env.expand(t, decl.loc))
            got = self.type_of(decl.body)
            want = self.env.expand(decl.ret, decl.loc)
            if got != want:
                raise mismatch(want, got, decl.loc, f"body of {decl.name}")
            for n, _ in reversed(decl.params):
                self.env.pop(n)
        finally:
            self.env.in_logic = False

    def check_letdef(self, d: LetDef, toplevel: bool):
        loc = d.loc
        for n, t in d.params:
            if t is None:
                raise TypeError_("annotation-missing",
                                 f"parameter {n!r} lacks a type annotation", loc)
        params = [(n, self.env.expand(t, loc)) for n, t in d.params]
        d.params = params
        if d.ret is not None:
            d.ret = self.env.expand(d.ret, loc)
        if d.is_rec:
            if d.ret is None:
                raise TypeError_("annotation-missing",
                                 f"recursive definition {d.name!r} needs a "
                                 "return type annotation", loc)
            self.env.push(d.name, d.arrow_ty())
        elif d.params and d.ret is None:
            raise TypeError_("annotation-missing",
                             f"definition {d.name!r} with parameters needs a "
                             "return type annotation", loc)
        for n, t in params:
            self.env.push(n, t)
        body_ty = self.type_of(d.body)
        if d.ret is None:
            d.ret = body_ty
        elif body_ty != d.ret:
            raise mismatch(d.ret, body_ty, loc, f"body of {d.name}")
        for n, _ in reversed(params):
            self.env.pop(n)
        if d.is_rec:
            self.env.pop(d.name)
        if d.spec is not None:
            self.check_spec(d.spec, d)
        self.env.push(d.name, d.arrow_ty() if d.params else d.ret)

    # -- expressions -------------------------------------------------------

    def type_of(self, e) -> Ty:
        ty = self._type_of(e)
        e.ty = ty
        return ty

    def _type_of(self, e) -> Ty:
        env = self.env
        if isinstance(e, UnitLit):
            return UNIT
        if isinstance(e, IntLit):
            return INT
        if isinstance(e, BoolLit):
            return BOOL
        if isinstance(e, NilLit):
            return int_list()
        if isinstance(e, Absurd):
            return e.ty if e.ty is not None else UNIT
        if isinstance(e, Var):
            if e.name in env.var_type:
                return env.lookup(e.name, e.loc)
            if env.in_logic and e.name in env.logicals:
                params, ret = env.logicals[e.name]
                return arrow(*params, ret)
            if not env.in_logic and e.name in env.logicals:
                raise TypeError_(
                    "unbound-variable",
                    f"logical symbol {e.name!r} cannot appear in program code",
                    e.loc)
            raise TypeError_("unbound-variable",
                             f"unbound variable {e.name!r}", e.loc)
        if isinstance(e, Cons):
            h = self.type_of(e.head)
            if h != INT:
                raise mismatch(INT, h, e.loc, "list element")
            t = self.type_of(e.tail)
            if t != int_list():
                raise mismatch(int_list(), t, e.loc, "list tail")
            return int_list()
        if isinstance(e, ConstructorApp):
            info = env.constructors.get(e.name)
            if info is None:
                raise TypeError_("unbound-variable",
                                 f"unknown constructor {e.name!r}", e.loc)
            result_ty, fields = info
            if len(e.args) != len(fields):
                raise TypeError_(
                    "constructor-arity",
                    f"constructor {e.name} expects {len(fields)} arguments, "
                    f"got {len(e.args)}", e.loc)
            for a, want in zip(e.args, fields):
                got = self.type_of(a)
                if got != want:
                    raise mismatch(want, got, e.loc, f"argument of {e.name}")
            return result_ty
        if isinstance(e, TupleE):
            return TTuple(tuple(self.type_of(x) for x in e.items))
        if isinstance(e, BinOp):
            lt = self.type_of(e.left)
            rt = self.type_of(e.right)
            if e.op in ("+", "-", "*", "/"):
                if lt != INT or rt != INT:
                    raise mismatch(INT, lt if lt != INT else rt, e.loc,
                                   f"operand of {e.op}")
                return INT
            if e.op in ("&&", "||"):
                if lt != BOOL or rt != BOOL:
                    raise mismatch(BOOL, lt if lt != BOOL else rt, e.loc,
                                   f"operand of {e.op}")
                return BOOL
            if e.op in ("<", "<=", ">", ">="):
                if lt != INT or rt != INT:
                    raise mismatch(INT, lt if lt != INT else rt, e.loc,
                                   f"operand of {e.op}")
                return BOOL
            if e.op == "=":
                if lt != rt:
                    raise mismatch(lt, rt, e.loc, "right operand of =")
                if isinstance(lt, TArrow):
                    raise TypeError_(
                        "mismatch",
                        "equality on function values is not supported", e.loc)
                return BOOL
            raise AssertionError(f"unknown operator {e.op}")
        if isinstance(e, Seq):
            self.type_of(e.first)
            return self.type_of(e.second)
        if isinstance(e, LetIn):
            self.check_letdef(e.defn, toplevel=False)
            ty = self.type_of(e.body)
            self.env.pop(e.defn.name)
            return ty
        if isinstance(e, If):
            ct = self.type_of(e.cond)
            if ct != BOOL:
                raise mismatch(BOOL, ct, e.loc, "if condition")
            tt = self.type_of(e.then)
            et = self.type_of(e.els)
            if tt != et:
                raise mismatch(tt, et, e.loc, "else branch")
            return tt
        if isinstance(e, Match):
            scrut_ty = self.type_of(e.scrutinee)
            arm_ty = None
            for pat, body in e.arms:
                binds = []
                self.check_pattern(pat, scrut_ty, binds)
                for n, t in binds:
                    env.push(n, t)
                bt = self.type_of(body)
                for n, _ in reversed(binds):
                    env.pop(n)
                if arm_ty is None:
                    arm_ty = bt
                elif isinstance(body, Absurd):
                    pass
                elif bt != arm_ty:
                    raise mismatch(arm_ty, bt, e.loc, "match arm")
            return arm_ty
        if isinstance(e, Lambda):
            for n, t in e.params:
                if t is None:
                    raise TypeError_(
                        "annotation-missing",
                        f"lambda parameter {n!r} lacks a type annotation", e.loc)
            params = [(n, env.expand(t, e.loc)) for n, t in e.params]
            e.params = params
            e.ret = env.expand(e.ret, e.loc)
            for n, t in params:
                env.push(n, t)
            bt = self.type_of(e.body)
            if bt != e.ret:
                raise mismatch(e.ret, bt, e.loc, "lambda body")
            if e.spec is not None:
                self.check_lambda_spec(e)
            for n, _ in reversed(params):
                env.pop(n)
            return arrow(*[t for _, t in params], e.ret)
        if isinstance(e, App):
            ft = self.type_of(e.fn)
            if not isinstance(ft, TArrow):
                raise TypeError_("not-a-function",
                                 f"applying a value of type {ft}", e.loc)
            at = self.type_of(e.arg)
            if at != ft.param:
                raise mismatch(ft.param, at, e.loc, "function argument")
            return ft.result
        raise AssertionError(f"unhandled expression {e!r}")

    def check_pattern(self, pat, ty: Ty, binds: list):
        env = self.env
        if isinstance(pat, PWild):
            return
        if isinstance(pat, PVar):
            if pat.ty is not None:
                declared = env.expand(pat.ty, pat.loc)
                if declared != ty:
                    raise mismatch(ty, declared, pat.loc,
                                   f"pattern variable {pat.name}")
                pat.ty = declared
            else:
                pat.ty = ty
            if any(n == pat.name for n, _ in binds):
                raise TypeError_("mismatch",
                                 f"duplicate pattern variable {pat.name!r}",
                                 pat.loc)
            binds.append((pat.name, ty))
            return
        if isinstance(pat, PInt):
            if ty != INT:
                raise mismatch(ty, INT, pat.loc, "integer pattern")
            return
        if isinstance(pat, PNil):
            if ty != int_list():
                raise mismatch(ty, int_list(), pat.loc, "list pattern")
            return
        if isinstance(pat, PCons):
            if ty != int_list():
                raise mismatch(ty, int_list(), pat.loc, "list pattern")
            self.check_pattern(pat.head, INT, binds)
            self.check_pattern(pat.tail, int_list(), binds)
            return
        if isinstance(pat, PConstr):
            info = env.constructors.get(pat.name)
            if info is None:
                raise TypeError_("unbound-variable",
                                 f"unknown constructor {pat.name!r}", pat.loc)
            result_ty, fields = info
            if result_ty != ty:
                raise mismatch(ty, result_ty, pat.loc,
                               f"constructor pattern {pat.name}")
            if len(pat.args) != len(fields):
                raise TypeError_(
                    "constructor-arity",
                    f"constructor {pat.name} expects {len(fields)} arguments, "
                    f"got {len(pat.args)}", pat.loc)
            for sub, fty in zip(pat.args, fields):
                self.check_pattern(sub, fty, binds)
            return
        if isinstance(pat, PTuple):
            if not isinstance(ty, TTuple) or len(ty.items) != len(pat.items):
                raise mismatch(ty, "tuple pattern", pat.loc, "pattern")
            for sub, fty in zip(pat.items, ty.items):
                self.check_pattern(sub, fty, binds)
            return
        raise AssertionError(f"unhandled pattern {pat!r}")

    # -- specifications ----------------------------------------------------

    def check_spec(self, spec: Spec, d: LetDef):
        """Type-check a definition's spec in the definition's environment
        extended with its header names and the canonical result."""
        extra: dict[str, Ty] = {}
        param_tys = [t for _, t in d.params]
        if spec.arg_names:
            if len(spec.arg_names) != len(param_tys):
                raise TypeError_(
                    "mismatch",
                    f"spec header for {d.name!r} names {len(spec.arg_names)} "
                    f"arguments, definition has {len(param_tys)}", spec.loc)
            for n, t in zip(spec.arg_names, param_tys):
                extra[n] = t
        for n, t in d.params:
            extra.setdefault(n, t)
        ret = d.ret
        if len(spec.result_names) > 1:
            if not isinstance(ret, TTuple) or len(ret.items) != len(spec.result_names):
                raise TypeError_(
                    "mismatch",
                    f"spec header for {d.name!r} names {len(spec.result_names)} "
                    f"results but the return type is {ret}", spec.loc)
            for n, t in zip(spec.result_names, ret.items):
                extra[n] = t
        elif spec.result_names:
            extra[spec.result_names[0]] = ret
        extra.setdefault("result", ret)
        for f in spec.requires + spec.ensures:
            self.check_formula(f, extra, spec.loc)

    def check_lambda_spec(self, lam: Lambda):
        spec = lam.spec
        extra: dict[str, Ty] = {}
        if spec.arg_names:
            if len(spec.arg_names) != len(lam.params):
                raise TypeError_("mismatch",
                                 "spec header arity does not match the lambda",
                                 spec.loc)
            for n, (_, t) in zip(spec.arg_names, lam.params):
                extra[n] = t
        if spec.result_names:
            if len(spec.result_names) != 1:
                raise TypeError_("mismatch",
                                 "lambda specs have a single result", spec.loc)
            extra[spec.result_names[0]] = lam.ret
        extra.setdefault("result", lam.ret)
        for f in spec.requires + spec.ensures:
            self.check_formula(f, extra, spec.loc)

    # -- formulas ----------------------------------------------------------

    def check_formula(self, f, extra: dict, loc) -> None:
        """Check a formula as a proposition.  `extra` maps spec-scoped names
        (header names, result, forall binders) to types; program variables in
        scope remain visible."""
        t = self.formula_type(f, dict(extra))
        if t not in ("prop", BOOL):
            raise TypeError_("mismatch",
                             f"formula has type {t}, expected a proposition",
                             getattr(f, "loc", loc))

    def formula_type(self, f, scope: dict):
        env = self.env
        if isinstance(f, FVar):
            if f.name in scope:
                f.ty = scope[f.name]
            elif f.name in env.var_type:
                f.ty = env.lookup(f.name, f.loc)
            else:
                raise TypeError_("unbound-variable",
                                 f"unbound variable {f.name!r} in formula", f.loc)
            return f.ty
        if isinstance(f, FInt):
            return INT
        if isinstance(f, FBool):
            return BOOL
        if isinstance(f, TrueP):
            return "prop"
        if isinstance(f, FConstr):
            info = env.constructors.get(f.name)
            if info is None:
                raise TypeError_("unbound-variable",
                                 f"unknown constructor {f.name!r}", f.loc)
            result_ty, fields = info
            if len(f.args) != len(fields):
                raise TypeError_(
                    "constructor-arity",
                    f"constructor {f.name} expects {len(fields)} arguments",
                    f.loc)
            for a, want in zip(f.args, fields):
                got = self.formula_type(a, scope)
                if got != want:
                    raise mismatch(want, got, f.loc, f"argument of {f.name}")
            f.ty = result_ty
            return result_ty
        if isinstance(f, FLogicApp):
            sig = env.logicals.get(f.name)
            if sig is None:
                raise TypeError_("unbound-variable",
                                 f"unknown logical symbol {f.name!r}", f.loc)
            params, ret = sig
            if len(f.args) != len(params):
                raise TypeError_(
                    "mismatch",
                    f"logical symbol {f.name} expects {len(params)} arguments",
                    f.loc)
            for a, want in zip(f.args, params):
                got = self.formula_type(a, scope)
                if got != want:
                    raise mismatch(want, got, f.loc, f"argument of {f.name}")
            f.ty = ret
            return ret
        if isinstance(f, FArith):
            for side in (f.left, f.right):
                got = self.formula_type(side, scope)
                if got != INT:
                    raise mismatch(INT, got, f.loc, f"operand of {f.op}")
            return INT
        if isinstance(f, FTuple):
            return TTuple(tuple(self.formula_type(x, scope) for x in f.items))
        if isinstance(f, (Eq, Lt, Le)):
            lt = self.formula_type(f.left, scope)
            rt = self.formula_type(f.right, scope)
            if isinstance(f, (Lt, Le)):
                if lt != INT or rt != INT:
                    raise mismatch(INT, lt if lt != INT else rt, f.loc,
                                   "comparison operand")
            else:
                if lt != rt:
                    raise mismatch(lt, rt, f.loc, "right operand of =")
                if isinstance(lt, TArrow):
                    raise TypeError_(
                        "mismatch",
                        "equality on function values is not supported", f.loc)
            return "prop"
        if isinstance(f, (And, Or, Implies)):
            for side in (f.left, f.right):
                got = self.formula_type(side, scope)
                if got not in ("prop", BOOL):
                    raise mismatch("prop", got, f.loc, "logical operand")
            return "prop"
        if isinstance(f, Not):
            got = self.formula_type(f.body, scope)
            if got not in ("prop", BOOL):
                raise mismatch("prop", got, f.loc, "negated formula")
            return "prop"
        if isinstance(f, Forall):
            binders = []
            for n, t in f.binders:
                t = INT if t is None else env.expand(t, f.loc)
                binders.append((n, t))
            f.binders = binders
            inner = dict(scope)
            inner.update(binders)
            got = self.formula_type(f.body, inner)
            if got not in ("prop", BOOL):
                raise mismatch("prop", got, f.loc, "quantified body")
            return "prop"
        if isinstance(f, PostMeta):
            f.fn_ty = env.expand(f.fn_ty, f.loc)
            fn_got = self.formula_type(f.fn, scope)
            if fn_got != f.fn_ty:
                raise mismatch(f.fn_ty, fn_got, f.loc, "post function")
            ty = f.fn_ty
            for a in f.args:
                if not isinstance(ty, TArrow):
                    raise TypeError_("mismatch",
                                     "post applied to too many arguments", f.loc)
                got = self.formula_type(a, scope)
                if got != ty.param:
                    raise mismatch(ty.param, got, f.loc, "post argument")
                ty = ty.result
            got = self.formula_type(f.result, scope)
            if got != ty:
                raise mismatch(ty, got, f.loc, "post result")
            return "prop"
        if isinstance(f, FLet):
            vt = self.formula_type(f.value, scope)
            inner = dict(scope)
            inner[f.name] = vt
            return self.formula_type(f.body, inner)
        if isinstance(f, FMatch):
            # only generated; assume well-formed
            return "prop"
        raise AssertionError(f"unhandled formula {f!r}")


def check_program(p: Program) -> Program:
    """Type-check a parsed program in place and return it."""
    Checker().check_program(p)
    return p


def type_of(e, checker: Checker | None = None) -> Ty:
    c = checker or Checker()
    return c.type_of(e)
