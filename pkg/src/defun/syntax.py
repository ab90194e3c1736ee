"""Core AST: types, expressions, patterns, formulas, specs and programs.

All nodes are plain dataclasses.  Structural equality deliberately ignores
source locations and resolved types so that round-trip tests can compare
freshly parsed trees against transformed ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import Loc

# ---------------------------------------------------------------------------
# Types


class Ty:
    pass


@dataclass(frozen=True)
class TUnit(Ty):
    def __str__(self):
        return "unit"


@dataclass(frozen=True)
class TInt(Ty):
    def __str__(self):
        return "int"


@dataclass(frozen=True)
class TBool(Ty):
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class TNamed(Ty):
    name: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.name
        return " ".join(str(a) for a in self.args) + " " + self.name


@dataclass(frozen=True)
class TArrow(Ty):
    param: Ty
    result: Ty

    def __str__(self):
        p = str(self.param)
        if isinstance(self.param, TArrow):
            p = f"({p})"
        return f"{p} -> {self.result}"


@dataclass(frozen=True)
class TTuple(Ty):
    items: tuple

    def __str__(self):
        return " * ".join(
            f"({t})" if isinstance(t, (TArrow, TTuple)) else str(t) for t in self.items
        )


INT = TInt()
BOOL = TBool()
UNIT = TUnit()


def int_list() -> Ty:
    return TNamed("list", (INT,))


def int_tree() -> Ty:
    return TNamed("tree", (INT,))


def arrow(*tys: Ty) -> Ty:
    """Right-nested arrow from a flat argument/result list."""
    res = tys[-1]
    for t in reversed(tys[:-1]):
        res = TArrow(t, res)
    return res


def arrow_args(ty: Ty) -> tuple[list[Ty], Ty]:
    """Split a curried arrow into its parameter list and final result."""
    params = []
    while isinstance(ty, TArrow):
        params.append(ty.param)
        ty = ty.result
    return params, ty


def contains_arrow(ty: Ty) -> bool:
    if isinstance(ty, TArrow):
        return True
    if isinstance(ty, TNamed):
        return any(contains_arrow(a) for a in ty.args)
    if isinstance(ty, TTuple):
        return any(contains_arrow(t) for t in ty.items)
    return False


# ---------------------------------------------------------------------------
# Patterns


class Pattern:
    pass


def _meta():
    return field(default=None, compare=False, repr=False)


@dataclass
class PWild(Pattern):
    loc: Optional[Loc] = _meta()


@dataclass
class PVar(Pattern):
    name: str
    ty: Optional[Ty] = None
    loc: Optional[Loc] = _meta()


@dataclass
class PInt(Pattern):
    value: int
    loc: Optional[Loc] = _meta()


@dataclass
class PNil(Pattern):
    loc: Optional[Loc] = _meta()


@dataclass
class PCons(Pattern):
    head: Pattern
    tail: Pattern
    loc: Optional[Loc] = _meta()


@dataclass
class PConstr(Pattern):
    name: str
    args: list
    loc: Optional[Loc] = _meta()


@dataclass
class PTuple(Pattern):
    items: list
    loc: Optional[Loc] = _meta()


def pattern_vars(p: Pattern) -> list[tuple[str, Optional[Ty]]]:
    out = []

    def go(p):
        if isinstance(p, PVar):
            out.append((p.name, p.ty))
        elif isinstance(p, PCons):
            go(p.head)
            go(p.tail)
        elif isinstance(p, (PConstr, PTuple)):
            for q in p.args if isinstance(p, PConstr) else p.items:
                go(q)

    go(p)
    return out


# ---------------------------------------------------------------------------
# Formulas (specification language)


class Formula:
    pass


@dataclass
class FVar(Formula):
    name: str
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class FInt(Formula):
    value: int
    loc: Optional[Loc] = _meta()


@dataclass
class FBool(Formula):
    value: bool
    loc: Optional[Loc] = _meta()


@dataclass
class FConstr(Formula):
    name: str
    args: list
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class FLogicApp(Formula):
    """Application of a declared logical function or predicate symbol."""

    name: str
    args: list
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class FArith(Formula):
    op: str  # + - * /
    left: Formula
    right: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class FTuple(Formula):
    items: list
    loc: Optional[Loc] = _meta()


@dataclass
class Eq(Formula):
    left: Formula
    right: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class Lt(Formula):
    left: Formula
    right: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class Le(Formula):
    left: Formula
    right: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class And(Formula):
    left: Formula
    right: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class Or(Formula):
    left: Formula
    right: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class Not(Formula):
    body: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class Implies(Formula):
    left: Formula
    right: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class Forall(Formula):
    binders: list  # (name, Ty)
    body: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class TrueP(Formula):
    loc: Optional[Loc] = _meta()


@dataclass
class PostMeta(Formula):
    """`post (f : t) a1 ... an r` before expansion into concrete posts.

    The arrow type must be written out explicitly; it selects the family.
    """

    fn: Formula
    fn_ty: Ty
    args: list
    result: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class FLet(Formula):
    """let-binding inside a formula; used by generated post predicates."""

    name: str
    value: Formula
    body: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class FMatch(Formula):
    """Pattern match at the formula level; only generated, never parsed."""

    scrutinee: Formula
    arms: list  # (Pattern, Formula)
    loc: Optional[Loc] = _meta()


FALSE = Not(TrueP())


def conj(fs: list) -> Formula:
    if not fs:
        return TrueP()
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


# ---------------------------------------------------------------------------
# Specs


@dataclass
class Spec:
    result_names: list = field(default_factory=list)
    arg_names: list = field(default_factory=list)
    requires: list = field(default_factory=list)
    ensures: list = field(default_factory=list)
    loc: Optional[Loc] = _meta()

    def is_empty(self):
        return not (self.result_names or self.arg_names or self.requires or self.ensures)


# ---------------------------------------------------------------------------
# Expressions


class Expr:
    pass


@dataclass
class UnitLit(Expr):
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class Var(Expr):
    name: str
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class IntLit(Expr):
    value: int
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class BoolLit(Expr):
    value: bool
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class ConstructorApp(Expr):
    name: str
    args: list
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class TupleE(Expr):
    items: list
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class NilLit(Expr):
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class Cons(Expr):
    head: Expr
    tail: Expr
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class Seq(Expr):
    first: Expr
    second: Expr
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class LetDef:
    """A `let` definition, either top-level or the head of a let-in."""

    is_rec: bool
    name: str
    params: list  # (name, Ty)
    ret: Optional[Ty]
    body: Expr
    spec: Optional[Spec] = None
    loc: Optional[Loc] = _meta()

    def arrow_ty(self) -> Ty:
        tys = [t for _, t in self.params] + [self.ret]
        return arrow(*tys)


@dataclass
class LetIn(Expr):
    defn: LetDef
    body: Expr
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class Match(Expr):
    scrutinee: Expr
    arms: list  # (Pattern, Expr)
    absurd: bool = False  # generated wildcard-absurd arm present
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class Absurd(Expr):
    """Body of a generated unreachable match arm."""

    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class If(Expr):
    cond: Expr
    then: Expr
    els: Expr
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class Lambda(Expr):
    spec: Optional[Spec]
    params: list  # (name, Ty)
    ret: Ty
    body: Expr
    # earlier parameters of the surface lambda this one was split from,
    # in declaration order; drives capture ordering
    chain: list = field(default_factory=list, compare=False, repr=False)
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


@dataclass
class App(Expr):
    fn: Expr
    arg: Expr
    ty: Optional[Ty] = _meta()
    loc: Optional[Loc] = _meta()


# ---------------------------------------------------------------------------
# Top-level items and programs


@dataclass
class TypeDecl:
    name: str
    variants: Optional[list] = None  # (ctor, [field Ty])
    record: Optional[list] = None  # (field, Ty)
    alias: Optional[Ty] = None
    loc: Optional[Loc] = _meta()


@dataclass
class LemmaDecl:
    name: str
    formula: Formula
    loc: Optional[Loc] = _meta()


@dataclass
class ExprStmt:
    expr: Expr
    loc: Optional[Loc] = _meta()


TopLevel = Union[TypeDecl, LetDef, LemmaDecl, ExprStmt]


@dataclass
class LogicalDecl:
    """Prelude signature of a logical function/predicate, optionally defined.

    A declaration without a body is uninterpreted; with a body it is a pure
    recursive definition written in the expression language.
    """

    name: str
    params: list  # (name, Ty)
    ret: Ty  # TBool for predicates
    body: Optional[Expr] = None
    is_predicate: bool = False
    loc: Optional[Loc] = _meta()


@dataclass
class Program:
    prelude: list = field(default_factory=list)  # LogicalDecl
    items: list = field(default_factory=list)  # TopLevel


# ---------------------------------------------------------------------------
# Free variables

BINOP_RESULT = {
    "+": INT,
    "-": INT,
    "*": INT,
    "/": INT,
    "&&": BOOL,
    "||": BOOL,
    "=": BOOL,
    "<": BOOL,
    "<=": BOOL,
    ">": BOOL,
    ">=": BOOL,
}


def free_vars(e: Expr) -> list[tuple[str, Ty]]:
    """Free variables of a typed expression, each with its resolved type,
    ordered by first free occurrence."""
    out: dict[str, Ty] = {}

    def go(e, bound: frozenset):
        if isinstance(e, Var):
            if e.name not in bound and e.name not in out:
                out[e.name] = e.ty
        elif isinstance(e, (UnitLit, IntLit, BoolLit, NilLit, Absurd)):
            pass
        elif isinstance(e, ConstructorApp):
            for a in e.args:
                go(a, bound)
        elif isinstance(e, TupleE):
            for a in e.items:
                go(a, bound)
        elif isinstance(e, BinOp):
            go(e.left, bound)
            go(e.right, bound)
        elif isinstance(e, Cons):
            go(e.head, bound)
            go(e.tail, bound)
        elif isinstance(e, Seq):
            go(e.first, bound)
            go(e.second, bound)
        elif isinstance(e, LetIn):
            d = e.defn
            inner = bound | {n for n, _ in d.params}
            if d.is_rec:
                inner = inner | {d.name}
            go(d.body, inner)
            go(e.body, bound | {d.name})
        elif isinstance(e, Match):
            go(e.scrutinee, bound)
            for pat, body in e.arms:
                go(body, bound | {n for n, _ in pattern_vars(pat)})
        elif isinstance(e, If):
            go(e.cond, bound)
            go(e.then, bound)
            go(e.els, bound)
        elif isinstance(e, Lambda):
            go(e.body, bound | {n for n, _ in e.params})
        elif isinstance(e, App):
            go(e.fn, bound)
            go(e.arg, bound)
        else:
            raise AssertionError(f"unhandled expr {e!r}")

    go(e, frozenset())
    return list(out.items())


# ---------------------------------------------------------------------------
# Currying normalization


def normalize_curry(e: Expr) -> Expr:
    """Split every multi-parameter lambda into nested unary lambdas.

    The outermost lambda keeps the first parameter; the attached spec stays
    on the innermost one.  Inner lambdas remember the earlier parameters of
    their chain, which later fixes the capture order of their sites.
    """

    def split(lam: Lambda) -> Lambda:
        body = go(lam.body)
        if len(lam.params) <= 1:
            return Lambda(lam.spec, list(lam.params), lam.ret, body,
                          chain=list(lam.chain), ty=lam.ty, loc=lam.loc)
        params = list(lam.params)
        inner = Lambda(lam.spec, [params[-1]], lam.ret, body,
                       chain=list(lam.chain) + params[:-1], loc=lam.loc)
        ret = lam.ret
        for i in range(len(params) - 2, 0, -1):
            ret = TArrow(params[i + 1][1], ret)
            inner = Lambda(None, [params[i]], ret, inner,
                           chain=list(lam.chain) + params[:i], loc=lam.loc)
        ret = TArrow(params[1][1], ret)
        return Lambda(None, [params[0]], ret, inner,
                      chain=list(lam.chain), ty=lam.ty, loc=lam.loc)

    def go(e):
        if isinstance(e, Lambda):
            return split(e)
        if isinstance(e, (UnitLit, Var, IntLit, BoolLit, NilLit, Absurd)):
            return e
        if isinstance(e, ConstructorApp):
            return ConstructorApp(e.name, [go(a) for a in e.args], ty=e.ty, loc=e.loc)
        if isinstance(e, TupleE):
            return TupleE([go(a) for a in e.items], ty=e.ty, loc=e.loc)
        if isinstance(e, BinOp):
            return BinOp(e.op, go(e.left), go(e.right), ty=e.ty, loc=e.loc)
        if isinstance(e, Cons):
            return Cons(go(e.head), go(e.tail), ty=e.ty, loc=e.loc)
        if isinstance(e, Seq):
            return Seq(go(e.first), go(e.second), ty=e.ty, loc=e.loc)
        if isinstance(e, LetIn):
            d = e.defn
            nd = LetDef(d.is_rec, d.name, list(d.params), d.ret, go(d.body),
                        spec=d.spec, loc=d.loc)
            return LetIn(nd, go(e.body), ty=e.ty, loc=e.loc)
        if isinstance(e, Match):
            return Match(go(e.scrutinee), [(p, go(b)) for p, b in e.arms],
                         absurd=e.absurd, ty=e.ty, loc=e.loc)
        if isinstance(e, If):
            return If(go(e.cond), go(e.then), go(e.els), ty=e.ty, loc=e.loc)
        if isinstance(e, App):
            return App(go(e.fn), go(e.arg), ty=e.ty, loc=e.loc)
        raise AssertionError(f"unhandled expr {e!r}")

    return go(e)


def normalize_program(p: Program) -> Program:
    items = []
    for it in p.items:
        if isinstance(it, LetDef):
            items.append(LetDef(it.is_rec, it.name, list(it.params), it.ret,
                                normalize_curry(it.body), spec=it.spec, loc=it.loc))
        elif isinstance(it, ExprStmt):
            items.append(ExprStmt(normalize_curry(it.expr), loc=it.loc))
        else:
            items.append(it)
    return Program(prelude=list(p.prelude), items=items)


def all_identifiers(p: Program) -> set[str]:
    """Every identifier occurring anywhere in the program; used to keep
    generated names collision-free."""
    names: set[str] = set()

    def ty_names(t):
        if isinstance(t, TNamed):
            names.add(t.name)
            for a in t.args:
                ty_names(a)
        elif isinstance(t, TArrow):
            ty_names(t.param)
            ty_names(t.result)
        elif isinstance(t, TTuple):
            for a in t.items:
                ty_names(a)

    def pat(p):
        if isinstance(p, PVar):
            names.add(p.name)
        elif isinstance(p, PCons):
            pat(p.head)
            pat(p.tail)
        elif isinstance(p, PConstr):
            names.add(p.name)
            for q in p.args:
                pat(q)
        elif isinstance(p, PTuple):
            for q in p.items:
                pat(q)

    def form(f):
        if isinstance(f, FVar):
            names.add(f.name)
        elif isinstance(f, (FConstr, FLogicApp)):
            names.add(f.name)
            for a in f.args:
                form(a)
        elif isinstance(f, (FArith, Eq, Lt, Le, And, Or, Implies)):
            form(f.left)
            form(f.right)
        elif isinstance(f, FTuple):
            for a in f.items:
                form(a)
        elif isinstance(f, Not):
            form(f.body)
        elif isinstance(f, Forall):
            for n, t in f.binders:
                names.add(n)
                if t is not None:
                    ty_names(t)
            form(f.body)
        elif isinstance(f, PostMeta):
            form(f.fn)
            ty_names(f.fn_ty)
            for a in f.args:
                form(a)
            form(f.result)
        elif isinstance(f, FLet):
            names.add(f.name)
            form(f.value)
            form(f.body)
        elif isinstance(f, FMatch):
            form(f.scrutinee)
            for p_, b in f.arms:
                pat(p_)
                form(b)

    def spec(s):
        if s is None:
            return
        names.update(s.result_names)
        names.update(s.arg_names)
        for f in s.requires + s.ensures:
            form(f)

    def expr(e):
        if isinstance(e, Var):
            names.add(e.name)
        elif isinstance(e, ConstructorApp):
            names.add(e.name)
            for a in e.args:
                expr(a)
        elif isinstance(e, TupleE):
            for a in e.items:
                expr(a)
        elif isinstance(e, BinOp):
            expr(e.left)
            expr(e.right)
        elif isinstance(e, Cons):
            expr(e.head)
            expr(e.tail)
        elif isinstance(e, Seq):
            expr(e.first)
            expr(e.second)
        elif isinstance(e, LetIn):
            letdef(e.defn)
            expr(e.body)
        elif isinstance(e, Match):
            expr(e.scrutinee)
            for p_, b in e.arms:
                pat(p_)
                expr(b)
        elif isinstance(e, If):
            expr(e.cond)
            expr(e.then)
            expr(e.els)
        elif isinstance(e, Lambda):
            for n, t in e.params:
                names.add(n)
                ty_names(t)
            ty_names(e.ret)
            spec(e.spec)
            expr(e.body)
        elif isinstance(e, App):
            expr(e.fn)
            expr(e.arg)

    def letdef(d):
        names.add(d.name)
        for n, t in d.params:
            names.add(n)
            ty_names(t)
        if d.ret is not None:
            ty_names(d.ret)
        spec(d.spec)
        expr(d.body)

    for decl in p.prelude:
        names.add(decl.name)
        for n, t in decl.params:
            names.add(n)
            ty_names(t)
        ty_names(decl.ret)
        if decl.body is not None:
            expr(decl.body)
    for it in p.items:
        if isinstance(it, TypeDecl):
            names.add(it.name)
            for c, tys in it.variants or []:
                names.add(c)
                for t in tys:
                    ty_names(t)
            for fname, t in it.record or []:
                names.add(fname)
                ty_names(t)
            if it.alias is not None:
                ty_names(it.alias)
        elif isinstance(it, LetDef):
            letdef(it)
        elif isinstance(it, LemmaDecl):
            names.add(it.name)
            form(it.formula)
        elif isinstance(it, ExprStmt):
            expr(it.expr)
    return names
