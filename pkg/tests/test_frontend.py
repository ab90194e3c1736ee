import pytest

from defun.errors import LexError, ParseError
from defun.frontend import parse_expr, parse_formula, parse_program
from defun.syntax import (
    And, App, BinOp, Cons, ConstructorApp, Eq, FConstr, FLogicApp, FVar,
    Forall, Implies, IntLit, Lambda, LemmaDecl, LetDef, LetIn, Lt, Match,
    Not, PConstr, PTuple, PostMeta, Seq, TArrow, TupleE, TypeDecl, Var,
    INT, BOOL,
)


class TestLexer:
    def test_type_variables_rejected(self):
        with pytest.raises(LexError):
            parse_program("let f (l : 'a list) : int = 0")

    def test_nested_comments_skipped(self):
        p = parse_program("(* a (* nested *) b *) let f (x : int) : int = x")
        assert len(p.items) == 1

    def test_spec_comment_is_not_plain_comment(self):
        p = parse_program(
            "let f (x : int) : int = x\n(*@ r = f x ensures r = x *)")
        assert p.items[0].spec is not None


class TestExpressions:
    def test_application_left_nested(self):
        e = parse_expr("f a b")
        assert isinstance(e, App) and isinstance(e.fn, App)

    def test_cmp_non_associative(self):
        with pytest.raises(ParseError):
            parse_expr("a < b < c")

    def test_gt_normalized_to_reversed_lt(self):
        e = parse_expr("a > b")
        assert isinstance(e, BinOp) and e.op == ">"

    def test_list_literal(self):
        e = parse_expr("[1;2]")
        assert isinstance(e, Cons) and e.head == IntLit(1)

    def test_negative_int(self):
        assert parse_expr("(-3)") == IntLit(-3)

    def test_constructor_tuple_splat(self):
        e = parse_expr("Sub (Const v, x)")
        assert isinstance(e, ConstructorApp)
        assert e.name == "Sub" and len(e.args) == 2

    def test_seq(self):
        assert isinstance(parse_expr("f x; g y"), Seq)

    def test_match_end_optional(self):
        src_with = "match l with | [] -> 0 | h :: t -> h end"
        src_without = "match l with | [] -> 0 | h :: t -> h"
        assert parse_expr(src_with) == parse_expr(src_without)


class TestLambdas:
    def test_attr_spec(self):
        e = parse_expr(
            "fun [@gospel {| ensures result = x |}] (x : int) : int -> x")
        assert isinstance(e, Lambda) and e.spec is not None
        assert e.spec.ensures and not e.spec.requires

    def test_unannotated_param_rejected(self):
        with pytest.raises(ParseError, match="annotated"):
            parse_expr("fun x -> x")

    def test_multi_param_lambda_normalized_at_parse(self):
        p = parse_program(
            "let g (f : int -> int -> int) : int = f 1 2\n"
            "let h (u : unit) : int = g (fun (x : int) (z : int) : int -> x)")
        lam = p.items[1].body.arg
        assert isinstance(lam, Lambda) and len(lam.params) == 1
        assert lam.body.chain == [("x", INT)]


class TestSpecs:
    def test_spec_block_attaches_to_previous_letdef(self):
        p = parse_program(
            "let f (x : int) : int = x\n"
            "(*@ r = f x\n      requires 0 <= x\n      ensures r = x *)")
        spec = p.items[0].spec
        assert spec.result_names == ["r"] and spec.arg_names == ["x"]
        assert len(spec.requires) == 1 and len(spec.ensures) == 1

    def test_multi_result_header(self):
        p = parse_program(
            "let f (x : int) : int * int = (x, x)\n"
            "(*@ a, b = f x ensures a = b *)")
        assert p.items[0].spec.result_names == ["a", "b"]

    def test_lemma_item(self):
        p = parse_program("(*@ lemma triv : forall n. n = n *)")
        lemma = p.items[0]
        assert isinstance(lemma, LemmaDecl) and lemma.name == "triv"

    def test_logical_function_and_predicate(self):
        p = parse_program(
            "(*@ function double (n : int) : int = n + n *)\n"
            "(*@ predicate pos (n : int) = 0 < n *)")
        assert [d.name for d in p.prelude] == ["double", "pos"]
        assert p.prelude[1].is_predicate and p.prelude[1].ret == BOOL


class TestFormulas:
    def test_forall_untyped_binder(self):
        f = parse_formula("forall n. n = n")
        assert isinstance(f, Forall) and f.binders[0][1] is None

    def test_forall_arrow_typed_binder(self):
        f = parse_formula("forall c : int -> int, x : int. true")
        assert f.binders[0][1] == TArrow(INT, INT)

    def test_implies_right_assoc(self):
        f = parse_formula("a = b -> b = c -> a = c")
        assert isinstance(f, Implies) and isinstance(f.right, Implies)

    def test_post_requires_ascription(self):
        f = parse_formula("post (k : int -> int) x r")
        assert isinstance(f, PostMeta) and f.fn_ty == TArrow(INT, INT)
        with pytest.raises(ParseError):
            parse_formula("post k x r")

    def test_ge_normalized(self):
        f = parse_formula("a >= b")
        assert isinstance(f, type(parse_formula("b <= a")))

    def test_constructor_application_curried(self):
        f = parse_formula("r = Sub (Const v) x")
        assert isinstance(f.right, FConstr)
        assert [type(a) for a in f.right.args] == [FConstr, FVar]

    def test_and_or_not(self):
        f = parse_formula("not (a = b) && (b = c || c = d)")
        assert isinstance(f, And) and isinstance(f.left, Not)


class TestLocations:
    def test_parse_error_located(self):
        with pytest.raises(ParseError) as exc:
            parse_program("let f (x : int) : int = = x")
        assert exc.value.loc.line == 1


class TestTypeDecls:
    def test_variant_decl(self):
        from defun.syntax import TNamed
        p = parse_program("type exp = Const of int | Sub of exp * exp")
        decl = p.items[0]
        assert isinstance(decl, TypeDecl)
        assert decl.variants == [("Const", [INT]),
                                 ("Sub", [TNamed("exp"), TNamed("exp")])]
