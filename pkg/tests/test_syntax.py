import random

import pytest
from hypothesis import given, settings, strategies as st

from gstl.algebra import IaRelation, TimeInterval
from gstl.errors import AritySyntaxError, GstlSyntaxError, StratificationError, UnknownNode
from gstl.model import build_model
from gstl.syntax import (
    EXISTS, FORALL, TRUE, Always, And, Atom, CaPattern, Child, Const, Eventually, Iff, Implies,
    Neighbor, Not, Or, Parent, SAnd, SOr, Term, TheorySet, Until, atoms_of, dump_theory,
    expand_quantified, has_quantifier, is_stratified, lift, load_theory, lower, parse, parse_term,
    subterms, to_text, to_unicode,
)

from oracles import rand_formula, rand_spatial

A = lambda n: Term(Atom(n))
WILD = CaPattern()


def test_phi1_ast():
    f = parse("C[exists](hand & N[exists]<*,*,*> cup)")
    assert f == Term(Child(EXISTS, SAnd(Atom("hand"), Neighbor(EXISTS, WILD, Atom("cup")))))


def test_phi4_shape():
    f = parse("G[10,20] p U{o}[15,20] G[15,25] q")
    assert f == Until("o", TimeInterval(15, 20), Always(TimeInterval(10, 20), A("p")),
                      Always(TimeInterval(15, 25), A("q")))


@pytest.mark.parametrize("text", ["P[exists](F[0,1] a)", "C[u] (a & G[0,2] b)",
                                  "N[forall]<*,*,*> !(a U{m} b)"])
def test_stratification_error(text):
    with pytest.raises(StratificationError):
        parse(text)


@pytest.mark.parametrize("text", ["a U{m}[1,2] b", "a U{o} b", "a U{s}[0,1] b"])
def test_arity_error(text):
    with pytest.raises(AritySyntaxError):
        parse(text)


def test_syntax_error_position():
    with pytest.raises(GstlSyntaxError) as ei:
        parse("a &\n  (b | )")
    assert (ei.value.line, ei.value.column) == (2, 8)


@pytest.mark.parametrize("text", ["", "a b", "G[3,1] a", "N[exists]<x,*,*> a", "(a", "a U{q}[1,2] b",
                                  "a U{o}[1,inf] b"])
def test_rejects(text):
    with pytest.raises(GstlSyntaxError):
        parse(text)


def test_precedence():
    assert parse("!a & b | c -> d <-> e") == Iff(
        Implies(Or(And(Not(A("a")), A("b")), A("c")), A("d")), A("e"))
    assert parse("a -> b -> c") == Implies(A("a"), Implies(A("b"), A("c")))
    assert parse("a & b U{o}[1,2] c") == And(A("a"), Until("o", TimeInterval(1, 2), A("b"), A("c")))
    assert parse("G[0,1] a & b") == And(Always(TimeInterval(0, 1), A("a")), A("b"))


def test_operator_letters_as_atoms():
    assert parse("G & U & F") == And(And(A("G"), A("U")), A("F"))


def test_inverse_until_swaps():
    assert parse("a U{o^-1}[1,2] b") == parse("b U{o}[1,2] a")


def test_unbounded_and_constants():
    f = parse("G[0,inf] !(true & x)")
    assert f.interval == TimeInterval(0, None)
    assert f.body == Not(And(TRUE, A("x")))


def test_spatial_implication_desugared():
    assert parse_term("P[exists] (a -> b)") == Parent(EXISTS, parse_term("!a | b"))
    assert isinstance(parse_term("!a | b"), SOr)


def test_pattern_and_scope_forms():
    f = parse("N[u1, u2]<b, o^-1, *> x")
    assert f.term.scope == ("u1", "u2")
    assert f.term.pattern == CaPattern(IaRelation("b"), IaRelation("o", True), None)
    assert str(f.term.pattern) == "<b,o^-1,*>"


def test_print_examples():
    assert to_text(Atom("cup")) == "cup"
    assert to_text(And(A("a"), A("b"))) == "(a & b)"
    assert to_text(parse("a U{m} b")) == "(a U{m} b)"
    assert "□" in to_unicode(parse("G[0,1] a")) and "∃" in to_unicode(parse("C[exists] a"))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip(seed):
    rng = random.Random(seed)
    f = rand_formula(rng, ["a", "b", "cup"], rng.randint(0, 5), unbounded=True)
    text = to_text(f)
    assert parse(text) == f
    assert to_text(parse(text)) == text
    assert is_stratified(f)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_injected_temporal_is_rejected(seed):
    rng = random.Random(seed)
    t = rand_spatial(rng, ["a", "b"], 2)
    op = rng.choice(["P[exists]", "C[forall]", "N[exists]<*,*,*>", "P[x,y]"])
    tmp = rng.choice(["G[0,1]", "F[1,2]"])
    with pytest.raises(StratificationError):
        parse(f"{op} ({to_text(t)} & {tmp} {to_text(t)})")


def test_lift_lower_inverse():
    t = parse_term("P[exists] (a & !b | c)")
    assert lower(lift(t)) == t
    with pytest.raises(StratificationError):
        lower(parse("G[0,1] a"))


def test_atoms_and_subterms():
    f = parse("G[0,1] (a & C[exists] b) | c")
    assert atoms_of(f) == {"a", "b", "c"}
    assert any(isinstance(n, Child) for n in subterms(f))


# --- quantifier expansion --------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny():
    return build_model("""[layer]
p1 p
p2 p
[layer]
v v 0 1 0 1 0 1
w w 5 6 0 1 0 1
c c 0 1 0 1 1 2
[layer]
k k
[parents]
p1 v
p2 v
p2 w
p2 c
v k
""")


def test_expand_exists_is_conjunction(tiny):
    got = expand_quantified(parse_term("P[exists] a"), tiny, "v")
    assert got == SAnd(Parent(("p1",), Atom("a")), Parent(("p2",), Atom("a")))


def test_expand_forall_singleton(tiny):
    assert expand_quantified(parse_term("C[forall] a"), tiny, "v") == Child(("k",), Atom("a"))


def test_expand_isolated_neighbor(tiny):
    assert expand_quantified(parse_term("N[exists]<*,*,*> a"), tiny, "w") == TRUE
    assert expand_quantified(parse_term("N[forall]<*,*,*> a"), tiny, "w") == Const(False)


def test_expand_explicit_scope_intersects(tiny):
    got = expand_quantified(parse_term("P[p1, w] a"), tiny, "v")
    assert got == Parent(("p1",), Atom("a"))
    with pytest.raises(UnknownNode):
        expand_quantified(parse_term("P[zz] a"), tiny, "v")


def test_expand_nested_removes_quantifiers(tiny):
    got = expand_quantified(parse_term("P[exists] (a & C[forall] N[exists]<*,*,*> b)"), tiny, "v")
    assert not has_quantifier(got)
    assert isinstance(got, SAnd)


def test_theory_files():
    text = """# comment
phi1: a &
      b
phi2: G[0,2] c  # trailing
"""
    sigma = load_theory(text)
    assert sigma.names() == ["phi1", "phi2"]
    assert sigma["phi1"] == And(A("a"), A("b"))
    assert load_theory(dump_theory(sigma)).items == sigma.items
    with pytest.raises(ValueError):
        TheorySet((("x", TRUE), ("x", TRUE)))
    with pytest.raises(GstlSyntaxError):
        load_theory("no colon here")


def test_eventually_primitive():
    assert parse("F[1,3] a") == Eventually(TimeInterval(1, 3), A("a"))
