import random

import pytest
from hypothesis import given, settings, strategies as st

from gstl.errors import MissingVariable
from gstl.model import Interpretation, Signal, build_model, single_node_model
from gstl.schemas import SCHEMA_IDS, SCHEMAS, apply_schema, get_schema, instantiate_schema, match_instance
from gstl.semantics import EvalContext, evaluate
from gstl.syntax import parse, parse_term

from oracles import rand_substitution, schema_trial

SOUND = [s for s in SCHEMA_IDS if s.startswith("P") or s in ("T1", "T2", "T3")]


def test_catalogue():
    assert len(SCHEMAS) == 21
    assert get_schema("t4").id == "T4"
    with pytest.raises(KeyError):
        get_schema("Q1")


def test_instantiate_p4():
    f = instantiate_schema("P4", {"phi1": parse("a"), "phi2": parse("b | c")})
    assert f == parse("a -> ((b | c) -> a)")


def test_instantiate_t1():
    f = instantiate_schema("T1", {"I": "[0,3]", "phi1": parse("a"), "phi2": parse("b")})
    assert f == parse("G[0,3] (a -> b) -> (G[0,3] a -> G[0,3] b)")


def test_instantiate_s1():
    f = instantiate_schema("S1", {"A": "exists", "phi1": parse("a"), "phi2": parse("b")})
    assert f == parse("P[exists] (a & b) <-> P[exists] a & P[exists] b")


def test_instantiate_point_until_drops_interval():
    f = instantiate_schema("T5", {"rel": "m", "I": "[1,2]", "phi1": parse("a"),
                                  "phi2": parse("b"), "phi3": parse("c")})
    assert f == parse("a U{m} (b & c) <-> (a U{m} b) & (a U{m} c)")


def test_t3_chain():
    f = instantiate_schema("T3", {"I": (0, 2), "phi1": parse("a"), "phi2": parse("b")})
    assert f == parse("(F[0,2] (a & b) -> F[0,2] a & F[0,2] b) & (F[0,2] a & F[0,2] b -> F[0,2] (a | b))")


def test_missing_variable():
    with pytest.raises(MissingVariable):
        instantiate_schema("T1", {"phi1": parse("a"), "phi2": parse("b")})


def test_apply_t2():
    assert apply_schema("T2", parse("G[1,2] (a & b)")) == parse("G[1,2] a & G[1,2] b")
    assert apply_schema("T2", parse("G[1,2] a & G[1,2] b"), reverse=True) == parse("G[1,2] (a & b)")
    assert apply_schema("T2", parse("F[1,2] (a & b)")) is None


def test_apply_s5_on_terms():
    got = apply_schema("S5", parse_term("N[exists]<*,*,*> (a & b)"))
    assert got == parse_term("N[exists]<*,*,*> a & N[exists]<*,*,*> b")


def test_apply_p1_and_p3():
    assert apply_schema("P1", parse("!!a")) == parse("a")
    assert apply_schema("P1", parse("a"), reverse=True) is None
    assert apply_schema("P3", parse("a"), {"i": 2, "phi1": parse("z")}) == parse("z | a")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from(SCHEMA_IDS))
def test_match_instance_round_trip(seed, sid):
    rng = random.Random(seed)
    sub = rand_substitution(rng, sid, ["a", "b"], ("x", "y"))
    f = instantiate_schema(sid, sub)
    found = match_instance(sid, f)
    assert found is not None
    assert instantiate_schema(sid, found) == f


def test_match_instance_rejects():
    assert match_instance("P4", parse("a -> (b -> b)")) is None
    assert match_instance("T1", parse("G[0,1] a")) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from(SOUND))
def test_sound_schemas_hold(seed, sid):
    inst, holds = schema_trial(random.Random(seed), sid)
    assert holds, inst


# --- known counterexamples --------------------------------------------------------
# With one-step boundaries, ``not (a & b)`` at the before-step is weaker than
# ``not a and not b``, and a quantified scope over two nodes does not commute
# with the connective it distributes over.

def _single(h, rows):
    vals = {("v", t): {n: bool(x) for n, x in zip("abc", row)} for t, row in enumerate(rows)}
    return EvalContext(single_node_model("v"), Signal(h, vals), Interpretation.booleans("abc"), "v")


def test_t4_boundary_counterexample():
    ctx = _single(3, [(1, 0, 0), (1, 1, 1), (0, 0, 0), (0, 0, 0)])
    inst = instantiate_schema("T4", {"rel": "e", "I": "[1,1]", "phi1": parse("a"),
                                     "phi2": parse("b"), "phi3": parse("c")})
    assert evaluate(ctx, inst.left)
    assert not evaluate(ctx, inst.right)


TWO_PARENTS = build_model("[layer]\np1 p\np2 p\n[layer]\nv v\n[parents]\np1 v\np2 v\n")


def _parents_ctx(a_on, b_on):
    vals = {(n, 0): {"a": n in a_on, "b": n in b_on} for n in ("p1", "p2", "v")}
    return EvalContext(TWO_PARENTS, Signal(0, vals), Interpretation.booleans("ab"), "v")


def test_s2_exists_counterexample():
    inst = instantiate_schema("S2", {"A": "exists", "phi1": parse("a"), "phi2": parse("b")})
    ctx = _parents_ctx({"p1"}, {"p2"})
    assert evaluate(ctx, inst.left) and not evaluate(ctx, inst.right)


def test_s1_forall_counterexample():
    inst = instantiate_schema("S1", {"A": "forall", "phi1": parse("a"), "phi2": parse("b")})
    ctx = _parents_ctx({"p1"}, {"p2"})
    assert not evaluate(ctx, inst.left) and evaluate(ctx, inst.right)


def test_s1_exists_holds_on_two_parents():
    inst = instantiate_schema("S1", {"A": "exists", "phi1": parse("a"), "phi2": parse("b")})
    for a_on in ({"p1"}, {"p1", "p2"}, set()):
        for b_on in ({"p2"}, {"p1", "p2"}):
            assert evaluate(_parents_ctx(a_on, b_on), inst)


TWO_NEIGHBORS = build_model("[layer]\nr r\n[layer]\nv v\nn1 n\nn2 n\n[parents]\nr v\nr n1\nr n2\n"
                            "[neighbors]\nv n1\nv n2\n")


@pytest.mark.parametrize("sid,scope", [("S5", "forall"), ("S6", "exists")])
def test_neighbor_schema_counterexamples(sid, scope):
    vals = {(n, 0): {"a": n == "n1", "b": n == "n2"} for n in TWO_NEIGHBORS.nodes}
    ctx = EvalContext(TWO_NEIGHBORS, Signal(0, vals), Interpretation.booleans("ab"), "v")
    inst = instantiate_schema(sid, {"A": scope, "R": "<*,*,*>", "phi1": parse("a"), "phi2": parse("b")})
    assert not evaluate(ctx, inst)
