from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from generators import random_problem
from svccompose.errors import InstanceTooLargeError, NotApplicableError, UnboundVariableError
from svccompose.logic import Atom, parse_atoms
from svccompose.planner import (
    Action,
    Domain,
    Operator,
    Plan,
    Problem,
    apply,
    execute,
    ground,
    ground_domain,
    is_applicable,
    oracle_solve,
    solve,
    validate_plan,
)

A = parse_atoms

MOVE = Operator("move", ("?a", "?b"), A(["at(?a)"]), frozenset(), A(["at(?b)"]), A(["at(?a)"]))


def op(name, params=(), pre=(), neg=(), add=(), dele=()):
    return Operator(name, tuple(params), A(pre), A(neg), A(add), A(dele))


def test_is_applicable():
    a = Action(op("go", pre=["at(Lyon)"]))
    assert is_applicable(a, A(["at(Lyon)"]))
    assert not is_applicable(a, A(["at(Paris)"]))
    b = Action(op("pay", neg=["paid(t1)"]))
    assert not is_applicable(b, A(["paid(t1)"]))
    with pytest.raises(UnboundVariableError):
        is_applicable(Action(MOVE, ("Lyon", "?b")), A(["at(Lyon)"]))


def test_apply():
    s = A(["at(Lyon)"])
    assert apply(Action(MOVE, ("Lyon", "Paris")), s) == A(["at(Paris)"])
    assert s == A(["at(Lyon)"])
    assert apply(Action(op("noop")), s) == s
    assert apply(Action(op("again", add=["at(Lyon)"])), s) == s
    with pytest.raises(NotApplicableError):
        apply(Action(MOVE, ("Paris", "Lyon")), s)


def test_ground_counts():
    assert len(ground(op("one", ["?x"], add=["p(?x)"]), {"a", "b", "c"})) == 3
    assert len(ground(op("none", add=["p"]), {"a", "b", "c"})) == 1
    assert len(ground(op("two", ["?x", "?y"], add=["p(?x,?y)"]), {"a", "b"})) == 4


@given(st.integers(0, 3), st.integers(1, 4))
def test_ground_count_is_power(arity, n):
    params = [f"?v{i}" for i in range(arity)]
    o = Operator("o", tuple(params), frozenset(), frozenset(), frozenset({Atom("p", tuple(params))}))
    assert len(ground(o, {f"k{i}" for i in range(n)})) == n ** arity


def test_operator_rejects_free_variables():
    with pytest.raises(UnboundVariableError):
        op("bad", ["?x"], pre=["p(?y)"])


def test_operator_dict_round_trip():
    assert Operator.from_dict(MOVE.to_dict()) == MOVE


def test_ground_domain_is_sorted():
    dom = Domain((op("zeta", ["?x"], add=["p(?x)"]), MOVE))
    acts = ground_domain(dom, {"b", "a"})
    assert acts == sorted(acts)
    assert [str(a) for a in acts[:2]] == ["move(a,a)", "move(a,b)"]


def test_domain_rejects_duplicate_operators():
    with pytest.raises(ValueError):
        Domain((MOVE, MOVE))


def test_problem_requires_ground_atoms():
    with pytest.raises(UnboundVariableError):
        Problem(A(["at(?x)"]), frozenset())


def test_problem_from_json():
    p = Problem.from_json(json.dumps({"initial": ["at(Lyon)"], "goal": ["at(Paris)"],
                                      "constants": ["Rome"]}), Domain((MOVE,)))
    assert p.constants == {"Lyon", "Paris", "Rome"}
    assert solve(p, 3).names() == ["move(Lyon,Paris)"]


TRAVEL_PLAN = ["ReserveFlight(Lyon,Paris)", "Pay(Lyon,Paris)",
               "ReserveFlight(Paris,Tokyo)", "Pay(Paris,Tokyo)"]


def test_solve_travel(travel_problem):
    plan = solve(travel_problem, 6)
    assert plan.names() == TRAVEL_PLAN
    assert validate_plan(travel_problem, plan)


def test_solve_trivial_cases(travel_domain):
    p = Problem(A(["at(Lyon)"]), A(["at(Lyon)"]), travel_domain)
    assert solve(p, 3) == Plan(())
    q = Problem(A(["at(Lyon)"]), A(["teleported(Lyon)"]), travel_domain)
    assert solve(q, 5) is None
    with pytest.raises(ValueError):
        solve(p, 0)


def test_validate_plan(travel_problem):
    plan = solve(travel_problem, 6)
    assert validate_plan(travel_problem, plan)
    swapped = Plan((plan[2], plan[1], plan[0], plan[3]))
    assert not validate_plan(travel_problem, swapped)
    assert execute(travel_problem, swapped) is None
    done = Problem(A(["at(Lyon)"]), A(["at(Lyon)"]))
    assert validate_plan(done, Plan(()))
    assert not validate_plan(travel_problem, Plan(plan.steps[:3]))


def test_oracle_guards():
    wide = Domain((op("w", ["?x", "?y", "?z"], add=["p(?x,?y,?z)"]),))
    consts = {"a", "b", "c", "d"}  # 64 actions: allowed
    assert oracle_solve(Problem(frozenset(), A(["p(a,b,c)"]), wide, consts), 1) is not None
    extra = Domain(wide.operators + (op("v", add=["q"]),))
    with pytest.raises(InstanceTooLargeError):
        oracle_solve(Problem(frozenset(), A(["q"]), extra, consts), 1)
    with pytest.raises(InstanceTooLargeError):
        oracle_solve(Problem(frozenset(), A(["q"]), Domain((op("v", add=["q"]),))), 7)
    none = Problem(frozenset(), A(["r"]), Domain((op("v", add=["q"]),)))
    assert oracle_solve(none, 6) is None


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_solve_agrees_with_oracle(seed):
    p = random_problem(random.Random(seed))
    fast, slow = solve(p, 6), oracle_solve(p, 6)
    assert (fast is None) == (slow is None)
    if fast is not None:
        assert validate_plan(p, fast) and validate_plan(p, slow)
        # both return the lexicographically first shortest plan
        assert fast == slow


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_apply_laws(seed):
    rng = random.Random(seed)
    p = random_problem(rng)
    s = p.initial
    for a in ground_domain(p.domain, p.constants):
        if is_applicable(a, s):
            before = frozenset(s)
            t = apply(a, s)
            assert s == before
            assert a.add <= t
            assert (t & a.delete) <= a.add
