from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from svccompose.logic import Atom, constants_of, is_variable, parse_atom, parse_atoms


def test_parse_forms_agree():
    assert parse_atom("at(Lyon)") == Atom("at", ("Lyon",))
    assert parse_atom(["at", "Lyon"]) == Atom("at", ("Lyon",))
    assert parse_atom(Atom("at", ("Lyon",))) == Atom("at", ("Lyon",))
    assert parse_atom("funds-ok") == Atom("funds-ok")
    assert parse_atom(" flight( Lyon , Paris ) ") == Atom("flight", ("Lyon", "Paris"))


@pytest.mark.parametrize("bad", ["", "(x)", [], [1, 2]])
def test_parse_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_atom(bad)


def test_variables_and_substitution():
    a = parse_atom("flight(?f,Paris)")
    assert not a.is_ground
    assert a.variables() == ["?f"]
    assert a.substitute({"?f": "Lyon"}) == parse_atom("flight(Lyon,Paris)")
    assert is_variable("?x") and not is_variable("x")
    assert constants_of(parse_atoms(["at(?x)", "flight(Lyon,Paris)"])) == {"Lyon", "Paris"}


names = st.text(alphabet="abcdefgh-", min_size=1, max_size=6).filter(lambda s: s[0] != "-")


@given(names, st.lists(names, max_size=3))
def test_str_round_trips(pred, args):
    a = Atom(pred, tuple(args))
    assert parse_atom(str(a)) == a
    assert parse_atom(a.to_json()) == a
