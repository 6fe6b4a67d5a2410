from __future__ import annotations

import json
import shutil
from fractions import Fraction

import pytest

from conftest import SCENARIOS
from svccompose.errors import (
    CorruptTranscriptError,
    DanglingReferenceError,
    ScenarioIOError,
    SchemaError,
)
from svccompose.logic import parse_atoms
from svccompose.planner import Plan, Problem, validate_plan
from svccompose.runtime import (
    RunResult,
    Transcript,
    load_scenario,
    payment_total,
    replay,
    run,
)

TRAVEL = SCENARIOS / "travel" / "scenario.json"
FOUR = ["ReserveFlight(Lyon,Paris)", "Pay(Lyon,Paris)",
        "ReserveFlight(Paris,Tokyo)", "Pay(Paris,Tokyo)"]


@pytest.fixture
def travel_copy(tmp_path):
    """Editable copy of the travel scenario directory."""
    dst = tmp_path / "travel"
    shutil.copytree(SCENARIOS / "travel", dst)

    def edit(change):
        path = dst / "scenario.json"
        data = json.loads(TRAVEL.read_text())
        change(data)
        path.write_text(json.dumps(data))
        return path

    return edit


def test_load_travel():
    s = load_scenario(TRAVEL)
    assert [a.agent_id for a in s.registry.managers()] == ["Airways", "Bank"]
    assert s.seed == 7 and s.max_cycles == 32
    assert s.goal == parse_atoms(["at(Tokyo)", "paid-through(Tokyo)"])
    assert s.accounting == ("paid", "price")


def test_load_errors(tmp_path, travel_copy):
    with pytest.raises(ScenarioIOError):
        load_scenario(tmp_path / "absent.json")
    with pytest.raises(ScenarioIOError):
        load_scenario(travel_copy(lambda d: d.update(ontology="missing.json")))
    with pytest.raises(DanglingReferenceError):
        load_scenario(travel_copy(lambda d: d["table"][0]["agents"].append("Ghost")))
    with pytest.raises(DanglingReferenceError):
        load_scenario(travel_copy(lambda d: d["agents"][0].update(services=["Nope"])))
    with pytest.raises(DanglingReferenceError):
        load_scenario(travel_copy(lambda d: d["agents"][0].update(subontology="space")))
    with pytest.raises(SchemaError):
        load_scenario(travel_copy(lambda d: d.pop("table")))
    with pytest.raises(SchemaError):
        load_scenario(travel_copy(lambda d: d["agents"][0].update(kb=["flight(?x,Paris)"])))
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(SchemaError):
        load_scenario(bad)


def test_run_travel():
    result, transcript = run(load_scenario(TRAVEL))
    assert result.ok and result.plan.names() == FOUR
    assert result.total == 795
    s = load_scenario(TRAVEL)
    facts = set(s.initial)
    for a in s.registry.managers():
        facts |= a.kb
    domain = None
    from svccompose.agents import ManagerAgent

    for a in s.registry.managers():
        d = ManagerAgent.from_descriptions(a.agent_id, a.subontology,
                                           [s.registry.services[x] for x in a.services]).domain
        domain = d if domain is None else domain.merged(d)
    assert validate_plan(Problem(frozenset(facts), s.goal, domain), result.plan)
    final = transcript.records[-1]
    assert final["kind"] == "Result" and final["payload"]["final"] is True


def test_runs_are_deterministic():
    s = load_scenario(TRAVEL)
    a = run(s)[1].text()
    b = run(load_scenario(TRAVEL))[1].text()
    assert a == b
    assert run(s, seed=99)[0].plan == run(s)[0].plan


def test_no_agents(travel_copy):
    def strip(d):
        d["agents"] = []
        d["table"] = []

    result, transcript = run(load_scenario(travel_copy(strip)))
    assert not result.ok and result.reason == "no-agents"
    assert replay(transcript).reason == "no-agents"


def test_cycle_budget_failure(travel_copy):
    path = travel_copy(lambda d: d.update(maxCycles=1))
    result, transcript = run(load_scenario(path))
    assert not result.ok and result.reason == "cycle-budget-exhausted"
    assert replay(transcript) == result


def test_replay_round_trip(tmp_path):
    result, transcript = run(load_scenario(TRAVEL))
    assert replay(transcript) == result
    out = tmp_path / "t.jsonl"
    transcript.write(out)
    assert replay(Transcript.read(out)) == result
    assert replay(out.read_text()) == result


def test_replay_login():
    for name in ("scenario.json", "rejected.json"):
        result, transcript = run(load_scenario(SCENARIOS / "login" / name))
        assert replay(transcript) == result


def test_replay_rejects_damage():
    _, transcript = run(load_scenario(TRAVEL))
    lines = transcript.lines()
    with pytest.raises(CorruptTranscriptError):
        replay("")
    with pytest.raises(CorruptTranscriptError):
        replay(lines[:-3])
    gap = next(i for i, x in enumerate(lines) if '"Refinement"' in x)
    with pytest.raises(CorruptTranscriptError):
        replay(lines[:gap] + lines[gap + 1:])
    with pytest.raises(CorruptTranscriptError):
        replay(lines[:-1] + ["{oops"])
    tampered = [json.loads(x) for x in lines]
    for rec in tampered:
        if rec.get("kind") == "Result" and rec["payload"].get("final"):
            rec["payload"]["plan"] = rec["payload"]["plan"][:2]
    with pytest.raises(CorruptTranscriptError):
        replay([json.dumps(r) for r in tampered])


def test_result_dict_round_trip():
    result, _ = run(load_scenario(TRAVEL))
    assert RunResult.from_dict(result.to_dict()) == result
    assert RunResult.from_dict(RunResult(None, "no-plan").to_dict()) == RunResult(None, "no-plan")


def test_payment_total(travel_problem):
    from svccompose.planner import solve

    plan = solve(travel_problem, 6)
    facts = parse_atoms(["price(Lyon,Paris,150)", "price(Paris,Tokyo,645)"])
    assert payment_total(plan, facts) == 795
    assert payment_total(Plan(plan.steps[:2]), facts) == 150
    half = parse_atoms(["price(Lyon,Paris,10.5)"])
    assert payment_total(plan, half) == Fraction(21, 2)
