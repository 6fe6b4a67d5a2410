from __future__ import annotations

from pathlib import Path

import pytest

from svccompose.agents import ManagerAgent
from svccompose.logic import parse_atoms
from svccompose.planner import Domain, Problem
from svccompose.service_model import parse_service_description

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

AIRWAYS_KB = parse_atoms(["flight(Lyon,Paris)", "flight(Paris,Tokyo)",
                          "price(Lyon,Paris,150)", "price(Paris,Tokyo,645)"])
BANK_KB = parse_atoms(["funds-ok", "paid-through(Lyon)"])


def load_description(*parts: str):
    return parse_service_description((SCENARIOS.joinpath(*parts)).read_text())


@pytest.fixture
def travel_domain() -> Domain:
    air = load_description("travel", "airways.json")
    bank = load_description("travel", "bank.json")
    dom = Domain()
    for d in (air, bank):
        dom = dom.merged(ManagerAgent.from_descriptions("x", "x", [d]).domain)
    return dom


@pytest.fixture
def travel_problem(travel_domain) -> Problem:
    """Pooled view: every agent's private facts are part of the initial state."""
    return Problem(parse_atoms(["at(Lyon)"]) | AIRWAYS_KB | BANK_KB,
                   parse_atoms(["at(Tokyo)", "paid-through(Tokyo)"]), travel_domain)


@pytest.fixture
def travel_agents():
    air = load_description("travel", "airways.json")
    bank = load_description("travel", "bank.json")
    return (ManagerAgent.from_descriptions("Airways", "air-transport", [air], AIRWAYS_KB),
            ManagerAgent.from_descriptions("Bank", "payment", [bank], BANK_KB))


@pytest.fixture
def bravoair():
    return load_description("bravoair", "bravoair.json")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
