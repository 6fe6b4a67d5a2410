"""Scenario loading, the end-to-end pipeline, transcripts and replay.

A scenario is a JSON file naming an ontology, service descriptions, the
manager roster with private knowledge bases, the selection table and an XML
request. Relative paths resolve against the scenario file's directory.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from . import bus as kinds
from .agents import (
    DEFAULT_MAX_CYCLES,
    DEFAULT_PLAN_BOUND,
    Composer,
    Failure,
    ManagerAgent,
    RouteToComposer,
    SelectionTable,
    StorageBoard,
    gm_dispatch_atomic,
    gm_route,
    problem_from_description,
    rc_classify_service,
    rc_cross_xml,
    rc_produce_description,
)
from .bus import Bus, dumps
from .conjecture import Conjecture, is_solution, linearize
from .errors import (
    ComposeError,
    CorruptTranscriptError,
    DanglingReferenceError,
    NoAgentsError,
    ScenarioIOError,
    SchemaError,
)
from .logic import Atom, parse_atoms
from .ontology import Ontology
from .planner import Domain, Plan, Problem, validate_plan
from .service_model import ServiceDescription, parse_service_description, validate_against_subontology

log = logging.getLogger(__name__)

USER, GENERAL_MANAGER, COMPOSER = "user", "general-manager", "composer"
ROLES = ("manager",)


@dataclass(frozen=True)
class AgentSpec:
    agent_id: str
    role: str
    subontology: str
    services: tuple[str, ...]
    kb: frozenset[Atom] = frozenset()


@dataclass
class Registry:
    services: dict[str, ServiceDescription] = field(default_factory=dict)
    agents: dict[str, AgentSpec] = field(default_factory=dict)

    def managers(self) -> list[AgentSpec]:
        return [a for a in self.agents.values() if a.role == "manager"]


@dataclass
class Scenario:
    name: str
    ontology: Ontology
    registry: Registry
    table: SelectionTable
    request: str
    initial: frozenset[Atom] = frozenset()
    goal: frozenset[Atom] = frozenset()
    seed: int = 0
    max_cycles: int = DEFAULT_MAX_CYCLES
    plan_bound: int = DEFAULT_PLAN_BOUND
    max_steps: int | None = None
    accounting: tuple[str, str] | None = None


def _read(base: Path, rel: str) -> str:
    path = base / rel
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _need(data: Mapping, key: str, kind: type | tuple[type, ...]):
    if key not in data:
        raise SchemaError(f"missing {key!r}")
    if not isinstance(data[key], kind):
        raise SchemaError(f"{key!r} has the wrong type")
    return data[key]


def _atoms(items, where: str) -> frozenset[Atom]:
    try:
        atoms = parse_atoms(items)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc
    for a in atoms:
        if not a.is_ground:
            raise SchemaError(f"{where}: {a} is not ground")
    return atoms


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("scenario must be a JSON object")
    base = path.parent

    try:
        onto = Ontology.from_json(_read(base, _need(data, "ontology", str)))
    except ComposeError as exc:
        if isinstance(exc, ScenarioIOError):
            raise
        raise SchemaError(f"ontology: {exc}") from exc

    registry = Registry()
    for rel in _need(data, "services", list):
        desc = parse_service_description(_read(base, rel), onto)
        validate_against_subontology(desc, onto)
        if desc.service in registry.services:
            raise SchemaError(f"service {desc.service!r} defined twice")
        registry.services[desc.service] = desc

    for item in _need(data, "agents", list):
        if not isinstance(item, dict):
            raise SchemaError("agent entries must be objects")
        aid = _need(item, "id", str)
        role = item.get("role", "manager")
        if role not in ROLES:
            raise SchemaError(f"agent {aid}: unknown role {role!r}")
        sub = _need(item, "subontology", str)
        if sub not in onto.partitions:
            raise DanglingReferenceError(f"agent {aid}: unknown sub-ontology {sub!r}")
        services = tuple(item.get("services", ()))
        for s in services:
            if s not in registry.services:
                raise DanglingReferenceError(f"agent {aid}: unknown service {s!r}")
        if aid in registry.agents:
            raise SchemaError(f"agent {aid!r} listed twice")
        registry.agents[aid] = AgentSpec(aid, role, sub, services,
                                         _atoms(item.get("kb", ()), f"agent {aid} kb"))

    try:
        table = SelectionTable.from_list(_need(data, "table", list))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"selection table: missing {exc}") from exc
    except ValueError as exc:
        raise SchemaError(f"selection table: {exc}") from exc
    for row in table.rows:
        for a in row.agents:
            if a not in registry.agents:
                raise DanglingReferenceError(f"table row {row.group} names unknown agent {a!r}")
        if row.subontology not in onto.partitions:
            raise DanglingReferenceError(
                f"table row {row.group} names unknown sub-ontology {row.subontology!r}")

    problem = data.get("problem", {})
    accounting = data.get("accounting")
    max_steps = data.get("maxSteps")
    return Scenario(
        name=str(data.get("name", path.stem)),
        ontology=onto,
        registry=registry,
        table=table,
        request=_read(base, _need(data, "request", str)),
        initial=_atoms(problem.get("initial", ()), "problem.initial"),
        goal=_atoms(problem.get("goal", ()), "problem.goal"),
        seed=int(data.get("seed", 0)),
        max_cycles=int(data.get("maxCycles", DEFAULT_MAX_CYCLES)),
        plan_bound=int(data.get("planBound", DEFAULT_PLAN_BOUND)),
        max_steps=None if max_steps is None else int(max_steps),
        accounting=None if accounting is None else (accounting["effect"], accounting["price"]),
    )


# results and transcripts


@dataclass(frozen=True)
class RunResult:
    plan: Plan | None
    reason: str | None = None
    total: int | Fraction | None = None

    @property
    def ok(self) -> bool:
        return self.plan is not None

    def to_dict(self) -> dict:
        d: dict = {"status": "plan" if self.ok else "failure"}
        if self.plan is not None:
            d["plan"] = self.plan.to_list()
        if self.reason is not None:
            d["reason"] = self.reason
        if self.total is not None:
            d["total"] = str(self.total)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> RunResult:
        plan = Plan.from_list(d["plan"]) if "plan" in d else None
        total = d.get("total")
        return cls(plan, d.get("reason"), None if total is None else _number(total))


@dataclass(frozen=True)
class Transcript:
    records: tuple[dict, ...]

    def lines(self) -> list[str]:
        return [dumps(r) for r in self.records]

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str) -> Transcript:
        records = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptTranscriptError(f"line {n} is not JSON: {exc}") from exc
            if not isinstance(rec, dict) or "type" not in rec:
                raise CorruptTranscriptError(f"line {n} is not a transcript record")
            records.append(rec)
        return cls(tuple(records))

    @classmethod
    def read(cls, path: str | Path) -> Transcript:
        try:
            return cls.from_text(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ScenarioIOError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _number(text: str) -> int | Fraction:
    value = Fraction(text)
    return int(value) if value.denominator == 1 else value


def payment_total(plan: Iterable, facts: Iterable[Atom], effect: str = "paid",
                  price: str = "price") -> int | Fraction:
    """Sum ``price(args..., amount)`` over every ``effect(args...)`` the plan adds."""
    prices: dict[tuple[str, ...], Fraction] = {}
    for f in facts:
        if f.pred == price and f.args:
            prices[f.args[:-1]] = Fraction(f.args[-1])
    total = Fraction(0)
    for action in plan:
        for a in action.add:
            if a.pred == effect and a.args in prices:
                total += prices[a.args]
    return int(total) if total.denominator == 1 else total


def _code(exc: Exception) -> str:
    name = type(exc).__name__.removesuffix("Error")
    return re.sub(r"(?<!^)(?=[A-Z])", "-", name).lower()


# the pipeline


def _managers(scenario: Scenario) -> dict[str, ManagerAgent]:
    reg = scenario.registry
    return {
        a.agent_id: ManagerAgent.from_descriptions(
            a.agent_id, a.subontology, [reg.services[s] for s in a.services], a.kb,
            scenario.ontology, scenario.plan_bound)
        for a in reg.managers()
    }


def run(scenario: Scenario, *, seed: int | None = None,
        max_cycles: int | None = None) -> tuple[RunResult, Transcript]:
    seed = scenario.seed if seed is None else seed
    max_cycles = scenario.max_cycles if max_cycles is None else max_cycles
    bus = Bus(seed)
    bus.register(USER)
    bus.register(GENERAL_MANAGER)
    bus.register(COMPOSER)
    managers = _managers(scenario)
    for aid, agent in managers.items():
        bus.register(aid, agent.handle)

    try:
        result = _pipeline(scenario, bus, managers, max_cycles)
    except ComposeError as exc:
        log.info("run failed: %s", exc)
        result = RunResult(None, _code(exc))
    bus.take(GENERAL_MANAGER)
    bus.take(USER)
    kind = kinds.RESULT if result.ok else kinds.FAILURE
    bus.send(GENERAL_MANAGER, USER, kind, {"final": True, **result.to_dict()})
    return result, Transcript(tuple(bus.records))


def _pipeline(scenario: Scenario, bus: Bus, managers: Mapping[str, ManagerAgent],
              max_cycles: int) -> RunResult:
    onto = scenario.ontology
    instances = rc_cross_xml(scenario.request)
    kind = rc_classify_service(instances, onto)
    desc = rc_produce_description(instances, kind, onto, service=scenario.name,
                                  initial=scenario.initial, goal=scenario.goal)
    bus.send(USER, GENERAL_MANAGER, kinds.REQUEST,
             {"kind": kind, "description": desc.to_dict()})
    if not managers:
        raise NoAgentsError("the scenario has no manager agents")
    route = gm_route(desc, scenario.table)

    if not isinstance(route, RouteToComposer):
        outcome = gm_dispatch_atomic(desc, route.agent, bus, GENERAL_MANAGER)
        facts = managers[route.agent].kb
        if isinstance(outcome, Failure):
            return RunResult(None, outcome.reason)
        return RunResult(outcome, None, _total(scenario, outcome, facts))

    group = list(route.group)
    bus.send(GENERAL_MANAGER, COMPOSER, kinds.REQUEST,
             {"group": group, "maxCycles": max_cycles, "maxSteps": scenario.max_steps})
    composer = Composer(COMPOSER, max_cycles, scenario.max_steps, report_to=GENERAL_MANAGER)
    outcome = composer.run(problem_from_description(desc), group, bus)
    if isinstance(outcome, Failure):
        return RunResult(None, outcome.reason)
    facts = frozenset().union(*(managers[a].kb for a in group))
    pooled = Domain()
    for a in group:
        pooled = pooled.merged(managers[a].domain)
    check = Problem(frozenset(scenario.initial) | facts, scenario.goal, pooled)
    if not validate_plan(check, outcome):
        return RunResult(None, "invalid-plan")
    return RunResult(outcome, None, _total(scenario, outcome, facts))


def _total(scenario: Scenario, plan: Plan, facts: Iterable[Atom]):
    if scenario.accounting is None:
        return None
    return payment_total(plan, facts, *scenario.accounting)


# replay


def replay(transcript: Transcript | str | Iterable[str]) -> RunResult:
    """Re-derive a run's result from its messages alone, without planning.

    The composer's board is rebuilt from the recorded conjectures and checked
    against every recorded snapshot; the solution entry is linearized again
    and compared with the reported plan.
    """
    if isinstance(transcript, str):
        transcript = Transcript.from_text(transcript)
    elif not isinstance(transcript, Transcript):
        transcript = Transcript.from_text("\n".join(transcript))
    records = transcript.records
    if not records:
        raise CorruptTranscriptError("empty transcript")

    envelopes = [r for r in records if r.get("type") == "envelope"]
    for expected, env in enumerate(envelopes, 1):
        if env.get("seq") != expected:
            raise CorruptTranscriptError(f"expected seq {expected}, found {env.get('seq')}")
        if env.get("kind") not in kinds.KINDS:
            raise CorruptTranscriptError(f"unknown kind at seq {expected}")
    last = records[-1]
    if last.get("type") != "envelope" or not last.get("payload", {}).get("final"):
        raise CorruptTranscriptError("transcript is truncated: no final result")
    try:
        reported = RunResult.from_dict(last["payload"])
        derived = _rederive(records)
    except CorruptTranscriptError:
        raise
    except (KeyError, TypeError, ValueError, ComposeError) as exc:
        raise CorruptTranscriptError(f"unreadable record: {exc!r}") from exc
    if derived is not None and derived != reported.plan:
        raise CorruptTranscriptError("recorded messages do not lead to the reported plan")
    return reported


def _rederive(records: Iterable[dict]) -> Plan | None:
    board: StorageBoard | None = None
    early: list = []  # snapshots taken before the first broadcast
    max_steps = None
    solution = None
    atomic_plan = None
    for rec in records:
        if rec["type"] == "board":
            if board is None:
                early.append(rec["entries"])
                continue
            if board.snapshot() != rec["entries"]:
                raise CorruptTranscriptError(f"board snapshot for cycle {rec['cycle']} disagrees")
            continue
        kind, payload = rec["kind"], rec["payload"]
        if kind == kinds.REQUEST and rec["from"] == GENERAL_MANAGER:
            max_steps = payload.get("maxSteps")
        elif kind == kinds.INITIAL_CONJECTURE and board is None:
            board = StorageBoard()
            board.add(Conjecture.from_dict(payload["conjecture"]), rec["from"], 0)
            if any(e != board.snapshot() for e in early):
                raise CorruptTranscriptError("initial board snapshot disagrees")
        elif kind == kinds.REFINEMENT and rec["from"] != COMPOSER:
            if board is None:
                raise CorruptTranscriptError("refinement before any conjecture")
            for prop in payload["proposals"]:
                chi = Conjecture.from_dict(prop["conjecture"])
                if max_steps is not None and len(chi.steps) > max_steps:
                    continue
                board.add(chi, rec["from"], payload["cycle"], payload["parent"])
        elif kind == kinds.RESULT and rec["from"] == COMPOSER:
            solution = payload["solution"]
        elif kind == kinds.RESULT and rec["to"] == [GENERAL_MANAGER] and "plan" in payload:
            atomic_plan = Plan.from_list(payload["plan"])
    if solution is not None:
        if board is None and solution == 0:
            return Plan(())  # the request was satisfied before any dialogue
        if board is None or solution not in board.entries:
            raise CorruptTranscriptError(f"solution {solution} is not on the board")
        chi = board.entries[solution].conjecture
        if not is_solution(chi):
            raise CorruptTranscriptError(f"board entry {solution} is not a solution")
        return linearize(chi)
    return atomic_plan
