"""Agent roles: request constructor, general manager, composer, managers.

The request constructor turns an XML request into a service description.
The general manager routes it: atomic requests go straight to the best
manager for the service family, composite ones to the composer together
with the group of managers involved. The composer runs the refinement
dialogue over conjectures; each manager refines with its own operators and
private knowledge base.
"""

from __future__ import annotations

import itertools
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import bus as kinds
from .bus import Bus, Envelope
from .conjecture import (
    GOAL,
    INIT,
    Conjecture,
    Fragment,
    Hypothesis,
    add_causal_link,
    graft_subconjecture,
    hypotheses_of,
    initial_conjecture,
    is_solution,
    linearize,
    resolve_threats,
    threats,
)
from .errors import (
    AgentUnreachableError,
    ComposeError,
    MalformedDocumentError,
    NoAgentsError,
    NoMatchingRowError,
    UnknownClassConceptError,
)
from .logic import Atom, constants_of
from .ontology import Ontology
from .planner import Action, Domain, Operator, Plan, Problem, ground_domain, is_applicable, solve
from .service_model import (
    AtomicProcess,
    CompositeProcess,
    Condition,
    ControlConstruct,
    Parameter,
    ProcessRef,
    ServiceDescription,
    translate_to_domain,
    INPUT,
    OUTPUT,
)

log = logging.getLogger(__name__)

COMPOSED, SIMPLE = "composed", "simple"
DEFAULT_MAX_CYCLES = 32
DEFAULT_PLAN_BOUND = 8
MAX_PAIRED_ASSUMPTIONS = 24
MAX_REPLANS = 8


# request constructor


@dataclass(frozen=True)
class ClassInstance:
    class_name: str
    attributes: tuple[tuple[str, str | None], ...] = ()

    @property
    def inputs(self) -> dict[str, str]:
        return {k: v for k, v in self.attributes if v is not None}

    @property
    def outputs(self) -> list[str]:
        return [k for k, v in self.attributes if v is None]

    def __getitem__(self, name: str) -> str | None:
        return dict(self.attributes)[name]


def parse_request(text: str) -> ET.Element:
    try:
        return ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedDocumentError(str(exc)) from exc


def rc_cross_xml(doc: ET.Element | str) -> list[ClassInstance]:
    """A tag with sub-tags is a class; its leaf sub-tags are attributes."""
    root = parse_request(doc) if isinstance(doc, str) else doc
    out = []
    for el in root.iter():
        children = list(el)
        if not children:
            continue
        attrs = []
        for ch in children:
            if len(ch):
                continue
            text = (ch.text or "").strip()
            attrs.append((ch.tag, text or None))
        out.append(ClassInstance(el.tag, tuple(attrs)))
    if not out:
        raise MalformedDocumentError(f"<{root.tag}> has no sub-tags, so no class can form")
    return out


def _valued_classes(instances: Sequence[ClassInstance]) -> list[ClassInstance]:
    # pure containers (no leaf attributes) only group other classes
    return [i for i in instances if i.attributes]


def rc_classify_service(instances: Sequence[ClassInstance], onto: Ontology) -> str:
    owners = set()
    for inst in _valued_classes(instances):
        if inst.class_name not in onto:
            raise UnknownClassConceptError(inst.class_name)
        owners.add(onto.owner(inst.class_name))
    return COMPOSED if len(owners) > 1 else SIMPLE


def _attribute_params(inst: ClassInstance, onto: Ontology) -> tuple[list, list]:
    ins, outs = [], []
    for name, value in inst.attributes:
        concept = name if name in onto else inst.class_name
        if value is None:
            outs.append(Parameter(name, concept, OUTPUT))
        else:
            ins.append(Parameter(name, concept, INPUT, value))
    return ins, outs


def rc_produce_description(
    instances: Sequence[ClassInstance],
    kind: str,
    onto: Ontology,
    *,
    service: str = "UserRequest",
    initial: Iterable[Atom] = (),
    goal: Iterable[Atom] = (),
) -> ServiceDescription:
    """Valued attributes become inputs, empty ones outputs.

    A composed request gets one atomic process per sub-ontology, in the
    order the sub-ontologies first appear in the document, under a
    Sequence. ``initial``/``goal`` are attached as preconditions/effects of
    the entry process so the composer can read the planning problem off it.
    """
    classes = _valued_classes(instances)
    for inst in classes:
        if inst.class_name not in onto:
            raise UnknownClassConceptError(inst.class_name)
    pre = tuple(Condition(a.pred, a.args) for a in sorted(initial))
    eff = tuple(Condition(a.pred, a.args) for a in sorted(goal))

    groups: dict[str, list[ClassInstance]] = {}
    for inst in classes:
        groups.setdefault(onto.owner(inst.class_name), []).append(inst)

    def atomic(name, insts, sub, with_problem):
        ins, outs = [], []
        for inst in insts:
            i, o = _attribute_params(inst, onto)
            ins += i
            outs += o
        return AtomicProcess(name, tuple(ins), tuple(outs),
                             pre if with_problem else (),
                             eff if with_problem else (), (), sub)

    if kind == SIMPLE:
        owner = next(iter(groups), "")
        name = classes[0].class_name if classes else service
        proc = atomic(name, classes, owner, True)
        return ServiceDescription(service, name, {name: proc}, owner)

    procs: dict[str, AtomicProcess | CompositeProcess] = {}
    for sub, insts in groups.items():
        procs[insts[0].class_name] = atomic(insts[0].class_name, insts, sub, False)
    body = ControlConstruct("sequence", tuple(ProcessRef(n) for n in procs))
    entry = f"{service}_Process"
    all_in = tuple(p for pr in procs.values() for p in pr.inputs)
    all_out = tuple(p for pr in procs.values() for p in pr.outputs)
    procs[entry] = CompositeProcess(entry, body, all_in, all_out, pre, None, eff)
    return ServiceDescription(service, entry, procs, next(iter(groups), ""))


def problem_from_description(desc: ServiceDescription, domain: Domain | None = None) -> Problem:
    entry = desc.entry
    initial = frozenset(c.atom for c in entry.preconditions if c.positive)
    goal = frozenset(c.atom for c in entry.add_effects)
    return Problem(initial, goal, domain or Domain())


# general manager


@dataclass(frozen=True)
class SelectionRow:
    group: int
    service: str
    subontology: str
    agents: tuple[str, ...]


class SelectionTable:
    """Service family -> manager agents, best performer first."""

    def __init__(self, rows: Iterable[SelectionRow]):
        self.rows = tuple(rows)
        seen: dict[str, int] = {}
        for r in self.rows:
            if not r.agents:
                raise ValueError(f"row {r.group} lists no agents")
            for a in r.agents:
                if a in seen:
                    raise ValueError(f"agent {a} appears in rows {seen[a]} and {r.group}")
                seen[a] = r.group

    @classmethod
    def from_list(cls, items: Iterable[Mapping]) -> SelectionTable:
        return cls(SelectionRow(int(i["group"]), i.get("service", ""), i["subontology"],
                                tuple(i["agents"])) for i in items)

    def row_for(self, subontology: str) -> SelectionRow:
        for r in self.rows:
            if r.subontology == subontology:
                return r
        raise NoMatchingRowError(f"no selection row for sub-ontology {subontology!r}")

    def agents(self) -> set[str]:
        return {a for r in self.rows for a in r.agents}


@dataclass(frozen=True)
class RouteToManager:
    agent: str


@dataclass(frozen=True)
class RouteToComposer:
    group: tuple[str, ...]


def _reachable(desc: ServiceDescription) -> list[str]:
    out: list[str] = []

    def walk(name):
        if name in out or name not in desc.processes:
            return
        out.append(name)
        proc = desc.processes[name]
        if isinstance(proc, CompositeProcess):
            for ref in proc.body.refs():
                walk(ref)

    walk(desc.described_by)
    return out


def gm_route(desc: ServiceDescription, table: SelectionTable) -> RouteToManager | RouteToComposer:
    entry = desc.entry
    if isinstance(entry, AtomicProcess):
        sub = entry.subontology or desc.owner_subontology
        return RouteToManager(table.row_for(sub).agents[0])
    group: list[str] = []
    for name in _reachable(desc):
        proc = desc.processes[name]
        if isinstance(proc, CompositeProcess) and not proc.subontology:
            continue
        best = table.row_for(proc.subontology or desc.owner_subontology).agents[0]
        if best not in group:
            group.append(best)
    if not group:
        group.append(table.row_for(desc.owner_subontology).agents[0])
    return RouteToComposer(tuple(group))


# managers


@dataclass(frozen=True)
class Proposal:
    conjecture: Conjecture
    hypothesis: Hypothesis | None
    move: str  # "link", "sub-conjecture" or "joint"


def _reachable_atoms(actions: Sequence[Action], state: Iterable[Atom]) -> set[Atom]:
    """Atoms some sequence of ``actions`` can make true, deletes ignored."""
    reach = set(state)
    pending = list(actions)
    grew = True
    while grew:
        grew = False
        rest = []
        for a in pending:
            if a.pre_pos <= reach:
                if not a.add <= reach:
                    reach |= a.add
                    grew = True
            else:
                rest.append(a)
        pending = rest
    return reach


def assumption_tiers(actions: Sequence[Action], state: Iterable[Atom],
                     closed: Iterable[str] = (), observed: Iterable[str] = ()
                     ) -> tuple[frozenset[Atom], frozenset[Atom]]:
    """Preconditions an agent may hypothesise instead of achieving.

    The first tier holds unreachable atoms none of the agent's actions adds:
    only another agent can supply them. The second holds atoms that stay
    unreachable even granting the first tier, typically because the agent's
    own producers depend on them circularly. Predicates in ``closed`` (the
    agent's private data) are never assumed; those in ``observed`` (seen in
    the initial facts) are only assumed in the second tier.
    """
    state = set(state)
    closed = set(closed)
    shy = closed | set(observed)
    pres = {p for a in actions for p in a.pre_pos}
    produced = {e for a in actions for e in a.add}
    first = frozenset(p for p in pres - _reachable_atoms(actions, state)
                      if p not in produced and p.pred not in shy)
    second = frozenset(p for p in pres - _reachable_atoms(actions, state | first)
                       if p.pred not in closed)
    return first, second


def _settle(chi: Conjecture) -> Conjecture | None:
    """Resolve threats, or None when the conjecture is a dead end."""
    if not threats(chi):
        return chi
    return resolve_threats(chi)


def _close(chi: Conjecture, kb: frozenset[Atom]) -> Conjecture:
    """Link every open hypothesis that an existing step or private fact supplies exactly."""
    for h in hypotheses_of(chi):
        closed = _close_one(chi, h, kb, exact=True)
        if closed is not None:
            chi = closed
    return chi


def _expose(chi: Conjecture, facts: Iterable[Atom]) -> Conjecture:
    from dataclasses import replace

    facts = frozenset(facts)
    return replace(chi, init_facts=chi.init_facts | facts,
                   constants=chi.constants | constants_of(facts))


def manager_refine(
    chi: Conjecture,
    competences: Domain,
    kb: Iterable[Atom] = (),
    *,
    plan_bound: int = DEFAULT_PLAN_BOUND,
) -> list[Proposal]:
    """Refinement proposals for ``chi``; empty when the agent cannot help.

    For each open hypothesis, oldest first: link it from a step already in
    the conjecture or from a private fact; failing that, plan for it from
    the initial facts, the private facts and the effects of existing steps,
    and graft the resulting sub-plan. If that fails, preconditions this
    agent cannot reach on its own are assumed during planning and come back
    as new hypotheses. While any goal atom is open, a joint plan for
    the whole goal is offered first, so that atoms already holding are
    protected rather than clobbered.
    """
    kb = frozenset(kb)
    hyps = hypotheses_of(chi)
    if not hyps:
        return []
    base = set(chi.resolved(chi.init_facts)) | kb
    constants = set(chi.constants | constants_of(kb) | competences.constants)
    for sid, _ in chi.steps:
        constants |= constants_of(chi.resolved(chi.adds(sid)))
    actions = ground_domain(competences, constants)
    closed = {a.pred for a in kb}
    observed = {a.pred for a in chi.init_facts}
    own_pres = {p for a in actions for p in a.pre_pos} & {e for a in actions for e in a.add}

    def state_for(consumer: int) -> frozenset[Atom]:
        # optimistic: whatever a step that may still precede the consumer adds
        state = set(base)
        for sid, _ in chi.steps:
            if sid != consumer and not chi.before(consumer, sid):
                state |= {a for a in chi.resolved(chi.adds(sid)) if a.is_ground}
        return frozenset(state)

    def plans_for(goal: frozenset[Atom], consumer: int, allow_assumptions: bool,
                  fresh_producer: bool = False, banned: frozenset[Action] = frozenset()
                  ) -> list[Plan]:
        state = state_for(consumer)
        if fresh_producer:
            # no existing source could be linked, so the goal must be re-added
            state -= goal
        usable = [a for a in actions if a not in banned]

        def solve_from(start, target) -> Plan | None:
            return solve(Problem(start, target, competences, constants), plan_bound,
                         exclude=banned)

        found = solve_from(state, goal)
        if found is not None or not allow_assumptions:
            return [found] if found is not None else []
        # assumed atoms are left unlinked and come back as hypotheses. Each
        # single assumption that works is offered, then each working pair;
        # failing that, a whole tier at a time.
        plans: list[Plan] = []
        assumed: frozenset[Atom] = frozenset()
        for tier in assumption_tiers(usable, state, closed, observed):
            extra = sorted(tier - goal - state)
            if not extra:
                continue
            for atom in extra:
                found = solve_from(state | assumed | {atom}, goal)
                if found is not None and found not in plans:
                    plans.append(found)
            if plans:
                break
            if len(extra) <= MAX_PAIRED_ASSUMPTIONS:
                for pair in itertools.combinations(extra, 2):
                    found = solve_from(state | assumed | set(pair), goal)
                    if found is not None and found not in plans:
                        plans.append(found)
                if plans:
                    break
            assumed |= frozenset(extra)
            found = solve_from(state | assumed, goal)
            if found is not None:
                plans.append(found)
                break
        # an atom this agent makes only on top of assumptions may come
        # straight from another agent instead
        for atom in sorted(own_pres - _reachable_atoms(usable, state) - goal):
            if atom.pred in closed:
                continue
            found = solve_from(state | {atom}, goal)
            if found is not None and found not in plans:
                plans.append(found)
        return plans

    def fragment(plan: Plan) -> Fragment:
        used = set()
        for a in plan:
            used |= a.pre_pos
        return Fragment(plan.steps, frozenset(kb & used))

    out: list[Proposal] = []
    seen: set[str] = {chi.key}

    def offer(c: Conjecture | None, h: Hypothesis | None, move: str,
              fresh: frozenset[int] = frozenset()) -> bool:
        """Store a proposal; True when it kept every existing link."""
        if c is None:
            return False
        c = _close(c, kb)
        settled = _settle(c)
        clean = settled is not None
        if settled is None and fresh:
            settled = _settle(_reopen(c, fresh))
        if settled is None:
            return False
        if settled.key not in seen:
            seen.add(settled.key)
            out.append(Proposal(settled, h, move))
        return clean

    def graft(h: Hypothesis, plan: Plan, move: str) -> bool:
        if not len(plan):
            return False
        try:
            grafted = graft_subconjecture(chi, h, fragment(plan))
        except ComposeError as exc:
            log.debug("graft for %s rejected: %s", h, exc)
            return False
        return offer(grafted, h, move, frozenset(grafted.step_ids) - frozenset(chi.step_ids))

    goal_hyps = [h for h in hyps if h.consumer == GOAL]
    if goal_hyps:
        for plan in plans_for(chi.goal, GOAL, allow_assumptions=False):
            graft(goal_hyps[0], plan, "joint")

    for h in hyps:
        target = chi.bindings.resolve(h.atom)
        linked = _close_one(chi, h, kb)
        if linked is not None:
            offer(linked, h, "link")
            continue
        if not target.is_ground or target.pred not in {a.pred for o in competences.operators
                                                       for a in o.add}:
            continue
        # when no plan fits cleanly, ban the producers tried so far and
        # plan again: a different grounding may avoid the clash
        banned: frozenset[Action] = frozenset()
        for _ in range(MAX_REPLANS):
            plans = plans_for(frozenset({target}), h.consumer, allow_assumptions=True,
                              fresh_producer=True, banned=banned)
            if not plans:
                break
            clean = [graft(h, plan, "sub-conjecture") for plan in plans]
            if any(clean):
                break
            banned |= {a for plan in plans for a in _culprits(chi, plan)}
    return out


def _culprits(chi: Conjecture, plan: Plan) -> set[Action]:
    """Steps of ``plan`` that delete an atom ``chi`` already relies on;
    the final step when none does."""
    linked = {chi.bindings.resolve(l.atom) for l in chi.links}
    bad = {a for a in plan if a.delete & linked}
    return bad or {plan[-1]} if len(plan) else set()


def _reopen(chi: Conjecture, fresh: frozenset[int]) -> Conjecture:
    """Retract older links that the ``fresh`` steps clobber for good.

    The retracted preconditions become open hypotheses again, for another
    agent to supply after the new steps.
    """
    from dataclasses import replace

    doomed = {t.link for t in threats(chi)
              if t.clobber in fresh and t.link.producer not in fresh
              and t.link.consumer not in fresh}
    if not doomed:
        return chi
    return replace(chi, links=chi.links - doomed)


def _close_one(chi: Conjecture, h: Hypothesis, kb: frozenset[Atom],
               exact: bool = False) -> Conjecture | None:
    """Link ``h`` from INIT, a private fact or an existing step, threat-free."""
    if (h.consumer, h.atom) in {(l.consumer, l.atom) for l in chi.links}:
        return None
    target = chi.bindings.resolve(h.atom)
    for e in [INIT] + [i for i, _ in chi.steps]:
        if e == h.consumer or chi.before(h.consumer, e):
            continue
        base = chi
        if e == INIT and target not in chi.resolved(chi.init_facts):
            if target not in kb:
                continue
            base = _expose(chi, {target})
        elif e != INIT:
            adds = chi.adds(e)
            if exact and target not in chi.resolved(adds):
                continue
            if not any(_could_supply(chi, x, h.atom) for x in adds):
                continue
        try:
            linked = add_causal_link(base, e, h.atom, h.consumer)
        except ComposeError:
            continue
        settled = _settle(linked)
        if settled is not None:
            return settled
    return None


def _could_supply(chi: Conjecture, effect: Atom, pre: Atom) -> bool:
    try:
        chi.bindings.unify_atoms(effect, pre)
        return True
    except ComposeError:
        return False


@dataclass
class ManagerAgent:
    agent_id: str
    subontology: str
    domain: Domain
    kb: frozenset[Atom] = frozenset()
    descriptions: tuple[ServiceDescription, ...] = ()
    ontology: Ontology | None = None
    plan_bound: int = DEFAULT_PLAN_BOUND

    @classmethod
    def from_descriptions(cls, agent_id: str, subontology: str,
                          descriptions: Sequence[ServiceDescription],
                          kb: Iterable[Atom] = (), ontology: Ontology | None = None,
                          plan_bound: int = DEFAULT_PLAN_BOUND) -> ManagerAgent:
        domain = Domain()
        for d in descriptions:
            t = translate_to_domain(d)
            domain = domain.merged(Domain(t.operators, t.methods))
        return cls(agent_id, subontology, domain, frozenset(kb), tuple(descriptions),
                   ontology, plan_bound)

    def refine(self, chi: Conjecture) -> list[Proposal]:
        return manager_refine(chi, self.domain, self.kb, plan_bound=self.plan_bound)

    def handle(self, env: Envelope):
        if env.kind in (kinds.INITIAL_CONJECTURE, kinds.REFINEMENT):
            chi = Conjecture.from_dict(env.payload["conjecture"])
            proposals = self.refine(chi)
            payload = {
                "cycle": env.payload["cycle"],
                "parent": env.payload["id"],
                "proposals": [{"move": p.move, "conjecture": p.conjecture.to_dict()}
                              for p in proposals],
            }
            return [(env.sender, kinds.REFINEMENT, payload)]
        if env.kind == kinds.DISPATCH:
            return [self._dispatch(env)]
        return []

    # atomic requests

    def _bind_inputs(self, request: ServiceDescription) -> tuple[Operator, dict] | None:
        entry = request.entry
        procs = {p.name: p for d in self.descriptions for p in d.processes.values()}
        proc = procs.get(entry.name)
        if not isinstance(proc, AtomicProcess):
            return None
        op = self.domain.operator(proc.name)
        binding = {}
        for need in proc.inputs:
            for have in entry.inputs:
                if have.value is None:
                    continue
                if self.ontology is not None and need.concept in self.ontology \
                        and have.concept in self.ontology:
                    ok = self.ontology.compatible_for_chaining(have.concept, need.concept)
                else:
                    ok = have.concept == need.concept or have.name == need.name
                if ok:
                    binding[need.variable] = have.value
                    break
        return op, binding

    def plan_request(self, request: ServiceDescription) -> Plan | None:
        """Plan for the request's stated effects, or invoke the requested process.

        Without stated effects the request names one of this agent's atomic
        processes: the answer is that process bound to the caller's inputs,
        provided it is applicable against the private facts.
        """
        entry = request.entry
        initial = frozenset(c.atom for c in entry.preconditions if c.positive) | self.kb
        goal = frozenset(c.atom for c in getattr(entry, "add_effects", ()))
        if goal:
            consts = constants_of(initial) | constants_of(goal)
            return solve(Problem(initial, goal, self.domain, consts), self.plan_bound)
        bound = self._bind_inputs(request)
        if bound is None:
            return None
        op, binding = bound
        consts = constants_of(initial) | set(binding.values())
        for action in ground_domain(Domain((op,)), consts):
            if any(action.binding[v] != c for v, c in binding.items()):
                continue
            if is_applicable(action, initial):
                return Plan((action,))
        return None

    def _dispatch(self, env: Envelope):
        from .service_model import parse_service_description

        request = parse_service_description(env.payload["description"])
        plan = self.plan_request(request)
        if plan is None:
            return (env.sender, kinds.FAILURE, {"reason": "no-plan", "agent": self.agent_id})
        return (env.sender, kinds.RESULT, {"plan": plan.to_list(), "agent": self.agent_id})


@dataclass(frozen=True)
class Failure:
    reason: str
    board: tuple = ()

    def __bool__(self) -> bool:
        return False


def gm_dispatch_atomic(desc: ServiceDescription, agent: str, bus: Bus,
                       gm_id: str = "general-manager") -> Plan | Failure:
    if agent not in bus:
        raise AgentUnreachableError(f"agent {agent!r} is not registered")
    if gm_id not in bus:
        bus.register(gm_id)
    bus.send(gm_id, agent, kinds.DISPATCH, {"description": desc.to_dict()})
    bus.pump()
    for env in bus.take(gm_id):
        if env.kind == kinds.RESULT:
            return Plan.from_list(env.payload["plan"])
        if env.kind == kinds.FAILURE:
            return Failure(env.payload.get("reason", "failure"))
    return Failure("no-reply")


# composer


@dataclass
class BoardEntry:
    conjecture: Conjecture
    origin: str
    cycle: int
    parent: int | None = None
    open: int = 0


@dataclass
class StorageBoard:
    entries: dict[int, BoardEntry] = field(default_factory=dict)
    frontier: list[int] = field(default_factory=list)
    _keys: set = field(default_factory=set)

    def add(self, chi: Conjecture, origin: str, cycle: int, parent: int | None = None) -> int | None:
        if chi.key in self._keys:
            return None
        self._keys.add(chi.key)
        cid = len(self.entries)
        self.entries[cid] = BoardEntry(chi, origin, cycle, parent, len(hypotheses_of(chi)))
        self.frontier.append(cid)
        return cid

    def select(self) -> int | None:
        """Fewest open hypotheses; ties go to the oldest entry."""
        if not self.frontier:
            return None
        cid = min(self.frontier, key=lambda i: (self.entries[i].open, i))
        self.frontier.remove(cid)
        return cid

    def snapshot(self) -> list[dict]:
        return [{"id": i, "origin": e.origin, "cycle": e.cycle, "parent": e.parent,
                 "open": e.open, "steps": len(e.conjecture.steps)}
                for i, e in self.entries.items()]


class Composer:
    def __init__(self, agent_id: str = "composer", max_cycles: int = DEFAULT_MAX_CYCLES,
                 max_steps: int | None = None, report_to: str | None = None):
        if max_cycles < 1:
            raise ValueError("max_cycles must be positive")
        self.agent_id = agent_id
        self.report_to = report_to or agent_id
        self.max_cycles = max_cycles
        self.max_steps = max_steps
        self.board = StorageBoard()

    def run(self, problem: Problem, group: Sequence[str], bus: Bus) -> Plan | Failure:
        if not group:
            raise NoAgentsError("composer needs at least one manager agent")
        for a in group:
            if a not in bus:
                raise AgentUnreachableError(f"agent {a!r} is not registered")
        for a in {self.agent_id, self.report_to}:
            if a not in bus:
                bus.register(a)

        chi0 = initial_conjecture(problem)
        root = self.board.add(chi0, self.agent_id, 0)
        bus.snapshot({"type": "board", "cycle": 0, "entries": self.board.snapshot()})
        if is_solution(chi0):
            return self._succeed(bus, root, group)

        for cycle in range(1, self.max_cycles + 1):
            cid = self.board.select()
            if cid is None:
                return self._fail(bus, "frontier-exhausted", group)
            kind = kinds.INITIAL_CONJECTURE if cycle == 1 else kinds.REFINEMENT
            bus.send(self.agent_id, tuple(group), kind, {
                "cycle": cycle, "id": cid,
                "conjecture": self.board.entries[cid].conjecture.to_dict(),
            })
            bus.pump()
            added = []
            for env in bus.take(self.agent_id):
                if env.kind != kinds.REFINEMENT:
                    continue
                for prop in env.payload["proposals"]:
                    chi = Conjecture.from_dict(prop["conjecture"])
                    if self.max_steps is not None and len(chi.steps) > self.max_steps:
                        continue
                    new = self.board.add(chi, env.sender, cycle, env.payload["parent"])
                    if new is not None:
                        added.append(new)
            bus.snapshot({"type": "board", "cycle": cycle, "entries": self.board.snapshot()})
            for new in added:
                if is_solution(self.board.entries[new].conjecture):
                    return self._succeed(bus, new, group)
        return self._fail(bus, "cycle-budget-exhausted", group)

    def _succeed(self, bus: Bus, cid: int, group: Sequence[str]) -> Plan:
        plan = linearize(self.board.entries[cid].conjecture)
        bus.send(self.agent_id, self.report_to, kinds.RESULT,
                 {"solution": cid, "plan": plan.to_list()})
        bus.take(self.agent_id)
        return plan

    def _fail(self, bus: Bus, reason: str, group: Sequence[str]) -> Failure:
        snap = self.board.snapshot()
        bus.send(self.agent_id, self.report_to, kinds.FAILURE, {"reason": reason})
        bus.take(self.agent_id)
        return Failure(reason, tuple(snap))


def composer_run(goal_desc: ServiceDescription | Problem, group: Sequence[str], bus: Bus,
                 max_cycles: int = DEFAULT_MAX_CYCLES, *, composer_id: str = "composer",
                 max_steps: int | None = None) -> Plan | Failure:
    """Run the refinement dialogue; returns a plan or a Failure report."""
    problem = goal_desc if isinstance(goal_desc, Problem) else problem_from_description(goal_desc)
    return Composer(composer_id, max_cycles, max_steps).run(problem, group, bus)
