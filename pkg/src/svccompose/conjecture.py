"""Partial plans exchanged between agents.

A conjecture holds steps (operator instances), ordering constraints,
instantiation constraints and causal links. Two virtual steps frame it:
``INIT`` whose effects are the initial facts and ``GOAL`` whose
preconditions are the goal atoms. Open preconditions are hypotheses.

Conjectures are immutable; every refinement returns a new value and a
failed refinement raises without side effects.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import (
    CycleIntroducedError,
    InconsistentInstantiationError,
    MalformedConjectureError,
    MergeBreaksAcyclicityError,
    NotASolutionError,
    NotUnifiableError,
)
from .logic import Atom, constants_of, is_variable, parse_atom
from .planner import Action, Operator, Plan, Problem

INIT, GOAL = 0, 1
MAX_THREAT_NODES = 4096


class CausalLink(NamedTuple):
    producer: int
    atom: Atom
    consumer: int


class Hypothesis(NamedTuple):
    consumer: int
    atom: Atom


@dataclass(frozen=True)
class Bindings:
    """Equivalence classes over terms plus a disequality set.

    ``rep`` maps every non-representative term to its class representative;
    a class containing a constant is represented by that constant.
    """

    rep: Mapping[str, str] = field(default_factory=dict)
    neq: frozenset[frozenset[str]] = frozenset()

    def find(self, t: str) -> str:
        return self.rep.get(t, t)

    def resolve(self, atom: Atom) -> Atom:
        if not atom.args or not self.rep:
            return atom
        return Atom(atom.pred, tuple(self.rep.get(t, t) for t in atom.args))

    def unify(self, x: str, y: str) -> Bindings:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return self
        cx, cy = not is_variable(rx), not is_variable(ry)
        if cx and cy:
            raise InconsistentInstantiationError(f"{x}={y} forces {rx}={ry}")
        new = rx if cx else ry if cy else min(rx, ry)
        old = ry if new == rx else rx
        rep = {t: (new if r == old else r) for t, r in self.rep.items()}
        rep[old] = new
        out = Bindings(rep, self.neq)
        out._check_neq()
        return out

    def unify_atoms(self, a: Atom, b: Atom) -> Bindings:
        if a.pred != b.pred or len(a.args) != len(b.args):
            raise NotUnifiableError(f"{a} does not unify with {b}")
        out = self
        for x, y in zip(a.args, b.args):
            out = out.unify(x, y)
        return out

    def separate(self, x: str, y: str) -> Bindings:
        if self.find(x) == self.find(y):
            raise InconsistentInstantiationError(f"{x}≠{y} contradicts {x}={y}")
        return Bindings(self.rep, self.neq | {frozenset((x, y))})

    def _check_neq(self) -> None:
        for pair in self.neq:
            a, b = tuple(pair)
            if self.find(a) == self.find(b):
                raise InconsistentInstantiationError(f"{a}≠{b} violated")

    @property
    def satisfiable(self) -> bool:
        try:
            self._check_neq()
        except InconsistentInstantiationError:
            return False
        # distinct constants never share a class by construction of unify
        return all(not (not is_variable(t) and not is_variable(r) and t != r)
                   for t, r in self.rep.items())

    def constraints(self) -> list[tuple[str, str, str]]:
        eq = [(t, "=", r) for t, r in sorted(self.rep.items())]
        ne = [(*sorted(p), ) for p in self.neq]
        return eq + sorted((a, "!=", b) for a, b in ne)


def scope_variable(var: str, step: int) -> str:
    return f"{var}#{step}"


@dataclass(frozen=True)
class Fragment:
    """A totally ordered sub-plan offered to close a hypothesis.

    ``facts`` are private facts of the proposing agent; once grafted they
    become effects of the initial step.
    """

    actions: tuple[Action, ...] = ()
    facts: frozenset[Atom] = frozenset()


@dataclass(frozen=True)
class Conjecture:
    init_facts: frozenset[Atom]
    goal: frozenset[Atom]
    steps: tuple[tuple[int, Action], ...] = ()
    order: frozenset[tuple[int, int]] = frozenset({(INIT, GOAL)})
    bindings: Bindings = field(default_factory=Bindings)
    links: frozenset[CausalLink] = frozenset()
    constants: frozenset[str] = frozenset()
    next_id: int = 2

    # structure

    @cached_property
    def actions(self) -> dict[int, Action]:
        return dict(self.steps)

    @property
    def step_ids(self) -> list[int]:
        return [INIT, GOAL] + [i for i, _ in self.steps]

    def pre_pos(self, sid: int) -> frozenset[Atom]:
        if sid == GOAL:
            return self.goal
        if sid == INIT:
            return frozenset()
        return self.actions[sid].pre_pos

    def pre_neg(self, sid: int) -> frozenset[Atom]:
        if sid in (INIT, GOAL):
            return frozenset()
        return self.actions[sid].pre_neg

    def adds(self, sid: int) -> frozenset[Atom]:
        if sid == INIT:
            return self.init_facts
        if sid == GOAL:
            return frozenset()
        return self.actions[sid].add

    def dels(self, sid: int) -> frozenset[Atom]:
        if sid in (INIT, GOAL):
            return frozenset()
        return self.actions[sid].delete

    def resolved(self, atoms: Iterable[Atom]) -> frozenset[Atom]:
        return frozenset(self.bindings.resolve(a) for a in atoms)

    @cached_property
    def _successors(self) -> dict[int, set[int]]:
        succ: dict[int, set[int]] = {i: set() for i in self.step_ids}
        for a, b in self.order:
            succ.setdefault(a, set()).add(b)
            succ.setdefault(b, set())
        return succ

    @cached_property
    def _closure(self) -> dict[int, frozenset[int]]:
        succ = self._successors
        out = {}
        for s in succ:
            seen: set[int] = set()
            stack = list(succ[s])
            while stack:
                n = stack.pop()
                if n not in seen:
                    seen.add(n)
                    stack.extend(succ[n])
            out[s] = frozenset(seen)
        return out

    def before(self, a: int, b: int) -> bool:
        """True iff a is necessarily ordered before b."""
        return b in self._closure.get(a, ())

    @property
    def acyclic(self) -> bool:
        return all(s not in reach for s, reach in self._closure.items())

    def variables(self) -> set[str]:
        return {t for _, a in self.steps for t in a.args if is_variable(t)}

    def check(self) -> None:
        """Raise MalformedConjectureError unless every structural invariant holds."""
        ids = set(self.step_ids)
        if len(ids) != len(self.steps) + 2:
            raise MalformedConjectureError("duplicate step ids")
        for a, b in self.order:
            if a not in ids or b not in ids:
                raise MalformedConjectureError(f"order ({a},{b}) names unknown step")
        if not self.acyclic:
            raise MalformedConjectureError("ordering is cyclic")
        for s in ids - {INIT}:
            if not self.before(INIT, s):
                raise MalformedConjectureError(f"step {s} not after INIT")
        for s in ids - {GOAL}:
            if not self.before(s, GOAL):
                raise MalformedConjectureError(f"step {s} not before GOAL")
        for link in self.links:
            if link.producer not in ids or link.consumer not in ids:
                raise MalformedConjectureError(f"link {link} names unknown step")
            if not self.before(link.producer, link.consumer):
                raise MalformedConjectureError(f"link {link} not ordered")
            if link.atom not in self.pre_pos(link.consumer):
                raise MalformedConjectureError(f"{link.atom} is not a precondition of {link.consumer}")
            if self.bindings.resolve(link.atom) not in self.resolved(self.adds(link.producer)):
                raise MalformedConjectureError(f"{link.atom} is not an effect of {link.producer}")
        if not self.bindings.satisfiable:
            raise MalformedConjectureError("instantiation constraints unsatisfiable")

    @property
    def well_formed(self) -> bool:
        try:
            self.check()
        except MalformedConjectureError:
            return False
        return True

    def label(self, sid: int) -> str:
        if sid == INIT:
            return "a-init"
        if sid == GOAL:
            return "a-goal"
        a = self.actions[sid]
        args = [self.bindings.find(t) for t in a.args]
        return f"{a.name}({','.join(args)})" if args else a.name

    # serialization

    def to_dict(self) -> dict:
        ops = {}
        for _, a in self.steps:
            ops.setdefault(a.operator.name, a.operator.to_dict())
        return {
            "init": [a.to_json() for a in sorted(self.init_facts)],
            "goal": [a.to_json() for a in sorted(self.goal)],
            "constants": sorted(self.constants),
            "operators": [ops[k] for k in sorted(ops)],
            "steps": [{"id": i, "op": a.operator.name, "args": list(a.args)}
                      for i, a in self.steps],
            "order": sorted([a, b] for a, b in self.order),
            "eq": sorted([t, r] for t, r in self.bindings.rep.items()),
            "neq": sorted(sorted(p) for p in self.bindings.neq),
            "links": sorted([l.producer, l.atom.to_json(), l.consumer] for l in self.links),
            "next": self.next_id,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> Conjecture:
        ops = {o["name"]: Operator.from_dict(o) for o in d.get("operators", [])}
        steps = tuple((s["id"], Action(ops[s["op"]], tuple(s["args"]))) for s in d["steps"])
        return cls(
            frozenset(parse_atom(a) for a in d["init"]),
            frozenset(parse_atom(a) for a in d["goal"]),
            steps,
            frozenset((a, b) for a, b in d["order"]),
            Bindings({t: r for t, r in d.get("eq", [])},
                     frozenset(frozenset(p) for p in d.get("neq", []))),
            frozenset(CausalLink(p, parse_atom(a), c) for p, a, c in d["links"]),
            frozenset(d.get("constants", [])),
            d.get("next", 2 + len(steps)),
        )

    @cached_property
    def key(self) -> str:
        import json

        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


# construction and refinement


def initial_conjecture(p: Problem) -> Conjecture:
    links = frozenset(CausalLink(INIT, g, GOAL) for g in p.goal if g in p.initial)
    return Conjecture(p.initial, p.goal, links=links, constants=p.constants)


def hypotheses_of(chi: Conjecture) -> tuple[Hypothesis, ...]:
    """Open preconditions, oldest consumer first (FIFO by creation)."""
    if not chi.acyclic:
        raise MalformedConjectureError("ordering is cyclic")
    linked = {(l.consumer, l.atom) for l in chi.links}
    out = []
    for sid in [GOAL] + [i for i, _ in chi.steps]:
        for atom in sorted(chi.pre_pos(sid)):
            if (sid, atom) not in linked:
                out.append(Hypothesis(sid, atom))
    return tuple(out)


def add_step(chi: Conjecture, operator: Operator, args: Iterable[str] | None = None
             ) -> tuple[Conjecture, int]:
    """Insert an operator instance between INIT and GOAL.

    Parameters left unbound (or given as variables) are renamed apart with
    the new step id, so ``?From`` on step 3 becomes ``?From#3``.
    """
    sid = chi.next_id
    given = list(args) if args is not None else list(operator.params)
    if len(given) != len(operator.params):
        raise ValueError(f"{operator.name} expects {len(operator.params)} arguments")
    scoped = tuple(scope_variable(t, sid) if is_variable(t) else t for t in given)
    new = replace(
        chi,
        steps=chi.steps + ((sid, Action(operator, scoped)),),
        order=chi.order | {(INIT, sid), (sid, GOAL)},
        constants=chi.constants | constants_of([Atom("_", scoped)]),
        next_id=sid + 1,
    )
    return new, sid


def add_order(chi: Conjecture, a: int, b: int) -> Conjecture:
    if a == b or chi.before(b, a):
        raise CycleIntroducedError(f"ordering {a} < {b} closes a cycle")
    if chi.before(a, b):
        return chi
    return replace(chi, order=chi.order | {(a, b)})


def constrain(chi: Conjecture, x: str, y: str, equal: bool = True) -> Conjecture:
    b = chi.bindings.unify(x, y) if equal else chi.bindings.separate(x, y)
    return replace(chi, bindings=b)


def _match_precondition(chi: Conjecture, consumer: int, p: Atom) -> Atom:
    pres = chi.pre_pos(consumer)
    if p in pres:
        return p
    rp = chi.bindings.resolve(p)
    for q in sorted(pres):
        if chi.bindings.resolve(q) == rp:
            return q
    for q in sorted(pres):
        try:
            Bindings().unify_atoms(q, p)
            return q
        except (NotUnifiableError, InconsistentInstantiationError):
            continue
    raise NotUnifiableError(f"{p} is not a precondition of step {consumer}")


def add_causal_link(chi: Conjecture, producer: int, p: Atom | str, consumer: int) -> Conjecture:
    p = parse_atom(p)
    for sid in (producer, consumer):
        if sid not in chi.step_ids:
            raise MalformedConjectureError(f"unknown step {sid}")
    pre = _match_precondition(chi, consumer, p)
    candidates = sorted(chi.adds(producer))
    plain_ok = []
    for e in candidates:
        try:
            Bindings().unify_atoms(e, pre)
            plain_ok.append(e)
        except (NotUnifiableError, InconsistentInstantiationError):
            continue
    if not plain_ok:
        raise NotUnifiableError(f"step {producer} has no effect unifying with {pre}")
    bindings = None
    for e in plain_ok:
        try:
            bindings = chi.bindings.unify_atoms(e, pre)
            break
        except InconsistentInstantiationError:
            continue
    if bindings is None:
        raise InconsistentInstantiationError(f"linking {pre} contradicts the constraints")
    ordered = add_order(chi, producer, consumer)
    return replace(ordered, bindings=bindings,
                   links=ordered.links | {CausalLink(producer, pre, consumer)})


# threats


class Threat(NamedTuple):
    """``clobber`` may land between ``link.producer`` and ``link.consumer``.

    For negative-precondition threats ``link`` is ``(adder, atom, consumer)``
    and ``clobber`` is ``None``: the adder may precede the consumer with no
    deleter guaranteed in between.
    """

    link: CausalLink
    clobber: int | None


def threats(chi: Conjecture) -> list[Threat]:
    out = []
    b = chi.bindings
    adds = {s: chi.resolved(chi.adds(s)) for s in chi.step_ids}
    dels = {s: chi.resolved(chi.dels(s)) for s in chi.step_ids}
    for link in sorted(chi.links):
        p = b.resolve(link.atom)
        for d in chi.step_ids:
            if d in (link.producer, link.consumer):
                continue
            if p in dels[d] and p not in adds[d]:
                if not chi.before(d, link.producer) and not chi.before(link.consumer, d):
                    out.append(Threat(link, d))
    for c in [i for i, _ in chi.steps]:
        for q in sorted(chi.resolved(chi.pre_neg(c))):
            for e in chi.step_ids:
                if e == c or q not in adds[e] or chi.before(c, e):
                    continue
                guarded = any(
                    q in dels[d] and q not in adds[d]
                    and chi.before(e, d) and chi.before(d, c)
                    for d in chi.step_ids
                )
                if not guarded:
                    out.append(Threat(CausalLink(e, q, c), None))
    return out


def resolve_threats(chi: Conjecture) -> Conjecture | None:
    """Add promotion/demotion orderings until no threat remains.

    Depth-first over the choices, demotion first; None when no consistent
    ordering exists within the search budget.
    """
    budget = [MAX_THREAT_NODES]

    def search(c: Conjecture) -> Conjecture | None:
        ts = threats(c)
        if not ts:
            return c
        budget[0] -= 1
        if budget[0] < 0:
            return None
        t = ts[0]
        if t.clobber is None:
            options = [(t.link.consumer, t.link.producer)]
        else:
            options = [(t.clobber, t.link.producer), (t.link.consumer, t.clobber)]
        for a, b in options:
            if a == b or c.before(b, a) or INIT in (b,) or GOAL in (a,):
                continue
            found = search(add_order(c, a, b))
            if found is not None:
                return found
        return None

    return search(chi)


def is_solution(chi: Conjecture) -> bool:
    if not chi.acyclic or hypotheses_of(chi):
        return False
    if not chi.bindings.satisfiable:
        return False
    if any(is_variable(chi.bindings.find(v)) for v in chi.variables()):
        return False
    return not threats(chi)


# grafting


def _last_adder(chi: Conjecture, chain: list[int], upto: int, atom: Atom) -> int | None:
    """Latest step in chain[:upto] adding atom with no later deleter in that prefix."""
    for sid in reversed(chain[:upto]):
        if atom in chi.adds(sid):
            return sid
        if atom in chi.dels(sid):
            return None
    return -1  # untouched by the chain


def graft_subconjecture(chi: Conjecture, h: Hypothesis, sub: Fragment) -> Conjecture:
    """Merge a totally ordered fragment so that it supplies ``h``.

    Fragment preconditions are linked to the latest earlier fragment step
    providing them, else to INIT, else to an existing step that can still be
    ordered before. Preconditions that cannot be linked stay open.
    Existing links into steps after the fragment that the fragment clobbers
    are re-established from the fragment's last producer of that atom.
    """
    if (h.consumer, h.atom) in {(l.consumer, l.atom) for l in chi.links}:
        raise MalformedConjectureError(f"{h} is already supplied")
    if h.atom not in chi.pre_pos(h.consumer):
        raise MalformedConjectureError(f"{h.atom} is not a precondition of {h.consumer}")

    c = replace(chi, init_facts=chi.init_facts | sub.facts,
                constants=chi.constants | constants_of(sub.facts))
    chain: list[int] = []
    for a in sub.actions:
        c, sid = add_step(c, a.operator, a.args)
        if chain:
            c = replace(c, order=c.order | {(chain[-1], sid)})
        chain.append(sid)
    if chain:
        try:
            c = add_order(c, chain[-1], h.consumer)
        except CycleIntroducedError as exc:
            raise MergeBreaksAcyclicityError(str(exc)) from exc

    existing = [i for i, _ in chi.steps]
    for k, sid in enumerate(chain):
        for p in sorted(c.pre_pos(sid)):
            src = _last_adder(c, chain, k, p)
            if src == -1:
                src = INIT if p in c.init_facts else _existing_producer(c, existing, p, sid)
            if src is not None:
                c = add_causal_link(c, src, p, sid)

    # supply the hypothesis itself
    supplier = None
    if chain:
        for sid in reversed(chain):
            if any(_unifiable(c.bindings, e, h.atom) for e in c.adds(sid)):
                supplier = sid
                break
            if any(_unifiable(c.bindings, e, h.atom) for e in c.dels(sid)):
                break
    else:
        for e in [INIT] + existing:
            if e != h.consumer and not c.before(h.consumer, e) and \
                    any(_unifiable(c.bindings, x, h.atom) for x in c.adds(e)):
                supplier = e
                break
    if supplier is None:
        offered = [e for sid in (chain or [INIT] + existing) for e in c.adds(sid)]
        if any(_unifiable(Bindings(), e, h.atom) for e in offered):
            raise InconsistentInstantiationError(
                f"fragment supplies {h.atom} only against the current constraints")
        raise NotUnifiableError(f"fragment does not supply {h.atom}")
    try:
        c = add_causal_link(c, supplier, h.atom, h.consumer)
    except CycleIntroducedError as exc:
        raise MergeBreaksAcyclicityError(str(exc)) from exc

    if chain:
        c = _reestablish(c, chain)
    resolved = resolve_threats(c)
    return resolved if resolved is not None else c


def _existing_producer(c: Conjecture, existing: list[int], p: Atom, sid: int) -> int | None:
    for e in existing:
        if p in c.resolved(c.adds(e)) and not c.before(sid, e):
            return e
    return None


def _unifiable(b: Bindings, x: Atom, y: Atom) -> bool:
    try:
        b.unify_atoms(x, y)
        return True
    except (NotUnifiableError, InconsistentInstantiationError):
        return False


def _reestablish(c: Conjecture, chain: list[int]) -> Conjecture:
    last = chain[-1]
    chain_set = set(chain)
    links = set(c.links)
    changed = False
    for link in sorted(c.links):
        if link.producer in chain_set or link.consumer in chain_set:
            continue
        if not c.before(last, link.consumer):
            continue
        p = c.bindings.resolve(link.atom)
        if not any(p in c.resolved(c.dels(s)) for s in chain):
            continue
        src = _last_adder(c, chain, len(chain), p)
        if src is None or src == -1:
            continue
        links.discard(link)
        links.add(CausalLink(src, link.atom, link.consumer))
        changed = True
    return replace(c, links=frozenset(links)) if changed else c


# linearization


def linearize(chi: Conjecture) -> Plan:
    if not is_solution(chi):
        raise NotASolutionError("conjecture has open hypotheses, threats or unbound variables")
    return Plan(tuple(_ground(chi, s) for s in _topological(chi)))


def _ground(chi: Conjecture, sid: int) -> Action:
    a = chi.actions[sid]
    return Action(a.operator, tuple(chi.bindings.find(t) for t in a.args))


def _topological(chi: Conjecture) -> list[int]:
    real = [i for i, _ in chi.steps]
    indeg = {i: 0 for i in real}
    succ = {i: [] for i in real}
    for i in real:
        for j in real:
            if i != j and chi.before(i, j):
                succ[i].append(j)
                indeg[j] += 1
    heap = [i for i in real if indeg[i] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        i = heapq.heappop(heap)
        out.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(heap, j)
    return out


def linearizations(chi: Conjecture) -> Iterator[Plan]:
    """Every topological order of the real steps. Exponential; tests only."""
    real = [i for i, _ in chi.steps]
    for perm in itertools.permutations(real):
        pos = {s: k for k, s in enumerate(perm)}
        if all(not chi.before(b, a) for a in real for b in real if pos[a] < pos[b]):
            yield Plan(tuple(_ground(chi, s) for s in perm))


def open_count(chi: Conjecture) -> int:
    return len(hypotheses_of(chi))
