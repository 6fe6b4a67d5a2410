"""STRIPS core: operators, ground actions, state transition, plan search.

States are frozensets of ground atoms under the closed-world assumption.
``solve`` runs a bounded breadth-first forward search through the search
kernel (compiled when available). ``oracle_solve`` is a deliberately
separate, set-based exhaustive search used to check ``solve`` in tests.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Collection, Iterable, Mapping, Sequence

from . import _kernels
from .errors import (
    InstanceTooLargeError,
    NotApplicableError,
    UnboundVariableError,
)
from .logic import Atom, constants_of, is_variable, parse_atoms

State = frozenset  # frozenset[Atom]

ORACLE_MAX_ACTIONS = 64
ORACLE_MAX_BOUND = 6


@dataclass(frozen=True)
class Operator:
    name: str
    params: tuple[str, ...] = ()
    pre_pos: frozenset[Atom] = frozenset()
    pre_neg: frozenset[Atom] = frozenset()
    add: frozenset[Atom] = frozenset()
    delete: frozenset[Atom] = frozenset()

    def __post_init__(self):
        for attr in ("pre_pos", "pre_neg", "add", "delete"):
            object.__setattr__(self, attr, frozenset(getattr(self, attr)))
        object.__setattr__(self, "params", tuple(self.params))
        declared = set(self.params)
        for a in self.pre_pos | self.pre_neg | self.add | self.delete:
            free = [v for v in a.variables() if v not in declared]
            if free:
                raise UnboundVariableError(
                    f"operator {self.name}: variables {free} in {a} are not parameters"
                )

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def predicates(self) -> set[str]:
        return {a.pred for a in self.pre_pos | self.pre_neg | self.add | self.delete}

    def to_dict(self) -> dict:
        def enc(atoms):
            return [a.to_json() for a in sorted(atoms)]

        return {
            "name": self.name,
            "params": list(self.params),
            "pre": enc(self.pre_pos),
            "neg": enc(self.pre_neg),
            "add": enc(self.add),
            "del": enc(self.delete),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> Operator:
        return cls(
            d["name"],
            tuple(d.get("params", ())),
            parse_atoms(d.get("pre", ())),
            parse_atoms(d.get("neg", ())),
            parse_atoms(d.get("add", ())),
            parse_atoms(d.get("del", ())),
        )


@dataclass(frozen=True)
class Action:
    """An operator instance. ``args`` are aligned with ``operator.params``."""

    operator: Operator
    args: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != len(self.operator.params):
            raise UnboundVariableError(
                f"{self.operator.name} expects {len(self.operator.params)} arguments"
            )

    @classmethod
    def bind(cls, operator: Operator, binding: Mapping[str, str]) -> Action:
        return cls(operator, tuple(binding.get(p, p) for p in operator.params))

    @property
    def name(self) -> str:
        return self.operator.name

    @cached_property
    def binding(self) -> dict[str, str]:
        return dict(zip(self.operator.params, self.args))

    @property
    def is_ground(self) -> bool:
        return not any(is_variable(t) for t in self.args)

    def _inst(self, atoms: frozenset[Atom]) -> frozenset[Atom]:
        b = self.binding
        return frozenset(a.substitute(b) for a in atoms)

    @cached_property
    def pre_pos(self) -> frozenset[Atom]:
        return self._inst(self.operator.pre_pos)

    @cached_property
    def pre_neg(self) -> frozenset[Atom]:
        return self._inst(self.operator.pre_neg)

    @cached_property
    def add(self) -> frozenset[Atom]:
        return self._inst(self.operator.add)

    @cached_property
    def delete(self) -> frozenset[Atom]:
        return self._inst(self.operator.delete)

    @property
    def sort_key(self) -> tuple:
        return (self.operator.name, self.args)

    def __str__(self) -> str:
        if not self.args:
            return self.operator.name
        return f"{self.operator.name}({','.join(self.args)})"

    def __lt__(self, other: Action) -> bool:
        return self.sort_key < other.sort_key

    def _require_ground(self) -> None:
        if not self.is_ground:
            unbound = [p for p, t in zip(self.operator.params, self.args) if is_variable(t)]
            raise UnboundVariableError(f"{self}: unbound {unbound}")


@dataclass(frozen=True)
class Domain:
    operators: tuple[Operator, ...] = ()
    methods: tuple = ()
    constants: frozenset[str] = frozenset()

    def __post_init__(self):
        ops = tuple(self.operators)
        names = [o.name for o in ops]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate operator names in {names}")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "constants", frozenset(self.constants))

    def operator(self, name: str) -> Operator:
        for o in self.operators:
            if o.name == name:
                return o
        raise KeyError(name)

    @property
    def predicates(self) -> set[str]:
        return set().union(*(o.predicates for o in self.operators)) if self.operators else set()

    def merged(self, other: Domain) -> Domain:
        ops = {o.name: o for o in self.operators}
        ops.update({o.name: o for o in other.operators})
        return Domain(tuple(ops.values()), self.methods + other.methods,
                      self.constants | other.constants)


@dataclass(frozen=True)
class Problem:
    initial: frozenset[Atom]
    goal: frozenset[Atom]
    domain: Domain = field(default_factory=Domain)
    extra_constants: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "goal", frozenset(self.goal))
        object.__setattr__(self, "extra_constants", frozenset(self.extra_constants))
        for a in self.initial | self.goal:
            if not a.is_ground:
                raise UnboundVariableError(f"problem atom {a} is not ground")

    @property
    def constants(self) -> frozenset[str]:
        return frozenset(
            self.domain.constants
            | self.extra_constants
            | constants_of(self.initial)
            | constants_of(self.goal)
        )

    @classmethod
    def from_dict(cls, data: Mapping, domain: Domain) -> Problem:
        return cls(
            parse_atoms(data.get("initial", ())),
            parse_atoms(data.get("goal", ())),
            domain,
            frozenset(data.get("constants", ())),
        )

    @classmethod
    def from_json(cls, text: str, domain: Domain) -> Problem:
        return cls.from_dict(json.loads(text), domain)


@dataclass(frozen=True)
class Plan:
    steps: tuple[Action, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def __iter__(self):
        return iter(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def names(self) -> list[str]:
        return [str(a) for a in self.steps]

    def __str__(self) -> str:
        return "\n".join(self.names())

    def to_list(self) -> list[dict]:
        return [{"op": a.operator.to_dict(), "args": list(a.args)} for a in self.steps]

    @classmethod
    def from_list(cls, items) -> Plan:
        return cls(tuple(Action(Operator.from_dict(i["op"]), tuple(i["args"])) for i in items))


def is_applicable(a: Action, s: Iterable[Atom]) -> bool:
    a._require_ground()
    s = s if isinstance(s, (set, frozenset)) else frozenset(s)
    return a.pre_pos <= s and not (a.pre_neg & s)


def apply(a: Action, s: Iterable[Atom]) -> frozenset[Atom]:
    s = frozenset(s)
    if not is_applicable(a, s):
        raise NotApplicableError(f"{a} is not applicable")
    return (s - a.delete) | a.add


def ground(op: Operator, constants: Iterable[str]) -> set[Action]:
    consts = sorted(set(constants))
    return {Action(op, combo) for combo in itertools.product(consts, repeat=op.arity)}


def ground_domain(domain: Domain, constants: Iterable[str]) -> list[Action]:
    """All ground actions, in the deterministic (name, constants) order."""
    consts = sorted(set(constants))
    out = []
    for op in sorted(domain.operators, key=lambda o: o.name):
        out.extend(Action(op, combo) for combo in itertools.product(consts, repeat=op.arity))
    return out


def execute(problem: Problem, plan: Iterable[Action]) -> frozenset[Atom] | None:
    """Final state of running ``plan`` from s0, or None if some step is inapplicable."""
    s = problem.initial
    for a in plan:
        if not a.is_ground or not is_applicable(a, s):
            return None
        s = (s - a.delete) | a.add
    return s


def validate_plan(p: Problem, plan: Plan | Sequence[Action]) -> bool:
    final = execute(p, plan)
    return final is not None and p.goal <= final


@dataclass
class _Encoding:
    actions: list[Action]
    atoms: dict[Atom, int]
    pre_pos: list[int]
    pre_neg: list[int]
    add: list[int]
    dele: list[int]
    init: int
    goal: int | None

    @property
    def n_words(self) -> int:
        return max(1, (len(self.atoms) + 63) // 64)


def _encode(p: Problem, exclude: Collection[Action] = ()) -> _Encoding:
    actions = ground_domain(p.domain, p.constants)
    if exclude:
        actions = [a for a in actions if a not in exclude]
    # drop actions needing an atom that is neither initially true nor ever added
    producible = set(p.initial)
    for a in actions:
        producible |= a.add
    actions = [a for a in actions if a.pre_pos <= producible]

    index: dict[Atom, int] = {}

    def mask(atoms: Iterable[Atom]) -> int:
        m = 0
        for at in atoms:
            i = index.get(at)
            if i is None:
                i = index[at] = len(index)
            m |= 1 << i
        return m

    init = mask(sorted(p.initial))
    enc = _Encoding(actions, index, [], [], [], [], init, None)
    for a in actions:
        enc.pre_pos.append(mask(sorted(a.pre_pos)))
        enc.add.append(mask(sorted(a.add)))
        enc.dele.append(mask(sorted(a.delete)))
    # negatives and goals only index atoms that can ever be true
    for a in actions:
        enc.pre_neg.append(sum(1 << index[x] for x in a.pre_neg if x in index))
    if all(g in index for g in p.goal):
        enc.goal = sum(1 << index[g] for g in p.goal)
    return enc


def solve(p: Problem, bound: int, *, backend: str | None = None,
          exclude: Collection[Action] = ()) -> Plan | None:
    """Shortest plan of length <= bound, or None.

    Ties between plans of equal length go to the lexicographically earliest
    action at the first point of difference. Ground actions in ``exclude``
    are not used.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if p.goal <= p.initial:
        return Plan(())
    enc = _encode(p, frozenset(exclude))
    if enc.goal is None:
        return None
    search = {
        None: _kernels.bfs_plan,
        "python": _kernels.bfs_plan_python,
        "cython": _kernels.bfs_plan_compiled,
    }[backend]
    idx = search(enc.pre_pos, enc.pre_neg, enc.add, enc.dele, enc.init, enc.goal,
                 enc.n_words, bound)
    if idx is None:
        return None
    return Plan(tuple(enc.actions[i] for i in idx))


def oracle_solve(p: Problem, bound: int) -> Plan | None:
    """Exhaustive shortest-plan search for small instances (tests only).

    Depth-first enumeration of every applicable action sequence, deepening
    the length limit one step at a time. A state already shown to have no
    completion within ``k`` steps is not re-expanded with ``k`` or fewer.
    """
    actions = ground_domain(p.domain, p.constants)
    if len(actions) > ORACLE_MAX_ACTIONS:
        raise InstanceTooLargeError(f"{len(actions)} ground actions > {ORACLE_MAX_ACTIONS}")
    if not 1 <= bound <= ORACLE_MAX_BOUND:
        raise InstanceTooLargeError(f"bound {bound} outside 1..{ORACLE_MAX_BOUND}")
    goal = set(p.goal)
    if goal <= p.initial:
        return Plan(())

    dead: dict[frozenset, int] = {}

    def dfs(state: frozenset, left: int, prefix: list[Action]) -> list[Action] | None:
        if goal <= state:
            return list(prefix)
        if left == 0 or dead.get(state, -1) >= left:
            return None
        for a in actions:
            if a.pre_pos <= state and not (a.pre_neg & state):
                prefix.append(a)
                found = dfs((state - a.delete) | a.add, left - 1, prefix)
                prefix.pop()
                if found is not None:
                    return found
        dead[state] = max(dead.get(state, -1), left)
        return None

    for limit in range(1, bound + 1):
        found = dfs(p.initial, limit, [])
        if found is not None:
            return Plan(tuple(found))
    return None
