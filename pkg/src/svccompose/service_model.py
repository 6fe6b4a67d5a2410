"""Service descriptions (atomic/composite processes with IOPEs) and their
translation into planning operators and methods.

Descriptions are read from a JSON format standing in for OWL-S::

    {"service": "BravoAir", "ownerSubontology": "air-transport",
     "describedBy": "BravoAir_Process",
     "processes": {
        "Login": {"kind": "atomic", "inputs": [{"name": "AcctName", "concept": "AcctName"}],
                  "outputs": [], "preconditions": [{"pred": "account", "args": ["?AcctName"]}],
                  "addEffects": [...], "delEffects": [...]},
        "BookFlight": {"kind": "composite", "inputs": [], "outputs": [],
                       "body": {"construct": "sequence",
                                "children": [{"ref": "Login"}, {"ref": "ConfirmReservation"}]}}}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Union

from .errors import (
    DanglingProcessReferenceError,
    DescriptionSyntaxError,
    ForeignConceptError,
    RecursiveProcessCycleError,
    UnknownConceptError,
    UnreachableEntryPointError,
)
from .logic import Atom, is_variable
from .ontology import Ontology
from .planner import Operator

INPUT, OUTPUT = "input", "output"
CONSTRUCTS = ("sequence", "split", "choice", "if-then-else")


@dataclass(frozen=True)
class Parameter:
    name: str
    concept: str
    direction: str = INPUT
    value: str | None = None

    @property
    def variable(self) -> str:
        return "?" + self.name


@dataclass(frozen=True)
class Condition:
    predicate: str
    args: tuple[str, ...] = ()
    positive: bool = True

    @property
    def atom(self) -> Atom:
        return Atom(self.predicate, self.args)

    def to_dict(self) -> dict:
        d = {"pred": self.predicate, "args": list(self.args)}
        if not self.positive:
            d["polarity"] = "neg"
        return d


@dataclass(frozen=True)
class ProcessRef:
    name: str


@dataclass(frozen=True)
class ControlConstruct:
    kind: str
    children: tuple[Union[ProcessRef, "ControlConstruct"], ...]
    condition: Condition | None = None

    def refs(self) -> list[str]:
        out = []
        for c in self.children:
            out.extend([c.name] if isinstance(c, ProcessRef) else c.refs())
        return out


@dataclass(frozen=True)
class AtomicProcess:
    name: str
    inputs: tuple[Parameter, ...] = ()
    outputs: tuple[Parameter, ...] = ()
    preconditions: tuple[Condition, ...] = ()
    add_effects: tuple[Condition, ...] = ()
    del_effects: tuple[Condition, ...] = ()
    subontology: str | None = None

    kind = "atomic"

    @property
    def parameters(self) -> tuple[Parameter, ...]:
        return self.inputs + self.outputs


@dataclass(frozen=True)
class CompositeProcess:
    name: str
    body: ControlConstruct
    inputs: tuple[Parameter, ...] = ()
    outputs: tuple[Parameter, ...] = ()
    preconditions: tuple[Condition, ...] = ()
    subontology: str | None = None
    add_effects: tuple[Condition, ...] = ()

    kind = "composite"

    @property
    def parameters(self) -> tuple[Parameter, ...]:
        return self.inputs + self.outputs


Process = Union[AtomicProcess, CompositeProcess]


@dataclass(frozen=True)
class ServiceDescription:
    service: str
    described_by: str
    processes: Mapping[str, Process] = field(default_factory=dict)
    owner_subontology: str = ""

    def __post_init__(self):
        if self.described_by not in self.processes:
            raise DanglingProcessReferenceError(
                f"describedBy {self.described_by!r} is not a defined process"
            )

    @property
    def entry(self) -> Process:
        return self.processes[self.described_by]

    def to_dict(self) -> dict:
        return {
            "service": self.service,
            "ownerSubontology": self.owner_subontology,
            "describedBy": self.described_by,
            "processes": {n: _process_to_dict(p) for n, p in self.processes.items()},
        }


class TaskRef(NamedTuple):
    name: str
    args: tuple[str, ...]
    primitive: bool

    def __str__(self) -> str:
        return ("!" if self.primitive else "") + self.name


@dataclass(frozen=True)
class TaskNetwork:
    """``ordered`` (Sequence), ``unordered`` (Split), ``choice`` or ``if``.

    For ``if`` the children are (then, else) and ``guard`` holds the test.
    """

    kind: str
    children: tuple[Union[TaskRef, "TaskNetwork"], ...]
    guard: Condition | None = None

    def leaves(self) -> list[TaskRef]:
        out = []
        for c in self.children:
            out.extend([c] if isinstance(c, TaskRef) else c.leaves())
        return out


@dataclass(frozen=True)
class Method:
    name: str
    params: tuple[str, ...]
    network: TaskNetwork
    guards: tuple[Condition, ...] = ()

    @property
    def subtasks(self) -> tuple:
        return self.network.children


class Translation(NamedTuple):
    operators: tuple[Operator, ...]
    methods: tuple[Method, ...]


# parsing


def _fail(msg: str):
    raise DescriptionSyntaxError(msg)


def _parse_params(items, direction) -> tuple[Parameter, ...]:
    if not isinstance(items, list):
        _fail(f"{direction}s must be a list")
    out = []
    for it in items:
        if not isinstance(it, dict) or "name" not in it or "concept" not in it:
            _fail(f"bad parameter {it!r}")
        out.append(Parameter(it["name"], it["concept"], direction, it.get("value")))
    return tuple(out)


def _parse_condition(item) -> Condition:
    if not isinstance(item, dict) or "pred" not in item:
        _fail(f"bad condition {item!r}")
    args = item.get("args", [])
    if not isinstance(args, list) or not all(isinstance(a, str) for a in args):
        _fail(f"bad condition arguments {args!r}")
    polarity = item.get("polarity", "pos")
    if polarity not in ("pos", "neg"):
        _fail(f"bad polarity {polarity!r}")
    return Condition(item["pred"], tuple(args), polarity == "pos")


def _parse_construct(item) -> ControlConstruct | ProcessRef:
    if not isinstance(item, dict):
        _fail(f"bad construct {item!r}")
    if "ref" in item:
        return ProcessRef(item["ref"])
    kind = item.get("construct")
    if kind == "unordered":
        kind = "split"
    if kind == "ifthenelse":
        kind = "if-then-else"
    if kind not in CONSTRUCTS:
        _fail(f"unknown construct {kind!r}")
    if kind == "if-then-else":
        if "then" not in item or "else" not in item or "condition" not in item:
            _fail("if-then-else needs condition, then and else")
        return ControlConstruct(
            kind,
            (_parse_construct(item["then"]), _parse_construct(item["else"])),
            _parse_condition(item["condition"]),
        )
    children = item.get("children")
    if not isinstance(children, list) or not children:
        _fail(f"{kind} needs at least one child")
    return ControlConstruct(kind, tuple(_parse_construct(c) for c in children))


def _parse_process(name: str, item) -> Process:
    if not isinstance(item, dict):
        _fail(f"process {name!r} must be an object")
    kind = item.get("kind")
    inputs = _parse_params(item.get("inputs", []), INPUT)
    outputs = _parse_params(item.get("outputs", []), OUTPUT)
    pre = tuple(_parse_condition(c) for c in item.get("preconditions", []))
    sub = item.get("subontology")
    if kind == "atomic":
        return AtomicProcess(
            name, inputs, outputs, pre,
            tuple(_parse_condition(c) for c in item.get("addEffects", [])),
            tuple(_parse_condition(c) for c in item.get("delEffects", [])),
            sub,
        )
    if kind == "composite":
        if "body" not in item:
            _fail(f"composite {name!r} has no body")
        body = _parse_construct(item["body"])
        if isinstance(body, ProcessRef):
            body = ControlConstruct("sequence", (body,))
        effects = tuple(_parse_condition(c) for c in item.get("addEffects", []))
        return CompositeProcess(name, body, inputs, outputs, pre, sub, effects)
    _fail(f"process {name!r}: unknown kind {kind!r}")


def _check_arity(processes: Iterable[Process]) -> None:
    seen: dict[str, int] = {}

    def visit(c: Condition):
        n = seen.setdefault(c.predicate, len(c.args))
        if n != len(c.args):
            _fail(f"predicate {c.predicate!r} used with arity {n} and {len(c.args)}")

    for p in processes:
        for c in p.preconditions:
            visit(c)
        if isinstance(p, AtomicProcess):
            for c in p.add_effects + p.del_effects:
                visit(c)


def parse_service_description(
    document: str | Mapping,
    onto: Ontology | None = None,
    external: Iterable[str] = (),
) -> ServiceDescription:
    """Parse and resolve a description.

    ``external`` names processes defined elsewhere in the registry that a
    composite body may reference.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise DescriptionSyntaxError(str(exc)) from exc
    else:
        data = document
    if not isinstance(data, dict):
        _fail("description must be a JSON object")
    for key in ("service", "describedBy", "processes"):
        if key not in data:
            _fail(f"missing {key!r}")
    if not isinstance(data["processes"], dict) or not data["processes"]:
        _fail("processes must be a non-empty object")

    processes = {n: _parse_process(n, p) for n, p in data["processes"].items()}
    _check_arity(processes.values())

    known = set(processes) | set(external)
    if data["describedBy"] not in processes:
        raise DanglingProcessReferenceError(
            f"describedBy {data['describedBy']!r} is not a defined process"
        )
    for p in processes.values():
        if isinstance(p, CompositeProcess):
            for ref in p.body.refs():
                if ref not in known:
                    raise DanglingProcessReferenceError(f"{p.name} references {ref!r}")

    if onto is not None:
        for p in processes.values():
            for prm in p.parameters:
                if prm.concept not in onto:
                    raise UnknownConceptError(
                        f"{p.name}.{prm.name}: unknown concept {prm.concept!r}"
                    )

    return ServiceDescription(
        data["service"], data["describedBy"], processes, data.get("ownerSubontology", "")
    )


def validate_against_subontology(desc: ServiceDescription, onto: Ontology) -> None:
    expected = desc.owner_subontology
    for p in desc.processes.values():
        for prm in p.parameters:
            owner = onto.owner(prm.concept)
            if owner != expected:
                raise ForeignConceptError(prm.name, prm.concept, owner, expected)


def entry_point(desc: ServiceDescription) -> str:
    return desc.described_by


# translation


def _operator_params(proc: AtomicProcess) -> tuple[str, ...]:
    params: list[str] = []
    for prm in proc.inputs:
        if prm.variable not in params:
            params.append(prm.variable)
    for c in proc.preconditions + proc.add_effects + proc.del_effects:
        for t in c.args:
            if is_variable(t) and t not in params:
                params.append(t)
    return tuple(params)


def process_to_operator(proc: AtomicProcess) -> Operator:
    return Operator(
        proc.name,
        _operator_params(proc),
        frozenset(c.atom for c in proc.preconditions if c.positive),
        frozenset(c.atom for c in proc.preconditions if not c.positive),
        frozenset(c.atom for c in proc.add_effects),
        frozenset(c.atom for c in proc.del_effects),
    )


def translate_to_domain(
    desc: ServiceDescription,
    registry: Mapping[str, Process] | None = None,
) -> Translation:
    """Recursive translation starting at the entry point.

    Atomic processes become operators, composite processes become methods
    whose task network mirrors their control construct. Output order is the
    depth-first discovery order, so the result is deterministic.
    """
    lookup = dict(registry or {})
    lookup.update(desc.processes)
    if desc.described_by not in lookup:
        raise UnreachableEntryPointError(desc.described_by)

    operators: dict[str, Operator] = {}
    methods: dict[str, Method] = {}
    signatures: dict[str, tuple[str, ...]] = {}

    def signature(name: str) -> tuple[str, ...]:
        if name not in signatures:
            proc = lookup[name]
            if isinstance(proc, AtomicProcess):
                signatures[name] = _operator_params(proc)
            else:
                signatures[name] = tuple(p.variable for p in proc.inputs)
        return signatures[name]

    def net(c: ControlConstruct | ProcessRef, stack: tuple[str, ...]):
        if isinstance(c, ProcessRef):
            if c.name not in lookup:
                raise DanglingProcessReferenceError(c.name)
            visit(c.name, stack)
            return TaskRef(c.name, signature(c.name),
                           isinstance(lookup[c.name], AtomicProcess))
        kind = {"sequence": "ordered", "split": "unordered", "choice": "choice",
                "if-then-else": "if"}[c.kind]
        return TaskNetwork(kind, tuple(net(ch, stack) for ch in c.children), c.condition)

    def visit(name: str, stack: tuple[str, ...]):
        if name in stack:
            raise RecursiveProcessCycleError(" -> ".join(stack + (name,)))
        proc = lookup[name]
        if isinstance(proc, AtomicProcess):
            if name not in operators:
                operators[name] = process_to_operator(proc)
            return
        if name in methods:
            return
        network = net(proc.body, stack + (name,))
        if not isinstance(network, TaskNetwork):
            network = TaskNetwork("ordered", (network,))
        methods[name] = Method(name, signature(name), network, proc.preconditions)

    visit(desc.described_by, ())
    return Translation(tuple(operators.values()), tuple(methods.values()))


def flatten(method_name: str, translation: Translation) -> list[str]:
    """Depth-first expansion of a method into primitive task names.

    Only meaningful for ordered networks; other kinds are expanded in their
    listed order.
    """
    methods = {m.name: m for m in translation.methods}
    ops = {o.name for o in translation.operators}

    def walk(node) -> list[str]:
        if isinstance(node, TaskRef):
            if node.primitive:
                return [node.name]
            return walk(methods[node.name].network)
        out = []
        for ch in node.children:
            out.extend(walk(ch))
        return out

    if method_name in ops:
        return [method_name]
    return walk(methods[method_name].network)


def _params_to_list(params: Iterable[Parameter]) -> list[dict]:
    out = []
    for p in params:
        d = {"name": p.name, "concept": p.concept}
        if p.value is not None:
            d["value"] = p.value
        out.append(d)
    return out


def _construct_to_dict(c) -> dict:
    if isinstance(c, ProcessRef):
        return {"ref": c.name}
    if c.kind == "if-then-else":
        return {"construct": c.kind, "condition": c.condition.to_dict(),
                "then": _construct_to_dict(c.children[0]),
                "else": _construct_to_dict(c.children[1])}
    return {"construct": c.kind, "children": [_construct_to_dict(x) for x in c.children]}


def _process_to_dict(p: Process) -> dict:
    d: dict = {"kind": p.kind, "inputs": _params_to_list(p.inputs),
               "outputs": _params_to_list(p.outputs)}
    if p.preconditions:
        d["preconditions"] = [c.to_dict() for c in p.preconditions]
    if isinstance(p, AtomicProcess):
        d["addEffects"] = [c.to_dict() for c in p.add_effects]
        d["delEffects"] = [c.to_dict() for c in p.del_effects]
    else:
        d["body"] = _construct_to_dict(p.body)
        if p.add_effects:
            d["addEffects"] = [c.to_dict() for c in p.add_effects]
    if p.subontology:
        d["subontology"] = p.subontology
    return d
