"""Named concepts, a subsumption DAG over them, and the parameter matcher.

Concepts live in exactly one sub-ontology (a partition of the concept set,
one per service family). Subsumption edges point child -> parent and may give
a concept several parents.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    CycleIntroducedError,
    DuplicateNameError,
    UnknownConceptError,
    UnknownPartitionError,
)


class MatchDegree(enum.IntEnum):
    """Ordered so that a higher value is a better match."""

    FAIL = 0
    SUBSUME = 1
    PLUGIN = 2
    EXACT = 3


@dataclass(frozen=True)
class Concept:
    name: str
    owner: str


class Ontology:
    def __init__(self, partitions=()):
        self._owner: dict[str, str] = {}
        self._partitions: dict[str, set[str]] = {}
        self._parents: dict[str, set[str]] = {}
        self._ancestors: dict[str, frozenset[str]] = {}
        for p in partitions:
            self.add_partition(p)

    # construction

    def add_partition(self, partition: str) -> None:
        self._partitions.setdefault(partition, set())

    def add_concept(self, name: str, owner: str) -> None:
        if name in self._owner:
            raise DuplicateNameError(f"concept {name!r} already defined")
        if owner not in self._partitions:
            raise UnknownPartitionError(f"unknown sub-ontology {owner!r}")
        self._owner[name] = owner
        self._partitions[owner].add(name)
        self._parents[name] = set()
        self._ancestors.clear()

    def add_subsumption(self, child: str, parent: str) -> None:
        self._require(child, parent)
        if self.is_subsumed(parent, child):
            raise CycleIntroducedError(f"{child} ⊑ {parent} would close a cycle")
        self._parents[child].add(parent)
        self._ancestors.clear()

    @classmethod
    def from_dict(cls, data: dict) -> Ontology:
        onto = cls(data.get("partitions", {}))
        for partition, names in data.get("partitions", {}).items():
            for name in names:
                onto.add_concept(name, partition)
        for child, parent in data.get("subsumption", []):
            onto.add_subsumption(child, parent)
        return onto

    @classmethod
    def from_json(cls, text: str) -> Ontology:
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> Ontology:
        return cls.from_json(Path(path).read_text())

    def to_dict(self) -> dict:
        return {
            "partitions": {p: sorted(c) for p, c in sorted(self._partitions.items())},
            "subsumption": sorted([c, p] for c, ps in self._parents.items() for p in ps),
        }

    # queries

    def __contains__(self, name: object) -> bool:
        return name in self._owner

    def __len__(self) -> int:
        return len(self._owner)

    @property
    def concepts(self) -> frozenset[Concept]:
        return frozenset(Concept(n, o) for n, o in self._owner.items())

    @property
    def partitions(self) -> dict[str, frozenset[str]]:
        return {p: frozenset(c) for p, c in self._partitions.items()}

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return frozenset((c, p) for c, ps in self._parents.items() for p in ps)

    def owner(self, name: str) -> str:
        self._require(name)
        return self._owner[name]

    def parents(self, name: str) -> frozenset[str]:
        self._require(name)
        return frozenset(self._parents[name])

    def ancestors(self, name: str) -> frozenset[str]:
        """Reflexive-transitive closure upwards, memoized until the next mutation."""
        self._require(name)
        cached = self._ancestors.get(name)
        if cached is not None:
            return cached
        seen = {name}
        stack = [name]
        while stack:
            for p in self._parents[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        result = frozenset(seen)
        self._ancestors[name] = result
        return result

    def is_subsumed(self, child: str, ancestor: str) -> bool:
        self._require(child, ancestor)
        return ancestor in self.ancestors(child)

    def match_degree(self, provided: str, required: str) -> MatchDegree:
        self._require(provided, required)
        if provided == required:
            return MatchDegree.EXACT
        # a more specific output plugs into a more general input slot
        if self.is_subsumed(provided, required):
            return MatchDegree.PLUGIN
        if self.is_subsumed(required, provided):
            return MatchDegree.SUBSUME
        return MatchDegree.FAIL

    def compatible_for_chaining(self, provided: str, required: str) -> bool:
        """Only total matches (Exact, PlugIn) allow chaining two services."""
        return self.match_degree(provided, required) >= MatchDegree.PLUGIN

    def _require(self, *names: str) -> None:
        for n in names:
            if n not in self._owner:
                raise UnknownConceptError(f"unknown concept {n!r}")
