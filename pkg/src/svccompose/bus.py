"""Deterministic in-process message bus.

Delivery is FIFO by sequence number. A message addressed to several agents
is handed to them in scheduler order: the registration roster shuffled once
with the bus seed. Every sent envelope and every board snapshot is recorded
so a run can be written out as a JSON-lines transcript.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import AgentUnreachableError

REQUEST = "Request"
INITIAL_CONJECTURE = "InitialConjecture"
REFINEMENT = "Refinement"
DISPATCH = "Dispatch"
RESULT = "Result"
FAILURE = "Failure"
KINDS = (REQUEST, INITIAL_CONJECTURE, REFINEMENT, DISPATCH, RESULT, FAILURE)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class Envelope:
    seq: int
    sender: str
    to: tuple[str, ...]
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {"type": "envelope", "seq": self.seq, "from": self.sender,
                "to": list(self.to), "kind": self.kind, "payload": self.payload}

    @classmethod
    def from_dict(cls, d: dict) -> Envelope:
        return cls(d["seq"], d["from"], tuple(d["to"]), d["kind"], d["payload"])


Reply = tuple  # (to, kind, payload)
Handler = Callable[[Envelope], Iterable[Reply]]


class Bus:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self._roster: list[str] = []
        self._handlers: dict[str, Handler | None] = {}
        self._order: dict[str, int] | None = None
        self._queue: deque[Envelope] = deque()
        self._mailbox: dict[str, list[Envelope]] = defaultdict(list)
        self._seq = 0
        self.records: list[dict] = []

    def register(self, agent_id: str, handler: Handler | None = None) -> None:
        if agent_id not in self._handlers:
            self._roster.append(agent_id)
        self._handlers[agent_id] = handler
        self._order = None

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self._handlers

    @property
    def schedule(self) -> list[str]:
        if self._order is None:
            roster = list(self._roster)
            random.Random(self.seed).shuffle(roster)
            self._order = {a: i for i, a in enumerate(roster)}
        return sorted(self._order, key=self._order.__getitem__)

    def _rank(self, agent_id: str) -> int:
        self.schedule
        return self._order[agent_id]

    def send(self, sender: str, to: str | Iterable[str], kind: str, payload: dict) -> Envelope:
        if kind not in KINDS:
            raise ValueError(f"unknown envelope kind {kind!r}")
        targets = (to,) if isinstance(to, str) else tuple(to)
        for t in targets:
            if t not in self._handlers:
                raise AgentUnreachableError(f"agent {t!r} is not registered")
        self._seq += 1
        env = Envelope(self._seq, sender, targets, kind, payload)
        self._queue.append(env)
        self.records.append(env.to_dict())
        return env

    def pump(self) -> None:
        """Deliver until the queue is empty; handlers may send replies."""
        while self._queue:
            env = self._queue.popleft()
            for target in sorted(env.to, key=self._rank):
                handler = self._handlers[target]
                if handler is None:
                    self._mailbox[target].append(env)
                    continue
                for to, kind, payload in handler(env) or ():
                    self.send(target, to, kind, payload)

    def take(self, agent_id: str) -> list[Envelope]:
        box = self._mailbox.pop(agent_id, [])
        return sorted(box, key=lambda e: e.seq)

    def snapshot(self, record: dict) -> None:
        self.records.append(record)

    def transcript_lines(self) -> list[str]:
        return [dumps(r) for r in self.records]
