"""Atoms, terms and the small amount of syntax shared by every module.

A term is a plain string. Variables start with ``?``; every other token is a
constant. Atoms are hashable ``(predicate, args)`` pairs and print as
``at(Lyon)``.
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping, NamedTuple


def is_variable(term: str) -> bool:
    return term.startswith("?")


class Atom(NamedTuple):
    pred: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(self.args)})"

    @property
    def is_ground(self) -> bool:
        return not any(is_variable(t) for t in self.args)

    def variables(self) -> list[str]:
        return [t for t in self.args if is_variable(t)]

    def substitute(self, binding: Mapping[str, str]) -> Atom:
        if not self.args:
            return self
        return Atom(self.pred, tuple(binding.get(t, t) for t in self.args))

    def to_json(self) -> list:
        return [self.pred, *self.args]


_ATOM_RE = re.compile(r"^\s*([^\s(),]+)\s*(?:\((.*)\))?\s*$")


def parse_atom(text: str | list | tuple | Atom) -> Atom:
    """Accept ``"at(Lyon)"``, ``"funds-ok"``, ``["at", "Lyon"]`` or an Atom."""
    if isinstance(text, Atom):
        return text
    if isinstance(text, (list, tuple)):
        if not text or not all(isinstance(t, str) for t in text):
            raise ValueError(f"bad atom {text!r}")
        return Atom(text[0], tuple(text[1:]))
    m = _ATOM_RE.match(text)
    if m is None:
        raise ValueError(f"bad atom {text!r}")
    pred, body = m.groups()
    if body is None or not body.strip():
        return Atom(pred, ())
    return Atom(pred, tuple(t.strip() for t in body.split(",")))


def parse_atoms(items: Iterable) -> frozenset[Atom]:
    return frozenset(parse_atom(i) for i in items)


def constants_of(atoms: Iterable[Atom]) -> set[str]:
    return {t for a in atoms for t in a.args if not is_variable(t)}


def sorted_atoms(atoms: Iterable[Atom]) -> list[Atom]:
    return sorted(atoms)
