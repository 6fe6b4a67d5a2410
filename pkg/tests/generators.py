"""Seeded random STRIPS problems and refinement sequences shared by tests."""

from __future__ import annotations

import itertools
import random

from svccompose.conjecture import (
    Conjecture,
    Fragment,
    add_causal_link,
    add_step,
    graft_subconjecture,
    hypotheses_of,
    initial_conjecture,
    resolve_threats,
)
from svccompose.errors import ComposeError
from svccompose.logic import Atom
from svccompose.ontology import Ontology
from svccompose.planner import Domain, Operator, Problem, ground_domain

CONSTANTS = ("c0", "c1", "c2")


def _atom(rng: random.Random, preds: dict[str, int], params: list[str]) -> Atom:
    pred = rng.choice(sorted(preds))
    pool = params or list(CONSTANTS)
    return Atom(pred, tuple(rng.choice(pool) for _ in range(preds[pred])))


def random_domain(rng: random.Random, n_ops: int | None = None) -> Domain:
    preds = {f"p{i}": rng.choice((0, 1, 1, 2)) for i in range(rng.randint(2, 4))}
    ops = []
    for k in range(n_ops or rng.randint(2, 4)):
        params = [f"?x{j}" for j in range(rng.randint(0, 2))]

        def atoms(lo, hi):
            return frozenset(_atom(rng, preds, params) for _ in range(rng.randint(lo, hi)))

        add = atoms(1, 2)
        pre = atoms(0, 2)
        neg = atoms(0, 1) - pre if rng.random() < 0.3 else frozenset()
        dele = atoms(0, 2) - add
        used = {t for a in pre | neg | add | dele for t in a.args}
        params = [p for p in params if p in used]
        ops.append(Operator(f"op{k}", tuple(params), pre, neg, add, dele))
    return Domain(tuple(ops), (), frozenset(CONSTANTS))


def random_problem(rng: random.Random, max_actions: int = 64,
                   goal_size: tuple[int, int] = (1, 2)) -> Problem:
    """A problem whose ground action set stays within ``max_actions``."""
    while True:
        dom = random_domain(rng)
        actions = ground_domain(dom, CONSTANTS)
        if not 0 < len(actions) <= max_actions:
            continue
        atoms = sorted({a for act in actions for a in act.pre_pos | act.add | act.delete})
        init = frozenset(a for a in atoms if rng.random() < 0.35)
        goal = frozenset(rng.sample(atoms, min(len(atoms), rng.randint(*goal_size))))
        return Problem(init, goal, dom, frozenset(CONSTANTS))


def all_ground_atoms(domain: Domain) -> list[Atom]:
    preds: dict[str, int] = {}
    for o in domain.operators:
        for a in o.pre_pos | o.pre_neg | o.add | o.delete:
            preds[a.pred] = len(a.args)
    return [Atom(p, args) for p, n in sorted(preds.items())
            for args in itertools.product(CONSTANTS, repeat=n)]


def refinement_sequence(rng: random.Random, moves: int = 16, max_steps: int = 6
                        ) -> tuple[Problem, list[Conjecture]]:
    """Apply random refinement moves to the initial conjecture of a random
    problem and return every conjecture reached (the start included).

    Moves link an open hypothesis to some existing producer, insert a step
    (ground or lifted) that can supply it, or graft a one-action fragment.
    Threat resolution is applied only sometimes, so unresolved threats also
    reach the solution check. A final pass links whatever it can.
    """
    p = random_problem(rng, max_actions=32, goal_size=(2, 3))
    actions = ground_domain(p.domain, CONSTANTS)
    chi = initial_conjecture(p)
    seen = [chi]
    for _ in range(moves):
        hyps = hypotheses_of(chi)
        if not hyps:
            break
        h = rng.choice(hyps)
        r = rng.random()
        try:
            if r < 0.45:
                producers = [s for s in chi.step_ids
                             if s != h.consumer and not chi.before(h.consumer, s)]
                nxt = add_causal_link(chi, rng.choice(producers), h.atom, h.consumer)
            elif len(chi.steps) >= max_steps:
                continue
            elif r < 0.8:
                ops = [o for o in p.domain.operators
                       if any(a.pred == h.atom.pred for a in o.add)]
                if not ops:
                    continue
                op = rng.choice(ops)
                lifted = rng.random() < 0.5
                nxt, sid = add_step(chi, op, None if lifted else
                                    [rng.choice(CONSTANTS) for _ in op.params])
                nxt = add_causal_link(nxt, sid, h.atom, h.consumer)
            else:
                cands = [a for a in actions if chi.bindings.resolve(h.atom) in a.add]
                if not cands:
                    continue
                nxt = graft_subconjecture(chi, h, Fragment((rng.choice(cands),)))
        except ComposeError:
            continue
        if rng.random() < 0.7:
            nxt = resolve_threats(nxt) or nxt
        chi = nxt
        seen.append(chi)
    # finish greedily: link what existing steps can supply
    for h in hypotheses_of(chi):
        for producer in chi.step_ids:
            if producer == h.consumer or chi.before(h.consumer, producer):
                continue
            try:
                nxt = resolve_threats(add_causal_link(chi, producer, h.atom, h.consumer))
            except ComposeError:
                continue
            if nxt is not None:
                chi = nxt
                seen.append(chi)
                break
    return p, seen


def brute_closure(nodes, edges) -> dict[tuple[str, str], bool]:
    """Floyd-Warshall reachability, reflexive."""
    reach = {(a, b): a == b or (a, b) in edges for a in nodes for b in nodes}
    for k in nodes:
        for i in nodes:
            if reach[i, k]:
                for j in nodes:
                    if reach[k, j]:
                        reach[i, j] = True
    return reach


def random_ontology(rng: random.Random, max_nodes: int = 50
                    ) -> tuple[Ontology, list[str], set[tuple[str, str]]]:
    """A random concept DAG; edges run from higher to lower index."""
    n = rng.randint(1, max_nodes)
    nodes = [f"c{i}" for i in range(n)]
    edges = set()
    for _ in range(rng.randint(0, 3 * n)):
        if n > 1:
            i = rng.randrange(1, n)
            edges.add((nodes[i], nodes[rng.randrange(i)]))
    parts = rng.randint(1, 3)
    onto = Ontology([f"p{k}" for k in range(parts)])
    for i, c in enumerate(nodes):
        onto.add_concept(c, f"p{i % parts}")
    for c, p in sorted(edges):
        onto.add_subsumption(c, p)
    return onto, nodes, edges
