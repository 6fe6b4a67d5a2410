"""Pure-Python forward search over bitset-encoded STRIPS states.

States are Python ints used as bitsets. The compiled twin in ``_search_c.pyx``
must return exactly the same action sequence for the same input.
"""

from __future__ import annotations


def bfs_plan(pre_pos, pre_neg, add, dele, init, goal, n_words, bound):
    """Breadth-first search by plan length with duplicate-state detection.

    Actions are tried in index order, so the first shortest plan in that
    order is returned. Returns a list of action indices or ``None``.
    """
    if init & goal == goal:
        return []
    actions = list(zip(range(len(add)), pre_pos, pre_neg, add, dele))
    parent: dict[int, tuple[int, int] | None] = {init: None}
    frontier = [init]
    for _ in range(bound):
        nxt = []
        for s in frontier:
            for i, pp, pn, ad, de in actions:
                if s & pp != pp or s & pn:
                    continue
                t = (s & ~de) | ad
                if t in parent:
                    continue
                parent[t] = (s, i)
                if t & goal == goal:
                    return _path(parent, t)
                nxt.append(t)
        if not nxt:
            return None
        frontier = nxt
    return None


def _path(parent, state):
    out = []
    link = parent[state]
    while link is not None:
        prev, i = link
        out.append(i)
        link = parent[prev]
    out.reverse()
    return out
