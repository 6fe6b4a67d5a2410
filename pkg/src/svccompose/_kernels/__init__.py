"""Search kernel selection.

The compiled extension is used when it was built and importable; otherwise
the pure-Python implementation is used. Set ``SVCCOMPOSE_PURE_PYTHON=1`` to
force the fallback.
"""

from __future__ import annotations

import os
from array import array

from . import _search_py

try:
    if os.environ.get("SVCCOMPOSE_PURE_PYTHON"):
        raise ImportError("pure-python mode requested")
    from . import _search_c
except ImportError:
    _search_c = None

BACKEND = "cython" if _search_c is not None else "python"


def _words(masks, n_words):
    nbytes = n_words * 8
    buf = array("Q")
    for m in masks:
        buf.frombytes(m.to_bytes(nbytes, "little"))
    return buf


def bfs_plan_python(pre_pos, pre_neg, add, dele, init, goal, n_words, bound):
    return _search_py.bfs_plan(pre_pos, pre_neg, add, dele, init, goal, n_words, bound)


def bfs_plan_compiled(pre_pos, pre_neg, add, dele, init, goal, n_words, bound):
    if _search_c is None:
        raise RuntimeError("compiled search kernel is not available")
    n_words = max(n_words, 1)
    if not add:
        return [] if init & goal == goal else None
    return _search_c.bfs_plan(
        _words(pre_pos, n_words),
        _words(pre_neg, n_words),
        _words(add, n_words),
        _words(dele, n_words),
        _words([init], n_words),
        _words([goal], n_words),
        n_words,
        bound,
    )


def bfs_plan(pre_pos, pre_neg, add, dele, init, goal, n_words, bound):
    """Dispatch to the selected backend. Masks are Python ints."""
    if _search_c is not None:
        return bfs_plan_compiled(pre_pos, pre_neg, add, dele, init, goal, n_words, bound)
    return _search_py.bfs_plan(pre_pos, pre_neg, add, dele, init, goal, n_words, bound)
