from __future__ import annotations

import os
import random
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from generators import random_problem
from svccompose import _kernels
from svccompose.planner import _encode, solve

compiled = pytest.mark.skipif(_kernels.BACKEND != "cython", reason="extension not built")


@compiled
@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 8))
def test_backends_return_identical_plans(seed, bound):
    p = random_problem(random.Random(seed))
    assert solve(p, bound, backend="python") == solve(p, bound, backend="cython")


@compiled
def test_multi_word_states():
    # more than 64 atoms forces several machine words per state
    from svccompose.logic import Atom
    from svccompose.planner import Domain, Operator, Problem

    step = Operator("step", ("?a", "?b"),
                    frozenset({Atom("at", ("?a",)), Atom("next", ("?a", "?b"))}),
                    frozenset(), frozenset({Atom("at", ("?b",))}),
                    frozenset({Atom("at", ("?a",))}))
    cells = [f"n{i}" for i in range(40)]
    init = {Atom("at", ("n0",))} | {Atom("next", (a, b)) for a, b in zip(cells, cells[1:])}
    p = Problem(frozenset(init), frozenset({Atom("at", ("n39",))}), Domain((step,)))
    assert _encode(p).n_words > 1
    py, cy = solve(p, 40, backend="python"), solve(p, 40, backend="cython")
    assert py == cy and len(py) == 39


def test_raw_kernel_contract():
    # masks: atom0 -> action0 -> atom1 -> action1 -> atom2
    args = ([0b001, 0b010], [0, 0], [0b010, 0b100], [0b001, 0b010], 0b001, 0b100, 1)
    assert _kernels.bfs_plan_python(*args, 5) == [0, 1]
    assert _kernels.bfs_plan_python(*args, 1) is None
    assert _kernels.bfs_plan_python([], [], [], [], 0b1, 0b1, 1, 3) == []
    if _kernels.BACKEND == "cython":
        assert _kernels.bfs_plan_compiled(*args, 5) == [0, 1]
        assert _kernels.bfs_plan_compiled(*args, 1) is None


def test_pure_python_switch():
    env = dict(os.environ, SVCCOMPOSE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import svccompose; print(svccompose.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
