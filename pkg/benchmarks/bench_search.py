"""Compare the compiled and pure-Python plan search kernels.

Both kernels receive the same encoded problems; the script checks that the
plans agree and reports the median wall time per problem.

    python3 benchmarks/bench_search.py --problems 40 --repeat 5
"""

from __future__ import annotations

import argparse
import random
import statistics
import sys
import time
from pathlib import Path

from svccompose import _kernels
from svccompose.logic import Atom
from svccompose.planner import Domain, Operator, Problem, _encode

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from generators import random_problem  # noqa: E402


def logistics(n_cities: int) -> Problem:
    """A ring of cities: walk from the first to the last, collecting tokens."""
    cities = [f"k{i}" for i in range(n_cities)]
    move = Operator("move", ("?a", "?b"),
                    frozenset({Atom("at", ("?a",)), Atom("road", ("?a", "?b"))}),
                    frozenset(), frozenset({Atom("at", ("?b",))}),
                    frozenset({Atom("at", ("?a",))}))
    grab = Operator("grab", ("?a",),
                    frozenset({Atom("at", ("?a",)), Atom("token", ("?a",))}),
                    frozenset(), frozenset({Atom("has", ("?a",))}),
                    frozenset({Atom("token", ("?a",))}))
    roads = {Atom("road", (a, b)) for a, b in zip(cities, cities[1:] + cities[:1])}
    roads |= {Atom("road", (b, a)) for a, b in zip(cities, cities[1:] + cities[:1])}
    tokens = {Atom("token", (c,)) for c in cities[1::2]}
    init = frozenset({Atom("at", (cities[0],))} | roads | tokens)
    goal = frozenset({Atom("has", (c,)) for c in cities[1::2][:3]} | {Atom("at", (cities[0],))})
    return Problem(init, goal, Domain((move, grab)))


def switches(n: int) -> Problem:
    """n independent switches, all to be turned on: breadth-first search visits 2^n states."""
    lamps = [f"s{i}" for i in range(n)]
    on = Operator("on", ("?x",), frozenset({Atom("lamp", ("?x",))}),
                  frozenset({Atom("lit", ("?x",))}), frozenset({Atom("lit", ("?x",))}), frozenset())
    off = Operator("off", ("?x",), frozenset({Atom("lit", ("?x",))}), frozenset(),
                   frozenset(), frozenset({Atom("lit", ("?x",))}))
    init = frozenset(Atom("lamp", (x,)) for x in lamps)
    goal = frozenset(Atom("lit", (x,)) for x in lamps)
    return Problem(init, goal, Domain((on, off)))


def _time(fn, enc, bound: int, repeat: int) -> tuple[float, list | None]:
    args = (enc.pre_pos, enc.pre_neg, enc.add, enc.dele, enc.init, enc.goal, enc.n_words, bound)
    samples, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples), result


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problems", type=int, default=40, help="random problems to time")
    ap.add_argument("--repeat", type=int, default=5, help="timings per problem (median kept)")
    ap.add_argument("--bound", type=int, default=16, help="plan length bound")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _kernels.BACKEND != "cython":
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`")
        return 1

    rng = random.Random(args.seed)
    suites = {
        "random": [random_problem(rng) for _ in range(args.problems)],
        "ring": [logistics(n) for n in (6, 8, 10, 12)],
        "switch": [switches(n) for n in (10, 12, 14)],
    }
    print(f"{'suite':<8}{'problems':>9}{'python ms':>12}{'cython ms':>12}{'speedup':>9}")
    for name, problems in suites.items():
        py_total = c_total = 0.0
        for p in problems:
            enc = _encode(p)
            if enc.goal is None:
                continue
            t_py, r_py = _time(_kernels.bfs_plan_python, enc, args.bound, args.repeat)
            t_c, r_c = _time(_kernels.bfs_plan_compiled, enc, args.bound, args.repeat)
            if r_py != r_c:
                print(f"kernels disagree on a {name} problem: {r_py} vs {r_c}")
                return 1
            py_total += t_py
            c_total += t_c
        speedup = py_total / c_total if c_total else float("nan")
        print(f"{name:<8}{len(problems):>9}{py_total * 1e3:>12.2f}{c_total * 1e3:>12.2f}"
              f"{speedup:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
