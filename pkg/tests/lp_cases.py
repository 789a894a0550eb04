"""Small LPs with hand-derived optima.

Each case is ``(name, build, expected)`` where ``build()`` returns a
``MilpModel`` (always a minimisation) and ``expected`` is the optimal
objective, or the string ``"infeasible"`` / ``"unbounded"``.
"""

from __future__ import annotations

import math

from padplan.model import MilpModel

INF = math.inf


def _lp(name, costs, rows, bounds=None):
    m = MilpModel(name)
    bounds = bounds or [(0.0, INF)] * len(costs)
    for k, (c, (lo, hi)) in enumerate(zip(costs, bounds)):
        m.add_variable(f"v{k}", lo, hi, cost=c)
    for coeffs, sense, rhs in rows:
        m.add_constraint({k: a for k, a in enumerate(coeffs) if a}, sense, rhs)
    return m


def product_mix():
    # max 3x + 5y; x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
    return _lp("product_mix", [-3, -5], [([1, 0], "<=", 4), ([0, 2], "<=", 12), ([3, 2], "<=", 18)])


def beale_cycling():
    # classic cycling example for Dantzig's rule; optimum -1/20
    return _lp(
        "beale",
        [-0.75, 150, -0.02, 6],
        [
            ([0.25, -60, -0.04, 9], "<=", 0),
            ([0.5, -90, -0.02, 3], "<=", 0),
            ([0, 0, 1, 0], "<=", 1),
        ],
    )


def chvatal_degenerate():
    # degenerate at the origin; optimum 1 at (1, 0, 1, 0)
    return _lp(
        "chvatal",
        [-10, 57, 9, 24],
        [
            ([0.5, -5.5, -2.5, 9], "<=", 0),
            ([0.5, -1.5, -0.5, 1], "<=", 0),
            ([1, 0, 0, 0], "<=", 1),
        ],
    )


def klee_minty_3():
    return _lp(
        "klee_minty",
        [-100, -10, -1],
        [([1, 0, 0], "<=", 1), ([20, 1, 0], "<=", 100), ([200, 20, 1], "<=", 10000)],
    )


def diet():
    # min 2x + 3y; x + y >= 4, x + 3y >= 6 -> 9 at (3, 1)
    return _lp("diet", [2, 3], [([1, 1], ">=", 4), ([1, 3], ">=", 6)])


def simplex_equality():
    return _lp("simplex_eq", [1, 2, 3], [([1, 1, 1], "=", 1)])


def boxed_sum():
    return _lp("boxed", [-1, -1], [([1, 1], "<=", 4)], [(0, 2), (0, 3)])


def negative_bounds():
    return _lp("neg_bounds", [1, 1], [([1, 1], ">=", -4)], [(-3, INF), (-2, INF)])


def free_variable():
    return _lp("free", [1], [([1], ">=", -5)], [(-INF, INF)])


def free_with_partner():
    # x free, y in [0, 10], x + y >= 1 -> x = -9
    return _lp("free_partner", [1, 0], [([1, 1], ">=", 1)], [(-INF, INF), (0, 10)])


def crowded_vertex():
    # four constraints tight at (1, 1)
    return _lp(
        "crowded",
        [-1, -1],
        [([1, 0], "<=", 1), ([0, 1], "<=", 1), ([1, 1], "<=", 2), ([1, 2], "<=", 3)],
    )


def origin_pinned():
    return _lp(
        "pinned",
        [-2, -1],
        [([1, -1], "<=", 0), ([-1, 1], "<=", 0), ([1, 1], "<=", 0)],
    )


def transportation():
    # redundant equality rows (balanced supply and demand); optimum 305
    return _lp(
        "transport",
        [8, 6, 9, 4],
        [
            ([1, 1, 0, 0], "=", 20),
            ([0, 0, 1, 1], "=", 30),
            ([1, 0, 1, 0], "=", 25),
            ([0, 1, 0, 1], "=", 25),
        ],
    )


def max_flow():
    # arcs sa, sb, ab, at, bt with capacities 3, 2, 1, 2, 3; max flow 5
    return _lp(
        "max_flow",
        [0, 0, 0, -1, -1],
        [([1, 0, -1, -1, 0], "=", 0), ([0, 1, 1, 0, -1], "=", 0)],
        [(0, 3), (0, 2), (0, 1), (0, 2), (0, 3)],
    )


def assignment_3x3():
    cost = [[4, 1, 3], [2, 0, 5], [3, 2, 2]]
    c = [cost[i][j] for i in range(3) for j in range(3)]
    rows = []
    for i in range(3):
        rows.append(([1 if k // 3 == i else 0 for k in range(9)], "=", 1))
    for j in range(3):
        rows.append(([1 if k % 3 == j else 0 for k in range(9)], "=", 1))
    return _lp("assignment", c, rows)


def mixed_senses():
    # max x1 + 2 x2; -x1 + x2 <= 1, x1 + x2 <= 3, x1 >= 0.5 -> 5 at (1, 2)
    return _lp("mixed", [-1, -2], [([-1, 1], "<=", 1), ([1, 1], "<=", 3), ([1, 0], ">=", 0.5)])


def bound_flips():
    return _lp("flips", [-1, -1, -1], [([1, 1, 1], "<=", 2.5)], [(0, 1)] * 3)


def no_rows():
    return _lp("no_rows", [-1, 2], [], [(0, 5), (-1, 4)])


def fixed_column():
    return _lp("fixed", [3, 1], [([1, 1], ">=", 2)], [(1, 1), (0, INF)])


def contradictory_rows():
    return _lp("contradictory", [1, 1], [([1, 1], "<=", 1), ([1, 1], ">=", 2)])


def bound_conflict():
    return _lp("bound_conflict", [1], [([1], ">=", 2)], [(0, 1)])


def inconsistent_equalities():
    return _lp("inconsistent_eq", [0, 0], [([1, 1], "=", 1), ([1, 1], "=", 2)], [(-INF, INF)] * 2)


def ray():
    return _lp("ray", [-1, 0], [([1, -1], "<=", 1)])


def free_ray():
    # x free falls without limit while y rises to cover x + y >= 1
    return _lp("free_ray", [1, 0], [([1, 1], ">=", 1)], [(-INF, INF), (0, INF)])


LP_CASES = [
    ("product_mix", product_mix, -36.0),
    ("beale_cycling", beale_cycling, -0.05),
    ("chvatal_degenerate", chvatal_degenerate, -1.0),
    ("klee_minty_3", klee_minty_3, -10000.0),
    ("diet", diet, 9.0),
    ("simplex_equality", simplex_equality, 1.0),
    ("boxed_sum", boxed_sum, -4.0),
    ("negative_bounds", negative_bounds, -4.0),
    ("free_variable", free_variable, -5.0),
    ("free_with_partner", free_with_partner, -9.0),
    ("crowded_vertex", crowded_vertex, -2.0),
    ("origin_pinned", origin_pinned, 0.0),
    ("transportation", transportation, 305.0),
    ("max_flow", max_flow, -5.0),
    ("assignment_3x3", assignment_3x3, 5.0),
    ("mixed_senses", mixed_senses, -5.0),
    ("bound_flips", bound_flips, -2.5),
    ("no_rows", no_rows, -7.0),
    ("fixed_column", fixed_column, 4.0),
    ("contradictory_rows", contradictory_rows, "infeasible"),
    ("bound_conflict", bound_conflict, "infeasible"),
    ("inconsistent_equalities", inconsistent_equalities, "infeasible"),
    ("ray", ray, "unbounded"),
    ("free_ray", free_ray, "unbounded"),
]
