"""One-dimensional transport on step CDFs and exact finite transport solvers.

The Kantorovich solver is a transportation-network simplex running on the
space's own scalar kind, so rational instances are solved exactly.  The
Monge solver reduces balanced uniform instances to the same simplex
(whose basic optima are integral, hence genuine maps) and falls back to a
guarded branch-and-bound over fiber-feasible assignments for general
rational weights.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .core import FiniteMMSpace, MeasurePreservingMap, Coupling, SizeLimitExceeded
from .scalars import INFINITE, check_p, is_exact, is_infinite

ASSIGNMENT_GUARD = 12  # general-weight Monge instances beyond this raise


@dataclass(frozen=True)
class StepCDF:
    """Right-continuous step CDF on [0, diam] with terminal value 1.

    ``xs`` are strictly increasing breakpoints, ``ps`` the attained values
    (nondecreasing, last exactly 1).  F(r) = 0 left of the first
    breakpoint.
    """

    xs: tuple
    ps: tuple

    def __post_init__(self):
        object.__setattr__(self, "xs", tuple(self.xs))
        object.__setattr__(self, "ps", tuple(self.ps))
        if len(self.xs) != len(self.ps) or not self.xs:
            raise ValueError("breakpoints and values must align and be nonempty")
        for a, b in zip(self.xs, self.xs[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")
        for a, b in zip(self.ps, self.ps[1:]):
            if a > b:
                raise ValueError("values must be nondecreasing")
        if self.ps[-1] != 1:
            raise ValueError("terminal CDF value must be 1")

    @classmethod
    def from_samples(cls, values, weights) -> "StepCDF":
        """CDF of a weighted finite sample; weights must sum to 1."""
        acc = {}
        for v, w in zip(values, weights):
            acc[v] = acc.get(v, 0) + w
        xs = sorted(acc)
        ps = []
        run = 0
        for x in xs:
            run = run + acc[x]
            ps.append(run)
        one = 1 if is_exact(run) else 1.0
        if is_exact(run):
            if run != 1:
                raise ValueError("sample weights must sum to 1")
            ps[-1] = run
        else:
            ps[-1] = one
        return cls(tuple(xs), tuple(ps))

    def __call__(self, r):
        i = bisect_right(self.xs, r)
        return self.ps[i - 1] if i else (0 if is_exact(self.xs[0]) else 0.0)

    def quantile(self, u):
        """Generalized inverse inf{r >= 0 | F(r) > u}; u = 1 gives the top breakpoint."""
        if u < 0 or u > 1:
            raise ValueError("quantile level must lie in [0, 1]")
        if u == 1:
            return self.xs[-1]
        i = bisect_right(self.ps, u)
        return self.xs[i]


def _check_same_kind(F: StepCDF, G: StepCDF):
    if is_exact(F.xs[0]) != is_exact(G.xs[0]):
        raise ValueError("cannot mix exact and float CDFs")


def w1_cdf(F: StepCDF, G: StepCDF):
    """Integral of |F - G| over the merged breakpoint grid (exact in exact mode)."""
    _check_same_kind(F, G)
    grid = sorted(set(F.xs) | set(G.xs))
    total = 0
    for a, b in zip(grid, grid[1:]):
        total = total + abs(F(a) - G(a)) * (b - a)
    return total


def wp_quantile_pow(F: StepCDF, G: StepCDF, p):
    """Exact integral of |F^{-1}(u) - G^{-1}(u)|^p over merged probability levels."""
    check_p(p)
    if p == math.inf:
        raise ValueError("p = inf is not supported by the quantile integral")
    _check_same_kind(F, G)
    levels = sorted(set(F.ps) | set(G.ps) | ({0} if is_exact(F.xs[0]) else {0.0}))
    total = 0
    for lo, hi in zip(levels, levels[1:]):
        if not hi > lo:
            continue
        gap = abs(F.quantile(lo) - G.quantile(lo))
        if gap != 0:
            total = total + (gap ** p) * (hi - lo)
    return total


def wp_quantile(F: StepCDF, G: StepCDF, p):
    """p-Wasserstein distance of the two distributions via quantile functions.

    Exact for p = 1 (and it then coincides with w1_cdf); other p return the
    float p-th root of the exact integral.
    """
    pow_val = wp_quantile_pow(F, G, p)
    if p == 1:
        return pow_val
    return float(pow_val) ** (1.0 / float(p))


@dataclass(frozen=True)
class CostMatrix:
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for row in self.rows:
            for v in row:
                if v < 0:
                    raise ValueError("costs must be nonnegative")

    @property
    def shape(self):
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        return self.rows[ij[0]][ij[1]]


# ---------------------------------------------------------------------------
# Exact transportation simplex.
# ---------------------------------------------------------------------------

def _northwest_corner(supply, demand):
    m, n = len(supply), len(demand)
    plan = {}
    basis = []
    s = list(supply)
    d = list(demand)
    i = j = 0
    while i < m and j < n:
        q = min(s[i], d[j])
        plan[(i, j)] = q
        basis.append((i, j))
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if s[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1
    return plan, basis


def _tree_cycle(basis: set, enter):
    """Unique cycle in the basis tree plus the entering cell, as alternating cells."""
    m_nodes = {}
    adj = {}
    for (i, j) in basis:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    start, goal = ("r", enter[0]), ("c", enter[1])
    # path from start to goal through the basis tree
    stack = [(start, None)]
    parent = {start: None}
    while stack:
        node, par = stack.pop()
        if node == goal:
            break
        for nxt in adj.get(node, ()):
            if nxt != par and nxt not in parent:
                parent[nxt] = node
                stack.append((nxt, node))
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()  # start ... goal
    cells = []
    for a, b in zip(path, path[1:]):
        if a[0] == "r":
            cells.append((a[1], b[1]))
        else:
            cells.append((b[1], a[1]))
    # cycle: enter (+), then alternate along the path back from goal to start
    cycle = [enter] + cells[::-1]
    return cycle


def transportation_simplex(cost: Sequence[Sequence], supply: Sequence, demand: Sequence):
    """Exact primal network simplex for the transportation polytope.

    Bland's entering rule (first negative reduced cost in row-major order)
    with lexicographically smallest leaving cell: deterministic and free of
    cycling.  Returns (plan dict, objective).
    """
    m, n = len(supply), len(demand)
    if sum(supply) != sum(demand):
        raise ValueError("supply and demand totals differ")
    plan, basis_list = _northwest_corner(supply, demand)
    basis = set(basis_list)
    while True:
        # duals from the basis tree
        u = [None] * m
        v = [None] * n
        u[0] = 0
        pending = list(basis)
        progress = True
        while pending and progress:
            progress = False
            rest = []
            for (i, j) in pending:
                if u[i] is not None and v[j] is None:
                    v[j] = cost[i][j] - u[i]
                    progress = True
                elif v[j] is not None and u[i] is None:
                    u[i] = cost[i][j] - v[j]
                    progress = True
                else:
                    rest.append((i, j))
            pending = rest
        enter = None
        for i in range(m):
            ui = u[i]
            for j in range(n):
                if (i, j) in basis:
                    continue
                if cost[i][j] - ui - v[j] < 0:
                    enter = (i, j)
                    break
            if enter:
                break
        if enter is None:
            obj = 0
            for (i, j), q in plan.items():
                if q != 0:
                    obj = obj + cost[i][j] * q
            return plan, obj
        cycle = _tree_cycle(basis, enter)
        minus = cycle[1::2]
        theta = min(plan[c] for c in minus)
        leave = min(c for c in minus if plan[c] == theta)
        for k, c in enumerate(cycle):
            delta = theta if k % 2 == 0 else -theta
            plan[c] = plan.get(c, 0) + delta
        basis.add(enter)
        basis.remove(leave)
        del plan[leave]


def solve_kantorovich(C: CostMatrix, w_X: Sequence, w_Y: Sequence) -> Tuple[Coupling, object]:
    """Optimal coupling for a linear transport cost; exact on rationals."""
    m, n = C.shape
    if len(w_X) != m or len(w_Y) != n:
        raise ValueError("weight lengths do not match cost shape")
    plan, obj = transportation_simplex(C.rows, list(w_X), list(w_Y))
    zero = 0 if is_exact(w_X[0]) else 0.0
    mat = [[zero] * n for _ in range(m)]
    for (i, j), q in plan.items():
        mat[i][j] = q
    return Coupling(mat), obj


def _uniform_ratio(w_X, w_Y) -> Optional[int]:
    """k such that the instance is uniform with n_X = k n_Y, else None."""
    if any(w != w_X[0] for w in w_X) or any(w != w_Y[0] for w in w_Y):
        return None
    nx, ny = len(w_X), len(w_Y)
    if nx % ny != 0:
        return None
    k = nx // ny
    if w_Y[0] != k * w_X[0]:
        return None
    return k


def _monge_branch_and_bound(C, w_X, w_Y):
    """Exhaustive DFS over fiber-feasible assignments with cost pruning."""
    nx, ny = len(w_X), len(w_Y)
    if nx > ASSIGNMENT_GUARD:
        raise SizeLimitExceeded(
            f"general-weight Monge instances limited to n_X <= {ASSIGNMENT_GUARD}")
    remaining = list(w_Y)
    best = [None, None]  # cost, assignment
    assign = [0] * nx
    row_min = [min(C.rows[i]) for i in range(nx)]
    suffix_min = [0] * (nx + 1)
    for i in range(nx - 1, -1, -1):
        suffix_min[i] = suffix_min[i + 1] + w_X[i] * row_min[i]

    def rec(i, cost):
        if best[0] is not None and cost + suffix_min[i] >= best[0]:
            return
        if i == nx:
            if all(r == 0 for r in remaining):
                if best[0] is None or cost < best[0]:
                    best[0] = cost
                    best[1] = tuple(assign)
            return
        w = w_X[i]
        for j in range(ny):
            if remaining[j] >= w:
                remaining[j] -= w
                assign[i] = j
                rec(i + 1, cost + w * C.rows[i][j])
                remaining[j] += w
        return

    rec(0, 0)
    if best[0] is None:
        return None, INFINITE
    return MeasurePreservingMap(best[1]), best[0]


def solve_assignment(C: CostMatrix, w_X: Sequence, w_Y: Sequence):
    """Optimal measure-preserving map for a linear cost.

    Returns (map, value); (None, INFINITE) when no measure-preserving map
    exists.  Balanced uniform instances are solved exactly through the
    transportation simplex (integral vertices of the scaled polytope are
    k-to-1 maps); everything else goes through guarded enumeration.
    """
    m, n = C.shape
    if len(w_X) != m or len(w_Y) != n:
        raise ValueError("weight lengths do not match cost shape")
    if m < n:
        # a measure-preserving map between fully supported finite spaces is
        # surjective, which is impossible here
        return None, INFINITE
    k = _uniform_ratio(w_X, w_Y)
    if k is not None:
        supplies = [1] * m
        demands = [k] * n
        plan, _ = transportation_simplex(C.rows, supplies, demands)
        assign = [None] * m
        for (i, j), q in plan.items():
            if q == 1:
                assign[i] = j
            elif q != 0:
                raise AssertionError("non-integral vertex in unimodular instance")
        value = 0
        for i, j in enumerate(assign):
            value = value + w_X[i] * C.rows[i][j]
        return MeasurePreservingMap(assign), value
    return _monge_branch_and_bound(C, w_X, w_Y)


def _csv_scalar(x) -> str:
    from .scalars import Quad, format_rational
    if isinstance(x, Quad):
        return repr(float(x))
    if isinstance(x, (int, Fraction)):
        return format_rational(x)
    return repr(x)


def cdf_to_csv_rows(F) -> list:
    """Rows "r,value" for a Step or piecewise-linear CDF (exact rational strings)."""
    return [f"{_csv_scalar(x)},{_csv_scalar(p)}" for x, p in zip(F.xs, F.ps)]
