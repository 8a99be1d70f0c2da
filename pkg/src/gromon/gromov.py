"""Gromov-Monge p-distance solvers and the structures around them.

``gm_exact`` enumerates measure-preserving maps with fiber-weight pruning
and branch-and-bound on the (additive, nonnegative) pair cost; the first
optimum in lexicographic order is kept, so witnesses are reproducible.
``gm_heuristic`` is a seeded 2-swap local search over the same constraint
set.  Values are carried as exact p-th powers so that equalities like
d(Delta_2n, Delta_n)^p = 1/(2n) can be certified on rationals.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import (Coupling, FiniteMMSpace, MeasurePreservingMap,
                   SizeLimitExceeded, coupling_from_map, is_isomorphism,
                   map_cost_pow, pushforward_check)
from .invariants import (global_distribution, lower_bound_global,
                         lower_bound_local_kantorovich,
                         lower_bound_local_monge)
from .scalars import INFINITE, check_p, is_infinite
from .transport import StepCDF

UNIFORM_GUARD = 8
GENERAL_GUARD = 12


@dataclass(frozen=True)
class GMResult:
    """Outcome of a Gromov-Monge solve.

    ``value_pow`` is the exact p-th power of the distance (INFINITE when no
    measure-preserving map exists); ``value`` exposes the root, exact for
    p = 1 and p = inf, float otherwise.
    """

    p: object
    value_pow: object
    witness: Optional[MeasurePreservingMap]
    method: str

    @property
    def infinite(self) -> bool:
        return is_infinite(self.value_pow)

    @property
    def value(self):
        if self.infinite:
            return INFINITE
        if self.p == 1 or self.p == math.inf:
            return self.value_pow
        return float(self.value_pow) ** (1.0 / float(self.p))

    def to_json(self) -> dict:
        from .scalars import format_rational, is_exact
        if self.infinite:
            val = "inf"
        elif is_exact(self.value) and not hasattr(self.value, "d"):
            val = format_rational(self.value)
        else:
            val = float(self.value)
        return {"value": val,
                "witness": list(self.witness.assignment) if self.witness else None,
                "method": self.method}


def _feasible_maps(X: FiniteMMSpace, Y: FiniteMMSpace):
    """DFS generator of all measure-preserving assignments, lexicographic."""
    nx, ny = X.n, Y.n
    remaining = list(Y.weights)
    assign = [0] * nx

    def rec(i):
        if i == nx:
            if all(r == 0 for r in remaining):
                yield tuple(assign)
            return
        w = X.weights[i]
        for j in range(ny):
            if remaining[j] >= w:
                remaining[j] -= w
                assign[i] = j
                yield from rec(i + 1)
                remaining[j] += w

    yield from rec(0)


def _pair_cost(X, Y, i, j, yi, yj, p):
    g = abs(X.dist[i][j] - Y.dist[yi][yj])
    if p == math.inf:
        return g
    if g == 0:
        return 0
    return X.weights[i] * X.weights[j] * g ** p


def gm_exact(X: FiniteMMSpace, Y: FiniteMMSpace, p=1) -> GMResult:
    """Global optimum of the Gromov-Monge objective over all transport maps.

    Guards: uniform instances up to n_X = 8 (n_X a multiple of n_Y),
    general rational weights up to n_X = 12.
    """
    check_p(p)
    nx, ny = X.n, Y.n
    uniform = (all(w == X.weights[0] for w in X.weights)
               and all(w == Y.weights[0] for w in Y.weights))
    if uniform and nx % ny == 0 and Y.weights[0] == (nx // ny) * X.weights[0]:
        if nx > UNIFORM_GUARD:
            raise SizeLimitExceeded(f"uniform exact solve limited to n_X <= {UNIFORM_GUARD}")
    elif nx > GENERAL_GUARD:
        raise SizeLimitExceeded(f"exact solve limited to n_X <= {GENERAL_GUARD}")
    if nx < ny:
        return GMResult(p, INFINITE, None, "exact")

    remaining = list(Y.weights)
    assign = [0] * nx
    best_cost = [None]
    best_assign = [None]
    is_max = p == math.inf

    def rec(i, cost):
        if best_cost[0] is not None and cost >= best_cost[0] and best_cost[0] != cost:
            pass
        if best_cost[0] is not None and cost > best_cost[0]:
            return
        if best_cost[0] is not None and cost == best_cost[0] and i == 0:
            return
        if i == nx:
            if all(r == 0 for r in remaining):
                if best_cost[0] is None or cost < best_cost[0]:
                    best_cost[0] = cost
                    best_assign[0] = tuple(assign)
            return
        w = X.weights[i]
        for j in range(ny):
            if remaining[j] >= w:
                remaining[j] -= w
                assign[i] = j
                if is_max:
                    add = cost
                    for k in range(i + 1):
                        g = _pair_cost(X, Y, i, k, j, assign[k], p)
                        if g > add:
                            add = g
                    new_cost = add
                else:
                    inc = 0
                    for k in range(i):
                        inc = inc + 2 * _pair_cost(X, Y, i, k, j, assign[k], p)
                    new_cost = cost + inc
                if best_cost[0] is None or new_cost < best_cost[0] or \
                        (new_cost == best_cost[0] and False):
                    rec(i + 1, new_cost)
                remaining[j] += w
        return

    rec(0, 0)
    if best_assign[0] is None:
        return GMResult(p, INFINITE, None, "exact")
    return GMResult(p, best_cost[0], MeasurePreservingMap(best_assign[0]), "exact")


def _swap_neighbors(assign, weights):
    """Index pairs whose targets may be exchanged without breaking fibers."""
    n = len(assign)
    for i in range(n):
        for j in range(i + 1, n):
            if assign[i] != assign[j] and weights[i] == weights[j]:
                yield i, j


def gm_heuristic(X: FiniteMMSpace, Y: FiniteMMSpace, p=1, seed: int = 0,
                 restarts: int = 8) -> GMResult:
    """Restarted 2-swap local search over measure-preserving assignments.

    Deterministic for a fixed seed; value is an upper bound on gm_exact.
    """
    check_p(p)
    if X.n < Y.n:
        return GMResult(p, INFINITE, None, "heuristic")
    start = None
    for a in _feasible_maps(X, Y):
        start = list(a)
        break
    if start is None:
        return GMResult(p, INFINITE, None, "heuristic")
    rng = random.Random(seed)
    best_cost = None
    best_assign = None
    for _ in range(max(1, restarts)):
        cur = start[:]
        rng.shuffle(cur)
        if not pushforward_check(X, Y, cur):
            cur = start[:]  # shuffle only legal for uniform weights
        cost = map_cost_pow(X, Y, MeasurePreservingMap(cur), p)
        improved = True
        while improved:
            improved = False
            for i, j in _swap_neighbors(cur, X.weights):
                trial = cur[:]
                trial[i], trial[j] = trial[j], trial[i]
                c = map_cost_pow(X, Y, MeasurePreservingMap(trial), p)
                if c < cost:
                    cur, cost = trial, c
                    improved = True
                    break
        if best_cost is None or cost < best_cost:
            best_cost, best_assign = cost, tuple(cur)
    return GMResult(p, best_cost, MeasurePreservingMap(best_assign), "heuristic")


# ---------------------------------------------------------------------------
# Mass splittings (pseudo-metric spaces projecting onto X).
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MassSplitting:
    space: FiniteMMSpace            # pseudo = True
    projection: MeasurePreservingMap  # onto the base X


def mass_splitting_from_coupling(X: FiniteMMSpace, Y: FiniteMMSpace, mu: Coupling):
    """Constructive direction of the GW-as-GM theorem.

    Z = supp(mu) with the pullback pseudo-distance through pi_X and mu as
    weights; returns (MassSplitting, pi_Y).  The Monge cost of pi_Y on Z
    equals the GW objective of mu exactly.
    """
    mu.validate(X, Y)
    support = [(i, j) for i in range(X.n) for j in range(Y.n) if mu.plan[i][j] > 0]
    if not support:
        raise ValueError("coupling has empty support")
    weights = [mu.plan[i][j] for (i, j) in support]
    dist = [[X.dist[a[0]][b[0]] for b in support] for a in support]
    Z = FiniteMMSpace(dist, weights, pseudo=True, validate_triangle=False)
    proj_x = MeasurePreservingMap(tuple(a[0] for a in support))
    proj_y = MeasurePreservingMap(tuple(a[1] for a in support))
    if not pushforward_check(Z, X, proj_x.assignment):
        raise AssertionError("projection to X is not measure-preserving")
    if not pushforward_check(Z, Y, proj_y.assignment):
        raise AssertionError("projection to Y is not measure-preserving")
    return MassSplitting(Z, proj_x), proj_y


def gw_objective_pow(X: FiniteMMSpace, Y: FiniteMMSpace, mu: Coupling, p=1):
    """Direct double-sum GW objective of a coupling (exact p-th power)."""
    check_p(p)
    total = 0
    for i in range(X.n):
        for j in range(Y.n):
            w1 = mu.plan[i][j]
            if w1 == 0:
                continue
            for k in range(X.n):
                for l in range(Y.n):
                    w2 = mu.plan[k][l]
                    if w2 == 0:
                        continue
                    g = abs(X.dist[i][k] - Y.dist[j][l])
                    if g != 0:
                        total = total + w1 * w2 * g ** p
    return total


# ---------------------------------------------------------------------------
# Partition criterion for equal global distributions.
# ---------------------------------------------------------------------------

def _cross_histogram(X: FiniteMMSpace, block_a, block_b):
    """Weighted multiset of distances between two blocks, aggregated."""
    acc = {}
    for i in block_a:
        wi = X.weights[i]
        for j in block_b:
            v = X.dist[i][j]
            acc[v] = acc.get(v, 0) + wi * X.weights[j]
    return sorted(acc.items())


def _check_partition(X: FiniteMMSpace, blocks):
    seen = set()
    for block in blocks:
        for i in block:
            if i in seen or not 0 <= i < X.n:
                raise ValueError("blocks must be disjoint and in range")
            seen.add(i)
    if len(seen) != X.n:
        raise ValueError("blocks must cover the space")


def partition_equality_check(X: FiniteMMSpace, Y: FiniteMMSpace,
                             partition_X: Sequence[Sequence[int]],
                             partition_Y: Sequence[Sequence[int]],
                             pairing: Sequence) -> bool:
    """Check the sufficient partition condition for H_X = H_Y.

    ``pairing`` lists entries ((i, j), (k, l)): block pair (i, j) of X is
    matched with block pair (k, l) of Y.  It must be a bijection on ordered
    block pairs; every matched pair is compared by exact weighted
    cross-distance histograms.
    """
    _check_partition(X, partition_X)
    _check_partition(Y, partition_Y)
    nb = len(partition_X)
    if len(partition_Y) != nb:
        raise ValueError("partitions must have equally many blocks")
    src = set()
    dst = set()
    for (ij, kl) in pairing:
        src.add(tuple(ij))
        dst.add(tuple(kl))
    every = {(i, j) for i in range(nb) for j in range(nb)}
    if src != every or dst != every:
        raise ValueError("pairing must be a bijection of ordered block pairs")
    for (i, j), (k, l) in pairing:
        hx = _cross_histogram(X, partition_X[i], partition_X[j])
        hy = _cross_histogram(Y, partition_Y[k], partition_Y[l])
        if X.exact:
            if hx != hy:
                return False
        else:
            if len(hx) != len(hy):
                return False
            for (va, wa), (vb, wb) in zip(hx, hy):
                if abs(va - vb) > X.tol or abs(wa - wb) > X.tol:
                    return False
    return True


# ---------------------------------------------------------------------------
# Quasi-metric property suite.
# ---------------------------------------------------------------------------

def quasi_metric_suite(spaces: Sequence[FiniteMMSpace], p=1) -> dict:
    """Exhaustively verify quasi-metric axioms and the lower-bound sandwich.

    Returns a report dict with a (hopefully empty) list of violations.
    Intended for small exact instances; uses gm_exact on every ordered
    pair.
    """
    check_p(p)
    n = len(spaces)
    report = {"pairs": 0, "triples": 0, "violations": []}
    vals = {}
    for a in range(n):
        for b in range(n):
            res = gm_exact(spaces[a], spaces[b], p)
            vals[(a, b)] = res
            report["pairs"] += 1
            if not res.infinite and res.value_pow < 0:
                report["violations"].append(("negative", a, b))
            if a == b and (res.infinite or res.value_pow != 0):
                report["violations"].append(("self-distance", a, b))
            if not res.infinite and res.value_pow == 0:
                if not is_isomorphism(spaces[a], spaces[b], res.witness):
                    report["violations"].append(("zero-without-isomorphism", a, b))
    for a in range(n):
        for b in range(n):
            va, vb = vals[(a, b)], vals[(b, a)]
            if spaces[a].n == spaces[b].n and \
                    all(w == spaces[a].weights[0] for w in spaces[a].weights) and \
                    all(w == spaces[b].weights[0] for w in spaces[b].weights):
                if va.infinite != vb.infinite or \
                        (not va.infinite and va.value_pow != vb.value_pow):
                    report["violations"].append(("symmetry", a, b))
            if spaces[a].n != spaces[b].n:
                if va.infinite == vb.infinite:
                    report["violations"].append(("cardinality-infinity", a, b))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                report["triples"] += 1
                ab, bc, ac = vals[(a, b)], vals[(b, c)], vals[(a, c)]
                if ab.infinite or bc.infinite:
                    continue
                if ac.infinite:
                    report["violations"].append(("triangle-infinite", a, b, c))
                    continue
                lhs = float(ac.value_pow) ** (1.0 / float(p)) if p != math.inf else float(ac.value_pow)
                rhs = (float(ab.value_pow) ** (1.0 / float(p)) +
                       float(bc.value_pow) ** (1.0 / float(p))) if p != math.inf else \
                    float(ab.value_pow) + float(bc.value_pow)
                if p == 1:
                    if ac.value_pow > ab.value_pow + bc.value_pow:
                        report["violations"].append(("triangle", a, b, c))
                elif lhs > rhs + 1e-12:
                    report["violations"].append(("triangle", a, b, c))
    # lower-bound sandwich, p = 1 only (the exact certified chain)
    if p == 1:
        for a in range(n):
            for b in range(n):
                res = vals[(a, b)]
                if res.infinite:
                    continue
                lu = lower_bound_local_kantorovich(spaces[a], spaces[b])
                lh = lower_bound_local_monge(spaces[a], spaces[b])
                lg = lower_bound_global(spaces[a], spaces[b], 1)
                if is_infinite(lh):
                    report["violations"].append(("monge-bound-infeasible", a, b))
                    continue
                if not (lu <= lh <= res.value_pow and lg <= res.value_pow):
                    report["violations"].append(("sandwich", a, b))
    return report
