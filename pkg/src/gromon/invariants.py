"""Global and local distance distributions and the transport lower bounds.

The three bounds on the Gromov-Monge 1-distance:

* ``lower_bound_global``      -- integral of |H_X - H_Y| (no optimization);
* ``lower_bound_local_monge`` -- optimal measure-preserving map against the
  local-distribution cost (the bound usually written L_h);
* ``lower_bound_local_kantorovich`` -- the coupling relaxation L_h^U.

General p uses the quantile form; everything is exact on exact scalars.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

from .core import FiniteMMSpace
from .scalars import INFINITE, check_p, is_exact
from .transport import (CostMatrix, StepCDF, solve_assignment,
                        solve_kantorovich, w1_cdf, wp_quantile_pow)


@dataclass(frozen=True)
class GlobalDistribution:
    cdf: StepCDF


@dataclass(frozen=True)
class LocalDistribution:
    per_point: tuple  # one StepCDF per point


def global_distribution(X: FiniteMMSpace) -> GlobalDistribution:
    """CDF of d_X between two independent mu_X samples (all n^2 ordered pairs)."""
    values = []
    weights = []
    for i in range(X.n):
        wi = X.weights[i]
        for j in range(X.n):
            values.append(X.dist[i][j])
            weights.append(wi * X.weights[j])
    return GlobalDistribution(StepCDF.from_samples(values, weights))


def local_distribution(X: FiniteMMSpace) -> LocalDistribution:
    """For each x the CDF of d_X(x, .) under mu_X (ball-volume growth)."""
    cdfs = []
    for i in range(X.n):
        cdfs.append(StepCDF.from_samples(X.dist[i], X.weights))
    return LocalDistribution(tuple(cdfs))


def cost_function(X: FiniteMMSpace, Y: FiniteMMSpace) -> CostMatrix:
    """C(x, y) = integral of |h_X(x,t) - h_Y(y,t)| dt, exact in exact mode."""
    hx = local_distribution(X).per_point
    hy = local_distribution(Y).per_point
    rows = [[w1_cdf(hx[i], hy[j]) for j in range(Y.n)] for i in range(X.n)]
    return CostMatrix(rows)


def lower_bound_global(X: FiniteMMSpace, Y: FiniteMMSpace, p=1):
    """L_H: for p = 1 the exact integral of |H_X - H_Y|; otherwise the
    p-Wasserstein quantile form, returned as a float root (the exact p-th
    power is available via lower_bound_global_pow)."""
    check_p(p)
    if p == math.inf:
        raise ValueError("global lower bound defined for p < inf")
    F = global_distribution(X).cdf
    G = global_distribution(Y).cdf
    if p == 1:
        return w1_cdf(F, G)
    return float(wp_quantile_pow(F, G, p)) ** (1.0 / float(p))


def lower_bound_global_pow(X: FiniteMMSpace, Y: FiniteMMSpace, p):
    """Exact p-th power of the quantile form of L_H."""
    F = global_distribution(X).cdf
    G = global_distribution(Y).cdf
    return wp_quantile_pow(F, G, p)


def lower_bound_local_monge(X: FiniteMMSpace, Y: FiniteMMSpace, map_class: str = "all"):
    """L_h: optimal transport-map value of the local-distribution cost.

    ``map_class`` restricts the admissible maps ("all" or "bijective", the
    category-restricted variant).  Returns INFINITE when no admissible map
    exists.
    """
    if map_class not in ("all", "bijective"):
        raise ValueError("map_class must be 'all' or 'bijective'")
    if map_class == "bijective" and X.n != Y.n:
        return INFINITE
    C = cost_function(X, Y)
    phi, value = solve_assignment(C, X.weights, Y.weights)
    if phi is None:
        return INFINITE
    if map_class == "bijective" and len(set(phi.assignment)) != X.n:
        # optimal unrestricted map is not a bijection; re-solve restricted
        phi, value = _bijective_assignment(C, X, Y)
        if phi is None:
            return INFINITE
    return value


def _bijective_assignment(C: CostMatrix, X: FiniteMMSpace, Y: FiniteMMSpace):
    """Exact optimal weight-compatible bijection (guarded enumeration)."""
    from .core import SizeLimitExceeded
    n = X.n
    if n > 10:
        raise SizeLimitExceeded("bijective map class limited to n <= 10")
    best = [None, None]
    used = [False] * n

    def rec(i, cost, assign):
        if best[0] is not None and cost >= best[0]:
            return
        if i == n:
            best[0] = cost
            best[1] = tuple(assign)
            return
        for j in range(n):
            if not used[j] and X._eq(X.weights[i], Y.weights[j]):
                used[j] = True
                assign.append(j)
                rec(i + 1, cost + X.weights[i] * C.rows[i][j], assign)
                assign.pop()
                used[j] = False

    rec(0, 0, [])
    if best[0] is None:
        return None, INFINITE
    from .core import MeasurePreservingMap
    return MeasurePreservingMap(best[1]), best[0]


def lower_bound_local_kantorovich(X: FiniteMMSpace, Y: FiniteMMSpace):
    """L_h^U: coupling relaxation of L_h (always finite; exact LP value)."""
    C = cost_function(X, Y)
    _, value = solve_kantorovich(C, X.weights, Y.weights)
    return value


def cost_matrix_to_json(C: CostMatrix) -> dict:
    from .scalars import format_rational
    kind = "rational" if is_exact(C.rows[0][0]) else "float"

    def enc(v):
        if kind == "rational" and not hasattr(v, "d"):
            return format_rational(v)
        return float(v)

    return {"shape": list(C.shape), "scalar": kind,
            "rows": [[enc(v) for v in row] for row in C.rows]}
