"""Finite (pseudo-)metric measure spaces, measure-preserving maps and couplings.

All data is stored as immutable tuples.  Spaces with rational (or
quadratic-field) entries are exact: every operation on them is
bit-reproducible.  Float spaces carry an absolute comparison tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .scalars import (DEFAULT_FLOAT_TOL, Quad, check_p, format_rational,
                      is_exact, parse_rational)


class SizeLimitExceeded(Exception):
    """Raised when an exact solver is asked to exceed its guard."""


def _as_tuple_matrix(rows):
    return tuple(tuple(row) for row in rows)


@dataclass(frozen=True)
class FiniteMMSpace:
    """An n-point metric measure space: distance matrix plus weight vector.

    ``pseudo=True`` relaxes the zero-distance-implies-equal axiom (mass
    splittings of Thm-style constructions need it).  Weights must be
    strictly positive (full support) and sum to one.
    """

    dist: tuple
    weights: tuple
    pseudo: bool = False
    tol: float = DEFAULT_FLOAT_TOL
    validate_triangle: bool = True

    def __post_init__(self):
        object.__setattr__(self, "dist", _as_tuple_matrix(self.dist))
        object.__setattr__(self, "weights", tuple(self.weights))
        self._validate()

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def exact(self) -> bool:
        return is_exact(self.weights[0])

    def _eq(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol

    def _validate(self):
        n = self.n
        if n == 0:
            raise ValueError("space must contain at least one point")
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise ValueError("distance matrix shape does not match weights")
        for w in self.weights:
            if not w > 0:
                raise ValueError("weights must be strictly positive (full support)")
        total = sum(self.weights)
        if not self._eq(total, 1):
            raise ValueError(f"weights must sum to 1, got {total}")
        d = self.dist
        for i in range(n):
            if not self._eq(d[i][i], 0):
                raise ValueError("diagonal of distance matrix must be zero")
            for j in range(i + 1, n):
                if not self._eq(d[i][j], d[j][i]):
                    raise ValueError("distance matrix must be symmetric")
                if d[i][j] < 0:
                    raise ValueError("distances must be nonnegative")
                if not self.pseudo and self._eq(d[i][j], 0) and self.exact:
                    raise ValueError("zero distance between distinct points in metric mode")
        if self.validate_triangle:
            for i in range(n):
                for j in range(n):
                    dij = d[i][j]
                    for k in range(n):
                        if d[i][k] > dij + d[j][k] and not self._eq(d[i][k], dij + d[j][k]):
                            raise ValueError(
                                f"triangle inequality violated at ({i},{j},{k})")

    def diameter(self):
        return max(max(row) for row in self.dist)


@dataclass(frozen=True)
class MeasurePreservingMap:
    """Assignment array X -> Y; validity is checked by pushforward_check."""

    assignment: tuple

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(a) for a in self.assignment))

    def __call__(self, i: int) -> int:
        return self.assignment[i]

    def __len__(self):
        return len(self.assignment)


@dataclass(frozen=True)
class Coupling:
    """Joint plan on X x Y with prescribed marginals."""

    plan: tuple

    def __post_init__(self):
        object.__setattr__(self, "plan", _as_tuple_matrix(self.plan))

    @property
    def shape(self):
        return len(self.plan), len(self.plan[0])

    def row_sums(self):
        return tuple(sum(row) for row in self.plan)

    def col_sums(self):
        m = len(self.plan[0])
        return tuple(sum(row[j] for row in self.plan) for j in range(m))

    def validate(self, X: FiniteMMSpace, Y: FiniteMMSpace):
        nx, ny = self.shape
        if nx != X.n or ny != Y.n:
            raise ValueError("coupling shape does not match spaces")
        for row in self.plan:
            for v in row:
                if v < 0:
                    raise ValueError("coupling entries must be nonnegative")
        for got, want in zip(self.row_sums(), X.weights):
            if not X._eq(got, want):
                raise ValueError("row marginals do not match source weights")
        for got, want in zip(self.col_sums(), Y.weights):
            if not Y._eq(got, want):
                raise ValueError("column marginals do not match target weights")


def distortion(X: FiniteMMSpace, Y: FiniteMMSpace, x: int, y: int, x2: int, y2: int):
    """|d_X(x,x') - d_Y(y,y')| for a matched pair of pairs."""
    if not (0 <= x < X.n and 0 <= x2 < X.n):
        raise IndexError("source index out of range")
    if not (0 <= y < Y.n and 0 <= y2 < Y.n):
        raise IndexError("target index out of range")
    return abs(X.dist[x][x2] - Y.dist[y][y2])


def pushforward_check(X: FiniteMMSpace, Y: FiniteMMSpace, assignment: Sequence[int]) -> bool:
    """True iff the fiber sums of the assignment reproduce the target weights."""
    if len(assignment) != X.n:
        raise ValueError("assignment length must equal |X|")
    fibers = [0] * Y.n
    for i, a in enumerate(assignment):
        if not 0 <= a < Y.n:
            raise ValueError("assignment entry out of range")
        fibers[a] = fibers[a] + X.weights[i]
    return all(Y._eq(fibers[j], Y.weights[j]) for j in range(Y.n))


def map_cost_pow(X: FiniteMMSpace, Y: FiniteMMSpace, phi: MeasurePreservingMap, p):
    """Sum_{x,x'} w_x w_{x'} |d_X(x,x') - d_Y(phi x, phi x')|^p, exact in exact mode.

    For p = inf returns the maximum distortion over the support instead.
    """
    check_p(p)
    if not pushforward_check(X, Y, phi.assignment):
        raise ValueError("map is not measure-preserving")
    a = phi.assignment
    n = X.n
    if p == math.inf:
        best = 0
        for i in range(n):
            for j in range(n):
                g = abs(X.dist[i][j] - Y.dist[a[i]][a[j]])
                if g > best:
                    best = g
        return best
    total = 0
    for i in range(n):
        wi = X.weights[i]
        for j in range(n):
            g = abs(X.dist[i][j] - Y.dist[a[i]][a[j]])
            if g != 0:
                total = total + wi * X.weights[j] * g ** p
    return total


def map_cost(X: FiniteMMSpace, Y: FiniteMMSpace, phi: MeasurePreservingMap, p):
    """L^p transport-distortion cost of a measure-preserving map.

    Exact scalar for p = 1 and p = inf; for finite p > 1 the p-th root is
    returned as a float (use map_cost_pow for the exact p-th power).
    """
    pow_val = map_cost_pow(X, Y, phi, p)
    if p == math.inf or p == 1:
        return pow_val
    return float(pow_val) ** (1.0 / float(p))


def coupling_from_map(X: FiniteMMSpace, Y: FiniteMMSpace, phi: MeasurePreservingMap) -> Coupling:
    """The plan (id x phi)_# mu_X: row x carries all of w_x at column phi(x)."""
    if not pushforward_check(X, Y, phi.assignment):
        raise ValueError("map is not measure-preserving")
    zero = 0 if X.exact else 0.0
    plan = [[zero] * Y.n for _ in range(X.n)]
    for i, a in enumerate(phi.assignment):
        plan[i][a] = X.weights[i]
    mu = Coupling(plan)
    mu.validate(X, Y)
    return mu


def is_isomorphism(X: FiniteMMSpace, Y: FiniteMMSpace, phi: MeasurePreservingMap) -> bool:
    """Bijective, weight-preserving pointwise, and distance-preserving."""
    if X.n != Y.n:
        return False
    if not pushforward_check(X, Y, phi.assignment):
        return False
    a = phi.assignment
    if len(set(a)) != X.n:
        return False
    for i in range(X.n):
        if not X._eq(X.weights[i], Y.weights[a[i]]):
            return False
        for j in range(X.n):
            if not X._eq(X.dist[i][j], Y.dist[a[i]][a[j]]):
                return False
    return True


# ---------------------------------------------------------------------------
# JSON schema:
#   { "n": int, "dist": [[str|num]], "weights": [str|num],
#     "scalar": "rational" | "float" }
# Rational entries are "p/q" strings; round-trip is bit-exact in rational
# mode.  Spaces over a quadratic field use "scalar": "quad" with entries
# [a, b, d] meaning a + b*sqrt(d) (library extension, not required by the
# documented schema).
# ---------------------------------------------------------------------------

def _scalar_to_json(x, kind):
    if kind == "rational":
        return format_rational(x)
    if kind == "quad":
        q = x if isinstance(x, Quad) else Quad(x, 0, 2)
        return [format_rational(q.a), format_rational(q.b), q.d]
    return float(x)


def _scalar_from_json(x, kind):
    if kind == "rational":
        return parse_rational(x)
    if kind == "quad":
        return Quad(parse_rational(x[0]), parse_rational(x[1]), int(x[2]))
    return float(x)


def space_to_json(X: FiniteMMSpace) -> dict:
    if isinstance(X.weights[0], Quad) or any(isinstance(v, Quad) for v in X.dist[0]):
        kind = "quad"
    elif X.exact:
        kind = "rational"
    else:
        kind = "float"
    doc = {
        "n": X.n,
        "dist": [[_scalar_to_json(v, kind) for v in row] for row in X.dist],
        "weights": [_scalar_to_json(w, kind) for w in X.weights],
        "scalar": kind,
    }
    if X.pseudo:
        doc["pseudo"] = True
    return doc


def space_from_json(doc: dict, validate_triangle: bool = True) -> FiniteMMSpace:
    kind = doc.get("scalar", "rational")
    dist = [[_scalar_from_json(v, kind) for v in row] for row in doc["dist"]]
    weights = [_scalar_from_json(w, kind) for w in doc["weights"]]
    return FiniteMMSpace(dist, weights, pseudo=bool(doc.get("pseudo", False)),
                         validate_triangle=validate_triangle)


def dump_space(X: FiniteMMSpace, path):
    with open(path, "w") as fh:
        json.dump(space_to_json(X), fh, sort_keys=True)
        fh.write("\n")


def load_space(path, validate_triangle: bool = True) -> FiniteMMSpace:
    with open(path) as fh:
        return space_from_json(json.load(fh), validate_triangle=validate_triangle)


# Convenience constructors used throughout tests and fixtures.

def delta_space(n: int) -> FiniteMMSpace:
    """n points at mutual distance 1, uniform rational weights."""
    w = Fraction(1, n)
    dist = [[Fraction(0) if i == j else Fraction(1) for j in range(n)] for i in range(n)]
    return FiniteMMSpace(dist, [w] * n)


def space_from_points_1d(coords, weights=None) -> FiniteMMSpace:
    coords = [Fraction(c) for c in coords]
    n = len(coords)
    if weights is None:
        weights = [Fraction(1, n)] * n
    dist = [[abs(coords[i] - coords[j]) for j in range(n)] for i in range(n)]
    return FiniteMMSpace(dist, weights)
