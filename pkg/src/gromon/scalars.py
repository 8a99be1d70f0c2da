"""Scalar kinds shared across the library.

Three exact kinds (``int``/``Fraction``, and quadratic extensions
``Quad`` = a + b*sqrt(d)) plus IEEE floats.  A space is homogeneous in
one kind; exact kinds support bit-reproducible arithmetic and ordering,
floats are compared with an absolute tolerance carried by the space.

Also houses the ``INFINITE`` sentinel used for infeasible Monge problems
and the p-exponent conventions (p is an integer >= 1, or ``math.inf``).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

DEFAULT_FLOAT_TOL = 1e-9


class _Infinite:
    """Sentinel for an infinite distance (empty transport-map set)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __gt__(self, other):
        return not isinstance(other, _Infinite)

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, _Infinite)

    def __add__(self, other):
        return self

    __radd__ = __add__


INFINITE = _Infinite()


def is_infinite(value) -> bool:
    return isinstance(value, _Infinite)


def check_p(p) -> None:
    """Validate an exponent: integer >= 1 or math.inf."""
    if p is math.inf or p == math.inf:
        return
    if isinstance(p, (int, Fraction)) and p >= 1:
        return
    if isinstance(p, float) and p >= 1:
        return
    raise ValueError(f"p must be >= 1 or inf, got {p!r}")


def is_exact(x) -> bool:
    """True for scalar kinds with exact arithmetic."""
    return isinstance(x, (int, Fraction, Quad))


def parse_rational(text) -> Fraction:
    """Parse "p/q" strings (also accepts plain integers)."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    return Fraction(str(text))


def format_rational(x) -> str:
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}" if f.denominator != 1 else str(f.numerator)


class Quad:
    """Exact element a + b*sqrt(d) of a real quadratic field.

    ``d`` is a fixed square-free integer > 1.  Supports ring and field
    operations with other ``Quad`` of the same ``d`` and with rationals,
    plus exact total ordering.  Used for the polygon (d=2) and
    dodecahedron (d=5) counterexample geometry, where squared Euclidean
    distances live in Q(sqrt d) even though the distances themselves do
    not.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b=0, d=2):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.d = int(d)

    def _coerce(self, other):
        if isinstance(other, Quad):
            if other.d != self.d:
                raise ValueError("mixed quadratic fields")
            return other
        if isinstance(other, (int, Fraction)):
            return Quad(other, 0, self.d)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Quad(self.a + o.a, self.b + o.b, self.d)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Quad(self.a - o.a, self.b - o.b, self.d)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Quad(self.a * o.a + self.d * self.b * o.b,
                    self.a * o.b + self.b * o.a, self.d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        norm = o.a * o.a - self.d * o.b * o.b
        if norm == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        inv = Quad(o.a / norm, -o.b / norm, self.d)
        return self * inv

    def __neg__(self):
        return Quad(-self.a, -self.b, self.d)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = Quad(1, 0, self.d)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __abs__(self):
        return -self if self._sign() < 0 else self

    def _sign(self) -> int:
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # opposite signs: compare |a| and |b|sqrt(d) via squares
        lhs, rhs = a * a, self.d * b * b
        if a > 0:  # b < 0
            return 1 if lhs > rhs else (-1 if lhs < rhs else 0)
        return -1 if lhs > rhs else (1 if lhs < rhs else 0)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __lt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o)._sign() < 0

    def __le__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o)._sign() <= 0

    def __gt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o)._sign() > 0

    def __ge__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o)._sign() >= 0

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __repr__(self):
        return f"Quad({self.a}, {self.b}, d={self.d})"


Scalar = Union[int, Fraction, Quad, float]
