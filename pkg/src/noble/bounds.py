"""Rigorous interval arithmetic used for every reported quantity.

All propagated numbers are enclosures [lo, hi] with outward rounding,
backed by mpmath's interval context.  A plain multiprecision floating
mode (``mpmath.mpf``) exists elsewhere for oracles and speed comparisons,
never for reported bounds.

Infinite endpoints are tolerated transiently (tail estimates); anything
that ends up in a report must have finite width.
"""

from __future__ import annotations

import numbers

import mpmath
from mpmath import iv, mp

DEFAULT_DPS = 40

iv.dps = DEFAULT_DPS


class IntervalError(ArithmeticError):
    pass


class DivisionByIntervalContainingZero(IntervalError):
    pass


def set_precision(dps):
    """Set working precision (significant decimal digits) globally."""
    iv.dps = dps
    mp.dps = dps


def _mpf_from_tuple(t):
    sign, man, exp, bc = t
    return mp.make_mpf((sign, int(man), int(exp), int(bc)))


def _to_ivmpf(x):
    if isinstance(x, Bound):
        return x._v
    if isinstance(x, iv.mpf):
        return x
    if isinstance(x, (int, str)) or isinstance(x, mpmath.mpf):
        return iv.mpf(x)
    if isinstance(x, float):
        return iv.mpf(x)
    if isinstance(x, numbers.Rational):
        return iv.mpf(x.numerator) / iv.mpf(x.denominator)
    raise TypeError(f"cannot interpret {x!r} as an interval")


class Bound:
    """Enclosure [lo, hi] of a real quantity; lo <= hi always.

    Arithmetic is outward rounded: for any a in A, b in B the true a*b
    lies in A*B.  Construction from floats/strings/rationals rounds
    outward as well.
    """

    __slots__ = ("_v",)

    def __init__(self, lo, hi=None):
        if hi is None:
            self._v = _to_ivmpf(lo)
        else:
            a = _to_ivmpf(lo)
            b = _to_ivmpf(hi)
            if not (a.a <= b.b):
                raise IntervalError(f"lo > hi in Bound({lo}, {hi})")
            self._v = iv.mpf([mpf_lo(a), mpf_hi(b)])

    @classmethod
    def _raw(cls, v):
        out = object.__new__(cls)
        out._v = v
        return out

    @classmethod
    def exact(cls, n):
        """Degenerate interval around an exactly representable value."""
        return cls(n)

    @classmethod
    def from_rational(cls, num, den):
        return cls._raw(iv.mpf(num) / iv.mpf(den))

    # -- endpoint access -------------------------------------------------
    @property
    def lo(self):
        return _mpf_from_tuple(self._v._mpi_[0])

    @property
    def hi(self):
        return _mpf_from_tuple(self._v._mpi_[1])

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return (self.lo + self.hi) / 2

    def is_finite(self):
        return mp.isfinite(self.lo) and mp.isfinite(self.hi)

    def contains(self, x):
        if isinstance(x, Bound):
            return self.lo <= x.lo and x.hi <= self.hi
        x = mpmath.mpf(x) if not isinstance(x, mpmath.mpf) else x
        return self.lo <= x <= self.hi

    def overlaps(self, other):
        other = as_bound(other)
        return self.lo <= other.hi and other.lo <= self.hi

    def strictly_positive(self):
        return self.lo > 0

    def strictly_less(self, other):
        """True iff every value in self is < every value in other."""
        return self.hi < as_bound(other).lo

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        return Bound._raw(self._v + _to_ivmpf(other))

    __radd__ = __add__

    def __neg__(self):
        return Bound._raw(-self._v)

    def __sub__(self, other):
        return Bound._raw(self._v - _to_ivmpf(other))

    def __rsub__(self, other):
        return Bound._raw(_to_ivmpf(other) - self._v)

    def __mul__(self, other):
        return Bound._raw(self._v * _to_ivmpf(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        w = _to_ivmpf(other)
        if w.a <= 0 <= w.b:
            raise DivisionByIntervalContainingZero(f"division by {w}")
        return Bound._raw(self._v / w)

    def __rtruediv__(self, other):
        return as_bound(other) / self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise TypeError("only nonnegative integer powers are supported")
        return Bound._raw(self._v ** n)

    def __abs__(self):
        return Bound._raw(abs(self._v))

    def sqrt(self):
        if self.lo < 0:
            raise IntervalError(f"sqrt of interval reaching below zero: {self}")
        return Bound._raw(iv.sqrt(self._v))

    def min(self, other):
        other = as_bound(other)
        return Bound(min(self.lo, other.lo), min(self.hi, other.hi))

    def max(self, other):
        other = as_bound(other)
        return Bound(max(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other):
        other = as_bound(other)
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            raise IntervalError(f"empty intersection of {self} and {other}")
        return Bound(lo, hi)

    def hull(self, other):
        other = as_bound(other)
        return Bound(min(self.lo, other.lo), max(self.hi, other.hi))

    def clamp_nonnegative(self):
        """Intersect with [0, inf); valid when the true value is known >= 0."""
        if self.hi < 0:
            raise IntervalError(f"clamp of strictly negative interval {self}")
        return Bound(max(self.lo, mp.mpf(0)), max(self.hi, mp.mpf(0)))

    def widened(self, eps):
        """Outward widening by absolute eps (safety inflation)."""
        e = _to_ivmpf(eps)
        return Bound._raw(self._v + iv.mpf([-mpf_hi(e), mpf_hi(e)]))

    def __eq__(self, other):
        if not isinstance(other, Bound):
            return NotImplemented
        return self._v._mpi_ == other._v._mpi_

    def __hash__(self):
        return hash(self._v._mpi_)

    def __repr__(self):
        return f"Bound[{mp.nstr(self.lo, 17)}, {mp.nstr(self.hi, 17)}]"

    def __str__(self):
        return self.__repr__()

    def serialize(self):
        """Endpoint tuples (sign, mantissa, exponent, bitcount); bit exact."""
        (s1, m1, e1, b1), (s2, m2, e2, b2) = self._v._mpi_
        return (int(s1), int(m1), int(e1), int(b1)), (int(s2), int(m2), int(e2), int(b2))

    @classmethod
    def deserialize(cls, pair):
        lo = _mpf_from_tuple(pair[0])
        hi = _mpf_from_tuple(pair[1])
        return cls._raw(iv.mpf([lo, hi]))


def mpf_lo(v):
    return _mpf_from_tuple(v._mpi_[0])


def mpf_hi(v):
    return _mpf_from_tuple(v._mpi_[1])


def as_bound(x):
    return x if isinstance(x, Bound) else Bound(x)


ZERO = Bound(0)
ONE = Bound(1)


def bound_pi():
    return Bound._raw(+iv.pi)


def bound_exp(x):
    return Bound._raw(iv.exp(_to_ivmpf(x)))


def bound_sqrt(x):
    return as_bound(x).sqrt()


def bound_max(items):
    items = [as_bound(x) for x in items]
    out = items[0]
    for x in items[1:]:
        out = out.max(x)
    return out


def bound_min(items):
    items = [as_bound(x) for x in items]
    out = items[0]
    for x in items[1:]:
        out = out.min(x)
    return out


def bound_sum(items):
    out = ZERO
    for x in items:
        out = out + x
    return out


_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "min": lambda a, b: a.min(b),
    "max": lambda a, b: a.max(b),
}


def interval_arith(a, b, op):
    """Apply one of {+,-,*,/,^n,min,max} with outward rounding.

    For '^' pass op='^n' with integer n, e.g. interval_arith(a, 3, '^n').
    """
    a = as_bound(a)
    if op == "^n":
        return a ** int(b)
    if op not in _OPS:
        raise ValueError(f"unknown interval op {op!r}")
    return _OPS[op](a, as_bound(b))


# -- trigonometric helper lemmas (oracle side, plain floats) -------------

def cosine_split_check(t, parts):
    """Evaluate both cosine-splitting estimates for t = sum(parts).

    Returns (lhs, rhs_cross, rhs_factored) where
      lhs          = 1 - cos(t),
      rhs_cross    = sum_i [1-cos(t_i)] + sum_{i>=2} sin(t_i) sin(t_1+..+t_{i-1}),
      rhs_factored = J * sum_i [1-cos(t_i)].
    Both right-hand sides dominate lhs; used as a property-test oracle only.
    """
    import math

    parts = list(parts)
    if abs(sum(parts) - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("parts must sum to t")
    J = len(parts)
    lhs = 1 - math.cos(t)
    rhs_cross = sum(1 - math.cos(p) for p in parts)
    for i in range(1, J):
        rhs_cross += math.sin(parts[i]) * math.sin(sum(parts[:i]))
    rhs_factored = J * sum(1 - math.cos(p) for p in parts)
    return lhs, rhs_cross, rhs_factored
