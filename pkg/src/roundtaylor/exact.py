"""Exact scalar kernel: rationals, grid rounding, intervals and certified constants.

Two interval types live here:

* :class:`Ival` has :class:`fractions.Fraction` endpoints and every operation is
  exact.  It is the reference type used for certificates and reports.
* :class:`Fixed` stores endpoints as integers scaled by ``2**PREC`` and rounds
  every result outward.  Endpoints are dyadic rationals, so it is still an
  exact-rational enclosure, only much cheaper than gcd-reduced fractions.  The
  integrator and the branch-and-bound both run on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

Rat = Fraction
RatLike = Union[int, Fraction, str]


class DomainError(ArithmeticError):
    """An operation was applied outside its domain (e.g. 0 in a divisor)."""


class CertificationError(ArithmeticError):
    """A rounding or enclosure could not be certified at the requested width."""


# ---------------------------------------------------------------------------
# parsing / formatting


def rat(x: RatLike) -> Fraction:
    """Coerce ``x`` to a Fraction.  Strings must be ``"p/q"`` or ``"p"``.

    Floats and decimal strings are rejected: proof inputs never go through
    binary floating point.
    """
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if any(c in s for c in ".eE"):
            raise ValueError(f"decimal notation not accepted for exact input: {x!r}")
        return Fraction(s)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def format_rat(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def format_ival(iv: "Ival") -> str:
    return f"[{format_rat(iv.lo)}, {format_rat(iv.hi)}]"


def parse_ival(s: str) -> "Ival":
    body = s.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ValueError(f"interval must look like [p/q, r/s]: {s!r}")
    lo, hi = body[1:-1].split(",")
    return Ival(rat(lo), rat(hi))


# ---------------------------------------------------------------------------
# grid rounding


@dataclass(frozen=True)
class GridSpec:
    """The rounding grid ``H * Z`` with ``H = 10**-exponent``."""

    exponent: int
    mode: str = "floor"

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("grid exponent must be a positive integer")
        if self.mode not in ("floor", "nearest"):
            raise ValueError(f"unknown grid mode {self.mode!r}")

    @property
    def spacing(self) -> Fraction:
        return Fraction(1, 10**self.exponent)

    @property
    def scale(self) -> int:
        return 10**self.exponent


def floor_to_grid(x: Fraction, grid: GridSpec) -> Fraction:
    """``H * floor(x / H)``; exact, so ``0 <= x - result < H``."""
    x = rat(x)
    n = (x.numerator * grid.scale) // x.denominator
    return Fraction(n, grid.scale)


def nearest_grid_in(enc: "Ival", grid: GridSpec) -> tuple[Fraction, bool]:
    """Pick the grid point nearest the midpoint of ``enc``.

    ``certified`` is true iff the chosen point is within ``H`` of both
    endpoints, which bounds its distance to every real in ``enc`` by ``H``.
    Ties round down, so the choice is deterministic.
    """
    scale = grid.scale
    mid2 = enc.lo + enc.hi  # twice the midpoint
    # floor(mid/H + 1/2) == floor((2*mid*scale + 1) / 2)
    num = mid2.numerator * scale + mid2.denominator
    n = num // (2 * mid2.denominator)
    if (num % (2 * mid2.denominator)) == 0:
        n -= 1  # exact tie: prefer the lower grid point
    z = Fraction(n, scale)
    H = grid.spacing
    certified = abs(z - enc.lo) <= H and abs(z - enc.hi) <= H
    return z, certified


# ---------------------------------------------------------------------------
# exact-endpoint intervals


class Ival:
    """Closed interval ``[lo, hi]`` with exact rational endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = rat(lo) if not isinstance(lo, Fraction) else lo
        hi = lo if hi is None else (rat(hi) if not isinstance(hi, Fraction) else hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def point(cls, x: RatLike) -> "Ival":
        x = rat(x)
        return cls(x, x)

    @classmethod
    def centered(cls, c: RatLike, r: RatLike) -> "Ival":
        c, r = rat(c), rat(r)
        return cls(c - r, c + r)

    # -- queries ----------------------------------------------------------
    def __repr__(self):
        return f"Ival({format_rat(self.lo)}, {format_rat(self.hi)})"

    def __eq__(self, other):
        return isinstance(other, Ival) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def mag(self) -> Fraction:
        """max |x| over the interval."""
        return max(-self.lo, self.hi)

    def contains(self, x) -> bool:
        if isinstance(x, Ival):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi

    def hull(self, other: "Ival") -> "Ival":
        return Ival(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersects(self, other: "Ival") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def bisect(self) -> tuple["Ival", "Ival"]:
        m = self.mid
        return Ival(self.lo, m), Ival(m, self.hi)

    # -- arithmetic -------------------------------------------------------
    @staticmethod
    def _coerce(x) -> "Ival":
        if isinstance(x, Ival):
            return x
        x = rat(x)
        return Ival(x, x)

    def __neg__(self):
        return Ival(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = self._coerce(other)
        return Ival(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return Ival(self.lo - o.hi, self.hi - o.lo)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        if a == b and c == d:
            p = a * c
            return Ival(p, p)
        ps = (a * c, a * d, b * c, b * d)
        return Ival(min(ps), max(ps))

    __rmul__ = __mul__

    def reciprocal(self) -> "Ival":
        if self.lo <= 0 <= self.hi:
            raise DomainError(f"division by an interval containing zero: {self!r}")
        return Ival(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n < 0:
            return (self ** (-n)).reciprocal()
        if n == 0:
            return Ival(1, 1)
        a, b = self.lo, self.hi
        if a >= 0:
            return Ival(a**n, b**n)
        if b <= 0:
            lo, hi = b**n, a**n
            return Ival(lo, hi) if n % 2 == 0 else Ival(a**n, b**n)
        if n % 2 == 0:
            return Ival(0, max(-a, b) ** n)
        return Ival(a**n, b**n)

    def sqrt(self, width: Fraction) -> "Ival":
        if self.lo < 0:
            raise DomainError(f"sqrt of an interval with negative part: {self!r}")
        lo = sqrt_enclosure(self.lo, width).lo
        hi = sqrt_enclosure(self.hi, width).hi
        return Ival(lo, hi)

    def abs(self) -> "Ival":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Ival(0, max(-self.lo, self.hi))


# ---------------------------------------------------------------------------
# fixed-point (dyadic) intervals with outward rounding


class Fixed:
    """Interval ``[lo / 2**PREC, hi / 2**PREC]`` with outward rounding.

    Use :func:`fixed_class` to get a subclass at a given precision; instances
    of different precisions must not be mixed.
    """

    __slots__ = ("lo", "hi")
    PREC = 192

    def __init__(self, lo: int, hi: int):
        self.lo = lo
        self.hi = hi

    # -- conversion -------------------------------------------------------
    @classmethod
    def from_rat(cls, x) -> "Fixed":
        x = rat(x) if not isinstance(x, Fraction) else x
        s = x.numerator << cls.PREC
        d = x.denominator
        return cls(s // d, -((-s) // d))

    @classmethod
    def from_ival(cls, iv: Ival) -> "Fixed":
        P = cls.PREC
        lo = (iv.lo.numerator << P) // iv.lo.denominator
        hi = -((-(iv.hi.numerator << P)) // iv.hi.denominator)
        return cls(lo, hi)

    @classmethod
    def from_grid_int(cls, n: int, scale: int) -> "Fixed":
        """Enclose ``n / scale``."""
        s = n << cls.PREC
        return cls(s // scale, -((-s) // scale))

    def to_ival(self) -> Ival:
        d = 1 << self.PREC
        return Ival(Fraction(self.lo, d), Fraction(self.hi, d))

    def __repr__(self):
        return f"{type(self).__name__}({float(self.lo) / 2**self.PREC!r}, {float(self.hi) / 2**self.PREC!r})"

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def _coerce(self, x) -> "Fixed":
        if isinstance(x, Fixed):
            return x
        return type(self).from_rat(x)

    # -- arithmetic -------------------------------------------------------
    def __neg__(self):
        return type(self)(-self.hi, -self.lo)

    def __add__(self, o):
        if not isinstance(o, Fixed):
            o = self._coerce(o)
        return type(self)(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __sub__(self, o):
        if not isinstance(o, Fixed):
            o = self._coerce(o)
        return type(self)(self.lo - o.hi, self.hi - o.lo)

    def __rsub__(self, o):
        return self._coerce(o) - self

    def __mul__(self, o):
        if not isinstance(o, Fixed):
            o = self._coerce(o)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        if a >= 0:
            if c >= 0:
                lo, hi = a * c, b * d
            elif d <= 0:
                lo, hi = b * c, a * d
            else:
                lo, hi = b * c, b * d
        elif b <= 0:
            if c >= 0:
                lo, hi = a * d, b * c
            elif d <= 0:
                lo, hi = b * d, a * c
            else:
                lo, hi = a * d, a * c
        else:
            if c >= 0:
                lo, hi = a * d, b * d
            elif d <= 0:
                lo, hi = b * c, a * c
            else:
                lo = min(a * d, b * c)
                hi = max(a * c, b * d)
        P = self.PREC
        return type(self)(lo >> P, -((-hi) >> P))

    __rmul__ = __mul__

    def reciprocal(self) -> "Fixed":
        c, d = self.lo, self.hi
        if c <= 0 <= d:
            raise DomainError("division by an interval containing zero")
        one2 = 1 << (2 * self.PREC)
        return type(self)(one2 // d, -((-one2) // c))

    def __truediv__(self, o):
        if not isinstance(o, Fixed):
            o = self._coerce(o)
        return self * o.reciprocal()

    def __rtruediv__(self, o):
        return self._coerce(o) * self.reciprocal()

    def __pow__(self, n: int):
        if n < 0:
            return (self ** (-n)).reciprocal()
        if n == 0:
            return type(self).from_rat(Fraction(1))
        if n == 1:
            return self
        a, b = self.lo, self.hi
        sh = self.PREC * (n - 1)
        if a >= 0:
            return type(self)(a**n >> sh, -((-(b**n)) >> sh))
        if b <= 0:
            if n % 2 == 0:
                return type(self)(b**n >> sh, -((-(a**n)) >> sh))
            return type(self)(a**n >> sh, -((-(b**n)) >> sh))
        if n % 2 == 0:
            m = max(-a, b)
            return type(self)(0, -((-(m**n)) >> sh))
        return type(self)(a**n >> sh, -((-(b**n)) >> sh))

    def sqrt(self, width=None) -> "Fixed":
        a, b = self.lo, self.hi
        if a < 0:
            raise DomainError("sqrt of an interval with negative part")
        P = self.PREC
        lo = math.isqrt(a << P)
        hb = b << P
        hi = math.isqrt(hb)
        if hi * hi != hb:
            hi += 1
        return type(self)(lo, hi)

    def abs(self) -> "Fixed":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return type(self)(0, max(-self.lo, self.hi))


@lru_cache(maxsize=None)
def fixed_class(prec: int) -> type:
    """Return the :class:`Fixed` subclass working at ``prec`` fractional bits."""
    if prec < 16:
        raise ValueError("precision below 16 bits is not useful")
    return type(f"Fixed{prec}", (Fixed,), {"__slots__": (), "PREC": prec})


# ---------------------------------------------------------------------------
# certified irrational constants


def _is_square(n: int) -> bool:
    r = math.isqrt(n)
    return r * r == n


def sqrt_enclosure(r: RatLike, width: RatLike) -> Ival:
    """Interval ``[lo, hi]`` with ``lo**2 <= r <= hi**2`` and ``hi - lo <= width``."""
    r, width = rat(r), rat(width)
    if r < 0:
        raise DomainError(f"sqrt of negative number {r}")
    if width <= 0:
        raise ValueError("width must be positive")
    p, q = r.numerator, r.denominator
    if _is_square(p) and _is_square(q):
        x = Fraction(math.isqrt(p), math.isqrt(q))
        return Ival(x, x)
    # power of two scale S with 1/S <= width
    S = 1 << max(0, width.denominator.bit_length() - width.numerator.bit_length() + 1)
    while Fraction(1, S) > width:
        S <<= 1
    # floor(sqrt(r) * S) = isqrt(floor(r * S^2))
    n = math.isqrt((p * S * S) // q)
    return Ival(Fraction(n, S), Fraction(n + 1, S))


def exp_partial_sum(x: Fraction, terms: int) -> Fraction:
    """``sum_{i=0}^{terms} x**i / i!`` (a lower bound of e**x for x >= 0)."""
    total = Fraction(0)
    t = Fraction(1)
    for i in range(terms + 1):
        if i:
            t = t * x / i
        total += t
    return total


def exp_upper_bound(x: RatLike, terms: int = 40) -> Fraction:
    """Rational upper bound of ``e**x`` for ``x >= 0``.

    Taylor sum through ``terms`` plus the tail majorant
    ``x**(n+1)/(n+1)! / (1 - x/(n+2))`` which is finite for ``x < n + 2``.
    """
    x = rat(x)
    if x < 0:
        raise DomainError("exp_upper_bound expects x >= 0")
    if x == 0:
        return Fraction(1)
    n = terms
    if x >= n + 2:
        raise CertificationError(f"tail bound diverges for x={x} with {terms} terms; add terms")
    total = Fraction(0)
    t = Fraction(1)
    for i in range(n + 1):
        if i:
            t = t * x / i
        total += t
    nxt = t * x / (n + 1)
    return total + nxt / (1 - x / (n + 2))


def _arctan_inv_bracket(m: int, n_terms: int) -> tuple[Fraction, Fraction]:
    """Bracket ``arctan(1/m)`` by two consecutive alternating partial sums."""
    s = Fraction(0)
    prev = s
    m2 = m * m
    power = m
    for k in range(n_terms + 1):
        prev = s
        term = Fraction(1, (2 * k + 1) * power)
        s = s + term if k % 2 == 0 else s - term
        power *= m2
    return (min(prev, s), max(prev, s))


def pi_enclosure(width: RatLike) -> Ival:
    """Certified interval around pi from Machin's formula ``16 atan(1/5) - 4 atan(1/239)``."""
    width = rat(width)
    if width <= 0:
        raise ValueError("width must be positive")
    n = 2
    while True:
        a_lo, a_hi = _arctan_inv_bracket(5, n)
        b_lo, b_hi = _arctan_inv_bracket(239, n)
        enc = Ival(16 * a_lo - 4 * b_hi, 16 * a_hi - 4 * b_lo)
        if enc.width <= width:
            return enc
        n += max(1, n // 2)


def geometric_recurrence_closed_form(p: RatLike, L: RatLike, q0: RatLike, k: int) -> Fraction:
    """k-th iterate of ``q -> (1 + L) q + p`` started at ``q0``."""
    p, L, q0 = rat(p), rat(L), rat(q0)
    if L == 0:
        raise DomainError("closed form undefined for L = 0")
    if k < 0:
        raise ValueError("k must be >= 0")
    return (p + L * q0) / L * (1 + L) ** k - p / L
