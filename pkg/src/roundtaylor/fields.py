"""Right-hand sides of the reduced three-body system and their derivative fields.

Every quantity is an expression tree over the coordinates ``x1 .. x12``, the
angular-momentum parameter ``a``, the reference value ``a0`` and powers of
``s = sqrt(4 x1**2 + x3**2)``.  One evaluator walks those trees for any
interval type (:class:`~roundtaylor.exact.Ival` or a
:class:`~roundtaylor.exact.Fixed` subclass), which serves point evaluation in
the integrator, box evaluation in the bound certifier and the audit dump.

Coordinate roles::

    x1 F      x2 dF/dt     x3 R      x4 dR/dt
    x5 F_a    x6 dF_a/dt   x7 R_a    x8 dR_a/dt
    x9 F_b    x10 dF_b/dt  x11 R_b   x12 dR_b/dt

``th`` is Theta (only in W) and ``tha`` is Theta_a (only in G); no dictionary
function reads them.  The 12-dimensional field of all partials is the union
of G and U and is not built separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .exact import DomainError, Fixed, Ival, Rat, fixed_class

A0 = Fraction(43170475352787, 10**13)


# ---------------------------------------------------------------------------
# expression tree


class Expr:
    """Node of an arithmetic expression.  Operators build bigger trees."""

    __slots__ = ()

    def __add__(self, o):
        return Add(self, _wrap(o))

    def __radd__(self, o):
        return Add(_wrap(o), self)

    def __sub__(self, o):
        return Sub(self, _wrap(o))

    def __rsub__(self, o):
        return Sub(_wrap(o), self)

    def __mul__(self, o):
        return Mul(self, _wrap(o))

    def __rmul__(self, o):
        return Mul(_wrap(o), self)

    def __truediv__(self, o):
        return Div(self, _wrap(o))

    def __rtruediv__(self, o):
        return Div(_wrap(o), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n: int):
        return Pow(self, n)

    # -- structure ---------------------------------------------------------
    def children(self) -> tuple["Expr", ...]:
        return ()

    def variables(self) -> set[str]:
        out: set[str] = set()
        stack = [self]
        while stack:
            e = stack.pop()
            if isinstance(e, Var):
                out.add(e.name)
            elif isinstance(e, SPow):
                out.update(("x1", "x3"))
            elif isinstance(e, Phi):
                out.update(PHI_VARIABLES[e.index])
            stack.extend(e.children())
        return out

    def phi_refs(self) -> set[int]:
        out: set[int] = set()
        stack = [self]
        while stack:
            e = stack.pop()
            if isinstance(e, Phi):
                out.add(e.index)
            stack.extend(e.children())
        return out

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = Fraction(value)

    def __repr__(self):
        v = self.value
        return str(v.numerator) if v.denominator == 1 else f"({v})"


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __repr__(self):
        return self.name


class SPow(Expr):
    """``s**k`` with ``s = sqrt(4 x1**2 + x3**2)``."""

    __slots__ = ("k",)

    def __init__(self, k: int):
        self.k = k

    def __repr__(self):
        return f"s^{self.k}" if self.k >= 0 else f"s^({self.k})"


class Phi(Expr):
    """Reference to dictionary entry ``phi_index``."""

    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index

    def __repr__(self):
        return f"phi{self.index}"


class _Bin(Expr):
    __slots__ = ("left", "right")
    op = "?"

    def __init__(self, left: Expr, right: Expr):
        self.left = left
        self.right = right

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"({self.left!r} {self.op} {self.right!r})"


class Add(_Bin):
    __slots__ = ()
    op = "+"


class Sub(_Bin):
    __slots__ = ()
    op = "-"


class Mul(_Bin):
    __slots__ = ()
    op = "*"


class Div(_Bin):
    __slots__ = ()
    op = "/"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"-{self.arg!r}"


class Pow(Expr):
    __slots__ = ("base", "n")

    def __init__(self, base: Expr, n: int):
        if not isinstance(n, int):
            raise TypeError("integer exponents only")
        self.base = base
        self.n = n

    def children(self):
        return (self.base,)

    def __repr__(self):
        return f"{self.base!r}^{self.n}"


def _wrap(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(x)


def const(x) -> Const:
    return Const(x)


X = {f"x{i}": Var(f"x{i}") for i in range(1, 13)}
x1, x2, x3, x4, x5, x6, x7, x8, x9, x10, x11, x12 = (X[f"x{i}"] for i in range(1, 13))
a = Var("a")
a0 = Var("a0")
P = Phi


def s(k: int) -> SPow:
    return SPow(k)


# ---------------------------------------------------------------------------
# the dictionary phi_1 .. phi_58
#
# Composite entries are kept in their printed compositional form.  phi_22 is
# the (8,3) entry of DG, i.e. d(phi_17)/dx3; it reads phi_11 (= d(phi_5)/dx3).

PHI: dict[int, Expr] = {
    1: -400 * x1 * s(-3),
    2: 100 * a**2 / x3**3 - 25 / x3**2 - 200 * x3 * s(-3),
    3: 10 * a / x3**2,
    4: -400 * (x3**2 - 8 * x1**2) * s(-5),
    5: 1200 * x1 * x3 * s(-5),
    6: 50 * (-6 * a**2 / x3**4 + 12 * x3**2 * s(-5) - 4 * s(-3) + 1 / x3**3),
    7: -20 * a / x3**3,
    8: -1200 * (16 * x1**2 * x3 - x3**3) * s(-7),
    9: -4800 * (8 * x1**3 - 3 * x1 * x3**2) * s(-7),
    10: x4 * P(8) + x2 * P(9),
    11: 4800 * (x1**3 - x1 * x3**2) * s(-7),
    12: x4 * P(11) + x2 * P(8),
    13: 1200 * a**2 / x3**5 - 3000 * x3**3 * s(-7) + 1800 * x3 * s(-5) - 150 / x3**4,
    14: x4 * P(13) + 2 * x2 * P(11),
    15: 60 * a * x4 / x3**4,
    16: 400 * (8 * x5 * x1**2 + 3 * x3 * x7 * x1 - x3**2 * x5) * s(-5),
    17: -10 * P(7) + 2 * x5 * P(5) + x7 * P(6),
    18: 10 * (x3 - 2 * a * x7) / x3**3,
    19: x5 * P(9) + x7 * P(8),
    20: x5 * P(8) + x7 * P(11),
    21: -600 * a / x3**4,
    22: P(21) + 2 * x5 * P(11) + x7 * P(13),
    23: 60 * a * x7 / x3**4 - 20 / x3**3,
    24: x8 * P(8) + x6 * P(9),
    25: -4800 * (16 * x1**4 - 27 * x3**2 * x1**2 + x3**4) * s(-9),
    26: 24000 * (16 * x1**3 * x3 - 3 * x1 * x3**3) * s(-9),
    27: x4 * P(25) + x2 * P(26),
    28: 4800 * (128 * x1**4 - 96 * x3**2 * x1**2 + 3 * x3**4) * s(-9),
    29: x2 * P(28) + x4 * P(26),
    30: P(24) + x7 * P(27) + x5 * P(29),
    31: x6 * P(8) + x8 * P(11),
    32: -24000 * (3 * x1**3 * x3 - x1 * x3**3) * s(-9),
    33: x2 * P(25) + x4 * P(32),
    34: P(31) + x7 * P(33) + x5 * P(27),
    35: 2400 * a * x4 / x3**5,
    36: P(35) + x8 * P(13) + 2 * x6 * P(11),
    37: 600 * (-10 * a**2 / x3**6 + 8 * x3**4 * s(-9) - 108 * x1**2 * x3**2 * s(-9)
               + 12 * x1**2 * s(-7) + 1 / x3**5),
    38: x4 * P(37) + 2 * x2 * P(32),
    39: P(36) + 2 * x5 * P(33) + x7 * P(38),
    40: 60 * (x3 * (a * x8 + x4) - 4 * a * x4 * x7) / x3**5,
    41: 400 * (8 * x9 * x1**2 + 3 * x3 * x11 * x1 - x3**2 * x9) * s(-5),
    42: 2 * x9 * P(5) + x11 * P(6),
    43: x11 * P(8) + x9 * P(9),
    44: x11 * P(11) + x9 * P(8),
    45: 2 * x9 * P(11) + x11 * P(13),
    46: x12 * P(8) + x10 * P(9),
    47: x4 * P(26) + x2 * P(28),
    48: x11 * P(27) + x9 * P(47) + P(46),
    49: x12 * P(11) + x10 * P(8),
    50: x9 * P(27) + x11 * P(33) + P(49),
    51: (1200 * a**2 / x3**5 - 1200 * x3**5 * s(-9) + 2400 * x1**2 * x3**3 * s(-9)
         + 28800 * x1**4 * x3 * s(-9) - 150 / x3**4),
    52: 2 * x10 * P(11) + x12 * P(51),
    53: 2 * x9 * P(33) + x11 * P(38) + P(52),
    54: 100 * (a - a0) * (a + a0) / x3**3,
    55: 10 * (a - a0) / x3**2,
    56: -100 * (a - a0) * (3 * a * x7 + 3 * a0 * x7 - 2 * x3) / x3**4,
    57: -20 * x7 * (a - a0) / x3**3,
    58: -300 * x11 * (a - a0) * (a + a0) / x3**4,
}

PRINTED_PHI22 = P(21) + 2 * x5 * P(1) + x7 * P(13)


def _q(p, q=1):
    return Fraction(p, q)


# Printed bound pairs B(phi_i) over V.
PHI_BOUNDS: dict[int, tuple[Fraction, Fraction]] = {
    1: (_q(-102003, 125000), _q(237, 50000)),
    2: (_q(-387429, 1000000), _q(373771, 1000000)),
    3: (_q(215419, 500000), _q(483423, 1000000)),
    4: (_q(-94797, 200000), _q(-115837, 1000000)),
    5: (_q(-301, 200000), _q(101747, 500000)),
    6: (_q(-83881, 200000), _q(-108213, 1000000)),
    7: (_q(-12789, 125000), _q(-86081, 1000000)),
    8: (_q(-3273, 500000), _q(18809, 125000)),
    9: (_q(-1911, 1000000), _q(193837, 1000000)),
    10: (_q(-52523, 1000000), _q(73229, 250000)),
    11: (_q(-34393, 500000), _q(637, 1000000)),
    12: (_q(-10507, 1000000), _q(31051, 125000)),
    13: (_q(44031, 500000), _q(9611, 40000)),
    14: (_q(-285649, 1000000), _q(2157, 500000)),
    15: (_q(-10719, 1000000), _q(13, 40000)),
    16: (_q(-75543, 500000), _q(563009, 1000000)),
    17: (_q(-150409, 500000), _q(1153481, 1000000)),
    18: (_q(-85201, 500000), _q(113003, 1000000)),
    19: (_q(-10003, 500000), _q(475393, 1000000)),
    20: (_q(-191879, 1000000), _q(9681, 200000)),
    21: (_q(-324799, 1000000), _q(-257987, 1000000)),
    22: (_q(-147363, 1000000), _q(289227, 500000)),
    23: (_q(-961, 40000), _q(32973, 500000)),
    24: (_q(-1617, 125000), _q(69167, 200000)),
    25: (_q(-15923, 250000), _q(8349, 500000)),
    26: (_q(-85577, 1000000), _q(1011, 1000000)),
    27: (_q(-33469, 250000), _q(4507, 200000)),
    28: (_q(-64021, 1000000), _q(7643, 40000)),
    29: (_q(-12111, 125000), _q(314853, 1000000)),
    30: (_q(-41247, 100000), _q(505637, 1000000)),
    31: (_q(-118703, 1000000), _q(73297, 1000000)),
    32: (_q(-337, 1000000), _q(6067, 200000)),
    33: (_q(-105549, 1000000), _q(25351, 1000000)),
    34: (_q(-1411, 3125), _q(37563, 250000)),
    35: (_q(-45369, 1000000), _q(11, 8000)),
    36: (_q(-113807, 1000000), _q(406413, 1000000)),
    37: (_q(-579, 4000), _q(-2871, 50000)),
    38: (_q(-2459, 1000000), _q(138773, 1000000)),
    39: (_q(-117597, 1000000), _q(400107, 1000000)),
    40: (_q(-2853, 1000000), _q(32303, 500000)),
    41: (_q(-19173, 20000), _q(83109, 500000)),
    42: (_q(-19549, 500000), _q(205701, 250000)),
    43: (_q(-9163, 1000000), _q(256717, 500000)),
    44: (_q(-3447, 50000), _q(152321, 500000)),
    45: (_q(-280299, 1000000), _q(197197, 1000000)),
    46: (_q(-7757, 1000000), _q(10303, 31250)),
    47: (_q(-12111, 125000), _q(314853, 1000000)),
    48: (_q(-203233, 500000), _q(35511, 62500)),
    49: (_q(-67831, 1000000), _q(30533, 200000)),
    50: (_q(-105939, 250000), _q(218721, 1000000)),
    51: (_q(44031, 500000), _q(9611, 40000)),
    52: (_q(-141351, 1000000), _q(53783, 250000)),
    53: (_q(-569761, 1000000), _q(429957, 1000000)),
    54: (_q(-19, 500000), _q(19, 500000)),
    55: (_q(-1, 200000), _q(1, 200000)),
    56: (_q(-1, 40000), _q(1, 40000)),
    57: (_q(-3, 1000000), _q(3, 1000000)),
    58: (_q(-1, 1000000), _q(1, 1000000)),
}


def _phi_variables() -> dict[int, frozenset[str]]:
    out: dict[int, frozenset[str]] = {}

    def vars_of(i: int) -> frozenset[str]:
        if i in out:
            return out[i]
        acc: set[str] = set()
        stack = [PHI[i]]
        while stack:
            e = stack.pop()
            if isinstance(e, Var):
                if e.name != "a0":
                    acc.add(e.name)
            elif isinstance(e, SPow):
                acc.update(("x1", "x3"))
            elif isinstance(e, Phi):
                acc.update(vars_of(e.index))
            stack.extend(e.children())
        out[i] = frozenset(acc)
        return out[i]

    for i in PHI:
        vars_of(i)
    return out


PHI_VARIABLES = _phi_variables()


def is_composite(i: int) -> bool:
    return bool(PHI[i].phi_refs())


def expand(e: Expr) -> Expr:
    """Substitute every Phi reference by its definition, recursively."""
    if isinstance(e, Phi):
        return expand(PHI[e.index])
    if isinstance(e, _Bin):
        return type(e)(expand(e.left), expand(e.right))
    if isinstance(e, Neg):
        return Neg(expand(e.arg))
    if isinstance(e, Pow):
        return Pow(expand(e.base), e.n)
    return e


# ---------------------------------------------------------------------------
# domain box V


def _iv(lo: Fraction, hi: Fraction) -> Ival:
    return Ival(lo, hi)


SA = Fraction(1197, 10**8)
DA = Fraction(17, 5 * 10**7)

DOMAIN: dict[str, Ival] = {
    "x1": _iv(_q(-1, 100), _q(62, 25)),
    "x2": _iv(_q(-1, 100), _q(3, 2)),
    "x3": _iv(_q(189, 20), _q(1001, 100)),
    "x4": _iv(_q(-33, 100), _q(1, 100)),
    "x5": _iv(_q(-1, 100), _q(31, 100)),
    "x6": _iv(_q(-1, 100), _q(12, 25)),
    "x7": _iv(_q(-1, 100), _q(69, 25)),
    "x8": _iv(_q(-1, 100), _q(42, 25)),
    "x9": _iv(_q(-1, 100), _q(101, 50)),
    "x10": _iv(_q(1, 2), _q(101, 100)),
    "x11": _iv(_q(-1, 100), _q(81, 100)),
    "x12": _iv(_q(-1, 100), _q(89, 100)),
    "a": _iv(_q(43170106052787, 10**13), _q(43170844652787, 10**13)),
    # only the integration boxes use these two
    "th": _iv(_q(-1, 100), _q(7, 5)),
    "tha": _iv(_q(-1, 100), _q(3, 25)),
}


@dataclass(frozen=True)
class DomainBox:
    """Named coordinate intervals with exact endpoints."""

    intervals: Mapping[str, Ival]

    def __getitem__(self, name: str) -> Ival:
        return self.intervals[name]

    def restrict(self, names: Iterable[str]) -> "DomainBox":
        return DomainBox({n: self.intervals[n] for n in names})

    def replace(self, **updates: Ival) -> "DomainBox":
        d = dict(self.intervals)
        d.update(updates)
        return DomainBox(d)

    def contains_box(self, other: "DomainBox") -> bool:
        return all(self.intervals[n].contains(iv) for n, iv in other.intervals.items())

    def names(self) -> list[str]:
        return list(self.intervals)


V = DomainBox(dict(DOMAIN))


# ---------------------------------------------------------------------------
# evaluation


class EvalContext:
    """Values of the coordinates for one evaluation plus per-call caches.

    ``kind`` is the interval class used for constants and for ``s``; coordinate
    values must already be of that class.  ``phi_override`` maps dictionary
    indices to interval values that replace the definition (hierarchical
    evaluation with certified bounds of the inner functions).
    """

    __slots__ = ("values", "kind", "sqrt_width", "phi_override", "_phi", "_s", "_r", "_consts")

    def __init__(self, values: Mapping[str, object], kind: type = Ival, *, a0: Fraction = A0,
                 sqrt_width: Fraction = Fraction(1, 10**40),
                 phi_override: Mapping[int, object] | None = None):
        vals = dict(values)
        if "a0" not in vals:
            vals["a0"] = _make_const(kind, a0)
        self.values = vals
        self.kind = kind
        self.sqrt_width = sqrt_width
        self.phi_override = phi_override or {}
        self._phi: dict[int, object] = {}
        self._s: dict[int, object] = {}
        self._r = None
        self._consts: dict[Fraction, object] = {}

    def const(self, q: Fraction):
        c = self._consts.get(q)
        if c is None:
            c = _make_const(self.kind, q)
            self._consts[q] = c
        return c

    def r(self):
        """``s**2 = 4 x1**2 + x3**2``."""
        if self._r is None:
            self._r = self.const(Fraction(4)) * self.values["x1"] ** 2 + self.values["x3"] ** 2
        return self._r

    def spow(self, k: int):
        v = self._s.get(k)
        if v is not None:
            return v
        if k == 0:
            v = self.const(Fraction(1))
        elif k < 0:
            v = self.spow(-k).reciprocal()
        elif k % 2 == 0:
            v = self.r() ** (k // 2)
        else:
            base = self._s.get(1)
            if base is None:
                rr = self.r()
                if rr.lo <= 0:
                    raise DomainError("s enclosure touches zero")
                base = rr.sqrt(self.sqrt_width)
                self._s[1] = base
            v = base if k == 1 else base * self.r() ** ((k - 1) // 2)
        self._s[k] = v
        return v

    def phi(self, i: int):
        v = self._phi.get(i)
        if v is None:
            v = self.phi_override.get(i)
            if v is None:
                v = evaluate(PHI[i], self)
            self._phi[i] = v
        return v


def _make_const(kind: type, q: Fraction):
    if issubclass(kind, Fixed):
        return kind.from_rat(q)
    return Ival(q, q)


def evaluate(e: Expr, ctx: EvalContext):
    """Interval value of ``e`` under ``ctx``."""
    t = type(e)
    if t is Mul:
        l, r = e.left, e.right
        if type(l) is Const:
            return _scale(evaluate(r, ctx), l.value, ctx)
        return evaluate(l, ctx) * evaluate(r, ctx)
    if t is Var:
        try:
            return ctx.values[e.name]
        except KeyError:
            raise KeyError(f"coordinate {e.name} not supplied") from None
    if t is Add:
        return evaluate(e.left, ctx) + evaluate(e.right, ctx)
    if t is Sub:
        return evaluate(e.left, ctx) - evaluate(e.right, ctx)
    if t is Phi:
        return ctx.phi(e.index)
    if t is SPow:
        return ctx.spow(e.k)
    if t is Div:
        num = e.left
        den = evaluate(e.right, ctx)
        if den.contains_zero():
            raise DomainError(f"division by an interval containing zero in {e!r}")
        if type(num) is Const:
            return _scale(den.reciprocal(), num.value, ctx)
        return evaluate(num, ctx) * den.reciprocal()
    if t is Pow:
        return evaluate(e.base, ctx) ** e.n
    if t is Const:
        return ctx.const(e.value)
    if t is Neg:
        return -evaluate(e.arg, ctx)
    raise TypeError(f"unknown node {e!r}")


def _scale(v, q: Fraction, ctx: EvalContext):
    if q == 1:
        return v
    if q == -1:
        return -v
    if q.denominator == 1 and isinstance(v, Fixed):
        n = q.numerator
        return type(v)(v.lo * n, v.hi * n) if n > 0 else type(v)(v.hi * n, v.lo * n)
    return ctx.const(q) * v


# ---------------------------------------------------------------------------
# fields and derivative matrices


def _m(rows: Sequence[Sequence[object]]) -> tuple[tuple[Expr, ...], ...]:
    return tuple(tuple(_wrap(c) for c in row) for row in rows)


def _mat_vec(M: Sequence[Sequence[Expr]], v: Sequence[Expr]) -> tuple[Expr, ...]:
    out = []
    for row in M:
        acc: Expr | None = None
        for m, c in zip(row, v):
            if m.is_zero() or c.is_zero():
                continue
            term = c if (isinstance(m, Const) and m.value == 1) else m * c
            acc = term if acc is None else acc + term
        out.append(acc if acc is not None else Const(0))
    return tuple(out)


@dataclass(frozen=True)
class FieldSpec:
    """A vector field with its derivative matrices.

    ``variables`` names the coordinate fed by each state slot.  ``jacobian``
    is the printed ``Df`` and ``jacobian1`` the printed ``D(Df f)``.
    ``first`` = ``Df f`` and ``second`` = ``D(Df f) f`` are built from them.
    """

    name: str
    variables: tuple[str, ...]
    components: tuple[Expr, ...]
    jacobian: tuple[tuple[Expr, ...], ...]
    jacobian1: tuple[tuple[Expr, ...], ...]
    initial_template: Callable[[Fraction], tuple[Fraction, ...]]
    box_names: tuple[str, ...]
    delta: tuple[Expr, ...] = ()
    first: tuple[Expr, ...] = field(init=False)
    second: tuple[Expr, ...] = field(init=False)

    def __post_init__(self):
        n = len(self.variables)
        if len(self.components) != n or len(self.jacobian) != n or len(self.jacobian1) != n:
            raise ValueError(f"field {self.name}: inconsistent dimensions")
        object.__setattr__(self, "first", _mat_vec(self.jacobian, self.components))
        object.__setattr__(self, "second", _mat_vec(self.jacobian1, self.components))

    @property
    def dimension(self) -> int:
        return len(self.variables)

    def initial_state(self, b: Fraction) -> tuple[Fraction, ...]:
        return tuple(Fraction(v) for v in self.initial_template(Fraction(b)))

    def containment_box(self) -> list[Ival]:
        return [DOMAIN[n] for n in self.box_names]

    def derived(self, which: str) -> tuple[Expr, ...]:
        return {"f": self.components, "f1": self.first, "f2": self.second, "delta": self.delta}[which]


_1 = 1
W_FIELD = FieldSpec(
    name="W",
    variables=("x1", "x2", "x3", "x4", "th"),
    components=(x2, P(1), x4, P(2), P(3)),
    jacobian=_m([
        [0, _1, 0, 0, 0],
        [P(4), 0, P(5), 0, 0],
        [0, 0, 0, _1, 0],
        [2 * P(5), 0, P(6), 0, 0],
        [0, 0, P(7), 0, 0],
    ]),
    jacobian1=_m([
        [P(4), 0, P(5), 0, 0],
        [P(10), P(4), P(12), P(5), 0],
        [2 * P(5), 0, P(6), 0, 0],
        [2 * P(12), 2 * P(5), P(14), P(6), 0],
        [0, 0, P(15), P(7), 0],
    ]),
    initial_template=lambda b: (0, b, 10, 0, 0),
    box_names=("x1", "x2", "x3", "x4", "th"),
    delta=(Const(0), Const(0), Const(0), P(54), P(55)),
)

G_FIELD = FieldSpec(
    name="G",
    variables=("x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "tha"),
    components=(x2, P(1), x4, P(2), x6, P(16), x8, P(17), P(18)),
    jacobian=_m([
        [0, _1, 0, 0, 0, 0, 0, 0, 0],
        [P(4), 0, P(5), 0, 0, 0, 0, 0, 0],
        [0, 0, 0, _1, 0, 0, 0, 0, 0],
        [2 * P(5), 0, P(6), 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, _1, 0, 0, 0],
        [P(19), 0, P(20), 0, P(4), 0, P(5), 0, 0],
        [0, 0, 0, 0, 0, 0, 0, _1, 0],
        [2 * P(20), 0, P(22), 0, 2 * P(5), 0, P(6), 0, 0],
        [0, 0, P(23), 0, 0, 0, P(7), 0, 0],
    ]),
    jacobian1=_m([
        [P(4), 0, P(5), 0, 0, 0, 0, 0, 0],
        [P(10), P(4), P(12), P(5), 0, 0, 0, 0, 0],
        [2 * P(5), 0, P(6), 0, 0, 0, 0, 0, 0],
        [2 * P(12), 2 * P(5), P(14), P(6), 0, 0, 0, 0, 0],
        [P(19), 0, P(20), 0, P(4), 0, P(5), 0, 0],
        [P(30), P(19), P(34), P(20), P(10), P(4), P(12), P(5), 0],
        [2 * P(20), 0, P(22), 0, 2 * P(5), 0, P(6), 0, 0],
        [2 * P(34), 2 * P(20), P(39), P(22), 2 * P(12), 2 * P(5), P(14), P(6), 0],
        [0, 0, P(40), P(23), 0, 0, P(15), P(7), 0],
    ]),
    initial_template=lambda b: (0, b, 10, 0, 0, 0, 0, 0, 0),
    box_names=("x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "tha"),
    delta=(Const(0), Const(0), Const(0), P(54), Const(0), Const(0), Const(0), P(56), P(57)),
)

U_FIELD = FieldSpec(
    name="U",
    variables=("x1", "x2", "x3", "x4", "x9", "x10", "x11", "x12"),
    components=(x2, P(1), x4, P(2), x10, P(41), x12, P(42)),
    jacobian=_m([
        [0, _1, 0, 0, 0, 0, 0, 0],
        [P(4), 0, P(5), 0, 0, 0, 0, 0],
        [0, 0, 0, _1, 0, 0, 0, 0],
        [2 * P(5), 0, P(6), 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, _1, 0, 0],
        [P(43), 0, P(44), 0, P(4), 0, P(5), 0],
        [0, 0, 0, 0, 0, 0, 0, _1],
        [2 * P(44), 0, P(45), 0, 2 * P(5), 0, P(6), 0],
    ]),
    jacobian1=_m([
        [P(4), 0, P(5), 0, 0, 0, 0, 0],
        [P(10), P(4), P(12), P(5), 0, 0, 0, 0],
        [2 * P(5), 0, P(6), 0, 0, 0, 0, 0],
        [2 * P(12), 2 * P(5), P(14), P(6), 0, 0, 0, 0],
        [P(43), 0, P(44), 0, P(4), 0, P(5), 0],
        [P(48), P(43), P(50), P(44), P(10), P(4), P(12), P(5)],
        [2 * P(44), 0, P(45), 0, 2 * P(5), 0, P(6), 0],
        [2 * P(50), 2 * P(44), P(53), P(45), 2 * P(12), 2 * P(5), P(14), P(6)],
    ]),
    initial_template=lambda b: (0, b, 10, 0, 0, 1, 0, 0),
    box_names=("x1", "x2", "x3", "x4", "x9", "x10", "x11", "x12"),
    delta=(Const(0), Const(0), Const(0), P(54), Const(0), Const(0), Const(0), P(58)),
)

FIELDS: dict[str, FieldSpec] = {"W": W_FIELD, "G": G_FIELD, "U": U_FIELD}

# The one-dimensional warm-up y' = y - y**2/3.  Df = 1 - 2y/3 and
# D(Df f) = -2/3 (y - y**2/3) + (1 - 2y/3)**2.
_y = Var("y")
_intro_f = _y - Fraction(1, 3) * _y * _y
_intro_df = 1 - Fraction(2, 3) * _y
INTRO_FIELD = FieldSpec(
    name="intro",
    variables=("y",),
    components=(_intro_f,),
    jacobian=((_intro_df,),),
    jacobian1=((Fraction(-2, 3) * _intro_f + _intro_df * _intro_df,),),
    initial_template=lambda y0: (y0,),
    box_names=(),
)

# Names accepted by eval_field: base fields, their F1 (W1, G1, U1), F2 (W2..)
# and the parameter-difference fields dW, dG, dU.
_DERIVED = {"": "f", "1": "f1", "2": "f2"}


def field_components(name: str) -> tuple[Expr, ...]:
    if name.startswith("d") and name[1:] in FIELDS:
        return FIELDS[name[1:]].delta
    base, suffix = name[0], name[1:]
    if base not in FIELDS or suffix not in _DERIVED:
        raise KeyError(f"unknown field {name!r}")
    return FIELDS[base].derived(_DERIVED[suffix])


def matrix_field(name: str) -> tuple[tuple[Expr, ...], ...]:
    """``DW``, ``DW1``, ``DG``, ``DG1``, ``DU``, ``DU1``."""
    if not name.startswith("D") or name[1] not in FIELDS or name[2:] not in ("", "1"):
        raise KeyError(f"unknown matrix field {name!r}")
    f = FIELDS[name[1]]
    return f.jacobian if name[2:] == "" else f.jacobian1


# ---------------------------------------------------------------------------
# public evaluation API


@dataclass(frozen=True)
class StatePoint:
    """Coordinate intervals keyed by role name plus the parameter ``a``."""

    coordinates: Mapping[str, Ival]
    a: Ival

    @classmethod
    def of(cls, a, **coords) -> "StatePoint":
        return cls({k: Ival._coerce(v) for k, v in coords.items()}, Ival._coerce(a))

    def values(self) -> dict[str, Ival]:
        d = dict(self.coordinates)
        d["a"] = self.a
        return d


def _check_in_domain(names: Iterable[str], values: Mapping[str, Ival]) -> None:
    for n in names:
        if n not in values:
            raise KeyError(f"coordinate {n} not supplied")
        if not DOMAIN[n].contains(values[n]):
            raise DomainError(f"coordinate {n}={values[n]!r} lies outside the domain box")


def eval_phi(i: int, p: StatePoint, *, check_domain: bool = True,
             sqrt_width: Fraction = Fraction(1, 10**40)) -> Ival:
    """Sound enclosure of phi_i over the point or box ``p``."""
    if i not in PHI:
        raise KeyError(f"phi index must be in 1..58, got {i}")
    vals = p.values()
    if check_domain:
        _check_in_domain(PHI_VARIABLES[i], vals)
    if "x3" in PHI_VARIABLES[i] and vals["x3"].contains_zero():
        raise DomainError("x3 enclosure contains 0")
    ctx = EvalContext(vals, Ival, sqrt_width=sqrt_width)
    return ctx.phi(i)


def eval_field(name: str, p: StatePoint, *, sqrt_width: Fraction = Fraction(1, 10**40)) -> list[Ival]:
    comps = field_components(name)
    vals = p.values()
    if vals.get("x3") is not None and vals["x3"].lo <= 0:
        raise DomainError("field evaluation needs x3 > 0")
    ctx = EvalContext(vals, Ival, sqrt_width=sqrt_width)
    return [evaluate(c, ctx) for c in comps]


def eval_exprs_fixed(exprs: Sequence[Expr], values: Mapping[str, Fixed], kind: type,
                     phi_override: Mapping[int, Fixed] | None = None) -> list[Fixed]:
    ctx = EvalContext(values, kind, phi_override=phi_override)
    return [evaluate(e, ctx) for e in exprs]


def frobenius_bound(matrix: str | Sequence[Sequence[Expr]], box: DomainBox | Mapping[str, Ival] | None = None,
                    *, entry_bounds: Mapping[int, Ival] | None = None, digits: int = 6) -> Fraction:
    """Rational ``K`` with ``K**2 >= sum of squared entry magnitudes`` over ``box``.

    Entries are enclosed by interval evaluation; Phi references use
    ``entry_bounds`` (certified enclosures) when given.  ``K`` is the
    smallest multiple of ``10**-digits`` that passes the exact square test.
    """
    M = matrix_field(matrix) if isinstance(matrix, str) else matrix
    box = V if box is None else box
    intervals = box.intervals if isinstance(box, DomainBox) else box
    kind = fixed_class(128)
    values = {n: kind.from_ival(iv) for n, iv in intervals.items()}
    override = {i: kind.from_ival(iv) for i, iv in (entry_bounds or {}).items()}
    ctx = EvalContext(values, kind, phi_override=override)
    total = Fraction(0)
    for row in M:
        for m in row:
            if m.is_zero():
                continue
            iv = evaluate(m, ctx).to_ival()
            total += iv.mag**2
    return sqrt_ceiling(total, digits)


def sqrt_ceiling(x: Fraction, digits: int) -> Fraction:
    """Least multiple ``k / 10**digits`` whose square is ``>= x``."""
    import math

    if x <= 0:
        return Fraction(0)
    scale = 10**digits
    k = math.isqrt((x.numerator * scale * scale) // x.denominator)
    while Fraction(k, scale) ** 2 < x:
        k += 1
    return Fraction(k, scale)


def dump_dictionary() -> str:
    """Human-readable listing of every phi_i and its printed bound pair."""
    lines = []
    for i in sorted(PHI):
        lo, hi = PHI_BOUNDS[i]
        lines.append(f"phi{i} = {PHI[i]!r}")
        lines.append(f"    vars: {', '.join(sorted(PHI_VARIABLES[i], key=_var_key))}")
        lines.append(f"    B(phi{i}) = {{{lo.numerator}/{lo.denominator}, {hi.numerator}/{hi.denominator}}}")
    return "\n".join(lines)


def _var_key(n: str):
    return (0, int(n[1:])) if n.startswith("x") else (1, n)
