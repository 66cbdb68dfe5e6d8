import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roundtaylor.exact import (
    DomainError,
    GridSpec,
    Ival,
    exp_upper_bound,
    fixed_class,
    floor_to_grid,
    geometric_recurrence_closed_form,
    nearest_grid_in,
    parse_ival,
    pi_enclosure,
    rat,
    sqrt_enclosure,
)

fracs = st.fractions(min_value=-50, max_value=50, max_denominator=10**6)
positive = st.fractions(min_value=Fraction(1, 10**6), max_value=100, max_denominator=10**6)


def ivals(elements=fracs):
    return st.tuples(elements, elements).map(lambda p: Ival(min(p), max(p)))


def test_rat_rejects_decimals():
    assert rat("3/7") == Fraction(3, 7)
    with pytest.raises(ValueError):
        rat("0.5")
    with pytest.raises(TypeError):
        rat(0.5)


def test_parse_ival_roundtrip():
    iv = parse_ival("[-1/3, 5/2]")
    assert iv == Ival(Fraction(-1, 3), Fraction(5, 2))


def _random_point(iv: Ival, rng: random.Random) -> Fraction:
    return iv.lo + (iv.hi - iv.lo) * Fraction(rng.randint(0, 1000), 1000)


def interval_fuzz(n: int, seed: int = 7) -> int:
    """Count enclosure violations of +, -, *, / and powers over ``n`` random draws."""
    rng = random.Random(seed)
    bad = 0

    def draw():
        a = Fraction(rng.randint(-2000, 2000), rng.randint(1, 400))
        b = a + Fraction(rng.randint(0, 2000), rng.randint(1, 400))
        return Ival(a, b)

    for _ in range(n):
        x, y = draw(), draw()
        px, py = _random_point(x, rng), _random_point(y, rng)
        checks = [(x + y, px + py), (x - y, px - py), (x * y, px * py), (x ** 3, px ** 3), (x ** 2, px ** 2)]
        if not y.contains_zero():
            checks.append((x / y, px / py))
        bad += sum(not iv.contains(v) for iv, v in checks)
    return bad


def test_interval_fuzz_ten_thousand_points():
    assert interval_fuzz(10_000) == 0


@given(ivals(), ivals())
def test_ival_ops_contain_endpoint_combinations(x, y):
    for a in (x.lo, x.hi, x.mid):
        for b in (y.lo, y.hi, y.mid):
            assert (x + y).contains(a + b)
            assert (x * y).contains(a * b)
            assert (x - y).contains(a - b)


@given(ivals(), st.integers(min_value=0, max_value=6))
def test_even_power_is_nonnegative_and_sound(x, n):
    p = x ** n
    assert p.contains(x.lo ** n) and p.contains(x.hi ** n)
    if n % 2 == 0:
        assert p.lo >= 0


def test_division_by_interval_with_zero_raises():
    with pytest.raises(DomainError):
        Ival(1, 2) / Ival(-1, 1)


@settings(max_examples=200)
@given(ivals(), ivals())
def test_fixed_encloses_exact(x, y):
    K = fixed_class(96)
    fx, fy = K.from_ival(x), K.from_ival(y)
    for got, exact in ((fx + fy, x + y), (fx * fy, x * y), (fx - fy, x - y)):
        enc = got.to_ival()
        assert enc.lo <= exact.lo and exact.hi <= enc.hi


@given(fracs, st.integers(min_value=1, max_value=15))
def test_floor_to_grid_invariants(x, q):
    g = GridSpec(q)
    z = floor_to_grid(x, g)
    assert 0 <= x - z < g.spacing
    assert (z * g.scale).denominator == 1
    assert floor_to_grid(z, g) == z


@given(fracs, st.fractions(min_value=0, max_value=Fraction(1, 10**7)), st.integers(min_value=1, max_value=12))
def test_nearest_grid_in_certificate(x, w, q):
    g = GridSpec(q)
    enc = Ival(x, x + w)
    z, ok = nearest_grid_in(enc, g)
    assert (z * g.scale).denominator == 1
    if ok:
        assert abs(z - enc.lo) <= g.spacing and abs(z - enc.hi) <= g.spacing
    if w <= g.spacing:
        assert ok


@given(positive, st.sampled_from([Fraction(1, 10**k) for k in (3, 10, 30)]))
def test_sqrt_enclosure(r, w):
    iv = sqrt_enclosure(r, w)
    assert iv.lo ** 2 <= r <= iv.hi ** 2
    assert iv.width <= w


def test_sqrt_of_perfect_square_is_exact():
    assert sqrt_enclosure(Fraction(9, 4), Fraction(1, 10)) == Ival(Fraction(3, 2), Fraction(3, 2))


@settings(max_examples=50)
@given(st.fractions(min_value=0, max_value=20, max_denominator=1000))
def test_exp_upper_bound_against_mpmath(x):
    ub = exp_upper_bound(x, 25)
    with mpmath.workdps(300):
        assert mpmath.mpf(ub.numerator) / ub.denominator >= mpmath.exp(mpmath.mpf(x.numerator) / x.denominator)


def test_pi_enclosure_contains_pi():
    iv = pi_enclosure(Fraction(1, 10**20))
    assert iv.width <= Fraction(1, 10**20)
    with mpmath.workdps(50):
        lo = mpmath.mpf(iv.lo.numerator) / iv.lo.denominator
        hi = mpmath.mpf(iv.hi.numerator) / iv.hi.denominator
        assert lo < mpmath.pi < hi


def recurrence_agreement(draws: int, seed: int = 11) -> int:
    rng = random.Random(seed)
    mismatches = 0
    for _ in range(draws):
        p = Fraction(rng.randint(0, 10**6), 10**9)
        L = Fraction(rng.randint(1, 10**4), 10**5)
        q0 = Fraction(rng.randint(0, 1000), 10**4)
        k = rng.randint(0, 60)
        q = q0
        for _ in range(k):
            q = (1 + L) * q + p
        mismatches += q != geometric_recurrence_closed_form(p, L, q0, k)
    return mismatches


def test_recurrence_closed_form_on_thousand_draws():
    assert recurrence_agreement(1000) == 0
