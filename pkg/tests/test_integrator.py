import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roundtaylor.bounds import PUBLISHED_CONSTANTS
from roundtaylor.exact import DomainError, GridSpec, Ival
from roundtaylor.fields import A0, FIELDS, INTRO_FIELD
from roundtaylor.integrator import (
    HypothesisConstants,
    RunConfig,
    certified_state,
    comparison_bound,
    global_error_bound,
    round_taylor_run,
    taylor_step,
)

T0 = Fraction(13366894627923, 5 * 10**12)
B0 = Fraction(1490359743, 10**9)

# independent mpmath evaluation at 50 digits, frozen
H_TILDE_ORACLE = {
    "W": "1.2606085601963972680952480058343824739e-7",
    "G": "1.9055185120197823427267736381557450588e-6",
    "U": "2.0897574533726426649117777356948559824e-6",
}


def test_intro_first_step_is_exact():
    assert taylor_step(INTRO_FIELD, [Fraction(1, 2)], Fraction(1, 100), order=1, a=Fraction(0)) == [
        Ival(Fraction(121, 240), Fraction(121, 240))
    ]


def test_zero_step_is_identity():
    z = [Fraction(0), B0, Fraction(10), Fraction(0), Fraction(0)]
    assert [iv.lo for iv in taylor_step(FIELDS["W"], z, 0)] == z


@pytest.mark.parametrize("field", ["W", "G", "U"])
def test_global_error_bound_against_oracle(field):
    got = global_error_bound(PUBLISHED_CONSTANTS[field], T0 / 30000, Fraction(1, 10**14), 30000, 2)
    with mpmath.workdps(50):
        oracle = mpmath.mpf(H_TILDE_ORACLE[field])
        val = mpmath.mpf(got.numerator) / got.denominator
        # an upper bound, tight up to the sqrt and exp roundings
        assert oracle * (1 - mpmath.mpf(10) ** -30) <= val <= oracle * (1 + mpmath.mpf(10) ** -20)


def test_published_error_bounds_hold_for_w_and_u():
    h = T0 / 30000
    H = Fraction(1, 10**14)
    assert global_error_bound(PUBLISHED_CONSTANTS["W"], h, H, 30000, 2) <= Fraction(127, 10**9)
    assert global_error_bound(PUBLISHED_CONSTANTS["U"], h, H, 30000, 2) <= Fraction(209, 10**8)


_c = PUBLISHED_CONSTANTS["W"]


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=5000), st.integers(min_value=1, max_value=3000))
def test_global_error_bound_grows_with_steps(k, extra):
    h = Fraction(1, 1000)
    H = Fraction(1, 10**12)
    assert global_error_bound(_c, h, H, k, 2) < global_error_bound(_c, h, H, k + extra, 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=20))
def test_global_error_bound_grows_with_grid_spacing(q):
    h = Fraction(1, 1000)
    coarse = global_error_bound(_c, h, Fraction(1, 10**q), 100, 2)
    fine = global_error_bound(_c, h, Fraction(1, 10 ** (q + 1)), 100, 2)
    assert fine < coarse


def test_global_error_bound_rejects_bad_input():
    with pytest.raises(ValueError):
        global_error_bound(_c, 0, Fraction(1, 10), 1, 2)
    zero = HypothesisConstants(Fraction(1), (Fraction(1),), (Fraction(0), Fraction(0)))
    with pytest.raises(DomainError):
        global_error_bound(zero, Fraction(1, 10), Fraction(0), 1, 2)


def test_comparison_bound_oracle_and_errors():
    K, eps, d0, dt = Fraction(2), Fraction(1, 1000), Fraction(1, 10**6), Fraction(3, 2)
    got = comparison_bound(K, eps, d0, dt)
    with mpmath.workdps(40):
        e = mpmath.exp(3)
        want = mpmath.mpf(1) / 10**6 * e + mpmath.mpf(1) / 2000 * (e - 1)
        assert want <= mpmath.mpf(got.numerator) / got.denominator <= want * (1 + mpmath.mpf(10) ** -25)
    with pytest.raises(DomainError):
        comparison_bound(0, eps, d0, dt)
    with pytest.raises(ValueError):
        comparison_bound(K, -eps, d0, dt)


def _intro_run(q=6, steps=10):
    cfg = RunConfig(INTRO_FIELD, Fraction(0), (Fraction(1, 2),), Fraction(1, 100), GridSpec(q), steps, order=1,
                    box=(Ival(-10**6, 10**6),), epsilon=Fraction(0))
    return round_taylor_run(cfg)


def test_intro_run_matches_exact_solution_within_bound():
    rec = _intro_run(steps=50)
    assert rec.containment_ok and not rec.certified  # no constants supplied
    # exact logistic solution y = 3 / (1 + 5 e**-t)
    for j, z in enumerate(rec.z):
        t = Fraction(j, 100)
        y = 3 / (1 + 5 * math.exp(-float(t)))
        # order 1 local error dominates: h**2/2 max|y''| per step, well under 1e-3 over 50 steps
        assert abs(float(z[0]) - y) < 1e-3


def test_intro_run_is_on_grid_and_deterministic():
    a, b = _intro_run(), _intro_run()
    assert a.z == b.z
    assert all((v[0] * 10**6).denominator == 1 for v in a.z)


def test_short_w_run_is_certified_and_contains_state():
    spec = FIELDS["W"]
    cfg = RunConfig(spec, A0, spec.initial_state(B0), T0 / 30000, GridSpec(14), 200,
                    constants=PUBLISHED_CONSTANTS["W"])
    rec = round_taylor_run(cfg)
    assert rec.certified and rec.containment_ok
    assert rec.H_tilde == global_error_bound(PUBLISHED_CONSTANTS["W"], T0 / 30000, Fraction(1, 10**14), 200, 2)
    enc = certified_state(rec, 200)
    assert all(iv.contains(z) for iv, z in zip(enc, rec.final))
    assert round_taylor_run(cfg).z == rec.z
