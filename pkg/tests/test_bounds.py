import random
from fractions import Fraction

import pytest

from roundtaylor.bounds import (
    CERTIFIED,
    REFUTED,
    BoundTask,
    certify_hypotheses,
    certify_table,
    enclose,
    optimize_over_box,
)
from roundtaylor.exact import Ival
from roundtaylor.fields import A0, DOMAIN, PHI, PHI_VARIABLES, StatePoint, Var, eval_phi

x = Var("x")
y = Var("y")
UNIT = {"x": Ival(-1, 1), "y": Ival(-1, 1)}


def test_simple_polynomial_range():
    # x**2 - x*y over the unit square has range [-1/4, 2]
    res = enclose(x * x - x * y, UNIT, tol=Fraction(1, 10**6))
    assert res.status == CERTIFIED
    assert res.range.lo <= Fraction(-1, 4) and res.range.hi >= 2
    assert res.range.hi - 2 < Fraction(1, 10**5)


def test_wrong_claim_is_refuted_with_witness():
    res = optimize_over_box(BoundTask(x * x - x * y, UNIT, Ival(0, 2)))
    assert res.status == REFUTED
    w = res.lower.witness
    assert w is not None and w["x"] ** 2 - w["x"] * w["y"] < 0


def test_empty_target_cannot_be_built():
    with pytest.raises(ValueError):
        BoundTask(x, UNIT, Ival(1, 0))


@pytest.fixture(scope="module")
def small_table():
    return certify_table([3, 42], budget=20000)


def test_phi3_printed_bound_certifies(small_table):
    assert small_table[3].status == CERTIFIED
    assert small_table[3].claimed.contains(small_table[3].enclosure.lo)


def test_phi42_printed_bound_is_refuted(small_table):
    cert = small_table[42]
    assert cert.status == REFUTED
    w = cert.result.lower.witness or cert.result.upper.witness
    assert w is not None
    # the witness value lies outside the printed pair
    lo, hi = cert.result.lower, cert.result.upper
    outside = [s.witness_value for s in (lo, hi) if s.status == REFUTED]
    assert outside and all(v.hi < cert.claimed.lo or v.lo > cert.claimed.hi for v in outside)


def test_certified_enclosures_contain_sampled_values(small_table):
    """No false certificates: random points of the domain land inside."""
    rng = random.Random(1)
    for i, cert in small_table.items():
        for _ in range(300):
            coords = {n: DOMAIN[n].lo + (DOMAIN[n].hi - DOMAIN[n].lo) * Fraction(rng.randint(0, 10**4), 10**4)
                      for n in PHI_VARIABLES[i]}
            a = coords.pop("a", A0)
            v = eval_phi(i, StatePoint.of(a, **coords))
            assert cert.enclosure.lo <= v.hi and v.lo <= cert.enclosure.hi


def test_w_hypothesis_constants_certify():
    rep = certify_hypotheses("W", budget=20000)
    assert rep.claimed_all_certified, rep.summary()


def test_every_entry_has_domain_variables():
    for i in PHI:
        assert set(PHI_VARIABLES[i]) <= set(DOMAIN), i
