import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from roundtaylor.exact import Ival
from roundtaylor.topology import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    Certificate,
    EdgeEvidence,
    IFTParams,
    Monotonicity,
    ProofConstants,
    Rectangle,
    assemble_periodicity,
    ift_region_check,
    poincare_miranda_check,
    recheck,
    theta_comparison,
)

PC = ProofConstants.published()
PARAMS = IFTParams.published(PC)


def test_ift_gains_match_decimal_oracle():
    with mpmath.workdps(30):
        e1, e2, d1, d2, d1t, d2t = map(mpmath.mpf, ("0.5354", "0.9098", "0.8136", "1.6181", "0.8159", "1.6718"))
        den = d1 * d2 - e1 * e2
        assert abs(mpmath.mpf(PARAMS.m1.numerator) / PARAMS.m1.denominator - e1 * (d2t + e2) / den) < 1e-25
        assert abs(mpmath.mpf(PARAMS.m2.numerator) / PARAMS.m2.denominator - e2 * (d1t + e1) / den) < 1e-25


def test_ift_gains_bound_sampled_implicit_slopes():
    """Cramer's rule on sampled Jacobians never exceeds m1, m2."""
    p, rng = PARAMS, random.Random(2)
    for _ in range(2000):
        ftt = p.delta1 + (p.delta1_t - p.delta1) * Fraction(rng.randint(1, 99), 100)
        ra = p.delta2 + (p.delta2_t - p.delta2) * Fraction(rng.randint(1, 99), 100)
        fa, fb = (p.eps1 * Fraction(rng.randint(-99, 99), 100) for _ in range(2))
        rt, rb = (p.eps2 * Fraction(rng.randint(-99, 99), 100) for _ in range(2))
        det = ftt * ra - fa * rt
        assert abs((-fb * ra + fa * rb) / det) <= p.m1
        assert abs((-ftt * rb + rt * fb) / det) <= p.m2


def test_ift_arithmetic_with_published_parameters():
    cert = ift_region_check("ift", PARAMS, PC.sb)
    assert not cert.failed
    assert cert.verdict == INCONCLUSIVE  # no derivative ranges yet
    assert PC.sb < PARAMS.rho1 and PC.sb < PARAMS.rho2


def test_ift_rejects_dominant_off_diagonal():
    bad = IFTParams(**{**PARAMS.__dict__, "eps1": Fraction(2), "eps2": Fraction(2)})
    cert = ift_region_check("ift", bad, PC.sb)
    assert cert.verdict == FAIL
    assert cert.failed[0].label == "delta1 delta2 > eps1 eps2"


@settings(max_examples=100)
@given(st.fractions(min_value=Fraction(1, 100), max_value=100))
def test_ift_gains_are_scale_free(c):
    """Scaling F and R together leaves m1 and m2 unchanged."""
    p = PARAMS
    scaled = IFTParams(p.delta1 * c, p.delta1_t * c, p.eps1 * c, p.delta2 * c, p.delta2_t * c, p.eps2 * c,
                       p.eps1_t, p.eps2_t, p.mu1, p.mu2)
    # numerators scale by c**2 along with the denominator
    assert scaled.m1 == p.m1 and scaled.m2 == p.m2


def _ranges(scale=Fraction(1)):
    p = PARAMS
    mid = lambda lo, hi: Ival(lo + (hi - lo) / 4, hi - (hi - lo) / 4)  # noqa: E731
    return {
        "F_ddot": mid(p.delta1, p.delta1_t), "R_dot_a": mid(p.delta2, p.delta2_t),
        "F_dot_a": Ival(-p.eps1 / 2, p.eps1 / 2) * scale, "F_dot_b": Ival(-p.eps1 / 2, p.eps1 / 2),
        "R_ddot": Ival(-p.eps2 / 2, p.eps2 / 2), "R_dot_b": Ival(-p.eps2 / 2, p.eps2 / 2),
    }


def test_ift_full_check_passes_and_fails_on_ranges():
    center = {"t": PC.t0, "a": PC.a0, "b": PC.b0}
    rho = (PC.sb + min(PARAMS.rho1, PARAMS.rho2)) / 2
    region = {k: Ival(center[k] - w * 2, center[k] + w * 2)
              for k, w in (("t", PC.t_window), ("a", PC.a_window), ("b", rho))}
    good = ift_region_check("ift", PARAMS, PC.sb, ranges=_ranges(), region=region, center=center, rho=rho)
    assert good.verdict == PASS and recheck(good)
    bad = ift_region_check("ift", PARAMS, PC.sb, ranges=_ranges(Fraction(3)), region=region, center=center, rho=rho)
    assert bad.verdict == FAIL
    assert [c.label for c in bad.failed] == ["|F_dot_a| < eps1"]


# -- Poincare-Miranda on synthetic linear maps ------------------------------

RECT = Rectangle(Ival(Fraction(0), Fraction(1)), Ival(Fraction(0), Fraction(1)), Fraction(0))
REGION = {"t": Ival(-1, 2), "a": Ival(-1, 2), "b": Ival(-1, 1)}


def _sign(v):
    return 1 if v > 0 else -1


def _synthetic_edges(F, R, beta, kappa, *, drop=None):
    """Evidence at the worst end of each edge for F(t, a), R(t, a) linear."""
    edges = {}
    spec = {
        "bottom": ("Fdot", +1, F, "t", RECT.t.lo, "a", beta),
        "top": ("Fdot", -1, F, "t", RECT.t.hi, "a", beta),
        "left": ("Rdot", -1, R, "a", RECT.a.lo, "t", kappa),
        "right": ("Rdot", +1, R, "a", RECT.a.hi, "t", kappa),
    }
    for name, (comp, sign, fn, fixed, val, free, slope) in spec.items():
        mono = None if name == drop else Monotonicity(comp, free, _sign(slope), REGION, "synthetic")
        free_rng = RECT.a if free == "a" else RECT.t
        worst = free_rng.lo if _sign(slope) * sign > 0 else free_rng.hi
        pt = {fixed: val, free: worst}
        edges[name] = EdgeEvidence("syn", comp, sign, pt["t"], pt["a"], RECT.b, fn(pt["t"], pt["a"]), Fraction(0),
                                   monotonicity=mono)
    return edges


def _brute_force(F, R, n=20):
    grid = [Fraction(i, n) for i in range(n + 1)]
    return (all(F(RECT.t.lo, a) > 0 and F(RECT.t.hi, a) < 0 for a in grid)
            and all(R(t, RECT.a.lo) < 0 and R(t, RECT.a.hi) > 0 for t in grid))


coef = st.fractions(min_value=-3, max_value=3, max_denominator=50)


@settings(max_examples=200)
@given(st.fractions(min_value=Fraction(1, 10), max_value=3, max_denominator=50), coef,
       st.fractions(min_value=Fraction(1, 10), max_value=3, max_denominator=50), coef,
       st.fractions(min_value=-1, max_value=2, max_denominator=20),
       st.fractions(min_value=-1, max_value=2, max_denominator=20))
def test_poincare_miranda_agrees_with_brute_force(alpha, beta, gamma, kappa, ts, as_):
    assume(beta != 0 and kappa != 0)
    F = lambda t, a: alpha * (ts - t) + beta * (a - as_)  # noqa: E731
    R = lambda t, a: gamma * (a - as_) + kappa * (t - ts)  # noqa: E731
    cert = poincare_miranda_check("syn", RECT, _synthetic_edges(F, R, beta, kappa))
    assert (cert.verdict == PASS) == _brute_force(F, R)
    assert cert.verdict != INCONCLUSIVE


def _good_maps():
    F = lambda t, a: Fraction(1, 2) - t + (a - Fraction(1, 2)) / 10  # noqa: E731
    R = lambda t, a: a - Fraction(1, 2) + (t - Fraction(1, 2)) / 10  # noqa: E731
    return F, R


def test_poincare_miranda_pass_flip_and_missing():
    F, R = _good_maps()
    edges = _synthetic_edges(F, R, Fraction(1, 10), Fraction(1, 10))
    assert poincare_miranda_check("ok", RECT, edges).verdict == PASS

    flipped = dict(edges)
    e = edges["top"]
    flipped["top"] = EdgeEvidence(e.run, e.component, e.claimed_sign, e.t, e.a, e.b, -e.value, e.error,
                                  monotonicity=e.monotonicity)
    assert poincare_miranda_check("flip", RECT, flipped).verdict == FAIL

    missing = _synthetic_edges(F, R, Fraction(1, 10), Fraction(1, 10), drop="left")
    cert = poincare_miranda_check("missing", RECT, missing)
    assert cert.verdict == INCONCLUSIVE and "monotonicity" in cert.undecided[0]


def test_poincare_miranda_rejects_non_extreme_evidence_point():
    F, R = _good_maps()
    edges = _synthetic_edges(F, R, Fraction(1, 10), Fraction(1, 10))
    e = edges["bottom"]
    edges["bottom"] = EdgeEvidence(e.run, e.component, e.claimed_sign, e.t, RECT.a.hi, e.b, F(e.t, RECT.a.hi),
                                   e.error, monotonicity=e.monotonicity)
    cert = poincare_miranda_check("moved", RECT, edges)
    assert cert.verdict == FAIL
    assert any("extreme" in c.label for c in cert.failed)


@settings(max_examples=100)
@given(st.fractions(min_value=0, max_value=1, max_denominator=10**6),
       st.fractions(min_value=0, max_value=1, max_denominator=10**6))
def test_edge_margin_is_monotone_in_error(e1, e2):
    lo, hi = sorted((e1, e2))
    mk = lambda err: EdgeEvidence("r", "Fdot", 1, 0, 0, 0, Fraction(1, 2), err)  # noqa: E731
    assert mk(hi).margin <= mk(lo).margin


# -- Theta ------------------------------------------------------------------

SEVEN_PI_18 = Fraction(122173047639603, 10**14)  # 7 pi / 18 to 14 digits, rounded down


def test_theta_with_zero_spans_reduces_to_center_error():
    below = theta_comparison("b", Fraction(122, 100), Fraction(1, 10**6), Fraction(1), Fraction(1), 0, 0, "below")
    assert below.verdict == PASS
    assert below.inputs["worst_case"] == "1220001/1000000"
    above = theta_comparison("a", Fraction(122, 100), Fraction(1, 10**6), Fraction(1), Fraction(1), 0, 0, "above")
    assert above.verdict == FAIL


def test_theta_too_close_for_the_pi_enclosure_is_inconclusive():
    cert = theta_comparison("close", SEVEN_PI_18, Fraction(0), Fraction(0), Fraction(0), 0, 0, "below",
                            pi_width=Fraction(1, 10**3))
    assert cert.verdict == INCONCLUSIVE
    fine = theta_comparison("close", SEVEN_PI_18, Fraction(0), Fraction(0), Fraction(0), 0, 0, "below",
                            pi_width=Fraction(1, 10**20))
    assert fine.verdict == PASS


def test_theta_side_must_be_named():
    with pytest.raises(ValueError):
        theta_comparison("x", Fraction(1), 0, 0, 0, 0, 0, "sideways")


# -- assembly ---------------------------------------------------------------

def _passing(label):
    c = Certificate("stub", label)
    c.require("ok", 1, "==", 1)
    return c


def test_assembly_passes_only_when_every_part_does():
    parts = [_passing(n) for n in ("l1", "l2", "l3", "l4", "tb", "ta")]
    cert = assemble_periodicity(PC, *parts)
    assert cert.verdict == PASS
    assert cert.inputs["period"] == "36*tbar" and cert.inputs["rotations"] == 7

    failing = Certificate("stub", "l4")
    failing.require("broken", 0, "==", 1)
    assert assemble_periodicity(PC, *parts[:3], failing, *parts[4:]).verdict == FAIL

    unsure = Certificate("stub", "l4")
    unsure.undecidable("no data")
    assert assemble_periodicity(PC, *parts[:3], unsure, *parts[4:]).verdict == INCONCLUSIVE


def test_assembly_checks_rectangles_lie_in_windows():
    parts = [_passing(n) for n in ("l1", "l2", "l3", "l4", "tb", "ta")]
    far = Rectangle(Ival(PC.t0 + 1, PC.t0 + 2), Ival(PC.a0, PC.a0), PC.b0 - PC.sb)
    assert assemble_periodicity(PC, *parts, rect2=far).verdict == FAIL


def test_recheck_and_empty_certificate():
    assert Certificate("x", "empty").verdict == INCONCLUSIVE
    c = _passing("x")
    assert recheck(c)
