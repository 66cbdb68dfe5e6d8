"""Existence, uniqueness and periodicity certificates.

A certificate is a list of exact rational inequalities.  It passes only when
every one of them holds; a check that cannot be decided (missing evidence, a
pi enclosure too coarse) makes it inconclusive instead.
"""
from __future__ import annotations

import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .exact import Ival, format_ival, format_rat, pi_enclosure

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"

_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge, "==": operator.eq}


@dataclass(frozen=True)
class ProofConstants:
    a0: Fraction
    da: Fraction
    sa: Fraction
    b0: Fraction
    sb: Fraction
    t0: Fraction
    dt: Fraction
    st: Fraction

    @classmethod
    def published(cls) -> "ProofConstants":
        return cls(
            a0=Fraction(43170475352787, 10**13),
            da=Fraction(17, 5 * 10**7),
            sa=Fraction(1197, 10**8),
            b0=Fraction(1490359743, 10**9),
            sb=Fraction(1, 50000),
            t0=Fraction(13366894627923, 5 * 10**12),
            dt=Fraction(1, 2500000),
            st=Fraction(11, 2000000),
        )

    @property
    def t_window(self) -> Fraction:
        return 6 * (self.st + self.dt)

    @property
    def a_window(self) -> Fraction:
        return 3 * (self.sa + self.da)

    def as_dict(self) -> dict[str, str]:
        return {k: format_rat(getattr(self, k)) for k in ("a0", "da", "sa", "b0", "sb", "t0", "dt", "st")}


@dataclass(frozen=True)
class Check:
    label: str
    lhs: Fraction
    op: str
    rhs: Fraction
    holds: bool

    def as_dict(self) -> dict:
        return {"label": self.label, "lhs": format_rat(self.lhs), "op": self.op,
                "rhs": format_rat(self.rhs), "holds": self.holds}


@dataclass
class Certificate:
    kind: str
    label: str
    transcript: list[Check] = field(default_factory=list)
    undecided: list[str] = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def require(self, label: str, lhs, op: str, rhs) -> bool:
        lhs, rhs = Fraction(lhs), Fraction(rhs)
        ok = _OPS[op](lhs, rhs)
        self.transcript.append(Check(label, lhs, op, rhs, ok))
        return ok

    def undecidable(self, reason: str) -> None:
        self.undecided.append(reason)

    def absorb(self, other: "Certificate", prefix: str = "") -> None:
        """Make this certificate depend on another one's verdict."""
        v = other.verdict
        if v == INCONCLUSIVE:
            self.undecided.append(f"{prefix}{other.label} is inconclusive")
        else:
            self.transcript.append(Check(f"{prefix}{other.label} passes", Fraction(int(v == PASS)), "==",
                                         Fraction(1), v == PASS))

    @property
    def failed(self) -> list[Check]:
        return [c for c in self.transcript if not c.holds]

    @property
    def verdict(self) -> str:
        if self.failed:
            return FAIL
        if self.undecided or not self.transcript:
            return INCONCLUSIVE
        return PASS

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "verdict": self.verdict,
            "inputs": self.inputs,
            "transcript": [c.as_dict() for c in self.transcript],
            "undecided": list(self.undecided),
            "notes": list(self.notes),
        }


def recheck(cert: Certificate) -> bool:
    """Recompute every transcript inequality from its stored operands."""
    return all(_OPS[c.op](Fraction(format_rat(c.lhs)), Fraction(format_rat(c.rhs))) == c.holds
               for c in cert.transcript)


# ---------------------------------------------------------------------------
# Poincare-Miranda rectangles


@dataclass(frozen=True)
class Rectangle:
    """``t`` and ``a`` ranges of a rectangle in the plane ``b = const``."""

    t: Ival
    a: Ival
    b: Fraction


@dataclass(frozen=True)
class Monotonicity:
    """A certified sign of a partial derivative over a region.

    ``variable`` is ``"t"`` or ``"a"``; ``sign`` is +1 or -1 and applies to
    the derivative of ``component`` in that variable.
    """

    component: str
    variable: str
    sign: int
    region: Mapping[str, Ival]
    source: str
    certified: bool = True


@dataclass(frozen=True)
class EdgeEvidence:
    """A certified value of ``Fdot`` or ``Rdot`` at one point of an edge.

    ``value`` is the run's final component and ``error`` its global bound, so
    the true value lies in ``value +- error``.  ``printed_value`` and
    ``printed_error`` reproduce the published margin arithmetic.
    """

    run: str
    component: str
    claimed_sign: int
    t: Fraction
    a: Fraction
    b: Fraction
    value: Fraction
    error: Fraction
    printed_value: Fraction | None = None
    printed_error: Fraction | None = None
    monotonicity: Monotonicity | None = None

    @property
    def margin(self) -> Fraction:
        return self.claimed_sign * self.value - self.error

    @property
    def printed_margin(self) -> Fraction | None:
        if self.printed_value is None or self.printed_error is None:
            return None
        return self.claimed_sign * self.printed_value - self.printed_error


# edge name -> (component, sign, fixed variable, fixed end, free variable)
_EDGES = {
    "bottom": ("Fdot", +1, "t", "lo", "a"),
    "top": ("Fdot", -1, "t", "hi", "a"),
    "left": ("Rdot", -1, "a", "lo", "t"),
    "right": ("Rdot", +1, "a", "hi", "t"),
}


def _region_covers(region: Mapping[str, Ival], rect: Rectangle) -> bool:
    want = {"t": rect.t, "a": rect.a, "b": Ival(rect.b, rect.b)}
    return all(k in region and region[k].contains(v) for k, v in want.items())


def poincare_miranda_check(label: str, rect: Rectangle, edges: Mapping[str, EdgeEvidence]) -> Certificate:
    """Certify a common zero of ``(Fdot, Rdot)`` inside the rectangle.

    Fdot must be positive on the bottom edge (smallest t) and negative on the
    top edge, Rdot negative on the left edge (smallest a) and positive on the
    right edge.  Each edge is established at one end point plus a certified
    monotonicity that makes that point the worst case along the edge.
    """
    cert = Certificate("existence", label)
    cert.inputs = {"t": format_ival(rect.t), "a": format_ival(rect.a), "b": format_rat(rect.b)}
    for name, (comp, sign, fixed, end, free) in _EDGES.items():
        ev = edges.get(name)
        if ev is None:
            cert.undecidable(f"{name} edge: no evidence")
            continue
        tag = f"{name} edge ({ev.run})"
        cert.require(f"{tag}: component is {comp}", int(ev.component == comp), "==", 1)
        cert.require(f"{tag}: claimed sign", ev.claimed_sign, "==", sign)
        cert.require(f"{tag}: b", ev.b, "==", rect.b)
        rng = {"t": rect.t, "a": rect.a}
        pt = {"t": ev.t, "a": ev.a}
        cert.require(f"{tag}: {fixed} on the edge", pt[fixed], "==", getattr(rng[fixed], end))
        cert.require(f"{tag}: certified margin of sign {sign:+d}", ev.margin, ">", 0)
        if ev.printed_margin is not None:
            cert.require(f"{tag}: published margin", ev.printed_margin, ">", 0)

        mono = ev.monotonicity
        if mono is None or not mono.certified:
            cert.undecidable(f"{tag}: monotonicity along {free} missing")
            continue
        cert.require(f"{tag}: monotonicity is d{comp}/d{free}", int(mono.component == comp and mono.variable == free),
                     "==", 1)
        cert.require(f"{tag}: monotonicity region covers the rectangle", int(_region_covers(mono.region, rect)),
                     "==", 1)
        # sign * comp is smallest where the derivative of sign * comp says so
        increasing = mono.sign * sign > 0
        worst = rng[free].lo if increasing else rng[free].hi
        cert.require(f"{tag}: evidence point is the extreme of {free}", pt[free], "==", worst)
    cert.notes.append("edge signs are strict, so the common zero lies in the open rectangle")
    return cert


# ---------------------------------------------------------------------------
# quantitative implicit function theorem


@dataclass(frozen=True)
class IFTParams:
    delta1: Fraction
    delta1_t: Fraction
    eps1: Fraction
    delta2: Fraction
    delta2_t: Fraction
    eps2: Fraction
    eps1_t: Fraction
    eps2_t: Fraction
    mu1: Fraction
    mu2: Fraction
    mu3: Fraction = Fraction(0)

    @classmethod
    def published(cls, pc: ProofConstants) -> "IFTParams":
        return cls(
            delta1=Fraction(1017, 1250),
            delta1_t=Fraction(8159, 10000),
            eps1=Fraction(2677, 5000),
            delta2=Fraction(16181, 10000),
            delta2_t=Fraction(8359, 5000),
            eps2=Fraction(4549, 5000),
            eps1_t=pc.t_window,
            eps2_t=pc.a_window,
            mu1=pc.dt,
            mu2=pc.da,
        )

    @property
    def denominator(self) -> Fraction:
        return self.delta1 * self.delta2 - self.eps1 * self.eps2

    @property
    def m1(self) -> Fraction:
        return self.eps1 * (self.delta2_t + self.eps2) / self.denominator

    @property
    def m2(self) -> Fraction:
        return self.eps2 * (self.delta1_t + self.eps1) / self.denominator

    @property
    def rho1(self) -> Fraction:
        return (self.eps1_t - self.mu1) / self.m1 - self.mu3

    @property
    def rho2(self) -> Fraction:
        return (self.eps2_t - self.mu2) / self.m2 - self.mu3

    def as_dict(self) -> dict[str, str]:
        keys = ("delta1", "delta1_t", "eps1", "delta2", "delta2_t", "eps2", "eps1_t", "eps2_t", "mu1", "mu2", "mu3")
        return {k: format_rat(getattr(self, k)) for k in keys}


def _mig(iv: Ival) -> Fraction:
    """Smallest absolute value on the interval."""
    if iv.contains_zero():
        return Fraction(0)
    return min(abs(iv.lo), abs(iv.hi))


def ift_region_check(label: str, params: IFTParams, sb: Fraction, *,
                     ranges: Mapping[str, Ival] | None = None,
                     region: Mapping[str, Ival] | None = None,
                     center: Mapping[str, Fraction] | None = None,
                     rho: Fraction | None = None) -> Certificate:
    """Check the hypotheses and conclusion of the quantitative IFT.

    ``ranges`` holds certified enclosures of ``F_ddot, F_dot_a, F_dot_b,
    R_ddot, R_dot_a, R_dot_b`` over ``region``; with ``center`` and ``rho`` the
    region is checked to cover the box of the theorem.  Without ranges only
    the arithmetic part (m1, m2, rho1, rho2 and sb < rho_i) is checked and the
    certificate is inconclusive.
    """
    p = params
    cert = Certificate("uniqueness", label)
    cert.inputs = {"params": p.as_dict(), "sb": format_rat(sb)}
    if not cert.require("delta1 delta2 > eps1 eps2", p.delta1 * p.delta2, ">", p.eps1 * p.eps2):
        return cert
    for name in ("mu1", "mu2", "eps1", "eps2", "delta1", "delta2", "eps1_t", "eps2_t"):
        cert.require(f"{name} > 0", getattr(p, name), ">", 0)
    cert.require("mu3 >= 0", p.mu3, ">=", 0)
    cert.require("mu1 < eps1", p.mu1, "<", p.eps1)
    cert.require("eps1 < delta1", p.eps1, "<", p.delta1)
    cert.require("mu2 < eps2", p.mu2, "<", p.eps2)
    cert.require("eps2 < delta2", p.eps2, "<", p.delta2)
    cert.require("delta1 < delta1~", p.delta1, "<", p.delta1_t)
    cert.require("delta2 < delta2~", p.delta2, "<", p.delta2_t)
    m1, m2, r1, r2 = p.m1, p.m2, p.rho1, p.rho2
    cert.inputs.update(m1=format_rat(m1), m2=format_rat(m2), rho1=format_rat(r1), rho2=format_rat(r2))
    cert.require("rho1 > 0", r1, ">", 0)
    cert.require("rho2 > 0", r2, ">", 0)
    cert.require("sb < rho1", sb, "<", r1)
    cert.require("sb < rho2", sb, "<", r2)
    if rho is not None:
        cert.inputs["rho"] = format_rat(rho)
        cert.require("sb < rho", sb, "<", rho)
        cert.require("rho < rho1", rho, "<", r1)
        cert.require("rho < rho2", rho, "<", r2)

    if ranges is None:
        cert.undecidable("no partial-derivative enclosures supplied")
        return cert
    cert.inputs["ranges"] = {k: format_ival(v) for k, v in sorted(ranges.items())}
    r = ranges
    cert.require("delta1 < |F_ddot|", p.delta1, "<", _mig(r["F_ddot"]))
    cert.require("|F_ddot| < delta1~", r["F_ddot"].mag, "<", p.delta1_t)
    cert.require("|F_dot_a| < eps1", r["F_dot_a"].mag, "<", p.eps1)
    cert.require("|F_dot_b| < eps1", r["F_dot_b"].mag, "<", p.eps1)
    cert.require("delta2 < |R_dot_a|", p.delta2, "<", _mig(r["R_dot_a"]))
    cert.require("|R_dot_a| < delta2~", r["R_dot_a"].mag, "<", p.delta2_t)
    cert.require("|R_ddot| < eps2", r["R_ddot"].mag, "<", p.eps2)
    cert.require("|R_dot_b| < eps2", r["R_dot_b"].mag, "<", p.eps2)

    if region is None or center is None or rho is None:
        cert.undecidable("region of the derivative enclosures not supplied")
        return cert
    cert.inputs["region"] = {k: format_ival(v) for k, v in sorted(region.items())}
    half = {"t": p.eps1_t, "a": p.eps2_t, "b": rho}
    for k, w in half.items():
        c = center[k]
        cert.require(f"region covers {k} - {k}0 >= -{format_rat(w)}", region[k].lo, "<=", c - w)
        cert.require(f"region covers {k} - {k}0 <= {format_rat(w)}", region[k].hi, ">=", c + w)
    return cert


# ---------------------------------------------------------------------------
# Theta against 7 pi / 18


def seven_pi_over_18(width: Fraction = Fraction(1, 10**20)) -> Ival:
    pi = pi_enclosure(width)
    return Ival(pi.lo * 7 / 18, pi.hi * 7 / 18)


def theta_comparison(label: str, center: Fraction, error: Fraction, theta_a_bound: Fraction,
                     theta_dot_bound: Fraction, da_span: Fraction, dt_span: Fraction, side: str, *,
                     pi_width: Fraction = Fraction(1, 10**20)) -> Certificate:
    """Certify ``Theta < 7 pi/18`` (side "below") or ``> 7 pi/18`` ("above") on a rectangle.

    The rectangle has half-widths ``da_span`` in a and ``dt_span`` in t around
    a point where Theta lies in ``center +- error``.
    """
    if side not in ("below", "above"):
        raise ValueError("side must be 'below' or 'above'")
    cert = Certificate("theta_comparison", label)
    spread = error + theta_a_bound * da_span + theta_dot_bound * dt_span
    target = seven_pi_over_18(pi_width)
    cert.inputs = {
        "center": format_rat(center), "error": format_rat(error), "theta_a_bound": format_rat(theta_a_bound),
        "theta_dot_bound": format_rat(theta_dot_bound), "da_span": format_rat(da_span),
        "dt_span": format_rat(dt_span), "side": side, "seven_pi_over_18": format_ival(target),
    }
    for name, v in (("error", error), ("theta_a_bound", theta_a_bound), ("theta_dot_bound", theta_dot_bound),
                    ("da_span", da_span), ("dt_span", dt_span)):
        cert.require(f"{name} >= 0", v, ">=", 0)
    if side == "below":
        worst = center + spread
        if worst < target.lo:
            cert.require("Theta upper bound < 7pi/18 (lower end)", worst, "<", target.lo)
        elif worst > target.hi:
            cert.require("Theta upper bound < 7pi/18 (upper end)", worst, "<", target.hi)
        else:
            cert.undecidable("pi enclosure too wide to decide")
    else:
        worst = center - spread
        if worst > target.hi:
            cert.require("Theta lower bound > 7pi/18 (upper end)", worst, ">", target.hi)
        elif worst < target.lo:
            cert.require("Theta lower bound > 7pi/18 (lower end)", worst, ">", target.lo)
        else:
            cert.undecidable("pi enclosure too wide to decide")
    cert.inputs["worst_case"] = format_rat(worst)
    return cert


# ---------------------------------------------------------------------------
# assembly


def assemble_periodicity(pc: ProofConstants, l1: Certificate, l2: Certificate, l3: Certificate,
                         l4: Certificate, theta_below: Certificate, theta_above: Certificate,
                         rect2: Rectangle | None = None, rect3: Rectangle | None = None) -> Certificate:
    """Fold the six certificates into the periodicity statement.

    l4 makes the zero set of ``(Fdot, Rdot)`` in the window box a single curve
    meeting every slice ``b = const`` once.  l1 anchors it, l2 and l3 put
    points of the curve on the slices ``b0 -+ sb`` with Theta below and above
    7 pi/18, so Theta equals 7 pi/18 at some point ``(t, a, b)`` of the curve.
    There Fdot = Rdot = 0 gives reduced period 4t, over which Theta advances
    4 * 7 pi/18 = 14 pi/9; nine of these are seven full turns.
    """
    cert = Certificate("periodicity", "periodic orbit")
    for c in (l1, l2, l3, l4, theta_below, theta_above):
        cert.absorb(c)
    for rect, name, bval in ((rect2, "lemma 2", pc.b0 - pc.sb), (rect3, "lemma 3", pc.b0 + pc.sb)):
        if rect is None:
            continue
        cert.require(f"{name} rectangle: b", rect.b, "==", bval)
        cert.require(f"{name} rectangle inside the t window (low)", pc.t0 - pc.t_window, "<", rect.t.lo)
        cert.require(f"{name} rectangle inside the t window (high)", rect.t.hi, "<", pc.t0 + pc.t_window)
        cert.require(f"{name} rectangle inside the a window (low)", pc.a0 - pc.a_window, "<", rect.a.lo)
        cert.require(f"{name} rectangle inside the a window (high)", rect.a.hi, "<", pc.a0 + pc.a_window)
    quarter = Fraction(7, 18)               # Theta at the quarter period, in units of pi
    per_reduced = 4 * quarter               # rotation over one reduced period
    cycles = 9
    cert.require("rotation over 9 reduced periods (units of 2 pi)", cycles * per_reduced / 2, "==", 7)
    cert.require("fewer reduced periods do not close", min(
        (q for q in range(1, cycles + 1) if (q * per_reduced / 2).denominator == 1), default=0), "==", cycles)
    cert.inputs = {
        "period": "36*tbar",
        "reduced_period": "4*tbar",
        "cycles": cycles,
        "rotations": 7,
        "Theta(tbar)": "7*pi/18",
        "window_t": f"|tbar - t0| < {format_rat(pc.t_window)}",
        "window_a": f"|abar - a0| < {format_rat(pc.a_window)}",
        "window_b": f"|bbar - b0| <= {format_rat(pc.sb)}",
        "stated_window_a": f"|abar - a0| < {format_rat(pc.sa + pc.da)} (statement of the main theorem)",
    }
    cert.notes.append("the a-window certified is the wider uniqueness window; the main theorem states sa + da")
    return cert
