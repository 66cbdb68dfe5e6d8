"""Certified range bounds by interval branch-and-bound.

The lower and upper ends of a claimed range are handled separately by a
best-first search: the box with the weakest enclosure is split until every
remaining box is inside the claim (certified), a point evaluation lands
outside it (refuted, with an exact witness), or the leaf budget runs out
(inconclusive).  Splits go to the coordinate whose collapse to its midpoint
narrows the enclosure most.

Composite dictionary entries are first bounded hierarchically, with every
referenced entry replaced by its own certified range, then, if that is too
loose, through their full expansion.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .exact import DomainError, Ival, fixed_class, format_ival, format_rat
from .fields import (
    A0,
    DOMAIN,
    FIELDS,
    PHI,
    PHI_BOUNDS,
    PHI_VARIABLES,
    Const,
    EvalContext,
    Expr,
    Phi,
    evaluate,
    expand,
    matrix_field,
)
from .integrator import HypothesisConstants

DEFAULT_BUDGET = 100_000
_KIND = fixed_class(128)
_POINT_SQRT = Fraction(1, 10**40)

CERTIFIED = "certified"
INCONCLUSIVE = "inconclusive"
REFUTED = "refuted"


def direct_variables(e: Expr, override: Mapping[int, object] = ()) -> set[str]:
    """Coordinates an expression reads, not counting overridden entries."""
    out: set[str] = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, Phi):
            if x.index in override:
                continue
            out.update(PHI_VARIABLES[x.index])
            continue
        if hasattr(x, "name"):
            if x.name != "a0":
                out.add(x.name)
        elif type(x).__name__ == "SPow":
            out.update(("x1", "x3"))
        stack.extend(x.children())
    return out


@dataclass(frozen=True)
class BoundTask:
    expression: Expr
    box: Mapping[str, Ival]
    target: Ival | None = None
    budget: int = DEFAULT_BUDGET
    label: str = ""
    override: Mapping[int, Ival] = field(default_factory=dict)

    def __post_init__(self):
        if self.target is not None and self.target.lo > self.target.hi:
            raise ValueError("target must satisfy lo <= hi")


@dataclass
class SideResult:
    status: str
    bound: Fraction
    leaves: int
    witness: dict[str, Fraction] | None = None
    witness_value: Ival | None = None


@dataclass
class BoundResult:
    task: BoundTask
    range: Ival
    status: str
    lower: SideResult
    upper: SideResult
    note: str = ""

    @property
    def leaves(self) -> int:
        return self.lower.leaves + self.upper.leaves

    def summary(self) -> dict:
        t = self.task
        d = {
            "label": t.label,
            "status": self.status,
            "certified_range": format_ival(self.range),
            "claimed": format_ival(t.target) if t.target is not None else None,
            "leaves": self.leaves,
        }
        for side, res in (("lower", self.lower), ("upper", self.upper)):
            if res.witness is not None:
                d[f"{side}_witness"] = {k: format_rat(v) for k, v in res.witness.items()}
                d[f"{side}_witness_value"] = format_ival(res.witness_value)
        if self.note:
            d["note"] = self.note
        return d


class _Evaluator:
    def __init__(self, expr: Expr, names: Sequence[str], override: Mapping[int, Ival]):
        self.expr = expr
        self.names = list(names)
        self.override_fixed = {i: _KIND.from_ival(v) for i, v in override.items()}
        self.override = dict(override)

    def box(self, box: Sequence[Ival]):
        vals = {n: _KIND.from_ival(iv) for n, iv in zip(self.names, box)}
        vals.setdefault("a", _KIND.from_rat(A0))
        ctx = EvalContext(vals, _KIND, phi_override=self.override_fixed)
        return evaluate(self.expr, ctx)

    def point_exact(self, pt: Sequence[Fraction]) -> Ival:
        vals = {n: Ival(v, v) for n, v in zip(self.names, pt)}
        vals.setdefault("a", Ival(A0, A0))
        ctx = EvalContext(vals, Ival, sqrt_width=_POINT_SQRT, phi_override=self.override)
        return evaluate(self.expr, ctx)

    def point_fixed(self, pt: Sequence[Fraction]):
        vals = {n: _KIND.from_rat(v) for n, v in zip(self.names, pt)}
        vals.setdefault("a", _KIND.from_rat(A0))
        ctx = EvalContext(vals, _KIND, phi_override=self.override_fixed)
        return evaluate(self.expr, ctx)


_DEGREE_CACHE: dict[tuple[int, str], int] = {}


def degree_in(e: Expr, v: str) -> int:
    """Polynomial degree of ``e`` in coordinate ``v``, capped at 2 (= non-linear)."""
    t = type(e).__name__
    if t == "Const":
        return 0
    if t == "Var":
        return 1 if e.name == v else 0
    if t == "SPow":
        return 2 if v in ("x1", "x3") else 0
    if t == "Phi":
        key = (e.index, v)
        d = _DEGREE_CACHE.get(key)
        if d is None:
            d = degree_in(PHI[e.index], v)
            _DEGREE_CACHE[key] = d
        return d
    if t in ("Add", "Sub"):
        return max(degree_in(e.left, v), degree_in(e.right, v))
    if t == "Neg":
        return degree_in(e.arg, v)
    if t == "Mul":
        return min(2, degree_in(e.left, v) + degree_in(e.right, v))
    if t == "Div":
        if degree_in(e.right, v):
            return 2
        return degree_in(e.left, v)
    if t == "Pow":
        return min(2, degree_in(e.base, v) * e.n) if e.n >= 0 else (2 if degree_in(e.base, v) else 0)
    raise TypeError(f"unknown node {e!r}")


def linear_coordinates(e: Expr, names: Iterable[str], override: Mapping[int, object] = ()) -> list[str]:
    """Coordinates in which ``e`` is affine.  Its extrema sit at their endpoints."""
    if override:
        return []
    return [n for n in names if degree_in(e, n) == 1]


def _corners(root: list[Ival], idx: list[int]) -> list[list[Ival]]:
    boxes = [root]
    for i in idx:
        nxt = []
        for b in boxes:
            for end in (b[i].lo, b[i].hi):
                c = list(b)
                c[i] = Ival(end, end)
                nxt.append(c)
        boxes = nxt
    return boxes


def _to_rat_lo(v) -> Fraction:
    return Fraction(v.lo, 1 << v.PREC)


def _to_rat_hi(v) -> Fraction:
    return Fraction(v.hi, 1 << v.PREC)


def _split_choice(ev: _Evaluator, box: list[Ival], sign: int) -> int:
    """Coordinate whose collapse improves the relevant end the most."""
    best, best_gain = 0, None
    base = ev.box(box)
    base_end = base.lo if sign > 0 else -base.hi
    for i, iv in enumerate(box):
        if iv.lo == iv.hi:
            continue
        trial = list(box)
        m = iv.mid
        trial[i] = Ival(m, m)
        try:
            e = ev.box(trial)
        except DomainError:
            return i
        end = e.lo if sign > 0 else -e.hi
        gain = end - base_end
        if best_gain is None or gain > best_gain:
            best, best_gain = i, gain
    return best


def _side(ev: _Evaluator, roots: list[list[Ival]], sign: int, claim: Fraction | None, budget: int,
          tol: Fraction) -> SideResult:
    """Best-first search on one end; ``sign`` +1 bounds the minimum, -1 the maximum.

    Working with ``g = sign * f`` everything becomes a minimisation.
    """
    def enc_low(b):
        if all(iv.lo == iv.hi for iv in b):
            v = ev.point_exact([iv.lo for iv in b])
            return v.lo if sign > 0 else -v.hi
        v = ev.box(b)
        return _to_rat_lo(v) if sign > 0 else -_to_rat_hi(v)

    goal = None if claim is None else sign * claim
    heap: list = []
    counter = 0
    for b in roots:
        try:
            lb0 = enc_low(b)
        except DomainError:
            return SideResult(INCONCLUSIVE, Fraction(0), 0)
        counter += 1
        heapq.heappush(heap, (lb0, counter, b))
    incumbent = None
    leaves = len(roots)
    while heap:
        lb, _, box = heap[0]
        if goal is not None and lb >= goal:
            return SideResult(CERTIFIED, sign * lb, leaves)
        mid = [iv.mid for iv in box]
        try:
            pv = ev.point_fixed(mid)
            val = _to_rat_hi(pv) if sign > 0 else -_to_rat_lo(pv)
        except DomainError:
            val = None
        if val is not None and (incumbent is None or val < incumbent):
            incumbent = val
            if goal is not None and val < goal:
                exact = ev.point_exact(mid)
                ex_hi = exact.hi if sign > 0 else -exact.lo
                if ex_hi < goal:
                    names = ev.names
                    return SideResult(REFUTED, sign * lb, leaves,
                                      dict(zip(names, mid)), exact)
        if goal is None and incumbent is not None and incumbent - lb <= tol:
            return SideResult(CERTIFIED, sign * lb, leaves)
        if leaves >= budget:
            return SideResult(INCONCLUSIVE, sign * lb, leaves)
        heapq.heappop(heap)
        i = _split_choice(ev, box, sign)
        lo_half, hi_half = box[i].bisect()
        for half in (lo_half, hi_half):
            child = list(box)
            child[i] = half
            try:
                clb = enc_low(child)
            except DomainError:
                clb = None
            if clb is None:
                return SideResult(INCONCLUSIVE, sign * lb, leaves)
            counter += 1
            heapq.heappush(heap, (clb, counter, child))
        leaves += 1
    return SideResult(CERTIFIED, sign * lb, leaves)


def optimize_over_box(task: BoundTask, *, tol: Fraction = Fraction(1, 10**7)) -> BoundResult:
    """Certify ``task.target`` (or, without target, enclose the range within tol)."""
    expr = task.expression
    if isinstance(expr, Const):
        v = Ival(expr.value, expr.value)
        ok = task.target is None or task.target.contains(v)
        side = SideResult(CERTIFIED if ok else REFUTED, expr.value, 0)
        return BoundResult(task, v, CERTIFIED if ok else REFUTED, side, side)
    names = sorted(direct_variables(expr, task.override), key=_order)
    for n in names:
        if n not in task.box:
            raise KeyError(f"box does not bound coordinate {n}")
    root = [task.box[n] for n in names]
    ev = _Evaluator(expr, names, task.override)
    lin = linear_coordinates(expr, names, task.override)
    roots = _corners(root, [names.index(n) for n in lin]) if len(lin) <= 10 else [root]
    t = task.target
    try:
        lower = _side(ev, roots, +1, None if t is None else t.lo, task.budget, tol)
        upper = _side(ev, roots, -1, None if t is None else t.hi, task.budget, tol)
    except DomainError as exc:
        s = SideResult(INCONCLUSIVE, Fraction(0), 0)
        return BoundResult(task, Ival(0, 0), INCONCLUSIVE, s, s, note=f"domain error: {exc}")
    statuses = {lower.status, upper.status}
    status = REFUTED if REFUTED in statuses else (CERTIFIED if statuses == {CERTIFIED} else INCONCLUSIVE)
    rng = Ival(lower.bound, upper.bound) if lower.bound <= upper.bound else Ival(upper.bound, lower.bound)
    return BoundResult(task, rng, status, lower, upper)


def _order(n: str):
    return (0, int(n[1:]), "") if n[:1] == "x" and n[1:].isdigit() else (1, 0, n)


def enclose(expr: Expr, box: Mapping[str, Ival], *, budget: int = DEFAULT_BUDGET,
            tol: Fraction = Fraction(1, 10**7), override: Mapping[int, Ival] = ()) -> BoundResult:
    """Certified enclosure of the range of ``expr`` over ``box``."""
    return optimize_over_box(BoundTask(expr, box, None, budget, override=dict(override)), tol=tol)


# ---------------------------------------------------------------------------
# the dictionary table


@dataclass
class PhiCertificate:
    index: int
    claimed: Ival
    status: str
    enclosure: Ival
    method: str
    result: BoundResult
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        d = {"phi": self.index, "method": self.method, **self.result.summary()}
        d["status"] = self.status
        d["claimed"] = format_ival(self.claimed)
        d["certified_range"] = format_ival(self.enclosure)
        d.update(self.extra)
        return d


def _claimed(i: int) -> Ival:
    lo, hi = PHI_BOUNDS[i]
    return Ival(lo, hi)


def certify_phi(i: int, known: Mapping[int, Ival], *, box: Mapping[str, Ival] | None = None,
                budget: int = DEFAULT_BUDGET) -> PhiCertificate:
    """Check the printed bound pair of entry ``i`` and return a certified enclosure.

    ``known`` holds certified enclosures of lower-index entries, used for the
    hierarchical attempt.  When the claim is refuted a separate range
    enclosure is computed, so downstream constants always rest on certified
    data.
    """
    box = dict(DOMAIN) if box is None else dict(box)
    claim = _claimed(i)
    expr = PHI[i]
    refs = expr.phi_refs()
    attempts: list[tuple[str, BoundResult]] = []
    if refs and all(r in known for r in refs):
        override = {r: known[r] for r in refs}
        res = optimize_over_box(BoundTask(expr, box, claim, budget, f"phi{i}", override))
        attempts.append(("hierarchical", res))
        if res.status == CERTIFIED:
            return PhiCertificate(i, claim, CERTIFIED, res.range, "hierarchical", res)
    full = expand(expr) if refs else expr
    res = optimize_over_box(BoundTask(full, box, claim, budget, f"phi{i}"))
    attempts.append(("direct", res))
    if res.status == CERTIFIED:
        return PhiCertificate(i, claim, CERTIFIED, res.range, "direct", res)
    # claim not certified: compute an honest enclosure for downstream use
    rng = enclose(full, box, budget=budget, tol=Fraction(1, 10**5))
    status = REFUTED if any(r.status == REFUTED for _, r in attempts) else INCONCLUSIVE
    enc = rng.range
    if rng.status != CERTIFIED:
        # a budget-limited search still gives a sound (if loose) enclosure
        status = status if status == REFUTED else INCONCLUSIVE
    method = "direct"
    witness = next((r for _, r in attempts if r.status == REFUTED), res)
    extra = {"honest_range_status": rng.status}
    return PhiCertificate(i, claim, status, enc, method, witness, extra)


def certify_table(indices: Iterable[int] | None = None, *, budget: int = DEFAULT_BUDGET,
                  box: Mapping[str, Ival] | None = None) -> dict[int, PhiCertificate]:
    """Certify the listed entries (all 58 by default) in dependency order."""
    wanted = set(PHI) if indices is None else set(indices)
    needed: set[int] = set()

    def need(i):
        if i in needed:
            return
        needed.add(i)
        for r in PHI[i].phi_refs():
            need(r)

    for i in wanted:
        need(i)
    known: dict[int, Ival] = {}
    out: dict[int, PhiCertificate] = {}
    for i in sorted(needed):
        cert = certify_phi(i, known, box=box, budget=budget)
        known[i] = cert.enclosure
        out[i] = cert
    return {i: c for i, c in out.items() if i in wanted} if indices is not None else out


# ---------------------------------------------------------------------------
# hypothesis constants of the error theorem


PUBLISHED_CONSTANTS: dict[str, HypothesisConstants] = {
    "W": HypothesisConstants(
        M0=Fraction(3, 2),
        M=(Fraction(19453263, 25000000), Fraction(493485626283, 500000000000), Fraction(14977713, 20000000),
           Fraction(1334089805457, 10**12), Fraction(5396988231, 125000000000)),
        K=(Fraction(25282, 15625), Fraction(260901, 200000)),
    ),
    "G": HypothesisConstants(
        M0=Fraction(42, 25),
        M=(Fraction(778131, 10**6), Fraction(246743, 250000), Fraction(374443, 500000), Fraction(133409, 100000),
           Fraction(1345793, 10**6), Fraction(2429239, 10**6), Fraction(833241, 500000),
           Fraction(3298559, 10**6), Fraction(182893, 10**6)),
        K=(Fraction(305541, 125000), Fraction(249309, 100000)),
    ),
    "U": HypothesisConstants(
        M0=Fraction(3, 2),
        M=(Fraction(778131, 10**6), Fraction(246743, 250000), Fraction(374443, 500000), Fraction(133409, 100000),
           Fraction(765259, 500000), Fraction(533571, 200000), Fraction(1790753, 10**6), Fraction(711267, 200000)),
        K=(Fraction(1226931, 500000), Fraction(2557349, 10**6)),
    ),
}


def field_box(name: str) -> dict[str, Ival]:
    spec = FIELDS[name]
    box = {n: DOMAIN[n] for n in spec.box_names}
    box["a"] = DOMAIN["a"]
    return box


@dataclass
class ConstantCheck:
    name: str
    claimed: Fraction
    status: str
    certified_value: Fraction
    detail: str = ""

    def summary(self) -> dict:
        return {
            "constant": self.name,
            "claimed": format_rat(self.claimed),
            "status": self.status,
            "certified_value": format_rat(self.certified_value),
            "detail": self.detail,
        }


@dataclass
class HypothesisReport:
    field: str
    checks: list[ConstantCheck]
    constants: HypothesisConstants

    @property
    def claimed_all_certified(self) -> bool:
        return all(c.status == CERTIFIED for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if c.status != CERTIFIED]

    def summary(self) -> dict:
        return {
            "field": self.field,
            "claimed_all_certified": self.claimed_all_certified,
            "failures": self.failures,
            "constants_used": self.constants.as_dict(),
            "checks": [c.summary() for c in self.checks],
        }


def _round_up(x: Fraction, digits: int = 6) -> Fraction:
    s = 10**digits
    return Fraction(-((-x.numerator * s) // x.denominator), s)


def _abs_bound(expr: Expr, box, claim: Fraction, budget: int, known: Mapping[int, Ival],
               name: str) -> ConstantCheck:
    if isinstance(expr, Const):
        v = abs(expr.value)
        return ConstantCheck(name, claim, CERTIFIED if v <= claim else REFUTED, v)
    target = Ival(-claim, claim)
    refs = expr.phi_refs()
    override = {r: known[r] for r in refs if r in known} if known else {}
    res = optimize_over_box(BoundTask(expr, box, target, budget, name, override))
    if res.status == CERTIFIED:
        return ConstantCheck(name, claim, CERTIFIED, claim, "hierarchical" if override else "direct")
    if override:
        res2 = optimize_over_box(BoundTask(expr, box, target, budget, name))
        if res2.status == CERTIFIED:
            return ConstantCheck(name, claim, CERTIFIED, claim, "direct")
        if res2.status == REFUTED:
            res = res2
    rng = enclose(expr, box, budget=budget, tol=Fraction(1, 10**6))
    own = _round_up(rng.range.mag)
    return ConstantCheck(name, claim, res.status, own, "claim not certified; own bound from range enclosure")


def certify_hypotheses(field_name: str, *, claimed: HypothesisConstants | None = None,
                       known: Mapping[int, Ival] | None = None,
                       budget: int = DEFAULT_BUDGET) -> HypothesisReport:
    """Certify M0, M_j, K0 and K1 for one field over its bound box.

    ``known`` supplies certified dictionary enclosures (from
    :func:`certify_table`); they serve the hierarchical attempts and the
    Frobenius bounds.  The returned constants are the claimed values where
    certified and the artifact's own certified bounds elsewhere.
    """
    spec = FIELDS[field_name]
    claimed = claimed or PUBLISHED_CONSTANTS[field_name]
    known = dict(known or {})
    box = field_box(field_name)
    checks: list[ConstantCheck] = []

    m0_checks = [_abs_bound(e, box, claimed.M0, budget, known, f"M0[{j + 1}]")
                 for j, e in enumerate(spec.components)]
    m0_ok = all(c.status == CERTIFIED for c in m0_checks)
    m0_val = claimed.M0 if m0_ok else max(c.certified_value for c in m0_checks)
    checks.append(ConstantCheck("M0", claimed.M0, CERTIFIED if m0_ok else INCONCLUSIVE, m0_val,
                                "; ".join(f"{c.name}:{c.status}" for c in m0_checks if c.status != CERTIFIED)))

    Ms = []
    for j, (e, Mj) in enumerate(zip(spec.second, claimed.M)):
        c = _abs_bound(e, box, Mj, budget, known, f"M{j + 1}")
        checks.append(c)
        Ms.append(c.certified_value)

    Ks = []
    for j, (mname, Kj) in enumerate(((f"D{field_name}", claimed.K[0]), (f"D{field_name}1", claimed.K[1]))):
        c = frobenius_check(mname, box, Kj, known, budget)
        checks.append(ConstantCheck(f"K{j}", Kj, c[0], c[1], c[2]))
        Ks.append(c[1])
    used = HypothesisConstants(M0=m0_val, M=tuple(Ms), K=tuple(Ks))
    return HypothesisReport(field_name, checks, used)


def frobenius_check(matrix: str, box: Mapping[str, Ival], claim: Fraction,
                    known: Mapping[int, Ival], budget: int) -> tuple[str, Fraction, str]:
    """Certify ``|D| <= claim`` over the box.

    First from per-entry enclosures; if that is too coarse, by
    branch-and-bound on the sum of squared entries.
    """
    from .fields import frobenius_bound

    M = matrix_field(matrix)
    per_entry = frobenius_bound(M, box, entry_bounds=known)
    if per_entry <= claim:
        return CERTIFIED, claim, f"entrywise bound {format_rat(per_entry)}"
    total: Expr | None = None
    for row in M:
        for m in row:
            if m.is_zero():
                continue
            total = m * m if total is None else total + m * m
    res = optimize_over_box(BoundTask(total, box, Ival(Fraction(0), claim * claim), budget, f"|{matrix}|^2"))
    if res.status == CERTIFIED:
        return CERTIFIED, claim, "sum of squares by branch-and-bound"
    return res.status, per_entry, f"claim not certified; entrywise bound {format_rat(per_entry)} used"


# ---------------------------------------------------------------------------
# second-derivative corollary


DDOT_CLAIMS = {
    "Theta_dot": (Fraction(120689, 250000), Fraction(483453, 10**6), 3),
    "F_ddot": (Fraction(-163169, 200000), Fraction(-813693, 10**6), 1),
    "R_ddot": (Fraction(4593, 12500), Fraction(18653, 50000), 2),
}


def certify_second_derivative_bounds(eps: Fraction, center_F: Fraction, center_R: Fraction, *,
                                     budget: int = DEFAULT_BUDGET):
    """Ranges of Theta', F'' and R'' over ``|x1 - cF| <= eps``, ``|x3 - cR| <= eps``, a in I13.

    Returns a list of (name, claimed, BoundResult).  The claims are strict, so
    certification demands the enclosure to lie strictly inside.
    """
    box = {
        "x1": Ival(center_F - eps, center_F + eps),
        "x3": Ival(center_R - eps, center_R + eps),
        "a": DOMAIN["a"],
    }
    out = []
    for name, (lo, hi, idx) in DDOT_CLAIMS.items():
        claim = Ival(min(lo, hi), max(lo, hi))
        res = optimize_over_box(BoundTask(PHI[idx], box, claim, budget, name))
        strict = res.status == CERTIFIED and claim.lo < res.range.lo and res.range.hi < claim.hi
        if res.status == CERTIFIED and not strict:
            res.status = INCONCLUSIVE
            res.note = "enclosure touches the claimed endpoint"
        out.append((name, claim, res))
    return out
