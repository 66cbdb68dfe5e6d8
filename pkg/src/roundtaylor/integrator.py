"""Round Taylor integration with certified grid rounding and error bounds.

Each step computes an enclosure of ``y = z + f(z) h + F1(z) h**2 / 2`` and
replaces it by a grid rational ``z'`` with ``|z' - y| <= H``.  The rounding
rule is the floor rule whenever the enclosure decides ``floor(y / H)``; when
it cannot (the enclosure straddles a grid point even at the highest
precision) the nearest grid point with a containment certificate is used
and the step is counted as a fallback.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exact import (
    CertificationError,
    DomainError,
    Fixed,
    GridSpec,
    Ival,
    exp_upper_bound,
    fixed_class,
    floor_to_grid,
    format_rat,
    nearest_grid_in,
    sqrt_enclosure,
)
from .fields import DOMAIN, A0, EvalContext, Expr, FieldSpec, SPow, evaluate

PRECISION_LADDER = (192, 320, 640)


# ---------------------------------------------------------------------------
# constants of the error theorem


@dataclass(frozen=True)
class HypothesisConstants:
    """Bounds feeding the global error estimate.

    ``M0`` bounds every component of the field, ``M`` the components of the
    order-m derivative field, ``K`` the Frobenius norms of ``Df, DF1, ...``.
    """

    M0: Fraction
    M: tuple[Fraction, ...]
    K: tuple[Fraction, ...]

    @property
    def K0(self) -> Fraction:
        return self.K[0]

    @property
    def K1(self) -> Fraction:
        return self.K[1] if len(self.K) > 1 else Fraction(0)

    @property
    def M_rss(self) -> Fraction:
        """Rational upper bound of ``sqrt(sum M_i**2)`` (exact when possible)."""
        sq = sum((m * m for m in self.M), Fraction(0))
        return sqrt_enclosure(sq, Fraction(1, 10**30)).hi

    def L(self, h: Fraction) -> Fraction:
        return sum((Kj * h**j / math.factorial(j + 1) for j, Kj in enumerate(self.K)), Fraction(0))

    def as_dict(self) -> dict:
        return {
            "M0": format_rat(self.M0),
            "M": [format_rat(m) for m in self.M],
            "K": [format_rat(k) for k in self.K],
        }


def _exp_upper(x: Fraction) -> Fraction:
    """Upper bound of ``e**x``; ``x`` is first rounded up to a 10**-30 grid."""
    if x == 0:
        return Fraction(1)
    scale = 10**30
    xr = Fraction(-((-x.numerator * scale) // x.denominator), scale)
    terms = max(40, int(3 * xr) + 20)
    return exp_upper_bound(xr, terms)


def global_error_bound(c: HypothesisConstants, h: Fraction, H: Fraction, k: int, m: int) -> Fraction:
    """Rational upper bound of the accumulated error after ``k`` steps."""
    h, H = Fraction(h), Fraction(H)
    if h <= 0 or H < 0 or k < 0:
        raise ValueError("need h > 0, H >= 0 and k >= 0")
    if k == 0:
        return Fraction(0)
    L = c.L(h)
    if L <= 0:
        raise DomainError("L must be positive")
    growth = _exp_upper(L * k * h) - 1
    return (c.M_rss * h**m / math.factorial(m + 1) + H / h) / L * growth


def comparison_bound(K: Fraction, eps_f: Fraction, d0: Fraction, dt_abs: Fraction) -> Fraction:
    """Upper bound of ``d0 e**(K dt) + eps/K (e**(K dt) - 1)`` for nearby fields."""
    K, eps_f, d0, dt_abs = map(Fraction, (K, eps_f, d0, dt_abs))
    if K <= 0:
        raise DomainError("K must be positive")
    if eps_f < 0 or d0 < 0 or dt_abs < 0:
        raise ValueError("eps_f, d0 and dt_abs must be non-negative")
    e = _exp_upper(K * dt_abs)
    return d0 * e + eps_f / K * (e - 1)


# ---------------------------------------------------------------------------
# run configuration and record


@dataclass(frozen=True)
class RunConfig:
    field: FieldSpec
    a: Fraction
    initial_state: tuple[Fraction, ...]
    h: Fraction
    grid: GridSpec
    k: int
    order: int = 2
    box: tuple[Ival, ...] | None = None
    epsilon: Fraction = Fraction(1, 1000)
    constants: HypothesisConstants | None = None
    a0: Fraction = A0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("step h must be positive")
        if self.k < 0:
            raise ValueError("step count must be non-negative")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if len(self.initial_state) != self.field.dimension:
            raise ValueError("initial state has the wrong dimension")

    def containment_box(self) -> tuple[Ival, ...]:
        return self.box if self.box is not None else tuple(self.field.containment_box())

    def inner_box(self) -> tuple[Ival, ...]:
        """The box shrunk by epsilon; its epsilon-inflation is the bound box."""
        e = self.epsilon
        return tuple(Ival(iv.lo + e, iv.hi - e) for iv in self.containment_box())


@dataclass
class RunRecord:
    config: RunConfig
    z: list[tuple[Fraction, ...]]
    containment_ok: list[bool]
    H_tilde: Fraction | None
    epsilon_ok: bool
    certified: bool
    failure: str | None = None
    failing_step: int | None = None
    fallback_steps: list[int] = field(default_factory=list)
    min_margin: Fraction | None = None

    @property
    def final(self) -> tuple[Fraction, ...]:
        return self.z[-1]

    def summary(self) -> dict:
        cfg = self.config
        return {
            "field": cfg.field.name,
            "a": format_rat(cfg.a),
            "h": format_rat(cfg.h),
            "k": cfg.k,
            "grid_exponent": cfg.grid.exponent,
            "order": cfg.order,
            "z_final": [format_rat(v) for v in self.final],
            "H_tilde": format_rat(self.H_tilde) if self.H_tilde is not None else None,
            "epsilon_ok": self.epsilon_ok,
            "containment_ok": all(self.containment_ok),
            "min_containment_margin": format_rat(self.min_margin) if self.min_margin is not None else None,
            "fallback_steps": list(self.fallback_steps),
            "certified": self.certified,
            "failure": self.failure,
            "failing_step": self.failing_step,
        }


# ---------------------------------------------------------------------------
# stepping


def _is_rational_field(spec: FieldSpec, order: int) -> bool:
    exprs = list(spec.components) + (list(spec.first) if order >= 2 else [])
    stack: list[Expr] = list(exprs)
    seen_phi: set[int] = set()
    from .fields import PHI, Phi

    while stack:
        e = stack.pop()
        if isinstance(e, SPow) and e.k % 2:
            return False
        if isinstance(e, Phi) and e.index not in seen_phi:
            seen_phi.add(e.index)
            stack.append(PHI[e.index])
        stack.extend(e.children())
    return True


class _Stepper:
    """Evaluates the Taylor polynomial for one field at a fixed parameter."""

    def __init__(self, spec: FieldSpec, a: Fraction, h: Fraction, order: int, a0: Fraction = A0):
        self.spec = spec
        self.a = Fraction(a)
        self.h = Fraction(h)
        self.order = order
        self.a0 = a0
        self.exprs = list(spec.components) + (list(spec.first) if order >= 2 else [])
        self.rational = _is_rational_field(spec, order)
        self._kinds = {}

    def _consts(self, kind):
        c = self._kinds.get(kind)
        if c is None:
            h = self.h
            c = (kind.from_rat(self.a), kind.from_rat(h), kind.from_rat(h * h / 2))
            self._kinds[kind] = c
        return c

    def enclose_fixed(self, z_ints: Sequence[int], scale: int, kind: type) -> list[Fixed]:
        a, h, h2 = self._consts(kind)
        vals = {n: kind.from_grid_int(v, scale) for n, v in zip(self.spec.variables, z_ints)}
        vals["a"] = a
        ctx = EvalContext(vals, kind, a0=self.a0)
        out = [evaluate(e, ctx) for e in self.exprs]
        n = self.spec.dimension
        res = []
        for i, var in enumerate(self.spec.variables):
            y = vals[var] + out[i] * h
            if self.order >= 2:
                y = y + out[n + i] * h2
            res.append(y)
        return res

    def exact(self, z: Sequence[Fraction]) -> list[Fraction]:
        """Exact step value for rational fields."""
        vals = {n: Ival(v, v) for n, v in zip(self.spec.variables, z)}
        vals["a"] = Ival(self.a, self.a)
        ctx = EvalContext(vals, Ival, a0=self.a0)
        out = [evaluate(e, ctx) for e in self.exprs]
        n = self.spec.dimension
        h = self.h
        res = []
        for i, zi in enumerate(z):
            y = zi + out[i].lo * h
            if self.order >= 2:
                y += out[n + i].lo * h * h / 2
            res.append(y)
        return res

    def enclose_ival(self, z: Sequence[Fraction], sqrt_width: Fraction) -> list[Ival]:
        vals = {n: Ival(v, v) for n, v in zip(self.spec.variables, z)}
        vals["a"] = Ival(self.a, self.a)
        ctx = EvalContext(vals, Ival, a0=self.a0, sqrt_width=sqrt_width)
        out = [evaluate(e, ctx) for e in self.exprs]
        n = self.spec.dimension
        h = Ival(self.h, self.h)
        h2 = Ival(self.h**2 / 2, self.h**2 / 2)
        res = []
        for i, zi in enumerate(z):
            y = Ival(zi, zi) + out[i] * h
            if self.order >= 2:
                y = y + out[n + i] * h2
            res.append(y)
        return res


def taylor_step(spec: FieldSpec, z: Sequence[Fraction], h: Fraction, order: int = 2,
                precision_budget: Fraction = Fraction(1, 10**30), *, a: Fraction = A0) -> list[Ival]:
    """Enclosure of ``z + f(z) h (+ F1(z) h**2/2)`` with each width within budget."""
    z = [Fraction(v) for v in z]
    h = Fraction(h)
    if h == 0:
        return [Ival(v, v) for v in z]
    st = _Stepper(spec, a, h, order)
    if st.rational:
        return [Ival(v, v) for v in st.exact(z)]
    width = precision_budget / 8
    for _ in range(8):
        enc = st.enclose_ival(z, width)
        if all(iv.width <= precision_budget for iv in enc):
            return enc
        width /= 2**16
    bad = [i for i, iv in enumerate(enc) if iv.width > precision_budget]
    raise CertificationError(f"step enclosure wider than budget in components {bad}")


def _floor_ints(enc: Sequence[Fixed], scale: int) -> list[int] | None:
    out = []
    for y in enc:
        P = y.PREC
        lo = (y.lo * scale) >> P
        hi = (y.hi * scale) >> P
        if lo != hi:
            return None
        out.append(lo)
    return out


def round_step(st: _Stepper, z_ints: Sequence[int], grid: GridSpec) -> tuple[list[int], bool]:
    """Next grid state as integers scaled by ``10**q``; flag marks a fallback."""
    scale = grid.scale
    if st.rational:
        z = [Fraction(v, scale) for v in z_ints]
        ys = st.exact(z)
        if grid.mode == "floor":
            return [(y.numerator * scale) // y.denominator for y in ys], False
        return [int(nearest_grid_in(Ival(y, y), grid)[0] * scale) for y in ys], False
    if grid.mode == "floor":
        for prec in PRECISION_LADDER:
            got = _floor_ints(st.enclose_fixed(z_ints, scale, fixed_class(prec)), scale)
            if got is not None:
                return got, False
    enc = st.enclose_fixed(z_ints, scale, fixed_class(PRECISION_LADDER[-1]))
    out = []
    for y in enc:
        zq, ok = nearest_grid_in(y.to_ival(), grid)
        if not ok:
            raise CertificationError("rounding could not be certified")
        out.append(int(zq * scale))
    return out, grid.mode == "floor"


def round_taylor_run(cfg: RunConfig) -> RunRecord:
    """Integrate ``cfg.k`` steps and assemble the certificate data."""
    spec = cfg.field
    grid = cfg.grid
    scale = grid.scale
    st = _Stepper(spec, cfg.a, cfg.h, cfg.order, cfg.a0)
    z_ints = []
    for v in cfg.initial_state:
        n = v * scale
        if n.denominator != 1:
            raise ValueError("initial state must lie on the grid")
        z_ints.append(n.numerator)

    inner = cfg.inner_box()
    bounds = [(iv.lo * scale, iv.hi * scale) for iv in inner]
    zs: list[tuple[int, ...]] = [tuple(z_ints)]
    contain: list[bool] = []
    fallbacks: list[int] = []
    failure = None
    failing = None
    min_margin = None

    def check(zi, j):
        nonlocal min_margin
        ok = True
        for v, (lo, hi) in zip(zi, bounds):
            m = min(v - lo, hi - v)
            if min_margin is None or m < min_margin:
                min_margin = m
            if m < 0:
                ok = False
        return ok

    contain.append(check(z_ints, 0))
    for j in range(1, cfg.k + 1):
        try:
            z_ints, fb = round_step(st, z_ints, grid)
        except (DomainError, CertificationError) as exc:
            failure, failing = f"step failed: {exc}", j
            break
        if fb:
            fallbacks.append(j)
        zs.append(tuple(z_ints))
        ok = check(z_ints, j)
        contain.append(ok)
        if not ok and failure is None:
            failure, failing = "iterate left the containment box", j

    z = [tuple(Fraction(v, scale) for v in zi) for zi in zs]
    H_tilde = None
    eps_ok = False
    if cfg.constants is not None:
        H_tilde = global_error_bound(cfg.constants, cfg.h, grid.spacing, cfg.k, cfg.order)
        eps_ok = cfg.epsilon > cfg.constants.M0 * cfg.h + H_tilde
        if not eps_ok and failure is None:
            failure = "epsilon condition fails"
    elif failure is None:
        failure = "no hypothesis constants supplied"
    certified = failure is None and all(contain) and eps_ok and len(z) == cfg.k + 1
    return RunRecord(
        config=cfg,
        z=z,
        containment_ok=contain,
        H_tilde=H_tilde,
        epsilon_ok=eps_ok,
        certified=certified,
        failure=failure,
        failing_step=failing,
        fallback_steps=fallbacks,
        min_margin=None if min_margin is None else Fraction(min_margin, scale),
    )


def certified_state(rec: RunRecord, j: int) -> list[Ival]:
    """Enclosure ``z_j +- H~`` of the true solution at ``t = j h``."""
    if not rec.certified:
        raise CertificationError(f"run is not certified: {rec.failure}")
    if not 0 <= j < len(rec.z):
        raise IndexError("step index out of range")
    Ht = rec.H_tilde
    return [Ival(v - Ht, v + Ht) for v in rec.z[j]]


def write_csv(rec: RunRecord, path, every: int = 1) -> None:
    cfg = rec.config
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "t", *cfg.field.variables])
        for j, zj in enumerate(rec.z):
            if j % every and j != len(rec.z) - 1:
                continue
            w.writerow([j, format_rat(cfg.h * j), *(format_rat(v) for v in zj)])
