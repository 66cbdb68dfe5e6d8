"""One pass/fail line per acceptance criterion.

Run ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``;
the lines are also repeated in the terminal summary of a normal pytest run.
Criteria 3 to 8 share one full proof run (several minutes on one core).
"""
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES  # noqa: E402
from test_exact import interval_fuzz, recurrence_agreement  # noqa: E402

from roundtaylor.bounds import CERTIFIED, PUBLISHED_CONSTANTS  # noqa: E402
from roundtaylor.exact import GridSpec, floor_to_grid  # noqa: E402
from roundtaylor.integrator import global_error_bound  # noqa: E402
from roundtaylor.pipeline import PipelineConfig, Proof, RunJob, repro_intro, report_json, run_many  # noqa: E402
from roundtaylor.topology import PASS, ProofConstants, theta_comparison  # noqa: E402

PC = ProofConstants.published()


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def _checks(cert, needle):
    return [c for c in cert.transcript if needle in c.label]


def test_criterion_1_intro_table():
    start = time.perf_counter()
    rep = repro_intro()
    secs = time.perf_counter() - start
    matched = sum(r["match"] for r in rep["rows"])
    record(1, rep["verdict"] == PASS and matched == 10 and secs < 1,
           f"{matched}/10 pairs bit-exact in {secs:.3f}s")


def test_criterion_2_error_bounds():
    h, H, k = PC.t0 / 30000, Fraction(1, 10**14), 30000
    limits = {"W": Fraction(127, 10**9), "U": Fraction(209, 10**8), "G": Fraction(19, 10**7)}
    parts, ok = [], True
    for f, lim in limits.items():
        start = time.perf_counter()
        val = global_error_bound(PUBLISHED_CONSTANTS[f], h, H, k, 2)
        secs = time.perf_counter() - start
        good = val <= lim and secs < 1
        ok &= good
        parts.append(f"{f} {float(val):.6e} {'<=' if val <= lim else '>'} {float(lim):.1e}")
    record(2, ok, "; ".join(parts))


@pytest.mark.slow
def test_criterion_3_long_run_agreement(proof):
    band_checks = [c for f in "WGU" for c in _checks(proof.window[f].certificate, "within 2(H + H~)")]
    band_checks += _checks(proof.run_agreement, "within 2(H + H~)")
    runs = proof.runs
    per_run = proof.timing.get("per_run", {})
    slowest = max(per_run.values(), default=0.0)
    ok = (len(runs) == 17 and all(r.certified for r in runs.values()) and band_checks
          and all(c.holds for c in band_checks) and slowest <= 600 and proof.timing["runs"] <= 3600)
    bad = [c.label for c in band_checks if not c.holds]
    inside = sum(c.holds for c in band_checks)
    record(3, ok, f"{inside}/{len(band_checks)} components in band across {len(runs)} runs, "
                  f"slowest run {slowest:.0f}s, all runs {proof.timing['runs']:.0f}s"
                  + (f"; outside: {bad[:3]}" if bad else ""))


@pytest.mark.slow
def test_criterion_4_dictionary(proof):
    statuses = {i: c.status for i, c in proof.table.items()}
    n_cert = sum(s == CERTIFIED for s in statuses.values())
    listed = proof.bounds_certificate.inputs["not_certified"]
    all_listed = all(str(i) in listed for i, s in statuses.items() if s != CERTIFIED)
    hyp_ok = all(r.claimed_all_certified for r in proof.hypotheses.values())
    others = ", ".join(f"phi{i} {v['status']}" for i, v in listed.items())
    record(4, n_cert >= 50 and all_listed and hyp_ok,
           f"{n_cert}/58 entries certified ({others or 'none other'}); hypothesis tables W, G, U "
           f"{'certified' if hyp_ok else 'not certified'}")


@pytest.mark.slow
def test_criterion_5_sign_margins(proof):
    certs = [proof.lemma(n) for n in (1, 2, 3)]
    ours = [c for cert in certs for c in _checks(cert, "certified margin")]
    printed = [c for cert in certs for c in _checks(cert, "published margin")]
    ok = len(ours) == 12 and len(printed) == 12 and all(c.holds for c in ours + printed)
    smallest = min((c.lhs for c in ours), default=Fraction(0))
    record(5, ok, f"{sum(c.holds for c in ours)}/12 certified and {sum(c.holds for c in printed)}/12 published "
                  f"margins positive; smallest certified margin {float(smallest):.3e}")


@pytest.mark.slow
def test_criterion_6_ift_region(proof):
    cert = proof.uniqueness
    want = ("sb < rho1", "sb < rho2")
    found = {c.label: c for c in cert.transcript if c.label in want}
    ok = len(found) == 2 and all(c.holds for c in found.values())
    inp = cert.inputs
    record(6, ok, f"m1={inp['m1']} m2={inp['m2']} rho1={float(Fraction(inp['rho1'])):.6e} "
                  f"rho2={float(Fraction(inp['rho2'])):.6e} sb={inp['sb']}")


@pytest.mark.slow
def test_criterion_7_theta(proof):
    below = theta_comparison("printed below", Fraction(122172921709501, 10**14), 0, 0, 0, 0, 0, "below")
    above = theta_comparison("printed above", Fraction(24434637066123, 2 * 10**13), 0, 0, 0, 0, 0, "above")
    rect_b, rect_a = proof.thetas["C1"], proof.thetas["C2"]
    ok = all(c.verdict == PASS for c in (below, above, rect_b, rect_a))
    record(7, ok, f"printed values {below.verdict}/{above.verdict}; rectangle versions "
                  f"{rect_b.verdict} (worst {float(Fraction(rect_b.inputs['worst_case'])):.10f}) / "
                  f"{rect_a.verdict} (worst {float(Fraction(rect_a.inputs['worst_case'])):.10f})")


@pytest.mark.slow
def test_criterion_8_full_pipeline(proof):
    rep = proof.report("full")
    per = rep["certificates"]["periodicity"]
    ok = (rep["verdict"] == PASS and per["verdict"] == PASS and per["inputs"]["period"] == "36*tbar"
          and rep.get("theorem", {}).get("tbar_window") == f"|tbar - t0| < {PC.t_window}")
    failing = [k for k, c in rep["certificates"].items() if c["verdict"] != PASS]
    record(8, ok, f"verify full: {rep['verdict']}, period {per['inputs']['period']}, "
                  f"window {per['inputs']['window_t']}" + (f"; not passing: {failing}" if failing else ""))


def test_criterion_9_properties():
    fuzz = interval_fuzz(10_000)
    rng = random.Random(9)
    grid_bad = 0
    for _ in range(10_000):
        x = Fraction(rng.randint(-10**12, 10**12), rng.randint(1, 10**9))
        g = GridSpec(rng.randint(1, 15))
        z = floor_to_grid(x, g)
        grid_bad += not (0 <= x - z < g.spacing and (z * g.scale).denominator == 1)
    rec = recurrence_agreement(1000)
    jobs = [RunJob(f"P{i}", "W", PC.a0, PC.b0, PC.t0 / 200, 10, 14, PUBLISHED_CONSTANTS["W"]) for i in range(3)]
    dumps = {json.dumps({k: v.summary() for k, v in run_many(jobs, workers=w, serial=w == 1).items()},
                        sort_keys=True) for w in (1, 2, 3)}
    ok = fuzz == 0 and grid_bad == 0 and rec == 0 and len(dumps) == 1
    record(9, ok, f"fuzz violations {fuzz}, grid violations {grid_bad}, recurrence mismatches {rec}, "
                  f"{len(dumps)} distinct report(s) over 1/2/3 workers")


@pytest.mark.slow
def test_report_is_deterministic_json(proof):
    text = report_json(proof.report("full"))
    assert text == report_json(json.loads(text))
    assert isinstance(PipelineConfig(), PipelineConfig) and isinstance(proof, Proof)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
