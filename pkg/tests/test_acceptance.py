"""Acceptance gate: one test per numbered criterion.

Every test prints a `CRITERION k: PASS/FAIL` line on the live terminal
(bypassing capture) before asserting, so a full run always shows the
per-criterion scoreboard.  Tolerances are stated inline next to each check.
"""

import math

import numpy as np
import pytest

from hhmeasure.checks import PASS, run_check
from hhmeasure.dirichlet import (
    AbsorbingProblem,
    below_class,
    escape_probability,
    row_class,
)
from hhmeasure.lattice import LINE, Site, d_n, line_plus, make_window
from hhmeasure.measures import (
    DEFAULT_C_SCHEDULE,
    constant_c,
    decorated,
    edge_hm_L0,
    inharmonic,
    scaling_limit_report,
    stationary_hm,
)
from hhmeasure.montecarlo import mc_hit, mc_hm_from_circle
from hhmeasure.potential import hm_infinity

PI = math.pi

A_SINGLE = line_plus((0, 1))
A_COLUMN = line_plus((0, 1), (0, 2), (0, 3))


@pytest.fixture
def announce(capsys):
    def _announce(k: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"CRITERION {k:2d}: {'PASS' if ok else 'FAIL'} - {detail}",
                  flush=True)
        assert ok, f"criterion {k}: {detail}"

    return _announce


@pytest.fixture(scope="module")
def constants(kernel):
    return constant_c(DEFAULT_C_SCHEDULE, kernel=kernel)


def test_criterion_01_gambler_exactness(announce):
    worst = 0.0
    for n in (2, 5, 10, 50):
        width = 14 * n
        prob = AbsorbingProblem(
            make_window(-width, width, 1, n - 1),
            line_classes={"bottom": below_class(0), "top": row_class(n)},
        )
        esc = escape_probability((0, 0), "bottom", "top", prob)
        worst = max(worst, abs(esc["value"] - 1.0 / (4 * n)))
    announce(1, worst < 1e-9,
             f"kick-started barrier probability off 1/(4n) by at most {worst:.2e} "
             f"(tolerance 1e-9) for n in {{2,5,10,50}}")


def test_criterion_02_poisson_kernel(announce, kernel):
    n = 200
    dl = decorated(LINE, kernel)
    vals = []
    for x in (0, n // 2, n):
        p = dl.hit_prob(Site(0, n), Site(x, 0))
        vals.append(PI * n * p * (1.0 + (x / n) ** 2))
    ok = all(0.99 <= v <= 1.01 for v in vals)
    announce(2, ok,
             "pi*n*P*(1+(x/n)^2) at n=200 = "
             + ", ".join(f"{v:.6f}" for v in vals) + " (band [0.99, 1.01])")


def test_criterion_03_line_stationary_is_one(announce, kernel):
    worst = 0.0
    for m in (4, 8):
        mv = stationary_hm(LINE, (0, 0), m=m, method="visits-green", kernel=kernel)
        worst = max(worst, abs(mv.value - 1.0))
    announce(3, worst < 1e-6,
             f"visits-green stationary value on the line off 1 by {worst:.2e} "
             f"at m in {{4,8}} (tolerance 1e-6)")


def test_criterion_04_reflection_inequality(announce, kernel):
    rep = run_check("reflection", kernel=kernel)
    announce(4, rep.verdict == PASS,
             f"exact rationals n 2..6 and float margins n in {{8,16,32,64}}: "
             f"{rep.reason}")


def test_criterion_05_constant_c(announce, constants):
    c = constants.c
    ok = 0.30 <= c <= 0.34 and constants.series.is_cauchy(strict=True)
    announce(5, ok,
             f"n*H_Dn(0) Cauchy with Aitken limit c = {c:.8f} "
             f"(band [0.30, 0.34], continuum 1/pi = {1.0 / PI:.8f})")


def test_criterion_06_scaling_limit_sites(announce, kernel, constants):
    details = []
    ok = True
    for A, x, label in ((A_SINGLE, (0, 1), "single"), (A_COLUMN, (0, 3), "column")):
        rep = scaling_limit_report(A, x, n_list=(50, 100, 200), tolerance=0.10,
                                   constants=constants, kernel=kernel)
        g50 = rep["entries"][0]["rel_gap"]
        g200 = rep["entries"][-1]["rel_gap"]
        ok = ok and g200 <= 0.10 and g200 < g50
        details.append(f"{label}: gap {g50:.4%} -> {g200:.4%}")
    announce(6, ok, "; ".join(details) + " (need <= 10% at n=200 and shrinking)")


def test_criterion_06_scaling_limit_edge(announce, kernel, constants):
    mv = edge_hm_L0(LINE, 200, (0, 0), kernel=kernel)
    scaled = constants.C * 200 * mv.value
    ok = abs(scaled - 1.0) <= 0.05
    announce(6, ok,
             f"edge version C*n*H at n=200 = {scaled:.6f} (band 1 +- 5%)")


def _interval_gap(a, b) -> float:
    return max(a.lower - b.upper, b.lower - a.upper, 0.0)


def test_criterion_07_inharmonic_equals_stationary(announce, kernel):
    cases = [
        (LINE, (0, 0)), (LINE, (3, 0)),
        (A_SINGLE, (0, 1)), (A_SINGLE, (1, 0)),
        (A_COLUMN, (0, 3)), (A_COLUMN, (2, 0)),
    ]
    worst = 0.0
    for A, x in cases:
        inh = inharmonic(A, 200, x, kernel=kernel)
        both = stationary_hm(A, x, method="both", kernel=kernel)
        ref = max(abs(both["visits-green"].value), 1e-12)
        for mv in both.values():
            worst = max(worst, _interval_gap(inh, mv) / ref)
    announce(7, worst <= 0.02,
             f"worst bracket gap over 6 cases x 2 routes = {worst:.4%} "
             f"of the stationary value (tolerance 2%)")


def test_criterion_08_segment_arcsine(announce, kernel):
    rep = run_check("segment", kernel=kernel)
    limits = {r["index"]: float(r["value"]) for r in rep.rows
              if r["quantity"] == "segment_limit"}
    half = limits.get(0.5, float("nan"))
    ok = rep.verdict == PASS and abs(half - 1.0 / 3.0) <= 0.02 / 3.0
    announce(8, ok,
             f"extrapolated half-segment mass {half:.8f} vs continuum 1/3 "
             f"(tolerance 2%); check verdict {rep.verdict}")


def test_criterion_09_mc_grid(announce, kernel):
    rng = np.random.default_rng(20260817)
    within = 0
    total = 100
    for i in range(total):
        k = int(rng.integers(0, 4))
        decor = set()
        while len(decor) < k:
            decor.add((int(rng.integers(-3, 4)), int(rng.integers(1, 4))))
        A = line_plus(*sorted(decor)) if decor else LINE
        dl = decorated(A, kernel)
        y = Site(int(rng.integers(-4, 5)), int(rng.integers(4, 7)))
        x1 = y.x1 + int(rng.integers(-2, 3))
        if decor and rng.integers(0, 3) == 0:
            x = Site(*sorted(decor)[int(rng.integers(0, len(decor)))])
        else:
            x = Site(x1, 0)
        exact = dl.hit_prob(y, x)
        est = mc_hit(y, A, tuple(x), samples=4000, cap=100_000, seed=1000 + i)
        if abs(est.mean - exact) <= 3.0 * est.std_error:
            within += 1
    announce(9, within >= 95,
             f"{within}/100 randomized instances within 3 sigma "
             f"(threshold 95)")


def test_criterion_10_potential_kernel(announce, kernel):
    grid, R = kernel.grid, kernel.radius
    worst_lap = 0.0
    for lo in range(1, 2 * R, 256):
        hi = min(lo + 256, 2 * R)
        block = grid[lo:hi, 1:-1]
        lap = (grid[lo - 1:hi - 1, 1:-1] + grid[lo + 1:hi + 1, 1:-1]
               + grid[lo:hi, :-2] + grid[lo:hi, 2:]) / 4.0 - block
        if lo <= R < hi:
            lap[R - lo, R - 1] = 0.0  # origin carries the unit source
        worst_lap = max(worst_lap, float(np.max(np.abs(lap))))

    i = np.arange(-200, 201)
    X, Y = np.meshgrid(i, i, indexing="ij")
    r2 = X * X + Y * Y
    ann = (r2 >= 50 * 50) & (r2 <= 200 * 200)
    sub = grid[R - 200:R + 201, R - 200:R + 201]
    c0_vals = sub[ann] - (1.0 / PI) * np.log(r2[ann].astype(float))
    spread = float(c0_vals.max() - c0_vals.min())

    eq = hm_infinity(d_n(25), kernel=kernel)
    est = mc_hm_from_circle(d_n(25), 60, (0, 0), samples=30_000,
                            cap=500_000, seed=4)
    sig = abs(est.mean - eq.mass((0, 0))) / est.std_error

    ok = (worst_lap <= 1e-10 and kernel.a(1, 0) == 1.0
          and spread <= 1e-3 and sig <= 3.0)
    announce(10, ok,
             f"harmonicity residual {worst_lap:.2e} (<=1e-10), a(1,0)=1 exact, "
             f"c0 spread {spread:.2e} over 50<=|x|<=200 (<=1e-3), "
             f"segment mass vs circle MC at {sig:.2f} sigma (<=3)")


def test_criterion_11_shrinking_gap_suite(announce, kernel):
    ids = ("away", "line-decomposition", "box-coupling", "halfbox", "flatness")
    reports = {cid: run_check(cid, kernel=kernel) for cid in ids}
    verdicts = {cid: rep.verdict for cid, rep in reports.items()}
    ok = all(v == PASS for v in verdicts.values())
    parts = [f"{cid}={v}" for cid, v in verdicts.items()]
    detail = "; ".join(parts)
    if verdicts.get("flatness") != PASS:
        detail += (" | flatness: the scaled center-vs-offset gap rises toward "
                   "its positive continuum value instead of shrinking at fixed "
                   "delta; see the flatness evidence rows")
    announce(11, ok, detail)
