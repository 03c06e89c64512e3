"""Acceptance suite: one test per exit criterion, each printing a verdict line.

The Monte Carlo criteria drive the same sweep configs shipped under
recipes/; the property criteria reuse the built-in self-test suites at their
full sample counts. Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from bdris import Architecture, Mode, selftest
from bdris.channel import generate_channels
from bdris.driver import run
from bdris.experiments import load_config, run_sweep
from bdris.singlecell import optimal_amplitude
from helpers import ALL_CASES, NOISE, P5, make_scenario, pool_run

RECIPES = Path(__file__).resolve().parent.parent / "recipes"
TRIALS_PER_CASE = 20


def announce(num, ok, detail):
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def case_mean(rows, mode, arch, value):
    rates = [r["sum_rate"] for r in rows
             if r["mode"] == mode and r["arch"] == arch and r["value"] == value]
    assert rates, f"no rows for {mode}:{arch} at {value}"
    return float(np.mean(rates))


@pytest.fixture(scope="module")
def nine_case_runs():
    scenarios = []
    labels = []
    for mode, arch in ALL_CASES:  # the group-connected entries use G = 4
        for trial in range(TRIALS_PER_CASE):
            scenarios.append(make_scenario(n=4, k_r=2, k_t=2, m=16, mode=mode,
                                           arch=arch, power=P5, noise=NOISE,
                                           seed=5000 + trial))
            labels.append((mode.value, arch.label, trial))
    results = pool_run(scenarios)
    return list(zip(labels, results))


@pytest.fixture(scope="module")
def fig6_rows():
    _, spec = load_config(RECIPES / "fig6.cfg")
    return spec, run_sweep(spec)


@pytest.fixture(scope="module")
def fig6_rician_rows():
    _, spec = load_config(RECIPES / "fig6_rician.cfg")
    return spec, run_sweep(spec)


@pytest.fixture(scope="module")
def fig7_rows():
    _, spec = load_config(RECIPES / "fig7.cfg")
    spec = replace(spec, cases=tuple(
        (m, a) for m, a in spec.cases if a.kind.value in ("cw_fc", "cw_sc")))
    return spec, run_sweep(spec)


def test_criterion_1_monotone_convergence(nine_case_runs):
    worst_drop = 0.0
    max_iters = 0
    for (mode, arch, trial), res in nine_case_runs:
        trace = np.array([row[0] for row in res["trace"]])
        if len(trace) > 1:
            worst_drop = max(worst_drop, float(np.max(-np.diff(trace))))
        assert res["iters"] < res["max_outer"], \
            f"{mode}:{arch} trial {trial} did not meet the relative tolerance in 500 iterations"
        max_iters = max(max_iters, res["iters"])
    ok = worst_drop <= 1e-9
    announce(1, ok, f"9 cases x {TRIALS_PER_CASE} seeds, worst objective drop "
                    f"{worst_drop:.2e} (slack 1e-9), max outer iterations {max_iters}")


def test_criterion_2_single_user_oracle():
    gaps = []
    for seed in range(40, 45):
        sc = make_scenario(n=4, k_r=1, k_t=0, m=1, mode=Mode.REFLECTIVE,
                           arch=Architecture.single(), rel_tol=1e-8, seed=seed)
        cs = generate_channels(sc, sc.seed)
        res = run(sc, cs)
        closed_form = math.log2(1 + sc.power * np.linalg.norm(cs.g.conj().T @ cs.h[0]) ** 2
                                / sc.noise)
        gaps.append(abs(res.sum_rate - closed_form))
    ok = max(gaps) < 1e-3
    announce(2, ok, f"K=1, M=1, N=4 reflective: max |rate - closed form| = {max(gaps):.2e} bits")


def test_criterion_3_architecture_ordering(fig6_rows):
    spec, rows = fig6_rows
    ordering_ok = True
    for value in spec.values:
        fc = case_mean(rows, "hybrid", "cw_fc", value)
        gc = case_mean(rows, "hybrid", "cw_gc", value)
        sc = case_mean(rows, "hybrid", "cw_sc", value)
        if not (fc > gc > sc):
            ordering_ok = False
    fc5 = case_mean(rows, "hybrid", "cw_fc", 5.0)
    gc5 = case_mean(rows, "hybrid", "cw_gc", 5.0)
    sc5 = case_mean(rows, "hybrid", "cw_sc", 5.0)
    fc_gain = fc5 / sc5 - 1.0
    gc_gain = gc5 / sc5 - 1.0
    ok = ordering_ok and 0.40 <= fc_gain <= 1.10 and 0.15 <= gc_gain <= 0.60
    announce(3, ok, f"ordering at all power points: {ordering_ok}; gains at 5 dBm: "
                    f"CW-FC/CW-SC {100 * fc_gain:.1f}% (band 40-110), "
                    f"CW-GC/CW-SC {100 * gc_gain:.1f}% (band 15-60)")


def test_criterion_4_mode_ordering_rician(fig6_rician_rows):
    spec, rows = fig6_rician_rows
    hyb = case_mean(rows, "hybrid", "cw_fc", 5.0)
    refl = case_mean(rows, "reflective", "cw_fc", 5.0)
    tran = case_mean(rows, "transmissive", "cw_fc", 5.0)
    g_refl = hyb / refl - 1.0
    g_tran = hyb / tran - 1.0
    ok = (hyb > refl and hyb > tran
          and 0.08 <= g_refl <= 0.35 and 0.08 <= g_tran <= 0.35)
    announce(4, ok, f"Rician 5 dB at 5 dBm: hybrid {hyb:.3f} vs reflective {refl:.3f} "
                    f"(+{100 * g_refl:.1f}%) and transmissive {tran:.3f} "
                    f"(+{100 * g_tran:.1f}%), band 8-35%")


def test_criterion_5_cross_algorithm_agreement():
    pairs = []
    for seed in range(300, 300 + 20):
        base = make_scenario(n=4, k_r=2, k_t=2, m=16, mode=Mode.HYBRID,
                             arch=Architecture.single(), seed=seed)
        pairs.append(base)
        pairs.append(replace(base, sc_algorithm="manifold"))
    results = pool_run(pairs)
    gaps = []
    for i in range(0, len(results), 2):
        a, b = results[i]["rate"], results[i + 1]["rate"]
        gaps.append(abs(a - b) / max(a, b))
    ok = max(gaps) <= 0.02
    announce(5, ok, f"per-cell vs manifold (G=M) on 20 instances: "
                    f"max relative gap {100 * max(gaps):.2f}% (limit 2%)")


def test_criterion_6_gradient_correctness():
    err = selftest.gradient_suite(problems=20, directions=10)
    announce(6, err < 1e-5, f"finite-difference gradient error {err:.2e} (limit 1e-5)")


def test_criterion_7_retraction_feasibility():
    err = selftest.retraction_suite(samples=1000)
    announce(7, err < 1e-10, f"max ||phi'^H phi' - I|| over 1000 tangent steps "
                             f"{err:.2e} (limit 1e-10)")


def test_criterion_8_fp_tightness():
    err = selftest.tightness_suite(contexts=100)
    announce(8, err < 1e-10, f"max scaled |f_tau - f_o| after updates over 100 contexts "
                             f"{err:.2e} (limit 1e-10)")


def test_criterion_9_amplitude_convexity_and_search():
    rng = np.random.default_rng(909)
    xs = np.arange(0.01, 0.99 + 1e-12, 1e-3)
    worst_second = np.inf
    # convexity in the sqrt-split parameterization holds for non-negative
    # diagonal gaps; sign-free gaps are covered by the unimodality and
    # search-accuracy checks below
    for _ in range(1000):
        ups = abs(rng.standard_normal()) * 2.0
        at = abs(rng.standard_normal())
        ar = abs(rng.standard_normal())
        vals = ups * xs ** 2 - 2 * at * xs - 2 * ar * np.sqrt(1 - xs ** 2)
        worst_second = min(worst_second, float(np.min(vals[2:] - 2 * vals[1:-1] + vals[:-2])))
    convex_ok = worst_second >= -1e-9

    grid = np.linspace(1e-6, 1 - 1e-6, 10 ** 6)
    sq, sq1 = np.sqrt(grid), np.sqrt(1 - grid)
    worst_gap = 0.0
    unimodal_ok = True
    x_grid = np.arange(1e-3, 1.0, 1e-3)
    for _ in range(1000):
        ups = float(rng.standard_normal() * 2.0)  # sign-free
        at = abs(rng.standard_normal())
        ar = abs(rng.standard_normal())
        best = float(grid[np.argmin(ups * grid - 2 * at * sq - 2 * ar * sq1)])
        worst_gap = max(worst_gap, abs(optimal_amplitude(ups, at, ar) - best))
        vals = ups * x_grid ** 2 - 2 * at * x_grid - 2 * ar * np.sqrt(1 - x_grid ** 2)
        signs = np.sign(np.diff(vals))
        signs = signs[signs != 0]
        if np.count_nonzero(np.diff(signs) != 0) > 1:
            unimodal_ok = False
    ok = convex_ok and unimodal_ok and worst_gap <= 1e-4
    announce(9, ok, f"second differences >= {worst_second:.2e} (slack -1e-9) on 1000 "
                    f"non-negative-gap triples; sign-free: unimodal {unimodal_ok}, "
                    f"golden-section vs 1e-6 grid max gap {worst_gap:.2e} (limit 1e-4)")


def test_criterion_10_feasibility_every_iteration(nine_case_runs):
    worst_power_excess = 0.0
    worst_residual = 0.0
    for (_, _, _), res in nine_case_runs:
        for f_o, power, residual in res["trace"]:
            worst_power_excess = max(worst_power_excess, power / res["power"] - 1.0)
            worst_residual = max(worst_residual, residual)
    ok = worst_power_excess <= 1e-9 and worst_residual < 1e-8
    announce(10, ok, f"all iterations of all runs: max power excess {worst_power_excess:.2e} "
                     f"(limit 1e-9), max constraint residual {worst_residual:.2e} (limit 1e-8)")


def test_criterion_11_scaling_slope(fig7_rows):
    spec, rows = fig7_rows
    fc_slope = (case_mean(rows, "hybrid", "cw_fc", 64.0)
                - case_mean(rows, "hybrid", "cw_fc", 16.0))
    sc_slope = (case_mean(rows, "hybrid", "cw_sc", 64.0)
                - case_mean(rows, "hybrid", "cw_sc", 16.0))
    ok = fc_slope > sc_slope
    announce(11, ok, f"sum-rate increase M=16 to 64: CW-FC {fc_slope:.3f} bits "
                     f"> CW-SC {sc_slope:.3f} bits: {ok}")
