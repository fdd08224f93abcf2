"""End-to-end acceptance gate.

Each test prints one ``[PASS]``/``[FAIL]`` line; the lines are also repeated
in the terminal summary (see ``conftest.py``) so they survive output capture.
"""
import time

import numpy as np
import pytest

from cpspectral.cp_core import CpFactors, align_solutions, krank, kruskal_check, reconstruct
from cpspectral.experiments import PRESETS, ExperimentConfig, build_config, run_phase_transition, run_sweep
from cpspectral.frequency import extract_frequencies
from cpspectral.signal_model import SampleSet, random_model, sample_observations, synthesize_signal
from cpspectral.solver import SolverConfig, solve
from cpspectral.tensorization import FoldParams, fold, unfold_to_signal

from conftest import ACCEPTANCE_LINES
from oracles import crandn, krank_by_matrix_rank, vandermonde_factors

pytestmark = pytest.mark.acceptance

STD_FOLD = FoldParams(127, 63, 2)


def report(number, ok, detail, started):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} ({time.perf_counter() - started:.1f} s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def circ_dist(a, b):
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), 2 * np.pi))
    return np.minimum(d, 2 * np.pi - d)


def full_fold(model):
    return fold(SampleSet.full(synthesize_signal(model, 127)), STD_FOLD)


def test_criterion_1_round_trip():
    t0 = time.perf_counter()
    x = synthesize_signal(random_model(3, np.random.default_rng(1)), 127)
    tensor = fold(SampleSet.full(x), STD_FOLD)
    err = np.linalg.norm(unfold_to_signal(tensor.values, STD_FOLD) - x) / np.linalg.norm(x)
    ok = tensor.dims == (64, 63, 2) and err < 1e-12
    report(1, ok, f"dims {tensor.dims}, round-trip relative error {err:.2e} (< 1e-12)", t0)


def test_criterion_2_exact_cp_structure():
    t0 = time.perf_counter()
    model = random_model(3, np.random.default_rng(2))
    tensor = full_fold(model).values
    analytic = reconstruct(CpFactors(*vandermonde_factors(model.omegas, model.amplitudes, 127, 63, 2)))
    err = np.linalg.norm(tensor - analytic) / np.linalg.norm(tensor)
    ranks = [int(np.linalg.matrix_rank(tensor[:, :, i], tol=1e-8 * np.linalg.norm(tensor[:, :, i], 2)))
             for i in range(2)]
    ok = err < 1e-10 and ranks == [3, 3]
    report(2, ok, f"fold vs analytic factors {err:.2e} (< 1e-10), slice ranks {ranks}", t0)


def test_criterion_3_full_observation_recovery(fixed_model):
    t0 = time.perf_counter()
    observed = full_fold(fixed_model)
    worst_res, worst_freq, ranks = 0.0, 0.0, []
    for seed in range(10):
        r = solve(observed, SolverConfig(seed=seed))
        ranks.append(r.rank_estimate)
        worst_res = max(worst_res, r.masked_residual / observed.observed_norm())
        if r.rank_estimate == 3:
            est = np.sort([e.omega for e in extract_frequencies(r.factors, STD_FOLD)])
            worst_freq = max(worst_freq, float(circ_dist(est, fixed_model.omegas).max()))
        else:
            worst_freq = np.inf
    ok = ranks == [3] * 10 and worst_res < 1e-6 and worst_freq < 1e-6
    report(3, ok, f"ranks {sorted(set(ranks))} over 10 seeds, worst relative residual "
                  f"{worst_res:.2e} (< 1e-6), worst frequency error {worst_freq:.2e} rad (< 1e-6)", t0)


def test_criterion_4_essential_uniqueness(fixed_model):
    t0 = time.perf_counter()
    observed = full_fold(fixed_model)
    r1 = solve(observed, SolverConfig(seed=101))
    r2 = solve(observed, SolverConfig(seed=202))
    ok = r1.rank_estimate == r2.rank_estimate == 3
    detail = f"ranks {r1.rank_estimate}/{r2.rank_estimate}"
    if ok:
        rep = align_solutions(r1.factors, r2.factors, tol=1e-4)
        ok = rep.success
        detail += (f", permutation {rep.permutation.tolist()}, column residual {rep.residual:.2e}, "
                   f"|scaling product - 1| {rep.gauge_error:.2e} (< 1e-4)")
    report(4, ok, detail, t0)


def test_criterion_5_compressed_recovery():
    t0 = time.perf_counter()
    config = ExperimentConfig(k_values=[3], m_values=[60], trials=20)
    row = run_phase_transition(config)[0]
    report(5, row["success_rate"] >= 0.9,
           f"K=3 M=60 success rate {row['success_rate']:.2f} over 20 trials (>= 0.9)", t0)


def test_criterion_6_infeasible_region():
    t0 = time.perf_counter()
    config = ExperimentConfig(k_values=[43], m_values=[20], trials=20)
    row = run_phase_transition(config)[0]
    report(6, row["success_rate"] == 0.0,
           f"K=43 M=20 success rate {row['success_rate']:.2f} over 20 trials (== 0)", t0)


def test_criterion_7_noise_monotonicity():
    t0 = time.perf_counter()
    by_snr = [r["mean_rsnr"] for r in run_sweep(build_config(PRESETS["snr-quick"]), "snr")]
    by_m = [r["mean_rsnr"] for r in run_sweep(build_config(PRESETS["m-quick"]), "m")]
    ok = all(np.diff(by_snr) > 0) and all(np.diff(by_m) >= 0)
    fmt = lambda v: ", ".join(f"{x:.2f}" for x in v)
    report(7, ok, f"mean RSNR vs SNR 10/20/30/40 dB: [{fmt(by_snr)}] (strictly increasing); "
                  f"vs M 25/40/55/70: [{fmt(by_m)}] (nondecreasing)", t0)


def test_criterion_8_krank_and_kruskal():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    mismatches = 0
    for draw in range(100):
        rows, cols = int(rng.integers(1, 9)), int(rng.integers(1, 7))
        mat = crandn(rng, rows, cols)
        if cols >= 2 and draw % 3 == 0:
            # plant a dependency or a repeated column
            i, j = rng.choice(cols, 2, replace=False)
            mat[:, j] = (1 - 2j) * mat[:, i] if draw % 2 else mat[:, i] + mat[:, (i + 1) % cols]
        if draw % 10 == 1:
            mat[:, 0] = 0
        mismatches += krank(mat) != krank_by_matrix_rank(mat)
    cases_ok = kruskal_check(3, 3, 2, 3) is True and kruskal_check(1, 1, 1, 1) is False
    report(8, mismatches == 0 and cases_ok,
           f"krank mismatches vs brute force {mismatches}/100; "
           f"kruskal (3,3,2,R=3)->True and (1,1,1,R=1)->False: {cases_ok}", t0)


def test_criterion_9_objective_monotone():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = 0.0
    bad = 0
    for _ in range(50):
        n = int(rng.integers(15, 48))
        params = FoldParams.default(n)
        model = random_model(int(rng.integers(1, 5)), rng)
        snr = None if rng.random() < 0.5 else float(rng.uniform(5, 40))
        m = int(rng.integers(max(3, n // 4), n + 1))
        samples = sample_observations(synthesize_signal(model, n), m, snr,
                                      int(rng.integers(0, 2**31)))
        trace = np.array(solve(fold(samples, params),
                               SolverConfig(seed=int(rng.integers(0, 2**31)), max_iters=200)).objective_trace)
        rises = (trace[1:] - trace[:-1]) / np.maximum(np.abs(trace[:-1]), 1e-300)
        if rises.size:
            worst = max(worst, float(rises.max()))
            bad += bool(rises.max() > 1e-10)
    report(9, bad == 0, f"{bad}/50 traces rise; largest relative step up {worst:.2e} (slack 1e-10)", t0)
