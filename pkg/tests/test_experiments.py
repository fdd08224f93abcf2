import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpspectral.experiments import (
    PRESETS, RSNR_CAP_DB, ExperimentConfig, build_config, load_config, normalized_error,
    parse_axis, rsnr, run_phase_transition, run_sweep, run_trial, success, trial_seed,
)
from cpspectral.io import read_rows

# small folding keeps the harness tests quick
SMALL = dict(n_total=31, l_dim=15, p_dim=2)


def small_config(**kw):
    base = dict(SMALL, k_values=[2], m_values=[31], trials=3, base_seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


def test_rsnr_half_amplitude():
    x = np.ones(8, dtype=complex)
    r = rsnr(x, 0.5 * x)
    assert r.db == pytest.approx(20 * math.log10(2), abs=1e-12)  # 6.0206 dB
    assert not r.exact


def test_rsnr_zero_estimate_is_zero_db():
    x = np.arange(1, 6) + 1j
    assert rsnr(x, np.zeros_like(x)).db == pytest.approx(0.0, abs=1e-12)


def test_rsnr_exact_is_capped():
    x = np.ones(4)
    r = rsnr(x, x)
    assert r.db == RSNR_CAP_DB and r.exact


def test_rsnr_rejects_zero_truth():
    with pytest.raises(ValueError):
        rsnr(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        rsnr(np.ones(3), np.ones(4))


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 10.0))
def test_rsnr_matches_normalized_error(scale):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    e = rng.standard_normal(10)
    x_hat = x + scale * e / np.linalg.norm(e) * np.linalg.norm(x)
    err = normalized_error(x, x_hat)
    assert err == pytest.approx(scale, rel=1e-9)
    assert rsnr(x, x_hat).db == pytest.approx(-20 * math.log10(err), abs=1e-9)


def test_success_is_strict():
    x = np.array([1.0, 0.0])
    assert not success(x, np.array([1.0 - 1e-3, 0.0]))
    assert success(x, np.array([1.0 - 0.999e-3, 0.0]))
    assert success(x, x)


def test_parse_axis():
    assert parse_axis("3:2:9") == [3, 5, 7, 9]
    assert parse_axis("20:3:86")[-1] == 86
    assert len(parse_axis("20:3:86")) == 23
    assert parse_axis("1,4, 9") == [1, 4, 9]
    assert parse_axis("0:5:12") == [0, 5, 10]
    assert parse_axis([10, 20]) == [10, 20]
    assert parse_axis("2.5") == [2.5]
    with pytest.raises(ValueError):
        parse_axis("1:0:5")


def test_full_grid_size():
    c = ExperimentConfig()
    assert len(c.k_values) * len(c.m_values) == 483
    assert (c.k_values[0], c.k_values[-1], c.m_values[0], c.m_values[-1]) == (3, 43, 20, 86)
    assert c.params.dims == (64, 63, 2)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(method="median")
    with pytest.raises(ValueError):
        ExperimentConfig(k_values=[])
    with pytest.raises(ValueError):
        build_config({"bogus": 1})
    with pytest.raises(ValueError):
        build_config({"solver.bogus": 1})


def test_load_config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "# grid\n"
        "k_values = 3:4:11\n"
        "m_values = 30, 60\n"
        "snr_values = 10:10:30\n"
        "trials = 7   # few\n"
        "n_total = 63\n"
        "solver.prune_ratio = 0.05\n"
        "solver.lambda_factor = 0.25\n"
        "solver.extrapolate = no\n"
    )
    c = load_config(path)
    assert c.k_values == [3, 7, 11] and c.m_values == [30, 60]
    assert c.snr_values == [10, 20, 30] and c.trials == 7
    assert (c.n_total, c.l_dim) == (63, 31)
    assert c.solver.prune_ratio == 0.05 and not c.solver.extrapolate
    assert c.solver.lambda_schedule.factor == 0.25
    # overrides on top of a loaded file
    c2 = build_config({"trials": "2", "solver.continuation": "false"}, c)
    assert c2.trials == 2 and c2.solver.lambda_schedule is None and c2.k_values == [3, 7, 11]


def test_presets_build():
    for name, values in PRESETS.items():
        c = build_config(values)
        assert c.trials >= 1, name
    assert build_config(PRESETS["snr-quick"]).snr_values == [10, 20, 30, 40]


def test_trial_seed_distinct():
    seeds = {trial_seed(0, k, m, s, t) for k in (3, 5) for m in (20, 23)
             for s in (None, 10.0) for t in range(5)}
    assert len(seeds) == 40


def test_run_trial_deterministic():
    c = small_config()
    a = run_trial(c, 2, 20, None, 0)
    b = run_trial(c, 2, 20, None, 0)
    assert a == b


def test_phase_transition_csv_deterministic(tmp_path):
    c = small_config(k_values=[1, 2], m_values=[12, 31])
    run_phase_transition(c, tmp_path / "a", gnuplot=True)
    run_phase_transition(c, tmp_path / "b")
    for name in ("phase_transition.csv", "phase_transition_trials.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "phase_transition.gp").exists()
    rows = read_rows(tmp_path / "a" / "phase_transition.csv")
    assert [(r["K"], r["M"]) for r in rows] == [("1", "12"), ("1", "31"), ("2", "12"), ("2", "31")]


def test_success_flag_recomputable(tmp_path):
    c = small_config(k_values=[2], m_values=[10, 31], trials=4)
    run_phase_transition(c, tmp_path)
    for r in read_rows(tmp_path / "phase_transition_trials.csv"):
        err = float(r["normalized_error"])
        assert (r["success"] == "true") == (err < c.threshold)
        if r["exact_match"] == "false":
            assert float(r["rsnr_db"]) == pytest.approx(-20 * math.log10(err), abs=1e-9)


def test_serial_matches_parallel():
    c = small_config(k_values=[2], m_values=[20, 31], trials=2)
    assert run_phase_transition(c) == run_phase_transition(replace(c, workers=2))


def test_full_observation_succeeds():
    rows = run_phase_transition(small_config(k_values=[2], m_values=[31], trials=5))
    assert rows[0]["success_rate"] == 1.0


def test_phase_transition_rejects_noise_and_large_m():
    with pytest.raises(ValueError):
        run_phase_transition(small_config(snr_values=[10]))
    with pytest.raises(ValueError):
        run_phase_transition(small_config(m_values=[40]))


def test_single_point_sweep(tmp_path):
    c = small_config(m_values=[31], snr_values=[40], trials=2)
    rows = run_sweep(c, "snr", tmp_path, gnuplot=True)
    assert len(rows) == 1 and rows[0]["value"] == 40
    assert (tmp_path / "sweep_snr.csv").exists() and (tmp_path / "sweep_snr.gp").exists()
    assert len(read_rows(tmp_path / "sweep_snr_trials.csv")) == 2


def test_sweep_m_axis():
    c = small_config(m_values=[16, 31], snr_values=[40], trials=2)
    rows = run_sweep(c, "m")
    assert [r["value"] for r in rows] == [16, 31]
    assert all(np.isfinite(r["mean_rsnr"]) for r in rows)


def test_sweep_validation():
    with pytest.raises(ValueError):
        run_sweep(small_config(), "snr")  # no SNR axis
    with pytest.raises(ValueError):
        run_sweep(small_config(k_values=[1, 2], snr_values=[10]), "snr")
    with pytest.raises(ValueError):
        run_sweep(small_config(snr_values=[10, 20]), "m")
    with pytest.raises(ValueError):
        run_sweep(small_config(), "k")
