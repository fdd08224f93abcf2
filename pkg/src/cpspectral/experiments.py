"""Seeded batch experiments: phase-transition grids and RSNR sweeps.

Every trial draws a fresh model (frequencies uniform on [0, 2*pi),
amplitudes with standard normal real and imaginary parts), a fresh
observation set and a fresh solver initialization, all from one integer
seed::

    seed = base_seed ^ crc32("K|M|SNR") ^ trial

where SNR is written with ``repr`` (``None`` for noiseless points). The
per-trial seed seeds a ``numpy.random.default_rng`` whose first two 63-bit
draws seed the observation sampler and the solver.
"""
from __future__ import annotations

import configparser
import logging
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import EmptyModelError
from .frequency import MODEL_RESYNTHESIS, TENSOR_AVERAGE, reconstruct_signal
from .io import write_rows
from .signal_model import random_model, sample_observations, synthesize_signal
from .solver import LambdaSchedule, SolverConfig, solve
from .tensorization import FoldParams, fold, validate_params

log = logging.getLogger(__name__)

RSNR_CAP_DB = 300.0


class Rsnr(NamedTuple):
    db: float
    exact: bool


def _check_pair(x, x_hat):
    x = np.asarray(x, dtype=complex)
    x_hat = np.asarray(x_hat, dtype=complex)
    if x.shape != x_hat.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ValueError("reference signal is all zeros")
    return x, x_hat, norm


def normalized_error(x, x_hat) -> float:
    x, x_hat, norm = _check_pair(x, x_hat)
    return float(np.linalg.norm(x - x_hat) / norm)


def rsnr(x, x_hat) -> Rsnr:
    """``20 log10(|x| / |x - x_hat|)``, capped at 300 dB for an exact match."""
    x, x_hat, norm = _check_pair(x, x_hat)
    err = np.linalg.norm(x - x_hat)
    if err == 0:
        return Rsnr(RSNR_CAP_DB, True)
    return Rsnr(min(float(20 * np.log10(norm / err)), RSNR_CAP_DB), False)


def success(x, x_hat, threshold: float = 1e-3) -> bool:
    return normalized_error(x, x_hat) < threshold


def parse_axis(text) -> List[float]:
    """Parse ``"3:2:43"`` (inclusive MATLAB-style range) or ``"3, 5, 9"``."""
    if isinstance(text, (list, tuple)):
        return list(text)
    items = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [float(b) for b in part.split(":")]
            if len(bits) == 2:
                start, step, stop = bits[0], 1.0, bits[1]
            elif len(bits) == 3:
                start, step, stop = bits
            else:
                raise ValueError(f"bad range {part!r}")
            if step == 0:
                raise ValueError(f"zero step in {part!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            items.extend(start + step * i for i in range(max(count, 0)))
        else:
            items.append(float(part))
    return [int(v) if float(v).is_integer() else v for v in items]


@dataclass
class ExperimentConfig:
    n_total: int = 127
    l_dim: int = 63
    p_dim: int = 2
    k_values: List[int] = field(default_factory=lambda: parse_axis("3:2:43"))
    m_values: List[int] = field(default_factory=lambda: parse_axis("20:3:86"))
    snr_values: Optional[List[float]] = None
    trials: int = 100
    threshold: float = 1e-3
    solver: SolverConfig = field(default_factory=SolverConfig)
    base_seed: int = 0
    output_dir: str = "results"
    method: str = TENSOR_AVERAGE
    noise_aware: bool = True
    workers: int = 1

    def __post_init__(self):
        if not self.k_values or not self.m_values:
            raise ValueError("K and M axes must be nonempty")
        if self.snr_values is not None and not self.snr_values:
            raise ValueError("SNR axis must be nonempty when given")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.method not in (TENSOR_AVERAGE, MODEL_RESYNTHESIS):
            raise ValueError(f"unknown method {self.method!r}")
        FoldParams(self.n_total, self.l_dim, self.p_dim)

    @property
    def params(self) -> FoldParams:
        return FoldParams(self.n_total, self.l_dim, self.p_dim)


PRESETS: Dict[str, Dict[str, object]] = {
    "full": dict(k_values=parse_axis("3:2:43"), m_values=parse_axis("20:3:86"), trials=100),
    "quick": dict(k_values=[3, 7, 11], m_values=[20, 35, 50, 65, 80], trials=20),
    "snr": dict(k_values=[3], m_values=[25], snr_values=parse_axis("0:5:40"), trials=100),
    "snr-quick": dict(k_values=[3], m_values=[25], snr_values=[10, 20, 30, 40], trials=20),
    "m": dict(k_values=[3], m_values=parse_axis("20:5:80"), snr_values=[40], trials=100),
    "m-quick": dict(k_values=[3], m_values=[25, 40, 55, 70], snr_values=[40], trials=20),
}

_SOLVER_KEYS = {
    "k_init": int, "prune_ratio": float, "max_iters": int, "rel_tol": float,
    "seed": int, "lam": float, "extrapolate": None, "probe_pruning": None,
}
_SCHEDULE_KEYS = {"lambda_start": "start", "lambda_factor": "factor", "lambda_floor": "floor"}


def _as_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def build_config(values: Dict[str, object], base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Apply flat ``key -> value`` settings (strings or typed) on top of ``base``.

    Solver settings use a ``solver.`` prefix, e.g. ``solver.prune_ratio``;
    the schedule is set through ``solver.lambda_start``/``_factor``/``_floor``
    and ``solver.continuation = false`` switches it off.
    """
    base = base or ExperimentConfig()
    top: Dict[str, object] = {}
    solver_kw: Dict[str, object] = {}
    schedule_kw: Dict[str, object] = {}
    continuation = None
    for key, raw in values.items():
        if raw is None:
            continue
        if key.startswith("solver."):
            name = key[len("solver."):]
            if name in _SCHEDULE_KEYS:
                schedule_kw[_SCHEDULE_KEYS[name]] = float(raw)
            elif name == "continuation":
                continuation = _as_bool(raw)
            elif name in _SOLVER_KEYS:
                conv = _SOLVER_KEYS[name]
                solver_kw[name] = _as_bool(raw) if conv is None else conv(raw)
            else:
                raise ValueError(f"unknown solver setting {name!r}")
        elif key in ("k_values", "m_values"):
            top[key] = [int(v) for v in parse_axis(raw)]
        elif key == "snr_values":
            top[key] = None if str(raw).strip().lower() in ("", "none") else parse_axis(raw)
        elif key in ("n_total", "l_dim", "p_dim", "trials", "base_seed", "workers"):
            top[key] = int(raw)
        elif key == "threshold":
            top[key] = float(raw)
        elif key == "noise_aware":
            top[key] = _as_bool(raw)
        elif key in ("output_dir", "method"):
            top[key] = str(raw)
        else:
            raise ValueError(f"unknown experiment setting {key!r}")

    solver = replace(base.solver, **solver_kw)
    if continuation is False:
        solver = replace(solver, lambda_schedule=None)
    elif schedule_kw or continuation:
        current = solver.lambda_schedule or LambdaSchedule()
        solver = replace(solver, lambda_schedule=replace(current, **schedule_kw))
    if "n_total" in top and "l_dim" not in top:
        top["l_dim"] = FoldParams.default(int(top["n_total"]), int(top.get("p_dim", base.p_dim))).l_dim
    return replace(base, solver=solver, **top)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments, no section needed)."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    parser.read_string("[experiment]\n" + text)
    return build_config(dict(parser["experiment"]), base)


def trial_seed(base_seed: int, k: int, m: int, snr_db: Optional[float], trial: int) -> int:
    tag = f"{k}|{m}|{snr_db!r}".encode()
    return int(base_seed) ^ zlib.crc32(tag) ^ int(trial)


@dataclass
class TrialRecord:
    k: int
    m: int
    snr_db: Optional[float]
    trial: int
    seed: int
    success: bool
    normalized_error: float
    rsnr_db: float
    exact_match: bool
    rank_estimate: int
    iterations: int
    feasible: bool
    wall_time: float = field(default=0.0, compare=False)


TRIAL_FIELDS = [f.name for f in fields(TrialRecord) if f.name != "wall_time"]


def run_trial(config: ExperimentConfig, k: int, m: int, snr_db: Optional[float], trial: int) -> TrialRecord:
    """synthesize -> sample -> fold -> solve -> reconstruct, then score."""
    start = time.perf_counter()
    params = config.params
    seed = trial_seed(config.base_seed, k, m, snr_db, trial)
    rng = np.random.default_rng(seed)
    model = random_model(k, rng)
    sample_seed, solver_seed = (int(s) for s in rng.integers(0, 2**63, size=2))
    x = synthesize_signal(model, params.n_total)
    samples = sample_observations(x, m, snr_db, sample_seed)
    observed = fold(samples, params)
    solver_cfg = replace(config.solver, seed=solver_seed)
    if config.noise_aware and samples.noise_sigma:
        solver_cfg = replace(solver_cfg, epsilon=samples.noise_sigma ** 2 * observed.n_observed)
    result = solve(observed, solver_cfg)
    try:
        x_hat = reconstruct_signal(result, samples, params, config.method)
    except EmptyModelError:
        x_hat = np.zeros_like(x)
    err = normalized_error(x, x_hat)
    score = rsnr(x, x_hat)
    feasible = validate_params(params.n_total, k, params).acceptable
    return TrialRecord(
        k=k, m=m, snr_db=snr_db, trial=trial, seed=seed,
        success=err < config.threshold, normalized_error=err,
        rsnr_db=score.db, exact_match=score.exact,
        rank_estimate=result.rank_estimate, iterations=result.iterations,
        feasible=feasible, wall_time=time.perf_counter() - start,
    )


def _run_task(task):
    return run_trial(*task)


def run_trials(config: ExperimentConfig, points) -> List[TrialRecord]:
    """All trials for ``points`` (sequence of ``(K, M, SNR)``), in point/trial order."""
    tasks = [(config, k, m, snr, t) for k, m, snr in points for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_task, tasks, chunksize=1))
    records = []
    for task in tasks:
        records.append(_run_task(task))
        rec = records[-1]
        log.debug("K=%d M=%d SNR=%s trial=%d err=%.3g", rec.k, rec.m, rec.snr_db, rec.trial,
                  rec.normalized_error)
    return records


def _group(records: Sequence[TrialRecord]):
    groups: Dict[tuple, List[TrialRecord]] = {}
    for rec in records:
        groups.setdefault((rec.k, rec.m, rec.snr_db), []).append(rec)
    return groups


PHASE_FIELDS = ["K", "M", "trials", "successes", "success_rate", "mean_rsnr", "feasible"]
SWEEP_FIELDS = ["axis", "value", "K", "M", "snr_db", "trials", "mean_rsnr", "median_rsnr",
                "std_rsnr", "success_rate"]


def run_phase_transition(config: ExperimentConfig, out_dir=None, gnuplot: bool = False) -> List[dict]:
    """Success-rate grid over (M, K), noiseless.

    One row per point; also writes ``phase_transition.csv`` and
    ``phase_transition_trials.csv`` under ``out_dir`` when given.
    """
    if config.snr_values:
        raise ValueError("phase transitions are noiseless; drop snr_values")
    params = config.params
    points = [(int(k), int(m), None) for k in config.k_values for m in config.m_values]
    for k, m, _ in points:
        if m > params.n_total:
            raise ValueError(f"M={m} exceeds N={params.n_total}")
        report = validate_params(params.n_total, k, params)
        if not report.acceptable:
            log.warning("K=%d: %s", k, "; ".join(report.messages))
    records = run_trials(config, points)
    rows = []
    for (k, m, _), recs in _group(records).items():
        hits = sum(r.success for r in recs)
        rows.append(dict(
            K=k, M=m, trials=len(recs), successes=hits, success_rate=hits / len(recs),
            mean_rsnr=float(np.mean([r.rsnr_db for r in recs])),
            feasible=recs[0].feasible,
        ))
    if out_dir is not None:
        out = Path(out_dir)
        write_rows(out / "phase_transition.csv", rows, PHASE_FIELDS)
        write_rows(out / "phase_transition_trials.csv", (asdict(r) for r in records), TRIAL_FIELDS)
        if gnuplot:
            (out / "phase_transition.gp").write_text(_PHASE_GNUPLOT, encoding="utf-8")
    return rows


def run_sweep(config: ExperimentConfig, axis: str, out_dir=None, gnuplot: bool = False) -> List[dict]:
    """Mean/median/std RSNR along one axis (``"snr"`` or ``"m"``).

    The other coordinates must be single-valued.
    """
    if axis not in ("snr", "m"):
        raise ValueError("axis must be 'snr' or 'm'")
    snrs = list(config.snr_values) if config.snr_values else [None]
    if len(config.k_values) != 1:
        raise ValueError("a sweep needs exactly one K value")
    if axis == "snr":
        if len(config.m_values) != 1:
            raise ValueError("SNR sweep needs exactly one M value")
        if snrs == [None]:
            raise ValueError("SNR sweep needs snr_values")
    elif len(snrs) != 1:
        raise ValueError("M sweep needs a single SNR value (or none)")
    k = int(config.k_values[0])
    points = [(k, int(m), snr) for m in config.m_values for snr in snrs]
    records = run_trials(config, points)
    rows = []
    for (k, m, snr), recs in _group(records).items():
        values = np.array([r.rsnr_db for r in recs])
        rows.append(dict(
            axis=axis, value=snr if axis == "snr" else m, K=k, M=m, snr_db=snr,
            trials=len(recs), mean_rsnr=float(values.mean()),
            median_rsnr=float(np.median(values)), std_rsnr=float(values.std()),
            success_rate=float(np.mean([r.success for r in recs])),
        ))
    if out_dir is not None:
        out = Path(out_dir)
        write_rows(out / f"sweep_{axis}.csv", rows, SWEEP_FIELDS)
        write_rows(out / f"sweep_{axis}_trials.csv", (asdict(r) for r in records), TRIAL_FIELDS)
        if gnuplot:
            label = "SNR (dB)" if axis == "snr" else "M"
            (out / f"sweep_{axis}.gp").write_text(
                _SWEEP_GNUPLOT.format(axis=axis, label=label), encoding="utf-8")
    return rows


_PHASE_GNUPLOT = """\
set datafile separator ','
set xlabel 'M'
set ylabel 'K'
set cbrange [0:1]
set palette gray
set view map
plot 'phase_transition.csv' skip 1 using 2:1:5 with image notitle
"""

_SWEEP_GNUPLOT = """\
set datafile separator ','
set xlabel '{label}'
set ylabel 'RSNR (dB)'
plot 'sweep_{axis}.csv' skip 1 using 2:7 with linespoints title 'mean RSNR', \\
     '' skip 1 using 2:8 with linespoints title 'median RSNR'
"""
