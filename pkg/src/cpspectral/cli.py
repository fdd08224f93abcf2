"""Command-line entry point: ``cpspectral {generate,solve,phase-transition,sweep}``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .errors import EmptyModelError
from .experiments import (
    PRESETS, ExperimentConfig, build_config, load_config, normalized_error,
    run_phase_transition, run_sweep, rsnr,
)
from .frequency import (
    MODEL_RESYNTHESIS, TENSOR_AVERAGE, estimate_model, extract_frequencies, reconstruct_signal,
)
from .signal_model import random_model, sample_observations, synthesize_signal
from .solver import solve
from .tensorization import FoldParams, fold, validate_params


def _add_solver_flags(parser):
    g = parser.add_argument_group("solver")
    g.add_argument("--k-init", type=int)
    g.add_argument("--prune-ratio", type=float)
    g.add_argument("--max-iters", type=int)
    g.add_argument("--rel-tol", type=float)
    g.add_argument("--solver-seed", type=int)
    g.add_argument("--lambda-start", type=float)
    g.add_argument("--lambda-factor", type=float)
    g.add_argument("--lambda-floor", type=float)


def _solver_overrides(args) -> dict:
    names = {
        "k_init": "k_init", "prune_ratio": "prune_ratio", "max_iters": "max_iters",
        "rel_tol": "rel_tol", "solver_seed": "seed", "lambda_start": "lambda_start",
        "lambda_factor": "lambda_factor", "lambda_floor": "lambda_floor",
    }
    return {f"solver.{dst}": getattr(args, src) for src, dst in names.items()
            if getattr(args, src, None) is not None}


def _cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    model = random_model(args.k, rng)
    x = synthesize_signal(model, args.n)
    samples = sample_observations(x, args.m, args.snr_db, int(rng.integers(0, 2**63)))
    io.write_samples(args.out, samples, model)
    print(f"wrote {samples.m_count} of {args.n} samples to {args.out} "
          f"(truth: {io.truth_path(args.out)})")
    return 0


def _cmd_solve(args) -> int:
    samples = io.read_samples(args.inp, args.n)
    n_total = samples.n_total
    params = FoldParams(n_total, args.l, args.p) if args.l else FoldParams.default(n_total, args.p)
    truth_file = io.truth_path(args.inp)
    truth = io.read_model(truth_file)[0] if truth_file.exists() else None
    report = validate_params(n_total, truth.n_components if truth else None, params)
    for msg in report.messages:
        print(f"note: {msg}")

    base = build_config(_solver_overrides(args)).solver
    observed = fold(samples, params)
    if samples.noise_sigma and not args.ignore_noise:
        base = replace(base, epsilon=samples.noise_sigma ** 2 * observed.n_observed)
    result = solve(observed, base)
    print(f"tensor {params.dims}, observed cells {observed.n_observed}")
    print(f"rank estimate {result.rank_estimate} after {result.iterations} sweeps "
          f"(masked residual {result.masked_residual:.3e})")

    x_avg = reconstruct_signal(result, samples, params, TENSOR_AVERAGE)
    try:
        model = estimate_model(result, samples, params)
        x_model = reconstruct_signal(result, samples, params, MODEL_RESYNTHESIS)
    except EmptyModelError:
        model, x_model = None, np.zeros(n_total, dtype=complex)
    if model is not None:
        print("omega             amplitude")
        for w, a in zip(model.omegas, model.amplitudes):
            print(f"{w:.10f}  {a.real:+.6f}{a.imag:+.6f}j")
    if truth is not None:
        x = synthesize_signal(truth, n_total)
        for name, est in ((TENSOR_AVERAGE, x_avg), (MODEL_RESYNTHESIS, x_model)):
            print(f"{name}: RSNR {rsnr(x, est).db:.2f} dB, "
                  f"normalized error {normalized_error(x, est):.3e}")
    if args.out:
        out = Path(args.out)
        if model is not None:
            conf = [e.confidence for e in extract_frequencies(result.factors, params)]
            io.write_model(out, model, n_total, samples.noise_sigma, confidence=conf)
        else:
            io.write_rows(out, [], ["omega", "amp_re", "amp_im", "confidence"])
        signal_file = out.with_name(out.stem + ".signal.csv")
        rows = [dict(index=n + 1, tensor_average=x_avg[n], model_resynthesis=x_model[n])
                for n in range(n_total)]
        io.write_rows(signal_file, rows, ["index", "tensor_average", "model_resynthesis"])
        print(f"wrote {out} and {signal_file}")
    return 0


def _experiment_config(args) -> ExperimentConfig:
    config = ExperimentConfig()
    if args.preset:
        config = build_config(PRESETS[args.preset], config)
    if args.config:
        config = load_config(args.config, config)
    overrides = _solver_overrides(args)
    for key in ("k_values", "m_values", "snr_values", "trials", "threshold", "base_seed",
                "workers", "method", "n_total", "l_dim", "p_dim"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return build_config(overrides, config)


def _add_experiment_flags(parser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--out-dir")
    parser.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    parser.add_argument("--k", dest="k_values", help="K axis, e.g. 3:2:43 or 3,7,11")
    parser.add_argument("--m", dest="m_values", help="M axis, e.g. 20:3:86")
    parser.add_argument("--snr", dest="snr_values", help="SNR axis in dB")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--seed", dest="base_seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--method", choices=[TENSOR_AVERAGE, MODEL_RESYNTHESIS])
    parser.add_argument("--n", dest="n_total", type=int)
    parser.add_argument("--l", dest="l_dim", type=int)
    parser.add_argument("--p", dest="p_dim", type=int)
    _add_solver_flags(parser)


def _print_rows(rows, keys):
    print(",".join(keys))
    for row in rows:
        print(",".join(f"{row[k]:.4g}" if isinstance(row[k], float) else str(row[k]) for k in keys))


def _cmd_phase(args) -> int:
    config = _experiment_config(args)
    out_dir = args.out_dir or config.output_dir
    rows = run_phase_transition(config, out_dir, gnuplot=args.gnuplot)
    _print_rows(rows, ["K", "M", "success_rate", "mean_rsnr"])
    return 0


def _cmd_sweep(args) -> int:
    config = _experiment_config(args)
    out_dir = args.out_dir or config.output_dir
    rows = run_sweep(config, args.axis, out_dir, gnuplot=args.gnuplot)
    _print_rows(rows, ["value", "mean_rsnr", "median_rsnr", "std_rsnr", "success_rate"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpspectral",
        description="Line spectral estimation by CP completion of a folded sample tensor.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="draw a random model and observe a subset of it")
    gen.add_argument("--n", type=int, default=127)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--snr-db", type=float)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_generate)

    sol = sub.add_parser("solve", help="recover frequencies from a samples file")
    sol.add_argument("--in", dest="inp", required=True)
    sol.add_argument("--n", type=int, help="signal length if the file has no header")
    sol.add_argument("--l", type=int, help="second tensor dimension (default: balanced)")
    sol.add_argument("--p", type=int, default=2)
    sol.add_argument("--out")
    sol.add_argument("--ignore-noise", action="store_true",
                     help="do not stop at the noise level recorded in the samples file")
    _add_solver_flags(sol)
    sol.set_defaults(func=_cmd_solve)

    pt = sub.add_parser("phase-transition", help="success-rate grid over (M, K)")
    _add_experiment_flags(pt)
    pt.set_defaults(func=_cmd_phase)

    sw = sub.add_parser("sweep", help="RSNR versus SNR or M")
    sw.add_argument("--axis", choices=["snr", "m"], required=True)
    _add_experiment_flags(sw)
    sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
