"""Reading frequencies and amplitudes off Vandermonde-structured factors.

Column conventions for a component with frequency ``w``:

* mode 1: ``a[m] = exp(-j w (m-1))``, each step multiplies by ``exp(-j w)``;
* mode 2: ``b[j] = exp(-j w (L-j))``, each step multiplies by ``exp(+j w)``;
* mode 3: ``c[i] = amp * exp(-j w (i-1))``, like mode 1.

Each column is scaled by an unknown complex constant, which the lag-1
phase estimator ignores.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .cp_core import CpFactors, component_energies, reconstruct
from .errors import DegenerateColumnError, EmptyModelError, UnderdeterminedError
from .signal_model import TWO_PI, SampleSet, SpectralModel, synthesize_signal
from .solver import SolveResult
from .tensorization import FoldParams, unfold_to_signal

MODE_SIGNS = (-1, +1, -1)
CONDITION_LIMIT = 1e10
RIDGE_RELATIVE = 1e-10

TENSOR_AVERAGE = "tensor-average"
MODEL_RESYNTHESIS = "model-resynthesis"


@dataclass(frozen=True)
class FrequencyEstimate:
    omega: float
    amplitude: complex = complex("nan")
    confidence: float = 0.0


def _wrap(omega: float) -> float:
    omega = float(np.mod(omega, TWO_PI))
    return 0.0 if omega >= TWO_PI else omega


def _lag_product(v: np.ndarray) -> complex:
    return complex(np.sum(v[1:] * v[:-1].conj()))


def column_frequency(v: Sequence[complex], sign: int) -> float:
    """Frequency of a geometric column from its energy-weighted lag-1 phase.

    ``sign`` is the direction of the phase progression: -1 if consecutive
    entries are multiplied by ``exp(-j w)``, +1 for ``exp(+j w)``.
    """
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("column must be a vector of length >= 2")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    if not np.any(v):
        raise DegenerateColumnError("all-zero column has no frequency")
    lag = _lag_product(v)
    if lag == 0:
        raise DegenerateColumnError("column has no lag-1 correlation")
    return _wrap(sign * np.angle(lag))


def extract_frequencies(factors: CpFactors, params: FoldParams) -> List[FrequencyEstimate]:
    """Per-component frequency fused across modes, strongest component first.

    The per-mode estimates are combined by a circular mean weighted by the
    number of lag-1 products in each mode (``dim - 1``).
    """
    if tuple(factors.dims) != tuple(params.dims):
        raise ValueError(f"factor dims {factors.dims} differ from fold dims {params.dims}")
    energies = component_energies(factors)
    out = []
    for k in range(factors.rank):
        acc = 0j
        for mat, sign in zip(factors.factors, MODE_SIGNS):
            if mat.shape[0] < 2:
                continue
            try:
                omega = column_frequency(mat[:, k], sign)
            except DegenerateColumnError:
                continue
            acc += (mat.shape[0] - 1) * np.exp(1j * omega)
        if acc == 0:
            warnings.warn(f"component {k} is degenerate in every mode; dropped", RuntimeWarning)
            continue
        out.append(FrequencyEstimate(_wrap(np.angle(acc)), confidence=float(energies[k])))
    out.sort(key=lambda e: -e.confidence)
    return out


def estimate_amplitudes(samples: SampleSet, omegas: Sequence[float]) -> np.ndarray:
    """Least-squares amplitudes of known frequencies against the observed samples."""
    omegas = np.asarray(omegas, dtype=float)
    if omegas.size > samples.m_count:
        raise UnderdeterminedError(
            f"{omegas.size} frequencies but only {samples.m_count} observations"
        )
    if omegas.size == 0:
        return np.zeros(0, dtype=complex)
    design = np.exp(-1j * np.outer(samples.indices - 1, omegas))
    s = np.linalg.svd(design, compute_uv=False)
    if s[-1] == 0 or s[0] / s[-1] > CONDITION_LIMIT:
        warnings.warn(
            "ill-conditioned amplitude system; using ridge-regularized solution",
            RuntimeWarning,
        )
        ridge = RIDGE_RELATIVE * s[0] ** 2
        gram = design.conj().T @ design + ridge * np.eye(omegas.size)
        return np.linalg.solve(gram, design.conj().T @ samples.values)
    return np.linalg.lstsq(design, samples.values, rcond=None)[0]


def estimate_model(result: SolveResult, samples: SampleSet, params: FoldParams) -> SpectralModel:
    """Frequencies from the factors, amplitudes by least squares."""
    estimates = extract_frequencies(result.factors, params)
    if not estimates:
        raise EmptyModelError("solver returned no components")
    omegas = np.array([e.omega for e in estimates])
    amplitudes = estimate_amplitudes(samples, omegas)
    return SpectralModel(omegas, amplitudes)


def reconstruct_signal(
    result: SolveResult,
    samples: SampleSet,
    params: FoldParams,
    method: str = TENSOR_AVERAGE,
) -> np.ndarray:
    """Full-length signal estimate.

    ``tensor-average`` de-hankelizes the completed tensor; ``model-resynthesis``
    re-evaluates the sinusoid model from extracted frequencies and
    least-squares amplitudes.
    """
    if method == TENSOR_AVERAGE:
        return unfold_to_signal(reconstruct(result.factors), params)
    if method == MODEL_RESYNTHESIS:
        model = estimate_model(result, samples, params)
        # merged duplicates would break the distinct-frequency invariant
        model = _merge_duplicates(model)
        return synthesize_signal(model, params.n_total)
    raise ValueError(f"unknown reconstruction method {method!r}")


def _merge_duplicates(model: SpectralModel) -> SpectralModel:
    omegas, inverse = np.unique(model.omegas, return_inverse=True)
    if len(omegas) == len(model.omegas):
        return model
    amps = np.zeros(len(omegas), dtype=complex)
    np.add.at(amps, inverse, model.amplitudes)
    return SpectralModel(omegas, amps)
