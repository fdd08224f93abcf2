"""Mixtures of complex sinusoids and random partial observations of them.

Sample indices are 1-based everywhere in this module, so that sample ``n``
of a signal is ``sum_k a_k * exp(-1j * omega_k * (n - 1))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidModelError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SpectralModel:
    """A line spectrum: ``K`` (frequency, complex amplitude) pairs.

    Frequencies are in radians and must lie in ``[0, 2*pi)`` and be pairwise
    distinct.
    """

    omegas: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        omegas = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        if omegas.ndim != 1 or omegas.shape != amplitudes.shape:
            raise InvalidModelError(
                f"omegas {omegas.shape} and amplitudes {amplitudes.shape} must be "
                "1-D arrays of equal length"
            )
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_components(cls, components: Iterable[Tuple[float, complex]]) -> "SpectralModel":
        pairs = list(components)
        if not pairs:
            return cls(np.zeros(0), np.zeros(0, dtype=complex))
        omegas, amps = zip(*pairs)
        return cls(np.array(omegas, dtype=float), np.array(amps, dtype=complex))

    @property
    def n_components(self) -> int:
        return len(self.omegas)

    @property
    def components(self):
        return list(zip(self.omegas.tolist(), self.amplitudes.tolist()))

    def validate(self) -> None:
        """Raise :class:`InvalidModelError` if an invariant is violated."""
        if not np.all(np.isfinite(self.omegas)) or not np.all(np.isfinite(self.amplitudes)):
            raise InvalidModelError("model contains non-finite values")
        if np.any(self.omegas < 0) or np.any(self.omegas >= TWO_PI):
            raise InvalidModelError("every frequency must lie in [0, 2*pi)")
        if len(np.unique(self.omegas)) != len(self.omegas):
            raise InvalidModelError("frequencies must be pairwise distinct")

    def concatenate(self, other: "SpectralModel") -> "SpectralModel":
        return SpectralModel(
            np.concatenate([self.omegas, other.omegas]),
            np.concatenate([self.amplitudes, other.amplitudes]),
        )


@dataclass(frozen=True)
class SampleSet:
    """``M`` observed samples out of a length-``N`` signal.

    ``indices`` are 1-based and strictly increasing. ``noise_sigma`` is the
    per-sample standard deviation of the complex noise that was added, or
    ``None`` for noiseless observations.
    """

    n_total: int
    indices: np.ndarray
    values: np.ndarray
    noise_sigma: Optional[float] = None

    def __post_init__(self):
        indices = np.atleast_1d(np.asarray(self.indices, dtype=np.int64))
        values = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if self.n_total < 1:
            raise ValueError("n_total must be positive")
        if indices.shape != values.shape or indices.ndim != 1:
            raise ValueError("indices and values must be 1-D arrays of equal length")
        if indices.size:
            if indices[0] < 1 or indices[-1] > self.n_total:
                raise ValueError(f"indices must lie in 1..{self.n_total}")
            if np.any(np.diff(indices) <= 0):
                raise ValueError("indices must be strictly increasing")
        if self.noise_sigma is not None and self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @property
    def m_count(self) -> int:
        return len(self.indices)

    @property
    def observations(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @classmethod
    def full(cls, signal: Sequence[complex]) -> "SampleSet":
        signal = np.asarray(signal, dtype=complex)
        return cls(len(signal), np.arange(1, len(signal) + 1), signal.copy())


def synthesize_signal(model: SpectralModel, n_total: int) -> np.ndarray:
    """Evaluate ``x_n = sum_k a_k exp(-j omega_k (n - 1))`` for ``n = 1..N``."""
    if n_total < 1:
        raise ValueError("n_total must be at least 1")
    model.validate()
    n = np.arange(n_total)
    return np.exp(-1j * np.outer(n, model.omegas)) @ model.amplitudes


def random_model(n_components: int, rng: np.random.Generator) -> SpectralModel:
    """Draw frequencies uniformly on ``[0, 2*pi)`` and amplitudes whose real
    and imaginary parts are i.i.d. standard normal."""
    omegas = rng.uniform(0.0, TWO_PI, n_components)
    # a uniform draw can round up to exactly 2*pi
    omegas = np.where(omegas >= TWO_PI, 0.0, omegas)
    amplitudes = rng.standard_normal(n_components) + 1j * rng.standard_normal(n_components)
    return SpectralModel(omegas, amplitudes)


def noise_sigma_for_snr(signal: np.ndarray, snr_db: float) -> float:
    """Per-sample noise standard deviation giving ``snr_db`` against the mean
    per-sample power of the full signal."""
    power = np.mean(np.abs(signal) ** 2)
    return float(np.sqrt(power * 10.0 ** (-snr_db / 10.0)))


def complex_noise(sigma: float, size, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise with ``E|w|^2 = sigma**2``."""
    scale = sigma / np.sqrt(2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_observations(
    signal: Sequence[complex],
    m_count: int,
    snr_db: Optional[float] = None,
    rng_seed: int = 0,
) -> SampleSet:
    """Observe ``m_count`` samples drawn uniformly without replacement.

    When ``snr_db`` is given, circular complex Gaussian noise is added to the
    observed samples with variance ``mean(|x|^2) * 10**(-snr_db/10)``.
    """
    signal = np.asarray(signal, dtype=complex)
    n_total = len(signal)
    if m_count < 1 or m_count > n_total:
        raise ValueError(f"m_count must be in 1..{n_total}, got {m_count}")
    rng = np.random.default_rng(rng_seed)
    picked = np.sort(rng.choice(n_total, size=m_count, replace=False))
    values = signal[picked].copy()
    sigma = None
    if snr_db is not None:
        sigma = noise_sigma_for_snr(signal, snr_db)
        values = values + complex_noise(sigma, m_count, rng)
    return SampleSet(n_total, picked + 1, values, sigma)
