import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpspectral.errors import InvalidModelError
from cpspectral.signal_model import (
    SampleSet, SpectralModel, complex_noise, random_model, sample_observations,
    synthesize_signal,
)

from oracles import signal_by_loops


def test_constant_tone():
    x = synthesize_signal(SpectralModel([0.0], [1.0]), 4)
    np.testing.assert_allclose(x, [1, 1, 1, 1])


def test_alternating_tone():
    x = synthesize_signal(SpectralModel([np.pi], [1.0]), 4)
    np.testing.assert_allclose(x, [1, -1, 1, -1], atol=1e-15)


def test_matches_loop_evaluation(rng):
    model = random_model(3, rng)
    x = synthesize_signal(model, 16)
    ref = signal_by_loops(model.omegas, model.amplitudes, 16)
    assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-12


@pytest.mark.parametrize("omegas", [[0.5, 0.5], [-0.1], [2 * np.pi], [np.nan]])
def test_invalid_models_rejected(omegas):
    with pytest.raises(InvalidModelError):
        synthesize_signal(SpectralModel(omegas, np.ones(len(omegas))), 8)


def test_zero_length_rejected():
    with pytest.raises(ValueError):
        synthesize_signal(SpectralModel([0.1], [1.0]), 0)


def test_full_observation_is_exact(rng):
    x = synthesize_signal(random_model(2, rng), 8)
    s = sample_observations(x, 8)
    assert s.noise_sigma is None
    np.testing.assert_array_equal(s.indices, np.arange(1, 9))
    np.testing.assert_array_equal(s.values, x)


def test_sampling_is_deterministic(rng):
    x = synthesize_signal(random_model(2, rng), 30)
    a = sample_observations(x, 3, rng_seed=7)
    b = sample_observations(x, 3, rng_seed=7)
    np.testing.assert_array_equal(a.indices, b.indices)
    np.testing.assert_array_equal(a.values, b.values)


def test_noisy_sampling_is_bit_identical(rng):
    x = synthesize_signal(random_model(3, rng), 50)
    a = sample_observations(x, 20, snr_db=15.0, rng_seed=3)
    b = sample_observations(x, 20, snr_db=15.0, rng_seed=3)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.noise_sigma == b.noise_sigma


def test_too_many_samples():
    with pytest.raises(ValueError):
        sample_observations(np.ones(5), 6)


def test_noise_variance_at_40db():
    # unit-power signal: sigma^2 should be 1e-4
    x = np.exp(-1j * 0.3 * np.arange(100_000))
    s = sample_observations(x, 100_000, snr_db=40.0, rng_seed=1)
    assert s.noise_sigma == pytest.approx(1e-2)
    noise = s.values - x[s.indices - 1]
    var = np.mean(np.abs(noise) ** 2)
    assert abs(var - 1e-4) < 0.05 * 1e-4


def test_noise_is_circular():
    w = complex_noise(1.0, 200_000, np.random.default_rng(0))
    assert np.var(w.real) == pytest.approx(0.5, rel=0.02)
    assert np.var(w.imag) == pytest.approx(0.5, rel=0.02)
    assert abs(np.mean(w.real * w.imag)) < 0.01


def test_sample_set_invariants():
    with pytest.raises(ValueError):
        SampleSet(5, [2, 2], [1, 1])
    with pytest.raises(ValueError):
        SampleSet(5, [0, 1], [1, 1])
    with pytest.raises(ValueError):
        SampleSet(5, [1, 6], [1, 1])


def test_random_model_amplitudes_are_standard_normal_parts():
    model = random_model(50_000, np.random.default_rng(2))
    assert np.var(model.amplitudes.real) == pytest.approx(1.0, rel=0.03)
    assert np.var(model.amplitudes.imag) == pytest.approx(1.0, rel=0.03)
    assert model.omegas.min() >= 0 and model.omegas.max() < 2 * np.pi


omega_st = st.floats(0, 2 * np.pi, exclude_max=True, allow_nan=False)
amp_st = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(omega_st, amp_st), min_size=1, max_size=4, unique_by=lambda t: t[0]),
       st.lists(st.tuples(omega_st, amp_st), min_size=1, max_size=4, unique_by=lambda t: t[0]))
def test_linearity(first, second):
    m1 = SpectralModel.from_components(first)
    m2 = SpectralModel.from_components(second)
    if np.intersect1d(m1.omegas, m2.omegas).size:
        return
    n = 33
    joint = synthesize_signal(m1.concatenate(m2), n)
    summed = synthesize_signal(m1, n) + synthesize_signal(m2, n)
    scale = max(np.linalg.norm(summed), np.linalg.norm(synthesize_signal(m1, n)), 1e-300)
    assert np.linalg.norm(joint - summed) <= 1e-12 * scale


@settings(max_examples=50, deadline=None)
@given(omega_st, amp_st)
def test_conjugate_symmetry(omega, amp):
    n = 40
    x = synthesize_signal(SpectralModel([omega], [amp]), n)
    mirrored = np.mod(2 * np.pi - omega, 2 * np.pi)
    if mirrored >= 2 * np.pi:
        mirrored = 0.0
    y = synthesize_signal(SpectralModel([mirrored], [np.conj(amp)]), n)
    scale = max(np.linalg.norm(x), 1e-300)
    assert np.linalg.norm(np.conj(x) - y) <= 1e-12 * scale
