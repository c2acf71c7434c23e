import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from emgvoice.errors import DataError, NumericError
from emgvoice.signals import (
    FilterSpec,
    normalize_peak_rms,
    peak_rms,
    preprocess_audio,
    preprocess_emg,
    spectral_gate,
    triangular_kernel,
    triangular_split,
)

FS = 1000.0


def tone(freq, seconds=2.0, fs=FS, amp=1.0):
    t = np.arange(int(seconds * fs)) / fs
    return amp * np.sin(2 * np.pi * freq * t)


def rms(x):
    return float(np.sqrt(np.mean(np.asarray(x) ** 2)))


def test_dc_offset_removed():
    emg = np.full((2, 2000), 5.0)
    out = preprocess_emg(emg)
    assert np.max(np.abs(out)) / 5.0 < 1e-6


def test_dc_removed_under_signal():
    emg = (3.0 + tone(35.0, seconds=4.0))[None, :]
    out = preprocess_emg(emg)[0]
    # 2000 samples = exactly 70 periods of 35 Hz, so the tone averages out
    # and any residual mean is leaked offset
    assert abs(np.mean(out[1000:3000])) < 1e-5 * 3.0


def test_mains_tone_attenuated_30db():
    emg = tone(60.0, seconds=4.0)[None, :]
    out = preprocess_emg(emg)[0]
    # the Q=30 notch rings for ~0.16 s; measure past the edge transients
    core = slice(1000, -1000)
    assert rms(out[core]) <= rms(emg[0][core]) * 10 ** (-30 / 20)


@pytest.mark.parametrize("freq", [120.0, 180.0, 300.0])
def test_mains_harmonics_attenuated(freq):
    emg = tone(freq, seconds=4.0)[None, :]
    out = preprocess_emg(emg)[0]
    core = slice(1000, -1000)
    assert rms(out[core]) <= rms(emg[0][core]) * 10 ** (-30 / 20)


def test_notch_list_stops_below_nyquist():
    spec = FilterSpec()
    assert spec.notch_frequencies() == [60.0 * k for k in range(1, 9)]
    narrow = FilterSpec(sample_rate=119.0)
    assert narrow.notch_frequencies() == []


def test_passband_tone_unchanged_and_zero_phase():
    x = tone(35.0, seconds=4.0)
    out = preprocess_emg(x[None, :])[0]
    core = slice(1000, -1000)
    ratio = rms(out[core]) / rms(x[core])
    assert 10 ** (-1 / 20) < ratio < 10 ** (1 / 20), "35 Hz gain off by > 1 dB"
    # zero-phase filtering: the cross-correlation peak sits at lag 0
    xc = np.correlate(out[core], x[core], mode="full")
    assert int(np.argmax(xc)) == len(x[core]) - 1


def test_preprocess_emg_preserves_shape(rng):
    emg = rng.normal(size=(8, 1234))
    assert preprocess_emg(emg).shape == (8, 1234)


def test_preprocess_emg_rejects_bad_input(rng):
    with pytest.raises(DataError):
        preprocess_emg(rng.normal(size=300))
    with pytest.raises(DataError):
        preprocess_emg(np.zeros((2, 0)))
    bad = rng.normal(size=(2, 500))
    bad[1, 3] = np.nan
    with pytest.raises(NumericError):
        preprocess_emg(bad)


def test_preprocess_emg_rejects_too_short():
    with pytest.raises(DataError, match="too short"):
        preprocess_emg(np.zeros((1, 9)))


def test_filter_spec_validation():
    with pytest.raises(DataError):
        FilterSpec(highpass_hz=0.0)
    with pytest.raises(DataError):
        FilterSpec(highpass_hz=600.0, sample_rate=1000.0)
    with pytest.raises(DataError):
        FilterSpec(highpass_order=0)
    with pytest.raises(DataError):
        FilterSpec(notch_base_hz=-1.0)


# ------------------------------------------------------------------- audio

AUDIO_FS = 16000


def _noisy_tone(rng, sigma=0.01):
    """1 s noise, 1 s tone in noise, 1 s noise."""
    n = AUDIO_FS
    t = np.arange(n) / AUDIO_FS
    tone_part = 0.5 * np.sin(2 * np.pi * 1000.0 * t)
    noise = sigma * rng.normal(size=3 * n)
    x = noise.copy()
    x[n : 2 * n] += tone_part
    return x, n


def test_spectral_gate_suppresses_noise_keeps_tone(rng):
    x, n = _noisy_tone(rng)
    profile = 0.01 * rng.normal(size=AUDIO_FS)
    y = spectral_gate(x, noise_profile=profile)
    assert y.shape == x.shape
    assert rms(y[:n]) < 0.3 * rms(x[:n]), "noise-only span not gated"
    assert rms(y[n : 2 * n]) > 0.7 * rms(x[n : 2 * n]), "tone content lost"


def test_spectral_gate_self_estimates_noise(rng):
    # no profile: the floor is taken from the quietest 0.5 s of the input
    x, n = _noisy_tone(rng)
    y = spectral_gate(x)
    assert rms(y[:n]) < 0.3 * rms(x[:n])
    assert rms(y[n : 2 * n]) > 0.7 * rms(x[n : 2 * n])


def test_spectral_gate_short_input_passthrough(rng):
    x = rng.normal(size=100)
    np.testing.assert_array_equal(spectral_gate(x), x)


def test_spectral_gate_rejects_empty():
    with pytest.raises(DataError):
        spectral_gate(np.array([]))


def test_peak_rms_of_sine():
    x = np.sin(2 * np.pi * 440.0 * np.arange(AUDIO_FS) / AUDIO_FS)
    assert peak_rms(x) == pytest.approx(1 / np.sqrt(2), rel=1e-3)


def test_peak_rms_finds_loud_window(rng):
    x = 0.01 * rng.normal(size=2 * AUDIO_FS)
    x[8000 : 8000 + 4800] = 0.5  # one loud 0.3 s burst
    assert peak_rms(x) == pytest.approx(0.5, rel=0.05)


def test_normalize_peak_rms_hits_target(rng):
    x = 0.3 * rng.normal(size=AUDIO_FS)
    y, warned = normalize_peak_rms(x, target=0.1)
    assert not warned
    assert peak_rms(y) == pytest.approx(0.1, rel=1e-9)


def test_normalize_silence_warns():
    y, warned = normalize_peak_rms(np.zeros(1000))
    assert warned
    np.testing.assert_array_equal(y, np.zeros(1000))


def test_preprocess_audio_pipeline(rng):
    x, _ = _noisy_tone(rng)
    y, warned = preprocess_audio(x, noise_profile=0.01 * rng.normal(size=AUDIO_FS))
    assert not warned
    assert y.shape == x.shape
    assert peak_rms(y) == pytest.approx(0.1, rel=1e-9)


# ------------------------------------------------------------- band split

def test_triangular_kernel_shape():
    k = triangular_kernel()
    assert k.size == 13
    assert k.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(k, k[::-1])  # symmetric, hence linear phase


def test_triangular_split_passes_dc():
    x = np.full(200, 2.5)
    low, high = triangular_split(x)
    np.testing.assert_allclose(low, x)
    np.testing.assert_allclose(high, 0.0, atol=1e-12)


def test_triangular_split_rejects_short():
    with pytest.raises(DataError):
        triangular_split(np.ones(5))


@given(n=st.integers(min_value=13, max_value=400), seed=st.integers(0, 2**31))
@settings(max_examples=30, deadline=None)
def test_triangular_split_is_exact(n, seed):
    x = np.random.default_rng(seed).normal(size=n)
    low, high = triangular_split(x)
    np.testing.assert_allclose(low + high, x, atol=1e-12)


def test_triangular_split_separates_bands():
    slow = tone(10.0, seconds=1.0)
    fast = tone(400.0, seconds=1.0)
    low, high = triangular_split(slow + fast)
    core = slice(50, -50)
    # most of the 10 Hz energy stays low, most of the 400 Hz goes high
    assert rms(low[core] - slow[core]) < 0.2 * rms(slow[core])
    assert rms(high[core] - fast[core]) < 0.2 * rms(fast[core])
