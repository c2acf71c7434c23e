"""Deterministic signal conditioning for raw EMG and audio.

EMG: zero-phase Butterworth high-pass (drift removal) followed by cascaded
zero-phase notches at the mains frequency and its harmonics. Audio:
stationary spectral gating and peak short-window RMS normalization. All
operations preserve sample count and are pure functions.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy.ndimage import uniform_filter

from emgvoice.errors import DataError, NumericError


@dataclass(frozen=True)
class FilterSpec:
    highpass_hz: float = 2.0
    highpass_order: int = 3
    notch_base_hz: float = 60.0
    notch_q: float = 30.0
    sample_rate: float = 1000.0

    def __post_init__(self):
        nyq = self.sample_rate / 2.0
        if not 0.0 < self.highpass_hz < nyq:
            raise DataError(f"high-pass cutoff {self.highpass_hz} outside (0, {nyq})")
        if self.highpass_order < 1:
            raise DataError("high-pass order must be >= 1")
        if self.notch_base_hz <= 0:
            raise DataError("notch base frequency must be positive")

    def notch_frequencies(self):
        """Mains harmonics strictly below Nyquist."""
        nyq = self.sample_rate / 2.0
        freqs = []
        f = self.notch_base_hz
        while f < nyq:
            freqs.append(f)
            f += self.notch_base_hz
        return freqs


def _zero_phase(b, a, x):
    # odd-reflection padding of 3x the filter order keeps edge transients small
    order = max(len(a), len(b)) - 1
    padlen = 3 * order
    if x.shape[-1] <= padlen:
        raise DataError(f"signal too short for zero-phase filtering (need > {padlen} samples)")
    return sps.filtfilt(b, a, x, padtype="odd", padlen=padlen)


def preprocess_emg(emg, spec=None):
    """Condition raw EMG channels; output shape equals input shape."""
    if spec is None:
        spec = FilterSpec()
    emg = np.asarray(emg, dtype=np.float64)
    if emg.ndim != 2 or emg.shape[1] == 0:
        raise DataError("EMG must be a nonempty (channels, samples) array")
    if not np.isfinite(emg).all():
        raise NumericError("EMG contains non-finite samples")

    b_hp, a_hp = sps.butter(spec.highpass_order, spec.highpass_hz, btype="highpass", fs=spec.sample_rate)
    out = _zero_phase(b_hp, a_hp, emg)
    for f0 in spec.notch_frequencies():
        b_n, a_n = sps.iirnotch(f0, spec.notch_q, fs=spec.sample_rate)
        out = _zero_phase(b_n, a_n, out)
    return out


def spectral_gate(audio, noise_profile=None, sample_rate=16000, n_std=1.5):
    """Stationary spectral gate.

    The per-bin threshold is mean + n_std * std of the noise magnitude
    spectrum, taken from noise_profile when given, otherwise from the
    lowest-energy 0.5 s stretch of the input. The binary keep-mask is
    softened by 3x3 time-frequency averaging before being applied.
    """
    audio = np.asarray(audio, dtype=np.float64)
    if audio.size == 0:
        raise DataError("audio must be nonempty")
    win = int(0.025 * sample_rate)
    hop = int(0.010 * sample_rate)
    if audio.size < win:
        return audio.copy()

    freqs, times, z = sps.stft(audio, fs=sample_rate, nperseg=win, noverlap=win - hop, window="hann")
    mag = np.abs(z)

    if noise_profile is not None and np.asarray(noise_profile).size >= win:
        _, _, zn = sps.stft(
            np.asarray(noise_profile, dtype=np.float64),
            fs=sample_rate,
            nperseg=win,
            noverlap=win - hop,
            window="hann",
        )
        noise_mag = np.abs(zn)
    else:
        # lowest-energy 0.5 s run of frames approximates the noise floor
        n_noise = max(min(int(0.5 / 0.010), mag.shape[1]), 1)
        frame_energy = np.sum(mag**2, axis=0)
        window_energy = np.convolve(frame_energy, np.ones(n_noise), mode="valid")
        start = int(np.argmin(window_energy))
        noise_mag = mag[:, start : start + n_noise]

    threshold = noise_mag.mean(axis=1) + n_std * noise_mag.std(axis=1)
    keep = (mag > threshold[:, None]).astype(np.float64)
    mask = uniform_filter(keep, size=3, mode="nearest")
    _, cleaned = sps.istft(z * mask, fs=sample_rate, nperseg=win, noverlap=win - hop, window="hann")

    if cleaned.size < audio.size:
        cleaned = np.pad(cleaned, (0, audio.size - cleaned.size))
    return cleaned[: audio.size]


def peak_rms(audio, sample_rate=16000, window_seconds=0.3):
    """Largest RMS over sliding short windows (window hop = 1/10 window)."""
    audio = np.asarray(audio, dtype=np.float64)
    w = min(int(window_seconds * sample_rate), audio.size)
    if w < 1:
        return 0.0
    hop = max(w // 10, 1)
    sq = audio**2
    csum = np.concatenate([[0.0], np.cumsum(sq)])
    starts = np.arange(0, audio.size - w + 1, hop)
    means = (csum[starts + w] - csum[starts]) / w
    return float(np.sqrt(means.max()))


def normalize_peak_rms(audio, target=0.1, sample_rate=16000, window_seconds=0.3):
    """Scale so the peak short-window RMS hits the target level.

    Returns (audio, warned): silent input comes back unchanged with the
    warning flag set, since a gain is undefined.
    """
    peak = peak_rms(audio, sample_rate, window_seconds)
    if peak <= 0.0:
        return np.asarray(audio, dtype=np.float64).copy(), True
    return np.asarray(audio, dtype=np.float64) * (target / peak), False


def preprocess_audio(audio, noise_profile=None, sample_rate=16000, target_rms=0.1):
    """Gate noise, then normalize loudness. Returns (audio, warned)."""
    gated = spectral_gate(audio, noise_profile=noise_profile, sample_rate=sample_rate)
    return normalize_peak_rms(gated, target=target_rms, sample_rate=sample_rate)


# Low/high band split used by the EMG time-domain features. The kernel is a
# 13-tap triangle (a length-7 boxcar convolved with itself) with unit DC
# gain; its first spectral null sits at 1000/7 ~ 143 Hz, the closest
# realizable cutoff to the nominal 134 Hz.
def triangular_kernel(sample_rate=1000.0, cutoff_hz=134.0):
    box_len = int(round(sample_rate / cutoff_hz))
    box = np.ones(box_len) / box_len
    tri = np.convolve(box, box)
    return tri / tri.sum()


def triangular_split(channel, kernel=None):
    """Split one channel into (x_low, x_high) with x_low + x_high == x.

    x_low is the channel convolved (same length, edge-replicated padding)
    with the unit-gain triangular kernel; x_high is the residual.
    """
    x = np.asarray(channel, dtype=np.float64)
    if kernel is None:
        kernel = triangular_kernel()
    k = kernel.size
    if x.size < k:
        raise DataError(f"channel too short for triangular split (need >= {k} samples)")
    half = k // 2
    padded = np.pad(x, half, mode="edge")
    x_low = np.convolve(padded, kernel, mode="valid")
    return x_low, x - x_low
