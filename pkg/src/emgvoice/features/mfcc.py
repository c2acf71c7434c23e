"""Mel-frequency cepstral coefficients: 26 per 27 ms frame, 10 ms hop.

432-sample Hann frames, 512-point power spectra, a 40-filter mel bank over
0..8 kHz, floored log, and an orthonormal DCT-II keeping coefficients 0..25
(c0 included).
"""

import numpy as np
from scipy.fft import dct
from scipy.signal import get_window

from emgvoice.errors import DataError

from .framing import FrameConfig, frame_signal
from .sequence import KIND_MFCC, MFCC_DIM, FeatureSequence

N_FFT = 512
N_MELS = 40
LOG_FLOOR = 1e-10


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels=N_MELS, n_fft=N_FFT, sample_rate=16000, fmin=0.0, fmax=8000.0):
    """Triangular mel filters as an (n_mels, n_fft//2 + 1) weight matrix."""
    mel_points = np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2)
    hz_points = _mel_to_hz(mel_points)
    bin_freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)

    bank = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        lo, center, hi = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        up = (bin_freqs - lo) / max(center - lo, 1e-12)
        down = (hi - bin_freqs) / max(hi - center, 1e-12)
        bank[m] = np.maximum(0.0, np.minimum(up, down))
    return bank


_BANK_CACHE = {}


def _bank(sample_rate):
    if sample_rate not in _BANK_CACHE:
        _BANK_CACHE[sample_rate] = mel_filterbank(sample_rate=sample_rate, fmax=sample_rate / 2.0)
    return _BANK_CACHE[sample_rate]


def mfcc_features(audio, cfg=None, sample_rate=16000):
    """Featurize preprocessed audio into a (frames, 26) MFCC sequence."""
    if cfg is None:
        cfg = FrameConfig()
    audio = np.asarray(audio, dtype=np.float64)
    if audio.ndim != 1:
        raise DataError("audio must be 1-D")
    flen = cfg.frame_samples(sample_rate)
    hop = cfg.hop_samples(sample_rate)

    frames = frame_signal(audio, flen, hop)
    window = get_window("hann", flen)
    spectrum = np.fft.rfft(frames * window, n=N_FFT, axis=1)
    power = np.abs(spectrum) ** 2
    mel_power = power @ _bank(sample_rate).T
    log_mel = np.log(np.maximum(mel_power, LOG_FLOOR))
    coeffs = dct(log_mel, type=2, norm="ortho", axis=1)[:, :MFCC_DIM]
    return FeatureSequence(data=coeffs, kind=KIND_MFCC)
