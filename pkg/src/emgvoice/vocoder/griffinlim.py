"""Waveform recovery from speech features without a trained model.

Inverts the feature chain step by step: undo the cosine transform (the 14
discarded coefficients come back as zeros), exponentiate to mel power, map
to a linear spectrogram through the filterbank pseudo-inverse, then recover
phase by alternating projections between the spectrogram and signal domains.
The result is intelligible but robotic; it exists so the pipeline produces
audio before any waveform model has been trained.
"""

import warnings

import numpy as np
from scipy.fft import idct
from scipy.signal import stft, istft
from scipy.signal.windows import hann

from ..errors import DataError
from ..features.mfcc import N_FFT, N_MELS, mel_filterbank
from ..features.sequence import FeatureSequence, KIND_MFCC, MFCC_DIM

WINDOW = 432
HOP = 160
N_ITER = 60

_PINV_CACHE = {}


def _mel_pinv(sample_rate):
    if sample_rate not in _PINV_CACHE:
        bank = mel_filterbank(sample_rate=sample_rate)
        _PINV_CACHE[sample_rate] = np.linalg.pinv(bank)
    return _PINV_CACHE[sample_rate]


def _rows(features):
    if isinstance(features, FeatureSequence):
        if features.kind != KIND_MFCC:
            raise DataError("expected speech features, got %s" % features.kind)
        if features.normalized:
            raise DataError("features must be denormalized before inversion")
        return features.data
    rows = np.asarray(features, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != MFCC_DIM:
        raise DataError("expected (frames, %d) features" % MFCC_DIM)
    return rows


def mel_spectrogram_from_mfcc(features):
    """Undo truncation, cosine transform, and log: (T, 26) -> mel power (T, 40)."""
    rows = _rows(features)
    padded = np.zeros((rows.shape[0], N_MELS))
    padded[:, :MFCC_DIM] = rows
    log_mel = idct(padded, type=2, norm="ortho", axis=1)
    return np.exp(log_mel)


def griffin_lim(magnitude, n_iter=N_ITER, sample_rate=16000):
    """Recover a waveform whose spectrogram magnitude matches the given one.

    magnitude: (T, 1 + n_fft/2) linear magnitudes.  Phase starts at zero and
    is refined by n_iter alternating projections, so the output is fully
    deterministic.  Returns exactly HOP * T samples (the synthesis windows
    extend past that span; the excess is split between both ends and cut).
    """
    mag = np.asarray(magnitude, dtype=np.float64)
    if mag.ndim != 2 or mag.shape[1] != N_FFT // 2 + 1:
        raise DataError("expected (frames, %d) magnitudes" % (N_FFT // 2 + 1))
    n_frames = mag.shape[0]
    window = hann(WINDOW, sym=False)
    kw = dict(window=window, nperseg=WINDOW, noverlap=WINDOW - HOP, nfft=N_FFT)
    spec = mag.T.astype(np.complex128)
    with warnings.catch_warnings():
        # without boundary frames the window sum dips to zero right at the
        # signal ends; those samples are cut by the final crop anyway
        warnings.filterwarnings("ignore", message="NOLA")
        for _ in range(n_iter):
            _, x = istft(spec, input_onesided=True, boundary=False, **kw)
            _, _, rebuilt = stft(x, boundary=None, padded=False, **kw)
            rebuilt = rebuilt[:, : mag.shape[0]]
            phase = rebuilt / np.maximum(np.abs(rebuilt), 1e-12)
            spec = mag.T * phase
        _, x = istft(spec, input_onesided=True, boundary=False, **kw)
    lead = (WINDOW - HOP) // 2
    out = x[lead : lead + HOP * n_frames]
    peak = np.max(np.abs(out))
    if peak > 1.0:
        out = out / peak
    return out


def invert_mfcc(features, n_iter=N_ITER, sample_rate=16000):
    """Full inversion: speech feature rows (T, 26) to a waveform (160*T,)."""
    mel_power = mel_spectrogram_from_mfcc(features)
    # pseudo-inverse can go slightly negative where filters overlap
    linear_power = np.clip(mel_power @ _mel_pinv(sample_rate).T, 0.0, None)
    return griffin_lim(np.sqrt(linear_power), n_iter=n_iter, sample_rate=sample_rate)
