"""EMG featurization: 5 time-domain values + 9 short-spectrum magnitudes per channel.

Each channel is first split into low/high bands. Per 27 ms frame the
time-domain features are [mean(low^2), mean(low), mean(high^2),
mean(|high|), ZCR(high)], followed by the magnitudes of bins 0..8 of a
16-point DFT taken over the Hann-windowed central 16 samples of the frame.
"""

import numpy as np
from scipy.signal import get_window

from emgvoice import signals
from emgvoice.errors import DataError

from .framing import FrameConfig, frame_signal
from .sequence import KIND_EMG, FeatureSequence

STFT_POINTS = 16
STFT_BINS = 9  # bins 0..8 of a 16-point DFT

_STFT_WINDOW = get_window("hann", STFT_POINTS)


def zero_crossing_rate(frames):
    """Fraction of strict sign changes between consecutive samples, per row."""
    products = frames[..., 1:] * frames[..., :-1]
    return np.sum(products < 0, axis=-1) / (frames.shape[-1] - 1)


def emg_td_frame(low_frame, high_frame):
    """The five time-domain features for one frame of one channel."""
    low = np.asarray(low_frame, dtype=np.float64)
    high = np.asarray(high_frame, dtype=np.float64)
    if low.shape != high.shape or low.size < 2:
        raise DataError("low/high frames must match and have length >= 2")
    return np.array(
        [
            np.mean(low**2),
            np.mean(low),
            np.mean(high**2),
            np.mean(np.abs(high)),
            zero_crossing_rate(high),
        ]
    )


def _spectral_magnitudes(frames):
    """|DFT| bins 0..8 of the Hann-windowed central 16 samples of each frame."""
    flen = frames.shape[1]
    if flen >= STFT_POINTS:
        start = (flen - STFT_POINTS) // 2
        clipped = frames[:, start : start + STFT_POINTS]
    else:
        pad = STFT_POINTS - flen
        clipped = np.pad(frames, ((0, 0), (pad // 2, pad - pad // 2)))
    return np.abs(np.fft.rfft(clipped * _STFT_WINDOW, n=STFT_POINTS, axis=1))


def emg_features(emg, cfg=None, sample_rate=1000):
    """Featurize preprocessed EMG (C, T) into a (frames, 14*C) sequence."""
    if cfg is None:
        cfg = FrameConfig()
    emg = np.asarray(emg, dtype=np.float64)
    if emg.ndim != 2:
        raise DataError("EMG must be (channels, samples)")
    flen = cfg.frame_samples(sample_rate)
    hop = cfg.hop_samples(sample_rate)

    blocks = []
    for channel in emg:
        x_low, x_high = signals.triangular_split(channel)
        frames = frame_signal(channel, flen, hop)
        low = frame_signal(x_low, flen, hop)
        high = frame_signal(x_high, flen, hop)
        td = np.column_stack(
            [
                np.mean(low**2, axis=1),
                np.mean(low, axis=1),
                np.mean(high**2, axis=1),
                np.mean(np.abs(high), axis=1),
                zero_crossing_rate(high),
            ]
        )
        blocks.append(np.hstack([td, _spectral_magnitudes(frames)]))
    return FeatureSequence(data=np.hstack(blocks), kind=KIND_EMG)
