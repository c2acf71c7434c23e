"""Frame geometry shared by EMG and audio featurization.

27 ms frames with a 10 ms hop give 27/10 samples at 1000 Hz and 432/160 at
16 kHz, so duration-matched EMG and audio produce the same frame count.
"""

from dataclasses import dataclass

import numpy as np

from emgvoice.errors import DataError


@dataclass(frozen=True)
class FrameConfig:
    frame_ms: float = 27.0
    hop_ms: float = 10.0

    def __post_init__(self):
        if self.frame_ms <= 0 or self.hop_ms <= 0:
            raise DataError("frame and hop must be positive")
        if self.hop_ms > self.frame_ms:
            raise DataError("hop must not exceed frame length")

    def frame_samples(self, sample_rate):
        return int(round(self.frame_ms * sample_rate / 1000.0))

    def hop_samples(self, sample_rate):
        return int(round(self.hop_ms * sample_rate / 1000.0))


def frame_count(n_samples, frame_len, hop):
    if n_samples < frame_len:
        raise DataError(f"signal too short: {n_samples} samples < frame length {frame_len}")
    return (n_samples - frame_len) // hop + 1


def frame_signal(x, frame_len, hop):
    """Strided (n_frames, frame_len) view of a 1-D signal."""
    x = np.ascontiguousarray(x)
    n = frame_count(x.size, frame_len, hop)
    return np.lib.stride_tricks.sliding_window_view(x, frame_len)[:: hop][:n]
