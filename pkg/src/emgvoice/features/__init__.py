"""Frame-synchronous feature sequences at 100 Hz: EMG (14 per channel) and MFCC (26)."""

from .framing import FrameConfig, frame_count, frame_signal
from .sequence import FeatureSequence, KIND_EMG, KIND_MFCC
from .emg import emg_td_frame, emg_features
from .mfcc import mfcc_features, mel_filterbank
from .normalize import Normalizer, fit_normalizer

__all__ = [
    "FrameConfig",
    "frame_count",
    "frame_signal",
    "FeatureSequence",
    "KIND_EMG",
    "KIND_MFCC",
    "emg_td_frame",
    "emg_features",
    "mfcc_features",
    "mel_filterbank",
    "Normalizer",
    "fit_normalizer",
]
