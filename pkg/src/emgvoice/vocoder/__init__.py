"""Waveform generation from speech feature frames."""

from .mulaw import mulaw_encode, mulaw_decode, N_CLASSES
from .wavenet import (WaveNetConfig, WaveNetModel, init_wavenet, train_wavenet,
                      save_wavenet, load_wavenet)
from .griffinlim import mel_spectrogram_from_mfcc, griffin_lim, invert_mfcc

__all__ = [
    "mulaw_encode",
    "mulaw_decode",
    "N_CLASSES",
    "WaveNetConfig",
    "WaveNetModel",
    "init_wavenet",
    "train_wavenet",
    "save_wavenet",
    "load_wavenet",
    "mel_spectrogram_from_mfcc",
    "griffin_lim",
    "invert_mfcc",
]
