"""Mu-law companding between waveforms and 256 discrete classes.

The compressor y = sign(x) * ln(1 + 255|x|) / ln(256) spends most of the
code budget near zero where speech lives.  Quantization bins are centered
on a uniform grid in compressed space that includes y = 0 exactly, so
silence encodes to class 128 and decodes back to exactly zero.
"""

import warnings

import numpy as np

N_CLASSES = 256
MU = N_CLASSES - 1

_HALF = (N_CLASSES - 1) / 2.0  # 127.5: grid scale in compressed space


def mulaw_encode(audio):
    """Quantize samples in [-1, 1] to integer classes 0..255.

    Samples outside [-1, 1] are clamped first (with a warning); the codec is
    monotone, so ordering of samples is preserved.
    """
    x = np.asarray(audio, dtype=np.float64)
    if np.any(np.abs(x) > 1.0):
        warnings.warn("audio exceeds [-1, 1]; clamping before mu-law encode")
        x = np.clip(x, -1.0, 1.0)
    y = np.sign(x) * np.log1p(MU * np.abs(x)) / np.log(N_CLASSES)
    codes = np.rint(y * _HALF).astype(np.int64) + N_CLASSES // 2
    return np.clip(codes, 0, N_CLASSES - 1)


def mulaw_decode(codes):
    """Expand integer classes back to waveform samples in [-1, 1].

    Each class decodes to its bin center in compressed space; the two edge
    bins are half-open, so their nominal centers fall just outside the grid
    and are clamped to +-1.
    """
    c = np.asarray(codes)
    if np.any((c < 0) | (c > N_CLASSES - 1)):
        raise ValueError("mu-law codes must lie in [0, 255]")
    y = np.clip((c.astype(np.float64) - N_CLASSES // 2) / _HALF, -1.0, 1.0)
    return np.sign(y) * (np.power(N_CLASSES, np.abs(y)) - 1.0) / MU
