"""Binary containers: raw EMG, PCM WAV audio, and cached feature matrices.

EMG layout: header {magic "EMG1", channel count u16 LE, sample rate u32 LE}
followed by float32 LE samples interleaved across channels (sample-major).
Feature caches reuse the idea with a kind tag and a provenance hash so a
config change invalidates them.
"""

import struct
import wave

import numpy as np

from emgvoice.errors import DataError

EMG_MAGIC = b"EMG1"
FEATURE_MAGIC = b"FEA1"

_FEATURE_KINDS = {"emg": 0, "mfcc": 1}
_FEATURE_CODES = {v: k for k, v in _FEATURE_KINDS.items()}


def write_emg(path, emg, sample_rate=1000):
    """Write a (channels, T) array as interleaved float32."""
    emg = np.asarray(emg)
    if emg.ndim != 2:
        raise DataError("EMG array must be 2-D (channels, samples)")
    channels, _ = emg.shape
    interleaved = np.ascontiguousarray(emg.T, dtype="<f4")
    with open(path, "wb") as f:
        f.write(EMG_MAGIC)
        f.write(struct.pack("<HI", channels, int(sample_rate)))
        f.write(interleaved.tobytes())


def read_emg(path):
    """Read an EMG file; returns ((channels, T) float64, sample_rate)."""
    with open(path, "rb") as f:
        header = f.read(10)
        if len(header) < 10 or header[:4] != EMG_MAGIC:
            raise DataError(f"{path}: not an EMG container")
        channels, rate = struct.unpack("<HI", header[4:10])
        if channels < 1:
            raise DataError(f"{path}: invalid channel count {channels}")
        payload = f.read()
    if len(payload) % (4 * channels):
        raise DataError(f"{path}: truncated sample data")
    flat = np.frombuffer(payload, dtype="<f4")
    emg = flat.reshape(-1, channels).T.astype(np.float64)
    return emg, rate


def write_wav(path, audio, sample_rate=16000):
    """Write float samples in [-1, 1] as 16-bit PCM mono."""
    audio = np.asarray(audio, dtype=np.float64)
    pcm = np.clip(np.round(audio * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(sample_rate))
        w.writeframes(pcm.tobytes())


def read_wav(path):
    """Read 16-bit PCM mono WAV; returns ((T,) float64 in [-1, 1], rate)."""
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise DataError(f"{path}: expected mono audio")
        if w.getsampwidth() != 2:
            raise DataError(f"{path}: expected 16-bit PCM")
        rate = w.getframerate()
        frames = w.readframes(w.getnframes())
    audio = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32767.0
    return audio, rate


def write_features(path, data, kind, provenance="", sample_rate=100):
    """Cache a (T, D) feature matrix with its kind and provenance hash."""
    if kind not in _FEATURE_KINDS:
        raise DataError(f"unknown feature kind {kind!r}")
    data = np.ascontiguousarray(data, dtype="<f4")
    if data.ndim != 2:
        raise DataError("feature matrix must be 2-D")
    prov = provenance.encode("ascii")
    with open(path, "wb") as f:
        f.write(FEATURE_MAGIC)
        f.write(struct.pack("<BHIH", _FEATURE_KINDS[kind], data.shape[1], int(sample_rate), len(prov)))
        f.write(prov)
        f.write(data.tobytes())


def read_features(path):
    """Read a feature cache; returns ((T, D) float64, kind, provenance)."""
    with open(path, "rb") as f:
        header = f.read(13)
        if len(header) < 13 or header[:4] != FEATURE_MAGIC:
            raise DataError(f"{path}: not a feature container")
        code, dim, _rate, prov_len = struct.unpack("<BHIH", header[4:13])
        prov = f.read(prov_len).decode("ascii")
        payload = f.read()
    if code not in _FEATURE_CODES:
        raise DataError(f"{path}: unknown feature kind code {code}")
    if dim == 0 or len(payload) % (4 * dim):
        raise DataError(f"{path}: truncated feature data")
    data = np.frombuffer(payload, dtype="<f4").reshape(-1, dim).astype(np.float64)
    return data, _FEATURE_CODES[code], prov
