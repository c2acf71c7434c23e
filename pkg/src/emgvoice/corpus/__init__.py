"""Corpora of silent/vocalized EMG utterances: loading, validation, splits."""

from .types import (
    EMG_CHANNELS,
    EMG_SAMPLE_RATE,
    AUDIO_SAMPLE_RATE,
    SILENT,
    VOCALIZED,
    ElectrodeMask,
    Utterance,
    UtteranceRecord,
    CorpusManifest,
)
from .manifest import load_manifest, save_manifest, load_utterance
from .splits import make_splits, mask_electrodes
from . import io, synthetic

__all__ = [
    "EMG_CHANNELS",
    "EMG_SAMPLE_RATE",
    "AUDIO_SAMPLE_RATE",
    "SILENT",
    "VOCALIZED",
    "ElectrodeMask",
    "Utterance",
    "UtteranceRecord",
    "CorpusManifest",
    "load_manifest",
    "save_manifest",
    "load_utterance",
    "make_splits",
    "mask_electrodes",
    "io",
    "synthetic",
]
