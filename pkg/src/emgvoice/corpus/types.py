"""Core corpus datatypes.

An utterance is one recorded example: 8 EMG channels at 1000 Hz, optional
16 kHz audio, the prompt text, a session id, and the speaking mode. A
silent recording may link to the vocalized recording of the same text from
the same session through parallel_id (and vice versa).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from emgvoice.errors import DataError

EMG_CHANNELS = 8
EMG_SAMPLE_RATE = 1000
AUDIO_SAMPLE_RATE = 16000

SILENT = "silent"
VOCALIZED = "vocalized"
MODES = (SILENT, VOCALIZED)

# Electrode numbering is 1-based and fixed by the recording hardware layout:
# 1 left cheek above mouth, 2 left chin corner, 3 below chin, 4 throat,
# 5 mid-jaw right, 6 right cheek below mouth, 7 right upper cheek,
# 8 back of right cheek.
ELECTRODE_LOCATIONS = (
    "left cheek just above mouth",
    "left corner of chin",
    "below chin back 3 cm",
    "throat 3 cm left from Adam's apple",
    "mid-jaw right",
    "right cheek just below mouth",
    "right cheek 2 cm from nose",
    "back of right cheek, 4 cm in front of ear",
)


@dataclass(frozen=True)
class ElectrodeMask:
    """Boolean selection over the 8 electrodes; at least one must stay on."""

    enabled: tuple

    def __post_init__(self):
        if len(self.enabled) != EMG_CHANNELS:
            raise DataError(f"electrode mask must have length {EMG_CHANNELS}")
        if not any(self.enabled):
            raise DataError("electrode mask disables every channel")

    @classmethod
    def all_on(cls):
        return cls(enabled=(True,) * EMG_CHANNELS)

    @classmethod
    def from_removed(cls, removed):
        """Build a mask from 1-based electrode numbers to drop, e.g. {5, 7, 8}."""
        removed = set(int(r) for r in removed)
        bad = [r for r in removed if not 1 <= r <= EMG_CHANNELS]
        if bad:
            raise DataError(f"electrode numbers out of range: {bad}")
        return cls(enabled=tuple(i + 1 not in removed for i in range(EMG_CHANNELS)))

    @property
    def n_enabled(self):
        return sum(self.enabled)

    def indices(self):
        return [i for i, on in enumerate(self.enabled) if on]


@dataclass
class Utterance:
    id: str
    text: str
    session_id: str
    mode: str
    emg: np.ndarray  # (channels, T) float64 at 1000 Hz
    audio: np.ndarray | None = None  # (T,) float64 at 16000 Hz
    parallel_id: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise DataError(f"utterance {self.id}: unknown mode {self.mode!r}")
        emg = np.asarray(self.emg, dtype=np.float64)
        if emg.ndim != 2 or emg.shape[0] < 1:
            raise DataError(f"utterance {self.id}: EMG must be (channels, samples)")
        object.__setattr__(self, "emg", emg)
        if self.audio is not None:
            audio = np.asarray(self.audio, dtype=np.float64)
            if audio.ndim != 1:
                raise DataError(f"utterance {self.id}: audio must be 1-D")
            object.__setattr__(self, "audio", audio)
        if self.mode == VOCALIZED and self.audio is None:
            raise DataError(f"utterance {self.id}: vocalized mode requires audio")

    @property
    def n_channels(self):
        return self.emg.shape[0]

    @property
    def n_samples(self):
        return self.emg.shape[1]


@dataclass(frozen=True)
class UtteranceRecord:
    """Manifest entry: metadata plus file locations, no signal data."""

    id: str
    text: str
    session_id: str
    mode: str
    emg_path: str
    audio_path: str | None = None
    parallel_id: str | None = None


@dataclass(frozen=True)
class CorpusManifest:
    """Validated, immutable description of a corpus on disk.

    Paths in records are relative to root. Split assignments are optional
    until make_splits runs; they partition utterance ids disjointly.
    """

    root: str
    domain: str
    sessions: tuple
    records: dict  # id -> UtteranceRecord (treated as read-only)
    splits: dict = field(default_factory=dict)  # name -> tuple of ids
    # optional per-session noise calibration recordings (relative wav paths)
    noise_profiles: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def ids(self):
        return list(self.records)

    def record(self, utt_id):
        try:
            return self.records[utt_id]
        except KeyError:
            raise DataError(f"unknown utterance id {utt_id!r}") from None

    def split_ids(self, name):
        return list(self.splits.get(name, ()))

    def with_splits(self, splits):
        return replace(self, splits={k: tuple(v) for k, v in splits.items()})

    def select(self, mode=None, parallel=None):
        """Record ids filtered by mode and by having a parallel counterpart."""
        out = []
        for uid, rec in self.records.items():
            if mode is not None and rec.mode != mode:
                continue
            if parallel is not None and (rec.parallel_id is not None) != parallel:
                continue
            out.append(uid)
        return out
