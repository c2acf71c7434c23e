"""Time-major feature matrices with a kind tag and normalization state."""

from dataclasses import dataclass, field

import numpy as np

from emgvoice.errors import DataError

KIND_EMG = "emg"
KIND_MFCC = "mfcc"

MFCC_DIM = 26
EMG_FEATURES_PER_CHANNEL = 14


@dataclass
class FeatureSequence:
    data: np.ndarray  # (T, D) float64 rows in time order at 100 Hz
    kind: str
    normalized: bool = field(default=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DataError("feature data must be 2-D (frames, dims)")
        if not np.isfinite(data).all():
            raise DataError("feature data contains non-finite entries")
        if self.kind == KIND_MFCC:
            if data.shape[1] != MFCC_DIM:
                raise DataError(f"mfcc features must have {MFCC_DIM} dims, got {data.shape[1]}")
        elif self.kind == KIND_EMG:
            if data.shape[1] % EMG_FEATURES_PER_CHANNEL:
                raise DataError(
                    f"emg feature dim {data.shape[1]} is not a multiple of {EMG_FEATURES_PER_CHANNEL}"
                )
        else:
            raise DataError(f"unknown feature kind {self.kind!r}")
        self.data = data

    def __len__(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]
