"""Per-dimension standardization fitted on the training split only."""

from dataclasses import dataclass

import numpy as np

from emgvoice.errors import DataError

from .sequence import FeatureSequence

STD_FLOOR = 1e-8


@dataclass
class Normalizer:
    mean: np.ndarray
    std: np.ndarray  # floored at STD_FLOOR, never zero

    def apply(self, seq):
        """Standardize a FeatureSequence (or bare array). Not idempotent."""
        if isinstance(seq, FeatureSequence):
            return FeatureSequence(
                data=(seq.data - self.mean) / self.std, kind=seq.kind, normalized=True
            )
        return (np.asarray(seq, dtype=np.float64) - self.mean) / self.std

    def invert(self, seq):
        if isinstance(seq, FeatureSequence):
            return FeatureSequence(
                data=seq.data * self.std + self.mean, kind=seq.kind, normalized=False
            )
        return np.asarray(seq, dtype=np.float64) * self.std + self.mean

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(mean=np.array(d["mean"], dtype=np.float64), std=np.array(d["std"], dtype=np.float64))


def fit_normalizer(sequences):
    """Population mean/std over all frames of all sequences of one kind."""
    sequences = list(sequences)
    if not sequences:
        raise DataError("cannot fit a normalizer on zero sequences")
    kinds = {s.kind for s in sequences}
    if len(kinds) != 1:
        raise DataError(f"mixed feature kinds: {sorted(kinds)}")
    stacked = np.concatenate([s.data for s in sequences], axis=0)
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), STD_FLOOR)
    return Normalizer(mean=mean, std=std)
