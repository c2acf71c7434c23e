"""Local-cost matrices for cross-mode alignment.

Three cost definitions, from coarse to refined: raw feature distance,
distance between canonically-correlated projections, and the projected
distance plus a weighted predicted-audio distance.
"""

import numpy as np
from scipy.spatial.distance import cdist

from emgvoice.errors import DataError
from emgvoice.features.sequence import FeatureSequence


def _rows(x, kind=None):
    if isinstance(x, FeatureSequence):
        if kind is not None and x.kind != kind:
            raise DataError(f"expected {kind} features, got {x.kind}")
        return x.data
    return np.asarray(x, dtype=np.float64)


def emg_cost(silent, vocalized):
    """delta[i, j] = ||silent[i] - vocalized[j]||_2 over raw EMG features."""
    a = _rows(silent, "emg")
    b = _rows(vocalized, "emg")
    if a.shape[1] != b.shape[1]:
        raise DataError(f"feature dims differ: {a.shape[1]} vs {b.shape[1]}")
    return cdist(a, b, metric="euclidean")


def cca_cost(silent, vocalized, projection):
    """Distance between the paired canonical projections of the two sides."""
    a = projection.project_silent(_rows(silent, "emg"))
    b = projection.project_vocalized(_rows(vocalized, "emg"))
    return cdist(a, b, metric="euclidean")


def full_cost(silent, vocalized, predicted_audio, vocalized_audio, projection, lam=10.0):
    """CCA cost plus lam * distance between predicted and actual audio features."""
    if lam < 0:
        raise DataError("lambda must be nonnegative")
    base = cca_cost(silent, vocalized, projection)
    pred = _rows(predicted_audio, "mfcc")
    target = _rows(vocalized_audio, "mfcc")
    if pred.shape[0] != base.shape[0]:
        raise DataError(
            f"predicted audio frames ({pred.shape[0]}) != silent EMG frames ({base.shape[0]})"
        )
    if target.shape[0] != base.shape[1]:
        raise DataError(
            f"vocalized audio frames ({target.shape[0]}) != vocalized EMG frames ({base.shape[1]})"
        )
    return base + lam * cdist(pred, target, metric="euclidean")
