"""Canonical correlation analysis for paired EMG feature frames.

Solver: center both sides, ridge-regularize the covariances, whiten via
symmetric inverse square roots, then SVD the whitened cross-covariance.
Reported correlations are the empirical per-dimension correlations of the
projected training pairs (the ridge is a solver detail, so a perfectly
linear relation still reports exactly 1).
"""

from dataclasses import dataclass

import numpy as np

from emgvoice.errors import DataError, NumericError
from emgvoice.features.sequence import FeatureSequence

DEFAULT_DIMS = 15
RIDGE = 1e-6


@dataclass
class CcaProjection:
    p_silent: np.ndarray  # (D, k)
    p_vocalized: np.ndarray  # (D, k)
    mean_silent: np.ndarray
    mean_vocalized: np.ndarray
    correlations: np.ndarray  # (k,) descending, in [0, 1]

    @property
    def dims(self):
        return self.p_silent.shape[1]

    def project_silent(self, rows):
        return (np.asarray(rows, dtype=np.float64) - self.mean_silent) @ self.p_silent

    def project_vocalized(self, rows):
        return (np.asarray(rows, dtype=np.float64) - self.mean_vocalized) @ self.p_vocalized

    def to_dict(self):
        return {
            "p_silent": self.p_silent.tolist(),
            "p_vocalized": self.p_vocalized.tolist(),
            "mean_silent": self.mean_silent.tolist(),
            "mean_vocalized": self.mean_vocalized.tolist(),
            "correlations": self.correlations.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            p_silent=np.array(d["p_silent"], dtype=np.float64),
            p_vocalized=np.array(d["p_vocalized"], dtype=np.float64),
            mean_silent=np.array(d["mean_silent"], dtype=np.float64),
            mean_vocalized=np.array(d["mean_vocalized"], dtype=np.float64),
            correlations=np.array(d["correlations"], dtype=np.float64),
        )


def _inv_sqrt(matrix):
    """Symmetric inverse square root via eigendecomposition."""
    vals, vecs = np.linalg.eigh(matrix)
    if vals.min() <= 0:
        raise NumericError("covariance not positive definite even after regularization")
    return (vecs / np.sqrt(vals)) @ vecs.T


def fit_cca(silent_rows, vocalized_rows, dims=DEFAULT_DIMS, ridge=RIDGE):
    """Fit paired projections maximizing per-dimension correlation.

    silent_rows / vocalized_rows: (N, D) aligned frame pairs aggregated over
    the training set. Covariances use population (1/N) normalization, so
    projected training pairs have unit variance per dimension.
    """
    xs = np.asarray(silent_rows, dtype=np.float64)
    xv = np.asarray(vocalized_rows, dtype=np.float64)
    if xs.ndim != 2 or xs.shape != xv.shape:
        raise DataError("paired inputs must be (N, D) arrays of equal shape")
    n, d = xs.shape
    if dims < 1 or dims > d:
        raise DataError(f"requested {dims} dims from {d}-dimensional data")
    if n <= d:
        raise DataError(f"need more pairs ({n}) than dimensions ({d})")

    mean_s = xs.mean(axis=0)
    mean_v = xv.mean(axis=0)
    cs = xs - mean_s
    cv = xv - mean_v
    cov_ss = (cs.T @ cs) / n
    cov_vv = (cv.T @ cv) / n
    cov_sv = (cs.T @ cv) / n

    cov_ss_r = cov_ss + (ridge * np.trace(cov_ss) / d) * np.eye(d)
    cov_vv_r = cov_vv + (ridge * np.trace(cov_vv) / d) * np.eye(d)
    w_s = _inv_sqrt(cov_ss_r)
    w_v = _inv_sqrt(cov_vv_r)

    u, _, vt = np.linalg.svd(w_s @ cov_sv @ w_v)
    p_s = w_s @ u[:, :dims]
    p_v = w_v @ vt[:dims].T

    # empirical correlations of the projected training pairs
    zs = cs @ p_s
    zv = cv @ p_v
    num = np.sum(zs * zv, axis=0)
    den = np.sqrt(np.sum(zs**2, axis=0) * np.sum(zv**2, axis=0))
    corr = num / np.maximum(den, 1e-300)

    order = np.argsort(-corr, kind="stable")
    return CcaProjection(
        p_silent=p_s[:, order],
        p_vocalized=p_v[:, order],
        mean_silent=mean_s,
        mean_vocalized=mean_v,
        correlations=corr[order],
    )


def collect_aligned_pairs(sequence_pairs, cost_fn, dtw_fn):
    """Aggregate aligned feature rows over parallel utterances.

    For each (silent, vocalized) sequence pair, aligns with the given cost
    and collects every (i, j) pair on the path. Returns two (N, D) arrays.
    """
    silent_rows = []
    vocalized_rows = []
    for silent, vocalized in sequence_pairs:
        path = dtw_fn(cost_fn(silent, vocalized))
        s = silent.data if isinstance(silent, FeatureSequence) else np.asarray(silent)
        v = vocalized.data if isinstance(vocalized, FeatureSequence) else np.asarray(vocalized)
        silent_rows.append(s[path.path_i])
        vocalized_rows.append(v[path.path_j])
    if not silent_rows:
        raise DataError("no sequence pairs to aggregate")
    return np.concatenate(silent_rows), np.concatenate(vocalized_rows)
