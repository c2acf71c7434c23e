"""Minimum-cost monotonic alignment between two feature sequences.

The dynamic program fills d[i,j] = delta[i,j] + min(d[i-1,j], d[i,j-1],
d[i-1,j-1]) and backtracks to a path from (0,0) to (n-1,m-1). Because a
path may visit several j for one i, the per-frame mapping keeps the first
pair of each run, giving a total nondecreasing map a[i] -> j.

Backend selection happens at import: the compiled kernel if it built,
otherwise the pure-Python one. EMGVOICE_NO_NATIVE=1 forces the fallback.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import _dtw_py

if os.environ.get("EMGVOICE_NO_NATIVE"):
    _kernel = _dtw_py.dtw_kernel
    BACKEND = "python"
else:
    try:
        from emgvoice._native.dtw import dtw_kernel as _kernel

        BACKEND = "native"
    except ImportError:
        _kernel = _dtw_py.dtw_kernel
        BACKEND = "python"


@dataclass
class AlignmentPath:
    """A monotonic alignment path and its first-pair frame mapping."""

    path_i: np.ndarray
    path_j: np.ndarray
    mapping: np.ndarray  # length n; mapping[i] = first j paired with i
    total_cost: float

    @property
    def pairs(self):
        return list(zip(self.path_i.tolist(), self.path_j.tolist()))

    def to_dict(self, cost_type="", lam=None):
        d = {
            "version": 1,
            "cost_type": cost_type,
            "mapping": self.mapping.tolist(),
            "total_cost": self.total_cost,
        }
        if lam is not None:
            d["lambda"] = lam
        return d


def first_pair_mapping(path_i, path_j, n):
    """Reduce a path to a total map i -> j, keeping the first j of each i-run."""
    mapping = np.empty(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for i, j in zip(path_i, path_j):
        if not seen[i]:
            mapping[i] = j
            seen[i] = True
    if not seen.all():
        raise ValueError("alignment path does not cover every source frame")
    return mapping


def dtw(costs):
    """Align two sequences given their local-cost matrix.

    costs: (n, m) array of finite, nonnegative local costs.
    Returns an AlignmentPath whose total cost is the global minimum over
    all monotonic paths.
    """
    costs = np.ascontiguousarray(costs, dtype=np.float64)
    if costs.ndim != 2 or costs.size == 0:
        raise ValueError("cost matrix must be a nonempty 2-D array")
    if not np.isfinite(costs).all():
        raise ValueError("cost matrix contains non-finite entries")
    total, path_i, path_j = _kernel(costs)
    mapping = first_pair_mapping(path_i, path_j, costs.shape[0])
    return AlignmentPath(path_i=path_i, path_j=path_j, mapping=mapping, total_cost=float(total))


def transfer_targets(audio_features, mapping):
    """Warp vocalized audio features onto the silent timeline: row i <- mapping[i]."""
    m = audio_features.shape[0]
    mapping = np.asarray(mapping)
    if mapping.size and (mapping.min() < 0 or mapping.max() >= m):
        raise ValueError("mapping index out of range")
    return audio_features[mapping]


def save_alignment(path, alignment, cost_type, lam=None, config_hash=None):
    d = alignment.to_dict(cost_type=cost_type, lam=lam)
    if config_hash:
        d["config_hash"] = config_hash
    with open(path, "w", encoding="utf-8") as f:
        json.dump(d, f)


def load_alignment(path):
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    mapping = np.array(d["mapping"], dtype=np.int64)
    return d, mapping
