"""Cross-mode alignment: DTW, CCA projections, and target transfer."""

from .dtw import BACKEND, AlignmentPath, dtw, first_pair_mapping, transfer_targets
from .costs import emg_cost, cca_cost, full_cost
from .cca import DEFAULT_DIMS, CcaProjection, collect_aligned_pairs, fit_cca

__all__ = [
    "BACKEND",
    "AlignmentPath",
    "dtw",
    "first_pair_mapping",
    "transfer_targets",
    "emg_cost",
    "cca_cost",
    "full_cost",
    "DEFAULT_DIMS",
    "CcaProjection",
    "collect_aligned_pairs",
    "fit_cca",
]
