"""Split assignment, training-set subsetting, and electrode masking.

Validation and test sets are drawn only from silent recordings that have a
vocalized counterpart; those counterparts are reserved (never placed in the
training pool) so no test information leaks through the training path.
"""

from dataclasses import replace

import numpy as np

from emgvoice.errors import DataError

from .types import SILENT, VOCALIZED


def parallel_pairs(manifest):
    """All (silent_id, vocalized_id) pairs, whichever side declares the link."""
    pairs = {}
    for uid, rec in manifest.records.items():
        if rec.parallel_id is None:
            continue
        if rec.mode == SILENT:
            pairs[uid] = rec.parallel_id
        else:
            pairs[rec.parallel_id] = uid
    return sorted(pairs.items())


def make_splits(manifest, seed, n_val, n_test, data_fraction=1.0):
    """Assign train/val/test splits deterministically.

    The training pool keeps parallel recordings paired (a silent utterance
    and its vocalized counterpart travel together) so target transfer always
    has both sides. data_fraction downsamples whole utterances, taken
    proportionally from the parallel-pair pool and the non-parallel pool.
    """
    if not 0.0 < data_fraction <= 1.0:
        raise DataError(f"data_fraction must be in (0, 1], got {data_fraction}")
    rng = np.random.default_rng(seed)

    pairs = parallel_pairs(manifest)
    voc_of = dict(pairs)
    paired_voc = set(voc_of.values())

    silent_parallel = [s for s, _ in pairs]
    if len(silent_parallel) < n_val + n_test:
        raise DataError(
            f"need {n_val + n_test} silent parallel utterances for val+test, "
            f"have {len(silent_parallel)}"
        )
    order = rng.permutation(len(silent_parallel))
    held = [silent_parallel[i] for i in order[: n_val + n_test]]
    val_ids = sorted(held[:n_val])
    test_ids = sorted(held[n_val:])
    held_set = set(held)
    reserved = {voc_of[uid] for uid in held_set}

    train_pairs = [(s, v) for s, v in pairs if s not in held_set]
    train_single = sorted(
        uid
        for uid, rec in manifest.records.items()
        if rec.mode == VOCALIZED and uid not in paired_voc and uid not in reserved
    )
    # silent utterances without a counterpart have no usable targets; skipped

    if data_fraction < 1.0:
        n_pairs = int(round(data_fraction * len(train_pairs)))
        n_single = int(round(data_fraction * len(train_single)))
        pair_order = rng.permutation(len(train_pairs))
        single_order = rng.permutation(len(train_single))
        train_pairs = [train_pairs[i] for i in sorted(pair_order[:n_pairs])]
        train_single = [train_single[i] for i in sorted(single_order[:n_single])]

    train_ids = []
    for silent_id, voc_id in train_pairs:
        train_ids.extend([silent_id, voc_id])
    train_ids.extend(train_single)

    if not train_ids:
        raise DataError("training split is empty")
    return manifest.with_splits({"train": train_ids, "val": val_ids, "test": test_ids})


def mask_electrodes(utterance, mask):
    """Drop disabled channels before featurization."""
    idx = mask.indices()
    if utterance.emg.shape[0] != len(mask.enabled):
        raise DataError(
            f"utterance {utterance.id!r}: mask length {len(mask.enabled)} "
            f"!= channel count {utterance.emg.shape[0]}"
        )
    if mask.n_enabled == len(mask.enabled):
        return utterance
    return replace(utterance, emg=utterance.emg[idx])
