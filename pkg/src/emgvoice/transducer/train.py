"""Training loop with alignment refresh for the EMG-to-speech transducer.

Silent utterances have no audio of their own, so their targets are borrowed
from the paired vocalized recording through a time alignment.  Early epochs
use alignments from canonical correlation distance alone; once the network
produces usable predictions the alignments are refreshed periodically with a
cost that also compares predicted speech features against the real ones, so
targets and network improve together.
"""

import copy
import json
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..errors import ConfigError, DataError, NumericError
from ..align.cca import fit_cca, collect_aligned_pairs
from ..align.costs import emg_cost, cca_cost, full_cost
from ..align.dtw import dtw, transfer_targets
from .model import TransducerConfig, init_transducer

PARALLEL = "silent-transferred"
PARALLEL_VOCALIZED = "parallel-vocalized"
NONPARALLEL_VOCALIZED = "nonparallel-vocalized"


@dataclass
class ParallelExample:
    """A silent utterance with the vocalized recording it borrows audio from.

    All feature arrays are expected in normalized space; ``voc_audio`` rows
    are indexed by the current alignment to form this utterance's targets.
    """

    uid: str
    key: tuple
    emg: np.ndarray
    voc_emg: np.ndarray
    voc_audio: np.ndarray

    def __post_init__(self):
        if self.voc_emg.shape[0] != self.voc_audio.shape[0]:
            raise DataError(
                "%s: vocalized EMG (%d frames) and audio (%d frames) disagree"
                % (self.uid, self.voc_emg.shape[0], self.voc_audio.shape[0])
            )


@dataclass
class VocalizedExample:
    """A vocalized utterance whose own audio supplies the targets."""

    uid: str
    key: tuple
    emg: np.ndarray
    audio: np.ndarray
    source: str = PARALLEL_VOCALIZED

    def __post_init__(self):
        if self.emg.shape[0] != self.audio.shape[0]:
            raise DataError(
                "%s: EMG (%d frames) and audio (%d frames) disagree"
                % (self.uid, self.emg.shape[0], self.audio.shape[0])
            )


def trim_to_match(emg_rows, audio_rows, uid="", tolerance=3):
    """Cut both feature arrays to the shorter one.

    Frame counts can disagree by a row or two from edge effects; a bigger gap
    means the recordings are desynchronized and trimming would only hide it.
    """
    n_e, n_a = emg_rows.shape[0], audio_rows.shape[0]
    if abs(n_e - n_a) > tolerance:
        raise DataError(
            "%s: EMG and audio frame counts differ by %d (max %d)"
            % (uid or "utterance", abs(n_e - n_a), tolerance)
        )
    n = min(n_e, n_a)
    return emg_rows[:n], audio_rows[:n]


@dataclass
class TrainData:
    parallel: list
    vocalized: list = field(default_factory=list)
    validation: list = field(default_factory=list)

    def __post_init__(self):
        if not self.parallel:
            raise DataError("training requires at least one parallel pair")

    def keys(self):
        seen = []
        for ex in list(self.parallel) + list(self.vocalized) + list(self.validation):
            if ex.key not in seen:
                seen.append(ex.key)
        return seen

    def input_dim(self):
        return self.parallel[0].emg.shape[1]


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 20
    batch_size: int = 8
    seed: int = 0
    grad_clip: float = 10.0
    plateau_patience: int = 5
    lr_decay: float = 0.5
    warmup_epochs: int = 4
    realign_period: int = 5
    align_lambda: float = 10.0
    cca_dims: int = 15
    dtype: str = "float32"
    realign_validation: bool = True
    log_path: str = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.lr <= 0 or not 0 < self.lr_decay <= 1:
            raise ConfigError("lr must be positive and lr_decay in (0, 1]")
        if self.realign_period < 1:
            raise ConfigError("realign_period must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("dtype must be float32 or float64")

    def torch_dtype(self):
        return torch.float64 if self.dtype == "float64" else torch.float32


class PlateauSchedule:
    """Halve the learning rate after N epochs without validation improvement.

    The stagnation counter resets on every improvement and after every cut,
    so each cut needs a fresh run of N flat epochs.
    """

    def __init__(self, lr, patience=5, factor=0.5):
        self.lr = lr
        self.patience = patience
        self.factor = factor
        self.best = math.inf
        self.stale = 0

    def step(self, val_loss):
        """Record one epoch's validation loss; returns True if the LR was cut."""
        if val_loss < self.best:
            self.best = val_loss
            self.stale = 0
            return False
        self.stale += 1
        if self.stale >= self.patience:
            self.lr *= self.factor
            self.stale = 0
            return True
        return False


def masked_mse(pred, target, lengths):
    """Mean squared error over valid frames only, per frame and dimension."""
    mask = (
        torch.arange(pred.shape[1], device=pred.device)[None, :]
        < lengths[:, None]
    )
    diff = (pred - target) ** 2 * mask[:, :, None]
    denom = mask.sum() * pred.shape[2]
    return diff.sum() / denom


def _pad_batch(xs, ys, dtype):
    lengths = torch.as_tensor([x.shape[0] for x in xs], dtype=torch.int64)
    t_max = int(lengths.max())
    x = torch.zeros(len(xs), t_max, xs[0].shape[1], dtype=dtype)
    y = torch.zeros(len(ys), t_max, ys[0].shape[1], dtype=dtype)
    for i, (a, b) in enumerate(zip(xs, ys)):
        x[i, : a.shape[0]] = torch.as_tensor(a, dtype=dtype)
        y[i, : b.shape[0]] = torch.as_tensor(b, dtype=dtype)
    return x, y, lengths


def training_step(model, optimizer, xs, ys, key_indices, grad_clip=10.0):
    """One optimization step over a list of variable-length utterances."""
    dtype = model.proj.weight.dtype
    x, y, lengths = _pad_batch(xs, ys, dtype)
    keys = torch.as_tensor(key_indices, dtype=torch.int64)
    model.train()
    optimizer.zero_grad()
    pred = model(x, lengths, keys)
    loss = masked_mse(pred, y, lengths)
    if not torch.isfinite(loss):
        raise NumericError("non-finite training loss")
    loss.backward()
    nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    optimizer.step()
    return float(loss.detach())


def _initial_alignments(examples, projection):
    mappings = {}
    for ex in examples:
        path = dtw(cca_cost(ex.emg, ex.voc_emg, projection))
        mappings[ex.uid] = path.mapping
    return mappings


def _refresh_alignments(model, examples, projection, lam, mappings):
    """Realign silent utterances using the model's current predictions."""
    model.eval()
    for ex in examples:
        with torch.no_grad():
            pred = model.transduce(ex.emg, ex.key).double().numpy()
        delta = full_cost(
            ex.emg, ex.voc_emg, pred, ex.voc_audio, projection, lam=lam
        )
        mappings[ex.uid] = dtw(delta).mapping


def _epoch_batches(lengths, batch_size, rng):
    """Shuffled batches of similar-length utterances.

    Sorting by length before chunking keeps padding waste low; the random
    permutation beforehand breaks ties differently each epoch, and the final
    shuffle randomizes batch order.
    """
    perm = rng.permutation(len(lengths))
    order = sorted(perm, key=lambda i: lengths[i])
    batches = [order[k : k + batch_size] for k in range(0, len(order), batch_size)]
    rng.shuffle(batches)
    return batches


def _validate(model, examples, mappings):
    model.eval()
    total = 0.0
    frames = 0
    for ex in examples:
        target = transfer_targets(ex.voc_audio, mappings[ex.uid])
        with torch.no_grad():
            pred = model.transduce(ex.emg, ex.key).double().numpy()
        total += float(np.sum((pred - target) ** 2))
        frames += target.shape[0]
    if frames == 0:
        return math.nan
    return total / (frames * examples[0].voc_audio.shape[1])


def train_transducer(data, model_config=None, config=None, model=None, projection=None):
    """Fit the transducer on mixed silent and vocalized material.

    Returns (model, history, projection, mappings).  The model carries the
    weights of the best validation epoch (last epoch when there is no
    validation set); history is a list of per-epoch records suitable for
    line-delimited JSON logging.
    """
    cfg = config or TrainConfig()
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)

    if model is None:
        if model_config is None:
            model_config = TransducerConfig(input_dim=data.input_dim())
        model = init_transducer(
            model_config, data.keys(), seed=cfg.seed, dtype=cfg.torch_dtype()
        )
    else:
        model = model.to(cfg.torch_dtype())

    # The projection is fitted once, from alignments that need no model at
    # all, and stays fixed; only the alignments themselves are refreshed.
    if projection is None:
        pairs = [(ex.emg, ex.voc_emg) for ex in data.parallel]
        silent_rows, voc_rows = collect_aligned_pairs(pairs, emg_cost, dtw)
        projection = fit_cca(silent_rows, voc_rows, dims=cfg.cca_dims)

    mappings = _initial_alignments(data.parallel, projection)
    val_mappings = _initial_alignments(data.validation, projection)

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    schedule = PlateauSchedule(cfg.lr, cfg.plateau_patience, cfg.lr_decay)

    entries = [(PARALLEL, ex) for ex in data.parallel]
    entries += [(ex.source, ex) for ex in data.vocalized]
    lengths = [ex.emg.shape[0] for _, ex in entries]
    keys = data.keys()
    key_index = {k: i for i, k in enumerate(keys)}

    history = []
    best_val = math.inf
    best_state = copy.deepcopy(model.state_dict())
    log_fh = open(cfg.log_path, "w") if cfg.log_path else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            realigned = False
            past_warmup = epoch > cfg.warmup_epochs
            if past_warmup and (epoch - cfg.warmup_epochs - 1) % cfg.realign_period == 0:
                _refresh_alignments(
                    model, data.parallel, projection, cfg.align_lambda, mappings
                )
                if cfg.realign_validation:
                    _refresh_alignments(
                        model, data.validation, projection, cfg.align_lambda,
                        val_mappings,
                    )
                realigned = True

            batch_losses = []
            for batch in _epoch_batches(lengths, cfg.batch_size, rng):
                xs, ys, kidx = [], [], []
                for i in batch:
                    source, ex = entries[i]
                    xs.append(ex.emg)
                    if source == PARALLEL:
                        ys.append(transfer_targets(ex.voc_audio, mappings[ex.uid]))
                    else:
                        ys.append(ex.audio)
                    kidx.append(key_index[ex.key])
                batch_losses.append(
                    training_step(model, optimizer, xs, ys, kidx, cfg.grad_clip)
                )

            train_loss = float(np.mean(batch_losses))
            val_loss = (
                _validate(model, data.validation, val_mappings)
                if data.validation
                else math.nan
            )

            cut = False
            if data.validation:
                cut = schedule.step(val_loss)
                if cut:
                    for group in optimizer.param_groups:
                        group["lr"] = schedule.lr
                if val_loss < best_val:
                    best_val = val_loss
                    best_state = copy.deepcopy(model.state_dict())
            else:
                best_state = copy.deepcopy(model.state_dict())

            record = {
                "epoch": epoch,
                "train_loss": train_loss,
                "val_loss": None if math.isnan(val_loss) else val_loss,
                "lr": schedule.lr,
                "realigned": realigned,
                "lr_cut": cut,
            }
            history.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")
                log_fh.flush()
    finally:
        if log_fh:
            log_fh.close()

    model.load_state_dict(best_state)
    return model, history, projection, mappings
