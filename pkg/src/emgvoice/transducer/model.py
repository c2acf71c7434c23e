"""Bidirectional LSTM mapping EMG feature frames to speech feature frames.

The network sees, at every frame, the EMG feature vector with a learned
(session, mode) embedding appended, so one model can absorb recordings from
several sessions and both speaking modes.  Output is one speech feature
vector per input frame; there is no sequence-length change anywhere in the
network, alignment happens upstream.
"""

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..errors import ConfigError, DataError
from ..corpus.types import SILENT
from ..features.normalize import Normalizer
from ..features.sequence import FeatureSequence, KIND_EMG, KIND_MFCC, MFCC_DIM


@dataclass(frozen=True)
class TransducerConfig:
    input_dim: int
    hidden_size: int = 1024
    num_layers: int = 3
    embed_dim: int = 32
    output_dim: int = MFCC_DIM
    dropout: float = 0.5

    def __post_init__(self):
        if self.input_dim <= 0 or self.hidden_size <= 0 or self.num_layers <= 0:
            raise ConfigError("transducer dimensions must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")

    def to_dict(self):
        return {
            "input_dim": self.input_dim,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "embed_dim": self.embed_dim,
            "output_dim": self.output_dim,
            "dropout": self.dropout,
        }


class TransducerModel(nn.Module):
    """Stacked bidirectional LSTM with per-utterance context embeddings.

    ``key_table`` maps (session_id, mode) pairs to embedding rows.  Keys
    never seen during training fall back to the same session's silent
    embedding when one exists, then to the mean of all silent embeddings,
    then to the mean of the whole table, so inference never fails on a new
    session.
    """

    def __init__(self, config, keys):
        super().__init__()
        if not keys:
            raise ConfigError("at least one (session, mode) key is required")
        self.config = config
        self.key_table = {tuple(k): i for i, k in enumerate(keys)}
        if len(self.key_table) != len(keys):
            raise ConfigError("duplicate (session, mode) keys")
        self.embedding = nn.Embedding(len(keys), config.embed_dim)
        self.input_dropout = nn.Dropout(config.dropout)
        self.output_dropout = nn.Dropout(config.dropout)
        self.lstm = nn.LSTM(
            config.input_dim + config.embed_dim,
            config.hidden_size,
            num_layers=config.num_layers,
            batch_first=True,
            bidirectional=True,
            dropout=config.dropout if config.num_layers > 1 else 0.0,
        )
        self.proj = nn.Linear(2 * config.hidden_size, config.output_dim)
        nn.init.uniform_(self.embedding.weight, -0.5, 0.5)

    def key_index(self, key):
        """Resolve a (session, mode) key to an embedding row, with fallback."""
        key = tuple(key)
        if key in self.key_table:
            return self.key_table[key]
        return None

    def embedding_vector(self, key):
        idx = self.key_index(key)
        weight = self.embedding.weight
        if idx is not None:
            return weight[idx]
        session, _ = key
        silent_twin = self.key_table.get((session, SILENT))
        if silent_twin is not None:
            return weight[silent_twin]
        silent_rows = [i for (_, mode), i in self.key_table.items() if mode == SILENT]
        if silent_rows:
            return weight[silent_rows].mean(dim=0)
        return weight.mean(dim=0)

    def forward(self, features, lengths, key_indices):
        """Run a padded batch.

        features: (B, T, D) float tensor, zero-padded past each length.
        lengths: (B,) frame counts.
        key_indices: (B,) rows into the embedding table.
        Returns (B, T, output_dim); frames past each length are garbage and
        must be masked by the caller.
        """
        emb = self.embedding(key_indices)
        emb = emb.unsqueeze(1).expand(-1, features.shape[1], -1)
        x = torch.cat([features, emb], dim=2)
        x = self.input_dropout(x)
        packed = nn.utils.rnn.pack_padded_sequence(
            x, lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        out, _ = self.lstm(packed)
        out, _ = nn.utils.rnn.pad_packed_sequence(
            out, batch_first=True, total_length=features.shape[1]
        )
        out = self.output_dropout(out)
        return self.proj(out)

    def transduce(self, features, key, training=False):
        """Map one utterance's feature rows (T, D) to speech features (T, 26).

        Accepts an unseen key via the embedding fallback, which is why this
        path does not go through the integer index lookup.
        """
        rows = np.asarray(features, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.config.input_dim:
            raise DataError(
                "expected (frames, %d) features, got %r"
                % (self.config.input_dim, rows.shape)
            )
        dtype = self.proj.weight.dtype
        x = torch.as_tensor(rows, dtype=dtype).unsqueeze(0)
        emb = self.embedding_vector(key).to(dtype)
        emb = emb.view(1, 1, -1).expand(1, x.shape[1], -1)
        x = torch.cat([x, emb], dim=2)
        was_training = self.training
        self.train(training)
        try:
            x = self.input_dropout(x)
            out, _ = self.lstm(x)
            out = self.output_dropout(out)
            out = self.proj(out)
        finally:
            self.train(was_training)
        return out.squeeze(0)


def init_transducer(config, keys, seed=0, dtype=torch.float32):
    """Build a transducer with reproducible initial weights."""
    torch.manual_seed(seed)
    model = TransducerModel(config, keys)
    return model.to(dtype)


@dataclass
class TransducerBundle:
    """Everything inference needs: the network plus feature-space metadata.

    The normalizers pin the feature scaling the network was trained under;
    applying a bundle to raw features without them would silently shift the
    input distribution.
    """

    model: TransducerModel
    emg_normalizer: Normalizer
    mfcc_normalizer: Normalizer
    extras: dict = field(default_factory=dict)

    def predict(self, features, key):
        """Normalized-in, denormalized-out prediction for one utterance."""
        if isinstance(features, FeatureSequence):
            if features.kind != KIND_EMG:
                raise DataError("transducer input must be EMG features")
            seq = features
        else:
            seq = FeatureSequence(np.asarray(features, dtype=np.float64), KIND_EMG)
        if not seq.normalized:
            seq = self.emg_normalizer.apply(seq)
        with torch.no_grad():
            out = self.model.transduce(seq.data, key, training=False)
        pred = FeatureSequence(
            out.double().numpy(), KIND_MFCC, normalized=True
        )
        return self.mfcc_normalizer.invert(pred)

    def predict_normalized(self, rows, key):
        """Prediction kept in normalized feature space, as raw rows."""
        with torch.no_grad():
            out = self.model.transduce(rows, key, training=False)
        return out.double().numpy()


def save_bundle(path, bundle):
    """Persist a trained transducer with its normalizers and key table."""
    from ..checkpoint import save_checkpoint

    model = bundle.model
    keys = sorted(model.key_table, key=model.key_table.get)
    extras = {
        "keys": [list(k) for k in keys],
        "emg_normalizer": bundle.emg_normalizer.to_dict(),
        "mfcc_normalizer": bundle.mfcc_normalizer.to_dict(),
    }
    extras.update(bundle.extras)
    save_checkpoint(
        path, "transducer", model.config.to_dict(), model.state_dict(), extras
    )


def load_bundle(path, dtype=torch.float32):
    """Rebuild a TransducerBundle from a checkpoint file."""
    from ..checkpoint import load_checkpoint

    ckpt = load_checkpoint(path)
    if ckpt.kind != "transducer":
        raise DataError("expected a transducer checkpoint, found %r" % ckpt.kind)
    config = TransducerConfig(**ckpt.config)
    keys = [tuple(k) for k in ckpt.extras["keys"]]
    model = TransducerModel(config, keys).to(dtype)
    model.load_state_dict(ckpt.state_dict(dtype))
    model.eval()
    extras = {
        k: v
        for k, v in ckpt.extras.items()
        if k not in ("keys", "emg_normalizer", "mfcc_normalizer")
    }
    return TransducerBundle(
        model=model,
        emg_normalizer=Normalizer.from_dict(ckpt.extras["emg_normalizer"]),
        mfcc_normalizer=Normalizer.from_dict(ckpt.extras["mfcc_normalizer"]),
        extras=extras,
    )
