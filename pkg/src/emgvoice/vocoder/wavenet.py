"""Autoregressive waveform model conditioned on speech feature frames.

A stack of dilated causal convolutions with gated activations predicts the
mu-law class of each sample from the previous samples, while a recurrent
conditioning network turns 100 Hz feature frames into a per-sample signal
added inside every gate.  Generation walks sample by sample with per-layer
ring buffers, so a step costs the same no matter how long the output grows.
"""

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ConfigError, DataError, NumericError
from .mulaw import N_CLASSES, mulaw_decode

ZERO_CODE = N_CLASSES // 2  # mu-law class of silence, used as the start symbol


@dataclass(frozen=True)
class WaveNetConfig:
    n_layers: int = 16
    max_dilation: int = 128
    residual_channels: int = 64
    skip_channels: int = 256
    cond_channels: int = 128
    cond_lstm_units: int = 512
    feature_dim: int = 26
    upsample_window: int = 432
    upsample_stride: int = 160

    def __post_init__(self):
        if self.max_dilation < 1 or self.max_dilation & (self.max_dilation - 1):
            raise ConfigError("max_dilation must be a power of two")
        if self.n_layers < 1:
            raise ConfigError("n_layers must be positive")
        if self.upsample_window < self.upsample_stride:
            raise ConfigError("upsample window must cover the stride")

    def dilations(self):
        """1, 2, 4, ... max_dilation, repeated until n_layers entries."""
        cycle = []
        d = 1
        while d <= self.max_dilation:
            cycle.append(d)
            d *= 2
        return [cycle[i % len(cycle)] for i in range(self.n_layers)]

    def receptive_field(self):
        """Number of past samples that can influence one output."""
        return sum(self.dilations()) + 1

    @classmethod
    def desk(cls, feature_dim=26):
        """Small preset that trains in seconds on a CPU."""
        return cls(
            n_layers=8,
            max_dilation=128,
            residual_channels=8,
            skip_channels=16,
            cond_channels=8,
            cond_lstm_units=16,
            feature_dim=feature_dim,
        )


class _GatedLayer(nn.Module):
    def __init__(self, residual, skip, cond, dilation):
        super().__init__()
        self.dilation = dilation
        self.conv = nn.Conv1d(residual, 2 * residual, 2, dilation=dilation)
        self.cond = nn.Conv1d(cond, 2 * residual, 1)
        self.skip = nn.Conv1d(residual, skip, 1)
        self.res = nn.Conv1d(residual, residual, 1)

    def forward(self, x, cond_gates):
        # left-pad so output[t] sees only inputs <= t
        z = self.conv(F.pad(x, (self.dilation, 0))) + cond_gates
        a, b = z.chunk(2, dim=1)
        g = torch.tanh(a) * torch.sigmoid(b)
        return self.res(g) + x, self.skip(g)


class WaveNetModel(nn.Module):
    def __init__(self, config):
        super().__init__()
        self.config = config
        r, s, c = config.residual_channels, config.skip_channels, config.cond_channels
        self.embed = nn.Embedding(N_CLASSES, r)
        self.layers = nn.ModuleList(
            _GatedLayer(r, s, c, d) for d in config.dilations()
        )
        self.head1 = nn.Conv1d(s, s, 1)
        self.head2 = nn.Conv1d(s, N_CLASSES, 1)
        self.cond_lstm = nn.LSTM(
            config.feature_dim,
            config.cond_lstm_units,
            batch_first=True,
            bidirectional=True,
        )
        self.cond_proj = nn.Linear(2 * config.cond_lstm_units, c)
        self.upsample = nn.ConvTranspose1d(
            c, c, config.upsample_window, config.upsample_stride
        )

    @property
    def dtype(self):
        return self.head2.weight.dtype

    def condition(self, features):
        """Frames (T, feature_dim) to a per-sample signal (1, C, stride*T).

        The transposed convolution writes one window per frame; the extra
        (window - stride) samples it produces are split evenly between the
        two ends, keeping each frame's contribution centered on its span.
        """
        rows = torch.as_tensor(
            np.asarray(features, dtype=np.float64), dtype=self.dtype
        )
        if rows.ndim != 2 or rows.shape[1] != self.config.feature_dim:
            raise DataError(
                "expected (frames, %d) features, got %r"
                % (self.config.feature_dim, tuple(rows.shape))
            )
        n_frames = rows.shape[0]
        h, _ = self.cond_lstm(rows.unsqueeze(0))
        c = self.cond_proj(h).transpose(1, 2)
        u = self.upsample(c)
        lead = (self.config.upsample_window - self.config.upsample_stride) // 2
        return u[:, :, lead : lead + self.config.upsample_stride * n_frames]

    def _shifted_input(self, codes):
        prev = torch.cat([codes.new_full((1,), ZERO_CODE), codes[:-1]])
        return self.embed(prev).transpose(0, 1).unsqueeze(0)

    def teacher_logits(self, codes, cond_up):
        """Logits for every position given the true previous samples.

        codes: (N,) int64 targets; cond_up: (1, C, N) from condition().
        Returns (N, n_classes).  Position t sees codes < t only, so these
        logits match what incremental generation would compute.
        """
        codes = torch.as_tensor(codes, dtype=torch.int64)
        if cond_up.shape[2] != codes.shape[0]:
            raise DataError(
                "conditioning length %d != sample count %d"
                % (cond_up.shape[2], codes.shape[0])
            )
        x = self._shifted_input(codes)
        skip_sum = None
        for layer in self.layers:
            x, s = layer(x, layer.cond(cond_up))
            skip_sum = s if skip_sum is None else skip_sum + s
        h = self.head1(F.relu(skip_sum))
        return self.head2(F.relu(h)).squeeze(0).transpose(0, 1)

    def _start_state(self):
        r = self.config.residual_channels
        return [
            torch.zeros(layer.dilation, r, dtype=self.dtype)
            for layer in self.layers
        ]

    def _step(self, state, t, x, cond_cols):
        """Advance one sample: x is the embedded previous code (r,)."""
        skip_sum = None
        for li, layer in enumerate(self.layers):
            buf = state[li]
            # clone: the slot is overwritten with the current input next
            past = buf[t % layer.dilation].clone()
            buf[t % layer.dilation] = x
            w = layer.conv.weight
            z = w[:, :, 0] @ past + w[:, :, 1] @ x + layer.conv.bias
            z = z + cond_cols[li][:, t]
            a, b = z.chunk(2)
            g = torch.tanh(a) * torch.sigmoid(b)
            s = layer.skip.weight[:, :, 0] @ g + layer.skip.bias
            skip_sum = s if skip_sum is None else skip_sum + s
            x = layer.res.weight[:, :, 0] @ g + layer.res.bias + x
        h = self.head1.weight[:, :, 0] @ F.relu(skip_sum) + self.head1.bias
        return self.head2.weight[:, :, 0] @ F.relu(h) + self.head2.bias

    def _cond_cols(self, cond_up):
        # per-layer 1x1 conditioning projections, computed once for all t
        return [layer.cond(cond_up).squeeze(0) for layer in self.layers]

    def forced_logits(self, codes, cond_up):
        """Teacher forcing through the incremental path, for equivalence checks."""
        codes = torch.as_tensor(codes, dtype=torch.int64)
        cond_cols = self._cond_cols(cond_up)
        state = self._start_state()
        logits = []
        prev = ZERO_CODE
        with torch.no_grad():
            for t in range(codes.shape[0]):
                x = self.embed.weight[prev]
                logits.append(self._step(state, t, x, cond_cols))
                prev = int(codes[t])
        return torch.stack(logits)

    def generate(self, features, seed=0, mode="sample", temperature=1.0):
        """Synthesize a waveform for the given feature frames.

        mode "sample" draws each class from the softmax (seeded, so the
        waveform is reproducible); "argmax" takes the most likely class.
        Returns (audio float64 (stride*T,), codes int64 (stride*T,)).
        """
        if mode not in ("sample", "argmax"):
            raise ConfigError("mode must be 'sample' or 'argmax'")
        if temperature <= 0:
            raise ConfigError("temperature must be positive")
        self.eval()
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            cond_up = self.condition(features)
            cond_cols = self._cond_cols(cond_up)
            n = cond_up.shape[2]
            state = self._start_state()
            codes = torch.empty(n, dtype=torch.int64)
            prev = ZERO_CODE
            for t in range(n):
                x = self.embed.weight[prev]
                logits = self._step(state, t, x, cond_cols)
                if not torch.isfinite(logits).all():
                    raise NumericError("non-finite logits at sample %d" % t)
                if mode == "argmax":
                    prev = int(logits.argmax())
                else:
                    probs = F.softmax(logits / temperature, dim=0)
                    prev = int(torch.multinomial(probs, 1, generator=gen))
                codes[t] = prev
        return mulaw_decode(codes.numpy()), codes.numpy()


def init_wavenet(config=None, seed=0, dtype=torch.float32):
    """Build a waveform model with reproducible initial weights."""
    torch.manual_seed(seed)
    model = WaveNetModel(config or WaveNetConfig())
    return model.to(dtype)


def save_wavenet(path, model, extras=None):
    from ..checkpoint import save_checkpoint

    cfg = model.config
    config = {
        "n_layers": cfg.n_layers,
        "max_dilation": cfg.max_dilation,
        "residual_channels": cfg.residual_channels,
        "skip_channels": cfg.skip_channels,
        "cond_channels": cfg.cond_channels,
        "cond_lstm_units": cfg.cond_lstm_units,
        "feature_dim": cfg.feature_dim,
        "upsample_window": cfg.upsample_window,
        "upsample_stride": cfg.upsample_stride,
    }
    save_checkpoint(path, "wavenet", config, model.state_dict(), extras)


def load_wavenet(path, dtype=torch.float32):
    from ..checkpoint import load_checkpoint

    ckpt = load_checkpoint(path)
    if ckpt.kind != "wavenet":
        raise DataError("expected a wavenet checkpoint, found %r" % ckpt.kind)
    model = WaveNetModel(WaveNetConfig(**ckpt.config)).to(dtype)
    model.load_state_dict(ckpt.state_dict(dtype))
    model.eval()
    return model


def train_wavenet(model, clips, steps=200, lr=1e-3, seed=0, log_every=0):
    """Fit on (codes, features) clips with cross-entropy, one clip per step.

    clips: list of (codes (N,) int, features (T, feature_dim)) pairs with
    N == stride * T.  Clips are visited round-robin so runs are reproducible.
    Returns the per-step loss history.
    """
    if not clips:
        raise DataError("no training clips")
    stride = model.config.upsample_stride
    prepared = []
    for codes, features in clips:
        codes = torch.as_tensor(np.asarray(codes), dtype=torch.int64)
        features = np.asarray(features, dtype=np.float64)
        if codes.shape[0] != stride * features.shape[0]:
            raise DataError(
                "clip has %d samples for %d frames (need %d per frame)"
                % (codes.shape[0], features.shape[0], stride)
            )
        prepared.append((codes, features))
    torch.manual_seed(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    history = []
    model.train()
    for step in range(steps):
        codes, features = prepared[step % len(prepared)]
        optimizer.zero_grad()
        logits = model.teacher_logits(codes, model.condition(features))
        loss = F.cross_entropy(logits, codes)
        if not torch.isfinite(loss):
            raise NumericError("non-finite loss at step %d" % step)
        loss.backward()
        optimizer.step()
        history.append(float(loss.detach()))
        if log_every and (step + 1) % log_every == 0:
            print("step %d  loss %.4f" % (step + 1, history[-1]))
    return history
