"""Transformer classifier for windowed accelerometer data.

Per window: linear frame embedding -> learned CLS token prepended at
position 0 -> sinusoidal positional encoding over L+1 positions ->
pre-norm encoder blocks (self-attention + residual, relu feed-forward +
residual, inverted dropout in training mode) -> linear head on the CLS
output. Trained with cross-entropy, Adam, a cosine-annealed learning
rate over the max-epoch horizon, and early stopping on validation loss
with best-epoch weight restoration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .layers import Linear, MultiHeadSelfAttention, dropout, glorot_uniform
from .optim import AdamState, CosineSchedule, adam_step, cosine_lr
from .rng import Prng
from .windowing import WindowedDataset

PERIOD_TAGS = ("initial", "early-mid", "late-mid", "end")


@dataclass(frozen=True)
class TransformerConfig:
    d_model: int = 64
    heads: int = 4
    layers: int = 2
    ffn_dim: int = 128
    dropout: float = 0.1
    classes: int = 11
    window_len: int = 300
    channels: int = 3

    def __post_init__(self):
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by heads {self.heads}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    lr_max: float = 1e-3
    lr_min: float = 1e-5
    max_epochs: int = 100
    batch_size: int = 64
    patience: int = 10
    min_delta: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.lr_min > self.lr_max:
            raise ValueError("lr_min must be <= lr_max")


@dataclass(frozen=True)
class AttentionTrace:
    """Probe-batch-averaged attention weights at one training period."""

    period: str
    layer: int
    head: int
    weights: np.ndarray  # (L+1, L+1), row-stochastic, row/col 0 = CLS


@dataclass
class TrainResult:
    history: list[tuple[int, float, float, float]]  # (epoch, train_loss, val_loss, lr)
    best_epoch: int
    epochs_run: int
    traces: list[AttentionTrace]


def positional_encoding(length: int, d_model: int) -> np.ndarray:
    """PE[pos, 2i] = sin(pos / 10000^(2i/d)); PE[pos, 2i+1] = cos(same)."""
    if d_model % 2 != 0:
        raise ValueError(f"d_model must be even, got {d_model}")
    pos = np.arange(length, dtype=np.float64)[:, None]
    rate = 10000.0 ** (np.arange(0, d_model, 2, dtype=np.float64) / d_model)
    pe = np.empty((length, d_model))
    pe[:, 0::2] = np.sin(pos / rate)
    pe[:, 1::2] = np.cos(pos / rate)
    return pe


class _EncoderBlock:
    def __init__(self, prng: Prng, cfg: TransformerConfig):
        self.attn = MultiHeadSelfAttention(prng, cfg.d_model, cfg.heads)
        self.ffn1 = Linear(prng, cfg.d_model, cfg.ffn_dim)
        self.ffn2 = Linear(prng, cfg.ffn_dim, cfg.d_model)
        self.rate = cfg.dropout

    def __call__(
        self, h: Tensor, training: bool, prng: Prng | None, capture: list | None
    ) -> Tensor:
        a = self.attn(ad.layer_norm(h), capture)
        h = ad.add(h, dropout(a, self.rate, prng, training))
        f = self.ffn2(ad.relu(self.ffn1(ad.layer_norm(h))))
        return ad.add(h, dropout(f, self.rate, prng, training))

    def named(self, prefix: str) -> list[tuple[str, Tensor]]:
        return (
            self.attn.named(f"{prefix}.attn")
            + self.ffn1.named(f"{prefix}.ffn1")
            + self.ffn2.named(f"{prefix}.ffn2")
        )


class HarTransformer:
    def __init__(self, cfg: TransformerConfig, seed: int):
        self.cfg = cfg
        prng = Prng(seed)
        self.embed = Linear(prng, cfg.channels, cfg.d_model)
        self.cls = Tensor(
            glorot_uniform(prng, (1, 1, cfg.d_model), 1, cfg.d_model), requires_grad=True
        )
        self.blocks = [_EncoderBlock(prng, cfg) for _ in range(cfg.layers)]
        self.head = Linear(prng, cfg.d_model, cfg.classes)
        self.pos = positional_encoding(cfg.window_len + 1, cfg.d_model)[None]

    def named_params(self) -> list[tuple[str, Tensor]]:
        out = self.embed.named("embed") + [("cls", self.cls)]
        for i, block in enumerate(self.blocks):
            out += block.named(f"block{i}")
        return out + self.head.named("head")

    def params(self) -> list[Tensor]:
        return [t for _, t in self.named_params()]

    def forward(
        self,
        windows: np.ndarray,
        training: bool = False,
        prng: Prng | None = None,
        capture: list | None = None,
    ) -> Tensor:
        """Logits (batch, classes); ``capture`` collects per-layer attention."""
        batch = len(windows)
        h = self.embed(Tensor(windows))
        h = ad.concat([ad.broadcast_to(self.cls, (batch, 1, self.cfg.d_model)), h], axis=1)
        h = ad.add(h, Tensor(self.pos))
        for block in self.blocks:
            h = block(h, training, prng, capture)
        return self.head(ad.take_slice(h, (slice(None), 0)))

    def snapshot(self) -> list[np.ndarray]:
        return [t.data.copy() for t in self.params()]

    def restore(self, snap: list[np.ndarray]) -> None:
        for t, arr in zip(self.params(), snap):
            t.data[...] = arr


def predict(model: HarTransformer, windows: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Argmax class indices; ties resolve to the lowest index."""
    return np.argmax(predict_scores(model, windows, batch_size), axis=1)


def predict_scores(
    model: HarTransformer, windows: np.ndarray, batch_size: int = 256
) -> np.ndarray:
    parts = [
        model.forward(windows[lo : lo + batch_size]).data
        for lo in range(0, len(windows), batch_size)
    ]
    return np.concatenate(parts)


def attention_trace(
    model: HarTransformer, probe: np.ndarray, period: str
) -> list[AttentionTrace]:
    """Evaluation-mode capture of every layer/head, averaged over the probe."""
    capture: list[np.ndarray] = []
    model.forward(probe, training=False, capture=capture)
    traces = []
    for layer, weights in enumerate(capture):
        mean = weights.mean(axis=0)  # (heads, L+1, L+1)
        for head in range(mean.shape[0]):
            traces.append(AttentionTrace(period, layer, head, mean[head]))
    return traces


def _dataset_loss(model: HarTransformer, ds: WindowedDataset, batch_size: int) -> float:
    total = 0.0
    for lo in range(0, len(ds), batch_size):
        logits = model.forward(ds.windows[lo : lo + batch_size])
        loss = ad.cross_entropy(logits, ds.labels[lo : lo + batch_size])
        total += float(loss.data) * len(ds.labels[lo : lo + batch_size])
    return total / len(ds)


def trace_epochs(epochs_run: int) -> dict[str, int]:
    """The four capture points: {0, ceil(E/3), ceil(2E/3), E}."""
    e = epochs_run
    return {
        "initial": 0,
        "early-mid": math.ceil(e / 3),
        "late-mid": math.ceil(2 * e / 3),
        "end": e,
    }


def train(
    model: HarTransformer,
    train_ds: WindowedDataset,
    val_ds: WindowedDataset,
    tcfg: TrainConfig,
    probe: np.ndarray | None = None,
) -> TrainResult:
    """Mini-batch cross-entropy training with early stopping.

    Stops once validation loss has failed to improve by at least
    ``min_delta`` for ``patience`` consecutive epochs, then restores the
    best-validation-epoch weights. When ``probe`` is given, attention
    traces are captured at the four schedule periods by replaying the
    per-epoch weight snapshots. Randomness streams: "order" and
    "dropout", derived from tcfg.seed.
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise ValueError("train and val sets must be non-empty")
    params = model.params()
    state = AdamState.for_params(params)
    sched = CosineSchedule(tcfg.lr_max, tcfg.lr_min, tcfg.max_epochs)
    order_rng = Prng(tcfg.seed).derive("order")
    drop_rng = Prng(tcfg.seed).derive("dropout")

    snapshots = [model.snapshot()]  # snapshots[k] = weights after k epochs
    history = []
    best_val = math.inf
    best_epoch = 0
    stall = 0
    n = len(train_ds)
    for epoch in range(1, tcfg.max_epochs + 1):
        lr = cosine_lr(epoch - 1, sched)
        order = np.array(order_rng.shuffle(list(range(n))))
        total = 0.0
        for lo in range(0, n, tcfg.batch_size):
            batch = order[lo : lo + tcfg.batch_size]
            with Tape() as tape:
                logits = model.forward(train_ds.windows[batch], training=True, prng=drop_rng)
                loss = ad.cross_entropy(logits, train_ds.labels[batch])
                grads = tape.gradients(loss, params)
            adam_step(params, grads, state, lr)
            total += float(loss.data) * len(batch)
        val_loss = _dataset_loss(model, val_ds, tcfg.batch_size)
        history.append((epoch, total / n, val_loss, lr))
        snapshots.append(model.snapshot())
        if val_loss < best_val - tcfg.min_delta:
            best_val = val_loss
            best_epoch = epoch
            stall = 0
        else:
            stall += 1
            if stall >= tcfg.patience:
                break

    epochs_run = len(history)
    traces = []
    if probe is not None:
        for period, k in trace_epochs(epochs_run).items():
            model.restore(snapshots[k])
            traces.extend(attention_trace(model, probe, period))
    model.restore(snapshots[best_epoch])
    return TrainResult(history, best_epoch, epochs_run, traces)
