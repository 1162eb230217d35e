"""Attention autoencoder with a reparameterised Gaussian latent.

Encoder: per-frame linear embed of (3 channels + 10-way class one-hot)
-> one self-attention block (residual + layer norm) -> temporal mean
pool -> linear heads for (mu, log sigma^2). Decoder: linear from
(latent + one-hot) to a per-frame seed sequence -> one attention block
-> per-frame linear back to 3 channels. Trained on windows of classes
100..1000 only; class 8100 is never synthesised.

Loss = mean squared reconstruction error
     + kl_weight * KL(N(mu, sigma^2) || N(0, I)) summed over latent
       dims, averaged over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .ingest import GENERATED_CLASS_IDS, LABELS, ActivitySegment, SegmentLengthDist, StreamError
from .layers import Linear, MultiHeadSelfAttention, one_hot
from .optim import AdamState, adam_step
from .rng import Prng

N_CONDITION = len(GENERATED_CLASS_IDS)  # 10


@dataclass(frozen=True)
class AaeConfig:
    window_len: int = 300
    channels: int = 3
    embed_dim: int = 32
    heads: int = 2
    latent_dim: int = 16
    kl_weight: float = 0.001

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ValueError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.latent_dim < 1 or self.kl_weight < 0:
            raise ValueError("latent_dim >= 1 and kl_weight >= 0 required")


@dataclass(frozen=True)
class AaeTrainConfig:
    lr: float = 0.001
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("lr > 0, epochs >= 1, batch_size >= 1 required")


class AttentionAutoencoder:
    def __init__(self, cfg: AaeConfig, seed: int):
        self.cfg = cfg
        prng = Prng(seed)
        e, z = cfg.embed_dim, cfg.latent_dim
        self.enc_embed = Linear(prng, cfg.channels + N_CONDITION, e)
        self.enc_attn = MultiHeadSelfAttention(prng, e, cfg.heads)
        self.enc_mu = Linear(prng, e, z)
        self.enc_logvar = Linear(prng, e, z)
        self.dec_seed = Linear(prng, z + N_CONDITION, cfg.window_len * e)
        self.dec_attn = MultiHeadSelfAttention(prng, e, cfg.heads)
        self.dec_out = Linear(prng, e, cfg.channels)

    def named_params(self) -> list[tuple[str, Tensor]]:
        out = self.enc_embed.named("enc_embed")
        out += self.enc_attn.named("enc_attn")
        out += self.enc_mu.named("enc_mu") + self.enc_logvar.named("enc_logvar")
        out += self.dec_seed.named("dec_seed")
        out += self.dec_attn.named("dec_attn")
        out += self.dec_out.named("dec_out")
        return out

    def params(self) -> list[Tensor]:
        return [t for _, t in self.named_params()]

    def parameter_count(self) -> int:
        return sum(t.size for t in self.params())

    def _condition(self, class_idx: np.ndarray) -> np.ndarray:
        class_idx = np.asarray(class_idx)
        if np.any(class_idx < 0) or np.any(class_idx >= N_CONDITION):
            raise StreamError("condition class out of range: only classes 100..1000 are generated")
        return one_hot(class_idx, N_CONDITION)

    def encode(
        self, x: Tensor | np.ndarray, class_idx: np.ndarray, capture: list | None = None
    ) -> tuple[Tensor, Tensor]:
        """Windows (B, L, 3) + class indices -> (mu, log sigma^2), each (B, Z)."""
        x = x if isinstance(x, Tensor) else Tensor(x)
        cond = np.repeat(self._condition(class_idx)[:, None, :], self.cfg.window_len, axis=1)
        h = self.enc_embed(ad.concat([x, Tensor(cond)], axis=2))
        h = ad.layer_norm(ad.add(h, self.enc_attn(h, capture)))
        pooled = ad.tmean(h, axis=1)
        return self.enc_mu(pooled), self.enc_logvar(pooled)

    @staticmethod
    def sample_latent(mu: Tensor, logvar: Tensor, eps: np.ndarray) -> Tensor:
        """Reparameterised z = mu + exp(logvar / 2) * eps."""
        return ad.add(mu, ad.mul(ad.exp(ad.mul(logvar, 0.5)), Tensor(eps)))

    def decode(
        self, z: Tensor | np.ndarray, class_idx: np.ndarray, capture: list | None = None
    ) -> Tensor:
        """Latents (B, Z) + class indices -> windows (B, L, 3)."""
        z = z if isinstance(z, Tensor) else Tensor(z)
        batch = z.shape[0]
        seed_seq = self.dec_seed(ad.concat([z, Tensor(self._condition(class_idx))], axis=1))
        h = ad.reshape(seed_seq, (batch, self.cfg.window_len, self.cfg.embed_dim))
        h = ad.layer_norm(ad.add(h, self.dec_attn(h, capture)))
        return self.dec_out(h)

    def loss(self, x: np.ndarray, class_idx: np.ndarray, eps: np.ndarray) -> Tensor:
        """Reconstruction MSE plus weighted KL to the standard normal."""
        mu, logvar = self.encode(x, class_idx)
        recon = self.decode(self.sample_latent(mu, logvar, eps), class_idx)
        mse = ad.tmean(ad.powc(ad.sub(recon, Tensor(x)), 2.0))
        kl_terms = ad.sub(ad.add(ad.mul(mu, mu), ad.exp(logvar)), ad.add(logvar, 1.0))
        kl = ad.tmean(ad.mul(ad.tsum(kl_terms, axis=1), 0.5))
        return ad.add(mse, ad.mul(kl, self.cfg.kl_weight))


def build_aae(cfg: AaeConfig, seed: int) -> AttentionAutoencoder:
    return AttentionAutoencoder(cfg, seed)


def train_aae(
    model: AttentionAutoencoder,
    windows: np.ndarray,
    class_idx: np.ndarray,
    tcfg: AaeTrainConfig,
) -> list[float]:
    """Adam at fixed lr; returns the per-epoch mean loss curve.

    Randomness streams: "order" (batch shuffles) and "noise" (latent
    eps), both derived from tcfg.seed.
    """
    n = len(windows)
    if n == 0:
        raise StreamError("AAE training set is empty")
    class_idx = np.asarray(class_idx)
    if np.any(class_idx >= N_CONDITION):
        raise StreamError("class 8100 must be filtered from AAE training data")
    params = model.params()
    state = AdamState.for_params(params)
    order_rng = Prng(tcfg.seed).derive("order")
    noise_rng = Prng(tcfg.seed).derive("noise")
    curve = []
    for _ in range(tcfg.epochs):
        order = np.array(order_rng.shuffle(list(range(n))))
        total = 0.0
        for lo in range(0, n, tcfg.batch_size):
            batch = order[lo : lo + tcfg.batch_size]
            eps = noise_rng.gaussian((len(batch), model.cfg.latent_dim))
            with Tape() as tape:
                loss = model.loss(windows[batch], class_idx[batch], eps)
                grads = tape.gradients(loss, params)
            adam_step(params, grads, state, tcfg.lr)
            total += float(loss.data) * len(batch)
        curve.append(total / n)
    return curve


def generate_segment(
    model: AttentionAutoencoder,
    label: int,
    length: int,
    prng: Prng,
    gap_ms: int = 1,
) -> ActivitySegment:
    """Decode fresh N(0, I) latents, tiling whole windows and cropping the
    last one to hit ``length`` exactly."""
    if label not in GENERATED_CLASS_IDS:
        raise StreamError(f"cannot generate class {label}: only classes 100..1000")
    if length < 1:
        raise StreamError(f"segment length must be >= 1, got {length}")
    idx = np.array([LABELS.index(label)])
    chunks = []
    produced = 0
    while produced < length:
        z = prng.gaussian((1, model.cfg.latent_dim))
        window = model.decode(z, idx).data[0]
        take = min(model.cfg.window_len, length - produced)
        chunks.append(window[:take])
        produced += take
    values = np.concatenate(chunks)
    timestamps = np.arange(length, dtype=np.int64) * gap_ms
    return ActivitySegment(label=label, timestamps=timestamps, values=values)


def generate_dataset(
    model: AttentionAutoencoder,
    length_dist: dict[int, SegmentLengthDist],
    class_mix: dict[int, float],
    total_frames: int,
    prng: Prng,
    gap_ms: int = 1,
) -> list[ActivitySegment]:
    """Labeled segments drawn from ``class_mix`` with per-class empirical
    lengths until ``total_frames`` is reached (last segment cropped)."""
    if total_frames < 1:
        raise StreamError("total_frames must be >= 1")
    classes = sorted(class_mix)
    if any(c not in GENERATED_CLASS_IDS for c in classes):
        raise StreamError("class_mix may only contain classes 100..1000")
    weights = np.array([class_mix[c] for c in classes])
    if abs(weights.sum() - 1.0) > 1e-9 or np.any(weights < 0):
        raise StreamError("class_mix must be a distribution summing to 1")
    for c in classes:
        if c not in length_dist:
            raise StreamError(f"no segment length distribution for class {c}")
    cum = np.cumsum(weights)
    segments = []
    produced = 0
    while produced < total_frames:
        label = classes[int(np.searchsorted(cum, prng.uniform()))]
        dist = length_dist[label]
        length = max(dist.min_len, int(round(prng.gaussian() * dist.std + dist.mean)))
        length = min(length, total_frames - produced)
        segments.append(generate_segment(model, label, length, prng, gap_ms))
        produced += length
    return segments
