"""Transformer encoder with spatially-aware attention.

The attention logit adds a spatial term: the query of head h is dotted with
the shared pair embedding of the (i, j) block pair, both terms scaled by
1/sqrt(head_dim). Two ablation encodings are included for comparison runs:
``absolute`` (grid-bucketed x/y tables added to token embeddings) and
``axis_bias`` (a learned per-bucket scalar added to the logit).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import Params, Tensor, glorot
from .spatial import init_spatial_params, pairwise_embeddings_pixels

__all__ = ["EncoderConfig", "TokenBatch", "init_encoder_params", "encode", "NEG_INF"]

NEG_INF = -1e9

SPATIAL_MODES = ("relative", "absolute", "axis_bias", "none")


@dataclass
class EncoderConfig:
    num_layers: int = 2
    hidden: int = 64
    heads: int = 4
    ffn: int = 256
    vocab: int = 1024
    max_tokens: int = 64
    sinusoid_dim: int = 8
    sinusoid_scale: float = 100.0
    spatial_mode: str = "relative"
    use_1d_positions: bool = False
    dropout: float = 0.1
    abs_grid: int = 128
    bias_buckets: int = 65
    layer_norm_eps: float = 1e-12

    def __post_init__(self):
        if self.hidden % self.heads != 0:
            raise ValueError(f"hidden {self.hidden} not divisible by heads {self.heads}")
        if self.spatial_mode not in SPATIAL_MODES:
            raise ValueError(f"unknown spatial_mode {self.spatial_mode!r}")
        if self.bias_buckets % 2 != 1:
            raise ValueError("bias_buckets must be odd (signed, centered at zero)")

    @property
    def head_dim(self):
        return self.hidden // self.heads


@dataclass
class TokenBatch:
    """Model input for a batch of documents, padded to a common length."""

    ids: np.ndarray          # [B, N] int
    pixel_quads: np.ndarray  # [B, N, 4, 2] float64, raw page units
    page_sizes: np.ndarray   # [B, 2] (width, height)
    mask: np.ndarray         # [B, N] bool, False = padding
    special: np.ndarray = None  # [B, N] bool, True for [CLS]/[SEP]/[PAD]

    def __post_init__(self):
        if self.special is None:
            self.special = ~self.mask

    def norm_quads(self) -> np.ndarray:
        """Normalized quads [B, N, 4, 2], clamped to [0, 1]."""
        q = self.pixel_quads / self.page_sizes[:, None, None, :]
        return np.clip(q, 0.0, 1.0)


def init_encoder_params(config: EncoderConfig, rng: np.random.Generator, params: Params | None = None) -> Params:
    p = params if params is not None else Params()
    H, F, V = config.hidden, config.ffn, config.vocab
    p.add("emb.tok", glorot(rng, V, H))
    if config.use_1d_positions:
        p.add("emb.pos", glorot(rng, config.max_tokens, H))
    if config.spatial_mode == "absolute":
        p.add("emb.abs_x", glorot(rng, config.abs_grid, H))
        p.add("emb.abs_y", glorot(rng, config.abs_grid, H))
    if config.spatial_mode == "axis_bias":
        p.add("bias.x", np.zeros((config.bias_buckets, 1), dtype=ag.get_dtype()))
        p.add("bias.y", np.zeros((config.bias_buckets, 1), dtype=ag.get_dtype()))
    if config.spatial_mode == "relative":
        init_spatial_params(p, rng, config.head_dim, config.sinusoid_dim)
    p.add("emb.ln.gamma", np.ones(H, dtype=ag.get_dtype()))
    p.add("emb.ln.beta", np.zeros(H, dtype=ag.get_dtype()))
    for i in range(config.num_layers):
        pre = f"layer{i}"
        for w in ("wq", "wk", "wv", "wo"):
            p.add(f"{pre}.attn.{w}", glorot(rng, H, H))
            if w != "wk":  # a key bias shifts every logit in a row equally: a no-op under softmax
                p.add(f"{pre}.attn.{w[1]}b", np.zeros(H, dtype=ag.get_dtype()))
        p.add(f"{pre}.ln1.gamma", np.ones(H, dtype=ag.get_dtype()))
        p.add(f"{pre}.ln1.beta", np.zeros(H, dtype=ag.get_dtype()))
        p.add(f"{pre}.ffn.w1", glorot(rng, H, F))
        p.add(f"{pre}.ffn.b1", np.zeros(F, dtype=ag.get_dtype()))
        p.add(f"{pre}.ffn.w2", glorot(rng, F, H))
        p.add(f"{pre}.ffn.b2", np.zeros(H, dtype=ag.get_dtype()))
        p.add(f"{pre}.ln2.gamma", np.ones(H, dtype=ag.get_dtype()))
        p.add(f"{pre}.ln2.beta", np.zeros(H, dtype=ag.get_dtype()))
    return p


def absolute_buckets(coord: np.ndarray, grid: int) -> np.ndarray:
    """Quantize a [0,1] coordinate to a grid bucket; 1.0 clamps to grid-1."""
    return np.clip((coord * grid).astype(np.int64), 0, grid - 1)


def axis_bucket(diff: np.ndarray, buckets: int) -> np.ndarray:
    """Signed log-scale bucket for a normalized coordinate difference.

    Near-zero differences get linear resolution, larger ones logarithmic;
    bucket(-d) mirrors bucket(d) around the center bucket.
    """
    half = buckets // 2
    linear = half // 4  # exact buckets before the log region
    q = np.rint(np.abs(diff) * 2 * half)
    with np.errstate(divide="ignore"):
        logpart = linear + np.floor(
            np.log(np.maximum(q, linear) / linear)
            / np.log((2 * half) / linear)
            * (half - linear)
        )
    mag = np.where(q < linear, q, np.minimum(logpart, half))
    return (half + np.sign(diff) * mag).astype(np.int64)


def _split_heads(x: Tensor, B: int, N: int, A: int, dh: int) -> Tensor:
    return ag.transpose(ag.reshape(x, (B, N, A, dh)), (0, 2, 1, 3))


def _attention(x, pair, mask_bias, config, params, prefix, axis_bias_const, rng):
    B, N, _ = x.shape
    A, dh = config.heads, config.head_dim
    q = _split_heads(ag.add(ag.matmul(x, params[f"{prefix}.wq"]), params[f"{prefix}.qb"]), B, N, A, dh)
    k = _split_heads(ag.matmul(x, params[f"{prefix}.wk"]), B, N, A, dh)
    v = _split_heads(ag.add(ag.matmul(x, params[f"{prefix}.wv"]), params[f"{prefix}.vb"]), B, N, A, dh)

    inv = 1.0 / np.sqrt(dh)
    logits = ag.scale(ag.matmul(q, ag.transpose(k, (0, 1, 3, 2))), inv)
    if pair is not None:
        logits = ag.add(logits, ag.scale(ag.pair_term(q, pair), inv))
    if axis_bias_const is not None:
        logits = ag.add(logits, axis_bias_const)
    logits = ag.add_const(logits, mask_bias)
    attn = ag.softmax(logits, axis=-1)
    attn = ag.dropout(attn, config.dropout, rng)
    ctx = ag.matmul(attn, v)  # [B, A, N, dh]
    ctx = ag.reshape(ag.transpose(ctx, (0, 2, 1, 3)), (B, N, A * dh))
    return ag.add(ag.matmul(ctx, params[f"{prefix}.wo"]), params[f"{prefix}.ob"])


def _axis_bias_term(batch: TokenBatch, config: EncoderConfig, params: Params) -> Tensor:
    tl = batch.norm_quads()[:, :, 0, :]  # [B, N, 2]
    dx = tl[:, :, None, 0] - tl[:, None, :, 0]
    dy = tl[:, :, None, 1] - tl[:, None, :, 1]
    bx = ag.embedding(params["bias.x"], axis_bucket(dx, config.bias_buckets))
    by = ag.embedding(params["bias.y"], axis_bucket(dy, config.bias_buckets))
    bias = ag.add(bx, by)  # [B, N, N, 1]
    B, N = batch.ids.shape
    return ag.reshape(bias, (B, 1, N, N))


def encode(
    batch: TokenBatch,
    config: EncoderConfig,
    params: Params,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Final-layer token representations, shape [B, N, H].

    ``rng`` enables dropout (training); pass None for deterministic
    evaluation. The pair embedding table is computed once and shared by
    every head and every layer.
    """
    ids = np.asarray(batch.ids)
    if ids.min() < 0 or ids.max() >= config.vocab:
        raise ValueError(f"token id out of range [0, {config.vocab})")
    B, N = ids.shape

    x = ag.embedding(params["emb.tok"], ids)
    if config.use_1d_positions:
        pos = ag.embedding(params["emb.pos"], np.tile(np.arange(N), (B, 1)))
        x = ag.add(x, pos)
    if config.spatial_mode == "absolute":
        tl = batch.norm_quads()[:, :, 0, :]
        x = ag.add(x, ag.embedding(params["emb.abs_x"], absolute_buckets(tl[:, :, 0], config.abs_grid)))
        x = ag.add(x, ag.embedding(params["emb.abs_y"], absolute_buckets(tl[:, :, 1], config.abs_grid)))
    x = ag.layer_norm(x, params["emb.ln.gamma"], params["emb.ln.beta"], config.layer_norm_eps)
    x = ag.dropout(x, config.dropout, rng)

    pair = None
    if config.spatial_mode == "relative":
        pair = pairwise_embeddings_pixels(
            batch.pixel_quads, batch.page_sizes, params, config.sinusoid_dim, config.sinusoid_scale
        )
    axis_bias_const = None
    if config.spatial_mode == "axis_bias":
        axis_bias_const = _axis_bias_term(batch, config, params)

    # padded key columns get a large negative bias; exp underflows to zero
    mask_bias = np.where(batch.mask[:, None, None, :], 0.0, NEG_INF).astype(ag.get_dtype())

    for i in range(config.num_layers):
        pre = f"layer{i}"
        a = _attention(x, pair, mask_bias, config, params, f"{pre}.attn", axis_bias_const, rng)
        a = ag.dropout(a, config.dropout, rng)
        x = ag.layer_norm(ag.add(x, a), params[f"{pre}.ln1.gamma"], params[f"{pre}.ln1.beta"], config.layer_norm_eps)
        h = ag.gelu(ag.add(ag.matmul(x, params[f"{pre}.ffn.w1"]), params[f"{pre}.ffn.b1"]))
        h = ag.add(ag.matmul(h, params[f"{pre}.ffn.w2"]), params[f"{pre}.ffn.b2"])
        h = ag.dropout(h, config.dropout, rng)
        x = ag.layer_norm(ag.add(x, h), params[f"{pre}.ln2.gamma"], params[f"{pre}.ln2.beta"], config.layer_norm_eps)
    return x
