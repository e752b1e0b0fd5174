"""Box normalization and relative 2D positional features.

Every pair of text blocks (i, j) gets a shared embedding built from
sinusoidal encodings of the per-vertex coordinate differences, combined by
four learned linear maps (one per vertex). The embedding has dimension
H/A and is shared by all attention heads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import DimensionError, Params, Tensor, glorot, matmul, reshape

__all__ = [
    "QuadBox",
    "ZERO_BOX",
    "normalize_box",
    "sinusoid",
    "relative_vertex_features",
    "combine_relative",
    "pairwise_embeddings",
    "pairwise_embeddings_pixels",
    "init_spatial_params",
    "SPATIAL_PARAM_NAMES",
]

VERTICES = ("tl", "tr", "br", "bl")
SPATIAL_PARAM_NAMES = tuple(f"spatial.w_{v}" for v in VERTICES)


@dataclass(frozen=True)
class QuadBox:
    """Four-vertex box in normalized page coordinates.

    Vertex order is top-left, top-right, bottom-right, bottom-left. After a
    rotation transform the axis-alignment of vertices is relaxed but the
    order is kept.
    """

    p_tl: tuple[float, float]
    p_tr: tuple[float, float]
    p_br: tuple[float, float]
    p_bl: tuple[float, float]

    def vertices(self) -> np.ndarray:
        return np.array([self.p_tl, self.p_tr, self.p_br, self.p_bl], dtype=np.float64)

    def center(self) -> tuple[float, float]:
        v = self.vertices()
        return float(v[:, 0].mean()), float(v[:, 1].mean())

    def width(self) -> float:
        return float(self.p_tr[0] - self.p_tl[0])

    def height(self) -> float:
        return float(self.p_bl[1] - self.p_tl[1])

    @staticmethod
    def from_rect(x0, y0, x1, y1) -> "QuadBox":
        return QuadBox((x0, y0), (x1, y0), (x1, y1), (x0, y1))

    @staticmethod
    def from_flat(vals) -> "QuadBox":
        v = [float(x) for x in vals]
        if len(v) != 8:
            raise DimensionError(f"quad needs 8 coordinates, got {len(v)}")
        return QuadBox((v[0], v[1]), (v[2], v[3]), (v[4], v[5]), (v[6], v[7]))

    def flat(self) -> list[float]:
        return [c for p in (self.p_tl, self.p_tr, self.p_br, self.p_bl) for c in p]


ZERO_BOX = QuadBox((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0))


def normalize_box(raw_quad, page_width: float, page_height: float) -> QuadBox:
    """Divide pixel coordinates by the page size and clamp into [0, 1]."""
    if page_width <= 0 or page_height <= 0:
        raise ValueError(f"page size must be positive, got {page_width}x{page_height}")
    quad = raw_quad.vertices() if isinstance(raw_quad, QuadBox) else np.asarray(raw_quad, dtype=np.float64).reshape(4, 2)
    out = np.empty_like(quad)
    out[:, 0] = np.clip(quad[:, 0] / page_width, 0.0, 1.0)
    out[:, 1] = np.clip(quad[:, 1] / page_height, 0.0, 1.0)
    return QuadBox(tuple(out[0]), tuple(out[1]), tuple(out[2]), tuple(out[3]))


def sinusoid(d, dim: int, sin_scale: float = 100.0) -> np.ndarray:
    """Sin/cos feature vector of a scalar difference (or array of them).

    Component 2k is sin(scale*d / 10000^(2k/dim)), component 2k+1 the
    matching cos. ``dim`` must be even.
    """
    if dim % 2 != 0 or dim <= 0:
        raise ValueError(f"sinusoid dim must be even and positive, got {dim}")
    d = np.asarray(d, dtype=np.float64)
    k = np.arange(dim // 2, dtype=np.float64)
    freq = sin_scale / np.power(10000.0, 2.0 * k / dim)
    ang = d[..., None] * freq
    out = np.empty(d.shape + (dim,), dtype=np.float64)
    out[..., 0::2] = np.sin(ang)
    out[..., 1::2] = np.cos(ang)
    return out


def relative_vertex_features(box_i: QuadBox, box_j: QuadBox, dim: int, sin_scale: float = 100.0):
    """Per-vertex features [f(x_i - x_j); f(y_i - y_j)], one per vertex."""
    vi, vj = box_i.vertices(), box_j.vertices()
    d = vi - vj
    feats = {}
    for idx, name in enumerate(VERTICES):
        feats[name] = np.concatenate(
            [sinusoid(d[idx, 0], dim, sin_scale), sinusoid(d[idx, 1], dim, sin_scale)]
        )
    return feats


def init_spatial_params(params: Params, rng: np.random.Generator, head_dim: int, dim: int):
    """Four (2*dim -> head_dim) combination matrices, stored input-major."""
    for name in SPATIAL_PARAM_NAMES:
        params.add(name, glorot(rng, 2 * dim, head_dim))


def combine_relative(features: dict, params: Params) -> Tensor:
    """Sum of the four per-vertex linear projections for a single pair."""
    out = None
    for v, name in zip(VERTICES, SPATIAL_PARAM_NAMES):
        feat = np.asarray(features[v], dtype=np.float64)
        w = params[name]
        if feat.shape[-1] != w.data.shape[0]:
            raise DimensionError(
                f"vertex feature dim {feat.shape[-1]} != matrix rows {w.data.shape[0]}"
            )
        term = matmul(Tensor(feat[None, :]), w)
        out = term if out is None else out + term
    return reshape(out, (out.shape[-1],))


def _pair_features(diff: np.ndarray, dim: int, sin_scale: float) -> np.ndarray:
    """Features from a [B,N,N,4,2] difference array -> [B,N,N,4,2*dim]."""
    fx = sinusoid(diff[..., 0], dim, sin_scale)
    fy = sinusoid(diff[..., 1], dim, sin_scale)
    return np.concatenate([fx, fy], axis=-1)


def _combine(feats: np.ndarray, params: Params) -> Tensor:
    out = None
    for idx, name in enumerate(SPATIAL_PARAM_NAMES):
        term = matmul(Tensor(feats[..., idx, :]), params[name])
        out = term if out is None else out + term
    return out


def pairwise_embeddings(boxes, params: Params, dim: int, sin_scale: float = 100.0) -> Tensor:
    """Shared pair embedding table, shape [B, N, N, H/A].

    ``boxes`` is a list of QuadBox (one document) or a list of such lists
    (a batch). The result participates in the differentiation graph through
    the four combination matrices.
    """
    if boxes and isinstance(boxes[0], QuadBox):
        boxes = [boxes]
    arr = np.stack(
        [np.stack([b.vertices() for b in doc], axis=0) for doc in boxes], axis=0
    )  # [B, N, 4, 2]
    diff = arr[:, :, None, :, :] - arr[:, None, :, :, :]
    return _combine(_pair_features(diff, dim, sin_scale), params)


def pairwise_embeddings_pixels(
    pixel_quads: np.ndarray,
    page_sizes: np.ndarray,
    params: Params,
    dim: int,
    sin_scale: float = 100.0,
) -> Tensor:
    """Pair embeddings computed as (pixel difference) / page size.

    Subtracting before dividing keeps the result bit-identical under
    integer pixel translations and joint page/box scaling; dividing first
    would lose that to rounding. ``pixel_quads`` is [B, N, 4, 2] and
    ``page_sizes`` is [B, 2] (width, height).
    """
    q = np.asarray(pixel_quads, dtype=np.float64)
    pages = np.asarray(page_sizes, dtype=np.float64)
    if (pages <= 0).any():
        raise ValueError("page sizes must be positive")
    diff = q[:, :, None, :, :] - q[:, None, :, :, :]
    diff = diff / pages[:, None, None, None, :]
    return _combine(_pair_features(diff, dim, sin_scale), params)
