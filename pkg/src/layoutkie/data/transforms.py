"""Serialization-robustness transforms: reorder and rotate documents."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .documents import Document, TextBlock

__all__ = ["transform_order", "rotate", "ORDER_MODES"]

ORDER_MODES = ("identity", "permute", "xy", "yx")


def _sorted_order(doc: Document, key) -> list[int]:
    return [b.block_id for b in sorted(doc.blocks, key=key)]


def transform_order(doc: Document, mode: str, seed: int = 0) -> Document:
    """New document with the block order replaced; geometry and labels kept."""
    if mode == "identity":
        order = list(doc.order)
    elif mode == "permute":
        rng = np.random.default_rng(seed)
        order = list(doc.order)
        rng.shuffle(order)
    elif mode == "xy":
        order = _sorted_order(doc, lambda b: (b.quad[0, 0], b.quad[0, 1]))
    elif mode == "yx":
        order = _sorted_order(doc, lambda b: (b.quad[0, 1], b.quad[0, 0]))
    else:
        raise ValueError(f"unknown order mode {mode!r}")
    return replace(doc, order=order)


def rotate(doc: Document, angle_deg: float) -> Document:
    """Rotate all block boxes about the page center, then re-serialize (yx).

    The page is re-bounded to contain every rotated vertex; vertex order
    within each quad is preserved, so boxes are no longer axis-aligned.
    """
    if not -45.0 < angle_deg < 45.0:
        raise ValueError("rotation angle must be in (-45, 45) degrees")
    theta = math.radians(angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    center = np.array([doc.page_w / 2.0, doc.page_h / 2.0])

    quads = [(b.quad - center) @ rot.T + center for b in doc.blocks]
    allv = np.concatenate(quads, axis=0)
    shift = -np.minimum(allv.min(axis=0), 0.0)
    quads = [q + shift for q in quads]
    extent = np.concatenate(quads, axis=0).max(axis=0)
    new_w = max(doc.page_w, float(np.ceil(extent[0])))
    new_h = max(doc.page_h, float(np.ceil(extent[1])))

    blocks = [TextBlock(b.block_id, b.text, q) for b, q in zip(doc.blocks, quads)]
    out = replace(doc, page_w=new_w, page_h=new_h, blocks=blocks)
    return transform_order(out, "yx")
