"""Synthetic form-, receipt-, and table-style documents with ground truth.

Layouts are cursor-based (top to bottom, left to right) so blocks never
overlap by construction. All coordinates are integers, which keeps the
downstream spatial-embedding invariance checks exact. The natural
construction order doubles as the reading order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import pools
from .documents import Document, GoldEntity, TextBlock

__all__ = ["GeneratorConfig", "GenerationError", "generate"]

CHAR_W = 5
LINE_H = 18

FAMILIES = ("form_kv", "receipt", "table", "multi_column")


class GenerationError(RuntimeError):
    """Layout could not be packed within the retry budget."""


@dataclass
class GeneratorConfig:
    layout_family: str = "form_kv"
    page_w_range: tuple[int, int] = (720, 1024)
    page_h_range: tuple[int, int] = (900, 1280)
    rows_range: tuple[int, int] = (14, 18)
    jitter: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.layout_family not in FAMILIES:
            raise ValueError(f"unknown layout family {self.layout_family!r}")
        for r in (self.page_w_range, self.page_h_range, self.rows_range):
            if r[0] > r[1]:
                raise ValueError(f"empty range {r}")


def _text_w(text: str) -> int:
    return CHAR_W * len(text)


class _Builder:
    def __init__(self):
        self.blocks: list[TextBlock] = []
        self.entities: list[GoldEntity] = []
        self.links: list[tuple[int, int]] = []

    def block(self, text: str, x: int, y: int) -> int:
        bid = len(self.blocks)
        w, h = _text_w(text), LINE_H
        quad = [[x, y], [x + w, y], [x + w, y + h], [x, y + h]]
        self.blocks.append(TextBlock(bid, text, quad))
        return bid

    def entity(self, class_name: str, block_ids: list[int]) -> GoldEntity:
        e = GoldEntity(class_name, list(block_ids))
        self.entities.append(e)
        return e

    def link(self, src: GoldEntity, dst: GoldEntity):
        self.links.append((src.head_block, dst.head_block))

    def token_count(self) -> int:
        return sum(len(b.text.split()) for b in self.blocks)


def _jitter(rng, j):
    return int(rng.integers(-j, j + 1)) if j > 0 else 0


def _word_blocks(rng, cfg, b: _Builder, words, x, y, gap=50):
    """One block per word, left to right; returns (block ids, end x)."""
    ids = []
    for w in words:
        w = str(w)
        ids.append(b.block(w, x, y + _jitter(rng, cfg.jitter)))
        x += _text_w(w) + gap
    return ids, x - gap


def _form_rows(rng, cfg, b: _Builder, page_w, page_h, columns=1):
    margin = 48
    rows = int(rng.integers(cfg.rows_range[0], cfg.rows_range[1] + 1))
    col_w = (page_w - 2 * margin) // columns
    y = margin
    row_gap = max(30, (page_h - 2 * margin) // rows - LINE_H)
    for r in range(rows):
        if y + LINE_H > page_h - margin:
            break
        for c in range(columns):
            x0 = margin + c * col_w
            if r == 0 and c == 0 and rng.random() < 0.5:
                hdr, _ = _word_blocks(rng, cfg, b, [rng.choice(pools.HEADERS)], x0, y)
                b.entity("header", hdr)
                continue
            n_key = 1 if rng.random() < 0.5 else 2
            key_words = rng.choice(pools.FORM_KEYS, size=n_key, replace=False)
            kb, key_end = _word_blocks(rng, cfg, b, key_words, x0 + _jitter(rng, cfg.jitter), y)
            q = b.entity("question", kb)
            n_val = 1 if rng.random() < 0.5 else 2
            val_pool = pools.FORM_VALUES if rng.random() < 0.6 else pools.NUMBERS
            val_words = rng.choice(val_pool, size=n_val, replace=False)
            val_w = sum(_text_w(str(w)) + 50 for w in val_words) - 50
            vx = key_end + int(rng.integers(60, 130))
            vx = max(min(vx, x0 + col_w - val_w - 10), key_end + 40)
            vb, _ = _word_blocks(rng, cfg, b, val_words, vx, y)
            a = b.entity("answer", vb)
            b.link(q, a)
        y += LINE_H + row_gap


def _receipt(rng, cfg, b: _Builder, page_w, page_h):
    margin = 40
    y = margin
    store = b.block(
        " ".join(rng.choice(pools.STORES, size=2, replace=False)), page_w // 3, y
    )
    b.entity("store", [store])
    y += LINE_H + 30
    rows = int(rng.integers(cfg.rows_range[0], cfg.rows_range[1] + 1))
    for _ in range(rows):
        if y + LINE_H > page_h - margin:
            break
        n = 1 if rng.random() < 0.6 else 2
        name = " ".join(rng.choice(pools.MENU_ITEMS, size=n, replace=False))
        item = b.entity("item", [b.block(name, margin + _jitter(rng, cfg.jitter), y)])
        price_text = str(rng.choice(pools.PRICES))
        px = page_w - margin - _text_w(price_text)
        price = b.entity("price", [b.block(price_text, px, y + _jitter(rng, cfg.jitter))])
        b.link(item, price)
        y += LINE_H + int(rng.integers(20, 36))


def _table(rng, cfg, b: _Builder, page_w, page_h):
    margin = 48
    cols = int(rng.integers(3, 5))
    rows = min(int(rng.integers(cfg.rows_range[0], cfg.rows_range[1] + 1)), 7)
    col_w = (page_w - 2 * margin) // cols
    row_h = LINE_H + 26
    headers = []
    names = rng.choice(pools.TABLE_HEADERS, size=cols, replace=False)
    for c in range(cols):
        h = b.entity("header", [b.block(str(names[c]), margin + c * col_w, margin)])
        headers.append(h)
    for r in range(1, rows):
        y = margin + r * row_h
        if y + LINE_H > page_h - margin:
            break
        for c in range(cols):
            cell = b.entity(
                "cell",
                [b.block(str(rng.choice(pools.NUMBERS)), margin + c * col_w + _jitter(rng, cfg.jitter), y)],
            )
            b.link(cell, headers[c])


def _check_disjoint(blocks: list[TextBlock]):
    rects = [(b.quad[0, 0], b.quad[0, 1], b.quad[2, 0], b.quad[2, 1]) for b in blocks]
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            a, c = rects[i], rects[j]
            if a[0] < c[2] and c[0] < a[2] and a[1] < c[3] and c[1] < a[3]:
                return False
    return True


def _one_document(rng: np.random.Generator, config: GeneratorConfig, max_tokens: int) -> Document:
    for _ in range(20):
        page_w = int(rng.integers(config.page_w_range[0], config.page_w_range[1] + 1))
        page_h = int(rng.integers(config.page_h_range[0], config.page_h_range[1] + 1))
        b = _Builder()
        if config.layout_family == "form_kv":
            _form_rows(rng, config, b, page_w, page_h)
        elif config.layout_family == "multi_column":
            _form_rows(rng, config, b, page_w, page_h, columns=2)
        elif config.layout_family == "receipt":
            _receipt(rng, config, b, page_w, page_h)
        else:
            _table(rng, config, b, page_w, page_h)
        if b.blocks and b.token_count() <= max_tokens and _check_disjoint(b.blocks):
            return Document(
                page_w=page_w,
                page_h=page_h,
                blocks=b.blocks,
                order=list(range(len(b.blocks))),
                entities=b.entities,
                links=b.links,
            )
    raise GenerationError("could not pack a valid layout in 20 attempts")


def generate(config: GeneratorConfig, n: int, max_tokens: int = 60) -> list[Document]:
    """Deterministic corpus of ``n`` documents; per-document derived seeds."""
    children = np.random.SeedSequence(config.seed).spawn(n)
    return [_one_document(np.random.default_rng(s), config, max_tokens) for s in children]
