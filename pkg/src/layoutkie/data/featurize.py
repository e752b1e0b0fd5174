"""Turn documents into padded model inputs and token-level gold labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..encoder import TokenBatch
from ..heads import Entity, bio_tags_for_entities, tag_index
from ..spatial import QuadBox, normalize_box
from .documents import Document
from .tokenizer import Vocabulary

__all__ = ["DocumentFeatures", "featurize", "featurize_batch", "class_list"]


def class_list(docs) -> list[str]:
    """Stable class-name ordering across a dataset."""
    return sorted({e.class_name for d in docs for e in d.entities})


@dataclass
class DocumentFeatures:
    """One document, tokenized and aligned to a fixed length N."""

    ids: np.ndarray            # [N] int
    pixel_quads: np.ndarray    # [N, 4, 2]
    mask: np.ndarray           # [N] bool (True = real token incl. CLS/SEP)
    special: np.ndarray        # [N] bool
    token_block: np.ndarray    # [N] block id, -1 for specials/padding
    page: tuple[float, float]
    block_boxes: list[QuadBox]         # normalized, indexed by block id
    tokens_per_block: list[int]
    entities: list[Entity]             # gold, token positions
    itc: np.ndarray            # [N] class id, C = non-initial
    stc: np.ndarray            # [N] successor (0 = STOP, j+1 = token j)
    rel: np.ndarray            # [N, N] binary link matrix over head tokens
    bio: np.ndarray            # [N] tag indices
    classes: list[str]


def featurize(doc: Document, vocab: Vocabulary, classes: list[str], max_tokens: int) -> DocumentFeatures:
    """Tokenize in reading order. Blocks past the token budget are dropped,
    along with entities and links that reference them."""
    N = max_tokens
    C = len(classes)
    ids = np.full(N, vocab.pad_id, dtype=np.int64)
    quads = np.zeros((N, 4, 2), dtype=np.float64)
    token_block = np.full(N, -1, dtype=np.int64)
    mask = np.zeros(N, dtype=bool)
    special = np.zeros(N, dtype=bool)

    ids[0] = vocab.cls_id
    mask[0] = special[0] = True
    pos = 1
    spans: dict[int, list[int]] = {}
    kept = set()
    for block in doc.ordered_blocks():
        toks = vocab.tokenize(block.text)
        if pos + len(toks) + 1 > N:  # leave room for [SEP]
            continue
        spans[block.block_id] = list(range(pos, pos + len(toks)))
        kept.add(block.block_id)
        for t in toks:
            ids[pos] = t
            quads[pos] = block.quad
            token_block[pos] = block.block_id
            mask[pos] = True
            pos += 1
    ids[pos] = vocab.sep_id
    mask[pos] = special[pos] = True

    n_blocks = len(doc.blocks)
    tokens_per_block = [0] * n_blocks
    block_boxes = []
    for b in sorted(doc.blocks, key=lambda b: b.block_id):
        block_boxes.append(normalize_box(b.quad, doc.page_w, doc.page_h))
        tokens_per_block[b.block_id] = len(spans.get(b.block_id, []))

    entities = []
    head_block_to_head_tok = {}
    for e in doc.entities:
        if not all(b in kept for b in e.block_ids):
            continue
        toks = [t for b in e.block_ids for t in spans[b]]
        ent = Entity(classes.index(e.class_name), tuple(toks))
        entities.append(ent)
        head_block_to_head_tok[e.head_block] = ent.head

    itc = np.full(N, C, dtype=np.int64)
    stc = np.zeros(N, dtype=np.int64)
    for e in entities:
        itc[e.head] = e.class_id
        for a, b in zip(e.token_ids, e.token_ids[1:]):
            stc[a] = b + 1

    rel = np.zeros((N, N), dtype=np.float64)
    for s, t in doc.links:
        if s in head_block_to_head_tok and t in head_block_to_head_tok:
            rel[head_block_to_head_tok[s], head_block_to_head_tok[t]] = 1.0

    bio = np.array(
        [tag_index(t, C) for t in bio_tags_for_entities(entities, N)], dtype=np.int64
    )

    return DocumentFeatures(
        ids=ids,
        pixel_quads=quads,
        mask=mask,
        special=special,
        token_block=token_block,
        page=(float(doc.page_w), float(doc.page_h)),
        block_boxes=block_boxes,
        tokens_per_block=tokens_per_block,
        entities=entities,
        itc=itc,
        stc=stc,
        rel=rel,
        bio=bio,
        classes=list(classes),
    )


def featurize_batch(feats: list[DocumentFeatures]) -> TokenBatch:
    return TokenBatch(
        ids=np.stack([f.ids for f in feats]),
        pixel_quads=np.stack([f.pixel_quads for f in feats]),
        page_sizes=np.array([f.page for f in feats], dtype=np.float64),
        mask=np.stack([f.mask for f in feats]),
        special=np.stack([f.special for f in feats]),
    )
