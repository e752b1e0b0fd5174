"""Document model: a page of text blocks with ground-truth entities and links."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np


class SchemaError(ValueError):
    """A document record is missing or misusing a required field."""


@dataclass
class TextBlock:
    block_id: int
    text: str
    quad: np.ndarray  # [4, 2] page-unit coordinates, tl/tr/br/bl

    def __post_init__(self):
        if not self.text:
            raise SchemaError(f"block {self.block_id} has empty text")
        self.quad = np.asarray(self.quad, dtype=np.float64).reshape(4, 2)

    def center(self) -> tuple[float, float]:
        return float(self.quad[:, 0].mean()), float(self.quad[:, 1].mean())


@dataclass
class GoldEntity:
    class_name: str
    block_ids: list[int]

    @property
    def head_block(self) -> int:
        return self.block_ids[0]


@dataclass
class Document:
    page_w: float
    page_h: float
    blocks: list[TextBlock]
    order: list[int]
    entities: list[GoldEntity] = field(default_factory=list)
    links: list[tuple[int, int]] = field(default_factory=list)  # (head block, head block)
    split: str = ""
    extra: dict = field(default_factory=dict)  # unknown fields, preserved on write

    def __post_init__(self):
        ids = {b.block_id for b in self.blocks}
        if sorted(self.order) != sorted(ids):
            raise SchemaError("order is not a permutation of block ids")
        for e in self.entities:
            missing = set(e.block_ids) - ids
            if missing:
                raise SchemaError(f"entity references unknown blocks {sorted(missing)}")
        heads = {e.head_block for e in self.entities}
        for s, t in self.links:
            if s not in heads or t not in heads:
                raise SchemaError(f"link ({s}, {t}) does not join entity head blocks")

    def block(self, block_id: int) -> TextBlock:
        for b in self.blocks:
            if b.block_id == block_id:
                return b
        raise KeyError(block_id)

    def ordered_blocks(self) -> list[TextBlock]:
        by_id = {b.block_id: b for b in self.blocks}
        return [by_id[i] for i in self.order]

    def content_hash(self) -> str:
        """Hash of everything except the serialization order."""
        payload = {
            "page": [self.page_w, self.page_h],
            "blocks": sorted(
                [b.block_id, b.text, [round(v, 9) for v in b.quad.reshape(-1)]]
                for b in self.blocks
            ),
            "entities": sorted([e.class_name, e.block_ids] for e in self.entities),
            "links": sorted(map(list, self.links)),
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()
