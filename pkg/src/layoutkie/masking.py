"""Token- and area-masked LM: area sampling, masking plans, and the loss.

Area masking picks a seed text block, grows its box by a truncated-
exponential factor, and masks every block whose center falls inside the
grown area, repeating until at least the target fraction of tokens is
covered. Token masking then independently hits 15% of the remaining
tokens. Every selected token is replaced by [MASK] 80% of the time, a
random vocabulary token 10%, and left as-is 10%; boxes are never touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import GraphError, Tensor
from .spatial import QuadBox

__all__ = [
    "AreaSamplerConfig",
    "MaskingPlan",
    "sample_expansion",
    "expand_area",
    "select_area_masked_blocks",
    "build_masking_plan",
    "apply_plan",
    "mlm_loss",
    "empty_plan_count",
]

SRC_NONE, SRC_TMLM, SRC_AMLM = 0, 1, 2
ACT_MASK, ACT_RANDOM, ACT_KEEP = 0, 1, 2

# pathological documents where nothing got masked (loss defined as 0)
_EMPTY_PLAN_COUNT = 0


def empty_plan_count() -> int:
    return _EMPTY_PLAN_COUNT


@dataclass
class AreaSamplerConfig:
    p: float = 0.2
    expansion_multiplier: float = 4.0
    target_fraction: float = 0.15
    tmlm_fraction: float = 0.15
    mask_prob: float = 0.8
    random_prob: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0, 1), got {self.p}")

    @property
    def lam(self) -> float:
        return -math.log(1.0 - self.p)


@dataclass
class MaskingPlan:
    """Per-token masking record for one tokenized document."""

    source: np.ndarray       # SRC_* per token
    action: np.ndarray       # ACT_* per token, meaningful where source != none
    original_ids: np.ndarray

    def masked(self) -> np.ndarray:
        return self.source != SRC_NONE

    def fraction(self) -> float:
        return float(self.masked().mean()) if self.source.size else 0.0


def sample_expansion(rng: np.random.Generator, config: AreaSamplerConfig) -> float:
    """Draw from Exp(lambda) truncated to [0, 1] by inverse CDF."""
    lam = config.lam
    u = rng.random()
    return -math.log(1.0 - u * (1.0 - math.exp(-lam))) / lam


def expand_area(seed: QuadBox, e: float, c: float, min_extent: float = 0.02) -> QuadBox:
    """Axis-aligned box around the seed center, grown by (1 + e*c) per axis.

    A degenerate (zero-area) seed falls back to one token-height of extent
    so the area still covers its own center.
    """
    cx, cy = seed.center()
    w = max(abs(seed.width()), min_extent) * (1.0 + e * c)
    h = max(abs(seed.height()), min_extent) * (1.0 + e * c)
    x0, x1 = max(cx - w / 2, 0.0), min(cx + w / 2, 1.0)
    y0, y1 = max(cy - h / 2, 0.0), min(cy + h / 2, 1.0)
    return QuadBox.from_rect(x0, y0, x1, y1)


def _inside(area: QuadBox, point) -> bool:
    x, y = point
    return area.p_tl[0] <= x <= area.p_br[0] and area.p_tl[1] <= y <= area.p_br[1]


def select_area_masked_blocks(
    block_boxes: list[QuadBox],
    tokens_per_block: list[int],
    rng: np.random.Generator,
    config: AreaSamplerConfig,
) -> set[int]:
    """Block ids covered by grown areas until the token target is reached.

    Whole blocks only; the final area's overshoot past the target is kept.
    """
    if not block_boxes:
        return set()
    total = sum(tokens_per_block)
    centers = [b.center() for b in block_boxes]
    selected: set[int] = set()
    covered = 0
    while covered < config.target_fraction * total and len(selected) < len(block_boxes):
        seed_idx = int(rng.integers(len(block_boxes)))
        e = sample_expansion(rng, config)
        area = expand_area(block_boxes[seed_idx], e, config.expansion_multiplier)
        hit = {i for i, c in enumerate(centers) if _inside(area, c)}
        hit.add(seed_idx)
        for i in hit - selected:
            covered += tokens_per_block[i]
        selected |= hit
    return selected


def build_masking_plan(
    token_ids: np.ndarray,
    token_block: np.ndarray,
    block_boxes: list[QuadBox],
    tokens_per_block: list[int],
    rng: np.random.Generator,
    config: AreaSamplerConfig,
    maskable: np.ndarray | None = None,
) -> MaskingPlan:
    """Masking plan over one document's token sequence.

    ``token_block`` maps each token to its block id, or -1 for specials and
    padding (never masked). ``maskable`` can further restrict candidates.
    """
    token_ids = np.asarray(token_ids)
    token_block = np.asarray(token_block)
    n = token_ids.size
    eligible = token_block >= 0
    if maskable is not None:
        eligible &= np.asarray(maskable)

    source = np.full(n, SRC_NONE, dtype=np.int8)
    amlm_blocks = select_area_masked_blocks(block_boxes, tokens_per_block, rng, config)
    for b in amlm_blocks:
        source[(token_block == b) & eligible] = SRC_AMLM

    remaining = eligible & (source == SRC_NONE)
    tmlm_hit = rng.random(n) < config.tmlm_fraction
    source[remaining & tmlm_hit] = SRC_TMLM

    action = np.full(n, ACT_KEEP, dtype=np.int8)
    hit = source != SRC_NONE
    roll = rng.random(n)
    action[hit & (roll < config.mask_prob)] = ACT_MASK
    action[hit & (roll >= config.mask_prob) & (roll < config.mask_prob + config.random_prob)] = ACT_RANDOM

    return MaskingPlan(source=source, action=action, original_ids=token_ids.copy())


def apply_plan(
    plan: MaskingPlan,
    mask_id: int,
    rng: np.random.Generator,
    random_pool: np.ndarray,
) -> np.ndarray:
    """Input ids after replacement; boxes are left to the caller untouched."""
    ids = plan.original_ids.copy()
    hit = plan.masked()
    ids[hit & (plan.action == ACT_MASK)] = mask_id
    rnd = hit & (plan.action == ACT_RANDOM)
    if rnd.any():
        ids[rnd] = rng.choice(random_pool, size=int(rnd.sum()))
    return ids


def mlm_loss(logits: Tensor, plan: MaskingPlan) -> Tensor:
    """Mean cross-entropy over masked positions against the original ids.

    A plan with nothing masked yields 0 and bumps a process-wide counter.
    ``logits`` may be [N, V] or [B, N, V] with plans concatenated row-major.
    """
    global _EMPTY_PLAN_COUNT
    n = plan.original_ids.size
    flat = logits.shape[0] * logits.shape[1] if len(logits.shape) == 3 else logits.shape[0]
    if flat != n:
        raise GraphError(f"plan covers {n} tokens but logits cover {flat}")
    weights = plan.masked().astype(np.float64).reshape(logits.shape[:-1])
    if weights.sum() == 0:
        _EMPTY_PLAN_COUNT += 1
        return Tensor(np.zeros(()))
    targets = plan.original_ids.reshape(logits.shape[:-1])
    return ag.cross_entropy(logits, targets, weights)
