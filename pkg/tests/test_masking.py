"""Area- and token-masking: sampler distribution, atomicity, and the loss."""

import math

import numpy as np
import pytest
from scipy import stats

import layoutkie.masking as mk
from layoutkie.autograd import GraphError, Tensor, precision
from layoutkie.masking import (
    ACT_KEEP,
    ACT_MASK,
    ACT_RANDOM,
    SRC_AMLM,
    SRC_NONE,
    SRC_TMLM,
    AreaSamplerConfig,
    apply_plan,
    build_masking_plan,
    expand_area,
    mlm_loss,
    sample_expansion,
    select_area_masked_blocks,
)
from layoutkie.spatial import QuadBox


def test_lambda_value():
    # lambda = -ln(1 - 0.2), frozen reference value
    assert math.isclose(AreaSamplerConfig().lam, 0.22314355131420976, rel_tol=1e-15)
    with pytest.raises(ValueError):
        AreaSamplerConfig(p=1.0)


def test_expansion_sampler_matches_truncated_exponential():
    cfg = AreaSamplerConfig()
    rng = np.random.default_rng(0)
    samples = np.array([sample_expansion(rng, cfg) for _ in range(20000)])
    assert samples.min() >= 0.0 and samples.max() <= 1.0

    lam = cfg.lam
    z = 1.0 - math.exp(-lam)

    def cdf(e):
        return (1.0 - np.exp(-lam * np.asarray(e))) / z

    stat = stats.kstest(samples, cdf).statistic
    assert stat < 0.01, f"KS statistic {stat:.4f} vs truncated-exp CDF"


def test_expand_area_growth_and_center():
    seed = QuadBox.from_rect(0.4, 0.4, 0.6, 0.5)
    area = expand_area(seed, e=0.5, c=4.0)  # factor 1 + 0.5*4 = 3
    assert area.center() == (pytest.approx(0.5), pytest.approx(0.45))
    assert area.width() == pytest.approx(0.6)
    assert area.height() == pytest.approx(0.3)


def test_expand_area_clamps_to_page():
    area = expand_area(QuadBox.from_rect(0.0, 0.0, 0.4, 0.2), e=1.0, c=4.0)
    flat = np.array(area.flat())
    assert flat.min() >= 0.0 and flat.max() <= 1.0


def test_expand_area_degenerate_seed_still_covers_center():
    area = expand_area(QuadBox.from_rect(0.5, 0.5, 0.5, 0.5), e=0.0, c=4.0)
    assert area.width() > 0 and area.height() > 0
    assert area.p_tl[0] <= 0.5 <= area.p_br[0]


def _grid_blocks(n=20):
    boxes, tokens = [], []
    for i in range(n):
        r, c = divmod(i, 5)
        boxes.append(QuadBox.from_rect(0.05 + 0.2 * c, 0.05 + 0.22 * r, 0.15 + 0.2 * c, 0.1 + 0.22 * r))
        tokens.append(1 + i % 3)
    return boxes, tokens


def test_area_selection_reaches_target_and_is_deterministic():
    boxes, tokens = _grid_blocks()
    cfg = AreaSamplerConfig()
    total = sum(tokens)
    s1 = select_area_masked_blocks(boxes, tokens, np.random.default_rng(5), cfg)
    s2 = select_area_masked_blocks(boxes, tokens, np.random.default_rng(5), cfg)
    assert s1 == s2
    assert sum(tokens[i] for i in s1) >= cfg.target_fraction * total
    assert select_area_masked_blocks([], [], np.random.default_rng(0), cfg) == set()


def _plan_inputs(rng, n_blocks=12, toks_per=2):
    boxes, tokens = _grid_blocks(n_blocks)
    tokens = [toks_per] * n_blocks
    n = 1 + n_blocks * toks_per + 1  # CLS + tokens + SEP
    token_block = np.full(n, -1)
    for b in range(n_blocks):
        token_block[1 + b * toks_per : 1 + (b + 1) * toks_per] = b
    ids = rng.integers(5, 100, size=n)
    return ids, token_block, boxes, tokens


def test_plan_block_atomicity_and_special_safety(rng):
    cfg = AreaSamplerConfig()
    for seed in range(20):
        r = np.random.default_rng(seed)
        ids, token_block, boxes, tokens = _plan_inputs(r)
        plan = build_masking_plan(ids, token_block, boxes, tokens, r, cfg)
        # specials and padding untouched
        assert (plan.source[token_block < 0] == SRC_NONE).all()
        # area masking is all-or-nothing per block
        for b in range(len(boxes)):
            src = plan.source[token_block == b]
            assert (src == SRC_AMLM).all() or not (src == SRC_AMLM).any()
        # the two sources never overlap by construction
        assert not ((plan.source == SRC_TMLM) & (plan.source == SRC_AMLM)).any()


def test_plan_respects_maskable_argument(rng):
    cfg = AreaSamplerConfig()
    ids, token_block, boxes, tokens = _plan_inputs(rng)
    maskable = np.zeros(ids.size, dtype=bool)  # nothing may be masked
    plan = build_masking_plan(ids, token_block, boxes, tokens, rng, cfg, maskable=maskable)
    assert plan.fraction() == 0.0


def test_action_split_is_80_10_10():
    cfg = AreaSamplerConfig()
    rng = np.random.default_rng(0)
    counts = {ACT_MASK: 0, ACT_RANDOM: 0, ACT_KEEP: 0}
    total = 0
    for seed in range(300):
        r = np.random.default_rng(seed)
        ids, token_block, boxes, tokens = _plan_inputs(r)
        plan = build_masking_plan(ids, token_block, boxes, tokens, r, cfg)
        for a in plan.action[plan.masked()]:
            counts[int(a)] += 1
            total += 1
    assert total > 2000
    assert abs(counts[ACT_MASK] / total - 0.8) < 0.03
    assert abs(counts[ACT_RANDOM] / total - 0.1) < 0.02
    assert abs(counts[ACT_KEEP] / total - 0.1) < 0.02


def test_apply_plan_replacements(rng):
    cfg = AreaSamplerConfig()
    ids, token_block, boxes, tokens = _plan_inputs(rng)
    plan = build_masking_plan(ids, token_block, boxes, tokens, rng, cfg)
    pool = np.arange(5, 100)
    out = apply_plan(plan, mask_id=3, rng=rng, random_pool=pool)
    hit = plan.masked()
    assert (out[hit & (plan.action == ACT_MASK)] == 3).all()
    keep = hit & (plan.action == ACT_KEEP)
    assert np.array_equal(out[keep], plan.original_ids[keep])
    rnd = hit & (plan.action == ACT_RANDOM)
    assert np.isin(out[rnd], pool).all()
    assert np.array_equal(out[~hit], plan.original_ids[~hit])


def test_mlm_loss_ignores_unmasked_positions_bitwise(rng):
    with precision("float64"):
        n, v = 10, 20
        ids = rng.integers(0, v, size=n)
        source = np.zeros(n, dtype=np.int8)
        source[[2, 5]] = SRC_TMLM
        plan = mk.MaskingPlan(source, np.zeros(n, dtype=np.int8), ids)
        logits = rng.standard_normal((n, v))
        l1 = mlm_loss(Tensor(logits), plan).data
        logits2 = logits.copy()
        unmasked = np.flatnonzero(source == SRC_NONE)
        logits2[unmasked] += rng.standard_normal((len(unmasked), v)) * 10
        l2 = mlm_loss(Tensor(logits2), plan).data
    assert np.array_equal(l1, l2)


def test_mlm_loss_empty_plan_counts_and_returns_zero(rng):
    plan = mk.MaskingPlan(
        np.zeros(4, dtype=np.int8), np.zeros(4, dtype=np.int8), np.arange(4)
    )
    before = mk.empty_plan_count()
    loss = mlm_loss(Tensor(np.zeros((4, 9))), plan)
    assert loss.data == 0.0
    assert mk.empty_plan_count() == before + 1


def test_mlm_loss_shape_mismatch_raises():
    plan = mk.MaskingPlan(np.ones(4, dtype=np.int8), np.zeros(4, dtype=np.int8), np.arange(4))
    with pytest.raises(GraphError):
        mlm_loss(Tensor(np.zeros((5, 9))), plan)
