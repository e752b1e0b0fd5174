"""Acceptance gate: one test per shipped claim, with pinned tolerances.

Each test prints (and records for the terminal summary) a single
"criterion N PASS/FAIL" line. Training-based criteria share module-scoped
artifacts: one pretraining run and one fine-tuned model feed criteria 2, 6,
7, and 8.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy import stats

import layoutkie.heads as H
from conftest import ACCEPTANCE_LINES
from layoutkie.autograd import Params, precision
from layoutkie.checkpoint import save_checkpoint
from layoutkie.config import RunConfig
from layoutkie.data import GeneratorConfig, default_vocab, generate
from layoutkie.data.featurize import class_list, featurize
from layoutkie.encoder import EncoderConfig, TokenBatch, encode, init_encoder_params
from layoutkie.experiments import run_few_sample_study, run_order_study
from layoutkie.gradcheck import run_trials
from layoutkie.masking import AreaSamplerConfig, SRC_AMLM, build_masking_plan, sample_expansion
from layoutkie.spatial import init_spatial_params, pairwise_embeddings_pixels
from layoutkie.training import evaluate_task, finetune, pretrain

from _reference import random_decode_instance, reference_decode_entities

VOCAB = default_vocab()

# desk-scale hyperparameters (the defaults target larger models; see README)
PRETRAIN_LR = 1e-3
FINETUNE_LR = 3e-3
FINETUNE_EPOCHS = 15


def record(num: int, ok: bool, detail: str):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def run_cfg(**opt) -> RunConfig:
    cfg = RunConfig()
    cfg.optimizer.learning_rate = FINETUNE_LR
    cfg.optimizer.epochs = FINETUNE_EPOCHS
    for k, v in opt.items():
        setattr(cfg.optimizer, k, v)
    return cfg


# ---------------------------------------------------------------------------
# shared artifacts


@pytest.fixture(scope="module")
def corpora():
    return {
        "pretrain": generate(GeneratorConfig(seed=10), 5000),
        "train": generate(GeneratorConfig(seed=0), 500),
        "test": generate(GeneratorConfig(seed=1), 200),
    }


@pytest.fixture(scope="module")
def pretrained(corpora):
    cfg = run_cfg(steps=5000)
    cfg.optimizer.learning_rate = PRETRAIN_LR
    t0 = time.time()
    params, log = pretrain(corpora["pretrain"], VOCAB, cfg)
    return {"state": params.state(), "seconds": time.time() - t0, "log": log}


@pytest.fixture(scope="module")
def finetuned(corpora, pretrained):
    cfg = run_cfg()
    t0 = time.time()
    params, log, classes = finetune(
        corpora["train"], VOCAB, cfg, "ee_spade", pretrained_state=pretrained["state"]
    )
    return {"params": params, "cfg": cfg, "classes": classes, "seconds": time.time() - t0}


# ---------------------------------------------------------------------------
# criterion 1: whole-model gradient checks


def test_criterion_1_gradient_checks():
    t0 = time.time()
    worst = run_trials(20, verbose=None)
    elapsed = time.time() - t0
    record(
        1,
        worst <= 1e-4 and elapsed <= 120.0,
        f"20 randomized model checks, worst rel err {worst:.2e} (tol 1e-4), {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# criterion 2: permutation equivariance


def test_criterion_2_permutation_equivariance(corpora, finetuned):
    # (a) representation-level: relative error under token permutation,
    # one random permutation for each of 100 random documents
    with precision("float64"):
        rng = np.random.default_rng(2)
        enc = EncoderConfig(num_layers=2, hidden=32, heads=4, ffn=64, sinusoid_dim=4, dropout=0.0)
        params = init_encoder_params(enc, rng)
        classes = class_list(corpora["test"])
        worst = 0.0
        for doc in generate(GeneratorConfig(seed=22), 100):
            f = featurize(doc, VOCAB, classes, 64)
            n = int(f.mask.sum())
            batch = TokenBatch(
                f.ids[None, :n], f.pixel_quads[None, :n].astype(np.float64),
                np.array([[float(doc.page_w), float(doc.page_h)]]), f.mask[None, :n],
            )
            reps = encode(batch, enc, params).data
            perm = rng.permutation(n)
            permuted = TokenBatch(
                batch.ids[:, perm], batch.pixel_quads[:, perm], batch.page_sizes, batch.mask
            )
            reps_p = encode(permuted, enc, params).data
            rel = np.abs(reps_p - reps[:, perm]) / np.maximum(np.abs(reps[:, perm]), 1e-8)
            worst = max(worst, float(rel.max()))

    # (b) task-level: shuffling the serialization order must not move F1 at all
    reports = run_order_study(
        finetuned["params"], finetuned["cfg"], "ee_spade",
        corpora["test"], VOCAB, finetuned["classes"], variants=("identity", "permute"),
    )
    f1_id, f1_perm = reports["identity"].f1, reports["permute"].f1
    record(
        2,
        worst <= 1e-5 and f1_perm == f1_id,
        f"encoder rel err {worst:.2e} (tol 1e-5); F1 identity {f1_id:.4f} == permute {f1_perm:.4f}",
    )


# ---------------------------------------------------------------------------
# criterion 3: bit-exact geometric invariance of pair embeddings


def test_criterion_3_bitwise_pair_invariance():
    with precision("float64"):
        params = Params()
        init_spatial_params(params, np.random.default_rng(3), head_dim=16, dim=8)
        docs = generate(GeneratorConfig(seed=33), 100)
        exact = 0
        for doc in docs:
            quads = np.stack([b.quad for b in doc.blocks])[None]
            page = np.array([[doc.page_w, doc.page_h]], dtype=np.float64)
            base = pairwise_embeddings_pixels(quads, page, params, 8).data
            moved = pairwise_embeddings_pixels(quads + np.array([17.0, 23.0]), page, params, 8).data
            scaled = pairwise_embeddings_pixels(quads * 2.0, page * 2.0, params, 8).data
            if np.array_equal(base, moved) and np.array_equal(base, scaled):
                exact += 1
    record(3, exact == 100, f"{exact}/100 documents bit-identical under translation and joint scaling")


# ---------------------------------------------------------------------------
# criterion 4: masking statistics


def test_criterion_4_masking_statistics():
    docs = generate(GeneratorConfig(seed=0), 10000)
    classes = class_list(docs)
    cfg = AreaSamplerConfig()
    rng = np.random.default_rng(1)
    combined, amlm = [], []
    for d in docs:
        f = featurize(d, VOCAB, classes, 64)
        plan = build_masking_plan(f.ids, f.token_block, f.block_boxes, f.tokens_per_block, rng, cfg)
        total = int((f.token_block >= 0).sum())
        combined.append(float((plan.source != 0).sum()) / total)
        amlm.append(float((plan.source == SRC_AMLM).sum()) / total)
    c, a = float(np.mean(combined)), float(np.mean(amlm))

    samples = np.array([sample_expansion(rng, cfg) for _ in range(20000)])
    lam, z = cfg.lam, 1.0 - math.exp(-cfg.lam)
    ks = stats.kstest(samples, lambda e: (1.0 - np.exp(-lam * np.asarray(e))) / z).statistic

    ok = 0.2675 <= c <= 0.2875 and 0.15 <= a <= 0.19 and ks < 0.01
    record(
        4,
        ok,
        f"10k docs: combined {c:.4f} in [0.2675, 0.2875], area {a:.4f} in [0.15, 0.19], KS {ks:.4f} < 0.01",
    )


# ---------------------------------------------------------------------------
# criterion 5: graph decoding vs an independent reference


def test_criterion_5_decode_matches_reference():
    rng = np.random.default_rng(5)
    n_instances, mismatches = 1200, 0
    for _ in range(n_instances):
        p_itc, p_stc, mask = random_decode_instance(rng, n_max=6)
        got = [(e.class_id, e.token_ids) for e in H.decode_entities_spade(p_itc, p_stc, mask)]
        want = reference_decode_entities(p_itc, p_stc, mask)
        if got != want:
            mismatches += 1
    record(5, mismatches == 0, f"{n_instances} random instances (N<=6), {mismatches} mismatches")


# ---------------------------------------------------------------------------
# criterion 6: end-to-end pipeline quality and budget


def test_criterion_6_pipeline_f1_and_budget(corpora, pretrained, finetuned):
    t0 = time.time()
    report = evaluate_task(
        finetuned["params"], finetuned["cfg"], "ee_spade",
        corpora["test"], VOCAB, finetuned["classes"],
    )
    total = pretrained["seconds"] + finetuned["seconds"] + (time.time() - t0)
    ok = report.f1 >= 0.90 and total <= 45 * 60
    record(
        6,
        ok,
        f"5000 pretrain steps + 500-doc fine-tune: F1 {report.f1:.4f} >= 0.90, "
        f"{total / 60:.1f} min <= 45 min",
    )


# ---------------------------------------------------------------------------
# criterion 7: serialization robustness, relative vs absolute positions


def test_criterion_7_order_robustness(corpora, finetuned):
    rel_reports = run_order_study(
        finetuned["params"], finetuned["cfg"], "ee_spade",
        corpora["test"], VOCAB, finetuned["classes"], variants=("identity", "permute"),
    )
    rel_drop = rel_reports["identity"].f1 - rel_reports["permute"].f1

    abs_cfg = run_cfg()
    abs_cfg.encoder.spatial_mode = "absolute"
    abs_cfg.encoder.use_1d_positions = True
    abs_params, _, abs_classes = finetune(corpora["train"], VOCAB, abs_cfg, "ee_spade")
    abs_reports = run_order_study(
        abs_params, abs_cfg, "ee_spade", corpora["test"], VOCAB, abs_classes,
        variants=("identity", "permute"),
    )
    abs_drop = abs_reports["identity"].f1 - abs_reports["permute"].f1

    ok = rel_drop == 0.0 and abs_drop >= 0.05
    record(
        7,
        ok,
        f"permute F1 drop: relative {rel_drop * 100:.2f} points (must be 0), "
        f"absolute+1d {abs_drop * 100:.1f} points (>= 5); "
        f"absolute identity F1 {abs_reports['identity'].f1:.3f}",
    )


# ---------------------------------------------------------------------------
# criterion 8: few-sample benefit of pretraining


def test_criterion_8_few_sample_study(corpora, pretrained):
    counts = (5, 10, 50, 500)
    seeds = (0, 1, 2, 3, 4)
    res = run_few_sample_study(
        corpora["train"], corpora["test"], VOCAB, run_cfg(), "ee_spade",
        counts=counts, seeds=seeds, pretrained_state=pretrained["state"],
    )
    pre_means = {c: res[c]["mean_f1"] for c in counts}

    scratch = run_few_sample_study(
        corpora["train"], corpora["test"], VOCAB, run_cfg(), "ee_spade",
        counts=(10,), seeds=seeds, pretrained_state=None,
    )[10]["mean_f1"]

    ordered = [pre_means[c] for c in (5, 10, 50, 500)]
    monotone = all(a <= b + 1e-9 for a, b in zip(ordered, ordered[1:]))
    gap = pre_means[10] - scratch
    ok = monotone and gap >= 0.10
    record(
        8,
        ok,
        "pretrained mean F1 " + ", ".join(f"{c}:{pre_means[c]:.3f}" for c in (5, 10, 50, 500))
        + f" monotone={monotone}; at 10 docs pretrained-scratch gap {gap * 100:.1f} >= 10 points",
    )


# ---------------------------------------------------------------------------
# criterion 9: byte-level reproducibility


def test_criterion_9_reproducibility(tmp_path, corpora, finetuned):
    docs = corpora["train"][:24]
    blobs = []
    for name in ("a.ckpt", "b.ckpt"):
        cfg = run_cfg(steps=30, batch_size=4)
        cfg.encoder = EncoderConfig(num_layers=1, hidden=16, heads=2, ffn=32, sinusoid_dim=4)
        params, _ = pretrain(docs, VOCAB, cfg)
        save_checkpoint(tmp_path / name, params.state(), {"kind": "pretrain"})
        blobs.append((tmp_path / name).read_bytes())
    ckpt_ok = blobs[0] == blobs[1]

    reports = []
    for _ in range(2):
        r = evaluate_task(
            finetuned["params"], finetuned["cfg"], "ee_spade",
            corpora["test"][:50], VOCAB, finetuned["classes"],
        )
        reports.append(json.dumps(r.to_dict(), sort_keys=True).encode())
    report_ok = reports[0] == reports[1]

    record(
        9,
        ckpt_ok and report_ok,
        f"identical seeds: checkpoints byte-identical={ckpt_ok}, eval reports byte-identical={report_ok}",
    )
