"""Training loops: masked-LM pretraining and task fine-tuning.

Single-threaded and seed-deterministic: one generator drives batch
sampling, masking, and dropout in a fixed sequence, so identical configs
produce byte-identical parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from . import heads as H
from .autograd import Graph, NumericError, Params, Tensor, backward
from .config import RunConfig
from .data.featurize import DocumentFeatures, featurize, featurize_batch, class_list
from .data.tokenizer import Vocabulary
from .encoder import TokenBatch, encode, init_encoder_params
from .heads import init_head_params, init_mlm_params
from .masking import AreaSamplerConfig, apply_plan, build_masking_plan, mlm_loss
from .metrics import EvalReport, evaluate_ee, evaluate_el

__all__ = [
    "AdamW",
    "lr_factor",
    "TrainLog",
    "pretrain",
    "finetune",
    "predict_documents",
    "evaluate_task",
    "ENCODER_PREFIXES",
]

ENCODER_PREFIXES = ("emb.", "layer", "spatial.", "bias.")


class AdamW:
    """Adam with decoupled weight decay."""

    def __init__(self, params: Params, lr: float, weight_decay: float = 0.01,
                 betas=(0.9, 0.999), eps=1e-8):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}

    def step(self, lr_scale: float = 1.0):
        self.t += 1
        lr = self.lr * lr_scale
        bc1 = 1.0 - self.b1**self.t
        bc2 = 1.0 - self.b2**self.t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                g = np.zeros_like(p.data)
            self.m[name] = self.b1 * self.m[name] + (1 - self.b1) * g
            self.v[name] = self.b2 * self.v[name] + (1 - self.b2) * g * g
            mhat = self.m[name] / bc1
            vhat = self.v[name] / bc2
            p.data = p.data - lr * (mhat / (np.sqrt(vhat) + self.eps) + self.weight_decay * p.data)


def lr_factor(step: int, total: int, warmup_fraction: float) -> float:
    """Linear warmup for the first fraction of steps, then linear decay to 0."""
    warm = max(1, int(total * warmup_fraction))
    if step < warm:
        return (step + 1) / warm
    if total <= warm:
        return 1.0
    return max(0.0, (total - step) / (total - warm))


def clip_gradients(params: Params, max_norm: float):
    if max_norm <= 0:
        return
    total = 0.0
    for _, p in params.items():
        if p.grad is not None:
            total += float((p.grad.astype(np.float64) ** 2).sum())
    norm = math.sqrt(total)
    if norm > max_norm:
        s = max_norm / norm
        for _, p in params.items():
            if p.grad is not None:
                p.grad = p.grad * s


@dataclass
class TrainLog:
    losses: list[float] = field(default_factory=list)
    eval_f1: list[float] = field(default_factory=list)
    empty_plans: int = 0


def _featurize_all(docs, vocab, classes, max_tokens) -> list[DocumentFeatures]:
    return [featurize(d, vocab, classes, max_tokens) for d in docs]


def pretrain(
    docs,
    vocab: Vocabulary,
    cfg: RunConfig,
    params: Params | None = None,
    log_every: int = 50,
    on_log=None,
) -> tuple[Params, TrainLog]:
    """Combined token- plus area-masked LM over a synthetic corpus."""
    rng = np.random.default_rng(cfg.seed)
    enc = cfg.encoder
    enc.vocab = max(enc.vocab, len(vocab))
    if params is None:
        params = init_encoder_params(enc, rng)
        init_mlm_params(enc.vocab, enc.hidden, rng, params)
    opt = AdamW(params, cfg.optimizer.learning_rate, cfg.optimizer.weight_decay)
    area_cfg = AreaSamplerConfig()
    classes = class_list(docs)
    feats = _featurize_all(docs, vocab, classes, enc.max_tokens)
    pool = vocab.random_pool()
    log = TrainLog()
    last_good = params.state()

    for step in range(cfg.optimizer.steps):
        idx = rng.integers(len(feats), size=cfg.optimizer.batch_size)
        chosen = [feats[i] for i in idx]
        plans = [
            build_masking_plan(
                f.ids, f.token_block, f.block_boxes, f.tokens_per_block, rng, area_cfg
            )
            for f in chosen
        ]
        masked_ids = np.stack(
            [apply_plan(p, vocab.mask_id, rng, pool) for p in plans]
        )
        batch = featurize_batch(chosen)
        batch = TokenBatch(masked_ids, batch.pixel_quads, batch.page_sizes, batch.mask, batch.special)

        weights = np.stack([p.masked() for p in plans]).astype(np.float64)
        targets = np.stack([p.original_ids for p in plans])
        if weights.sum() == 0:
            log.empty_plans += 1
            continue

        params.zero_grad()
        with Graph() as g:
            reps = encode(batch, enc, params, rng)
            logits = ag.add(ag.matmul(reps, params["mlm.w"]), params["mlm.b"])
            loss = ag.cross_entropy(logits, targets, weights)
        if not np.isfinite(loss.data):
            raise NumericError(
                f"pretraining loss is not finite at step {step}; last good state retained"
            )
        backward(g, loss)
        clip_gradients(params, cfg.optimizer.grad_clip)
        opt.step(lr_factor(step, cfg.optimizer.steps, cfg.optimizer.warmup_fraction))

        log.losses.append(float(loss.data))
        if (step + 1) % log_every == 0:
            last_good = params.state()
            if on_log:
                on_log(step + 1, float(np.mean(log.losses[-log_every:])))
    return params, log


def _task_loss(task, reps, feats_batch, mask, params, cfg: RunConfig):
    gold, outputs = {}, {}
    if task == "ee_bio":
        outputs["bio"] = H.bio_logits(reps, params)
        gold["bio"] = np.stack([f.bio for f in feats_batch])
    elif task == "ee_spade":
        outputs["itc"] = H.itc_logits(reps, params)
        outputs["stc"] = H.stc_logits(reps, params, mask)
        gold["itc"] = np.stack([f.itc for f in feats_batch])
        gold["stc"] = np.stack([f.stc for f in feats_batch])
    elif task == "el_spade":
        outputs["rel"] = H.rel_logits(reps, params)
        gold["rel"] = np.stack([f.rel for f in feats_batch])
    else:
        raise ValueError(f"unknown fine-tune task {task!r}")
    return H.head_losses(outputs, gold, mask, cfg.heads.rel_pos_weight)


def select_train_subset(n: int, cfg: RunConfig, rng: np.random.Generator) -> np.ndarray:
    idx = rng.permutation(n)
    if cfg.train_count is not None:
        return idx[: cfg.train_count]
    if cfg.train_fraction is not None:
        return idx[: max(1, int(round(cfg.train_fraction * n)))]
    return idx


def finetune(
    train_docs,
    vocab: Vocabulary,
    cfg: RunConfig,
    task: str,
    pretrained_state: dict | None = None,
    eval_docs=None,
    classes: list[str] | None = None,
    on_log=None,
) -> tuple[Params, TrainLog, list[str]]:
    """Train encoder plus one task head, optionally from a pretrained encoder."""
    rng = np.random.default_rng(cfg.seed)
    enc = cfg.encoder
    enc.vocab = max(enc.vocab, len(vocab))
    if classes is None:
        classes = class_list(train_docs)
    cfg.heads.num_classes = len(classes)
    cfg.heads.hidden = enc.hidden

    params = init_encoder_params(enc, rng)
    init_head_params(cfg.heads, rng, params)
    if pretrained_state is not None:
        params.load_state(
            {k: v for k, v in pretrained_state.items() if k.startswith(ENCODER_PREFIXES)}
        )

    sub = select_train_subset(len(train_docs), cfg, rng)
    chosen_docs = [train_docs[i] for i in sub]
    feats = _featurize_all(chosen_docs, vocab, classes, enc.max_tokens)

    opt = AdamW(params, cfg.optimizer.learning_rate, cfg.optimizer.weight_decay)
    log = TrainLog()
    B = cfg.optimizer.batch_size
    steps_per_epoch = max(1, math.ceil(len(feats) / B))
    total_steps = cfg.optimizer.epochs * steps_per_epoch
    step = 0
    for epoch in range(cfg.optimizer.epochs):
        order = rng.permutation(len(feats))
        for lo in range(0, len(order), B):
            group = [feats[i] for i in order[lo : lo + B]]
            batch = featurize_batch(group)
            mask = batch.mask
            params.zero_grad()
            with Graph() as g:
                reps = encode(batch, enc, params, rng)
                loss = _task_loss(task, reps, group, mask, params, cfg)
            if not np.isfinite(loss.data):
                raise NumericError(f"fine-tuning loss is not finite at step {step}")
            backward(g, loss)
            clip_gradients(params, cfg.optimizer.grad_clip)
            opt.step(lr_factor(step, total_steps, cfg.optimizer.warmup_fraction))
            log.losses.append(float(loss.data))
            step += 1
        if eval_docs is not None:
            report = evaluate_task(params, cfg, task, eval_docs, vocab, classes)
            log.eval_f1.append(report.f1)
            if on_log:
                on_log(epoch + 1, log.losses[-1], report.f1)
    return params, log, classes


def predict_documents(params, cfg: RunConfig, task: str, feats: list[DocumentFeatures], batch_size=16):
    """Per-document entities (EE tasks) or links (EL task), no dropout."""
    out = []
    for lo in range(0, len(feats), batch_size):
        group = feats[lo : lo + batch_size]
        batch = featurize_batch(group)
        reps = encode(batch, cfg.encoder, params, rng=None)
        if task == "ee_spade":
            p_itc = H.itc_probs(reps, params).data
            p_stc = H.stc_probs(reps, params, batch.mask).data
            for b, f in enumerate(group):
                m = batch.mask[b] & ~batch.special[b]
                out.append(H.decode_entities_spade(p_itc[b], p_stc[b], m))
        elif task == "ee_bio":
            tags = H.bio_logits(reps, params).data.argmax(axis=-1)
            for b, f in enumerate(group):
                names = [
                    H.tag_name(int(t)) if f.mask[i] and not f.special[i] else "O"
                    for i, t in enumerate(tags[b])
                ]
                out.append(H.decode_bio(names))
        elif task == "el_spade":
            p_rel = H.rel_probs(reps, params).data
            if cfg.el_gold_heads:
                per_doc_entities = [f.entities for f in group]
            else:
                p_itc = H.itc_probs(reps, params).data
                p_stc = H.stc_probs(reps, params, batch.mask).data
                per_doc_entities = [
                    H.decode_entities_spade(p_itc[b], p_stc[b], batch.mask[b] & ~batch.special[b])
                    for b in range(len(group))
                ]
            for b, f in enumerate(group):
                out.append(H.decode_links(p_rel[b], per_doc_entities[b], cfg.heads.link_threshold))
        else:
            raise ValueError(f"unknown task {task!r}")
    return out


def evaluate_task(params, cfg: RunConfig, task: str, docs, vocab, classes) -> EvalReport:
    feats = _featurize_all(docs, vocab, classes, cfg.encoder.max_tokens)
    preds = predict_documents(params, cfg, task, feats)
    if task == "el_spade":
        gold = [
            [H.Link(int(s), int(t)) for s, t in np.argwhere(f.rel > 0.5)] for f in feats
        ]
        return evaluate_el(preds, gold)
    gold = [f.entities for f in feats]
    return evaluate_ee(preds, gold, classes, relaxed=cfg.relaxed_match)
