"""Experiment runners: order-robustness study and few-sample sweeps."""

from __future__ import annotations

import copy

import numpy as np

from .config import RunConfig
from .data.transforms import rotate, transform_order
from .metrics import EvalReport
from .training import evaluate_task, finetune

__all__ = ["ORDER_VARIANTS", "order_variant_docs", "run_order_study", "run_few_sample_study"]

ORDER_VARIANTS = ("identity", "permute", "xy", "yx", "rotate")


def order_variant_docs(docs, variant: str, seed: int = 0, angle: float = 10.0):
    if variant == "rotate":
        return [rotate(d, angle) for d in docs]
    if variant not in ("identity", "permute", "xy", "yx"):
        raise ValueError(f"unknown variant {variant!r}")
    return [transform_order(d, variant, seed=seed + i) for i, d in enumerate(docs)]


def run_order_study(
    params,
    cfg: RunConfig,
    task: str,
    test_docs,
    vocab,
    classes,
    seed: int = 0,
    angle: float = 10.0,
    variants=ORDER_VARIANTS,
) -> dict[str, EvalReport]:
    """Evaluate one fine-tuned model on re-serialized test variants."""
    out = {}
    for variant in variants:
        docs = order_variant_docs(test_docs, variant, seed=seed, angle=angle)
        report = evaluate_task(params, cfg, task, docs, vocab, classes)
        report.variant = variant
        out[variant] = report
    return out


def run_few_sample_study(
    train_docs,
    test_docs,
    vocab,
    base_cfg: RunConfig,
    task: str,
    counts=(5, 10, 50, 500),
    seeds=(0, 1, 2, 3, 4),
    pretrained_state=None,
    classes=None,
) -> dict[int, dict]:
    """Mean/std F1 per training-set size over a seed sweep."""
    results = {}
    for count in counts:
        f1s = []
        for seed in seeds:
            cfg = copy.deepcopy(base_cfg)
            cfg.seed = seed
            cfg.train_count = count
            params, _, cls = finetune(
                train_docs, vocab, cfg, task,
                pretrained_state=pretrained_state, classes=classes,
            )
            report = evaluate_task(params, cfg, task, test_docs, vocab, cls)
            f1s.append(report.f1)
        results[count] = {
            "mean_f1": float(np.mean(f1s)),
            "std_f1": float(np.std(f1s)),
            "f1": f1s,
        }
    return results
