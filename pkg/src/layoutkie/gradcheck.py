"""Randomized full-model gradient checks against central differences."""

from __future__ import annotations

import numpy as np

from . import autograd as ag
from . import heads as H
from .autograd import Graph, Params, grad_check, precision
from .config import RunConfig
from .encoder import EncoderConfig, TokenBatch, encode, init_encoder_params
from .heads import HeadConfig, init_head_params, init_mlm_params
from .training import _task_loss

__all__ = ["random_model_check", "run_trials"]

CHECK_TASKS = ("mlm", "ee_spade", "el_spade", "ee_bio")


def _random_batch(rng, cfg: EncoderConfig, n_tokens: int) -> TokenBatch:
    B = 1
    ids = rng.integers(0, cfg.vocab, size=(B, n_tokens))
    page = np.array([[200.0, 200.0]])
    quads = np.zeros((B, n_tokens, 4, 2))
    for i in range(n_tokens):
        x0, y0 = rng.integers(0, 150, size=2)
        w, h = rng.integers(5, 40, size=2)
        quads[0, i] = [[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]]
    mask = np.ones((B, n_tokens), dtype=bool)
    if n_tokens > 3:
        mask[0, -1] = False
    return TokenBatch(ids, quads, page, mask)


def random_model_check(seed: int, task: str | None = None, max_coords: int = 3, step: float = 1e-5) -> float:
    """Max relative gradient error for a random tiny encoder + head + loss."""
    rng = np.random.default_rng(seed)
    task = task or CHECK_TASKS[seed % len(CHECK_TASKS)]
    heads_n = int(rng.choice([2, 4]))
    with precision("float64"):
        enc = EncoderConfig(
            num_layers=int(rng.integers(1, 3)),
            hidden=4 * heads_n,
            heads=heads_n,
            ffn=16,
            vocab=16,
            max_tokens=8,
            sinusoid_dim=int(rng.choice([4, 8])),
            spatial_mode=str(rng.choice(["relative", "absolute", "axis_bias", "none"])),
            use_1d_positions=bool(rng.integers(2)),
            dropout=0.0,
        )
        head_cfg = HeadConfig(num_classes=2, stc_dim=6, rel_dim=6, hidden=enc.hidden)
        cfg = RunConfig(encoder=enc, heads=head_cfg)
        params = init_encoder_params(enc, rng)
        init_head_params(head_cfg, rng, params)
        init_mlm_params(enc.vocab, enc.hidden, rng, params)
        # bias tables init to zero; perturb so their gradients are exercised
        if enc.spatial_mode == "axis_bias":
            for name in ("bias.x", "bias.y"):
                params[name].data = rng.standard_normal(params[name].data.shape) * 0.1

        n = int(rng.integers(4, 8))
        batch = _random_batch(rng, enc, n)
        mask = batch.mask

        stc_gold = rng.integers(0, n + 1, size=n)
        for i in range(n):
            j = stc_gold[i] - 1
            if j >= 0 and (j == i or not mask[0, j]):
                stc_gold[i] = 0  # only reachable successors as gold

        class _Feat:
            itc = rng.integers(0, head_cfg.num_classes + 1, size=n)
            stc = stc_gold
            rel = (rng.random((n, n)) < 0.3).astype(np.float64)
            bio = rng.integers(0, head_cfg.bio_tags, size=n)

        targets = rng.integers(0, enc.vocab, size=(1, n))
        weights = mask.astype(np.float64)

        def f():
            reps = encode(batch, enc, params, rng=None)
            if task == "mlm":
                logits = ag.add(ag.matmul(reps, params["mlm.w"]), params["mlm.b"])
                return ag.cross_entropy(logits, targets, weights)
            return _task_loss(task, reps, [_Feat()], mask, params, cfg)

        return grad_check(f, params, step=step, max_coords=max_coords, rng=rng)


def run_trials(n_trials: int = 20, tol: float = 1e-4, verbose=print) -> float:
    worst = 0.0
    for trial in range(n_trials):
        err = random_model_check(trial)
        worst = max(worst, err)
        if verbose:
            status = "ok" if err <= tol else "FAIL"
            verbose(f"trial {trial:2d} ({CHECK_TASKS[trial % len(CHECK_TASKS)]:8s}): "
                    f"max rel err {err:.3e} [{status}]")
    return worst
