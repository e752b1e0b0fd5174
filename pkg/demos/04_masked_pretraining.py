"""Token- and area-masked language modeling over a document layout.

Run: python3 demos/04_masked_pretraining.py
"""

import numpy as np

from layoutkie.data import GeneratorConfig, default_vocab, generate
from layoutkie.data.featurize import class_list, featurize
from layoutkie.masking import (
    SRC_AMLM,
    SRC_TMLM,
    AreaSamplerConfig,
    apply_plan,
    build_masking_plan,
    sample_expansion,
)

vocab = default_vocab()
doc = generate(GeneratorConfig(seed=11), 1)[0]
f = featurize(doc, vocab, class_list([doc]), max_tokens=64)

cfg = AreaSamplerConfig()
rng = np.random.default_rng(4)
plan = build_masking_plan(f.ids, f.token_block, f.block_boxes, f.tokens_per_block, rng, cfg)
masked_ids = apply_plan(plan, vocab.mask_id, rng, vocab.random_pool())

print("== masking plan over one document ==")
marks = {0: " ", SRC_TMLM: "t", SRC_AMLM: "A"}
n = int(f.mask.sum())
for i in range(1, n - 1):
    tok = vocab.tokens[f.ids[i]]
    shown = vocab.tokens[masked_ids[i]]
    flag = marks[int(plan.source[i])]
    if flag != " ":
        print(f"  [{flag}] {tok:<12} -> {shown}")
total = int((f.token_block >= 0).sum())
amlm = int((plan.source == SRC_AMLM).sum())
tmlm = int((plan.source == SRC_TMLM).sum())
print(f"\n  area-masked {amlm}/{total} tokens ({amlm / total:.1%}), "
      f"token-masked {tmlm}/{total} ({tmlm / total:.1%})")
print("  [A] = area-masked (whole blocks under a grown region)")
print("  [t] = token-masked (independent 15% of the rest)")
print()

print("== the area expansion distribution ==")
samples = [sample_expansion(rng, cfg) for _ in range(50000)]
hist, edges = np.histogram(samples, bins=10, range=(0, 1))
peak = hist.max()
for count, lo in zip(hist, edges):
    bar = "#" * int(40 * count / peak)
    print(f"  e in [{lo:.1f}, {lo + 0.1:.1f}): {bar}")
print(f"  (exponential with rate -ln(0.8) = {cfg.lam:.4f}, truncated to [0, 1];")
print("   a selected area grows each axis by a factor 1 + 4e)")
