"""Generate synthetic form-like documents and inspect their structure.

Run: python3 demos/02_synthetic_documents.py
"""

import numpy as np

from layoutkie.data import GeneratorConfig, default_vocab, generate
from layoutkie.data.featurize import class_list, featurize
from layoutkie.data.jsonl import doc_to_record

doc = generate(GeneratorConfig(layout_family="form_kv", seed=7), 1)[0]

print(f"page {doc.page_w:.0f} x {doc.page_h:.0f}, {len(doc.blocks)} blocks, "
      f"{len(doc.entities)} entities, {len(doc.links)} links")
print()

print("== crude page sketch (20 x 60 character cells) ==")
rows, cols = 20, 60
grid = [[" "] * cols for _ in range(rows)]
for b in doc.blocks:
    r = int(b.quad[0, 1] / doc.page_h * rows)
    c0 = int(b.quad[0, 0] / doc.page_w * cols)
    c1 = max(c0 + 1, int(b.quad[1, 0] / doc.page_w * cols))
    for c in range(c0, min(c1, cols)):
        grid[min(r, rows - 1)][c] = "#"
print("\n".join("".join(row) for row in grid))
print()

print("== first few entities and their links ==")
head_text = {e.head_block: doc.block(e.head_block).text for e in doc.entities}
for e in doc.entities[:6]:
    words = " ".join(doc.block(b).text for b in e.block_ids)
    print(f"  {e.class_name:<9} {words!r}")
for s, t in doc.links[:4]:
    print(f"  link: {head_text[s]!r} -> {head_text[t]!r}")
print()

print("== the JSONL record (what gen-data writes) ==")
rec = doc_to_record(doc)
print({k: (v if not isinstance(v, list) else f"[{len(v)} items]") for k, v in rec.items()})
print()

print("== tokenized, padded model input ==")
vocab = default_vocab()
f = featurize(doc, vocab, class_list([doc]), max_tokens=64)
n = int(f.mask.sum())
print(f"{n} real tokens of 64; first ten: {vocab.detokenize(f.ids[:10])}")
print(f"gold initial-token classes (head tokens only): "
      f"{sorted(set(int(c) for c in f.itc[f.itc < len(f.classes)]))} -> {f.classes}")
