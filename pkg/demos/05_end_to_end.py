"""Small end-to-end run: pretrain, fine-tune, evaluate, and stress order.

Uses a deliberately tiny model and corpus so it finishes in about a minute.
Run: python3 demos/05_end_to_end.py
"""

import numpy as np

from layoutkie.config import RunConfig
from layoutkie.data import GeneratorConfig, default_vocab, generate
from layoutkie.encoder import EncoderConfig
from layoutkie.experiments import run_order_study
from layoutkie.heads import HeadConfig
from layoutkie.training import evaluate_task, finetune, pretrain

vocab = default_vocab()
pretrain_docs = generate(GeneratorConfig(seed=100), 200)
train_docs = generate(GeneratorConfig(seed=0), 100)
test_docs = generate(GeneratorConfig(seed=1), 40)


def tiny() -> RunConfig:
    cfg = RunConfig(
        encoder=EncoderConfig(num_layers=1, hidden=32, heads=2, ffn=64, sinusoid_dim=4),
        heads=HeadConfig(stc_dim=16, rel_dim=16),
    )
    cfg.optimizer.learning_rate = 3e-3
    return cfg


print("== masked-LM pretraining (200 docs, 150 steps) ==")
cfg = tiny()
cfg.optimizer.steps = 150
params, log = pretrain(pretrain_docs, vocab, cfg)
print(f"  loss {log.losses[0]:.3f} -> {np.mean(log.losses[-10:]):.3f} "
      f"(uniform baseline ln(1024) = {np.log(1024):.3f})")

print("\n== fine-tune entity extraction with the graph decoder (8 epochs) ==")
cfg = tiny()
cfg.optimizer.epochs = 8
model, _, classes = finetune(train_docs, vocab, cfg, "ee_spade", pretrained_state=params.state())
report = evaluate_task(model, cfg, "ee_spade", test_docs, vocab, classes)
print(report.table())

print("\n== the same model under re-serialized input orders ==")
reports = run_order_study(model, cfg, "ee_spade", test_docs, vocab, classes)
print(f"  {'variant':<10} {'F1':>7}")
for variant, r in reports.items():
    print(f"  {variant:<10} {r.f1:7.4f}")
print("\nBlock order never reaches the encoder (no 1D positions, relative")
print("spatial attention only), so shuffling the serialization changes nothing;")
print("rotation changes geometry, so a small drop there is genuine.")
