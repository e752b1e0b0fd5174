"""Entity-level and link-level precision/recall/F1."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .heads import Entity, Link

__all__ = ["EvalReport", "evaluate_ee", "evaluate_el"]


def _prf(matched: int, predicted: int, gold: int):
    p = matched / predicted if predicted else 0.0
    r = matched / gold if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


@dataclass
class ClassScore:
    matched: int = 0
    predicted: int = 0
    gold: int = 0

    def prf(self):
        return _prf(self.matched, self.predicted, self.gold)


@dataclass
class EvalReport:
    task: str
    variant: str = "identity"
    per_class: dict = field(default_factory=dict)  # class name -> ClassScore
    matched: int = 0
    predicted: int = 0
    gold: int = 0

    @property
    def precision(self):
        return _prf(self.matched, self.predicted, self.gold)[0]

    @property
    def recall(self):
        return _prf(self.matched, self.predicted, self.gold)[1]

    @property
    def f1(self):
        return _prf(self.matched, self.predicted, self.gold)[2]

    def to_dict(self) -> dict:
        out = {
            "task": self.task,
            "variant": self.variant,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "matched": self.matched,
            "predicted": self.predicted,
            "gold": self.gold,
            "per_class": {},
        }
        for name, cs in sorted(self.per_class.items()):
            p, r, f1 = cs.prf()
            out["per_class"][name] = {
                "precision": p, "recall": r, "f1": f1,
                "matched": cs.matched, "predicted": cs.predicted, "gold": cs.gold,
            }
        return out

    def table(self) -> str:
        lines = [f"{'class':<12} {'P':>7} {'R':>7} {'F1':>7} {'pred':>6} {'gold':>6}"]
        for name, cs in sorted(self.per_class.items()):
            p, r, f1 = cs.prf()
            lines.append(f"{name:<12} {p:7.4f} {r:7.4f} {f1:7.4f} {cs.predicted:6d} {cs.gold:6d}")
        lines.append(
            f"{'micro':<12} {self.precision:7.4f} {self.recall:7.4f} {self.f1:7.4f}"
            f" {self.predicted:6d} {self.gold:6d}"
        )
        return "\n".join(lines)


def evaluate_ee(
    pred: list[list[Entity]],
    gold: list[list[Entity]],
    class_names: list[str],
    relaxed: bool = False,
) -> EvalReport:
    """Micro P/R/F1; a prediction matches iff class and the exact ordered
    token sequence agree with an unconsumed gold entity (one-to-one).

    ``relaxed`` compares token sets instead of ordered sequences, for
    diagnostics only.
    """
    if len(pred) != len(gold):
        raise ValueError("prediction and gold document counts differ")
    report = EvalReport(task="ee")
    for name in class_names:
        report.per_class[name] = ClassScore()

    def key(e: Entity):
        toks = tuple(sorted(e.token_ids)) if relaxed else tuple(e.token_ids)
        return (e.class_id, toks)

    for p_doc, g_doc in zip(pred, gold):
        gold_pool = Counter(key(e) for e in g_doc)
        for e in g_doc:
            report.per_class[class_names[e.class_id]].gold += 1
            report.gold += 1
        for e in p_doc:
            cs = report.per_class[class_names[e.class_id]]
            cs.predicted += 1
            report.predicted += 1
            k = key(e)
            if gold_pool[k] > 0:
                gold_pool[k] -= 1
                cs.matched += 1
                report.matched += 1
    return report


def evaluate_el(pred: list[list[Link]], gold: list[list[Link]]) -> EvalReport:
    """Set-intersection matching over ordered head-token pairs."""
    if len(pred) != len(gold):
        raise ValueError("prediction and gold document counts differ")
    report = EvalReport(task="el")
    for p_doc, g_doc in zip(pred, gold):
        p_set = {(l.source, l.target) for l in p_doc}
        g_set = {(l.source, l.target) for l in g_doc}
        report.predicted += len(p_set)
        report.gold += len(g_set)
        report.matched += len(p_set & g_set)
    return report
