"""Evaluation metrics for real-valued sentiment scores.

Two binarization conventions are supported and recorded in every report:
``neg_vs_pos_excluding_zero`` drops gold == 0 samples and classifies by
strict sign; ``neg_vs_nonneg`` keeps all samples and treats >= 0 as
positive.
"""

import json
from dataclasses import dataclass, asdict

import numpy as np

from .dataset import seven_class
from .errors import ConventionMismatch, DegenerateValidation, LengthMismatch

CONVENTIONS = ("neg_vs_pos_excluding_zero", "neg_vs_nonneg")
DEFAULT_CONVENTION = "neg_vs_pos_excluding_zero"


@dataclass
class MetricsReport:
    acc7: float
    acc2: float
    weighted_f1: float
    mae: float
    n: int
    convention: str

    def to_dict(self):
        return asdict(self)


def _paired(preds, golds):
    preds = np.asarray(preds, dtype=np.float64)
    golds = np.asarray(golds, dtype=np.float64)
    if preds.shape != golds.shape or preds.ndim != 1:
        raise LengthMismatch(f"{preds.shape} vs {golds.shape}")
    if preds.size == 0:
        raise LengthMismatch("empty prediction list")
    return preds, golds


def _binarize(preds, golds, convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if convention == "neg_vs_pos_excluding_zero":
        keep = golds != 0.0
        if not keep.any():
            raise DegenerateValidation("all gold labels are zero")
        return preds[keep] > 0.0, golds[keep] > 0.0
    return preds >= 0.0, golds >= 0.0


def acc7(preds, golds):
    """Accuracy after binning both sides into the seven integer classes."""
    preds, golds = _paired(preds, golds)
    hits = sum(seven_class(p) == seven_class(g) for p, g in zip(preds, golds))
    return hits / preds.size


def acc2(preds, golds, convention=DEFAULT_CONVENTION):
    preds, golds = _paired(preds, golds)
    pred_pos, gold_pos = _binarize(preds, golds, convention)
    return float(np.mean(pred_pos == gold_pos))


def weighted_f1(preds, golds, convention=DEFAULT_CONVENTION):
    """Per-class (positive/negative) F1 averaged by gold support; the F1 of
    a class never predicted is 0."""
    preds, golds = _paired(preds, golds)
    pred_pos, gold_pos = _binarize(preds, golds, convention)
    total = 0.0
    support_sum = 0
    for cls in (True, False):
        support = int(np.count_nonzero(gold_pos == cls))
        tp = int(np.count_nonzero((pred_pos == cls) & (gold_pos == cls)))
        fp = int(np.count_nonzero((pred_pos == cls) & (gold_pos != cls)))
        fn = support - tp
        prec = tp / (tp + fp) if tp + fp > 0 else 0.0
        rec = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        total += support * f1
        support_sum += support
    return total / support_sum if support_sum else 0.0


def mae(preds, golds):
    preds, golds = _paired(preds, golds)
    return float(np.mean(np.abs(preds - golds)))


def compute_report(preds, golds, convention=DEFAULT_CONVENTION):
    preds, golds = _paired(preds, golds)
    return MetricsReport(
        acc7=acc7(preds, golds),
        acc2=acc2(preds, golds, convention),
        weighted_f1=weighted_f1(preds, golds, convention),
        mae=mae(preds, golds),
        n=int(preds.size),
        convention=convention)


def compare_reports(vanilla, debiased):
    """Per-metric deltas (debiased - vanilla) as a dict plus a text table."""
    if vanilla.convention != debiased.convention:
        raise ConventionMismatch(
            f"{vanilla.convention} vs {debiased.convention}")
    if vanilla.n != debiased.n:
        raise ConventionMismatch(f"sample counts differ: {vanilla.n} vs {debiased.n}")
    deltas = {m: getattr(debiased, m) - getattr(vanilla, m)
              for m in ("acc7", "acc2", "weighted_f1", "mae")}
    rows = [("metric", "vanilla", "debiased", "delta")]
    for m in ("acc7", "acc2", "weighted_f1", "mae"):
        rows.append((m, f"{getattr(vanilla, m):.4f}",
                     f"{getattr(debiased, m):.4f}", f"{deltas[m]:+.4f}"))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    table = "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths))
                      for r in rows)
    return {"vanilla": vanilla.to_dict(), "debiased": debiased.to_dict(),
            "deltas": deltas}, table


def write_report(report_dict, path):
    with open(path, "w") as fh:
        json.dump(report_dict, fh, sort_keys=True, indent=2)
        fh.write("\n")
