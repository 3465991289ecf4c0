"""Confusion counts, per-class F1, macro-F1, accuracy and grouped reports.

Any metric whose denominator is zero is reported as 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, ParameterError

FORMAT_VERSION = "1"
ACCURACY_MODES = ("exact_match", "label_wise")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other):
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


def _as_binary(v, name):
    a = np.asarray(v)
    if a.ndim != 1:
        raise DimensionError(f"{name} must be a 1-d vector")
    return a.astype(bool)


def confusion(gold, pred):
    g = _as_binary(gold, "gold")
    p = _as_binary(pred, "pred")
    if g.size != p.size:
        raise DimensionError(f"gold has {g.size} entries, pred has {p.size}")
    if g.size == 0:
        raise DimensionError("cannot count an empty vector")
    tp = int(np.count_nonzero(g & p))
    fp = int(np.count_nonzero(~g & p))
    fn = int(np.count_nonzero(g & ~p))
    return ConfusionCounts(tp, fp, fn, g.size - tp - fp - fn)


def _ratio(num, den):
    return num / den if den else 0.0


def f1_value(tp, fp, fn):
    """``2tp / (2tp + fp + fn)``, or 0 when nothing is positive on either side."""
    return _ratio(2 * tp, 2 * tp + fp + fn)


def f1_from_counts(c):
    return ClassMetrics(
        precision=_ratio(c.tp, c.tp + c.fp),
        recall=_ratio(c.tp, c.tp + c.fn),
        f1=f1_value(c.tp, c.fp, c.fn),
    )


def macro_f1(per_class):
    """Unweighted mean of the per-class F1 values.

    Accepts ``ClassMetrics`` objects or bare floats.
    """
    vals = [m.f1 if isinstance(m, ClassMetrics) else float(m) for m in per_class]
    if not vals:
        raise ParameterError("macro-F1 needs at least one class")
    return sum(vals) / len(vals)


def _as_matrix(labels, name):
    a = np.asarray(labels)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionError(f"{name} must be an n x N label matrix")
    return a.astype(bool)


def _correct(gold, pred, mode):
    g = _as_matrix(gold, "gold")
    p = _as_matrix(pred, "pred")
    if g.shape != p.shape:
        raise DimensionError(f"gold shape {g.shape} != pred shape {p.shape}")
    if mode == "exact_match":
        return np.all(g == p, axis=1).astype(np.float64)
    if mode == "label_wise":
        return np.mean(g == p, axis=1)
    raise ParameterError(f"unknown accuracy mode {mode!r}; use one of {ACCURACY_MODES}")


def accuracy(gold, pred, mode="exact_match"):
    """Accuracy of an ``n x N`` indicator prediction.

    ``exact_match`` scores a sample 1 only when its whole label set is right;
    ``label_wise`` is the fraction of correct (sample, class) cells. For a
    single column both modes equal ordinary accuracy.
    """
    per_sample = _correct(gold, pred, mode)
    if per_sample.size == 0:
        raise DimensionError("cannot score zero samples")
    return float(per_sample.mean())


def grouped_evaluate(gold, pred, groups, mode="exact_match"):
    """Accuracy per group tag, keyed in lexicographic order of the tags."""
    per_sample = _correct(gold, pred, mode)
    tags = list(groups)
    if len(tags) != per_sample.size:
        raise DimensionError(f"{len(tags)} group tags for {per_sample.size} samples")
    for i, tag in enumerate(tags):
        if tag is None or tag == "":
            raise DataError(f"sample {i} has no group tag")
    tags = np.asarray(tags, dtype=object)
    return {str(g): float(per_sample[tags == g].mean()) for g in sorted(set(tags))}


@dataclass
class EvaluationReport:
    classes: list
    counts: dict
    per_class: dict
    macro_f1: float
    accuracy: float
    accuracy_mode: str
    per_group: dict = None
    label: str = ""

    def to_dict(self):
        out = {"format_version": FORMAT_VERSION}
        if self.label:
            out["label"] = self.label
        out["accuracy_mode"] = self.accuracy_mode
        out["classes"] = list(self.classes)
        out["per_class"] = {
            c: {
                "precision": self.per_class[c].precision,
                "recall": self.per_class[c].recall,
                "f1": self.per_class[c].f1,
                "tp": self.counts[c].tp,
                "fp": self.counts[c].fp,
                "fn": self.counts[c].fn,
                "tn": self.counts[c].tn,
            }
            for c in self.classes
        }
        out["macro_f1"] = self.macro_f1
        out["accuracy"] = self.accuracy
        if self.per_group is not None:
            out["per_group"] = {g: self.per_group[g] for g in sorted(self.per_group)}
        return out


def evaluate(gold, pred, classes, mode="exact_match", groups=None, label=""):
    """Full report for an ``n x N`` gold vs predicted indicator matrix."""
    g = _as_matrix(gold, "gold")
    p = _as_matrix(pred, "pred")
    classes = list(classes)
    if g.shape != p.shape or g.shape[1] != len(classes):
        raise DimensionError(
            f"gold {g.shape}, pred {p.shape} and {len(classes)} classes do not agree"
        )
    counts = {c: confusion(g[:, j], p[:, j]) for j, c in enumerate(classes)}
    per_class = {c: f1_from_counts(counts[c]) for c in classes}
    return EvaluationReport(
        classes=classes,
        counts=counts,
        per_class=per_class,
        macro_f1=macro_f1([per_class[c] for c in classes]),
        accuracy=accuracy(g, p, mode),
        accuracy_mode=mode,
        per_group=None if groups is None else grouped_evaluate(g, p, groups, mode),
        label=label,
    )
