"""Per-class decision thresholds chosen by grid search on F1.

For every class independently the combined scores are cut at each grid
point ``alpha, alpha + delta, ..., <= beta``; the cut with the highest F1
wins, ties going to the smallest threshold.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data_io import FORMAT_VERSION, DataError, check_version
from .errors import ParameterError
from .metrics import f1_value

DEFAULT_GRID = (0.01, 0.99, 0.01)
_GRID_DECIMALS = 12


def make_grid(alpha, beta, delta):
    """Grid points ``alpha + m * delta`` for ``m = 0, 1, ...`` not exceeding ``beta``.

    Points are rounded to 12 decimals so that e.g. ``0.05 + 4 * 0.05`` is
    exactly ``0.25``.
    """
    if not (0.0 < alpha <= beta < 1.0):
        raise ParameterError(f"need 0 < alpha <= beta < 1, got alpha={alpha}, beta={beta}")
    if not delta > 0:
        raise ParameterError(f"step must be > 0, got {delta}")
    m = int(math.floor((beta - alpha) / delta + 1e-9))
    grid = np.round(alpha + delta * np.arange(m + 1), _GRID_DECIMALS)
    grid = grid[grid <= beta + 1e-12]
    if grid.size == 0:
        raise ParameterError("threshold grid has no points")
    return grid


def _check_inputs(scores, gold):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    g = np.asarray(gold).reshape(-1)
    if s.size == 0:
        raise ParameterError("cannot train a threshold on empty data")
    if s.size != g.size:
        raise DataError(f"{s.size} scores for {g.size} gold labels")
    if not np.all(np.isfinite(s)):
        raise DataError("scores contain NaN or Inf")
    return s, g.astype(bool)


def grid_f1(scores, gold, grid):
    """F1 of the rule ``score >= g`` at every grid point, via the accelerated kernel."""
    tp, fp, fn = kernels.grid_counts(scores, gold, grid)
    return np.array([f1_value(int(a), int(b), int(c)) for a, b, c in zip(tp, fp, fn)])


def _select(grid, f1s):
    best = max(f1s)
    for g, v in zip(grid, f1s):
        if v == best:
            return float(g), float(v)


def train_threshold(scores, gold, alpha=DEFAULT_GRID[0], beta=DEFAULT_GRID[1], delta=DEFAULT_GRID[2]):
    """Return ``(t, f1)`` for the smallest grid point maximising F1."""
    s, g = _check_inputs(scores, gold)
    grid = make_grid(alpha, beta, delta)
    return _select(grid, grid_f1(s, g, grid))


def brute_force_threshold_oracle(scores, gold, alpha=DEFAULT_GRID[0], beta=DEFAULT_GRID[1], delta=DEFAULT_GRID[2]):
    """Reference for :func:`train_threshold`: a fresh O(n) count at every grid point."""
    s, g = _check_inputs(scores, gold)
    grid = make_grid(alpha, beta, delta)
    best_t, best_f1 = None, -1.0
    for t in grid:
        tp = fp = fn = 0
        for score, label in zip(s.tolist(), g.tolist()):
            predicted = score >= t
            if predicted and label:
                tp += 1
            elif predicted:
                fp += 1
            elif label:
                fn += 1
        f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
        if f1 > best_f1:
            best_t, best_f1 = float(t), f1
    return best_t, best_f1


@dataclass(frozen=True)
class ThresholdVector:
    classes: tuple
    per_class: dict
    achieved_f1: dict
    grid: tuple = DEFAULT_GRID

    def to_dict(self):
        alpha, beta, delta = self.grid
        return {
            "format_version": FORMAT_VERSION,
            "grid": {"alpha": alpha, "beta": beta, "delta": delta},
            "classes": list(self.classes),
            "thresholds": {c: self.per_class[c] for c in self.classes},
            "dev_f1": {c: self.achieved_f1[c] for c in self.classes},
        }

    @classmethod
    def from_dict(cls, doc):
        check_version(doc, "thresholds")
        try:
            classes = tuple(doc["classes"])
            g = doc["grid"]
            return cls(
                classes=classes,
                per_class={c: float(doc["thresholds"][c]) for c in classes},
                achieved_f1={c: doc["dev_f1"][c] for c in classes},
                grid=(float(g["alpha"]), float(g["beta"]), float(g["delta"])),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"threshold document is malformed: {exc!r}") from None

    @classmethod
    def constant(cls, classes, t=0.5):
        """Every class cut at ``t``; the untuned default is ``t = 0.5``."""
        classes = tuple(classes)
        return cls(classes, {c: t for c in classes}, {c: None for c in classes}, (t, t, 1.0))


def train_cs_cut(combined, gold, alpha=DEFAULT_GRID[0], beta=DEFAULT_GRID[1], delta=DEFAULT_GRID[2]):
    """One independent threshold per class of the combined table.

    ``combined`` must be in gold sample order.
    """
    if combined.sample_ids != gold.sample_ids:
        raise DataError("combined scores are not aligned with the gold labels")
    make_grid(alpha, beta, delta)
    per_class, f1s = {}, {}
    for c in combined.class_names:
        try:
            per_class[c], f1s[c] = train_threshold(combined.column(c), gold.column(c), alpha, beta, delta)
        except (DataError, ParameterError) as exc:
            raise type(exc)(f"class {c!r}: {exc}") from exc
    return ThresholdVector(combined.class_names, per_class, f1s, (alpha, beta, delta))


def apply_thresholds(combined, tv, fallback_argmax=False):
    """Indicator matrix ``score_c >= t_c`` in the column order of ``combined``.

    Rows may be all-zero (no class passes its cut). With ``fallback_argmax``
    such rows get the single highest-scoring class instead.
    """
    missing = [c for c in combined.class_names if c not in tv.per_class]
    if missing:
        raise DataError(f"no threshold for class(es) {missing}")
    t = np.array([tv.per_class[c] for c in combined.class_names])
    labels = combined.scores >= t
    if fallback_argmax:
        empty = ~labels.any(axis=1)
        if empty.any():
            labels[empty, np.argmax(combined.scores[empty], axis=1)] = True
    return labels
