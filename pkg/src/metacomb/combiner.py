"""Single-node logistic combiners over K base models, one per class.

Each class gets an independent unit ``sigmoid(sum_i w_i p_i + b)`` fitted by
full-batch gradient descent on mean binary cross-entropy (binary relevance:
labels are treated as independent).
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .core import CombinerParams, biased_sigmoid, combine_scores
from .data_io import FORMAT_VERSION, DataError, PredictionTable, check_version
from .errors import DegenerateDataError, ParameterError

log = logging.getLogger(__name__)

COMBINED_SOURCE = "MLT"


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.1
    max_epochs: int = 10000
    grad_tolerance: float = 1e-8
    l2_penalty: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ParameterError("learning_rate must be > 0")
        if not (isinstance(self.max_epochs, int) and self.max_epochs > 0):
            raise ParameterError("max_epochs must be a positive integer")
        if not self.grad_tolerance > 0:
            raise ParameterError("grad_tolerance must be > 0")
        if not self.l2_penalty >= 0:
            raise ParameterError("l2_penalty must be >= 0")

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in ("learning_rate", "max_epochs", "grad_tolerance", "l2_penalty", "seed") if k in d}
        return cls(**known)


@dataclass(frozen=True)
class TrainingMeta:
    epochs: int
    accepted_steps: int
    initial_loss: float
    final_loss: float
    final_grad_norm: float
    converged: bool
    seed: int
    loss_trace: tuple = field(repr=False, default=())

    def to_dict(self):
        d = asdict(self)
        d["loss_trace"] = list(self.loss_trace)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["loss_trace"] = tuple(d.get("loss_trace", ()))
        return cls(**d)


def _design(dev_probs, gold):
    X = np.asarray(dev_probs, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(gold, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError(f"{X.shape[0]} score rows for {y.size} gold labels")
    if y.size < 2:
        raise DataError("need at least two training samples")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("training inputs contain NaN or Inf")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("gold labels must be 0/1")
    if y.min() == y.max():
        raise DegenerateDataError("gold contains a single label; the bias would diverge")
    return X, y


def bce_loss_grad(dev_probs, gold, weights, bias, l2=0.0):
    """Objective and analytic gradient at an arbitrary ``(w, b)``."""
    X = np.asarray(dev_probs, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return kernels.loss_grad(X, np.asarray(gold, dtype=np.float64), weights, bias, l2)


def train_class_combiner(dev_probs, gold, cfg=TrainingConfig()):
    """Fit one class's combiner from an ``n x K`` score matrix.

    Returns ``(CombinerParams, TrainingMeta)``. Training starts at
    ``w = 0, b = 0`` where the loss is exactly ``ln 2``.
    """
    X, y = _design(dev_probs, gold)
    w, b, loss, gnorm, epochs, accepted, trace = kernels.fit_logistic(
        X, y, cfg.learning_rate, cfg.max_epochs, cfg.grad_tolerance, cfg.l2_penalty
    )
    converged = gnorm <= cfg.grad_tolerance
    if not converged:
        log.warning("combiner stopped after %d epochs with gradient norm %.3g", epochs, gnorm)
    meta = TrainingMeta(
        epochs=epochs,
        accepted_steps=accepted,
        initial_loss=float(trace[0]),
        final_loss=loss,
        final_grad_norm=gnorm,
        converged=bool(converged),
        seed=cfg.seed,
        loss_trace=tuple(float(v) for v in trace),
    )
    return CombinerParams(w, b), meta


@dataclass(frozen=True)
class CombinerModel:
    model_ids: tuple
    classes: tuple
    per_class: dict
    training_meta: dict
    config: TrainingConfig = TrainingConfig()

    def __post_init__(self):
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        object.__setattr__(self, "classes", tuple(self.classes))
        if set(self.per_class) != set(self.classes):
            raise DataError("combiner classes do not match the configured taxonomy")
        K = len(self.model_ids)
        for c, p in self.per_class.items():
            if p.K != K:
                raise DataError(f"class {c!r}: {p.K} weights for {K} models")

    def to_dict(self):
        diag = weight_diagnostics(self)
        return {
            "format_version": FORMAT_VERSION,
            "model_ids": list(self.model_ids),
            "classes": list(self.classes),
            "training_config": asdict(self.config),
            "combiners": {
                c: {
                    "weights": [float(v) for v in self.per_class[c].weights],
                    "bias": self.per_class[c].bias,
                    **diag[c],
                    "training": self.training_meta[c].to_dict() if c in self.training_meta else None,
                }
                for c in self.classes
            },
        }

    @classmethod
    def from_dict(cls, doc):
        check_version(doc, "combiner")
        try:
            classes = tuple(doc["classes"])
            combiners = doc["combiners"]
            per_class = {
                c: CombinerParams(np.asarray(combiners[c]["weights"], dtype=np.float64), combiners[c]["bias"])
                for c in classes
            }
            meta = {
                c: TrainingMeta.from_dict(combiners[c]["training"])
                for c in classes
                if combiners[c].get("training")
            }
            return cls(
                model_ids=tuple(doc["model_ids"]),
                classes=classes,
                per_class=per_class,
                training_meta=meta,
                config=TrainingConfig.from_dict(doc.get("training_config", {})),
            )
        except (KeyError, TypeError) as exc:
            raise DataError(f"combiner document is malformed: {exc!r}") from None


def _stack(tables, model_ids, cls, sample_ids):
    cols = []
    for mid in model_ids:
        t = tables[mid]
        if t.sample_ids != sample_ids:
            raise DataError(f"model {mid!r} is not aligned with model {model_ids[0]!r}")
        cols.append(t.column(cls))
    return np.column_stack(cols)


def _common_classes(tables, gold):
    shared = [c for c in gold.class_names if all(c in t.class_names for t in tables.values())]
    if not shared:
        raise DataError("no class is present in both the gold labels and every prediction table")
    return shared


def train_br_combiners(dev_tables, gold, cfg=TrainingConfig(), classes=None):
    """Train one combiner per class on aligned dev-split tables.

    ``dev_tables`` maps model id -> PredictionTable, all in gold sample
    order. ``classes`` defaults to every gold class scored by all models,
    so a Hateful/Non-hateful gold file with Hateful-only score tables
    trains a single Hateful combiner.
    """
    if not dev_tables:
        raise DataError("no base-model tables given")
    model_ids = tuple(dev_tables)
    classes = tuple(classes) if classes is not None else tuple(_common_classes(dev_tables, gold))
    for mid, t in dev_tables.items():
        if t.sample_ids != gold.sample_ids:
            raise DataError(f"model {mid!r} is not aligned with the gold labels")
    per_class, meta = {}, {}
    for c in classes:
        X = _stack(dev_tables, model_ids, c, gold.sample_ids)
        try:
            per_class[c], meta[c] = train_class_combiner(X, gold.column(c), cfg)
        except DataError as exc:
            raise type(exc)(f"class {c!r}: {exc}") from exc
        log.info("class %s: W=%.4f b=%.4f epochs=%d", c, per_class[c].weight_sum, per_class[c].bias, meta[c].epochs)
    return CombinerModel(model_ids, classes, per_class, meta, cfg)


def combined_scores(model, tables):
    """Pre-sigmoid weighted sums ``y`` per class, as an ``n x N`` array."""
    missing = [m for m in model.model_ids if m not in tables]
    if missing:
        raise DataError(f"missing prediction table(s) for model(s) {missing}")
    ids = tables[model.model_ids[0]].sample_ids
    out = np.empty((len(ids), len(model.classes)))
    for j, c in enumerate(model.classes):
        out[:, j] = combine_scores(model.per_class[c], _stack(tables, model.model_ids, c, ids))
    return ids, out


def predict_combined(model, tables):
    """Combined probabilities ``sigmoid(sum_i w_i p_i + b)`` per sample and class."""
    ids, y = combined_scores(model, tables)
    scores = np.column_stack(
        [biased_sigmoid(model.per_class[c], y[:, j]) for j, c in enumerate(model.classes)]
    )
    return PredictionTable(ids, model.classes, scores, COMBINED_SOURCE)


def weight_diagnostics(model):
    return {
        c: {
            "W": model.per_class[c].weight_sum,
            "sign_homogeneous": model.per_class[c].sign_homogeneous,
            "b_sign_consistent": model.per_class[c].bias_sign_consistent,
        }
        for c in model.classes
    }


LN2 = math.log(2.0)
