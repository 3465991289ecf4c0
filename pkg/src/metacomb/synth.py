"""Seeded synthetic base-model predictions.

Gold labels are drawn from class priors (categorical in ``single`` mode,
independent Bernoulli per class in ``multilabel`` mode). Each model then
scores each class with ``Beta(a_pos, b_pos)`` for positive samples and
``Beta(a_neg, b_neg)`` for negatives, independently across models. A
random permutation assigns train/dev/test splits.

All randomness comes from one ``numpy.random.PCG64`` stream seeded with
``spec.seed``, so a spec fully determines its output.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .data_io import (
    BINARY_CLASSES,
    CAD_CLASSES,
    FORMAT_VERSION,
    GoldLabels,
    PredictionTable,
    check_version,
    save_gold,
    save_json,
    save_predictions,
)
from .errors import ParameterError

HATEFUL_RATE = 0.2
TRANSFER_HATEFUL_RATE = 0.688
CAD_PRIORS = (0.798, 0.099, 0.050, 0.040, 0.008)

# positive shapes Beta(2 + 0.3 q, 2), negatives mirrored; M4 is the weakest
MIXED_QUALITY = {"M1": 2.0, "M2": 1.5, "M3": 3.0, "M4": 0.5, "M5": 2.5}
QUALITY_SCALE = 0.3


@dataclass(frozen=True)
class ModelShape:
    """Beta parameters ``(pos, neg)`` per scored class for one base model."""

    model_id: str
    shapes: dict

    def __post_init__(self):
        for c, (pos, neg) in self.shapes.items():
            if min(*pos, *neg) <= 0:
                raise ParameterError(f"model {self.model_id!r}, class {c!r}: Beta parameters must be > 0")

    @classmethod
    def shared(cls, model_id, pos, neg, classes):
        return cls(model_id, {c: (tuple(pos), tuple(neg)) for c in classes})

    def to_dict(self):
        return {
            "id": self.model_id,
            "classes": {c: {"pos": list(p), "neg": list(q)} for c, (p, q) in self.shapes.items()},
        }

    @classmethod
    def from_dict(cls, d, classes):
        if "classes" in d:
            shapes = {c: (tuple(v["pos"]), tuple(v["neg"])) for c, v in d["classes"].items()}
        else:
            shapes = {c: (tuple(d["pos"]), tuple(d["neg"])) for c in classes}
        return cls(str(d["id"]), shapes)


@dataclass(frozen=True)
class SyntheticSpec:
    n_samples: int
    classes: tuple
    priors: tuple
    models: tuple
    seed: int = 0
    mode: str = "single"
    score_classes: tuple = None
    split_fractions: tuple = (0.6, 0.2, 0.2)
    groups: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "priors", tuple(float(p) for p in self.priors))
        object.__setattr__(self, "models", tuple(self.models))
        if self.score_classes is None:
            default = self.classes[:1] if (self.mode == "single" and len(self.classes) == 2) else self.classes
            object.__setattr__(self, "score_classes", default)
        else:
            object.__setattr__(self, "score_classes", tuple(self.score_classes))
        if self.groups is not None:
            object.__setattr__(self, "groups", tuple(self.groups))
        self.validate()

    def validate(self):
        if not (isinstance(self.n_samples, int) and self.n_samples > 0):
            raise ParameterError("n_samples must be a positive integer")
        if self.mode not in ("single", "multilabel"):
            raise ParameterError(f"mode must be 'single' or 'multilabel', got {self.mode!r}")
        if len(self.priors) != len(self.classes) or not self.classes:
            raise ParameterError("need one prior per class")
        if not all(0.0 < p < 1.0 for p in self.priors):
            raise ParameterError("priors must lie in (0, 1)")
        if self.mode == "single" and abs(sum(self.priors) - 1.0) > 1e-9:
            raise ParameterError(f"single-label priors must sum to 1, got {sum(self.priors)}")
        if not self.models:
            raise ParameterError("need at least one model")
        if len({m.model_id for m in self.models}) != len(self.models):
            raise ParameterError("model ids must be unique")
        unknown = set(self.score_classes) - set(self.classes)
        if unknown:
            raise ParameterError(f"score classes {sorted(unknown)} are not in the class list")
        for m in self.models:
            missing = set(self.score_classes) - set(m.shapes)
            if missing:
                raise ParameterError(f"model {m.model_id!r} has no shape for {sorted(missing)}")
        f = self.split_fractions
        if len(f) != 3 or min(f) < 0 or abs(sum(f) - 1.0) > 1e-9:
            raise ParameterError("split_fractions must be three non-negative shares summing to 1")

    def to_dict(self):
        d = {
            "format_version": FORMAT_VERSION,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "mode": self.mode,
            "classes": list(self.classes),
            "priors": list(self.priors),
            "score_classes": list(self.score_classes),
            "split_fractions": list(self.split_fractions),
            "models": [m.to_dict() for m in self.models],
        }
        if self.groups is not None:
            d["groups"] = list(self.groups)
        return d

    @classmethod
    def from_dict(cls, d):
        check_version(d, "synthetic spec")
        classes = tuple(d["classes"])
        score_classes = d.get("score_classes")
        shape_classes = score_classes if score_classes is not None else classes
        return cls(
            n_samples=int(d["n_samples"]),
            classes=classes,
            priors=tuple(d["priors"]),
            models=tuple(ModelShape.from_dict(m, shape_classes) for m in d["models"]),
            seed=int(d.get("seed", 0)),
            mode=d.get("mode", "single"),
            score_classes=score_classes,
            split_fractions=tuple(d.get("split_fractions", (0.6, 0.2, 0.2))),
            groups=d.get("groups"),
        )


class Synthetic(NamedTuple):
    tables: dict
    gold: GoldLabels
    splits: tuple


def generate(spec):
    """Draw gold labels, per-model score tables and split tags from ``spec``."""
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n, N = spec.n_samples, len(spec.classes)
    if spec.mode == "single":
        cat = rng.choice(N, size=n, p=np.asarray(spec.priors))
        labels = np.zeros((n, N), dtype=np.int8)
        labels[np.arange(n), cat] = 1
    else:
        labels = (rng.random((n, N)) < np.asarray(spec.priors)).astype(np.int8)

    ids = tuple(f"s{i:06d}" for i in range(n))
    tables = {}
    for m in spec.models:
        cols = []
        for c in spec.score_classes:
            (ap, bp), (an, bn) = m.shapes[c]
            pos = rng.beta(ap, bp, size=n)
            neg = rng.beta(an, bn, size=n)
            cols.append(np.where(labels[:, spec.classes.index(c)] == 1, pos, neg))
        tables[m.model_id] = PredictionTable(ids, spec.score_classes, np.column_stack(cols), m.model_id)

    order = rng.permutation(n)
    n_train = int(round(spec.split_fractions[0] * n))
    n_dev = int(round(spec.split_fractions[1] * n))
    tag = np.empty(n, dtype=object)
    tag[order[:n_train]] = "train"
    tag[order[n_train:n_train + n_dev]] = "dev"
    tag[order[n_train + n_dev:]] = "test"
    splits = tuple(tag)

    group = None
    if spec.groups:
        group = tuple(spec.groups[i] for i in rng.integers(len(spec.groups), size=n))
    gold = GoldLabels(ids, spec.classes, labels, group, splits)
    return Synthetic(tables, gold, splits)


def flip_distribution(spec, minority_prior=None):
    """Exchange the majority and minority class of a binary spec.

    Without ``minority_prior`` the two priors are swapped. Otherwise the
    current minority class receives ``minority_prior`` and the other class
    its complement. Model shapes and seed are kept, so the new labels are a
    fresh draw, not a relabelling.
    """
    if spec.mode != "single" or len(spec.classes) != 2:
        raise ParameterError("flip_distribution needs a two-class single-label spec")
    p0, p1 = spec.priors
    if minority_prior is None:
        priors = (p1, p0)
    else:
        if not 0.0 < minority_prior < 1.0:
            raise ParameterError("minority_prior must lie in (0, 1)")
        if p0 <= p1:
            priors = (minority_prior, 1.0 - minority_prior)
        else:
            priors = (1.0 - minority_prior, minority_prior)
    return replace(spec, priors=priors)


def write_synthetic(data, spec, outdir):
    """Write ``gold.csv``, one ``<model>.csv`` per model and ``spec.json``.

    Returns the list of written paths.
    """
    outdir = Path(outdir)
    paths = [outdir / "gold.csv"]
    save_gold(data.gold, paths[0])
    for mid, table in data.tables.items():
        p = outdir / f"{mid}.csv"
        save_predictions(table, p)
        paths.append(p)
    save_json(spec.to_dict(), outdir / "spec.json")
    paths.append(outdir / "spec.json")
    return paths


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def mixed_quality_models(classes, quality=None, scale=QUALITY_SCALE):
    quality = MIXED_QUALITY if quality is None else quality
    return tuple(
        ModelShape.shared(mid, (2.0 + scale * q, 2.0), (2.0, 2.0 + scale * q), classes)
        for mid, q in quality.items()
    )


def binary_spec(n_samples=20000, seed=0, hateful_rate=HATEFUL_RATE, models=None, groups=None):
    """Hateful / Non-hateful task scored by five base models of mixed quality."""
    classes = BINARY_CLASSES
    models = mixed_quality_models(classes[:1]) if models is None else models
    return SyntheticSpec(
        n_samples=n_samples,
        classes=classes,
        priors=(hateful_rate, 1.0 - hateful_rate),
        models=models,
        seed=seed,
        groups=groups,
    )


def transfer_spec(spec, seed=None):
    """Binary spec with the Hateful class in the majority, same models."""
    flipped = flip_distribution(spec, minority_prior=TRANSFER_HATEFUL_RATE)
    return flipped if seed is None else replace(flipped, seed=seed)


def cad_spec(n_samples=20000, seed=0):
    """Five fine-grained classes with CAD-like priors (renormalised to sum to 1)."""
    total = sum(CAD_PRIORS)
    priors = tuple(p / total for p in CAD_PRIORS)
    return SyntheticSpec(
        n_samples=n_samples,
        classes=CAD_CLASSES,
        priors=priors,
        models=mixed_quality_models(CAD_CLASSES),
        seed=seed,
    )


def noise_model_spec(n_samples=10000, seed=0):
    """Binary spec where model M4 emits uniform noise and the others carry signal."""
    quality = {k: v for k, v in MIXED_QUALITY.items() if k != "M4"}
    informative = mixed_quality_models(BINARY_CLASSES[:1], quality)
    noise = ModelShape.shared("M4", (1.0, 1.0), (1.0, 1.0), BINARY_CLASSES[:1])
    models = informative[:3] + (noise,) + informative[3:]
    return binary_spec(n_samples, seed, models=models)


def random_ensemble_spec(seed, max_models=5, prior_range=(0.1, 0.5)):
    """A random binary ensemble: 1..max_models models of random Beta quality.

    Used to sweep the weight-sum interval over many different combiners.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    K = int(rng.integers(1, max_models + 1))
    prior = float(rng.uniform(*prior_range))
    n = int(rng.integers(500, 3001))
    models = tuple(
        ModelShape.shared(
            f"M{k + 1}",
            (1.0 + rng.uniform(0, 2), 1.0 + rng.uniform(0, 1)),
            (1.0 + rng.uniform(0, 1), 1.0 + rng.uniform(0, 2)),
            BINARY_CLASSES[:1],
        )
        for k in range(K)
    )
    return binary_spec(n, seed=seed, hateful_rate=prior, models=models)
