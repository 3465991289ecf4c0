"""File-based pipeline stages shared by the CLI and the acceptance suite.

A pipeline config is a JSON document::

    {
      "predictions": {"M1": "M1.csv", "M2": {"dev": "M2_dev.csv", "test": "M2_test.csv"}},
      "gold": "gold.csv",
      "output": "run",
      "training": {"learning_rate": 0.1, "max_epochs": 10000},
      "grid": [0.01, 0.99, 0.01],
      "dev_split": "dev",
      "test_split": "test",
      "accuracy_mode": "exact_match",
      "fallback_argmax": false,
      "binary_mapping": false,
      "drop_classes": [],
      "bound_threshold": 0.5,
      "seed": 0
    }

Relative paths resolve against the config file's directory. A prediction
or gold entry is either one file covering every split (rows are then
selected through the gold ``split`` column) or a mapping split -> file.
When the gold file has no ``split`` column every row is used, which is how
a foreign test set is evaluated with artifacts trained elsewhere.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import data_io
from .bounds import verification_report, verify_weight_bounds
from .combiner import CombinerModel, TrainingConfig, predict_combined, train_br_combiners, weight_diagnostics
from .data_io import DataError, binary_mapping, load_gold, load_json, load_predictions
from .errors import ParameterError
from .metrics import ACCURACY_MODES, evaluate
from .thresholds import DEFAULT_GRID, ThresholdVector, apply_thresholds, make_grid, train_cs_cut

log = logging.getLogger(__name__)

COMBINER_FILE = "combiner.json"
THRESHOLDS_FILE = "thresholds.json"
VERIFICATION_FILE = "verification.json"


def report_file(with_tm):
    return "evaluation_mlt_tm.json" if with_tm else "evaluation_mlt.json"


@dataclass(frozen=True)
class PipelineConfig:
    predictions: dict
    gold: object
    output: Path
    training: TrainingConfig = TrainingConfig()
    grid: tuple = DEFAULT_GRID
    dev_split: str = "dev"
    test_split: str = "test"
    accuracy_mode: str = "exact_match"
    fallback_argmax: bool = False
    binary_mapping: bool = False
    drop_classes: tuple = ()
    bound_threshold: float = 0.5
    seed: int = 0
    combiner_path: Path = None
    thresholds_path: Path = None
    base_dir: Path = field(default=Path("."), repr=False)

    def __post_init__(self):
        if self.accuracy_mode not in ACCURACY_MODES:
            raise ParameterError(f"accuracy_mode must be one of {ACCURACY_MODES}")
        make_grid(*self.grid)
        if not self.predictions:
            raise ParameterError("config lists no prediction files")

    @property
    def combiner_file(self):
        return self.combiner_path or self.output / COMBINER_FILE

    @property
    def thresholds_file(self):
        return self.thresholds_path or self.output / THRESHOLDS_FILE

    @classmethod
    def from_dict(cls, d, base_dir="."):
        base = Path(base_dir)

        def resolve(p):
            if p is None:
                return None
            if isinstance(p, dict):
                return {k: resolve(v) for k, v in p.items()}
            return base / p

        try:
            training = dict(d.get("training", {}))
            training.setdefault("seed", d.get("seed", 0))
            return cls(
                predictions={m: resolve(p) for m, p in d["predictions"].items()},
                gold=resolve(d["gold"]),
                output=resolve(d.get("output", "run")),
                training=TrainingConfig.from_dict(training),
                grid=tuple(float(v) for v in d.get("grid", DEFAULT_GRID)),
                dev_split=d.get("dev_split", "dev"),
                test_split=d.get("test_split", "test"),
                accuracy_mode=d.get("accuracy_mode", "exact_match"),
                fallback_argmax=bool(d.get("fallback_argmax", False)),
                binary_mapping=bool(d.get("binary_mapping", False)),
                drop_classes=tuple(d.get("drop_classes", ())),
                bound_threshold=float(d.get("bound_threshold", 0.5)),
                seed=int(d.get("seed", 0)),
                combiner_path=resolve(d.get("combiner")),
                thresholds_path=resolve(d.get("thresholds")),
                base_dir=base,
            )
        except KeyError as exc:
            raise DataError(f"pipeline config is missing key {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_dict(load_json(path), base_dir=path.parent)

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if "seed" in kw:
            kw["training"] = replace(self.training, seed=kw["seed"])
        return replace(self, **kw)


def _pick(entry, split):
    if isinstance(entry, dict):
        if split not in entry:
            raise DataError(f"no file configured for split {split!r}")
        return entry[split], True
    return entry, False


def load_split(cfg, split):
    """Gold labels and model tables for one split, all in gold sample order.

    A model file must carry exactly the sample ids of either the whole gold
    file or the selected split.
    """
    gold_path, per_split = _pick(cfg.gold, split)
    full = load_gold(gold_path)
    gold = full
    if full.split is not None and not per_split:
        gold = full.for_split(split)
        if gold.n == 0:
            raise DataError(f"gold file has no rows in split {split!r}")
    tables = {}
    for mid, entry in cfg.predictions.items():
        path, _ = _pick(entry, split)
        if not Path(path).exists():
            raise DataError(f"prediction file for model {mid!r} not found: {path}")
        t = load_predictions(path, source_model=mid)
        have = set(t.sample_ids)
        if have != set(full.sample_ids) and have != set(gold.sample_ids):
            raise DataError(f"model {mid!r}: sample ids in {path} do not match the gold labels")
        tables[mid] = t.select(gold.sample_ids)
    if cfg.binary_mapping:
        gold = binary_mapping(gold, drop=cfg.drop_classes)
        tables = {m: t.select(gold.sample_ids) for m, t in tables.items()}
    return tables, gold


def expand_to_gold(pred, pred_classes, gold_classes):
    """Lay predicted indicators out in gold column order.

    A two-class gold taxonomy scored on one class gets the other column as
    the complement (e.g. Non-hateful = not Hateful).
    """
    pred_classes, gold_classes = list(pred_classes), list(gold_classes)
    pred = np.asarray(pred, dtype=bool)
    out = np.zeros((pred.shape[0], len(gold_classes)), dtype=bool)
    for j, c in enumerate(gold_classes):
        if c in pred_classes:
            out[:, j] = pred[:, pred_classes.index(c)]
        elif len(gold_classes) == 2 and len(pred_classes) == 1 and pred_classes[0] in gold_classes:
            out[:, j] = ~pred[:, 0]
        else:
            raise DataError(f"no prediction for gold class {c!r}")
    return out


class _Outputs:
    """Write a set of files atomically; remove all of them if any write fails."""

    def __init__(self):
        self.docs = []

    def json(self, path, doc):
        self.docs.append((Path(path), data_io.dumps(doc)))

    def text(self, path, text):
        self.docs.append((Path(path), text))

    def commit(self):
        written = []
        try:
            for path, text in self.docs:
                data_io.atomic_write(path, text)
                written.append(path)
        except BaseException:
            for p in written:
                if p.exists():
                    os.unlink(p)
            raise
        return [p for p, _ in self.docs]


def load_combiner(path):
    return CombinerModel.from_dict(load_json(path))


def load_thresholds(path):
    return ThresholdVector.from_dict(load_json(path))


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def run_train_combiner(cfg):
    tables, gold = load_split(cfg, cfg.dev_split)
    model = train_br_combiners(tables, gold, cfg.training)
    out = _Outputs()
    out.json(cfg.combiner_file, model.to_dict())
    out.commit()
    return model


def run_train_thresholds(cfg):
    model = load_combiner(cfg.combiner_file)
    tables, gold = load_split(cfg, cfg.dev_split)
    combined = predict_combined(model, tables)
    tv = train_cs_cut(combined, gold, *cfg.grid)
    out = _Outputs()
    out.json(cfg.thresholds_file, tv.to_dict())
    out.commit()
    return tv


def _labels(cfg, model, combined, with_tm):
    tv = load_thresholds(cfg.thresholds_file) if with_tm else ThresholdVector.constant(model.classes)
    return apply_thresholds(combined, tv, cfg.fallback_argmax), tv


def run_predict(cfg, split=None, with_tm=False):
    split = split or cfg.test_split
    model = load_combiner(cfg.combiner_file)
    tables, gold = load_split(cfg, split)
    combined = predict_combined(model, tables)
    out = _Outputs()
    out.text(cfg.output / f"combined_{split}.csv", data_io.predictions_csv(combined))
    labels, _ = _labels(cfg, model, combined, with_tm)
    suffix = "mlt_tm" if with_tm else "mlt"
    text = data_io.csv_text(
        ["sample_id", *combined.class_names],
        ([sid, *(str(int(v)) for v in row)] for sid, row in zip(combined.sample_ids, labels)),
    )
    out.text(cfg.output / f"labels_{split}_{suffix}.csv", text)
    return out.commit()


def run_evaluate(cfg, with_tm=False, split=None, write=True):
    split = split or cfg.test_split
    model = load_combiner(cfg.combiner_file)
    tables, gold = load_split(cfg, split)
    combined = predict_combined(model, tables)
    labels, tv = _labels(cfg, model, combined, with_tm)
    pred = expand_to_gold(labels, combined.class_names, gold.class_names)
    report = evaluate(
        gold.labels, pred, gold.class_names, cfg.accuracy_mode, gold.group,
        label="MLT-plus-TM" if with_tm else "MLT",
    )
    doc = report.to_dict()
    doc["split"] = split
    doc["thresholds"] = {c: tv.per_class[c] for c in tv.classes}
    if write:
        out = _Outputs()
        out.json(cfg.output / report_file(with_tm), doc)
        out.commit()
    return report, doc


def run_verify(cfg, split=None):
    split = split or cfg.dev_split
    model = load_combiner(cfg.combiner_file)
    tables, gold = load_split(cfg, split)
    results = verify_weight_bounds(model, tables, gold, cfg.bound_threshold)
    doc = verification_report(results, cfg.bound_threshold)
    doc["split"] = split
    out = _Outputs()
    out.json(cfg.output / VERIFICATION_FILE, doc)
    out.commit()
    return results, doc


def describe_weights(model):
    lines = []
    for c, d in weight_diagnostics(model).items():
        w = ", ".join(f"{m}={v:.4f}" for m, v in zip(model.model_ids, model.per_class[c].weights))
        lines.append(
            f"{c}: W={d['W']:.4f} b={model.per_class[c].bias:.4f} "
            f"sign_homogeneous={d['sign_homogeneous']} b_sign_consistent={d['b_sign_consistent']} [{w}]"
        )
    return lines
