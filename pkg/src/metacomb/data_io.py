"""Prediction tables, gold labels, CSV I/O and the CAD binary mapping.

CSV layout (UTF-8, comma separated):

* predictions, one file per base model: ``sample_id,<class_1>,...,<class_N>``
  with scores in [0, 1];
* gold labels: ``sample_id,<class_1>,...,<class_N>[,group][,split]`` with
  0/1 cells and ``split`` in {train, dev, test}.

Loaders validate the whole file before building a table, so a rejected file
never yields a partial result. Floats are written with ``repr`` and therefore
round-trip exactly.
"""

import csv
import io
import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, MappingError

FORMAT_VERSION = "1"
SPLITS = ("train", "dev", "test")
RESERVED = ("sample_id", "group", "split")

CAD_CLASSES = (
    "Neutral",
    "Identity-directed Abuse",
    "Affiliation-directed Abuse",
    "Person-directed Abuse",
    "Counter Speech",
)
HATEFUL = "Hateful"
NON_HATEFUL = "Non-hateful"
BINARY_CLASSES = (HATEFUL, NON_HATEFUL)
CAD_BINARY_MAP = {
    "Neutral": NON_HATEFUL,
    "Counter Speech": NON_HATEFUL,
    "Identity-directed Abuse": HATEFUL,
    "Affiliation-directed Abuse": HATEFUL,
    "Person-directed Abuse": HATEFUL,
}

_DECIMAL = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")


@dataclass(frozen=True)
class PredictionTable:
    sample_ids: tuple
    class_names: tuple
    scores: np.ndarray
    source_model: str = ""

    def __post_init__(self):
        ids = tuple(str(s) for s in self.sample_ids)
        names = tuple(str(c) for c in self.class_names)
        scores = np.array(self.scores, dtype=np.float64)
        if scores.ndim == 1:
            scores = scores[:, None]
        if scores.shape != (len(ids), len(names)):
            raise DataError(
                f"score matrix {scores.shape} does not match {len(ids)} ids x {len(names)} classes"
            )
        if len(set(ids)) != len(ids):
            raise DataError("sample ids are not unique")
        if not np.all(np.isfinite(scores)):
            raise DataError("scores contain NaN or Inf")
        if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
            raise DataError("scores must lie in [0, 1]")
        scores.setflags(write=False)
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "scores", scores)

    @property
    def n(self):
        return len(self.sample_ids)

    def column(self, name):
        try:
            return self.scores[:, self.class_names.index(name)]
        except ValueError:
            raise DataError(f"table {self.source_model!r} has no class {name!r}") from None

    def select(self, ids):
        """Rows for ``ids`` in the given order."""
        index = {s: i for i, s in enumerate(self.sample_ids)}
        try:
            rows = [index[s] for s in ids]
        except KeyError as exc:
            raise DataError(f"sample {exc.args[0]!r} missing from {self.source_model!r}") from None
        return PredictionTable(tuple(ids), self.class_names, self.scores[rows], self.source_model)

    def __eq__(self, other):
        return (
            isinstance(other, PredictionTable)
            and self.sample_ids == other.sample_ids
            and self.class_names == other.class_names
            and self.source_model == other.source_model
            and np.array_equal(self.scores, other.scores)
        )

    __hash__ = None


@dataclass(frozen=True)
class GoldLabels:
    sample_ids: tuple
    class_names: tuple
    labels: np.ndarray
    group: tuple = None
    split: tuple = None

    def __post_init__(self):
        ids = tuple(str(s) for s in self.sample_ids)
        names = tuple(str(c) for c in self.class_names)
        if not names:
            raise DataError("gold labels need at least one class column")
        labels = np.asarray(self.labels)
        if labels.ndim == 1:
            labels = labels[:, None]
        if labels.shape != (len(ids), len(names)):
            raise DataError(f"label matrix {labels.shape} does not match ids x classes")
        if not np.all((labels == 0) | (labels == 1)):
            raise DataError("gold labels must be 0/1")
        labels = labels.astype(np.int8)
        labels.setflags(write=False)
        if len(set(ids)) != len(ids):
            raise DataError("sample ids are not unique")
        for attr in ("group", "split"):
            val = getattr(self, attr)
            if val is not None:
                val = tuple(str(v) for v in val)
                if len(val) != len(ids):
                    raise DataError(f"{attr} column has {len(val)} entries for {len(ids)} samples")
                object.__setattr__(self, attr, val)
        if self.split is not None:
            bad = sorted(set(self.split) - set(SPLITS))
            if bad:
                raise DataError(f"unknown split token(s) {bad}")
        object.__setattr__(self, "sample_ids", ids)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return len(self.sample_ids)

    def column(self, name):
        try:
            return self.labels[:, self.class_names.index(name)]
        except ValueError:
            raise DataError(f"gold labels have no class {name!r}") from None

    def label_cardinality(self):
        """Mean number of positive labels per sample."""
        return float(self.labels.sum(axis=1).mean())

    def class_distribution(self):
        """Share of samples carrying each label, in class order."""
        return {c: float(v) for c, v in zip(self.class_names, self.labels.mean(axis=0))}

    def subset(self, rows):
        rows = list(rows)
        return GoldLabels(
            tuple(self.sample_ids[i] for i in rows),
            self.class_names,
            self.labels[rows],
            None if self.group is None else tuple(self.group[i] for i in rows),
            None if self.split is None else tuple(self.split[i] for i in rows),
        )

    def for_split(self, split):
        if split is None:
            return self
        if self.split is None:
            raise DataError(f"gold labels carry no split column; cannot select {split!r}")
        return self.subset(i for i, s in enumerate(self.split) if s == split)

    def __eq__(self, other):
        return (
            isinstance(other, GoldLabels)
            and self.sample_ids == other.sample_ids
            and self.class_names == other.class_names
            and self.group == other.group
            and self.split == other.split
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _read_rows(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    rows = list(csv.reader(io.StringIO(text, newline="")))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "sample_id":
        raise DataError(f"{path}: first column must be 'sample_id'")
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names")
    body = rows[1:]
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(r)}")
    return header, body


def _check_ids(path, body):
    seen = {}
    for lineno, r in enumerate(body, start=2):
        sid = r[0].strip()
        if not sid:
            raise DataError(f"{path}:{lineno}: empty sample_id")
        if sid in seen:
            raise DataError(f"{path}:{lineno}: duplicate sample_id {sid!r} (first on line {seen[sid]})")
        seen[sid] = lineno
    return tuple(r[0].strip() for r in body)


def load_predictions(path, source_model=None):
    header, body = _read_rows(path)
    classes = header[1:]
    if not classes:
        raise DataError(f"{path}: no class columns")
    ids = _check_ids(path, body)
    scores = np.empty((len(body), len(classes)))
    for i, r in enumerate(body):
        for j, cell in enumerate(r[1:]):
            cell = cell.strip()
            where = f"{path}:{i + 2}, column {classes[j]!r}"
            if not _DECIMAL.match(cell):
                raise DataError(f"{where}: {cell!r} is not a decimal number")
            v = float(cell)
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{where}: score {cell} outside [0, 1]")
            scores[i, j] = v
    name = source_model if source_model is not None else Path(path).stem
    return PredictionTable(ids, tuple(classes), scores, name)


def load_gold(path):
    header, body = _read_rows(path)
    classes = [h for h in header[1:] if h not in ("group", "split")]
    if not classes:
        raise DataError(f"{path}: no class columns")
    ids = _check_ids(path, body)
    col = {h: k for k, h in enumerate(header)}
    labels = np.empty((len(body), len(classes)), dtype=np.int8)
    for i, r in enumerate(body):
        for j, c in enumerate(classes):
            cell = r[col[c]].strip()
            if cell not in ("0", "1"):
                raise DataError(f"{path}:{i + 2}, column {c!r}: {cell!r} is not 0/1")
            labels[i, j] = int(cell)
    group = tuple(r[col["group"]].strip() for r in body) if "group" in col else None
    split = None
    if "split" in col:
        split = tuple(r[col["split"]].strip() for r in body)
        for i, s in enumerate(split):
            if s not in SPLITS:
                raise DataError(f"{path}:{i + 2}: unknown split {s!r}; expected one of {SPLITS}")
    return GoldLabels(ids, tuple(classes), labels, group, split)


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def predictions_csv(table):
    rows = (
        [sid, *(repr(float(v)) for v in row)]
        for sid, row in zip(table.sample_ids, table.scores)
    )
    return csv_text(["sample_id", *table.class_names], rows)


def save_predictions(table, path):
    atomic_write(path, predictions_csv(table))


def save_gold(gold, path):
    header = ["sample_id", *gold.class_names]
    if gold.group is not None:
        header.append("group")
    if gold.split is not None:
        header.append("split")
    rows = []
    for i, sid in enumerate(gold.sample_ids):
        row = [sid, *(str(int(v)) for v in gold.labels[i])]
        if gold.group is not None:
            row.append(gold.group[i])
        if gold.split is not None:
            row.append(gold.split[i])
        rows.append(row)
    atomic_write(path, csv_text(header, rows))


def save_labels(sample_ids, classes, labels, path):
    """Write a 0/1 prediction matrix using the gold CSV layout."""
    labels = np.asarray(labels)
    rows = ([sid, *(str(int(v)) for v in labels[i])] for i, sid in enumerate(sample_ids))
    atomic_write(path, csv_text(["sample_id", *classes], rows))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def dumps(doc):
    """Deterministic JSON: insertion order kept, full float precision."""
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def save_json(doc, path):
    atomic_write(path, dumps(doc))


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None


def check_version(doc, kind):
    v = doc.get("format_version")
    if v != FORMAT_VERSION:
        raise DataError(f"{kind}: unsupported format_version {v!r}")


# ---------------------------------------------------------------------------
# alignment and mapping
# ---------------------------------------------------------------------------


def align_tables(tables, gold):
    """Reorder every prediction table to the gold sample order.

    Each table must carry exactly the gold id set; ``tables`` maps
    model id -> PredictionTable.
    """
    want = set(gold.sample_ids)
    out = {}
    for mid, t in tables.items():
        have = set(t.sample_ids)
        if have != want:
            extra = sorted(have - want)[:3]
            missing = sorted(want - have)[:3]
            raise DataError(
                f"model {mid!r}: sample ids differ from gold (missing {missing}, extra {extra})"
            )
        out[mid] = t.select(gold.sample_ids)
    return out


def binary_mapping(gold, name_map=None, drop=()):
    """Collapse fine-grained labels into Hateful / Non-hateful.

    A sample is Hateful iff any of its labels maps to Hateful. Columns named
    in ``drop`` are ignored, and samples whose only positive labels are in
    dropped columns are removed.
    """
    name_map = dict(CAD_BINARY_MAP if name_map is None else name_map)
    drop = set(drop)
    kept = [c for c in gold.class_names if c not in drop]
    unmapped = [c for c in kept if c not in name_map]
    if unmapped:
        raise MappingError(f"no binary mapping for class(es) {unmapped}")
    bad = sorted({v for v in name_map.values()} - set(BINARY_CLASSES))
    if bad:
        raise MappingError(f"mapping targets must be {BINARY_CLASSES}, got {bad}")
    abuse = [gold.class_names.index(c) for c in kept if name_map[c] == HATEFUL]
    kept_idx = [gold.class_names.index(c) for c in kept]
    rows = list(range(gold.n))
    if drop:
        dropped_idx = [gold.class_names.index(c) for c in gold.class_names if c in drop]
        only_dropped = (gold.labels[:, kept_idx].sum(axis=1) == 0) & (
            gold.labels[:, dropped_idx].sum(axis=1) > 0
        )
        rows = [i for i in rows if not only_dropped[i]]
    src = gold.subset(rows)
    hateful = src.labels[:, abuse].any(axis=1) if abuse else np.zeros(src.n, dtype=bool)
    labels = np.stack([hateful, ~hateful], axis=1).astype(np.int8)
    return GoldLabels(src.sample_ids, BINARY_CLASSES, labels, src.group, src.split)
