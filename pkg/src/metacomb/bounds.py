"""Class-indicator norms and the weight-sum interval for trained combiners.

For one class, with gold indicator ``u`` and threshold ``t``:

* ``|a|_t`` is the square root of the number of positive assignments,
* ``|a - b|_t`` the square root of the number of disagreements,
* the interpolation predictor is ``y_hat = y / |W|`` with ``W = sum_i w_i``.

With ``u = |u|_t``, ``e = |u - sigmoid_b(y)|_t`` and
``e_hat = |u - sigmoid_b(y_hat)|_t``, a sign-homogeneous combiner with
positive weights is expected to satisfy

    (u - e) / (u + e_hat)  <=  W  <=  (u + e) / (u - e_hat)

and the mirrored interval (negated, endpoints swapped) for negative
weights. The upper endpoint is only meaningful when ``u > e_hat``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .combiner import combined_scores
from .core import assign_class, sigmoid
from .data_io import FORMAT_VERSION
from .errors import DegenerateClassError, DimensionError, ParameterError, SingularityError

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class ClassNorms:
    u_norm: float
    err_combined: float
    err_interp: float
    t: float = 0.5


@dataclass(frozen=True)
class BoundInterval:
    lo: float
    hi: float
    sign_case: str
    valid: bool

    def contains(self, W):
        return self.lo <= W <= self.hi


def _binary(v, name):
    a = np.asarray(v)
    if a.ndim != 1:
        raise DimensionError(f"{name} must be a 1-d vector")
    return a.astype(bool)


def class_norm(assignments):
    return math.sqrt(int(np.count_nonzero(_binary(assignments, "assignments"))))


def class_diff_norm(a, b):
    a = _binary(a, "a")
    b = _binary(b, "b")
    if a.size != b.size:
        raise DimensionError(f"lengths differ: {a.size} vs {b.size}")
    return math.sqrt(int(np.count_nonzero(a != b)))


def interpolation_predictor(params, probs):
    """``y / |W|`` for an ``n x K`` score matrix (or a single length-K row)."""
    W = params.weight_sum
    if W == 0.0:
        raise SingularityError("weights sum to zero; the interpolation predictor is undefined")
    p = np.asarray(probs, dtype=np.float64)
    return (p @ params.weights) / abs(W)


def bound_interval(norms, sign_case):
    u, e, e_hat = norms.u_norm, norms.err_combined, norms.err_interp
    if u <= 0:
        raise DegenerateClassError("class has no positive gold instance")
    if sign_case not in (POSITIVE, NEGATIVE):
        raise ParameterError(f"sign_case must be {POSITIVE!r} or {NEGATIVE!r}")
    lo = (u - e) / (u + e_hat)
    valid = u - e_hat > 0
    hi = (u + e) / (u - e_hat) if valid else math.inf
    if sign_case == NEGATIVE:
        lo, hi = -hi, -lo
    return BoundInterval(lo, hi, sign_case, bool(valid))


def class_norms(params, probs, gold, t=0.5):
    """Norms of one class from an ``n x K`` score matrix and its gold column."""
    u = _binary(gold, "gold")
    y = np.asarray(probs, dtype=np.float64) @ params.weights
    y_hat = interpolation_predictor(params, probs)
    a = assign_class(sigmoid(y + params.bias), t)
    a_hat = assign_class(sigmoid(y_hat + params.bias), t)
    return ClassNorms(class_norm(u), class_diff_norm(u, a), class_diff_norm(u, a_hat), t)


def _finite_or_none(x):
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class ClassVerification:
    W: float
    applicable: bool
    contained: bool
    reason: str
    interval: BoundInterval = None
    norms: ClassNorms = None

    def to_dict(self):
        d = {
            "W": self.W,
            "applicable": self.applicable,
            "contained": self.contained if self.applicable else None,
            "reason": self.reason,
        }
        if self.interval is not None:
            d["sign_case"] = self.interval.sign_case
            d["valid"] = self.interval.valid
            d["lo"] = _finite_or_none(self.interval.lo)
            d["hi"] = _finite_or_none(self.interval.hi)
        if self.norms is not None:
            d["norms"] = asdict(self.norms)
        return d


def verify_class(params, probs, gold, t=0.5):
    """Check the interval for one class's combiner on the given data."""
    W = params.weight_sum
    if not params.sign_homogeneous:
        return ClassVerification(W, False, False, "mixed_sign_weights")
    if W == 0.0:
        raise SingularityError("weights sum to zero; the interpolation predictor is undefined")
    norms = class_norms(params, probs, gold, t)
    interval = bound_interval(norms, POSITIVE if W > 0 else NEGATIVE)
    if not interval.valid:
        return ClassVerification(W, False, False, "invalid_interval", interval, norms)
    return ClassVerification(W, True, interval.contains(W), "ok", interval, norms)


def verify_weight_bounds(model, tables, gold, t=0.5):
    """Per-class verification of a trained combiner; tables in gold order."""
    ids, _ = combined_scores(model, tables)
    if ids != gold.sample_ids:
        raise DimensionError("prediction tables are not aligned with the gold labels")
    out = {}
    for c in model.classes:
        X = np.column_stack([tables[m].column(c) for m in model.model_ids])
        out[c] = verify_class(model.per_class[c], X, gold.column(c), t)
    return out


def verification_report(results, t=0.5):
    return {
        "format_version": FORMAT_VERSION,
        "t": t,
        "classes": {c: r.to_dict() for c, r in results.items()},
    }
