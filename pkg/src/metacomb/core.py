"""Scalar and vector primitives of the combiner.

A combined score is the weighted sum ``y = sum_i w_i p_i`` of base-model
probabilities; the bias ``b`` only enters through the shifted sigmoid
``sigmoid(y + b)``. A sample is assigned to a class when that shifted score
is at least the class threshold.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError


def sigmoid(x):
    """Logistic function, stable for large ``|x|``. Accepts scalars or arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        if x >= 0:
            return 1.0 / (1.0 + np.exp(-x))
        ez = np.exp(x)
        return ez / (1.0 + ez)
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class CombinerParams:
    """Weights over K base models plus a scalar bias for one class."""

    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        w.setflags(write=False)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.bias):
            raise ParameterError("combiner weights and bias must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def K(self):
        return self.weights.size

    @property
    def weight_sum(self):
        """``W``, the sum of the weights."""
        return float(self.weights.sum())

    @property
    def sign_homogeneous(self):
        return bool(np.all(self.weights >= 0) or np.all(self.weights <= 0))

    @property
    def bias_sign_consistent(self):
        """True when ``b < 0`` with all weights >= 0, or ``b > 0`` with all <= 0."""
        w, b = self.weights, self.bias
        return bool((np.all(w >= 0) and b < 0) or (np.all(w <= 0) and b > 0))


def combine_scores(params, probs):
    """Bias-free weighted sum of base-model probabilities.

    ``probs`` is either a length-K vector (one sample) or an ``n x K``
    matrix (one row per sample).
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.shape[-1] != params.K:
        raise DimensionError(f"expected {params.K} model scores, got {p.shape[-1]}")
    y = p @ params.weights
    return float(y) if p.ndim == 1 else y


def biased_sigmoid(params, y):
    """``sigmoid(y + b)``; shifts the combined score into the sigmoid's domain."""
    if np.ndim(y) == 0:
        return sigmoid(float(y) + params.bias)
    return sigmoid(np.asarray(y, dtype=np.float64) + params.bias)


def _check_threshold(t):
    if not 0.0 < t < 1.0:
        raise ParameterError(f"threshold must lie in (0, 1), got {t}")


def assign_class(score, t):
    """Positive iff ``score >= t`` (the boundary counts as positive)."""
    _check_threshold(t)
    if np.ndim(score) == 0:
        return bool(score >= t)
    return np.asarray(score) >= t
