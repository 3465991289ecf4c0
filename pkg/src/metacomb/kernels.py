"""Hot numeric kernels: logistic gradient descent and grid F1 scans.

Every kernel exists twice, a loop version compiled with numba and a
vectorised numpy version, with identical contracts. ``fit_logistic`` and
``grid_counts`` dispatch to the backend chosen in :mod:`metacomb._accel`;
the ``*_numpy`` / ``*_numba`` names are importable directly so the two paths
can be compared against each other.
"""

import math

import numpy as np

from ._accel import BACKEND, HAVE_NUMBA, njit

# step-size control for gradient descent with step acceptance
LR_GROW = 1.1
LR_SHRINK = 0.5
LR_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def _sigmoid_np(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_grad_numpy(X, y, w, b, l2):
    """Mean BCE of ``sigmoid(X @ w + b)`` against ``y`` plus ``l2/2 * |w|^2``.

    Returns ``(loss, grad_w, grad_b)``.
    """
    n = X.shape[0]
    z = X @ w + b
    softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    loss = float(np.mean(softplus - y * z) + 0.5 * l2 * (w @ w))
    r = _sigmoid_np(z) - y
    grad_w = X.T @ r / n + l2 * w
    grad_b = float(r.sum() / n)
    return loss, grad_w, grad_b


def fit_logistic_numpy(X, y, lr, max_epochs, tol, l2):
    """Full-batch gradient descent from the origin with step acceptance.

    A candidate step is accepted only if it does not increase the loss;
    accepted steps grow the learning rate by ``LR_GROW``, rejected ones
    shrink it by ``LR_SHRINK``. Stops when the gradient norm drops to
    ``tol``, after ``max_epochs`` iterations, or when the rate collapses
    below ``LR_FLOOR``.

    Returns ``(w, b, loss, grad_norm, epochs, accepted, trace)`` where
    ``trace`` holds the loss at the start and after every accepted step.
    """
    K = X.shape[1]
    w = np.zeros(K)
    b = 0.0
    loss, gw, gb = loss_grad_numpy(X, y, w, b, l2)
    trace = [loss]
    epochs = 0
    accepted = 0
    gnorm = math.sqrt(float(gw @ gw) + gb * gb)
    while epochs < max_epochs and gnorm > tol and lr >= LR_FLOOR:
        epochs += 1
        w_new = w - lr * gw
        b_new = b - lr * gb
        loss_new, gw_new, gb_new = loss_grad_numpy(X, y, w_new, b_new, l2)
        if loss_new <= loss:
            w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
            gnorm = math.sqrt(float(gw @ gw) + gb * gb)
            trace.append(loss)
            accepted += 1
            lr *= LR_GROW
        else:
            lr *= LR_SHRINK
    return w, b, loss, gnorm, epochs, accepted, np.asarray(trace)


def grid_counts_numpy(scores, gold, grid):
    """Confusion counts of the rule ``score >= g`` for every grid point ``g``.

    Returns int64 arrays ``(tp, fp, fn)`` of length ``len(grid)``.
    """
    gold = gold.astype(bool)
    pos = np.sort(scores[gold])
    neg = np.sort(scores[~gold])
    tp = pos.size - np.searchsorted(pos, grid, side="left")
    fp = neg.size - np.searchsorted(neg, grid, side="left")
    fn = pos.size - tp
    return tp.astype(np.int64), fp.astype(np.int64), fn.astype(np.int64)


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


@njit(cache=True)
def _loss_grad_loop(X, y, w, b, l2, grad_w):
    # compensated (Neumaier) sums: near the optimum loss changes are ~1e-16,
    # and plain sequential sums are too noisy for the step-acceptance test
    n, K = X.shape
    comp_w = np.zeros(K)
    for k in range(K):
        grad_w[k] = 0.0
    loss = 0.0
    comp_loss = 0.0
    grad_b = 0.0
    comp_b = 0.0
    for i in range(n):
        z = b
        for k in range(K):
            z += X[i, k] * w[k]
        if z >= 0.0:
            ez = math.exp(-z)
            term = z + math.log1p(ez) - y[i] * z
            p = 1.0 / (1.0 + ez)
        else:
            ez = math.exp(z)
            term = math.log1p(ez) - y[i] * z
            p = ez / (1.0 + ez)
        t = loss + term
        if abs(loss) >= abs(term):
            comp_loss += (loss - t) + term
        else:
            comp_loss += (term - t) + loss
        loss = t
        r = p - y[i]
        t = grad_b + r
        if abs(grad_b) >= abs(r):
            comp_b += (grad_b - t) + r
        else:
            comp_b += (r - t) + grad_b
        grad_b = t
        for k in range(K):
            v = r * X[i, k]
            t = grad_w[k] + v
            if abs(grad_w[k]) >= abs(v):
                comp_w[k] += (grad_w[k] - t) + v
            else:
                comp_w[k] += (v - t) + grad_w[k]
            grad_w[k] = t
    ww = 0.0
    for k in range(K):
        grad_w[k] = (grad_w[k] + comp_w[k]) / n + l2 * w[k]
        ww += w[k] * w[k]
    return (loss + comp_loss) / n + 0.5 * l2 * ww, (grad_b + comp_b) / n


@njit(cache=True)
def _fit_loop(X, y, lr, max_epochs, tol, l2, grow, shrink, floor):
    K = X.shape[1]
    w = np.zeros(K)
    gw = np.zeros(K)
    w_new = np.zeros(K)
    gw_new = np.zeros(K)
    trace = np.empty(max_epochs + 1)
    b = 0.0
    loss, gb = _loss_grad_loop(X, y, w, b, l2, gw)
    trace[0] = loss
    n_trace = 1
    epochs = 0
    accepted = 0
    gnorm = gb * gb
    for k in range(K):
        gnorm += gw[k] * gw[k]
    gnorm = math.sqrt(gnorm)
    while epochs < max_epochs and gnorm > tol and lr >= floor:
        epochs += 1
        for k in range(K):
            w_new[k] = w[k] - lr * gw[k]
        b_new = b - lr * gb
        loss_new, gb_new = _loss_grad_loop(X, y, w_new, b_new, l2, gw_new)
        if loss_new <= loss:
            for k in range(K):
                w[k] = w_new[k]
                gw[k] = gw_new[k]
            b = b_new
            gb = gb_new
            loss = loss_new
            gnorm = gb * gb
            for k in range(K):
                gnorm += gw[k] * gw[k]
            gnorm = math.sqrt(gnorm)
            trace[n_trace] = loss
            n_trace += 1
            accepted += 1
            lr *= grow
        else:
            lr *= shrink
    return w, b, loss, gnorm, epochs, accepted, trace[:n_trace].copy()


@njit(cache=True)
def _grid_counts_loop(scores, gold, grid):
    # bucket each score by how many grid points it reaches, then suffix-sum
    m = grid.shape[0]
    pos_hist = np.zeros(m + 1, dtype=np.int64)
    neg_hist = np.zeros(m + 1, dtype=np.int64)
    for i in range(scores.shape[0]):
        v = scores[i]
        lo = 0
        hi = m
        while lo < hi:
            mid = (lo + hi) // 2
            if grid[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        reach = lo
        if gold[i]:
            pos_hist[reach] += 1
        else:
            neg_hist[reach] += 1
    tp = np.empty(m, dtype=np.int64)
    fp = np.empty(m, dtype=np.int64)
    fn = np.empty(m, dtype=np.int64)
    n_pos = 0
    for r in range(m + 1):
        n_pos += pos_hist[r]
    run_tp = 0
    run_fp = 0
    for j in range(m - 1, -1, -1):
        run_tp += pos_hist[j + 1]
        run_fp += neg_hist[j + 1]
        tp[j] = run_tp
        fp[j] = run_fp
        fn[j] = n_pos - run_tp
    return tp, fp, fn


def loss_grad_numba(X, y, w, b, l2):
    grad_w = np.zeros(X.shape[1])
    loss, grad_b = _loss_grad_loop(X, y, w, float(b), float(l2), grad_w)
    return loss, grad_w, grad_b


def fit_logistic_numba(X, y, lr, max_epochs, tol, l2):
    return _fit_loop(
        X, y, float(lr), int(max_epochs), float(tol), float(l2),
        LR_GROW, LR_SHRINK, LR_FLOOR,
    )


def grid_counts_numba(scores, gold, grid):
    return _grid_counts_loop(scores, gold.astype(np.bool_), grid)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _prep(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return X, y


if BACKEND == "numba":
    _loss_grad, _fit, _grid = loss_grad_numba, fit_logistic_numba, grid_counts_numba
else:
    _loss_grad, _fit, _grid = loss_grad_numpy, fit_logistic_numpy, grid_counts_numpy


def loss_grad(X, y, w, b, l2=0.0):
    X, y = _prep(X, y)
    return _loss_grad(X, y, np.ascontiguousarray(w, dtype=np.float64), float(b), float(l2))


def fit_logistic(X, y, lr, max_epochs, tol, l2):
    X, y = _prep(X, y)
    w, b, loss, gnorm, epochs, accepted, trace = _fit(X, y, lr, max_epochs, tol, l2)
    return np.asarray(w), float(b), float(loss), float(gnorm), int(epochs), int(accepted), np.asarray(trace)


def grid_counts(scores, gold, grid):
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    return _grid(scores, np.asarray(gold).astype(bool), grid)


__all__ = [
    "BACKEND",
    "HAVE_NUMBA",
    "loss_grad",
    "fit_logistic",
    "grid_counts",
    "loss_grad_numpy",
    "fit_logistic_numpy",
    "grid_counts_numpy",
    "loss_grad_numba",
    "fit_logistic_numba",
    "grid_counts_numba",
]
