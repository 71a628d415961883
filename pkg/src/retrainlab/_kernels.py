"""Row-loop kernels shared by training and Monte Carlo evaluation.

Each kernel has a numba ``@njit`` version and a plain numpy version with
the same signature.  The numba path is used when numba imports cleanly and
``RETRAINLAB_DISABLE_NUMBA`` is unset (or ``0``).  Both paths agree to
floating point reassociation; they are not bit-identical to each other.
"""

import os

import numpy as np

_DISABLE_FLAG = "RETRAINLAB_DISABLE_NUMBA"


def _np_scores(X, theta):
    return X @ theta


def _np_sign_labels(scores):
    # sign(0) := +1
    return np.where(scores >= 0.0, 1.0, -1.0)


def _np_label_weighted_mean(X, labels, index):
    if index.shape[0] == 0:
        return np.zeros(X.shape[1])
    return (labels[index] @ X[index]) / index.shape[0]


def _np_count_misclassified(X, y, theta):
    pred = np.where(X @ theta >= 0.0, 1.0, -1.0)
    return int(np.count_nonzero(pred != y))


NUMPY_KERNELS = {
    "scores": _np_scores,
    "sign_labels": _np_sign_labels,
    "label_weighted_mean": _np_label_weighted_mean,
    "count_misclassified": _np_count_misclassified,
}


def _build_numba_kernels():
    from numba import njit

    # matrix-vector products go through BLAS; a hand loop is about 2x slower
    @njit(cache=True, nogil=True)
    def scores(X, theta):
        return X @ theta

    @njit(cache=True, nogil=True)
    def sign_labels(scores):
        out = np.empty(scores.shape[0])
        for i in range(scores.shape[0]):
            out[i] = 1.0 if scores[i] >= 0.0 else -1.0
        return out

    @njit(cache=True, nogil=True)
    def label_weighted_mean(X, labels, index):
        d = X.shape[1]
        out = np.zeros(d)
        k = index.shape[0]
        if k == 0:
            return out
        for r in range(k):
            i = index[r]
            w = labels[i]
            for j in range(d):
                out[j] += w * X[i, j]
        for j in range(d):
            out[j] /= k
        return out

    @njit(cache=True, nogil=True)
    def count_misclassified(X, y, theta):
        s = X @ theta
        count = 0
        for i in range(s.shape[0]):
            pred = 1.0 if s[i] >= 0.0 else -1.0
            if pred != y[i]:
                count += 1
        return count

    return {
        "scores": scores,
        "sign_labels": sign_labels,
        "label_weighted_mean": label_weighted_mean,
        "count_misclassified": count_misclassified,
    }


def _numba_requested():
    return os.environ.get(_DISABLE_FLAG, "0").strip().lower() in ("", "0", "false", "no")


try:
    NUMBA_KERNELS = _build_numba_kernels()
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_KERNELS = None

if NUMBA_KERNELS is not None and _numba_requested():
    BACKEND = "numba"
    _active = NUMBA_KERNELS
else:
    BACKEND = "numpy"
    _active = NUMPY_KERNELS


def _as_f8(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def scores(X, theta):
    """Return ``X @ theta`` as a float64 vector."""
    return _active["scores"](_as_f8(X), _as_f8(theta))


def sign_labels(scores):
    """Map scores to ``{+1.0, -1.0}`` with ``sign(0) = +1``."""
    return _active["sign_labels"](_as_f8(scores))


def label_weighted_mean(X, labels, index=None):
    """Average of ``labels[i] * X[i]`` over the rows listed in ``index``."""
    X = _as_f8(X)
    if index is None:
        index = np.arange(X.shape[0], dtype=np.int64)
    return _active["label_weighted_mean"](X, _as_f8(labels), np.ascontiguousarray(index, dtype=np.int64))


def count_misclassified(X, y, theta):
    """Number of rows where the sign prediction of ``theta`` differs from ``y``."""
    return int(_active["count_misclassified"](_as_f8(X), _as_f8(y), _as_f8(theta)))
