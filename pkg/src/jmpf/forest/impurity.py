"""Node impurity measures and information gain.

The scalar functions take raw samples; the ``*_from_*`` helpers work on
sufficient statistics and broadcast over leading axes so a whole batch of
candidate splits can be scored at once.
"""
from __future__ import annotations

import math

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


def entropy(class_counts) -> float:
    """Shannon entropy in nats of a class-count vector (``0 ln 0 = 0``)."""
    c = np.asarray(class_counts, dtype=np.float64)
    if c.ndim != 1:
        raise ValueError("class_counts must be 1-D")
    if np.any(c < 0):
        raise ValueError("class counts must be non-negative")
    if c.sum() < 1:
        raise ValueError("entropy of an empty set is undefined")
    return float(entropy_from_counts(c))


def variance_sum(targets) -> float:
    """Sum over target dimensions of the population variance."""
    Y = _as_targets(targets)
    return float(Y.var(axis=0).sum())


def gaussian_entropy(targets, eps: float = 0.0) -> float:
    """Closed-form Gaussian differential entropy, constant term as published.

    ``q/2 * (1 - ln 2pi) + 1/2 ln det(Sigma + eps I)`` with ``Sigma`` the
    unbiased sample covariance. The published constant differs from the
    textbook ``(1 + ln 2pi)``; it cancels in information gain either way.
    """
    Y = _as_targets(targets)
    s, q = Y.shape
    if s < 2:
        raise ValueError("need at least 2 samples for a covariance estimate")
    cov = np.atleast_2d(np.cov(Y, rowvar=False))
    return float(_gauss_from_cov(cov, q, eps))


def impurity(samples, kind: str, n_classes: int | None = None, eps: float = 0.0,
             counts: bool = False) -> float:
    """Impurity of a sample set.

    For ``entropy`` the samples are class labels, or a class-count vector
    when ``counts`` is true; the other kinds take an (s, q) target matrix.
    """
    if kind == "entropy":
        if counts:
            return entropy(samples)
        y = np.asarray(samples, dtype=np.int64).ravel()
        k = n_classes if n_classes is not None else int(y.max()) + 1
        return entropy(np.bincount(y, minlength=k))
    if counts:
        raise ValueError("counts=True only applies to entropy")
    if kind == "variance_sum":
        return variance_sum(samples)
    if kind == "gaussian_entropy":
        return gaussian_entropy(samples, eps)
    raise ValueError(f"unknown impurity {kind!r}")


def split_score(left, right, kind: str, n_classes: int | None = None, eps: float = 0.0,
                counts: bool = False) -> float:
    """Size-weighted mean impurity of the two children."""
    nl, nr = _count(left, counts), _count(right, counts)
    if nl == 0 or nr == 0:
        raise ValueError("both children must be non-empty")
    hl = impurity(left, kind, n_classes, eps, counts)
    hr = impurity(right, kind, n_classes, eps, counts)
    return (nl * hl + nr * hr) / (nl + nr)


def info_gain(parent, left, right, kind: str, n_classes: int | None = None,
              eps: float = 0.0, counts: bool = False) -> float:
    """Parent impurity minus the size-weighted child impurity."""
    if kind == "entropy" and n_classes is None and not counts:
        n_classes = int(np.max(np.asarray(parent))) + 1
    return (impurity(parent, kind, n_classes, eps, counts)
            - split_score(left, right, kind, n_classes, eps, counts))


def _count(samples, counts: bool = False) -> int:
    if counts:
        return int(np.sum(samples))
    return int(np.asarray(samples).shape[0])


def _as_targets(targets) -> np.ndarray:
    Y = np.asarray(targets, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise ValueError("targets must be a non-empty (s, q) matrix")
    return Y


# --- batched forms on sufficient statistics --------------------------------

def entropy_from_counts(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / n
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def variance_from_moments(n: np.ndarray, s: np.ndarray, ss: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=np.float64)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = s / n
        v = ss / n - mean * mean
    return np.maximum(v, 0.0).sum(axis=-1)


def gaussian_from_moments(n: np.ndarray, s: np.ndarray, s2: np.ndarray, eps: float) -> np.ndarray:
    """Batched Gaussian entropy from count, sum (.., q) and outer-product sum (.., q, q)."""
    n = np.asarray(n, dtype=np.float64)
    q = s.shape[-1]
    nn = np.maximum(n, 2.0)[..., None, None]
    cov = (s2 - s[..., :, None] * s[..., None, :] / np.maximum(n, 1.0)[..., None, None]) / (nn - 1.0)
    return _gauss_from_cov(cov, q, eps)


def _gauss_from_cov(cov: np.ndarray, q: int, eps: float):
    if eps:
        cov = cov + eps * np.eye(q)
    sign, logdet = np.linalg.slogdet(cov)
    logdet = np.where(sign > 0, logdet, -np.inf)
    return 0.5 * q * (1.0 - LOG_2PI) + 0.5 * logdet
