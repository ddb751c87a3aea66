"""Learned rotation that pushes zero-centered features toward hypercube vertices.

The rotation is found by iterative quantization: alternately snap the
rotated data to the nearest vertex of {-1, +1}^m and re-solve the
orthogonal Procrustes problem for the rotation. The binary codes are only
an intermediate; the model keeps the mean and the rotation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import as_matrix, procrustes_rotation

DEFAULT_ITERATIONS = 50
REL_TOL = 1e-7


@dataclass(frozen=True)
class RotationModel:
    mean: np.ndarray
    R: np.ndarray
    loss_trace: np.ndarray = field(repr=False)
    iterations: int = 0
    seed: int = 0

    @property
    def dim(self) -> int:
        return self.R.shape[0]


def sign_quantize(M) -> np.ndarray:
    """Elementwise sign with the ``x >= 0 -> +1`` convention."""
    M = np.asarray(M, dtype=np.float64)
    return np.where(M >= 0.0, 1.0, -1.0)


def quantization_loss(X, R) -> float:
    """``||sgn(X R) - X R||_F^2`` for centered ``X`` and orthonormal ``R``."""
    X = as_matrix(X)
    R = as_matrix(R, "R")
    if X.shape[1] != R.shape[0] or R.shape[0] != R.shape[1]:
        raise ValueError(f"shape mismatch: X {X.shape}, R {R.shape}")
    V = X @ R
    return float(np.sum((sign_quantize(V) - V) ** 2))


def random_rotation(m: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal factor of a Gaussian matrix (QR, with R-diagonal sign fix)."""
    Q, T = np.linalg.qr(rng.standard_normal((m, m)))
    d = np.sign(np.diag(T))
    d[d == 0] = 1.0
    return Q * d


def itq_fit(X, iterations: int = DEFAULT_ITERATIONS, seed: int = 0,
            rel_tol: float = REL_TOL, init: np.ndarray | None = None) -> RotationModel:
    """Learn the vertex-clustering rotation.

    Parameters
    ----------
    X : array_like, shape (n, m)
        Training features; centered internally and the mean is stored.
    iterations : int
        Maximum number of quantize/Procrustes rounds.
    seed : int
        Seed for the random orthonormal initialisation.
    rel_tol : float
        Stop once the relative loss improvement of a round drops below this.
        With 0 the loop only stops early at an exact fixed point.
    init : ndarray, optional
        Explicit starting rotation (overrides the seeded draw).
    """
    X = as_matrix(X)
    n, m = X.shape
    if n < 2:
        raise ValueError("need at least 2 samples to learn a rotation")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    mean = X.mean(axis=0)
    Xc = X - mean
    if not np.any(Xc):
        raise ValueError("all rows are identical; rotation is undefined")

    if init is None:
        R = random_rotation(m, np.random.default_rng(seed))
    else:
        R = as_matrix(init, "init")
        if R.shape != (m, m):
            raise ValueError(f"init must be {m}x{m}")

    V = Xc @ R
    B = sign_quantize(V)
    trace = [float(np.sum((B - V) ** 2))]
    done = 0
    for _ in range(iterations):
        R_new = procrustes_rotation(B, Xc)
        V_new = Xc @ R_new
        B_new = sign_quantize(V_new)
        loss = float(np.sum((B_new - V_new) ** 2))
        R, B = R_new, B_new
        trace.append(loss)
        done += 1
        prev = trace[-2]
        if prev == 0.0 or (prev - loss) <= rel_tol * prev:
            break
    return RotationModel(mean=mean, R=R, loss_trace=np.asarray(trace),
                         iterations=done, seed=seed)


def rotate(model: RotationModel, X) -> np.ndarray:
    """Map features into the rotated space: ``(X - mean) @ R``."""
    X = as_matrix(X)
    if X.shape[1] != model.dim:
        raise ValueError(f"expected {model.dim} columns, got {X.shape[1]}")
    return (X - model.mean) @ model.R
