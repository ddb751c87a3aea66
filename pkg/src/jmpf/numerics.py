"""Dense linear-algebra helpers shared by the rotation, forest and SR code.

All matrices follow the samples-as-rows convention: ``X`` has shape
``(n_samples, n_features)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``A = U @ diag(S) @ V.T`` with a deterministic sign convention."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T


@dataclass(frozen=True)
class PcaBasis:
    mean: np.ndarray
    components: np.ndarray  # (m, k), orthonormal columns
    explained_variance: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.components.shape[0]

    @property
    def n_components(self) -> int:
        return self.components.shape[1]


def as_matrix(A, name: str = "X") -> np.ndarray:
    """Validate ``A`` as a non-empty finite 2-D float64 array."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def center(X):
    """Subtract the per-column mean.

    Returns
    -------
    Xc : ndarray
        Column-centered copy of ``X``.
    mean : ndarray
        The column means that were removed.
    """
    X = as_matrix(X)
    mean = X.mean(axis=0)
    return X - mean, mean


def svd(A) -> SvdResult:
    """Thin SVD, signs fixed so the largest-magnitude entry of each U column is positive."""
    A = as_matrix(A, "A")
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    V = Vt.T
    pivot = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivot, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return SvdResult(U * signs, S, V * signs)


def pca_fit(X, k: int | None = None, energy: float | None = None) -> PcaBasis:
    """Fit a PCA basis.

    Exactly one of ``k`` (number of components) or ``energy`` (fraction of
    total variance to retain; the smallest k reaching it is kept) should be
    given. With neither, all components are kept.
    """
    X = as_matrix(X)
    n, m = X.shape
    if k is not None and energy is not None:
        raise ValueError("pass either k or energy, not both")
    Xc, mean = center(X)
    res = svd(Xc)
    var = res.S**2 / max(n - 1, 1)
    # pad so the basis can span all m dims even when n < m
    if res.V.shape[1] < m:
        extra = m - res.V.shape[1]
        V = _complete_basis(res.V)
        var = np.concatenate([var, np.zeros(extra)])
    else:
        V = res.V
    if energy is not None:
        if not 0.0 < energy <= 1.0:
            raise ValueError(f"energy must be in (0, 1], got {energy}")
        total = var.sum()
        if total <= 0.0:
            k = 1
        else:
            cum = np.cumsum(var) / total
            k = int(np.searchsorted(cum, energy - 1e-12) + 1)
            k = min(k, m)
    if k is None:
        k = m
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    return PcaBasis(mean, np.ascontiguousarray(V[:, :k]), var[:k].copy())


def _complete_basis(V: np.ndarray) -> np.ndarray:
    m, r = V.shape
    Q, _ = np.linalg.qr(np.hstack([V, np.eye(m)]))
    Q = Q[:, :m]
    # keep the original columns exactly; QR may flip their signs
    Q[:, :r] = V
    return Q


def pca_apply(basis: PcaBasis, X) -> np.ndarray:
    X = as_matrix(X)
    if X.shape[1] != basis.input_dim:
        raise ValueError(f"expected {basis.input_dim} columns, got {X.shape[1]}")
    return (X - basis.mean) @ basis.components


def ridge_projection(F, Y, lam: float = 0.1) -> np.ndarray:
    """Closed-form ridge map ``P`` (q x d) with ``P @ f ~ y`` for sample rows.

    ``P = Y.T @ F @ inv(F.T @ F + lam * I)``, the sample-rows form of the
    anchored-regression projection ``D_h (D_l^T D_l + lam I)^-1 D_l^T``.
    Cholesky is tried first; an SVD pseudo-inverse is the fallback.
    """
    F = as_matrix(F, "F")
    Y = as_matrix(Y, "Y")
    if F.shape[0] != Y.shape[0]:
        raise ValueError(f"F and Y row counts differ ({F.shape[0]} vs {Y.shape[0]})")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    d = F.shape[1]
    G = F.T @ F
    if lam > 0:
        G[np.diag_indices(d)] += lam
    rhs = F.T @ Y  # (d, q)
    try:
        L = np.linalg.cholesky(G)
        Z = np.linalg.solve(L, rhs)
        W = np.linalg.solve(L.T, Z)
    except np.linalg.LinAlgError:
        if lam == 0:
            raise np.linalg.LinAlgError("singular Gram matrix with lambda = 0") from None
        W = np.linalg.pinv(G, hermitian=True) @ rhs
    if lam == 0 and np.linalg.cond(G) > 1e14:
        raise np.linalg.LinAlgError("singular Gram matrix with lambda = 0")
    return np.ascontiguousarray(W.T)


def procrustes_rotation(B, X) -> np.ndarray:
    """Orthonormal ``R`` minimising ``||B - X @ R||_F``.

    With ``B.T @ X = S diag(w) Sh.T`` the optimum is ``R = Sh @ S.T``.
    """
    B = as_matrix(B, "B")
    X = as_matrix(X, "X")
    if B.shape != X.shape:
        raise ValueError(f"shape mismatch: B {B.shape} vs X {X.shape}")
    res = svd(B.T @ X)
    return res.V @ res.U.T


def orthonormality_residual(R: np.ndarray) -> float:
    """Frobenius norm of ``R.T @ R - I``."""
    return float(np.linalg.norm(R.T @ R - np.eye(R.shape[1])))
