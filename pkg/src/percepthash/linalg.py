"""Numerical kernels: orthonormal 2-D DCT-II, PCA, truncated SVD, median.

Eigen- and singular-vectors are returned under a fixed sign convention
(largest-magnitude entry positive, lowest index wins ties) so that anything
derived from them is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# relative gap below which two eigen/singular values are treated as tied
TIE_RTOL = 1e-12


class NumericalError(ArithmeticError):
    """A decomposition failed to converge or produced an inaccurate result."""


@lru_cache(maxsize=32)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis; row k holds frequency k."""
    if n < 1:
        raise ValueError("DCT size must be positive")
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    mat = np.cos(np.pi * (2 * x + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    mat[0, :] = np.sqrt(1.0 / n)
    mat.setflags(write=False)
    return mat


def dct2(block) -> np.ndarray:
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or min(block.shape) < 1:
        raise ValueError(f"dct2 expects a non-empty 2-D array, got shape {block.shape}")
    rows, cols = block.shape
    return dct_matrix(rows) @ block @ dct_matrix(cols).T


def idct2(coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    rows, cols = coeffs.shape
    return dct_matrix(rows).T @ coeffs @ dct_matrix(cols)


def normalize_sign(vec: np.ndarray) -> np.ndarray:
    """Flip ``vec`` so its largest-magnitude entry is positive."""
    idx = int(np.argmax(np.abs(vec)))
    return -vec if vec[idx] < 0 else vec


def _order_ties(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Column order that keeps ``values`` descending and sorts tied groups lexicographically."""
    n = len(values)
    order = list(range(n))
    scale = max(1.0, float(np.max(np.abs(values)))) if n else 1.0
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and values[start] - values[stop] <= TIE_RTOL * scale:
            stop += 1
        if stop - start > 1:
            group = order[start:stop]
            group.sort(key=lambda c: tuple(np.round(vectors[:, c], 12)))
            order[start:stop] = group
        start = stop
    return np.array(order, dtype=int)


def symmetric_eig(mat) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and sign-normalized eigenvectors (columns) of a symmetric matrix."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("symmetric_eig expects a square matrix")
    try:
        values, vectors = np.linalg.eigh((mat + mat.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    desc = np.argsort(-values, kind="stable")
    values = values[desc]
    vectors = np.column_stack([normalize_sign(vectors[:, i]) for i in desc])
    order = _order_ties(values, vectors)
    return values[order], vectors[:, order]


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray          # f x k, orthonormal columns
    projected: np.ndarray           # n x k
    explained_variance: np.ndarray  # k, descending
    mean: np.ndarray                # f, column means that were removed


def pca_project(data, k: int) -> PcaResult:
    """Project column-centred ``data`` (samples x features) onto its top-k principal axes.

    Uses the unbiased sample covariance.  Data with no variance at all gets
    the first k standard basis vectors and zero explained variance.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("pca_project expects a 2-D samples x features matrix")
    n, f = data.shape
    if not 1 <= k <= f:
        raise ValueError(f"k must be in [1, {f}], got {k}")
    if n < 2:
        raise ValueError("pca_project needs at least two samples")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite values")
    mean = data.mean(axis=0)
    centred = data - mean
    # constant columns centre to exactly zero (the float mean can be off by an ulp)
    centred[:, np.ptp(data, axis=0) == 0] = 0.0
    if not np.any(centred):
        components = np.eye(f)[:, :k]
        return PcaResult(components, np.zeros((n, k)), np.zeros(k), mean)
    cov = centred.T @ centred / (n - 1)
    values, vectors = symmetric_eig(cov)
    components = vectors[:, :k]
    explained = np.clip(values[:k], 0.0, None)
    return PcaResult(components, centred @ components, explained, mean)


@dataclass(frozen=True)
class SvdResult:
    singular_values: np.ndarray  # k, non-increasing
    left_vectors: np.ndarray     # rows x k
    right_vectors: np.ndarray    # cols x k

    @property
    def u1(self) -> np.ndarray:
        return self.left_vectors[:, 0]

    @property
    def v1(self) -> np.ndarray:
        return self.right_vectors[:, 0]

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def svd_truncated(mat, k: int, residual_tol: float = 1e-8) -> SvdResult:
    """Top-k singular triplets, each with the left vector sign-normalized.

    The right vector is flipped together with the left one so every
    ``sigma * u v^T`` term is unchanged.  Triplets are checked through
    ``||A v - sigma u||``; failures raise :class:`NumericalError`.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or min(mat.shape) < 1:
        raise ValueError("svd_truncated expects a non-empty 2-D matrix")
    if not 1 <= k <= min(mat.shape):
        raise ValueError(f"k must be in [1, {min(mat.shape)}], got {k}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix contains non-finite values")
    try:
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD did not converge for {mat.shape} matrix "
            f"(Frobenius norm {np.linalg.norm(mat):.6g}): {exc}") from exc
    v = vt.T
    for i in range(len(s)):
        if u[int(np.argmax(np.abs(u[:, i]))), i] < 0:
            u[:, i] = -u[:, i]
            v[:, i] = -v[:, i]
    order = _order_ties(s, u)
    s, u, v = s[order][:k], u[:, order][:, :k], v[:, order][:, :k]
    scale = max(1.0, float(s[0])) if len(s) else 1.0
    residual = np.linalg.norm(mat @ v - u * s, axis=0)
    worst = float(residual.max())
    if worst > residual_tol * scale * max(mat.shape):
        raise NumericalError(f"SVD residual {worst:.3g} exceeds tolerance for {mat.shape} matrix")
    return SvdResult(s, u, v)


def median_of(values) -> float:
    """Median of K+1 values as the mean of sorted entries K//2 and (K+1)//2."""
    vals = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if vals.size == 0:
        raise ValueError("median_of requires at least one value")
    k = vals.size - 1
    return float((vals[k // 2] + vals[(k + 1) // 2]) / 2.0)
