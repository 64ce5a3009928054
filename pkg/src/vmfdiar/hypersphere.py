"""
Vector geometry on the unit hypersphere.

Embeddings are handled as numpy arrays: a single vector has shape ``(d,)`` and
a set of vectors is a ``(n, d)`` array with one embedding per row.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadDimension, DimensionMismatch, InsufficientData, ZeroVector

ZERO_NORM = 1e-30
_SIGN_TOL = 1e-10


def _as_float_array(v, name="v"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise BadDimension(f"{name} must be a vector or a 2-D array of row vectors")
    if arr.shape[-1] < 1:
        raise BadDimension(f"{name} has zero dimension")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def length_normalize(v):
    """
    Scale embeddings to unit Euclidean norm.

    Parameters
    ----------
    v : array_like, shape (d,) or (n, d)
        One embedding or a stack of row embeddings.

    Returns
    -------
    ndarray
        Same shape as `v`, every row with norm 1.

    Raises
    ------
    ZeroVector
        If any row has norm below 1e-30.
    """
    arr = _as_float_array(v)
    norms = np.linalg.norm(arr, axis=-1, keepdims=True)
    if np.any(norms < ZERO_NORM):
        bad = np.flatnonzero(norms.ravel() < ZERO_NORM)
        raise ZeroVector(f"cannot normalize zero-norm embedding (row {int(bad[0])})")
    out = arr / norms
    # a second pass pulls ||out|| from ~1 +- 2 ulp down to the last bit
    out /= np.linalg.norm(out, axis=-1, keepdims=True)
    return out


def cosine_similarity(u, v):
    """Dot product of two unit vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} differ")
    return float(np.clip(np.dot(u, v), -1.0, 1.0))


@dataclass(frozen=True)
class PcaModel:
    """Mean and top-k principal axes of a set of embeddings.

    ``basis`` has shape ``(k, d_raw)``; its rows are orthonormal and ordered by
    descending ``eigenvalues``.
    """

    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray

    @property
    def input_dim(self):
        return self.mean.shape[0]

    @property
    def n_components(self):
        return self.basis.shape[0]

    def reconstruct(self, z):
        z = np.asarray(z, dtype=np.float64)
        return self.mean + z @ self.basis


def _fix_signs(vectors):
    # first entry that is clearly nonzero is made positive, row by row
    out = vectors.copy()
    for j, row in enumerate(out):
        idx = np.flatnonzero(np.abs(row) > _SIGN_TOL)
        if idx.size and row[idx[0]] < 0:
            out[j] = -row
    return out


def fit_pca(X, k):
    """
    Fit a k-component PCA by eigendecomposition of the sample covariance.

    Parameters
    ----------
    X : array_like, shape (n, d_raw)
    k : int
        Number of principal axes to keep, ``1 <= k <= d_raw``.

    Returns
    -------
    PcaModel
    """
    X = _as_float_array(X, "X")
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientData("PCA needs at least two embeddings")
    n, d = X.shape
    k = int(k)
    if k < 1 or k > d:
        raise BadDimension(f"k={k} must lie in [1, {d}]")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    evals = np.clip(evals[order], 0.0, None)
    basis = _fix_signs(evecs[:, order].T)
    return PcaModel(mean=mean, basis=basis, eigenvalues=evals)


def pca_project(model, v):
    """Project embeddings onto the model's principal axes (after centering)."""
    v = _as_float_array(v)
    if v.shape[-1] != model.input_dim:
        raise DimensionMismatch(
            f"embedding dimension {v.shape[-1]} != PCA input dimension {model.input_dim}"
        )
    return (v - model.mean) @ model.basis.T
