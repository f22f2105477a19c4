"""Sparse rating data, factor model, prediction and the reference objective."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError


def _group_index(keys, n_groups):
    """Return (ptr, ids): entry ids grouped by key, stable within a group."""
    order = np.argsort(keys, kind="stable").astype(np.intp)
    counts = np.bincount(keys, minlength=n_groups)
    ptr = np.zeros(n_groups + 1, dtype=np.intp)
    np.cumsum(counts, out=ptr[1:])
    return ptr, order


class SparseRatingMatrix:
    """Observed entries of an M x N matrix with row- and column-major id lists.

    Entries are stored as parallel arrays (``rows``, ``cols``, ``values``,
    ``weights``) keyed by entry id. ``row_ptr``/``row_ids`` list the entry ids
    of each row, ``col_ptr``/``col_ids`` those of each column, CSR/CSC style.
    Instances are treated as immutable; the arrays are flagged read-only.
    """

    def __init__(self, num_rows, num_cols, rows, cols, values, weights=None):
        rows = np.asarray(rows, dtype=np.intp).ravel()
        cols = np.asarray(cols, dtype=np.intp).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        if weights is None:
            weights = np.ones(len(values))
        weights = np.asarray(weights, dtype=np.float64).ravel()
        num_rows, num_cols = int(num_rows), int(num_cols)
        if num_rows < 0 or num_cols < 0:
            raise DimensionError("matrix dimensions must be non-negative")
        if not (len(rows) == len(cols) == len(values) == len(weights)):
            raise DimensionError("entry arrays must have equal length")
        if len(rows):
            if rows.min() < 0 or rows.max() >= num_rows:
                raise DataError("row index out of range")
            if cols.min() < 0 or cols.max() >= num_cols:
                raise DataError("column index out of range")
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite rating value")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise DataError("observed weights must be finite and >= 0")
        flat = rows.astype(np.int64) * num_cols + cols
        uniq, counts = np.unique(flat, return_counts=True)
        if np.any(counts > 1):
            k = uniq[np.argmax(counts > 1)]
            raise DataError(f"duplicate entry ({k // num_cols}, {k % num_cols})")

        self.num_rows = num_rows
        self.num_cols = num_cols
        self.rows = rows
        self.cols = cols
        self.values = values
        self.weights = weights
        self.row_ptr, self.row_ids = _group_index(rows, num_rows)
        self.col_ptr, self.col_ids = _group_index(cols, num_cols)
        for arr in (self.rows, self.cols, self.values, self.weights,
                    self.row_ptr, self.row_ids, self.col_ptr, self.col_ids):
            arr.setflags(write=False)

    @property
    def shape(self):
        return (self.num_rows, self.num_cols)

    @property
    def nnz(self):
        return len(self.values)

    def __len__(self):
        return self.nnz

    def __repr__(self):
        return f"SparseRatingMatrix(shape={self.shape}, nnz={self.nnz})"

    def row_entries(self, u):
        """Entry ids in row ``u`` (the set R_u)."""
        return self.row_ids[self.row_ptr[u]:self.row_ptr[u + 1]]

    def col_entries(self, i):
        """Entry ids in column ``i`` (the set R_i)."""
        return self.col_ids[self.col_ptr[i]:self.col_ptr[i + 1]]

    def row_counts(self):
        return np.diff(self.row_ptr)

    def col_counts(self):
        return np.diff(self.col_ptr)

    def to_dense(self):
        """Dense values with zeros for missing cells. Desk scale only."""
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = self.values
        return out

    def observed_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[self.rows, self.cols] = True
        return mask


@dataclass
class Hyperparams:
    """Training settings shared by both solvers.

    ``Z`` is optional; when given it must equal the weight model's rank.
    ``rel_tol = 0`` disables the early stop.
    """

    K: int = 8
    Z: int | None = None
    lam: float = 0.01
    max_iters: int = 100
    rel_tol: float = 1e-6
    seed: int = 0
    init_stddev: float = 0.01

    def __post_init__(self):
        if int(self.K) < 1:
            raise ValueError("K must be >= 1")
        if self.Z is not None and int(self.Z) < 1:
            raise ValueError("Z must be >= 1")
        if not self.lam >= 0:
            raise ValueError("lambda must be >= 0")
        if int(self.max_iters) < 0:
            raise ValueError("max_iters must be >= 0")
        if not self.rel_tol >= 0:
            raise ValueError("rel_tol must be >= 0")
        if not self.init_stddev > 0:
            raise ValueError("init_stddev must be > 0")


@dataclass
class FactorModel:
    """Latent factors P (M x K), Q (N x K) and the per-entry prediction cache."""

    P: np.ndarray
    Q: np.ndarray
    rhat: np.ndarray = field(default=None)

    def __post_init__(self):
        self.P = np.ascontiguousarray(self.P, dtype=np.float64)
        self.Q = np.ascontiguousarray(self.Q, dtype=np.float64)
        if self.P.ndim != 2 or self.Q.ndim != 2 or self.P.shape[1] != self.Q.shape[1]:
            raise DimensionError("P and Q must be 2-D with the same number of columns")
        if self.rhat is not None:
            self.rhat = np.ascontiguousarray(self.rhat, dtype=np.float64)

    @property
    def K(self):
        return self.P.shape[1]

    @property
    def shape(self):
        return (self.P.shape[0], self.Q.shape[0])

    def copy(self):
        return FactorModel(self.P.copy(), self.Q.copy(),
                           None if self.rhat is None else self.rhat.copy())


def init_model(data, K, seed=0, stddev=0.01):
    """Gaussian(0, stddev) factors with a freshly built prediction cache."""
    rng = np.random.default_rng(seed)
    P = rng.normal(0.0, stddev, size=(data.num_rows, K))
    Q = rng.normal(0.0, stddev, size=(data.num_cols, K))
    model = FactorModel(P, Q)
    rhat_rebuild(data, model)
    return model


def check_dims(data, model=None, weights=None):
    M, N = data.shape
    if model is not None and model.shape != (M, N):
        raise DimensionError(f"model shape {model.shape} does not match data {(M, N)}")
    if weights is not None and weights.shape != (M, N):
        raise DimensionError(f"weight model shape {weights.shape} does not match data {(M, N)}")


def predict(model, u, i):
    """Inner product of row factor ``u`` and column factor ``i``."""
    M, N = model.shape
    if not (0 <= u < M):
        raise IndexError(f"row {u} out of range [0, {M})")
    if not (0 <= i < N):
        raise IndexError(f"column {i} out of range [0, {N})")
    return float(np.dot(model.P[u], model.Q[i]))


def rhat_rebuild(data, model):
    """Recompute the prediction cache for every observed entry, in place."""
    check_dims(data, model)
    if data.nnz == 0:
        if model.rhat is None:
            model.rhat = np.zeros(0)
        return model
    model.rhat = np.einsum("ek,ek->e", model.P[data.rows], model.Q[data.cols])
    return model


def rhat_drift(data, model):
    """Largest relative gap between the cache and fresh predictions."""
    if data.nnz == 0:
        return 0.0
    fresh = np.einsum("ek,ek->e", model.P[data.rows], model.Q[data.cols])
    return float(np.max(np.abs(model.rhat - fresh) / (1.0 + np.abs(model.rhat))))


def objective_direct(data, weights, model, lam):
    """Weighted squared loss over all M x N cells plus L2 penalty.

    Missing cells have target 0 and weight ``a_u . b_i``; observed cells use
    their own weight. This visits every cell and is meant as a reference at
    desk scale (cost O(M N (K + Z))).
    """
    check_dims(data, model, weights)
    P, Q = model.P, model.Q
    total = 0.0
    for u in range(data.num_rows):
        pred = Q @ P[u]
        w = weights.B @ weights.A[u]
        target = np.zeros(data.num_cols)
        es = data.row_entries(u)
        cols = data.cols[es]
        w[cols] = data.weights[es]
        target[cols] = data.values[es]
        total += float(np.dot(w, (target - pred) ** 2))
    reg = lam * (float(np.sum(P * P)) + float(np.sum(Q * Q)))
    return total + reg


def relative_change(prev, cur):
    return abs(prev - cur) / max(abs(prev), math.ulp(0.0))
