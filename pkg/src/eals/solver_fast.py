"""Fast element-wise ALS using low-rank missing weights and Gram caches.

Missing-cell sums in each coordinate update are rewritten as a full-matrix
term, read from a Z x K x K cache, minus a correction over the observed
entries of the row. Per iteration this costs O((M+N) K^2 Z + |R| K Z)
instead of O(M N K).

Caches::

    Sq[t, f, k] = sum_i b_it q_ik q_if      (fixed while P is updated)
    Sp[t, f, k] = sum_u a_ut p_uk p_uf      (fixed while Q is updated)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import get_kernels
from .core import FactorModel, check_dims
from .errors import DataError
from .training import (DENOMINATOR_EPS, col_phase_args, prepare_model, raise_on_failure,
                       row_phase_args, run_loop)


@dataclass
class CacheTensor:
    values: np.ndarray
    kind: str  # "Sq" or "Sp"

    def __post_init__(self):
        if self.kind not in ("Sq", "Sp"):
            raise ValueError(f"unknown cache kind {self.kind!r}")

    @property
    def rank(self):
        return self.values.shape[0]


def build_sq(weights, model, threads=1, backend=None):
    """Item-side cache, built in O(N K^2 Z)."""
    return CacheTensor(get_kernels(backend).build_cache(model.Q, weights.B, threads), "Sq")


def build_sp(weights, model, threads=1, backend=None):
    """User-side cache, built in O(M K^2 Z)."""
    return CacheTensor(get_kernels(backend).build_cache(model.P, weights.A, threads), "Sp")


def _expect(cache, kind):
    if cache.kind != kind:
        raise ValueError(f"expected an {kind} cache, got {cache.kind}")


def _sweep_rows(data, weights, model, sq, rows, f_start, f_stop, lam, threads, backend):
    status = get_kernels(backend).sweep_fast(
        *row_phase_args(data, weights, model), sq.values, rows, f_start, f_stop,
        lam, DENOMINATOR_EPS, threads)
    raise_on_failure(status, "row")


def _sweep_cols(data, weights, model, sp, cols, f_start, f_stop, lam, threads, backend):
    status = get_kernels(backend).sweep_fast(
        *col_phase_args(data, weights, model), sp.values, cols, f_start, f_stop,
        lam, DENOMINATOR_EPS, threads)
    raise_on_failure(status, "col")


def update_p_row(data, weights, model, sq, u, lam, backend=None):
    """Update p_u1..p_uK in order; returns a copy of the new row."""
    _expect(sq, "Sq")
    _sweep_rows(data, weights, model, sq, np.array([u], dtype=np.intp), 0, model.K, lam, 1, backend)
    return model.P[u].copy()


def update_q_col(data, weights, model, sp, i, lam, backend=None):
    """Update q_i1..q_iK in order; returns a copy of the new row of Q."""
    _expect(sp, "Sp")
    _sweep_cols(data, weights, model, sp, np.array([i], dtype=np.intp), 0, model.K, lam, 1, backend)
    return model.Q[i].copy()


def update_p_element(data, weights, model, sq, u, f, lam, backend=None):
    """Single-coordinate version of :func:`update_p_row`."""
    _expect(sq, "Sq")
    _sweep_rows(data, weights, model, sq, np.array([u], dtype=np.intp), f, f + 1, lam, 1, backend)
    return float(model.P[u, f])


def update_q_element(data, weights, model, sp, i, f, lam, backend=None):
    _expect(sp, "Sp")
    _sweep_cols(data, weights, model, sp, np.array([i], dtype=np.intp), f, f + 1, lam, 1, backend)
    return float(model.Q[i, f])


def objective_fast(data, weights, model, cache, lam, threads=1, backend=None):
    """Weighted loss without visiting missing cells.

    The missing-cell loss is the full-matrix quadratic form read from the
    cache minus its value on observed cells. Either cache works as long as it
    is current: ``Sq`` is contracted with P and A, ``Sp`` with Q and B.
    """
    check_dims(data, model, weights)
    k = get_kernels(backend)
    if cache.kind == "Sq":
        full = k.missing_quadratic(model.P, weights.A, cache.values, threads)
    else:
        full = k.missing_quadratic(model.Q, weights.B, cache.values, threads)
    observed, overlap = k.observed_terms(weights.A, weights.B, data.rows, data.cols,
                                         data.values, data.weights, model.rhat)
    reg = lam * (float(np.sum(model.P * model.P)) + float(np.sum(model.Q * model.Q)))
    return observed + (full - overlap) + reg


def train_fast(data, weights, hp, init=None, threads=1, backend=None, lambda_guard=None,
               callback=None):
    """Fast element-wise ALS.

    Per iteration: build Sq, update every row of P, build Sp, update every row
    of Q, evaluate the objective. The Sq cache built for the objective is the
    one the next iteration starts from (Q and B have not changed in between).
    Rows within a phase are independent and are spread over ``threads``.
    """
    k = get_kernels(backend)
    model = prepare_model(data, weights, hp, init, lambda_guard)
    rows = np.arange(data.num_rows, dtype=np.intp)
    cols = np.arange(data.num_cols, dtype=np.intp)
    K = hp.K
    state = {"sq": build_sq(weights, model, threads, k)}

    def one_iteration():
        _sweep_rows(data, weights, model, state["sq"], rows, 0, K, hp.lam, threads, k)
        sp = build_sp(weights, model, threads, k)
        _sweep_cols(data, weights, model, sp, cols, 0, K, hp.lam, threads, k)
        state["sq"] = build_sq(weights, model, threads, k)
        return objective_fast(data, weights, model, state["sq"], hp.lam, threads, k)

    initial = objective_fast(data, weights, model, state["sq"], hp.lam, threads, k)
    return run_loop(hp, model, initial, one_iteration, callback)


def save_checkpoint(path, model):
    """Text checkpoint: ``M N K`` header, then M rows of P, then N rows of Q."""
    M, N = model.shape
    with open(path, "w") as fh:
        fh.write(f"{M} {N} {model.K}\n")
        for mat in (model.P, model.Q):
            for row in mat:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_checkpoint(path):
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty checkpoint")
    try:
        M, N, K = (int(x) for x in lines[0])
    except ValueError:
        raise DataError("checkpoint header must be 'M N K'", line=1) from None
    body = lines[1:]
    if len(body) != M + N or any(len(row) != K for row in body):
        raise DataError(f"{path}: expected {M + N} rows of {K} values")
    values = np.array(body, dtype=np.float64).reshape(M + N, K)
    return FactorModel(values[:M].copy(), values[M:].copy())
