"""Element-wise ALS over every cell of the matrix.

This is the O(MNK)-per-iteration reference: each coordinate is set to its
closed-form minimizer using sums over all N columns (or M rows), with the
missing cells' predictions recomputed on the fly. The fast solver must
reproduce its iterates.
"""

from __future__ import annotations

import numpy as np

from ._backend import get_kernels
from .core import check_dims, objective_direct
from .errors import SingularUpdateError
from .training import (DENOMINATOR_EPS, col_phase_args, prepare_model, raise_on_failure,
                       row_phase_args, run_loop)


def _element_update(X, Y, Wx, Wy, entries, other, r, c, rhat, u, f, lam, side):
    n_other = Y.shape[0]
    w = Wy @ Wx[u]
    target = np.zeros(n_other)
    pred = Y @ X[u]
    opp = other[entries]
    w[opp] = c[entries]
    target[opp] = r[entries]
    pred[opp] = rhat[entries]

    y = Y[:, f]
    rf = pred - X[u, f] * y
    num = float(np.sum((target - rf) * w * y))
    den = float(np.sum(w * y * y)) + lam
    if not den >= DENOMINATOR_EPS:
        raise SingularUpdateError(side, u, den)
    X[u, f] = num / den
    rhat[entries] = rf[opp] + X[u, f] * y[opp]
    return X[u, f]


def update_p_element_direct(data, weights, model, u, f, lam):
    """Set p_uf to its exact minimizer given everything else; returns the new value."""
    check_dims(data, model, weights)
    return float(_element_update(model.P, model.Q, weights.A, weights.B, data.row_entries(u),
                                 data.cols, data.values, data.weights, model.rhat, u, f, lam, "row"))


def update_q_element_direct(data, weights, model, i, f, lam):
    """Column counterpart of :func:`update_p_element_direct`."""
    check_dims(data, model, weights)
    return float(_element_update(model.Q, model.P, weights.B, weights.A, data.col_entries(i),
                                 data.rows, data.values, data.weights, model.rhat, i, f, lam, "col"))


def train_vanilla(data, weights, hp, init=None, backend=None, lambda_guard=None, callback=None):
    """Run full-matrix element-wise ALS.

    Each iteration updates all of P (rows in order, factors in order), then
    all of Q, and records the full-matrix objective.
    """
    k = get_kernels(backend)
    model = prepare_model(data, weights, hp, init, lambda_guard)
    rows = np.arange(data.num_rows, dtype=np.intp)
    cols = np.arange(data.num_cols, dtype=np.intp)
    K = hp.K

    def one_iteration():
        status = k.sweep_vanilla(*row_phase_args(data, weights, model), rows, 0, K,
                                 hp.lam, DENOMINATOR_EPS)
        raise_on_failure(status, "row")
        status = k.sweep_vanilla(*col_phase_args(data, weights, model), cols, 0, K,
                                 hp.lam, DENOMINATOR_EPS)
        raise_on_failure(status, "col")
        return objective_direct(data, weights, model, hp.lam)

    initial = objective_direct(data, weights, model, hp.lam)
    return run_loop(hp, model, initial, one_iteration, callback)
