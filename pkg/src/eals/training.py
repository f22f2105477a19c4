"""Pieces shared by the vanilla and fast training loops."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .core import FactorModel, check_dims, init_model, relative_change, rhat_rebuild
from .errors import DimensionError, SingularUpdateError, UncertifiedWeightsError

log = logging.getLogger(__name__)

# smallest admissible update denominator
DENOMINATOR_EPS = 1e-12


@dataclass
class TrainResult:
    model: FactorModel
    trace: list = field(default_factory=list)
    initial_objective: float = float("nan")
    seconds: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self):
        return len(self.trace)

    @property
    def objective(self):
        return self.trace[-1] if self.trace else self.initial_objective


def check_weights(weights, lam, lambda_guard):
    if weights.certified_nonnegative:
        return
    if lambda_guard is None or lam < lambda_guard:
        raise UncertifiedWeightsError(
            "weight model is not certified nonnegative; pass lambda_guard <= lambda to train anyway"
        )


def prepare_model(data, weights, hp, init=None, lambda_guard=None):
    """Validate inputs and return a fresh model with a consistent cache."""
    check_dims(data, weights=weights)
    if hp.Z is not None and hp.Z != weights.rank:
        raise DimensionError(f"hyperparameter Z={hp.Z} but weight model has rank {weights.rank}")
    check_weights(weights, hp.lam, lambda_guard)
    if init is None:
        return init_model(data, hp.K, seed=hp.seed, stddev=hp.init_stddev)
    if isinstance(init, FactorModel):
        P, Q = init.P, init.Q
    else:
        P, Q = init
    model = FactorModel(np.array(P, dtype=np.float64), np.array(Q, dtype=np.float64))
    check_dims(data, model)
    if model.K != hp.K:
        raise DimensionError(f"initial factors have K={model.K}, expected {hp.K}")
    return rhat_rebuild(data, model)


def row_phase_args(data, weights, model):
    """Positional kernel arguments for a pass over rows (updating P)."""
    return (model.P, model.Q, weights.A, weights.B, data.row_ptr, data.row_ids, data.cols,
            data.values, data.weights, model.rhat)


def col_phase_args(data, weights, model):
    """Positional kernel arguments for a pass over columns (updating Q)."""
    return (model.Q, model.P, weights.B, weights.A, data.col_ptr, data.col_ids, data.rows,
            data.values, data.weights, model.rhat)


def raise_on_failure(status, side):
    if status >= 0:
        raise SingularUpdateError(side, int(status))


def run_loop(hp, model, initial_objective, one_iteration, callback=None):
    """Iterate until ``max_iters`` or the relative objective change drops below ``rel_tol``."""
    result = TrainResult(model=model, initial_objective=initial_objective)
    prev = initial_objective
    for it in range(hp.max_iters):
        start = time.perf_counter()
        obj = one_iteration()
        elapsed = time.perf_counter() - start
        result.trace.append(obj)
        result.seconds.append(elapsed)
        log.debug("iter %d objective %.10g (%.3fs)", it + 1, obj, elapsed)
        if callback is not None:
            callback(it + 1, obj, elapsed)
        if relative_change(prev, obj) < hp.rel_tol:
            result.converged = True
            break
        prev = obj
    return result
