"""Weighted matrix factorization with element-wise ALS.

Missing entries carry weights from a low-rank model ``a_u . b_i``; the fast
solver's per-iteration cost depends on the observed entries only. Hot loops
live in a compiled extension with a numpy fallback (see ``BACKEND``).
"""

from ._backend import default as _default_kernels
from .core import (FactorModel, Hyperparams, SparseRatingMatrix, init_model, objective_direct,
                   predict, rhat_rebuild)
from .errors import (ConvergenceError, DataError, DimensionError, EALSError, SingularUpdateError,
                     UncertifiedWeightsError)
from .evaluation import (EvalSplit, evaluate, hr_at_n, leave_one_out, mae_between, ndcg_at_n,
                         rank_topn)
from .solver_fast import (CacheTensor, build_sp, build_sq, load_checkpoint, objective_fast,
                          save_checkpoint, train_fast, update_p_row, update_q_col)
from .solver_vanilla import train_vanilla, update_p_element_direct, update_q_element_direct
from .weights import (MissingWeightModel, popularity_missing, truncated_svd, uniform_missing,
                      user_oriented_missing)

BACKEND = _default_kernels.NAME

__all__ = [
    "BACKEND", "CacheTensor", "ConvergenceError", "DataError", "DimensionError", "EALSError",
    "EvalSplit", "FactorModel", "Hyperparams", "MissingWeightModel", "SingularUpdateError",
    "SparseRatingMatrix", "UncertifiedWeightsError", "build_sp", "build_sq", "evaluate",
    "hr_at_n", "init_model", "leave_one_out", "load_checkpoint", "mae_between", "ndcg_at_n",
    "objective_direct", "objective_fast", "popularity_missing", "predict", "rank_topn",
    "rhat_rebuild", "save_checkpoint", "train_fast", "train_vanilla", "truncated_svd",
    "uniform_missing", "update_p_element_direct", "update_p_row", "update_q_col",
    "update_q_element_direct", "user_oriented_missing",
]
