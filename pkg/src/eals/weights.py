"""Low-rank models for the weights of missing entries.

A missing cell (u, i) carries weight ``a_u . b_i`` where ``a_u`` and ``b_i``
are rows of ``A`` (M x Z) and ``B`` (N x Z). Observed cells keep their own
weight ``c_ui`` stored on the data matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DataError, DimensionError

# exhaustive nonnegativity scans beyond this many cells are skipped
_SCAN_LIMIT = 100_000_000


@dataclass(frozen=True)
class MissingWeightModel:
    A: np.ndarray
    B: np.ndarray
    certified_nonnegative: bool = False
    exact_rank: int | None = None

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=np.float64)
        B = np.ascontiguousarray(self.B, dtype=np.float64)
        if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
            raise DimensionError("A and B must be 2-D with the same number of columns")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("weight factors must be finite")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def rank(self):
        return self.A.shape[1]

    Z = rank

    @property
    def shape(self):
        return (self.A.shape[0], self.B.shape[0])

    def weight(self, u, i):
        return float(np.dot(self.A[u], self.B[i]))

    def dense(self):
        """Full M x N matrix of missing-cell weights. Desk scale only."""
        return self.A @ self.B.T


def scan_nonnegative(A, B, tol=0.0):
    """True if every cell of ``A @ B.T`` is >= -tol.

    Nonnegative factors certify trivially; otherwise the product is scanned in
    row blocks. Products larger than the scan limit are reported uncertified.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if np.all(A >= 0) and np.all(B >= 0):
        return True
    M, N = A.shape[0], B.shape[0]
    if M * N > _SCAN_LIMIT:
        return False
    step = max(1, 1_000_000 // max(N, 1))
    for start in range(0, M, step):
        if np.any(A[start:start + step] @ B.T < -tol):
            return False
    return True


def uniform_missing(M, N, c0):
    """Every missing cell weighted ``c0``."""
    if not c0 >= 0:
        raise ValueError("c0 must be >= 0")
    return MissingWeightModel(np.full((M, 1), float(c0)), np.ones((N, 1)),
                              certified_nonnegative=True, exact_rank=1)


def item_frequencies(data):
    """f_i = |R_i| / sum_j |R_j|."""
    counts = data.col_counts().astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise DataError("no observed entries to compute item frequencies from")
    return counts / total


def popularity_missing(data, c0, alpha):
    """Item-popularity weights: w_ui = c0 * f_i^alpha / sum_j f_j^alpha.

    Items never seen in training have f_i = 0; with alpha > 0 their misses get
    weight 0, with alpha == 0 they get c0 / N like every other item.
    """
    if not c0 >= 0:
        raise ValueError("c0 must be >= 0")
    freq = item_frequencies(data)
    if alpha == 0:
        powered = np.ones_like(freq)
    else:
        zero = freq == 0
        if alpha < 0 and np.any(zero):
            raise ValueError("alpha < 0 is undefined for items with zero frequency")
        powered = np.zeros_like(freq)
        powered[~zero] = freq[~zero] ** alpha
    # correctly rounded, so b does not depend on item order
    b = powered / math.fsum(powered.tolist())
    return MissingWeightModel(np.full((data.num_rows, 1), float(c0)), b[:, None],
                              certified_nonnegative=True, exact_rank=1)


def user_oriented_missing(data, per_user_weight):
    """Row-specific weight on every missing cell of that row."""
    w = np.asarray(per_user_weight, dtype=np.float64).ravel()
    if len(w) != data.num_rows:
        raise DimensionError(f"expected {data.num_rows} user weights, got {len(w)}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("user weights must be finite and >= 0")
    return MissingWeightModel(w[:, None].copy(), np.ones((data.num_cols, 1)),
                              certified_nonnegative=True, exact_rank=1)


def activity_missing(data, c0):
    """User-oriented weights proportional to activity: c0 * |R_u| / |R|."""
    counts = data.row_counts().astype(np.float64)
    return user_oriented_missing(data, c0 * counts / counts.sum())


def truncated_svd(W, Z, tol=1e-12, max_iter=10_000, seed=0):
    """Rank-Z factorization of a dense weight matrix by power iteration.

    Singular triplets are extracted one at a time from the deflated matrix;
    each run iterates ``v <- R^T R v`` until the singular value estimate
    changes by at most ``tol`` (relative). Returns ``(model, residual)`` with
    ``A = U sqrt(S)``, ``B = V sqrt(S)`` and residual ``||W - A B^T||_F``.

    When the deflated matrix vanishes (residual <= 1e-10 ||W||_F) before Z
    components are found, the model is trimmed to the exact rank.
    """
    W = np.array(W, dtype=np.float64)
    if W.ndim != 2:
        raise DimensionError("W must be a 2-D matrix")
    M, N = W.shape
    Z = int(Z)
    if not 1 <= Z <= min(M, N):
        raise ValueError(f"Z must be in [1, {min(M, N)}]")
    norm = float(np.linalg.norm(W))
    floor = 1e-10 * norm
    rng = np.random.default_rng(seed)
    R = W.copy()
    us, vs, sigmas = [], [], []
    exact = None
    for j in range(Z):
        if np.linalg.norm(R) <= floor:
            exact = j
            break
        v = rng.standard_normal(N)
        for w in vs:
            v -= np.dot(w, v) * w
        v /= np.linalg.norm(v)
        sigma_old = -1.0
        for _ in range(max_iter):
            x = R @ v
            sigma = float(np.linalg.norm(x))
            if sigma == 0.0:
                break
            if abs(sigma - sigma_old) <= tol * sigma:
                break
            sigma_old = sigma
            v = R.T @ x
            for w in vs:
                v -= np.dot(w, v) * w
            v /= np.linalg.norm(v)
        else:
            residual = float(np.linalg.norm(R))
            raise ConvergenceError(f"power iteration for component {j} did not converge", residual)
        if sigma == 0.0:
            exact = j
            break
        u = x / sigma
        us.append(u)
        vs.append(v)
        sigmas.append(sigma)
        R -= sigma * np.outer(u, v)

    if not sigmas:
        A, B = np.zeros((M, 1)), np.zeros((N, 1))
    else:
        root = np.sqrt(np.array(sigmas))
        A = np.column_stack(us) * root
        B = np.column_stack(vs) * root
    residual = float(np.linalg.norm(W - A @ B.T))
    if exact is None and residual <= floor:
        exact = len(sigmas)
    scale = float(np.max(np.abs(W))) if W.size else 0.0
    model = MissingWeightModel(A, B, scan_nonnegative(A, B, tol=1e-12 * scale), exact)
    return model, residual


def save_weights(path, model):
    """Text format: ``Z M N`` header, then M rows of A, then N rows of B."""
    M, N = model.shape
    with open(path, "w") as fh:
        fh.write(f"{model.rank} {M} {N}\n")
        for row in model.A:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        for row in model.B:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_weights(path):
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln and not ln.startswith("#")]
    if not lines:
        raise DataError(f"{path}: empty weights file")
    try:
        Z, M, N = (int(x) for x in lines[0].split())
    except ValueError:
        raise DataError("header must be 'Z M N'", line=1) from None
    if len(lines) != 1 + M + N:
        raise DataError(f"{path}: expected {M + N} factor rows, found {len(lines) - 1}")
    try:
        rows = np.array([[float(x) for x in ln.split()] for ln in lines[1:]], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if rows.ndim != 2 or rows.shape[1] != Z:
        raise DataError(f"{path}: every factor row must have {Z} values")
    A, B = rows[:M], rows[M:]
    return MissingWeightModel(A, B, scan_nonnegative(A, B))


def frobenius_optimum(singular_values, Z):
    """Eckart-Young residual for keeping the top Z singular values."""
    s = np.sort(np.asarray(singular_values, dtype=np.float64))[::-1]
    return math.sqrt(float(np.sum(s[Z:] ** 2)))
