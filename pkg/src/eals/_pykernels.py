"""Pure numpy kernels; used when the compiled extension is unavailable.

All sweep functions share one orientation-neutral signature. For a P-phase
pass ``X=P, Y=Q, Wx=A, Wy=B`` with the row index; for a Q-phase pass
``X=Q, Y=P, Wx=B, Wy=A`` with the column index. ``other`` maps an entry id to
the index on the opposite side. ``nthreads`` is accepted and ignored.
"""

import numpy as np

NAME = "python"


def build_cache(F, W, nthreads=1):
    """S[t, f, k] = sum_j W[j, t] F[j, k] F[j, f]."""
    n, K = F.shape
    Z = W.shape[1]
    S = np.empty((Z, K, K))
    for t in range(Z):
        S[t] = (F * W[:, t:t + 1]).T @ F
        # exact symmetry regardless of BLAS accumulation
        upper = np.triu(S[t])
        S[t] = upper + np.triu(upper, 1).T
    return S


def sweep_fast(X, Y, Wx, Wy, ptr, ids, other, r, c, rhat, S, rows,
               f_start, f_stop, lam, eps, nthreads=1):
    """Cache-accelerated coordinate updates. Returns -1 or the failing row."""
    K = X.shape[1]
    for u in rows:
        es = ids[ptr[u]:ptr[u + 1]]
        opp = other[es]
        G = np.tensordot(Wx[u], S, axes=1)
        diag = G.diagonal().copy()
        np.fill_diagonal(G, 0.0)
        ab = Wy[opp] @ Wx[u]
        cr = c[es] * r[es]
        cw = c[es] - ab
        Yr = Y[opp]
        rh = rhat[es]
        x = X[u]
        for f in range(f_start, f_stop):
            y = Yr[:, f]
            rf = rh - x[f] * y
            num = np.dot(cr - cw * rf, y) - np.dot(x, G[:, f])
            den = np.dot(cw * y, y) + diag[f] + lam
            if not den >= eps:
                return int(u)
            x[f] = num / den
            rh = rf + x[f] * y
        rhat[es] = rh
    return -1


def sweep_vanilla(X, Y, Wx, Wy, ptr, ids, other, r, c, rhat, rows,
                  f_start, f_stop, lam, eps):
    """Coordinate updates visiting every cell of each row. Returns -1 or the failing row."""
    n_other = Y.shape[0]
    for u in rows:
        es = ids[ptr[u]:ptr[u + 1]]
        opp = other[es]
        w = Wy @ Wx[u]
        w[opp] = c[es]
        target = np.zeros(n_other)
        target[opp] = r[es]
        x = X[u]
        pred = Y @ x
        pred[opp] = rhat[es]
        for f in range(f_start, f_stop):
            y = Y[:, f]
            rf = pred - x[f] * y
            num = np.dot((target - rf) * w, y)
            den = np.dot(w * y, y) + lam
            if not den >= eps:
                return int(u)
            x[f] = num / den
            pred = rf + x[f] * y
        rhat[es] = pred[opp]
    return -1


def missing_quadratic(X, Wx, S, nthreads=1):
    """sum_u sum_k sum_f x_uk x_uf sum_t Wx[u, t] S[t, f, k]."""
    n, K = X.shape
    Z = S.shape[0]
    flat = S.reshape(Z, K * K)
    total = 0.0
    step = max(1, 262_144 // (K * K))
    for start in range(0, n, step):
        Xb = X[start:start + step]
        G = (Wx[start:start + step] @ flat).reshape(-1, K, K)
        total += float(np.einsum("uk,uf,ufk->", Xb, Xb, G))
    return total


def observed_terms(A, B, rows, cols, r, c, rhat):
    """(sum_e c_e (r_e - rhat_e)^2, sum_e (a_u . b_i) rhat_e^2) over observed entries."""
    ab = np.einsum("ez,ez->e", A[rows], B[cols])
    return float(np.dot(c, (r - rhat) ** 2)), float(np.dot(ab, rhat * rhat))
