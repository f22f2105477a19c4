"""Independent brute-force references used by the tests.

Nothing here imports the package's numerical code; everything is plain
loops so the checks stay independent of the paths they verify.
"""

import math

import numpy as np


def dot_loop(p, q):
    acc = 0.0
    for a, b in zip(p, q):
        acc += float(a) * float(b)
    return acc


def objective_loop(M, N, entries, A, B, P, Q, lam):
    """entries: dict (u, i) -> (r, c). Visits every cell."""
    K = len(P[0])
    total = 0.0
    for u in range(M):
        for i in range(N):
            pred = 0.0
            for k in range(K):
                pred += P[u][k] * Q[i][k]
            if (u, i) in entries:
                r, c = entries[(u, i)]
                total += c * (r - pred) ** 2
            else:
                w = 0.0
                for t in range(len(A[u])):
                    w += A[u][t] * B[i][t]
                total += w * pred * pred
    reg = 0.0
    for row in list(P) + list(Q):
        for x in row:
            reg += x * x
    return total + lam * reg


def cache_loop(F, W):
    """S[t][f][k] = sum_j W[j][t] F[j][k] F[j][f]."""
    n, K = len(F), len(F[0])
    Z = len(W[0])
    S = np.zeros((Z, K, K))
    for t in range(Z):
        for f in range(K):
            for k in range(K):
                acc = 0.0
                for j in range(n):
                    acc += W[j][t] * F[j][k] * F[j][f]
                S[t, f, k] = acc
    return S


def jacobi_singular_values(W, sweeps=100, tol=1e-15):
    """One-sided Jacobi SVD; returns singular values in descending order."""
    U = [list(map(float, col)) for col in np.asarray(W, dtype=float).T]
    n = len(U)
    for _ in range(sweeps):
        off = 0.0
        for j in range(n - 1):
            for k in range(j + 1, n):
                alpha = sum(x * x for x in U[j])
                beta = sum(x * x for x in U[k])
                gamma = sum(x * y for x, y in zip(U[j], U[k]))
                if alpha == 0 or beta == 0:
                    continue
                off = max(off, abs(gamma) / math.sqrt(alpha * beta))
                if gamma == 0:
                    continue
                zeta = (beta - alpha) / (2 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1 + zeta * zeta))
                c = 1 / math.sqrt(1 + t * t)
                s = c * t
                Uj, Uk = U[j], U[k]
                U[j] = [c * x - s * y for x, y in zip(Uj, Uk)]
                U[k] = [s * x + c * y for x, y in zip(Uj, Uk)]
        if off < tol:
            break
    return sorted((math.sqrt(sum(x * x for x in col)) for col in U), reverse=True)


def eckart_young_residual(W, Z):
    s = jacobi_singular_values(W)
    return math.sqrt(sum(x * x for x in s[Z:]))


def central_difference(fn, x0, h=1e-5):
    return (fn(x0 + h) - fn(x0 - h)) / (2 * h)


def topn_fullsort(scores, exclude, n):
    items = [i for i in range(len(scores)) if i not in exclude]
    items.sort(key=lambda i: (-scores[i], i))
    return items[:n]
