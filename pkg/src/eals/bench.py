"""Per-iteration timing of the solvers and scaling fits over (K, Z) grids."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np

from .core import Hyperparams, SparseRatingMatrix
from .solver_fast import train_fast
from .solver_vanilla import train_vanilla
from .weights import MissingWeightModel


def synthetic_matrix(M, N, density, seed=0):
    """Uniformly placed distinct cells with integer ratings 1..5."""
    rng = np.random.default_rng(seed)
    nnz = max(1, int(round(density * M * N)))
    flat = rng.choice(M * N, size=nnz, replace=False)
    values = rng.integers(1, 6, size=nnz).astype(np.float64)
    return SparseRatingMatrix(M, N, flat // N, flat % N, values)


def random_weights(M, N, Z, seed=0, scale=1.0):
    """Nonnegative rank-Z weights with mean cell weight about ``scale / N``."""
    rng = np.random.default_rng(seed)
    A = rng.random((M, Z)) * 2.0
    B = rng.random((N, Z)) * (2.0 * scale / (N * Z))
    return MissingWeightModel(A, B, certified_nonnegative=True)


@dataclass
class BenchCell:
    solver: str
    K: int
    Z: int
    seconds: list

    @property
    def mean(self):
        return statistics.fmean(self.seconds)

    @property
    def median(self):
        return statistics.median(self.seconds)


def run_grid(data, grid_k, grid_z, solvers=("fast",), iters=3, repeats=3, threads=1,
             backend=None, seed=0, lam=0.01):
    """Time every (solver, K, Z) cell.

    Cells are visited round-robin ``repeats`` times so slow drifts in machine
    load spread evenly; each visit trains ``iters`` iterations from the same
    seeded start. Vanilla cost does not depend on Z, so it is timed at the
    smallest Z only.
    """
    M, N = data.shape
    weights = {Z: random_weights(M, N, Z, seed=seed + Z) for Z in grid_z}
    cells = {}
    for solver in solvers:
        zs = grid_z if solver == "fast" else grid_z[:1]
        for K in grid_k:
            for Z in zs:
                cells[(solver, K, Z)] = BenchCell(solver, K, Z, [])
    for _ in range(repeats):
        for (solver, K, Z), cell in cells.items():
            hp = Hyperparams(K=K, lam=lam, max_iters=iters, rel_tol=0.0, seed=seed)
            if solver == "fast":
                res = train_fast(data, weights[Z], hp, threads=threads, backend=backend)
            else:
                res = train_vanilla(data, weights[Z], hp, backend=backend)
            cell.seconds.extend(res.seconds)
    return list(cells.values())


def scaling_report(cells, data):
    """Timing ratios along Z and K and a least-squares fit of the cost model.

    The fit is ``t = c1 (M+N) K^2 Z + c2 |R| K Z`` over the fast cells.
    """
    M, N = data.shape
    fast = {(c.K, c.Z): c.mean for c in cells if c.solver == "fast"}
    vanilla = {c.K: c.mean for c in cells if c.solver == "vanilla"}
    report = {"z_ratios": {}, "k_ratios": {}, "speedup": {}}
    ks = sorted({k for k, _ in fast})
    zs = sorted({z for _, z in fast})
    for K in ks:
        for z0, z1 in zip(zs, zs[1:]):
            if (K, z0) in fast and (K, z1) in fast:
                report["z_ratios"][(K, z0, z1)] = fast[(K, z1)] / fast[(K, z0)]
        if K in vanilla and (K, zs[0]) in fast:
            report["speedup"][(K, zs[0])] = vanilla[K] / fast[(K, zs[0])]
    for Z in zs:
        for k0, k1 in zip(ks, ks[1:]):
            if (k0, Z) in fast and (k1, Z) in fast:
                report["k_ratios"][(Z, k0, k1)] = fast[(k1, Z)] / fast[(k0, Z)]
    if len(fast) >= 2:
        X = np.array([[(M + N) * K * K * Z, data.nnz * K * Z] for K, Z in fast])
        y = np.array(list(fast.values()))
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        pred = X @ coef
        ss_res = float(np.sum((y - pred) ** 2))
        ss_tot = float(np.sum((y - y.mean()) ** 2)) or 1.0
        report["fit"] = {"c1": float(coef[0]), "c2": float(coef[1]), "r2": 1.0 - ss_res / ss_tot}
    return report


def format_table(cells):
    lines = ["solver,K,Z,mean_seconds,median_seconds,samples"]
    for c in cells:
        lines.append(f"{c.solver},{c.K},{c.Z},{c.mean:.6g},{c.median:.6g},{len(c.seconds)}")
    return "\n".join(lines) + "\n"


def format_report(report):
    lines = []
    for (K, z0, z1), ratio in report["z_ratios"].items():
        lines.append(f"z_ratio K={K} t(Z={z1})/t(Z={z0})={ratio:.3f}")
    for (Z, k0, k1), ratio in report["k_ratios"].items():
        lines.append(f"k_ratio Z={Z} t(K={k1})/t(K={k0})={ratio:.3f}")
    for (K, Z), ratio in report["speedup"].items():
        lines.append(f"speedup K={K} Z={Z} vanilla/fast={ratio:.1f}")
    if "fit" in report:
        f = report["fit"]
        lines.append(f"fit c1={f['c1']:.4g} c2={f['c2']:.4g} r2={f['r2']:.3f}")
    return "\n".join(lines) + "\n"
