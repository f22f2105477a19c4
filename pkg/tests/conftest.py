import numpy as np
import pytest

from eals._backend import BACKENDS
from eals.core import SparseRatingMatrix
from eals.weights import MissingWeightModel

ACCEPTANCE_LINES = []


def random_instance(M, N, density, Z, seed, weight_scale=1.0, observed_weights=False):
    """Random data with at least one entry and a nonnegative rank-Z weight model."""
    rng = np.random.default_rng(seed)
    mask = rng.random((M, N)) < density
    if not mask.any():
        mask[0, 0] = True
    rows, cols = np.nonzero(mask)
    values = rng.integers(1, 6, size=len(rows)).astype(float)
    c = rng.uniform(0.5, 2.0, size=len(rows)) if observed_weights else None
    data = SparseRatingMatrix(M, N, rows, cols, values, c)
    A = rng.random((M, Z))
    B = rng.random((N, Z)) * weight_scale
    return data, MissingWeightModel(A, B, certified_nonnegative=True)


def entry_dict(data):
    return {(int(u), int(i)): (float(r), float(c))
            for u, i, r, c in zip(data.rows, data.cols, data.values, data.weights)}


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
