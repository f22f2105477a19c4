import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eals.core import FactorModel, SparseRatingMatrix
from eals.errors import DataError, DimensionError
from eals.evaluation import (evaluate, hr_at_n, leave_one_out, mae_between, ndcg_at_n, rank_topn)
from eals.ingest import parse_lines, synthetic_entries

from oracles import topn_fullsort


def _random_model(M, N, K, seed):
    rng = np.random.default_rng(seed)
    return FactorModel(rng.normal(size=(M, K)), rng.normal(size=(N, K)))


class TestLeaveOneOut:
    def test_latest_held_out(self):
        entries = parse_lines(["u,a,1,2", "u,b,1,3", "u,c,1,1", "v,a,1,5"])
        split = leave_one_out(entries)
        assert split.test == [(0, 1)]  # u's t=3 entry (item b); v has one entry
        assert split.train.nnz == 3
        assert split.train.row_counts().tolist() == [2, 1]

    def test_tie_goes_to_later_line(self):
        entries = parse_lines(["u,a,1,7", "u,b,1,7", "u,c,1,2"])
        assert leave_one_out(entries).test == [(0, 1)]

    def test_file_order_without_timestamps(self):
        entries = parse_lines(["u,a,1", "u,b,1", "u,c,1"])
        assert leave_one_out(entries).test == [(0, 2)]

    def test_count_oracle(self):
        entries = synthetic_entries(100, 30, 0.04, seed=2)
        split = leave_one_out(entries)
        per_user = {}
        for e in entries:
            per_user[e.user] = per_user.get(e.user, 0) + 1
        assert len(split.test) == sum(1 for c in per_user.values() if c >= 2)
        observed = set(zip(split.train.rows.tolist(), split.train.cols.tolist()))
        for u, i in split.test:
            assert (u, i) not in observed
            assert split.train.row_counts()[u] >= 1

    def test_empty(self):
        with pytest.raises(DataError):
            leave_one_out([])


class TestRanking:
    def test_ordering_follows_q(self):
        m = FactorModel(np.array([[2.0]]), np.array([[0.1], [0.5], [0.3], [0.9]]))
        train = SparseRatingMatrix(1, 4, [], [], [])
        assert rank_topn(m, 0, train, 4) == [3, 1, 2, 0]

    def test_all_ties(self):
        m = FactorModel(np.zeros((1, 2)), np.ones((6, 2)))
        train = SparseRatingMatrix(1, 6, [0], [1], [1.0])
        assert rank_topn(m, 0, train, 3) == [0, 2, 3]

    def test_excludes_training_items(self):
        m = _random_model(3, 10, 2, 0)
        train = SparseRatingMatrix(3, 10, [1, 1, 1], [0, 4, 9], [1.0, 1.0, 1.0])
        ranked = rank_topn(m, 1, train, 10)
        assert len(ranked) == 7 and not {0, 4, 9} & set(ranked)

    def test_bad_n(self):
        m = _random_model(1, 3, 1, 0)
        with pytest.raises(ValueError):
            rank_topn(m, 0, SparseRatingMatrix(1, 3, [], [], []), 0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 25))
    def test_fullsort_oracle(self, seed, n):
        rng = np.random.default_rng(seed)
        m = FactorModel(rng.integers(-2, 3, size=(2, 2)).astype(float),
                        rng.integers(-2, 3, size=(20, 2)).astype(float))  # many ties
        cols = rng.choice(20, size=4, replace=False)
        train = SparseRatingMatrix(2, 20, [0] * 4, cols, np.ones(4))
        scores = (m.Q @ m.P[0]).tolist()
        assert rank_topn(m, 0, train, n) == topn_fullsort(scores, set(cols.tolist()), n)


class TestMetrics:
    def test_positions(self):
        assert (hr_at_n([7, 1], 7), ndcg_at_n([7, 1], 7)) == (1, 1.0)
        assert ndcg_at_n([4, 5, 6], 6) == pytest.approx(0.5)
        assert (hr_at_n([4, 5], 6), ndcg_at_n([4, 5], 6)) == (0, 0.0)

    def test_planted_top_item(self):
        entries = parse_lines(["u,a,1,1", "u,b,1,2", "v,a,1,1", "v,c,1,2"])
        split = leave_one_out(entries)
        # plant held-out items at the top of each user's scores
        P = np.eye(2)
        Q = np.zeros((3, 2))
        for u, i in split.test:
            Q[i, u] = 10.0
        m = evaluate(FactorModel(P, Q), split, n=1)
        assert (m.hr, m.ndcg, m.users_evaluated) == (1.0, 1.0, 2)
        assert m.report() == "HR@1=1.0\nNDCG@1=1.0\nusers_evaluated=2\n"

    def test_random_model_against_oracle(self):
        split = leave_one_out(synthetic_entries(40, 25, 0.12, seed=5))
        model = _random_model(*split.train.shape, 3, 1)
        got = evaluate(model, split, n=5)
        hits, gains = [], []
        for u, item in split.test:
            seen = set(split.train.cols[split.train.row_entries(u)].tolist())
            ranked = topn_fullsort((model.Q @ model.P[u]).tolist(), seen, 5)
            hits.append(1 if item in ranked else 0)
            gains.append(1 / math.log2(ranked.index(item) + 2) if item in ranked else 0.0)
        assert got.hr == pytest.approx(sum(hits) / len(hits), abs=1e-15)
        assert got.ndcg == pytest.approx(sum(gains) / len(gains), abs=1e-15)
        for _, h, g in got.per_user:
            assert 0 <= g <= h <= 1

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_rotation_invariance(self, seed):
        split = leave_one_out(synthetic_entries(25, 15, 0.2, seed=3))
        model = _random_model(*split.train.shape, 3, seed)
        R, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
        rotated = FactorModel(model.P @ R, model.Q @ R)
        for u in range(5):
            np.testing.assert_allclose(rotated.Q @ rotated.P[u], model.Q @ model.P[u],
                                       atol=1e-12)
        # rotation perturbs scores at the ulp level; compare metrics only on a tie-free model
        a, b = evaluate(model, split, 5), evaluate(rotated, split, 5)
        assert (a.hr, a.ndcg) == pytest.approx((b.hr, b.ndcg), abs=1e-12)

    def test_dimension_mismatch(self):
        split = leave_one_out(parse_lines(["u,a,1", "u,b,1"]))
        with pytest.raises(DimensionError):
            evaluate(_random_model(2, 2, 1, 0), split)


class TestMae:
    def test_identical_and_negated_column(self):
        data = SparseRatingMatrix(3, 4, [0, 1, 2], [3, 0, 1], [1.0, 2.0, 3.0])
        a = _random_model(3, 4, 3, 2)
        assert mae_between(a, a, data) == 0.0
        b = a.copy()
        b.P[:, 1] *= -1
        b.Q[:, 1] *= -1
        assert mae_between(a, b, data) == pytest.approx(0.0, abs=1e-15)

    def test_loop_oracle(self):
        data = SparseRatingMatrix(3, 4, [0, 1, 2, 2], [3, 0, 1, 2], [1.0, 2.0, 3.0, 1.0])
        a, b = _random_model(3, 4, 2, 0), _random_model(3, 4, 2, 1)
        want = sum(abs(sum(a.P[u, k] * a.Q[i, k] for k in range(2))
                       - sum(b.P[u, k] * b.Q[i, k] for k in range(2)))
                   for u, i in zip(data.rows, data.cols)) / 4
        assert mae_between(a, b, data) == pytest.approx(want, rel=1e-13)

    def test_shape_mismatch(self):
        data = SparseRatingMatrix(3, 4, [0], [0], [1.0])
        with pytest.raises(DimensionError):
            mae_between(_random_model(3, 4, 2, 0), _random_model(3, 5, 2, 0), data)
