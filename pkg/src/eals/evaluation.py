"""Leave-one-out split, top-N ranking metrics and model comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import check_dims
from .errors import DataError, DimensionError
from .ingest import build_matrix, compact_ids

DEFAULT_TOPN = 100


@dataclass
class EvalSplit:
    train: object  # SparseRatingMatrix
    test: list  # (user index, held-out item index)
    id_maps: object = None


@dataclass
class Metrics:
    topn: int
    hr: float
    ndcg: float
    users_evaluated: int
    per_user: list = field(default_factory=list)  # (user, hit, ndcg)

    def report(self):
        n = self.topn
        return (f"HR@{n}={self.hr!r}\n"
                f"NDCG@{n}={self.ndcg!r}\n"
                f"users_evaluated={self.users_evaluated}\n")


def leave_one_out(entries, binarize=False, default_weight=1.0):
    """Hold out each user's latest entry.

    Latest means greatest timestamp; ties, and entries without timestamps,
    fall back to file order (the later line wins). Users with a single entry
    stay in the training set and get no test item. Ids are compacted over the
    whole log so held-out items keep a column.
    """
    if not entries:
        raise DataError("no entries to split")
    maps = compact_ids(entries)
    latest = {}
    counts = {}
    for pos, e in enumerate(entries):
        counts[e.user] = counts.get(e.user, 0) + 1
        key = (e.timestamp if e.timestamp is not None else -math.inf, pos)
        if e.user not in latest or key >= latest[e.user][0]:
            latest[e.user] = (key, pos)
    held = {pos for user, (_, pos) in latest.items() if counts[user] >= 2}
    train_entries = [e for pos, e in enumerate(entries) if pos not in held]
    train, _ = build_matrix(train_entries, binarize=binarize, default_weight=default_weight,
                            id_maps=maps)
    uidx, iidx = maps.user_index(), maps.item_index()
    test = sorted((uidx[entries[pos].user], iidx[entries[pos].item]) for pos in held)
    return EvalSplit(train, test, maps)


def _scores(model, u):
    return model.Q @ model.P[u]


def rank_topn(model, u, train, n=DEFAULT_TOPN):
    """Top ``n`` items for row ``u`` not in its training entries.

    Ordered by score descending, ties by ascending item id.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    scores = _scores(model, u)
    candidates = np.ones(len(scores), dtype=bool)
    candidates[train.cols[train.row_entries(u)]] = False
    idx = np.flatnonzero(candidates)
    s = scores[idx]
    if len(idx) > n:
        # keep everything tied with the n-th best score, then order exactly
        cut = np.partition(-s, n - 1)[n - 1]
        keep = -s <= cut
        idx, s = idx[keep], s[keep]
    order = np.lexsort((idx, -s))
    return idx[order[:n]].tolist()


def hr_at_n(ranked, test_item):
    return 1 if test_item in ranked else 0


def ndcg_at_n(ranked, test_item):
    try:
        pos = ranked.index(test_item) + 1
    except ValueError:
        return 0.0
    return 1.0 / math.log2(pos + 1)


def evaluate(model, split, n=DEFAULT_TOPN):
    """Mean HR@n and NDCG@n over test users."""
    check_dims(split.train, model)
    per_user = []
    for u, item in split.test:
        ranked = rank_topn(model, u, split.train, n)
        per_user.append((u, hr_at_n(ranked, item), ndcg_at_n(ranked, item)))
    if per_user:
        hr = math.fsum(h for _, h, _ in per_user) / len(per_user)
        ndcg = math.fsum(g for _, _, g in per_user) / len(per_user)
    else:
        hr = ndcg = 0.0
    return Metrics(n, hr, ndcg, len(per_user), per_user)


def mae_between(model_a, model_b, data):
    """Mean |difference| of the two models' predictions on observed entries."""
    if model_a.shape != model_b.shape:
        raise DimensionError(f"model shapes differ: {model_a.shape} vs {model_b.shape}")
    check_dims(data, model_a)
    if data.nnz == 0:
        return 0.0
    pa = np.einsum("ek,ek->e", model_a.P[data.rows], model_a.Q[data.cols])
    pb = np.einsum("ek,ek->e", model_b.P[data.rows], model_b.Q[data.cols])
    return float(np.mean(np.abs(pa - pb)))
