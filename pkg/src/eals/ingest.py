"""Rating-log parsing, id compaction and dataset statistics."""

from __future__ import annotations

import collections
import re
from dataclasses import dataclass

import numpy as np

from .core import SparseRatingMatrix
from .errors import DataError

_SPLIT = {"tab": "\t", "comma": ",", "space": None}


@dataclass(frozen=True)
class RawEntry:
    user: str
    item: str
    rating: float
    timestamp: float | None = None
    weight: float | None = None
    line: int = 0


@dataclass
class IdMaps:
    """Original string ids in compact-index order."""

    users: list
    items: list

    def user_index(self):
        return {u: k for k, u in enumerate(self.users)}

    def item_index(self):
        return {i: k for k, i in enumerate(self.items)}


@dataclass
class DatasetStats:
    num_rows: int
    num_cols: int
    nnz: int
    sparsity: float
    item_counts: np.ndarray
    histogram: dict

    def report(self):
        return (f"users={self.num_rows} items={self.num_cols} entries={self.nnz} "
                f"sparsity={100 * self.sparsity:.2f}%")


def _splitter(line, sep):
    if sep is None:
        if "\t" in line:
            return line.split("\t")
        if "," in line:
            return line.split(",")
        return line.split()
    if sep in _SPLIT:
        sep = _SPLIT[sep]
    return line.split(sep) if sep is not None else line.split()


def parse_lines(lines, sep=None, with_weights=False):
    """Parse ``user<sep>item<sep>rating[<sep>timestamp[<sep>weight]]`` lines.

    ``sep`` is a literal separator, one of ``"tab"``, ``"comma"``,
    ``"space"``, or None to detect per line. Blank and ``#`` lines are skipped.
    The weight column is only read when ``with_weights`` is set.
    """
    out = []
    seen = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in _splitter(line, sep)]
        max_fields = 5 if with_weights else 4
        if not 3 <= len(fields) <= max_fields:
            raise DataError(f"expected 3 to {max_fields} fields, got {len(fields)}", line=lineno)
        user, item = fields[0], fields[1]
        if not user or not item:
            raise DataError("empty user or item id", line=lineno)
        try:
            rating = float(fields[2])
        except ValueError:
            raise DataError(f"non-numeric rating {fields[2]!r}", line=lineno) from None
        ts = weight = None
        try:
            if len(fields) >= 4 and fields[3]:
                ts = float(fields[3])
            if len(fields) == 5 and fields[4]:
                weight = float(fields[4])
        except ValueError as exc:
            raise DataError(str(exc), line=lineno) from None
        if not np.isfinite(rating):
            raise DataError("non-finite rating", line=lineno)
        if weight is not None and not weight >= 0:
            raise DataError("entry weight must be >= 0", line=lineno)
        key = (user, item)
        if key in seen:
            raise DataError(f"duplicate pair ({user}, {item}); first seen on line {seen[key]}",
                            line=lineno)
        seen[key] = lineno
        out.append(RawEntry(user, item, rating, ts, weight, lineno))
    return out


def parse_ratings(path, sep=None, with_weights=False):
    """Read a rating log from ``path``; see :func:`parse_lines`."""
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_lines(fh, sep=sep, with_weights=with_weights)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def compact_ids(entries):
    """First-occurrence order user and item ids."""
    users = list(dict.fromkeys(e.user for e in entries))
    items = list(dict.fromkeys(e.item for e in entries))
    return IdMaps(users, items)


def build_matrix(entries, binarize=False, default_weight=1.0, id_maps=None):
    """Turn raw entries into a :class:`SparseRatingMatrix` plus id maps.

    ``id_maps`` fixes the index space (e.g. compacted over a full log before a
    train/test split); by default ids are compacted over ``entries``.
    """
    if not entries:
        raise DataError("no entries")
    maps = id_maps if id_maps is not None else compact_ids(entries)
    uidx, iidx = maps.user_index(), maps.item_index()
    n = len(entries)
    rows = np.empty(n, dtype=np.intp)
    cols = np.empty(n, dtype=np.intp)
    values = np.empty(n)
    weights = np.empty(n)
    for k, e in enumerate(entries):
        if not binarize and e.rating == 0:
            raise DataError("zero rating is reserved for missing entries", line=e.line or None)
        try:
            rows[k] = uidx[e.user]
            cols[k] = iidx[e.item]
        except KeyError as exc:
            raise DataError(f"id {exc} missing from id maps", line=e.line or None) from None
        values[k] = 1.0 if binarize else e.rating
        weights[k] = default_weight if e.weight is None else e.weight
    data = SparseRatingMatrix(len(maps.users), len(maps.items), rows, cols, values, weights)
    return data, maps


def entries_from_matrix(data, maps):
    """Inverse of :func:`build_matrix` (ratings, without timestamps)."""
    return [(maps.users[u], maps.items[i], float(r))
            for u, i, r in zip(data.rows, data.cols, data.values)]


def dataset_stats(data):
    if data.nnz == 0:
        raise DataError("empty matrix")
    counts = data.col_counts()
    return DatasetStats(
        num_rows=data.num_rows,
        num_cols=data.num_cols,
        nnz=data.nnz,
        sparsity=1.0 - data.nnz / (data.num_rows * data.num_cols),
        item_counts=counts,
        histogram=dict(sorted(collections.Counter(counts.tolist()).items())),
    )


def save_id_map(path, ids):
    """Two columns: original id, compact index."""
    with open(path, "w", encoding="utf-8") as fh:
        for k, name in enumerate(ids):
            fh.write(f"{name}\t{k}\n")


def load_id_map(path):
    ids = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            name, _, idx = line.rstrip("\n").rpartition("\t")
            if not re.fullmatch(r"\d+", idx) or int(idx) != len(ids):
                raise DataError(f"{path}: bad or out-of-order index", line=lineno)
            ids.append(name)
    return ids


def synthetic_entries(num_users, num_items, density, seed=0, zipf=1.0):
    """Random rating log with popularity-skewed items and increasing timestamps.

    Exactly ``round(density * M * N)`` distinct cells are drawn (at least one);
    item probabilities follow ``1 / rank**zipf``. Ratings are integers 1..5.
    """
    rng = np.random.default_rng(seed)
    total = num_users * num_items
    nnz = max(1, min(total, int(round(density * total))))
    item_p = 1.0 / np.arange(1, num_items + 1) ** zipf
    item_p = item_p[rng.permutation(num_items)]
    item_p /= item_p.sum()
    chosen = set()
    flat = []
    while len(flat) < nnz:
        need = nnz - len(flat)
        users = rng.integers(0, num_users, size=2 * need + 16)
        items = rng.choice(num_items, size=2 * need + 16, p=item_p)
        for u, i in zip(users.tolist(), items.tolist()):
            key = u * num_items + i
            if key not in chosen:
                chosen.add(key)
                flat.append(key)
                if len(flat) == nnz:
                    break
        if len(chosen) >= total:
            break
    ratings = rng.integers(1, 6, size=len(flat))
    stamps = rng.permutation(len(flat))
    return [RawEntry(f"u{k // num_items}", f"i{k % num_items}", float(r), float(ts), None, n + 1)
            for n, (k, r, ts) in enumerate(zip(flat, ratings.tolist(), stamps.tolist()))]


def write_entries(path, entries, sep="\t"):
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fields = [e.user, e.item, repr(e.rating)]
            if e.timestamp is not None:
                fields.append(repr(e.timestamp))
            fh.write(sep.join(fields) + "\n")
