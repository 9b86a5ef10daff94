"""Held-out evaluation: train/test entry splits, test log-likelihood, and
MovieLens-100K ingestion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataFormatError, ObservedMatrix, from_triplets
from .families import binomial, log_density_vec


@dataclass
class HoldoutSplit:
    train: ObservedMatrix
    test: ObservedMatrix
    fraction: float


def holdout_split(data: ObservedMatrix, test_fraction, rng: np.random.Generator) -> HoldoutSplit:
    """Uniform random partition of the observed entries.

    Every train row and column is kept non-empty: an entry whose removal
    would empty one is retained in train and a replacement is drawn from the
    entries that are safe to remove.  Raises if some source row or column has
    no entries at all, since no partition can fix that.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must lie in (0,1), got {test_fraction!r}")
    if data.nnz == 0:
        raise ValueError("cannot split an empty matrix")
    if (data.row_counts() == 0).any() or (data.col_counts() == 0).any():
        raise ValueError("impossible partition: source has an empty row or column")

    nnz = data.nnz
    in_test = rng.random(nnz) < test_fraction

    # retention fixpoint: any row/column with every entry proposed for test
    # gets its first such entry back; each move shrinks test, so this stops
    moved_back = 0
    while True:
        row_train = np.bincount(data.rows[~in_test], minlength=data.n)
        col_train = np.bincount(data.cols[~in_test], minlength=data.p)
        starved_rows = np.nonzero(row_train == 0)[0]
        starved_cols = np.nonzero(col_train == 0)[0]
        if starved_rows.size == 0 and starved_cols.size == 0:
            break
        for target in starved_rows:
            e = int(np.nonzero(in_test & (data.rows == target))[0][0])
            in_test[e] = False
            moved_back += 1
        col_train = np.bincount(data.cols[~in_test], minlength=data.p)
        for target in starved_cols:
            if col_train[target] > 0:
                continue   # a row retention already fed this column
            e = int(np.nonzero(in_test & (data.cols == target))[0][0])
            in_test[e] = False
            moved_back += 1
    row_train = np.bincount(data.rows[~in_test], minlength=data.n)
    col_train = np.bincount(data.cols[~in_test], minlength=data.p)

    # replacement pass: move an equal number of safe train entries to test
    for _ in range(moved_back):
        train_idx = np.nonzero(~in_test)[0]
        safe = train_idx[(row_train[data.rows[train_idx]] >= 2)
                         & (col_train[data.cols[train_idx]] >= 2)]
        if safe.size == 0:
            break
        e = int(safe[rng.integers(safe.size)])
        in_test[e] = True
        row_train[data.rows[e]] -= 1
        col_train[data.cols[e]] -= 1

    def _subset(keep):
        idx = np.nonzero(keep)[0]
        return from_triplets(data.n, data.p,
                             zip(data.rows[idx], data.cols[idx], data.vals[idx]),
                             data.col_specs)

    return HoldoutSplit(train=_subset(~in_test), test=_subset(in_test),
                        fraction=float(test_fraction))


def test_loglik(m_hat, test: ObservedMatrix) -> float:
    """Sum of per-entry log-densities over the test entries, carrier terms
    included, so values are comparable across models and data subsets."""
    m_hat = np.asarray(m_hat, dtype=np.float64)
    if m_hat.shape != (test.n, test.p):
        raise ValueError(f"estimate shape {m_hat.shape} does not match test data")
    if test.nnz == 0:
        return 0.0
    me = m_hat[test.rows, test.cols]
    codes = test.col_code[test.cols]
    ks = test.col_k[test.cols]
    return float(np.sum(log_density_vec(codes, ks, test.vals, me)))


def ingest_movielens(path) -> ObservedMatrix:
    """Read a MovieLens-100K ``u.data`` style file.

    Lines are whitespace-separated ``user item rating timestamp`` with 1-based
    ids and ratings 1..5.  Users map to rows, items to columns, the response
    is rating - 1, and every column is Binomial with 4 trials.
    """
    triplets = []
    max_i = -1
    max_j = -1
    with open(path) as fh:
        for lineno, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) != 4:
                raise DataFormatError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            try:
                user, item, rating = int(parts[0]), int(parts[1]), int(parts[2])
                int(parts[3])
            except ValueError:
                raise DataFormatError(f"line {lineno}: non-integer field") from None
            if user < 1 or item < 1:
                raise DataFormatError(f"line {lineno}: ids must be >= 1")
            if not (1 <= rating <= 5):
                raise DataFormatError(f"line {lineno}: rating {rating} outside 1..5")
            i, j = user - 1, item - 1
            max_i = max(max_i, i)
            max_j = max(max_j, j)
            triplets.append((i, j, float(rating - 1)))
    if not triplets:
        raise DataFormatError("empty ratings file")
    return from_triplets(max_i + 1, max_j + 1, triplets,
                         [binomial(4) for _ in range(max_j + 1)])
