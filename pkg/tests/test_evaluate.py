import math

import numpy as np
import pytest

from mixedmc.data import DataFormatError, from_dense, from_triplets
from mixedmc.evaluate import holdout_split, ingest_movielens
from mixedmc.evaluate import test_loglik as heldout_loglik
from mixedmc.families import binomial, log_density, normal, poisson

MIXED = [normal(), binomial(5), poisson()]


def dense_instance(n=30, p=12, seed=0):
    rng = np.random.default_rng(seed)
    specs = [MIXED[j % 3] for j in range(p)]
    y = np.zeros((n, p))
    for j, f in enumerate(specs):
        if f.kind == 0:
            y[:, j] = rng.normal(size=n)
        elif f.kind == 1:
            y[:, j] = rng.integers(0, 6, size=n)
        else:
            y[:, j] = rng.poisson(2.0, size=n)
    return from_dense(y, np.ones((n, p), dtype=bool), specs)


# --- holdout split -----------------------------------------------------------

def entry_set(d):
    return set(zip(d.rows.tolist(), d.cols.tolist(), d.vals.tolist()))


def test_split_is_exact_partition():
    data = dense_instance(seed=1)
    split = holdout_split(data, 0.25, np.random.default_rng(2))
    tr, te = entry_set(split.train), entry_set(split.test)
    assert tr | te == entry_set(data)
    assert tr & te == set()
    assert split.train.nnz + split.test.nnz == data.nnz


def test_split_counts_near_fraction():
    data = dense_instance(n=60, p=20, seed=3)
    split = holdout_split(data, 0.2, np.random.default_rng(4))
    nnz = data.nnz
    got = split.test.nnz / nnz
    # 4 sigma binomial slack
    sd = math.sqrt(0.2 * 0.8 / nnz)
    assert abs(got - 0.2) <= 4 * sd


def test_split_keeps_rows_and_cols_alive():
    data = dense_instance(seed=5)
    for seed in range(5):
        split = holdout_split(data, 0.5, np.random.default_rng(seed))
        assert (split.train.row_counts() > 0).all()
        assert (split.train.col_counts() > 0).all()


def test_split_reproducible():
    data = dense_instance(seed=6)
    s1 = holdout_split(data, 0.3, np.random.default_rng(9))
    s2 = holdout_split(data, 0.3, np.random.default_rng(9))
    assert s1.train.checksum() == s2.train.checksum()
    assert s1.test.checksum() == s2.test.checksum()


def test_split_retains_single_entry_lines():
    # row 2 and column 3 hold one entry each; those must stay in train
    trip = [(0, 0, 1.0), (0, 1, 0.0), (1, 0, 2.0), (1, 1, 3.0), (2, 0, 1.0),
            (0, 3, 4.0), (1, 2, 2.0), (2, 2, 0.0)]
    data = from_triplets(3, 4, trip, [poisson()] * 4)
    for seed in range(20):
        split = holdout_split(data, 0.6, np.random.default_rng(seed))
        assert (split.train.row_counts() > 0).all()
        assert (split.train.col_counts() > 0).all()


def test_split_impossible_partition():
    mask = np.ones((3, 3), dtype=bool)
    mask[:, 1] = False
    data = from_dense(np.zeros((3, 3)), mask, [normal()] * 3)
    with pytest.raises(ValueError, match="impossible partition"):
        holdout_split(data, 0.2, np.random.default_rng(0))


def test_split_bad_fraction():
    data = dense_instance()
    for frac in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            holdout_split(data, frac, np.random.default_rng(0))


# --- test log-likelihood -----------------------------------------------------

def test_loglik_empty_is_zero():
    test = from_triplets(3, 3, [], [normal()] * 3)
    assert heldout_loglik(np.zeros((3, 3)), test) == 0.0


def test_loglik_single_bernoulli_value():
    test = from_triplets(1, 1, [(0, 0, 1.0)], [binomial(1)])
    # density at m=0 is 1/2 regardless of y
    assert heldout_loglik(np.zeros((1, 1)), test) == pytest.approx(math.log(0.5), rel=1e-15)


def test_loglik_matches_scalar_loop():
    data = dense_instance(n=15, p=9, seed=11)
    rng = np.random.default_rng(12)
    m = rng.normal(scale=0.7, size=(15, 9))
    want = sum(log_density(data.col_specs[j], y, m[i, j])
               for i, j, y in zip(data.rows, data.cols, data.vals))
    assert heldout_loglik(m, data) == pytest.approx(want, rel=1e-12)


def test_loglik_additive_over_partition():
    data = dense_instance(n=20, p=9, seed=13)
    split = holdout_split(data, 0.4, np.random.default_rng(14))
    rng = np.random.default_rng(15)
    m = rng.normal(scale=0.5, size=(20, 9))
    total = heldout_loglik(m, data)
    parts = heldout_loglik(m, split.train) + heldout_loglik(m, split.test)
    assert parts == pytest.approx(total, rel=1e-12)


def test_loglik_prefers_truth_over_perturbation():
    rng = np.random.default_rng(16)
    theta = rng.uniform(-0.9, 0.9, (40, 2))
    a = rng.uniform(-0.9, 0.9, (15, 2))
    m_true = theta @ a.T
    from scipy.special import expit
    y = rng.binomial(5, expit(m_true)).astype(float)
    data = from_dense(y, np.ones((40, 15), dtype=bool), [binomial(5)] * 15)
    wins = 0
    for s in range(10):
        bad = m_true + 2.0 * np.random.default_rng(s).normal(size=m_true.shape)
        if heldout_loglik(m_true, data) > heldout_loglik(bad, data):
            wins += 1
    assert wins == 10


def test_loglik_shape_check():
    test = from_triplets(2, 2, [(0, 0, 1.0)], [normal()] * 2)
    with pytest.raises(ValueError):
        heldout_loglik(np.zeros((3, 2)), test)


# --- ratings ingestion -------------------------------------------------------

def test_ingest_three_line_file(tmp_path):
    path = tmp_path / "u.data"
    path.write_text("1\t2\t5\t881250949\n3\t1\t1\t891717742\n2\t2\t3\t878887116\n")
    data = ingest_movielens(path)
    assert (data.n, data.p) == (3, 2)
    got = {(i, j): v for i, j, v in zip(data.rows, data.cols, data.vals)}
    # rating r maps to response r-1 on a Binomial(4) scale
    assert got == {(0, 1): 4.0, (2, 0): 0.0, (1, 1): 2.0}
    assert all(f.kind == 1 and f.k == 4 for f in data.col_specs)


def test_ingest_error_paths(tmp_path):
    path = tmp_path / "u.data"
    path.write_text("1 2 5\n")
    with pytest.raises(DataFormatError, match="line 1"):
        ingest_movielens(path)
    path.write_text("1 2 9 100\n")
    with pytest.raises(DataFormatError, match="rating"):
        ingest_movielens(path)
    path.write_text("0 2 3 100\n")
    with pytest.raises(DataFormatError, match="ids"):
        ingest_movielens(path)
    path.write_text("a 2 3 100\n")
    with pytest.raises(DataFormatError, match="non-integer"):
        ingest_movielens(path)
    path.write_text("\n")
    with pytest.raises(DataFormatError, match="empty"):
        ingest_movielens(path)
    path.write_text("1 1 3 100\n1 1 4 200\n")
    with pytest.raises(DataFormatError, match="duplicate"):
        ingest_movielens(path)
