import math
import time

import numpy as np
import pytest

from mixedmc.data import from_dense
from mixedmc.families import binomial, cumulant_vec, normal, poisson
from mixedmc.solvers import (EmptyColumnError, EmptyRowError, NewtonConfig,
                             SingularHessianError, solve_all_cols,
                             solve_all_rows, solve_col, solve_row)

CFG = NewtonConfig()


def profile_objective(y, x, fam, beta):
    m = x @ beta
    codes = np.full(y.size, fam.kind)
    ks = np.full(y.size, float(fam.k))
    return float(y @ m - cumulant_vec(codes, ks, m).sum())


def grid_argmax(y, x, fam, lo=-3.0, hi=3.0):
    """Independent maximizer: coarse grid then two zoom refinements."""
    center = np.zeros(2)
    half = (hi - lo) / 2.0
    for _ in range(6):
        g0 = np.linspace(center[0] - half, center[0] + half, 61)
        g1 = np.linspace(center[1] - half, center[1] + half, 61)
        b0, b1 = np.meshgrid(g0, g1, indexing="ij")
        betas = np.stack([b0.ravel(), b1.ravel()], axis=1)
        m = betas @ x.T
        codes = np.full(y.size, fam.kind)
        ks = np.full(y.size, float(fam.k))
        vals = m @ y - cumulant_vec(np.tile(codes, (m.shape[0], 1)),
                                    np.tile(ks, (m.shape[0], 1)), m).sum(axis=1)
        best = int(np.argmax(vals))
        center = betas[best]
        # window shrinks slower than the spacing so the optimum stays inside
        half /= 6.0
    return center


# --- closed forms ------------------------------------------------------------

def test_normal_row_solution_is_least_squares():
    rng = np.random.default_rng(40)
    y = rng.normal(size=(1, 8))
    data = from_dense(y, np.ones((1, 8), dtype=bool), [normal()] * 8)
    a = rng.normal(size=(8, 3))
    rep = solve_row(data, 0, a, np.zeros(3), CFG)
    want = np.linalg.solve(a.T @ a, a.T @ y[0])
    assert rep.converged
    assert np.allclose(rep.solution, want, atol=1e-10)


def test_poisson_intercept_closed_form():
    y = np.array([[2.0], [4.0], [6.0]])
    data = from_dense(y, np.ones((3, 1), dtype=bool), [poisson()])
    theta = np.ones((3, 1))
    rep = solve_col(data, 0, theta, np.zeros(1), CFG)
    assert rep.converged
    assert rep.solution[0] == pytest.approx(math.log(4.0), abs=1e-8)


def test_binomial_intercept_closed_form():
    # k=5, mean y = 2  ->  sigmoid(m) = 2/5  ->  m = log(2/3)
    y = np.array([[1.0], [2.0], [3.0]])
    data = from_dense(y, np.ones((3, 1), dtype=bool), [binomial(5)])
    theta = np.ones((3, 1))
    rep = solve_col(data, 0, theta, np.zeros(1), CFG)
    assert rep.converged
    assert rep.solution[0] == pytest.approx(math.log(2.0 / 3.0), abs=1e-8)


# --- independent grid oracle -------------------------------------------------

def test_newton_matches_grid_search_on_binomial_problems():
    rng = np.random.default_rng(41)
    fam = binomial(5)
    start = time.monotonic()
    for trial in range(5):
        x = rng.normal(size=(30, 2))
        beta_true = rng.uniform(-1.0, 1.0, size=2)
        probs = 1.0 / (1.0 + np.exp(-(x @ beta_true)))
        y = rng.binomial(5, probs).astype(float)
        data = from_dense(y[:, None], np.ones((30, 1), dtype=bool), [fam])
        # treat it as a column problem: theta rows are the design
        rep = solve_col(data, 0, x, np.zeros(2), CFG)
        oracle = grid_argmax(y, x, fam)
        assert rep.converged
        assert np.abs(rep.solution - oracle).max() < 1e-4
    assert time.monotonic() - start < 30.0


# --- uniqueness / ascent -----------------------------------------------------

def test_distinct_inits_reach_same_optimum():
    rng = np.random.default_rng(42)
    y = rng.binomial(5, 0.4, size=(1, 12)).astype(float)
    data = from_dense(y, np.ones((1, 12), dtype=bool), [binomial(5)] * 12)
    a = rng.normal(size=(12, 2))
    r1 = solve_row(data, 0, a, np.zeros(2), CFG)
    r2 = solve_row(data, 0, a, np.array([1.5, -2.0]), CFG)
    assert r1.converged and r2.converged
    assert np.abs(r1.solution - r2.solution).max() < 1e-6


def test_solution_never_below_init_objective():
    rng = np.random.default_rng(43)
    for trial in range(20):
        p = int(rng.integers(3, 15))
        fam = [normal(), binomial(3), poisson()][trial % 3]
        if fam.kind == 0:
            y = rng.normal(size=(1, p))
        elif fam.kind == 1:
            y = rng.integers(0, 4, size=(1, p)).astype(float)
        else:
            y = rng.poisson(2.0, size=(1, p)).astype(float)
        data = from_dense(y, np.ones((1, p), dtype=bool), [fam] * p)
        a = rng.normal(size=(p, 2))
        init = rng.normal(size=2)
        rep = solve_row(data, 0, a, init, CFG)
        f_init = profile_objective(y[0], a, fam, init)
        f_sol = profile_objective(y[0], a, fam, rep.solution)
        assert f_sol >= f_init - 1e-12


# --- degenerate inputs -------------------------------------------------------

def test_unobserved_row_and_column_raise():
    mask = np.ones((3, 3), dtype=bool)
    mask[1, :] = False
    mask[:, 2] = False
    y = np.zeros((3, 3))
    data = from_dense(y, mask, [normal()] * 3)
    a = np.zeros((3, 2))
    theta = np.zeros((3, 2))
    with pytest.raises(EmptyRowError):
        solve_row(data, 1, a, np.zeros(2), CFG)
    with pytest.raises(EmptyColumnError):
        solve_col(data, 2, theta, np.zeros(2), CFG)


def test_rank_deficient_design_raises_singular():
    # one observed entry, two free parameters: Hessian has rank one
    y = np.array([[1.3]])
    data = from_dense(y, np.ones((1, 1), dtype=bool), [normal()])
    a = np.array([[1.0, 1.0]])
    with pytest.raises(SingularHessianError):
        solve_row(data, 0, a, np.zeros(2), CFG)


def test_separated_binomial_clips_to_trust_region():
    # every trial a success: likelihood increases without bound in m
    y = np.full((6, 1), 5.0)
    data = from_dense(y, np.ones((6, 1), dtype=bool), [binomial(5)])
    theta = np.ones((6, 1))
    cfg = NewtonConfig(trust_radius=4.0)
    rep = solve_col(data, 0, theta, np.zeros(1), cfg)
    assert not rep.converged
    assert rep.status == "diverged"
    assert np.linalg.norm(rep.solution) == pytest.approx(4.0, rel=1e-12)


# --- batch driver ------------------------------------------------------------

def batch_instance(seed):
    rng = np.random.default_rng(seed)
    n, p, r = 15, 10, 2
    y = rng.binomial(2, 0.5, size=(n, p)).astype(float)
    mask = rng.random((n, p)) < 0.9
    # guard: batch helpers assume every row and column is observed
    mask[np.arange(n), np.arange(n) % p] = True
    mask[np.arange(p) % n, np.arange(p)] = True
    data = from_dense(y, mask, [binomial(2)] * p)
    a = rng.normal(scale=0.5, size=(p, r))
    inits = rng.normal(scale=0.3, size=(n, r))
    return data, a, inits


def test_solve_all_rows_is_bitwise_loop():
    data, a, inits = batch_instance(44)
    batch, reports = solve_all_rows(data, a, inits, CFG)
    for i in range(data.n):
        single = solve_row(data, i, a, inits[i], CFG)
        assert np.array_equal(batch[i], single.solution)
        assert reports[i].iterations == single.iterations


def test_solve_all_cols_is_bitwise_loop():
    data, a, inits = batch_instance(45)
    theta, _ = solve_all_rows(data, a, inits, CFG)
    cols, reports = solve_all_cols(data, theta, a, CFG)
    for j in range(data.p):
        single = solve_col(data, j, theta, a[j], CFG)
        assert np.array_equal(cols[j], single.solution)


def test_batch_strict_raises_and_lenient_records():
    y = np.array([[1.0, 0.5], [2.0, 0.2]])
    mask = np.array([[True, True], [False, False]])  # row 1 empty
    data = from_dense(y, mask, [normal()] * 2)
    a = np.eye(2)
    inits = np.full((2, 2), 0.25)
    with pytest.raises(EmptyRowError):
        solve_all_rows(data, a, inits, CFG, strict=True)
    out, reports = solve_all_rows(data, a, inits, CFG, strict=False)
    assert np.array_equal(out[1], inits[1])
    assert reports[1].status.startswith("error:")
    assert reports[0].converged
