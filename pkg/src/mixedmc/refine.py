"""Entrywise refinement of an initial signal estimate.

A consistent-in-Frobenius initial estimate M-hat is upgraded to an estimate
with entrywise (max-norm) guarantees by re-solving the score equations
against loadings extracted from M-hat's top-r right singular space:

* refine_no_split   -- SVD of M-hat, bound the loading rows, refit every row
                       score, then every column loading (method 1).
* refine_split      -- the same with the rows split in two independent
                       halves so the loadings used for a row never saw that
                       row's data (method 2).
* refine_multi_split-- average of `tot` independent row-split refinements
                       (method 2').
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import ObservedMatrix
from .linalg import project_two_to_inf, top_r_svd
from .solvers import NewtonConfig, solve_all_cols, solve_all_rows


@dataclass
class RowSplit:
    n1: np.ndarray
    n2: np.ndarray

    def __post_init__(self):
        self.n1 = np.asarray(self.n1, dtype=np.int64)
        self.n2 = np.asarray(self.n2, dtype=np.int64)
        if self.n1.size == 0 or self.n2.size == 0:
            raise ValueError("both split blocks must be non-empty")
        merged = np.concatenate([self.n1, self.n2])
        n = merged.size
        if not np.array_equal(np.sort(merged), np.arange(n)):
            raise ValueError("split blocks must partition 0..n-1")
        if (np.diff(self.n1) <= 0).any() or (np.diff(self.n2) <= 0).any():
            raise ValueError("split blocks must be sorted")


@dataclass
class RefineConfig:
    r: int
    c2: float | None = None     # None = 2 * sqrt(r / p), resolved against the data
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    tot: int = 5

    def __post_init__(self):
        if self.r < 1 or self.tot < 1:
            raise ValueError("bad RefineConfig")
        if self.c2 is not None and self.c2 <= 0:
            raise ValueError("c2 must be positive when set")


def default_c2(r, p) -> float:
    return 2.0 * math.sqrt(r / p)


def _resolve_c2(cfg: RefineConfig, p) -> float:
    return cfg.c2 if cfg.c2 is not None else default_c2(cfg.r, p)


def split_rows(n, rng: np.random.Generator) -> RowSplit:
    """Assign each row to block 1 independently with probability 1/2.

    If either block comes out empty the whole assignment is redrawn, so the
    law is Bernoulli(1/2) conditioned on both blocks being non-empty.
    """
    if n < 2:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    while True:
        in_first = rng.random(n) < 0.5
        if in_first.any() and not in_first.all():
            break
    return RowSplit(n1=np.nonzero(in_first)[0], n2=np.nonzero(~in_first)[0])


def _loading_basis(m_hat, r, c2):
    """Step 1-2: top-r right singular vectors of m_hat, rows bounded by c2.

    Returns (bounded loadings, raw right vectors for score warm starts).
    """
    svd = top_r_svd(m_hat, r)
    return project_two_to_inf(svd.v, c2), svd.v


def refine_no_split(data: ObservedMatrix, m_hat, cfg: RefineConfig) -> np.ndarray:
    """Method 1: refit both factors against loadings from m_hat's SVD."""
    m_hat = np.asarray(m_hat, dtype=np.float64)
    if m_hat.shape != (data.n, data.p):
        raise ValueError(f"initial estimate shape {m_hat.shape} does not match data")
    c2 = _resolve_c2(cfg, data.p)
    a_hat, v_raw = _loading_basis(m_hat, cfg.r, c2)
    theta_init = m_hat @ v_raw          # rows of U D from the same SVD
    theta, _ = solve_all_rows(data, a_hat, theta_init, cfg.newton, strict=True)
    a_tilde, _ = solve_all_cols(data, theta, a_hat, cfg.newton, strict=True)
    return theta @ a_tilde.T


def refine_split(data: ObservedMatrix, m_hat_n1, m_hat_n2, split: RowSplit,
                 cfg: RefineConfig) -> np.ndarray:
    """Method 2: row-split refinement.

    Loadings extracted from one block's initial estimate refit the scores of
    the *other* block; those scores then refit per-column loadings using only
    that other block's rows.  Each output block therefore never reuses its
    own block's initial estimate.
    """
    m_hat_n1 = np.asarray(m_hat_n1, dtype=np.float64)
    m_hat_n2 = np.asarray(m_hat_n2, dtype=np.float64)
    if m_hat_n1.shape != (split.n1.size, data.p):
        raise ValueError(f"m_hat_n1 shape {m_hat_n1.shape} does not match block 1")
    if m_hat_n2.shape != (split.n2.size, data.p):
        raise ValueError(f"m_hat_n2 shape {m_hat_n2.shape} does not match block 2")
    if split.n1.size + split.n2.size != data.n:
        raise ValueError("split does not cover the data rows")
    out = np.zeros((data.n, data.p))
    c2 = _resolve_c2(cfg, data.p)
    for basis_mhat, refit_block, refit_mhat in (
        (m_hat_n1, split.n2, m_hat_n2),
        (m_hat_n2, split.n1, m_hat_n1),
    ):
        a_hat, v_raw = _loading_basis(basis_mhat, cfg.r, c2)
        refit_data = data.restrict_rows(refit_block)
        theta_init = refit_mhat @ v_raw
        theta, _ = solve_all_rows(refit_data, a_hat, theta_init, cfg.newton, strict=True)
        a_tilde, _ = solve_all_cols(refit_data, theta, a_hat, cfg.newton, strict=True)
        out[refit_block] = theta @ a_tilde.T
    return out


def refine_multi_split(data: ObservedMatrix, initial_fitter, cfg: RefineConfig,
                       rng: np.random.Generator) -> np.ndarray:
    """Method 2': average of cfg.tot independent row-split refinements.

    initial_fitter maps a row-restricted ObservedMatrix to a dense initial
    estimate for those rows.  Replicate k uses the k-th child stream of rng
    (rng.spawn(tot), drawn once up front), so replicates are independent and
    the whole procedure is reproducible from the parent stream.  Any failing
    replicate is fatal.
    """
    if data.n < 2:
        raise ValueError("need at least 2 rows")
    children = rng.spawn(cfg.tot)
    acc = np.zeros((data.n, data.p))
    for child in children:
        split = split_rows(data.n, child)
        m1 = np.asarray(initial_fitter(data.restrict_rows(split.n1)), dtype=np.float64)
        m2 = np.asarray(initial_fitter(data.restrict_rows(split.n2)), dtype=np.float64)
        acc += refine_split(data, m1, m2, split, cfg)
    return acc / cfg.tot
