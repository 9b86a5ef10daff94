"""Weighted log-likelihood of a signal matrix and its row/column score vectors.

The estimation objective drops the carrier terms c(y): they do not depend on
the signal matrix.  evaluate.test_loglik adds them back when absolute
likelihood values need to be comparable across models.
"""

from __future__ import annotations

import numpy as np

from .data import ObservedMatrix
from .families import cumulant_vec, mean_vec


def weighted_loglik(data: ObservedMatrix, m) -> float:
    """sum over observed (i, j) of  y_ij m_ij - b_j(m_ij)."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (data.n, data.p):
        raise ValueError(f"signal matrix shape {m.shape} does not match data {(data.n, data.p)}")
    me = m[data.rows, data.cols]
    codes = data.col_code[data.cols]
    ks = data.col_k[data.cols]
    return float(np.sum(data.vals * me - cumulant_vec(codes, ks, me)))


def loglik_factors(data: ObservedMatrix, theta, a) -> float:
    """weighted_loglik(data, theta @ a.T) without forming the dense product."""
    theta = np.asarray(theta, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    me = np.einsum("ij,ij->i", theta[data.rows], a[data.cols])
    codes = data.col_code[data.cols]
    ks = data.col_k[data.cols]
    return float(np.sum(data.vals * me - cumulant_vec(codes, ks, me)))


def score_row(data: ObservedMatrix, i, a, theta_i) -> np.ndarray:
    """Gradient of the row-i likelihood terms in theta_i:
    sum_j observed  (y_ij - b_j'(a_j . theta_i)) a_j."""
    a = np.asarray(a, dtype=np.float64)
    theta_i = np.asarray(theta_i, dtype=np.float64)
    cols, vals = data.row_slice(i)
    a_obs = a[cols]
    resid = vals - mean_vec(data.col_code[cols], data.col_k[cols], a_obs @ theta_i)
    return a_obs.T @ resid


def score_col(data: ObservedMatrix, j, theta, a_j) -> np.ndarray:
    """Gradient of the column-j likelihood terms in a_j."""
    theta = np.asarray(theta, dtype=np.float64)
    a_j = np.asarray(a_j, dtype=np.float64)
    rows, vals = data.col_slice(j)
    th_obs = theta[rows]
    m = th_obs @ a_j
    codes = np.full(m.size, data.col_code[j])
    ks = np.full(m.size, data.col_k[j])
    resid = vals - mean_vec(codes, ks, m)
    return th_obs.T @ resid
