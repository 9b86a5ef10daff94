"""Initial estimators of the signal matrix.

Two routes, kept deliberately independent so they can cross-check each other:

* cjmle_fit -- joint maximum likelihood over factor pairs with a row-norm
  bound on both factors, via alternating projected Newton block updates.
* nbe_fit -- maximum likelihood over the signal matrix itself, constrained to
  a max-norm box intersected with a nuclear-norm ball, via projected gradient
  ascent with Dykstra's algorithm for the compound projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import ObservedMatrix
from .families import BINOMIAL, NORMAL, POISSON, mean_vec
from .likelihood import loglik_factors, weighted_loglik
from .linalg import FactorPair, project_two_to_inf, top_r_svd
from .solvers import (EmptyColumnError, EmptyRowError, NewtonConfig,
                      solve_all_cols, solve_all_rows)


class NoProgressError(Exception):
    """Objective decreased persistently across outer iterations: a bug."""


@dataclass
class CjmleConfig:
    c: float                    # row-norm bound shared by both factors
    r: int
    outer_tol: float = 1e-6     # relative objective change
    max_outer: int = 500
    newton: NewtonConfig = field(default_factory=NewtonConfig)

    def __post_init__(self):
        if self.c <= 0 or self.r < 1 or self.outer_tol <= 0 or self.max_outer < 1:
            raise ValueError("bad CjmleConfig")


@dataclass
class NbeConfig:
    rho: float                  # max-norm bound; nuclear radius is rho*sqrt(r n p)
    r: int
    step_init: float = 1.0
    max_iter: int = 2000
    obj_tol: float = 1e-7
    dykstra_iters: int = 50

    def __post_init__(self):
        if self.rho <= 0 or self.r < 1 or self.step_init <= 0:
            raise ValueError("bad NbeConfig")
        if self.max_iter < 1 or self.obj_tol <= 0 or self.dykstra_iters < 1:
            raise ValueError("bad NbeConfig")


# === projections =============================================================

def project_max_norm(m, bound) -> np.ndarray:
    """Entrywise clamp to [-bound, bound]."""
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound!r}")
    return np.clip(np.asarray(m, dtype=np.float64), -bound, bound)


def project_nuclear_ball(m, radius) -> np.ndarray:
    """Euclidean projection onto {x : ||x||_* <= radius}.

    SVD, project the spectrum onto the l1 ball (soft threshold at the
    water-filling level), reconstruct.  Input already inside the ball is
    returned unchanged.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    m = np.asarray(m, dtype=np.float64)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if float(s.sum()) <= radius:
        return m
    # spectrum is non-negative and descending, so the l1 projection reduces
    # to the simplex-style threshold
    css = np.cumsum(s)
    idx = np.arange(1, s.size + 1)
    kstar = int(np.nonzero(s - (css - radius) / idx > 0)[0].max())
    tau = (css[kstar] - radius) / (kstar + 1)
    s_new = np.maximum(s - tau, 0.0)
    return (u * s_new) @ vt


def _project_box_nuclear(x, rho, radius, dykstra_iters):
    """Approximate projection onto the box/nuclear-ball intersection.

    Dykstra's alternating scheme with correction terms, then a short
    feasibility polish so the output provably satisfies both constraints:
    the final nuclear projection is exact and the remaining box violation is
    driven below 1e-9 (a pure rescale is the last-resort finisher; scaling
    by a factor <= 1 preserves both constraints).
    """
    n, p = x.shape
    # cheap certificate: nuclear <= sqrt(min(n,p)) * frobenius
    if float(np.abs(x).max()) <= rho and math.sqrt(min(n, p)) * float(np.linalg.norm(x)) <= radius:
        return x.copy()
    u = x.copy()
    pcorr = np.zeros_like(x)
    qcorr = np.zeros_like(x)
    for _ in range(dykstra_iters):
        ybox = np.clip(u + pcorr, -rho, rho)
        pcorr = u + pcorr - ybox
        u_new = project_nuclear_ball(ybox + qcorr, radius)
        qcorr = ybox + qcorr - u_new
        moved = float(np.linalg.norm(u_new - u))
        u = u_new
        if moved <= 1e-8 * max(1.0, float(np.linalg.norm(u))):
            break
    for _ in range(100):
        if float(np.abs(u).max()) <= rho + 1e-9:
            break
        u = project_nuclear_ball(np.clip(u, -rho, rho), radius)
    over = float(np.abs(u).max())
    if over > rho + 1e-9:
        u = u * (rho / over)
    return u


# === warm start ==============================================================

def init_from_data(data: ObservedMatrix, r) -> FactorPair:
    """Factor pair from a top-r SVD of the link-transformed data.

    Observed cells are mapped to the natural-parameter scale (identity for
    normal, smoothed logit (y+1/2)/(k+1) for binomial, log(y+1/2) for
    poisson); unobserved cells stay 0.  No inverse-propensity scaling is
    applied.  Factors are U sqrt(D) and V sqrt(D).
    """
    z = np.zeros((data.n, data.p))
    codes = data.col_code[data.cols]
    ks = data.col_k[data.cols]
    vals = data.vals
    t = np.empty_like(vals)
    nm = codes == NORMAL
    bm = codes == BINOMIAL
    pm = codes == POISSON
    if nm.any():
        t[nm] = vals[nm]
    if bm.any():
        frac = (vals[bm] + 0.5) / (ks[bm] + 1.0)
        t[bm] = np.log(frac) - np.log1p(-frac)
    if pm.any():
        t[pm] = np.log(vals[pm] + 0.5)
    z[data.rows, data.cols] = t
    svd = top_r_svd(z, r)
    sq = np.sqrt(svd.d)
    return FactorPair(theta=svd.u * sq, a=svd.v * sq)


# === constrained joint MLE ===================================================

def cjmle_fit(data: ObservedMatrix, cfg: CjmleConfig, init: FactorPair):
    """Alternating constrained block maximization of the weighted likelihood.

    Each row and column update maximizes its partial likelihood over the
    ball {||.|| <= C} directly (solvers ball option), which keeps the outer
    objective non-decreasing by construction; projection afterwards is a
    bitwise no-op safety net.  Returns (FactorPair, signal matrix).  A
    persistent decrease (three consecutive outer iterations losing more than
    1e-9) can then only come from a bug and raises NoProgressError.
    """
    if init.theta.shape != (data.n, cfg.r) or init.a.shape != (data.p, cfg.r):
        raise ValueError("init factor shapes do not match data and rank")
    counts = data.row_counts()
    if (counts == 0).any():
        raise EmptyRowError(f"row {int(np.nonzero(counts == 0)[0][0])} has no observed entries")
    counts = data.col_counts()
    if (counts == 0).any():
        raise EmptyColumnError(f"column {int(np.nonzero(counts == 0)[0][0])} has no observed entries")

    theta = project_two_to_inf(init.theta, cfg.c)
    a = project_two_to_inf(init.a, cfg.c)
    obj = loglik_factors(data, theta, a)
    bad_streak = 0
    for _ in range(cfg.max_outer):
        theta, _ = solve_all_rows(data, a, theta, cfg.newton, ball=cfg.c)
        theta = project_two_to_inf(theta, cfg.c)
        a, _ = solve_all_cols(data, theta, a, cfg.newton, ball=cfg.c)
        a = project_two_to_inf(a, cfg.c)
        new_obj = loglik_factors(data, theta, a)
        if new_obj < obj - 1e-9:
            bad_streak += 1
            if bad_streak >= 3:
                raise NoProgressError(
                    f"objective decreased {obj - new_obj:.3e} for 3 consecutive outer iterations")
        else:
            bad_streak = 0
        rel = abs(new_obj - obj) / max(1.0, abs(obj))
        obj = new_obj
        if rel < cfg.outer_tol:
            break
    pair = FactorPair(theta=theta, a=a)
    return pair, pair.signal()


# === nuclear-ball estimator ==================================================

def nbe_fit(data: ObservedMatrix, cfg: NbeConfig) -> np.ndarray:
    """Projected gradient ascent on the weighted likelihood over the
    intersection of the max-norm box and the nuclear-norm ball.

    Starts at the zero matrix (feasible); empty data returns it untouched.
    The step is backtracked (halving) until the objective strictly
    increases, warm-started from the previous accepted step.
    """
    n, p = data.n, data.p
    m = np.zeros((n, p))
    if data.nnz == 0:
        return m
    radius = cfg.rho * math.sqrt(cfg.r * n * p)
    codes = data.col_code[data.cols]
    ks = data.col_k[data.cols]
    obj = weighted_loglik(data, m)
    step = cfg.step_init
    grad = np.zeros((n, p))
    for _ in range(cfg.max_iter):
        me = m[data.rows, data.cols]
        grad[data.rows, data.cols] = data.vals - mean_vec(codes, ks, me)
        accepted = False
        first_try = True
        for _ in range(60):
            cand = _project_box_nuclear(m + step * grad, cfg.rho, radius, cfg.dykstra_iters)
            cand_obj = weighted_loglik(data, cand)
            if cand_obj > obj:
                accepted = True
                break
            step *= 0.5
            first_try = False
        if not accepted:
            break
        rel = (cand_obj - obj) / max(1.0, abs(obj))
        m, obj = cand, cand_obj
        if first_try:
            step *= 2.0
        if rel < cfg.obj_tol:
            break
    return m
