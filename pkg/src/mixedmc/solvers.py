"""Damped Newton solvers for single-row and single-column score equations.

Each solve maximizes the strictly concave partial likelihood

    sum_t  y_t (x_t . beta) - b_t(x_t . beta)

over beta in R^r, where x_t are the loadings attached to the observed entries
of one row (or column).  Armijo backtracking keeps the objective monotone; a
trust radius caps the iterates so separated binomial data (all y at 0 or k)
terminates at a boundary point instead of drifting to infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .data import ObservedMatrix
from .families import cumulant_vec, mean_var_vec

_ARMIJO = 1e-4
_PIVOT_TOL = 1e-12


class SolverError(Exception):
    pass


class EmptyRowError(SolverError):
    """Row has no observed entries."""


class EmptyColumnError(SolverError):
    """Column has no observed entries."""


class SingularHessianError(SolverError):
    """Observed loadings are rank deficient: the Hessian is not invertible
    within tolerance."""


@dataclass
class NewtonConfig:
    grad_tol: float = 1e-9
    max_iter: int = 100
    step_shrink: float = 0.5
    max_backtracks: int = 50
    trust_radius: float | None = None   # None = 10 * max(||init||, 1)

    def __post_init__(self):
        if self.grad_tol <= 0 or self.max_iter < 1:
            raise ValueError("grad_tol must be positive and max_iter >= 1")
        if not (0 < self.step_shrink < 1):
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.trust_radius is not None and self.trust_radius <= 0:
            raise ValueError("trust_radius must be positive when set")


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    final_grad_norm: float
    converged: bool
    status: str = "converged"   # converged | diverged | max_iter | stalled | error:<kind>


def _chol_solve(h, g, context):
    # cholesky with a relative pivot check; rank-deficient loadings must
    # surface as SingularHessianError, not as a garbage step
    try:
        ell = np.linalg.cholesky(h)
    except np.linalg.LinAlgError:
        raise SingularHessianError(f"singular Hessian {context}") from None
    dmax = float(h.diagonal().max())
    if dmax <= 0.0 or float(ell.diagonal().min()) ** 2 <= _PIVOT_TOL * dmax:
        raise SingularHessianError(f"singular Hessian {context}")
    w = solve_triangular(ell, g, lower=True, check_finite=False)
    return solve_triangular(ell.T, w, lower=False, check_finite=False)


def _maximize(y, x, codes, ks, init, cfg: NewtonConfig, context: str,
              lam: float = 0.0) -> SolveReport:
    # lam > 0 switches the objective to the ridge-penalized likelihood
    # f(beta) - lam/2 ||beta||^2 used by the ball-constrained solve below;
    # lam = 0.0 leaves every quantity bit-identical to the plain path.
    beta = np.array(init, dtype=np.float64).ravel()
    if x.shape[1] != beta.size:
        raise ValueError(f"init length {beta.size} does not match loading width {x.shape[1]}")
    radius = cfg.trust_radius
    if radius is None:
        radius = 10.0 * max(float(np.linalg.norm(beta)), 1.0)

    def f(b, mb):
        val = float(y @ mb - cumulant_vec(codes, ks, mb).sum())
        if lam != 0.0:
            val -= 0.5 * lam * float(b @ b)
        return val

    m = x @ beta
    obj = f(beta, m)
    mu, w = mean_var_vec(codes, ks, m)
    grad = x.T @ (y - mu)
    if lam != 0.0:
        grad = grad - lam * beta
    gnorm = float(np.linalg.norm(grad))
    iters = 0
    flat_streak = 0     # accepted steps gaining less than float resolution

    while gnorm > cfg.grad_tol and iters < cfg.max_iter:
        h = (x * w[:, None]).T @ x
        if lam != 0.0:
            h = h + lam * np.eye(beta.size)
        delta = _chol_solve(h, grad, context)
        gd = float(grad @ delta)
        if gd <= 0.0:
            break   # numerically not an ascent direction; give up at current point
        step = 1.0
        accepted = False
        for _ in range(cfg.max_backtracks + 1):
            cand = beta + step * delta
            mc = x @ cand
            objc = f(cand, mc)
            if objc >= obj + _ARMIJO * step * gd:
                accepted = True
                break
            step *= cfg.step_shrink
        if not accepted:
            break
        # asymptotically flat problems (e.g. a separated binomial row) crawl
        # forever with sub-resolution gains; two such steps in a row end it.
        # A healthy quadratic tail has at most one before the gradient check.
        if objc - obj < 1e-15 * max(1.0, abs(obj)):
            flat_streak += 1
        else:
            flat_streak = 0
        beta, m, obj = cand, mc, objc
        iters += 1
        bnorm = float(np.linalg.norm(beta))
        if bnorm > radius:
            beta = beta * (radius / bnorm)
            m = x @ beta
            mu, w = mean_var_vec(codes, ks, m)
            grad = x.T @ (y - mu)
            if lam != 0.0:
                grad = grad - lam * beta
            return SolveReport(solution=beta, iterations=iters,
                               final_grad_norm=float(np.linalg.norm(grad)),
                               converged=False, status="diverged")
        mu, w = mean_var_vec(codes, ks, m)
        grad = x.T @ (y - mu)
        if lam != 0.0:
            grad = grad - lam * beta
        gnorm = float(np.linalg.norm(grad))
        if flat_streak >= 2:
            break

    if gnorm <= cfg.grad_tol:
        return SolveReport(solution=beta, iterations=iters, final_grad_norm=gnorm,
                           converged=True, status="converged")
    status = "max_iter" if iters >= cfg.max_iter else "stalled"
    return SolveReport(solution=beta, iterations=iters, final_grad_norm=gnorm,
                       converged=False, status=status)


def _maximize_ball(y, x, codes, ks, init, cfg: NewtonConfig, c: float,
                   context: str) -> SolveReport:
    """Maximize the partial likelihood subject to ||beta|| <= c.

    The unconstrained optimum is tried first; if it violates the ball the KKT
    multiplier is located by a safeguarded secant on 1/||beta(lam)|| (the
    classic trust-region root find), each inner solve warm-started.  The
    result lands on the boundary from inside, so a later row-norm projection
    is a bitwise no-op.
    """
    rep = _maximize(y, x, codes, ks, init, cfg, context)
    nrm = float(np.linalg.norm(rep.solution))
    if nrm <= c and rep.status != "diverged":
        return rep

    def plain_obj(b):
        mb = x @ b
        return float(y @ mb - cumulant_vec(codes, ks, mb).sum())

    target_lo, target_hi = c * (1.0 - 1e-12), c
    lo = 0.0                      # lam with ||beta|| > c
    hi = None                     # lam with ||beta|| <= c
    warm = rep.solution * (c / nrm) if nrm > 0 else rep.solution
    lam, prev = 1.0, None         # prev = (lam, 1/nrm) for the secant
    best = None
    total = rep.iterations

    for _ in range(120):
        sub = _maximize(y, x, codes, ks, warm, cfg, context, lam=lam)
        total += sub.iterations
        warm = sub.solution
        nrm = float(np.linalg.norm(warm))
        if nrm > c:
            lo = lam
        else:
            hi = lam
            best = (warm.copy(), sub.final_grad_norm)
            if nrm >= target_lo:
                break
        # secant proposal on psi(lam) = 1/||beta(lam)||, safeguarded by the bracket
        psi = 1.0 / nrm if nrm > 0 else np.inf
        nxt = None
        if prev is not None and psi != prev[1]:
            nxt = lam + (1.0 / target_hi - psi) * (lam - prev[0]) / (psi - prev[1])
        prev = (lam, psi)
        if hi is None:
            lam = nxt if nxt is not None and nxt > lo else lam * 4.0
        else:
            lam = nxt if nxt is not None and lo < nxt < hi else 0.5 * (lo + hi)

    if best is None:    # never found a feasible iterate; fall back to scaling
        sol = warm * (c / max(float(np.linalg.norm(warm)), c))
        return SolveReport(solution=sol, iterations=total,
                           final_grad_norm=float("nan"), converged=False,
                           status="stalled")
    sol, gn = best
    # a feasible warm start is a lower bound on the constrained block optimum;
    # never hand back anything below it, so block ascent stays monotone even
    # when the multiplier search lands short of the boundary
    init_arr = np.array(init, dtype=np.float64).ravel()
    if float(np.linalg.norm(init_arr)) <= c and plain_obj(sol) < plain_obj(init_arr):
        return SolveReport(solution=init_arr, iterations=total,
                           final_grad_norm=float("nan"), converged=False,
                           status="stalled")
    return SolveReport(solution=sol, iterations=total, final_grad_norm=gn,
                       converged=True, status="converged")


def solve_row(data: ObservedMatrix, i, a, init, cfg: NewtonConfig,
              ball=None) -> SolveReport:
    """Maximize the row-i partial likelihood over theta_i with loadings a fixed.

    ball=c restricts the maximization to {||theta_i|| <= c}.
    """
    cols, vals = data.row_slice(i)
    if cols.size == 0:
        raise EmptyRowError(f"row {i} has no observed entries")
    a = np.asarray(a, dtype=np.float64)
    x = a[cols]
    if ball is None:
        return _maximize(vals, x, data.col_code[cols], data.col_k[cols],
                         init, cfg, f"at row {i}")
    return _maximize_ball(vals, x, data.col_code[cols], data.col_k[cols],
                          init, cfg, float(ball), f"at row {i}")


def solve_col(data: ObservedMatrix, j, theta, init, cfg: NewtonConfig,
              ball=None) -> SolveReport:
    """Maximize the column-j partial likelihood over a_j with scores theta fixed."""
    rows, vals = data.col_slice(j)
    if rows.size == 0:
        raise EmptyColumnError(f"column {j} has no observed entries")
    theta = np.asarray(theta, dtype=np.float64)
    codes = np.full(rows.size, data.col_code[j])
    ks = np.full(rows.size, data.col_k[j])
    x = theta[rows]
    if ball is None:
        return _maximize(vals, x, codes, ks, init, cfg, f"at column {j}")
    return _maximize_ball(vals, x, codes, ks, init, cfg, float(ball),
                          f"at column {j}")


def _solve_block(one_solve, count, data, fixed, inits, cfg, strict, ball):
    inits = np.asarray(inits, dtype=np.float64)
    if inits.shape[0] != count:
        raise ValueError(f"need {count} init rows, got {inits.shape[0]}")
    out = inits.copy()
    reports = []
    for t in range(count):
        try:
            rep = one_solve(data, t, fixed, inits[t], cfg, ball=ball)
        except (EmptyRowError, EmptyColumnError, SingularHessianError) as e:
            if strict:
                raise
            rep = SolveReport(solution=inits[t].copy(), iterations=0,
                              final_grad_norm=float("nan"), converged=False,
                              status=f"error:{type(e).__name__}")
        out[t] = rep.solution
        reports.append(rep)
    return out, reports


def solve_all_rows(data: ObservedMatrix, a, inits, cfg: NewtonConfig, strict=False,
                   ball=None):
    """Solve every row sequentially.  Bit-identical to looping solve_row.

    With strict=False a failed row keeps its init and the failure is recorded
    in its report; with strict=True the error propagates.
    """
    return _solve_block(solve_row, data.n, data, a, inits, cfg, strict, ball)


def solve_all_cols(data: ObservedMatrix, theta, inits, cfg: NewtonConfig, strict=False,
                   ball=None):
    """Column counterpart of solve_all_rows."""
    return _solve_block(solve_col, data.p, data, theta, inits, cfg, strict, ball)
