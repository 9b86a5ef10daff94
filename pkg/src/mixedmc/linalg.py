"""Matrix norms, truncated SVD with a fixed sign convention, row-norm projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SvdTriple:
    u: np.ndarray   # n x r, orthonormal columns
    d: np.ndarray   # r, descending, non-negative
    v: np.ndarray   # p x r, orthonormal columns


@dataclass
class FactorPair:
    theta: np.ndarray   # n x r row scores
    a: np.ndarray       # p x r column loadings

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.theta.ndim != 2 or self.a.ndim != 2 or self.theta.shape[1] != self.a.shape[1]:
            raise ValueError(f"factor shapes {self.theta.shape} and {self.a.shape} do not pair")

    def signal(self) -> np.ndarray:
        return self.theta @ self.a.T


def scaled_frobenius_error(est, truth) -> float:
    """||est - truth||_F / sqrt(n p)."""
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {truth.shape}")
    n, p = est.shape
    return float(np.linalg.norm(est - truth) / np.sqrt(n * p))


def max_norm_error(est, truth) -> float:
    """max_ij |est_ij - truth_ij|."""
    est = np.asarray(est, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {truth.shape}")
    return float(np.abs(est - truth).max())


def two_to_inf_norm(x) -> float:
    """Largest euclidean row norm."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt((x * x).sum(axis=1)).max())


# Rows already within c (up to a 1e-13 slack) are returned bit-identical, so
# applying the projection twice is exactly a no-op.
_ROW_SLACK = 1e-13


def project_two_to_inf(x, c) -> np.ndarray:
    """Rescale rows with ||row|| > c onto the radius-c sphere; others untouched."""
    x = np.asarray(x, dtype=np.float64)
    if c <= 0:
        raise ValueError(f"radius must be positive, got {c!r}")
    norms = np.sqrt((x * x).sum(axis=1))
    over = norms > c + _ROW_SLACK
    if not over.any():
        return x.copy()
    scale = np.ones_like(norms)
    scale[over] = c / norms[over]
    return x * scale[:, None]


def top_r_svd(m, r) -> SvdTriple:
    """Top-r singular triple of m with deterministic signs.

    Each right singular vector is flipped so its largest-magnitude entry is
    positive (ties broken at the lowest index, which argmax already does).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("need a 2-d matrix")
    if not (1 <= r <= min(m.shape)):
        raise ValueError(f"rank {r} out of range for shape {m.shape}")
    u, d, vt = np.linalg.svd(m, full_matrices=False)
    u, d, v = u[:, :r], d[:r], vt[:r].T
    flip = np.sign(v[np.abs(v).argmax(axis=0), np.arange(r)])
    flip[flip == 0] = 1.0
    return SvdTriple(u=u * flip, d=d.copy(), v=v * flip)
