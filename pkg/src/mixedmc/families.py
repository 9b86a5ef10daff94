"""Exponential-family observation models for mixed-type data columns.

Each column of a data matrix carries one of three natural-parameter families:
normal (continuous), binomial with k trials (ordinal scores 0..k), or poisson
(counts).  The density of an observation y at natural parameter m is

    f(y | m) = exp{ y * m - b(m) + c(y) },

with the dispersion fixed at 1.  ``cumulant`` evaluates b, ``mean`` and
``variance`` its first two derivatives, ``log_density`` the full log f
including the carrier term c(y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln

NORMAL = 0
BINOMIAL = 1
POISSON = 2

_KIND_NAMES = {NORMAL: "normal", BINOMIAL: "binomial", POISSON: "poisson"}

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Family:
    """Observation model for one column.

    Parameters
    ----------
    kind : int
        One of NORMAL, BINOMIAL, POISSON.
    k : int
        Trial count for the binomial family; ignored (and forced to 1)
        otherwise.  k = 1 is ordinary Bernoulli, k > 1 models ordinal
        scores in {0, ..., k}.
    phi : float
        Dispersion.  Fixed at 1.0; any other value is rejected.
    """

    kind: int
    k: int = 1
    phi: float = 1.0

    def __post_init__(self):
        if self.kind not in _KIND_NAMES:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == BINOMIAL:
            if not isinstance(self.k, (int, np.integer)) or self.k < 1:
                raise ValueError(f"binomial trial count must be a positive integer, got {self.k!r}")
        elif self.k != 1:
            raise ValueError(f"trial count only applies to the binomial family, got k={self.k!r}")
        if self.phi != 1.0:
            raise ValueError("dispersion is fixed at 1.0")

    @property
    def name(self) -> str:
        return format_family(self)


def normal() -> Family:
    return Family(NORMAL)


def binomial(k: int) -> Family:
    return Family(BINOMIAL, k=int(k))


def poisson() -> Family:
    return Family(POISSON)


def format_family(f: Family) -> str:
    """Serialize a family: ``normal``, ``binomial:<k>``, ``poisson``."""
    if f.kind == BINOMIAL:
        return f"binomial:{f.k}"
    return _KIND_NAMES[f.kind]


def parse_family(text: str) -> Family:
    """Inverse of :func:`format_family`.  Raises ValueError on junk."""
    text = text.strip()
    if text == "normal":
        return normal()
    if text == "poisson":
        return poisson()
    if text.startswith("binomial:"):
        tail = text[len("binomial:"):]
        try:
            k = int(tail)
        except ValueError:
            raise ValueError(f"bad binomial trial count {tail!r}") from None
        if k < 1 or str(k) != tail:
            raise ValueError(f"bad binomial trial count {tail!r}")
        return binomial(k)
    raise ValueError(f"unknown family {text!r}")


# === vectorized kernels over per-entry family codes =========================
# The solvers and likelihood code evaluate b, b', b'' over flat arrays of
# natural parameters whose entries may belong to different columns.  They
# pass parallel arrays of family codes and trial counts.

def cumulant_vec(codes, ks, m):
    """b(m) entrywise; codes/ks/m are parallel 1-d arrays."""
    m = np.asarray(m, dtype=np.float64)
    out = np.empty_like(m)
    nm = codes == NORMAL
    bm = codes == BINOMIAL
    pm = codes == POISSON
    if nm.any():
        out[nm] = 0.5 * m[nm] ** 2
    if bm.any():
        out[bm] = ks[bm] * np.logaddexp(0.0, m[bm])
    if pm.any():
        out[pm] = np.exp(m[pm])
    return out


def mean_vec(codes, ks, m):
    """b'(m) entrywise."""
    m = np.asarray(m, dtype=np.float64)
    out = np.empty_like(m)
    nm = codes == NORMAL
    bm = codes == BINOMIAL
    pm = codes == POISSON
    if nm.any():
        out[nm] = m[nm]
    if bm.any():
        out[bm] = ks[bm] * expit(m[bm])
    if pm.any():
        out[pm] = np.exp(m[pm])
    return out


def mean_var_vec(codes, ks, m):
    """(b'(m), b''(m)) entrywise, sharing the sigmoid evaluation."""
    m = np.asarray(m, dtype=np.float64)
    mu = np.empty_like(m)
    var = np.empty_like(m)
    nm = codes == NORMAL
    bm = codes == BINOMIAL
    pm = codes == POISSON
    if nm.any():
        mu[nm] = m[nm]
        var[nm] = 1.0
    if bm.any():
        s = expit(m[bm])
        kb = ks[bm]
        mu[bm] = kb * s
        var[bm] = kb * s * (1.0 - s)
    if pm.any():
        e = np.exp(m[pm])
        mu[pm] = e
        var[pm] = e
    return mu, var


def log_density_vec(codes, ks, y, m):
    """log f(y | m) entrywise, including the carrier term c(y).

    Assumes y has already been validated against each family's support.
    """
    y = np.asarray(y, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    out = y * m - cumulant_vec(codes, ks, m)
    nm = codes == NORMAL
    bm = codes == BINOMIAL
    pm = codes == POISSON
    if nm.any():
        out[nm] += -0.5 * y[nm] ** 2 - _LOG_SQRT_2PI
    if bm.any():
        kb = ks[bm]
        yb = y[bm]
        out[bm] += gammaln(kb + 1.0) - gammaln(yb + 1.0) - gammaln(kb - yb + 1.0)
    if pm.any():
        out[pm] += -gammaln(y[pm] + 1.0)
    return out


def check_support_vec(codes, ks, y):
    """Raise ValueError unless every y lies in its family's support."""
    y = np.asarray(y, dtype=np.float64)
    if not np.isfinite(y).all():
        raise ValueError("observation outside support: non-finite value")
    bm = codes == BINOMIAL
    if bm.any():
        yb = y[bm]
        if ((yb != np.floor(yb)) | (yb < 0) | (yb > ks[bm])).any():
            raise ValueError("observation outside support: binomial values must be integers in 0..k")
    pm = codes == POISSON
    if pm.any():
        yp = y[pm]
        if ((yp != np.floor(yp)) | (yp < 0)).any():
            raise ValueError("observation outside support: poisson values must be non-negative integers")


# === scalar API ==============================================================

def _as_finite_scalar(m) -> float:
    m = float(m)
    if not math.isfinite(m):
        raise ValueError(f"natural parameter must be finite, got {m!r}")
    return m


def cumulant(f: Family, m) -> float:
    """Cumulant b(m): m^2/2 (normal), k*log(1+e^m) (binomial), e^m (poisson)."""
    m = _as_finite_scalar(m)
    if f.kind == NORMAL:
        return 0.5 * m * m
    if f.kind == BINOMIAL:
        return f.k * float(np.logaddexp(0.0, m))
    return math.exp(m)


def mean(f: Family, m) -> float:
    """Mean response b'(m)."""
    m = _as_finite_scalar(m)
    if f.kind == NORMAL:
        return m
    if f.kind == BINOMIAL:
        return f.k * float(expit(m))
    return math.exp(m)


def variance(f: Family, m) -> float:
    """Variance b''(m); strictly positive for all finite m."""
    m = _as_finite_scalar(m)
    if f.kind == NORMAL:
        return 1.0
    if f.kind == BINOMIAL:
        s = float(expit(m))
        return f.k * s * (1.0 - s)
    return math.exp(m)


def check_support(f: Family, y) -> float:
    """Validate a single observation against the family's support."""
    y = float(y)
    if not math.isfinite(y):
        raise ValueError(f"observation outside support: {y!r}")
    if f.kind == BINOMIAL:
        if y != math.floor(y) or y < 0 or y > f.k:
            raise ValueError(f"observation outside binomial(0..{f.k}) support: {y!r}")
    elif f.kind == POISSON:
        if y != math.floor(y) or y < 0:
            raise ValueError(f"observation outside poisson support: {y!r}")
    return y


def log_density(f: Family, y, m) -> float:
    """log f(y | m) including the carrier term, so densities are comparable
    across families and integrate (sum) to one over the support."""
    y = check_support(f, y)
    m = _as_finite_scalar(m)
    if f.kind == NORMAL:
        return y * m - 0.5 * m * m - 0.5 * y * y - _LOG_SQRT_2PI
    if f.kind == BINOMIAL:
        binom_coef = gammaln(f.k + 1.0) - gammaln(y + 1.0) - gammaln(f.k - y + 1.0)
        return y * m - f.k * float(np.logaddexp(0.0, m)) + float(binom_coef)
    return y * m - math.exp(m) - float(gammaln(y + 1.0))


def sample(f: Family, m, rng: np.random.Generator):
    """Draw one observation at natural parameter m.  Deterministic given rng state."""
    m = _as_finite_scalar(m)
    if f.kind == NORMAL:
        return m + rng.standard_normal()
    if f.kind == BINOMIAL:
        return float(rng.binomial(f.k, expit(m)))
    return float(rng.poisson(math.exp(m)))
