"""Simulation settings registry, data generation, and the benchmark driver.

The 24 settings cross rank r in {3, 5}, column layout (all ordinal vs. half
ordinal half continuous), observation probability in {0.6, 0.2}, and three
sizes (400x200, 800x400, 1600x800).  Eight estimation procedures pair the two
initial estimators with no refinement, method 1, method 2, and method 2'
(5 splits).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from . import seeds
from .data import ObservedMatrix, from_dense
from .families import BINOMIAL, Family, binomial, normal
from .initial import CjmleConfig, NbeConfig, cjmle_fit, init_from_data, nbe_fit
from .linalg import FactorPair, max_norm_error, scaled_frobenius_error
from .refine import RefineConfig, refine_multi_split, refine_no_split

ALL_ORDINAL = "ordinal"
HALF_CONTINUOUS = "mixed"

ORDINAL_TRIALS = 5

PROCEDURE_LABELS = {
    1: "nbe",
    2: "nbe+m1",
    3: "nbe+m2",
    4: "nbe+m2prime",
    5: "cjmle",
    6: "cjmle+m1",
    7: "cjmle+m2",
    8: "cjmle+m2prime",
}

CSV_HEADER = "setting,procedure,rep,seed,frob_scaled,max_norm,wall_ms,status"


@dataclass(frozen=True)
class SimSetting:
    setting_id: int
    n: int
    p: int
    r: int
    obs_prob: float
    layout: str   # ALL_ORDINAL or HALF_CONTINUOUS


@dataclass
class RunResult:
    setting_id: int
    procedure_id: int
    replication: int
    seed: int
    frob_scaled: float
    max_norm: float
    wall_ms: int
    status: str = "ok"


def settings_registry() -> list[SimSetting]:
    """The 24 canonical settings, id 1..24."""
    sizes = [(400, 200), (800, 400), (1600, 800)]
    out = []
    sid = 1
    for r, layout in ((3, ALL_ORDINAL), (3, HALF_CONTINUOUS),
                      (5, ALL_ORDINAL), (5, HALF_CONTINUOUS)):
        for pi in (0.6, 0.2):
            for n, p in sizes:
                out.append(SimSetting(setting_id=sid, n=n, p=p, r=r,
                                      obs_prob=pi, layout=layout))
                sid += 1
    return out


def scaled_clone(s: SimSetting, scale: float) -> SimSetting:
    """Down-scaled copy of a setting (same id, rank, layout, pi).

    Dimensions are rounded, kept >= 4, and p is kept even so the mixed
    layout still splits cleanly.
    """
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale!r}")
    n = max(4, int(round(s.n * scale)))
    p = max(4, 2 * int(round(s.p * scale / 2)))
    return replace(s, n=n, p=p)


def column_families(s: SimSetting) -> list[Family]:
    if s.layout == ALL_ORDINAL:
        return [binomial(ORDINAL_TRIALS) for _ in range(s.p)]
    if s.layout == HALF_CONTINUOUS:
        half = s.p // 2
        return [binomial(ORDINAL_TRIALS) if j < half else normal() for j in range(s.p)]
    raise ValueError(f"unknown layout {s.layout!r}")


def generate_truth(s: SimSetting, rng: np.random.Generator):
    """Factors i.i.d. Uniform[-0.9, 0.9] (theta drawn first, then a)."""
    theta = rng.uniform(-0.9, 0.9, size=(s.n, s.r))
    a = rng.uniform(-0.9, 0.9, size=(s.p, s.r))
    pair = FactorPair(theta=theta, a=a)
    return pair, pair.signal()


def generate_observation(m_star, s: SimSetting, rng: np.random.Generator) -> ObservedMatrix:
    """Bernoulli(pi) mask, responses drawn per column family at m*.

    The passed stream is split into a mask child and a noise child so the two
    roles never share a stream.  Sampling walks columns left to right.
    """
    m_star = np.asarray(m_star, dtype=np.float64)
    if m_star.shape != (s.n, s.p):
        raise ValueError(f"truth shape {m_star.shape} does not match setting")
    mask_rng, noise_rng = rng.spawn(2)
    mask = mask_rng.random((s.n, s.p)) < s.obs_prob
    specs = column_families(s)
    y = np.zeros((s.n, s.p))
    for j, fam in enumerate(specs):
        idx = mask[:, j]
        m = m_star[idx, j]
        if fam.kind == BINOMIAL:
            y[idx, j] = noise_rng.binomial(fam.k, expit(m))
        else:
            y[idx, j] = m + noise_rng.standard_normal(m.size)
    return from_dense(y, mask, specs)


# === procedures ==============================================================

def _nbe_cfg(r):
    return NbeConfig(rho=float(r), r=r)


def _cjmle_cfg(r):
    return CjmleConfig(c=math.sqrt(r), r=r)


def _fit_nbe(data, r):
    return nbe_fit(data, _nbe_cfg(r))


def _fit_cjmle(data, r):
    _, m_hat = cjmle_fit(data, _cjmle_cfg(r), init_from_data(data, r))
    return m_hat


def run_procedure(procedure_id, data: ObservedMatrix, r, rng: np.random.Generator) -> np.ndarray:
    """One estimation procedure (1..8) on prepared data; rng feeds the row
    splits of procedures 3, 4, 7, 8 and is unused otherwise."""
    if procedure_id not in PROCEDURE_LABELS:
        raise ValueError(f"unknown procedure {procedure_id!r}")
    base = _fit_nbe if procedure_id <= 4 else _fit_cjmle
    variant = (procedure_id - 1) % 4   # 0 none, 1 method 1, 2 method 2, 3 method 2'
    if variant == 0:
        return base(data, r)
    cfg = RefineConfig(r=r)
    if variant == 1:
        return refine_no_split(data, base(data, r), cfg)
    tot = 1 if variant == 2 else 5
    return refine_multi_split(data, lambda block: base(block, r),
                              replace(cfg, tot=tot), rng)


def rep_stream_tags(base_seed, setting_id, rep):
    """Tag tuples used by one replication; the collision audit checks these."""
    tags = [
        (base_seed, setting_id, rep, seeds.ROLE_TRUTH),
        (base_seed, setting_id, rep, seeds.ROLE_OBSERVATION),
    ]
    tags += [(base_seed, setting_id, rep, seeds.ROLE_SPLIT_BASE + pid)
             for pid in PROCEDURE_LABELS]
    return tags


def run_procedures(s: SimSetting, procedures, reps, base_seed) -> list[RunResult]:
    """Benchmark driver: fresh truth and observation per replication, every
    selected procedure fitted on the identical ObservedMatrix.

    A procedure failure is recorded as an error row and the run continues.
    Results come out in canonical (setting, procedure, replication) order.
    """
    procedures = sorted(set(int(pid) for pid in procedures))
    for pid in procedures:
        if pid not in PROCEDURE_LABELS:
            raise ValueError(f"unknown procedure {pid!r}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    by_proc: dict[int, list[RunResult]] = {pid: [] for pid in procedures}
    for rep in range(reps):
        truth_rng = seeds.stream(base_seed, s.setting_id, rep, seeds.ROLE_TRUTH)
        obs_rng = seeds.stream(base_seed, s.setting_id, rep, seeds.ROLE_OBSERVATION)
        _, m_star = generate_truth(s, truth_rng)
        data = generate_observation(m_star, s, obs_rng)
        for pid in procedures:
            split_rng = seeds.stream(base_seed, s.setting_id, rep,
                                     seeds.ROLE_SPLIT_BASE + pid)
            t0 = time.monotonic()
            try:
                m_est = run_procedure(pid, data, s.r, split_rng)
                frob = scaled_frobenius_error(m_est, m_star)
                mx = max_norm_error(m_est, m_star)
                status = "ok"
            except Exception as e:
                frob = float("nan")
                mx = float("nan")
                status = f"error:{type(e).__name__}"
            wall_ms = int(round(1000.0 * (time.monotonic() - t0)))
            by_proc[pid].append(RunResult(
                setting_id=s.setting_id, procedure_id=pid, replication=rep,
                seed=int(base_seed), frob_scaled=frob, max_norm=mx,
                wall_ms=wall_ms, status=status))
    out = []
    for pid in procedures:
        out.extend(by_proc[pid])
    return out


# === CSV contract ============================================================

def write_results_csv(path, results, timings=False) -> None:
    """Write RunResults under the benchmark CSV header.

    wall_ms is zeroed unless timings=True: measured times would break
    byte-level reproducibility of the output file.
    """
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for res in results:
            wall = res.wall_ms if timings else 0
            fh.write(f"{res.setting_id},{res.procedure_id},{res.replication},"
                     f"{res.seed},{res.frob_scaled!r},{res.max_norm!r},"
                     f"{wall},{res.status}\n")


def read_results_csv(path) -> list[RunResult]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"bad results CSV header in {path}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 8:
            raise ValueError(f"bad results row {ln!r}")
        out.append(RunResult(
            setting_id=int(parts[0]), procedure_id=int(parts[1]),
            replication=int(parts[2]), seed=int(parts[3]),
            frob_scaled=float(parts[4]), max_norm=float(parts[5]),
            wall_ms=int(parts[6]), status=parts[7]))
    return out
