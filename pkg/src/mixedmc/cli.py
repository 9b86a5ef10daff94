"""Command-line front end: simulate | fit | refine | evaluate | reproduce.

Every command is deterministic given its full argument vector: all randomness
derives from --seed through the documented stream-splitting scheme, output
floats are written with round-trip repr, and timing fields are zeroed unless
--timings is passed (measured times go to stderr instead).  --threads is
accepted and validated for interface stability; execution is sequential, so
any value produces identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import sys
import time

import numpy as np

from . import seeds
from .data import (DataFormatError, read_dense_csv, read_triplets,
                   write_dense_csv)
from .evaluate import holdout_split, ingest_movielens, test_loglik
from .initial import (CjmleConfig, NbeConfig, cjmle_fit, init_from_data,
                      nbe_fit)
from .linalg import two_to_inf_norm
from .refine import RefineConfig, refine_multi_split, refine_no_split
from .simbench import (PROCEDURE_LABELS, run_procedures, scaled_clone,
                       settings_registry, write_results_csv)

EX_OK = 0
EX_FATAL = 1
EX_PARTIAL = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66

MOVIELENS_HELP = (
    "MovieLens-100K data not found. Download ml-100k.zip from "
    "https://grouplens.org/datasets/movielens/100k/, unzip it, and pass the "
    "path to its u.data file via --data."
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # conventional sysexits: usage problems exit 64, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


def _log(msg):
    print(msg, file=sys.stderr)


# --- config file -------------------------------------------------------------

def _load_config_argv(path, parser):
    """Flat key=value lines -> argv fragment; flags given on the real command
    line come later and win.  Unknown keys are rejected."""
    known = {s for a in parser._actions for s in a.option_strings}
    frag = []
    try:
        fh = open(path)
    except FileNotFoundError:
        raise _UsageError(f"config file not found: {path}") from None
    with fh:
        for lineno, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            if "=" not in ln:
                raise _UsageError(f"{path}:{lineno}: expected key=value")
            key, val = (part.strip() for part in ln.split("=", 1))
            opt = "--" + key.replace("_", "-")
            if opt not in known:
                raise _UsageError(f"{path}:{lineno}: unknown key {key!r}")
            if val.lower() in ("true", "false"):
                if val.lower() == "true":
                    frag.append(opt)
            else:
                frag.extend([opt, val])
    return frag


def _common_flags(sub):
    sub.add_argument("--config", help="flat key=value config file; flags override it")
    sub.add_argument("--seed", type=int, default=0, help="u64 base seed (default 0)")
    sub.add_argument("--threads", type=int, default=1,
                     help="parallelism cap; outputs are identical at any value")
    sub.add_argument("--timings", action="store_true",
                     help="write measured wall_ms into outputs (breaks byte reproducibility)")


def _build_parser():
    top = _Parser(prog="mixedmc",
                  description="Mixed-data matrix completion: simulate, fit, refine, evaluate, reproduce.")
    subs = top.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="run benchmark procedures on a simulation setting")
    sim.add_argument("--setting", type=int, help="setting id 1..24")
    sim.add_argument("--n", type=int, help="rows of a custom setting")
    sim.add_argument("--p", type=int, help="columns of a custom setting")
    sim.add_argument("--rank", type=int, help="rank of a custom setting")
    sim.add_argument("--pi", type=float, help="observation probability of a custom setting")
    sim.add_argument("--layout", choices=["ordinal", "mixed"], help="custom setting layout")
    sim.add_argument("--procedures", default="1,2,3,4,5,6,7,8",
                     help="comma-separated ids from 1..8")
    sim.add_argument("--reps", type=int, default=20)
    sim.add_argument("--scale", type=float, default=1.0,
                     help="down-scale the setting's dimensions")
    sim.add_argument("--out", required=True, help="output CSV path")
    _common_flags(sim)

    fit = subs.add_parser("fit", help="fit an initial estimator and write the dense estimate")
    fit.add_argument("--data", required=True)
    fit.add_argument("--format", choices=["triplet", "movielens"], default="triplet")
    fit.add_argument("--init", choices=["cjmle", "nbe"], required=True)
    fit.add_argument("--rank", type=int, required=True)
    fit.add_argument("--c", type=float, help="factor row-norm bound (default sqrt(rank))")
    fit.add_argument("--rho", type=float, help="max-norm bound (default rank)")
    fit.add_argument("--out", required=True, help="output dense CSV path")
    fit.add_argument("--verify", action="store_true",
                     help="re-check constraints and file round-trip after writing")
    _common_flags(fit)

    ref = subs.add_parser("refine", help="refine an initial estimate entrywise")
    ref.add_argument("--data", required=True)
    ref.add_argument("--format", choices=["triplet", "movielens"], default="triplet")
    ref.add_argument("--method", choices=["1", "2", "2prime"], required=True)
    ref.add_argument("--mhat", help="dense CSV of the initial estimate (method 1)")
    ref.add_argument("--init", choices=["cjmle", "nbe"], default="nbe",
                     help="block-restricted initial fitter (methods 2 and 2prime)")
    ref.add_argument("--rank", type=int, required=True)
    ref.add_argument("--c2", type=float, help="loading row-norm bound (default 2*sqrt(rank/p))")
    ref.add_argument("--tot", type=int, default=5, help="number of splits for 2prime")
    ref.add_argument("--out", required=True)
    _common_flags(ref)

    ev = subs.add_parser("evaluate", help="holdout split, fit on train, report log-likelihoods")
    ev.add_argument("--data", required=True)
    ev.add_argument("--format", choices=["triplet", "movielens"], default="triplet")
    ev.add_argument("--test-frac", type=float, default=0.2)
    ev.add_argument("--init", choices=["cjmle", "nbe"], required=True)
    ev.add_argument("--refine", choices=["none", "1", "2", "2prime"], default="none")
    ev.add_argument("--rank", type=int, required=True)
    ev.add_argument("--c", type=float)
    ev.add_argument("--rho", type=float)
    ev.add_argument("--c2", type=float)
    ev.add_argument("--tot", type=int, default=5)
    ev.add_argument("--out", help="write the JSON record here instead of stdout")
    _common_flags(ev)

    rep = subs.add_parser("reproduce", help="canned result pipelines")
    rep.add_argument("target", choices=["figure1-mini", "figure2-mini", "movielens-table3-row"])
    rep.add_argument("--data", help="u.data path for the movielens target")
    rep.add_argument("--out", required=True, help="output directory")
    rep.add_argument("--reps", type=int, default=5)
    rep.add_argument("--scale", type=float, default=0.25)
    rep.add_argument("--procedures", default="1,2,3,4,5,6,7,8")
    _common_flags(rep)

    return top, {"simulate": sim, "fit": fit, "refine": ref, "evaluate": ev, "reproduce": rep}


# --- helpers ------------------------------------------------------------------

def _parse_procedures(text):
    try:
        pids = sorted(set(int(tok) for tok in text.split(",") if tok.strip()))
    except ValueError:
        raise _UsageError(f"bad procedure list {text!r}") from None
    if not pids or any(pid not in PROCEDURE_LABELS for pid in pids):
        raise _UsageError(f"procedures must be a subset of 1..8, got {text!r}")
    return pids


def _load_data(path, fmt):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    if fmt == "movielens":
        return ingest_movielens(path)
    return read_triplets(path)


def _fit_initial(data, kind, rank, c=None, rho=None):
    if rank < 1 or rank > min(data.n, data.p):
        raise _UsageError(f"rank {rank} out of range for {data.n}x{data.p} data")
    if kind == "cjmle":
        cfg = CjmleConfig(c=c if c is not None else math.sqrt(rank), r=rank)
        pair, m_hat = cjmle_fit(data, cfg, init_from_data(data, rank))
        return m_hat, pair, cfg
    cfg = NbeConfig(rho=rho if rho is not None else float(rank), r=rank)
    return nbe_fit(data, cfg), None, cfg


def _block_fitter(kind, rank, c=None, rho=None):
    def fitter(block):
        m_hat, _, _ = _fit_initial(block, kind, rank, c=c, rho=rho)
        return m_hat
    return fitter


def _refine_dispatch(method, data, rank, c2, tot, init_kind, seed, m_hat=None,
                     c=None, rho=None):
    cfg = RefineConfig(r=rank, c2=c2)
    if method == "1":
        if m_hat is None:
            m_hat, _, _ = _fit_initial(data, init_kind, rank, c=c, rho=rho)
        return refine_no_split(data, m_hat, cfg)
    tot_eff = 1 if method == "2" else tot
    rng = seeds.stream(seed, 0, 0, seeds.ROLE_SPLIT_BASE)
    return refine_multi_split(data, _block_fitter(init_kind, rank, c=c, rho=rho),
                              RefineConfig(r=rank, c2=c2, tot=tot_eff), rng)


# --- commands -----------------------------------------------------------------

def _cmd_simulate(args):
    if args.setting is not None:
        registry = {s.setting_id: s for s in settings_registry()}
        if args.setting not in registry:
            raise _UsageError(f"unknown setting {args.setting}")
        setting = registry[args.setting]
    else:
        custom = (args.n, args.p, args.rank, args.pi, args.layout)
        if any(v is None for v in custom):
            raise _UsageError("pass --setting or all of --n --p --rank --pi --layout")
        from .simbench import ALL_ORDINAL, HALF_CONTINUOUS, SimSetting
        layout = ALL_ORDINAL if args.layout == "ordinal" else HALF_CONTINUOUS
        if not (0.0 < args.pi <= 1.0):
            raise _UsageError(f"pi must lie in (0,1], got {args.pi}")
        setting = SimSetting(setting_id=0, n=args.n, p=args.p, r=args.rank,
                             obs_prob=args.pi, layout=layout)
    if args.scale != 1.0:
        setting = scaled_clone(setting, args.scale)
    if args.reps < 1:
        raise _UsageError("--reps must be >= 1")
    pids = _parse_procedures(args.procedures)
    t0 = time.monotonic()
    results = run_procedures(setting, pids, args.reps, args.seed)
    _log(f"simulate: {len(results)} runs in {time.monotonic() - t0:.1f}s")
    for res in results:
        if res.status != "ok":
            _log(f"  procedure {res.procedure_id} rep {res.replication}: {res.status}")
    write_results_csv(args.out, results, timings=args.timings)
    return EX_PARTIAL if any(r.status != "ok" for r in results) else EX_OK


def _cmd_fit(args):
    data = _load_data(args.data, args.format)
    t0 = time.monotonic()
    m_hat, pair, cfg = _fit_initial(data, args.init, args.rank, c=args.c, rho=args.rho)
    _log(f"fit: {args.init} rank {args.rank} on {data.n}x{data.p} "
         f"in {time.monotonic() - t0:.1f}s")
    write_dense_csv(args.out, m_hat)
    if args.verify:
        back = read_dense_csv(args.out)
        if back.shape != m_hat.shape or float(np.abs(back - m_hat).max()) > 0.0:
            _log("verify: FAIL round-trip mismatch")
            return EX_FATAL
        if args.init == "cjmle":
            worst = max(two_to_inf_norm(pair.theta), two_to_inf_norm(pair.a))
            ok = worst <= cfg.c + 1e-12
            _log(f"verify: factor row-norm bound {worst:.6f} <= {cfg.c:.6f} "
                 f"{'ok' if ok else 'VIOLATED'}")
        else:
            radius = cfg.rho * math.sqrt(cfg.r * data.n * data.p)
            mx = float(np.abs(m_hat).max())
            nuc = float(np.linalg.svd(m_hat, compute_uv=False).sum())
            ok = mx <= cfg.rho + 1e-6 and nuc <= radius * (1.0 + 1e-6)
            _log(f"verify: max-norm {mx:.6f} <= {cfg.rho:.6f}, "
                 f"nuclear {nuc:.3f} <= {radius:.3f} {'ok' if ok else 'VIOLATED'}")
        if not ok:
            return EX_FATAL
    return EX_OK


def _cmd_refine(args):
    data = _load_data(args.data, args.format)
    m_hat = None
    if args.method == "1":
        if args.mhat is None:
            raise _UsageError("method 1 needs --mhat")
        if not os.path.exists(args.mhat):
            raise FileNotFoundError(args.mhat)
        m_hat = read_dense_csv(args.mhat)
        if m_hat.shape != (data.n, data.p):
            raise DataFormatError(
                f"initial estimate is {m_hat.shape[0]}x{m_hat.shape[1]}, "
                f"data is {data.n}x{data.p}")
    t0 = time.monotonic()
    out = _refine_dispatch(args.method, data, args.rank, args.c2, args.tot,
                           args.init, args.seed, m_hat=m_hat)
    _log(f"refine: method {args.method} in {time.monotonic() - t0:.1f}s")
    write_dense_csv(args.out, out)
    return EX_OK


def _cmd_evaluate(args):
    data = _load_data(args.data, args.format)
    if not (0.0 < args.test_frac < 1.0):
        raise _UsageError(f"--test-frac must lie in (0,1), got {args.test_frac}")
    split = holdout_split(data, args.test_frac,
                          seeds.stream(args.seed, 0, 0, seeds.ROLE_HOLDOUT))
    t0 = time.monotonic()
    procedure = args.init
    if args.refine in ("2", "2prime"):
        # split-based methods fit their own block-restricted initials
        m_hat = _refine_dispatch(args.refine, split.train, args.rank, args.c2,
                                 args.tot, args.init, args.seed,
                                 c=args.c, rho=args.rho)
    else:
        m_hat, _, _ = _fit_initial(split.train, args.init, args.rank, c=args.c, rho=args.rho)
        if args.refine == "1":
            m_hat = _refine_dispatch("1", split.train, args.rank, args.c2,
                                     args.tot, args.init, args.seed, m_hat=m_hat,
                                     c=args.c, rho=args.rho)
    if args.refine != "none":
        procedure += {"1": "+m1", "2": "+m2", "2prime": "+m2prime"}[args.refine]
    wall_ms = int(round(1000.0 * (time.monotonic() - t0)))
    record = {
        "train_ll": test_loglik(m_hat, split.train),
        "test_ll": test_loglik(m_hat, split.test),
        "rank": args.rank,
        "procedure": procedure,
        "seed": args.seed,
        "wall_ms": wall_ms if args.timings else 0,
    }
    text = json.dumps(record, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    _log(f"evaluate: fitted in {wall_ms} ms")
    return EX_OK


def _median_summary(results, pids):
    lines = []
    for pid in pids:
        rows = [r for r in results if r.procedure_id == pid and r.status == "ok"]
        if not rows:
            lines.append(f"procedure {pid} ({PROCEDURE_LABELS[pid]}): all failed")
            continue
        fr = statistics.median(r.frob_scaled for r in rows)
        mx = statistics.median(r.max_norm for r in rows)
        lines.append(f"procedure {pid} ({PROCEDURE_LABELS[pid]}): "
                     f"median frob_scaled={fr!r} max_norm={mx!r}")
    return lines


def _cmd_reproduce(args):
    os.makedirs(args.out, exist_ok=True)
    pids = _parse_procedures(args.procedures)
    if args.target in ("figure1-mini", "figure2-mini"):
        sid = 1 if args.target == "figure1-mini" else 4
        setting = scaled_clone({s.setting_id: s for s in settings_registry()}[sid],
                               args.scale)
        results = run_procedures(setting, pids, args.reps, args.seed)
        csv_path = os.path.join(args.out, f"{args.target}.csv")
        write_results_csv(csv_path, results, timings=args.timings)
        for ln in _median_summary(results, pids):
            print(ln)
        return EX_PARTIAL if any(r.status != "ok" for r in results) else EX_OK

    # movielens-table3-row: rank-3 test log-likelihood per procedure
    if not args.data or not os.path.exists(args.data):
        _log(MOVIELENS_HELP)
        return EX_NOINPUT
    data = ingest_movielens(args.data)
    split = holdout_split(data, 0.2, seeds.stream(args.seed, 0, 0, seeds.ROLE_HOLDOUT))
    rank = 3
    records = {}
    for pid in pids:
        t0 = time.monotonic()
        init_kind = "nbe" if pid <= 4 else "cjmle"
        method = {1: None, 2: "1", 3: "2", 0: "2prime"}[pid % 4]
        if method in ("2", "2prime"):
            m_hat = _refine_dispatch(method, split.train, rank, None, 5,
                                     init_kind, args.seed)
        else:
            m_hat, _, _ = _fit_initial(split.train, init_kind, rank)
            if method == "1":
                m_hat = _refine_dispatch("1", split.train, rank, None, 5,
                                         init_kind, args.seed, m_hat=m_hat)
        records[pid] = test_loglik(m_hat, split.test)
        _log(f"procedure {pid} done in {time.monotonic() - t0:.1f}s")
    out_path = os.path.join(args.out, "movielens-table3-row.json")
    with open(out_path, "w") as fh:
        fh.write(json.dumps({PROCEDURE_LABELS[pid]: ll for pid, ll in records.items()},
                            sort_keys=True) + "\n")
    for pid, ll in records.items():
        print(f"procedure {pid} ({PROCEDURE_LABELS[pid]}): test_ll={ll!r}")
    return EX_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "refine": _cmd_refine,
    "evaluate": _cmd_evaluate,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    top, subs = _build_parser()
    try:
        # config file values act as defaults: splice them in before the
        # explicit flags so the command line wins
        if argv and argv[0] in subs and "--config" in argv:
            at = argv.index("--config")
            if at + 1 >= len(argv):
                raise _UsageError("--config needs a path")
            frag = _load_config_argv(argv[at + 1], subs[argv[0]])
            argv = [argv[0]] + frag + argv[1:at] + argv[at + 2:]
        args = top.parse_args(argv)
        if args.threads < 1:
            raise _UsageError("--threads must be >= 1")
        if args.seed < 0:
            raise _UsageError("--seed must be non-negative")
        return _COMMANDS[args.command](args)
    except _UsageError as e:
        _log(f"usage error: {e}")
        return EX_USAGE
    except FileNotFoundError as e:
        _log(f"missing input: {e}")
        return EX_NOINPUT
    except DataFormatError as e:
        _log(f"data error: {e}")
        return EX_DATAERR
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EX_USAGE
    except Exception as e:
        _log(f"fatal: {type(e).__name__}: {e}")
        return EX_FATAL


if __name__ == "__main__":
    sys.exit(main())
