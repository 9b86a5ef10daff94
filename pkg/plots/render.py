#!/usr/bin/env python3
"""Render benchmark boxplots from a results CSV.

Usage: render.py results.csv --settings 1,2,3 --out figs/

Reads the benchmark CSV contract (setting,procedure,rep,seed,frob_scaled,
max_norm,wall_ms,status), draws one figure per loss with one panel per
setting and one box per procedure, and writes every plotted statistic to
<out>/stats.json so tests compare numbers, never pixels.  Rows whose status
is not "ok" are skipped and counted.
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

LOSSES = ("frob_scaled", "max_norm")
REQUIRED = ("setting", "procedure", "frob_scaled", "max_norm", "status")


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        missing = [c for c in REQUIRED if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def box_stats(vals):
    """Median, quartiles, Tukey whiskers and fliers for one box."""
    q1, med, q3 = (float(q) for q in np.percentile(vals, [25.0, 50.0, 75.0]))
    fence_lo, fence_hi = q1 - 1.5 * (q3 - q1), q3 + 1.5 * (q3 - q1)
    inside = [v for v in vals if fence_lo <= v <= fence_hi]
    lo, hi = min(inside), max(inside)
    return {"n": len(vals), "median": med, "q1": q1, "q3": q3,
            "whisker_lo": lo, "whisker_hi": hi,
            "fliers": sorted(v for v in vals if not lo <= v <= hi)}


def collect(rows, settings):
    """Group loss values by (loss, setting, procedure); non-ok rows skipped."""
    groups = {}
    skipped = 0
    wanted = set(settings)
    for lineno, row in enumerate(rows, start=2):
        try:
            sid, pid = int(row["setting"]), int(row["procedure"])
        except (TypeError, ValueError):
            raise ValueError(f"row {lineno}: non-integer setting/procedure") from None
        if sid not in wanted:
            continue
        if row["status"] != "ok":
            skipped += 1
            continue
        for loss in LOSSES:
            try:
                v = float(row[loss])
            except (TypeError, ValueError):
                raise ValueError(f"row {lineno}: bad {loss} value") from None
            if math.isnan(v) or math.isinf(v):
                raise ValueError(f"row {lineno}: non-finite {loss} on an ok row")
            groups.setdefault((loss, sid, pid), []).append(v)
    stats = {loss: {} for loss in LOSSES}
    for (loss, sid, pid), vals in sorted(groups.items()):
        stats[loss].setdefault(str(sid), {})[str(pid)] = box_stats(vals)
    return stats, skipped


def render(stats, settings, out_dir):
    written = []
    for loss in LOSSES:
        fig, axes = plt.subplots(1, len(settings),
                                 figsize=(1.0 + 3.2 * len(settings), 4.0),
                                 squeeze=False, sharey=True)
        for ax, sid in zip(axes[0], settings):
            per = stats[loss].get(str(sid), {})
            boxes = [{"med": b["median"], "q1": b["q1"], "q3": b["q3"],
                      "whislo": b["whisker_lo"], "whishi": b["whisker_hi"],
                      "fliers": b["fliers"], "label": pid}
                     for pid, b in sorted(per.items(), key=lambda kv: int(kv[0]))]
            if boxes:
                ax.bxp(boxes, showfliers=True)
            ax.set_title(f"setting {sid}")
            ax.set_xlabel("procedure")
        axes[0][0].set_ylabel(loss)
        fig.tight_layout()
        path = out_dir / f"{loss}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Boxplots of benchmark losses, one panel per setting.")
    parser.add_argument("csv", help="results CSV (benchmark contract)")
    parser.add_argument("--settings",
                        help="comma-separated setting ids (default: all present)")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        rows = read_rows(args.csv)
        present = sorted({int(r["setting"]) for r in rows})
        if args.settings:
            try:
                settings = sorted({int(t) for t in args.settings.split(",") if t.strip()})
            except ValueError:
                raise ValueError(f"bad --settings value {args.settings!r}") from None
            if not settings:
                raise ValueError("--settings named no setting ids")
            absent = [s for s in settings if s not in present]
            if absent:
                raise ValueError(
                    f"settings not in {args.csv}: {', '.join(map(str, absent))}")
        else:
            settings = present
        stats, skipped = collect(rows, settings)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        sidecar = {"settings": settings, "losses": stats, "rows_skipped": skipped}
        with open(out_dir / "stats.json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for path in render(stats, settings, out_dir):
            print(f"wrote {path}")
        print(f"wrote {out_dir / 'stats.json'}")
    except FileNotFoundError as e:
        print(f"error: no such file: {e.filename}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
