"""Partially observed data matrices stored as validated sparse triplets.

An ObservedMatrix holds entries (i, j, y) with one Family per column.  The
triplets are kept row-major sorted with a parallel column-major copy, so row
solves and column solves both stream through contiguous memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .families import Family, check_support_vec, format_family, parse_family


class DataFormatError(ValueError):
    """Malformed data file or inconsistent triplets."""


@dataclass
class ObservedMatrix:
    n: int
    p: int
    rows: np.ndarray          # int64, row-major sorted (i, then j)
    cols: np.ndarray
    vals: np.ndarray          # float64
    col_specs: list           # one Family per column
    # derived indexes, built in __post_init__
    row_ptr: np.ndarray = field(init=False, repr=False)
    col_ptr: np.ndarray = field(init=False, repr=False)
    rows_cm: np.ndarray = field(init=False, repr=False)
    vals_cm: np.ndarray = field(init=False, repr=False)
    col_code: np.ndarray = field(init=False, repr=False)
    col_k: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, p = self.n, self.p
        if n <= 0 or p <= 0:
            raise DataFormatError(f"dimensions must be positive, got {n} x {p}")
        if len(self.col_specs) != p:
            raise DataFormatError(f"need {p} column specs, got {len(self.col_specs)}")
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        vals = np.asarray(self.vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise DataFormatError("rows/cols/vals must be parallel 1-d arrays")
        if rows.size and (rows.min() < 0 or rows.max() >= n):
            raise DataFormatError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= p):
            raise DataFormatError("column index out of range")

        # row-major canonical order, then duplicate detection
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size > 1:
            same = (rows[1:] == rows[:-1]) & (cols[1:] == cols[:-1])
            if same.any():
                t = np.argmax(same)
                raise DataFormatError(f"duplicate entry at ({rows[t]}, {cols[t]})")

        self.col_code = np.array([f.kind for f in self.col_specs], dtype=np.int64)
        self.col_k = np.array([float(f.k) for f in self.col_specs], dtype=np.float64)
        try:
            check_support_vec(self.col_code[cols], self.col_k[cols], vals)
        except ValueError as e:
            raise DataFormatError(str(e)) from None

        self.rows, self.cols, self.vals = rows, cols, vals
        self.row_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=self.row_ptr[1:])
        cm = np.lexsort((rows, cols))
        self.rows_cm = rows[cm]
        self.vals_cm = vals[cm]
        self.col_ptr = np.zeros(p + 1, dtype=np.int64)
        np.cumsum(np.bincount(cols, minlength=p), out=self.col_ptr[1:])

    # --- access ----------------------------------------------------------

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    @property
    def observed_fraction(self) -> float:
        return self.nnz / (self.n * self.p)

    def row_slice(self, i):
        """(cols, vals) of row i, ascending in j."""
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.cols[lo:hi], self.vals[lo:hi]

    def col_slice(self, j):
        """(rows, vals) of column j, ascending in i."""
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.rows_cm[lo:hi], self.vals_cm[lo:hi]

    def row_counts(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def col_counts(self) -> np.ndarray:
        return np.diff(self.col_ptr)

    def checksum(self) -> str:
        """Content hash over dimensions, triplets, and column specs."""
        import hashlib

        h = hashlib.sha256()
        h.update(f"{self.n} {self.p}".encode())
        for f in self.col_specs:
            h.update(format_family(f).encode())
        h.update(self.rows.tobytes())
        h.update(self.cols.tobytes())
        h.update(self.vals.tobytes())
        return h.hexdigest()

    def restrict_rows(self, row_index: np.ndarray) -> "ObservedMatrix":
        """Submatrix on the given rows, reindexed 0..len(row_index)-1.

        row_index must be strictly increasing; columns keep their identity.
        """
        row_index = np.asarray(row_index, dtype=np.int64)
        if row_index.size == 0:
            raise DataFormatError("cannot restrict to an empty row set")
        if (np.diff(row_index) <= 0).any():
            raise DataFormatError("row_index must be strictly increasing")
        keep = np.isin(self.rows, row_index)
        new_rows = np.searchsorted(row_index, self.rows[keep])
        return ObservedMatrix(
            n=int(row_index.size),
            p=self.p,
            rows=new_rows,
            cols=self.cols[keep],
            vals=self.vals[keep],
            col_specs=list(self.col_specs),
        )


def from_triplets(n, p, triplets, col_specs) -> ObservedMatrix:
    """Build an ObservedMatrix from an iterable of (i, j, y)."""
    trip = list(triplets)
    if trip:
        rows, cols, vals = (np.array(t) for t in zip(*trip))
    else:
        rows = np.zeros(0, dtype=np.int64)
        cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=np.float64)
    return ObservedMatrix(n=n, p=p, rows=rows, cols=cols, vals=vals, col_specs=list(col_specs))


def from_dense(y: np.ndarray, mask: np.ndarray, col_specs) -> ObservedMatrix:
    """Build from a dense value matrix and a boolean observation mask."""
    y = np.asarray(y, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if y.shape != mask.shape:
        raise DataFormatError("value and mask shapes differ")
    rows, cols = np.nonzero(mask)
    return ObservedMatrix(n=y.shape[0], p=y.shape[1], rows=rows, cols=cols,
                          vals=y[rows, cols], col_specs=list(col_specs))


# === triplet file format =====================================================
# Line 1:        n p
# Next p lines:  col <j> <family>        (j = 0..p-1 in order)
# Then one line per entry:  i j y        (0-based indices)

def write_triplets(path, data: ObservedMatrix) -> None:
    with open(path, "w") as fh:
        fh.write(f"{data.n} {data.p}\n")
        for j, f in enumerate(data.col_specs):
            fh.write(f"col {j} {format_family(f)}\n")
        for i, j, y in zip(data.rows, data.cols, data.vals):
            fh.write(f"{i} {j} {float(y)!r}\n")


def read_triplets(path) -> ObservedMatrix:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise DataFormatError("empty triplet file")
    head = lines[0].split()
    if len(head) != 2:
        raise DataFormatError(f"bad header {lines[0]!r}")
    try:
        n, p = int(head[0]), int(head[1])
    except ValueError:
        raise DataFormatError(f"bad header {lines[0]!r}") from None
    if len(lines) < 1 + p:
        raise DataFormatError("truncated column spec block")
    col_specs = []
    for j in range(p):
        parts = lines[1 + j].split()
        if len(parts) != 3 or parts[0] != "col":
            raise DataFormatError(f"bad column spec line {lines[1 + j]!r}")
        if int(parts[1]) != j:
            raise DataFormatError(f"column specs out of order at {lines[1 + j]!r}")
        try:
            col_specs.append(parse_family(parts[2]))
        except ValueError as e:
            raise DataFormatError(str(e)) from None
    triplets = []
    for ln in lines[1 + p:]:
        parts = ln.split()
        if len(parts) != 3:
            raise DataFormatError(f"bad entry line {ln!r}")
        try:
            triplets.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise DataFormatError(f"bad entry line {ln!r}") from None
    return from_triplets(n, p, triplets, col_specs)


# === dense matrix CSV ========================================================

def write_dense_csv(path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=np.float64)
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_dense_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            try:
                rows.append([float(tok) for tok in ln.split(",")])
            except ValueError:
                raise DataFormatError(f"bad CSV line {ln!r}") from None
    if not rows:
        raise DataFormatError("empty matrix CSV")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DataFormatError("ragged matrix CSV")
    return np.array(rows, dtype=np.float64)
