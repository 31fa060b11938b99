"""Loading and saving label/kernel/feature matrices, sequences and triplets.

Matrix files are UTF-8 CSV with a corner label, column ids in the first row
and row ids in the first column.  Empty cells mark missing label entries;
kernels and features must be fully observed.  Values are written with 17
significant digits so a save/load round trip is exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, InvalidInputError

MATRIX_KINDS = ("labels", "kernel", "features")


@dataclass(frozen=True)
class LabeledMatrixFile:
    """A parsed matrix with its axis identities and missing-entry mask."""

    row_ids: tuple
    col_ids: tuple
    values: np.ndarray
    missing_mask: np.ndarray

    @property
    def complete(self) -> bool:
        return not bool(self.missing_mask.any())


def _check_unique(ids, axis: str, path: str):
    seen = set()
    for i in ids:
        if i in seen:
            raise DataFormatError(f"{path}: duplicate {axis} id {i!r}")
        seen.add(i)


def _parse_cell(text: str, path: str, line: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(
            f"{path}:{line}:{col}: cannot parse {text!r} as a number"
        ) from None


def load_matrix(path, kind: str = "labels") -> LabeledMatrixFile:
    """Parse a matrix CSV; see the module docstring for the layout.

    kind="kernel" additionally requires a square matrix with matching row and
    column ids, no missing or NaN cells, and symmetry within 1e-8 (relative to
    the largest entry); kind="features" forbids missing/NaN cells.
    """
    if kind not in MATRIX_KINDS:
        raise InvalidInputError(f"kind must be one of {MATRIX_KINDS}, got {kind!r}")
    path = str(path)
    with open(path, newline="", encoding="utf-8") as handle:
        numbered = [
            (line_no, row)
            for line_no, row in enumerate(csv.reader(handle), start=1)
            if row  # ignore blank lines, keep true line numbers
        ]
    if len(numbered) < 2 or len(numbered[0][1]) < 2:
        raise DataFormatError(f"{path}:1: expected a header row and at least one data row")
    header = numbered[0][1]
    col_ids = tuple(c.strip() for c in header[1:])
    width = len(header)
    row_ids = []
    row_lines = []
    values = []
    mask = []
    for line_no, row in numbered[1:]:
        row_lines.append(line_no)
        if len(row) != width:
            raise DataFormatError(
                f"{path}:{line_no}: expected {width} cells, found {len(row)}"
            )
        row_ids.append(row[0].strip())
        vals = []
        miss = []
        for col_no, cell in enumerate(row[1:], start=2):
            text = cell.strip()
            if text == "":
                vals.append(np.nan)
                miss.append(True)
                continue
            value = _parse_cell(text, path, line_no, col_no)
            if math.isnan(value):
                vals.append(np.nan)
                miss.append(True)
            else:
                vals.append(value)
                miss.append(False)
        values.append(vals)
        mask.append(miss)
    row_ids = tuple(row_ids)
    _check_unique(row_ids, "row", path)
    _check_unique(col_ids, "column", path)
    values = np.asarray(values, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if not np.all(np.isfinite(values[~mask])):
        raise DataFormatError(f"{path}: matrix contains non-finite entries")
    if kind != "labels" and mask.any():
        where = np.argwhere(mask)[0]
        raise DataFormatError(
            f"{path}:{row_lines[where[0]]}:{where[1] + 2}: missing/NaN cell not "
            f"allowed in a {kind} matrix"
        )
    if kind == "kernel":
        if values.shape[0] != values.shape[1]:
            raise DataFormatError(
                f"{path}: kernel matrix must be square, got {values.shape}"
            )
        if row_ids != col_ids:
            raise DataFormatError(f"{path}: kernel row ids and column ids differ")
        scale = max(1.0, float(np.max(np.abs(values))))
        asym = np.max(np.abs(values - values.T))
        if asym > 1e-8 * scale:
            raise DataFormatError(
                f"{path}: kernel matrix is asymmetric (max deviation {asym:.3e})"
            )
    return LabeledMatrixFile(row_ids=row_ids, col_ids=col_ids, values=values, missing_mask=mask)


def save_matrix(path, row_ids, col_ids, values, missing_mask=None, corner: str = "id"):
    """Write a matrix CSV in the load_matrix layout, 17 significant digits."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise InvalidInputError("values must be a 2-d matrix")
    if len(row_ids) != values.shape[0] or len(col_ids) != values.shape[1]:
        raise InvalidInputError("ids do not match the matrix shape")
    if missing_mask is not None:
        missing_mask = np.asarray(missing_mask, dtype=bool)
        if missing_mask.shape != values.shape:
            raise InvalidInputError("missing mask shape does not match values")
    with open(str(path), "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([corner, *col_ids])
        for i, rid in enumerate(row_ids):
            cells = []
            for j in range(values.shape[1]):
                if missing_mask is not None and missing_mask[i, j]:
                    cells.append("")
                else:
                    cells.append(f"{values[i, j]:.17g}")
            writer.writerow([rid, *cells])


def mean_impute(matrix: LabeledMatrixFile) -> np.ndarray:
    """Replace missing label entries by their column mean.

    Observed entries pass through unchanged; a column with no observed entry
    cannot be imputed and raises.
    """
    values = matrix.values.copy()
    mask = matrix.missing_mask
    for j in range(values.shape[1]):
        observed = ~mask[:, j]
        if not observed.any():
            raise InvalidInputError(
                f"column {matrix.col_ids[j]!r} has no observed entries to average"
            )
        if (~observed).any():
            values[~observed, j] = values[observed, j].mean()
    return values


def load_sequences(path) -> tuple:
    """Read `id<TAB>sequence` lines; returns (ids, sequences) in file order."""
    path = str(path)
    ids = []
    seqs = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise DataFormatError(
                    f"{path}:{line_no}: expected `id<TAB>sequence`, got {line!r}"
                )
            ids.append(parts[0])
            seqs.append(parts[1])
    if not ids:
        raise DataFormatError(f"{path}: no sequences found")
    _check_unique(ids, "sequence", path)
    return tuple(ids), tuple(seqs)


def load_bag_of_words(path, normalize: bool = False) -> tuple:
    """Read sparse `row_id,feature_id,value` triplets into a dense matrix.

    Rows and features are ordered by first appearance.  With ``normalize``
    each row is scaled to unit Euclidean norm (for cosine-like linear
    kernels); the default leaves counts untouched.
    """
    path = str(path)
    row_order: dict = {}
    col_order: dict = {}
    triplets = []
    with open(path, newline="", encoding="utf-8") as handle:
        for line_no, row in enumerate(csv.reader(handle), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataFormatError(
                    f"{path}:{line_no}: expected `row_id,feature_id,value`"
                )
            rid, fid, text = row[0].strip(), row[1].strip(), row[2].strip()
            value = _parse_cell(text, path, line_no, 3)
            if math.isnan(value):
                raise DataFormatError(f"{path}:{line_no}: NaN value not allowed")
            row_order.setdefault(rid, len(row_order))
            col_order.setdefault(fid, len(col_order))
            triplets.append((row_order[rid], col_order[fid], value))
    if not triplets:
        raise DataFormatError(f"{path}: no triplets found")
    out = np.zeros((len(row_order), len(col_order)))
    for i, j, v in triplets:
        out[i, j] += v
    if normalize:
        norms = np.linalg.norm(out, axis=1)
        if np.any(norms == 0):
            raise InvalidInputError("cannot normalize a zero row")
        out = out / norms[:, None]
    return tuple(row_order), tuple(col_order), out
