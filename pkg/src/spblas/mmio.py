"""Matrix Market ingestion and serialization, plus the plain vector format.

Values are written with the shortest decimal representation that parses
back to the identical bits, so write/read round trips are exact.  Symmetric,
skew-symmetric, and hermitian files are expanded to general storage on read;
duplicate coordinates are rejected (the library requires canonical input).
"""

from dataclasses import dataclass

import numpy as np

from .errors import SparseBlasError, ValidationError
from .views import CooView, CscView, CsrView, DenseView, IsoValue

__all__ = ["MatrixMarketMeta", "mm_read", "mm_write", "vec_read", "vec_write",
           "MmFormatError"]


class MmFormatError(SparseBlasError):
    category = "malformed_file"


class DuplicateEntryError(SparseBlasError):
    category = "duplicate_entry"


@dataclass
class MatrixMarketMeta:
    field: str  # real | integer | complex | pattern
    symmetry: str  # general | symmetric | skew-symmetric | hermitian
    layout: str  # coordinate | array


def _parse_value(tokens, field):
    if field == "pattern":
        return 1.0
    if field == "complex":
        return complex(float(tokens[0]), float(tokens[1]))
    return float(tokens[0])


def _fmt_value(v, field):
    if field == "complex":
        c = complex(v)
        return f"{repr(c.real)} {repr(c.imag)}"
    if field == "integer":
        return str(int(v))
    return repr(float(v))


def mm_read(path, index_base=0):
    """Read a Matrix Market file into an owned-buffer CooView plus metadata.

    File indices are 1-based; ``index_base`` selects the base of the
    returned view.
    """
    with open(path, "r", encoding="ascii") as fh:
        banner = fh.readline().split()
        if len(banner) < 5 or banner[0] != "%%MatrixMarket" or banner[1] != "matrix":
            raise MmFormatError(f"{path}: bad banner")
        layout, field, symmetry = banner[2].lower(), banner[3].lower(), banner[4].lower()
        if layout not in ("coordinate", "array"):
            raise MmFormatError(f"{path}: unknown layout {layout!r}")
        if field not in ("real", "integer", "complex", "pattern"):
            raise MmFormatError(f"{path}: unknown field {field!r}")
        if symmetry not in ("general", "symmetric", "skew-symmetric", "hermitian"):
            raise MmFormatError(f"{path}: unknown symmetry {symmetry!r}")
        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        header = line.split()
        rows_list, cols_list, vals_list = [], [], []
        if layout == "coordinate":
            if len(header) != 3:
                raise MmFormatError(f"{path}: coordinate header needs 3 numbers")
            nrows, ncols, nnz = (int(t) for t in header)
            seen = 0
            for line in fh:
                s = line.strip()
                if not s or s.startswith("%"):
                    continue
                toks = s.split()
                i, j = int(toks[0]), int(toks[1])
                if not (1 <= i <= nrows and 1 <= j <= ncols):
                    raise MmFormatError(f"{path}: index ({i},{j}) out of range")
                v = _parse_value(toks[2:], field)
                rows_list.append(i - 1)
                cols_list.append(j - 1)
                vals_list.append(v)
                seen += 1
            if seen != nnz:
                raise MmFormatError(f"{path}: expected {nnz} entries, got {seen}")
        else:  # array: dense column-major, all entries stored
            if len(header) != 2:
                raise MmFormatError(f"{path}: array header needs 2 numbers")
            nrows, ncols = (int(t) for t in header)
            flat = []
            for line in fh:
                s = line.strip()
                if not s or s.startswith("%"):
                    continue
                flat.append(_parse_value(s.split(), field))
            want = nrows * ncols if symmetry == "general" else None
            if want is not None and len(flat) != want:
                raise MmFormatError(f"{path}: expected {want} array values")
            if symmetry != "general":
                raise MmFormatError(f"{path}: array layout supports general symmetry only")
            k = 0
            for j in range(ncols):
                for i in range(nrows):
                    rows_list.append(i)
                    cols_list.append(j)
                    vals_list.append(flat[k])
                    k += 1

    if symmetry != "general":
        n = len(rows_list)
        for p in range(n):
            i, j, v = rows_list[p], cols_list[p], vals_list[p]
            if i == j:
                continue
            mirrored = v
            if symmetry == "skew-symmetric":
                mirrored = -v
            elif symmetry == "hermitian" and field == "complex":
                mirrored = complex(v).conjugate()
            rows_list.append(j)
            cols_list.append(i)
            vals_list.append(mirrored)

    order = sorted(range(len(rows_list)),
                   key=lambda p: (rows_list[p], cols_list[p]))
    ri = np.asarray([rows_list[p] for p in order], dtype=np.int64)
    ci = np.asarray([cols_list[p] for p in order], dtype=np.int64)
    for p in range(1, len(ri)):
        if ri[p] == ri[p - 1] and ci[p] == ci[p - 1]:
            raise DuplicateEntryError(
                f"{path}: duplicate entry at ({ri[p] + 1},{ci[p] + 1})")
    if field == "pattern":
        values = IsoValue(1.0, len(ri))
    else:
        dt = np.complex128 if field == "complex" else np.float64
        values = np.asarray([vals_list[p] for p in order], dtype=dt)
    view = CooView(nrows, ncols, ri + index_base, ci + index_base, values,
                   index_base=index_base)
    return view, MatrixMarketMeta(field, symmetry, layout)


def _triples(view):
    base = view.index_base
    if isinstance(view, CooView):
        for p in range(view.nnz):
            yield int(view.row_indices[p]) - base, int(view.col_indices[p]) - base, view.values[p]
    elif isinstance(view, CsrView):
        off = view.row_offsets
        for i in range(view.nrows):
            for p in range(int(off[i]) - int(off[0]), int(off[i + 1]) - int(off[0])):
                yield i, int(view.col_indices[p]) - base, view.values[p]
    elif isinstance(view, CscView):
        off = view.col_offsets
        for j in range(view.ncols):
            for p in range(int(off[j]) - int(off[0]), int(off[j + 1]) - int(off[0])):
                yield int(view.row_indices[p]) - base, j, view.values[p]
    else:
        raise TypeError(f"cannot serialize {type(view).__name__}")


def mm_write(path, view, comment=None):
    """Write a sparse view as a 1-based general coordinate file with
    round-trip-exact values."""
    if isinstance(view.values, IsoValue):
        field = "pattern"
    elif np.iscomplexobj(np.asarray(view.values)):
        field = "complex"
    elif np.asarray(view.values).dtype.kind in "iu":
        field = "integer"
    else:
        field = "real"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {field} general\n")
        if comment:
            for ln in str(comment).splitlines():
                fh.write(f"% {ln}\n")
        fh.write(f"{view.nrows} {view.ncols} {view.nnz}\n")
        for i, j, v in _triples(view):
            if field == "pattern":
                fh.write(f"{i + 1} {j + 1}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {_fmt_value(v, field)}\n")


def vec_read(path, dtype=np.float64):
    """Plain vector file: one value per line, '%' starts a comment."""
    out = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            s = line.split("%")[0].strip()
            if not s:
                continue
            toks = s.split()
            if len(toks) == 2:
                out.append(complex(float(toks[0]), float(toks[1])))
            else:
                out.append(float(toks[0]))
    return np.asarray(out, dtype=dtype)


def vec_write(path, arr, comment=None):
    arr = np.asarray(arr)
    with open(path, "w", encoding="ascii") as fh:
        if comment:
            for ln in str(comment).splitlines():
                fh.write(f"% {ln}\n")
        for v in arr:
            if np.iscomplexobj(arr):
                fh.write(f"{repr(complex(v).real)} {repr(complex(v).imag)}\n")
            else:
                fh.write(f"{repr(float(v))}\n")
