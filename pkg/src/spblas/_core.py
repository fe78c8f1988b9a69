"""Internal normalization helpers.

Every kernel runs over 0-based canonical CSR parts; these helpers convert
the public view types (any index base, any of CSR/CSC/COO, optionally
transposed/conjugated) into that form.  Conversions are deterministic
counting passes, so downstream accumulation order never depends on the
source format.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from .views import CooView, CscView, CsrView, DenseView, IsoValue

INDEX_DT = np.int64


@dataclass
class CsrParts:
    nrows: int
    ncols: int
    indptr: Any  # int64, indptr[0] == 0
    indices: Any  # int64, 0-based, sorted within each row
    values: Any  # ndarray; None for structure-only uses


def values_array(values, nnz, dtype=None):
    if isinstance(values, IsoValue):
        return np.full(nnz, values.value, dtype=dtype)
    arr = np.asarray(values)
    return arr if dtype is None else arr.astype(dtype, copy=False)


def _normalize_compressed(offsets, indices, base):
    offsets = np.asarray(offsets, dtype=INDEX_DT)
    indices = np.asarray(indices, dtype=INDEX_DT)
    if base or offsets[0]:
        offsets = offsets - offsets[0]
        indices = indices - base
    return offsets, indices


def csr_transpose(nrows, ncols, indptr, indices, values, conjugate=False):
    """Materialize the transpose with a counting sort; output is canonical."""
    nnz = int(indptr[nrows])
    counts = np.bincount(indices[:nnz], minlength=ncols) if nnz else np.zeros(ncols, dtype=INDEX_DT)
    t_indptr = np.zeros(ncols + 1, dtype=INDEX_DT)
    np.cumsum(counts, out=t_indptr[1:])
    t_indices = np.empty(nnz, dtype=INDEX_DT)
    t_values = None if values is None else np.empty(nnz, dtype=values.dtype)
    cursor = t_indptr[:-1].copy()
    for i in range(nrows):
        for p in range(int(indptr[i]), int(indptr[i + 1])):
            j = int(indices[p])
            dst = int(cursor[j])
            t_indices[dst] = i
            if t_values is not None:
                t_values[dst] = values[p]
            cursor[j] += 1
    if conjugate and t_values is not None:
        t_values = np.conj(t_values)
    return CsrParts(ncols, nrows, t_indptr, t_indices, t_values)


def coo_to_csr(nrows, row_indices, col_indices, values):
    """COO (already lexicographically sorted) to CSR parts."""
    nnz = len(col_indices)
    counts = np.bincount(row_indices, minlength=nrows) if nnz else np.zeros(nrows, dtype=INDEX_DT)
    indptr = np.zeros(nrows + 1, dtype=INDEX_DT)
    np.cumsum(counts, out=indptr[1:])
    return indptr, np.asarray(col_indices, dtype=INDEX_DT), values


def to_csr_parts(view, transpose=False, conjugate=False, need_values=True) -> CsrParts:
    """Normalize any sparse view to 0-based canonical CSR parts of op(view)."""
    dtype = None
    if need_values:
        vals = view.values
        dtype = vals.value.dtype if isinstance(vals, IsoValue) and hasattr(vals.value, "dtype") else None
    if isinstance(view, CsrView):
        indptr, indices = _normalize_compressed(view.row_offsets, view.col_indices, view.index_base)
        values = values_array(view.values, view.nnz, dtype) if need_values else None
        parts = CsrParts(view.nrows, view.ncols, indptr, indices, values)
        if transpose:
            parts = csr_transpose(parts.nrows, parts.ncols, parts.indptr, parts.indices, parts.values, conjugate)
            conjugate = False
    elif isinstance(view, CscView):
        # CSC arrays are the CSR of the transpose
        indptr, indices = _normalize_compressed(view.col_offsets, view.row_indices, view.index_base)
        values = values_array(view.values, view.nnz, dtype) if need_values else None
        parts = CsrParts(view.ncols, view.nrows, indptr, indices, values)
        if not transpose:
            parts = csr_transpose(parts.nrows, parts.ncols, parts.indptr, parts.indices, parts.values)
    elif isinstance(view, CooView):
        ri = np.asarray(view.row_indices, dtype=INDEX_DT) - view.index_base
        ci = np.asarray(view.col_indices, dtype=INDEX_DT) - view.index_base
        values = values_array(view.values, view.nnz, dtype) if need_values else None
        indptr, indices, values = coo_to_csr(view.nrows, ri, ci, values)
        parts = CsrParts(view.nrows, view.ncols, indptr, indices, values)
        if transpose:
            parts = csr_transpose(parts.nrows, parts.ncols, parts.indptr, parts.indices, parts.values, conjugate)
            conjugate = False
    else:
        raise TypeError(f"not a sparse view: {type(view).__name__}")
    if conjugate and parts.values is not None:
        parts = CsrParts(parts.nrows, parts.ncols, parts.indptr, parts.indices, np.conj(parts.values))
    return parts


def fold(values, dtype):
    """Left-to-right accumulation in the working dtype (fixed order)."""
    acc = dtype.type(0)
    for v in values:
        acc = acc + v
    return acc


def row_partition(nrows, policy):
    """Fixed row chunks; identical partition boundaries for any thread count
    under deterministic policies (per-row work is order-independent)."""
    return [(0, nrows)]
