"""Multi-stage kernels: output structure unknown a priori.

Families: sparse-sparse multiply (SpGEMM, with a symbolic/numeric split),
addition, element-wise multiply, format conversion, predicate filtering, and
materialized transpose.  All follow compute -> (caller allocates) -> fill;
``state.result_nnz`` becomes readable after compute.  The staged row offsets
live in state-owned memory drawn from the state's resource; fill writes only
into the caller's arrays, whose lengths must match exactly.
"""

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from ._core import INDEX_DT, csr_transpose, to_csr_parts, values_array
from .errors import (
    PhaseError,
    ReadOnlyValuesError,
    ShapeError,
    StaleStructureError,
)
from .runtime import (
    MatrixHandle,
    OperationState,
    Phase,
    structure_fingerprint,
)
from .views import (
    CooView,
    CscView,
    CsrView,
    DenseView,
    IsoValue,
    unwrap,
    validate,
)

__all__ = [
    "OutputShell",
    "sparse_multiply_inspect",
    "sparse_multiply_compute",
    "sparse_multiply_fill",
    "sparse_multiply_symbolic_compute",
    "sparse_multiply_symbolic_fill",
    "sparse_multiply_numeric_compute",
    "sparse_multiply_numeric_fill",
    "add_inspect",
    "add_compute",
    "add_fill",
    "multiply_elementwise_inspect",
    "multiply_elementwise_compute",
    "multiply_elementwise_fill",
    "convert_inspect",
    "convert_compute",
    "convert_fill",
    "filter_compute",
    "filter_fill",
    "transpose_compute",
    "transpose_fill",
]


@dataclass
class OutputShell:
    """Caller-owned shell for a staged output.

    Extents and target format are fixed up front; the arrays are attached by
    the caller once ``result_nnz`` is known.  After fill the shell converts
    to a valid view via :meth:`view`.
    """

    format: str
    nrows: int
    ncols: int
    index_base: int = 0
    row_offsets: Any = None
    col_indices: Any = None
    values: Any = None
    col_offsets: Any = None
    row_indices: Any = None

    def __post_init__(self):
        if self.format not in ("csr", "csc", "coo"):
            raise ValueError(f"bad output format {self.format!r}")

    def allocate(self, nnz, dtype=np.float64, index_dtype=INDEX_DT):
        """Convenience allocator for the exact array lengths fill expects."""
        nnz = int(nnz)
        self.values = np.empty(nnz, dtype=dtype)
        if self.format == "csr":
            self.row_offsets = np.empty(self.nrows + 1, dtype=index_dtype)
            self.col_indices = np.empty(nnz, dtype=index_dtype)
        elif self.format == "csc":
            self.col_offsets = np.empty(self.ncols + 1, dtype=index_dtype)
            self.row_indices = np.empty(nnz, dtype=index_dtype)
        else:
            self.row_indices = np.empty(nnz, dtype=index_dtype)
            self.col_indices = np.empty(nnz, dtype=index_dtype)
        return self

    def view(self):
        if self.format == "csr":
            return CsrView(self.nrows, self.ncols, self.row_offsets,
                           self.col_indices, self.values, index_base=self.index_base)
        if self.format == "csc":
            return CscView(self.nrows, self.ncols, self.col_offsets,
                           self.row_indices, self.values, index_base=self.index_base)
        return CooView(self.nrows, self.ncols, self.row_indices,
                       self.col_indices, self.values, index_base=self.index_base)


# ---------------------------------------------------------------------------
# shared staged machinery


def _resolve(obj, need_values=True):
    alpha, transpose, conjugate, core = unwrap(obj)
    view = core.view if isinstance(core, MatrixHandle) else core
    return alpha, transpose, conjugate, view


def _operand_parts(obj, need_values=True):
    alpha, transpose, conjugate, view = _resolve(obj)
    validate(view).raise_if_failed()
    parts = to_csr_parts(view, transpose, conjugate, need_values=need_values)
    return alpha, parts, view


def _fingerprint(kind, *views):
    return (kind,) + (structure_fingerprint(*views),)


def _begin_compute(state: OperationState, kind, fp, split=False):
    """Common compute-entry bookkeeping; returns True when the structural
    analysis can be skipped because the staged data is already current."""
    state.bind(kind)
    if state.internal.get("split", False) != split and state.phase != Phase.CREATED:
        raise PhaseError("cannot mix combined and symbolic/numeric protocols")
    if state.phase >= Phase.COMPUTED and state.fingerprint == fp \
            and "indptr" in state.internal:
        return True
    state.reset()
    state.internal["split"] = split
    state.fingerprint = fp
    return False


def _store_structure(state: OperationState, indptr, indices=None):
    stored = state._alloc(len(indptr), INDEX_DT)
    stored[:] = indptr
    state.internal["indptr"] = stored
    if indices is not None:
        si = state._alloc(max(len(indices), 1), INDEX_DT)
        si[:len(indices)] = indices
        state.internal["indices"] = si[:len(indices)]
    state.analysis_count += 1
    state.set_result_nnz(int(indptr[-1]))


def _writable(arr, n, what):
    if arr is None:
        raise ShapeError(f"{what} array not attached to output shell")
    if isinstance(arr, IsoValue):
        raise ReadOnlyValuesError(f"{what}: iso-valued arrays cannot be written")
    arr = np.asarray(arr)
    if len(arr) != n:
        raise ShapeError(f"{what}: expected length {n}, got {len(arr)}")
    if not arr.flags.writeable:
        raise ReadOnlyValuesError(f"{what} array is read-only")
    return arr


def _emit(shell: OutputShell, indptr, indices, values, structure_only=False):
    """Write a canonical CSR result into the shell, honoring its format and
    index base.  Touches exactly the caller arrays of the required lengths."""
    nnz = int(indptr[-1])
    base = shell.index_base
    vals_out = None if structure_only else _writable(shell.values, nnz, "values")
    if shell.format == "csr":
        ro = _writable(shell.row_offsets, shell.nrows + 1, "row_offsets")
        ci = _writable(shell.col_indices, nnz, "col_indices")
        ro[:] = indptr + base
        ci[:] = indices + base
        if vals_out is not None:
            vals_out[:] = values
    elif shell.format == "coo":
        ri = _writable(shell.row_indices, nnz, "row_indices")
        ci = _writable(shell.col_indices, nnz, "col_indices")
        rows = np.repeat(np.arange(shell.nrows, dtype=INDEX_DT), np.diff(indptr))
        ri[:] = rows + base
        ci[:] = indices + base
        if vals_out is not None:
            vals_out[:] = values
    else:  # csc
        t = csr_transpose(shell.nrows, shell.ncols, indptr, indices,
                          None if structure_only else np.asarray(values))
        co = _writable(shell.col_offsets, shell.ncols + 1, "col_offsets")
        ri = _writable(shell.row_indices, nnz, "row_indices")
        co[:] = t.indptr + base
        ri[:] = t.indices + base
        if vals_out is not None:
            vals_out[:] = t.values


# ---------------------------------------------------------------------------
# SpGEMM: C = alpha * op(A) * op(B) + beta * D


def _spgemm_operands(A, B, D):
    alphaA, partsA, viewA = _operand_parts(A)
    alphaB, partsB, viewB = _operand_parts(B)
    alpha = alphaA if alphaB == 1 else alphaA * alphaB
    beta, partsD, viewD = (0, None, None)
    if D is not None:
        beta, partsD, viewD = _operand_parts(D)
    if partsA.ncols != partsB.nrows:
        raise ShapeError("cols(op(A)) must equal rows(op(B))")
    if partsD is not None and (partsD.nrows, partsD.ncols) != (partsA.nrows, partsB.ncols):
        raise ShapeError("D must conform to the product extents")
    return alpha, beta, partsA, partsB, partsD, (viewA, viewB, viewD)


def _spgemm_rows(alpha, beta, pa, pb, pd, dtype, numeric):
    """Yield (sorted cols, values-or-None) per output row; fixed iteration
    order makes the numeric accumulation deterministic."""
    ncols = pb.ncols
    present = np.zeros(ncols, dtype=bool)
    acc = np.zeros(ncols, dtype=dtype) if numeric else None
    a = None if acc is None else acc.dtype.type(alpha)
    b = None if acc is None else acc.dtype.type(beta)
    for i in range(pa.nrows):
        marks = []
        for p in range(int(pa.indptr[i]), int(pa.indptr[i + 1])):
            k = int(pa.indices[p])
            av = pa.values[p] if (numeric and alpha != 0) else None
            for q in range(int(pb.indptr[k]), int(pb.indptr[k + 1])):
                j = int(pb.indices[q])
                if not present[j]:
                    present[j] = True
                    marks.append(j)
                if av is not None:
                    acc[j] = acc[j] + av * pb.values[q]
        dlo = dhi = 0
        if pd is not None:
            dlo, dhi = int(pd.indptr[i]), int(pd.indptr[i + 1])
            for p in range(dlo, dhi):
                j = int(pd.indices[p])
                if not present[j]:
                    present[j] = True
                    marks.append(j)
        marks.sort()
        cols = np.asarray(marks, dtype=INDEX_DT)
        vals = None
        if numeric:
            vals = np.empty(len(marks), dtype=dtype)
            drow = {int(pd.indices[p]): pd.values[p] for p in range(dlo, dhi)} if pd is not None else {}
            for t, j in enumerate(marks):
                v = a * acc[j] if alpha != 0 else acc.dtype.type(0)
                if j in drow and beta != 0:
                    v = v + b * drow[j]
                vals[t] = v
        for j in marks:
            present[j] = False
            if acc is not None:
                acc[j] = 0
        yield cols, vals


def _result_dtype(*parts):
    arrs = [p.values for p in parts if p is not None and p.values is not None]
    return np.result_type(*arrs) if arrs else np.dtype(np.float64)


def _structure_pass(rows_iter, nrows):
    indptr = np.zeros(nrows + 1, dtype=INDEX_DT)
    chunks = []
    for i, (cols, _) in enumerate(rows_iter):
        indptr[i + 1] = indptr[i] + len(cols)
        chunks.append(cols)
    indices = np.concatenate(chunks) if chunks else np.empty(0, dtype=INDEX_DT)
    return indptr, indices


def _numeric_pass(rows_iter, nrows, dtype):
    indptr = np.zeros(nrows + 1, dtype=INDEX_DT)
    icols, ivals = [], []
    for i, (cols, vals) in enumerate(rows_iter):
        indptr[i + 1] = indptr[i] + len(cols)
        icols.append(cols)
        ivals.append(vals)
    indices = np.concatenate(icols) if icols else np.empty(0, dtype=INDEX_DT)
    values = np.concatenate(ivals) if ivals else np.empty(0, dtype=dtype)
    return indptr, indices, values


def sparse_multiply_inspect(policy, state: OperationState, A, B, C, D=None):
    state.bind("sparse_multiply")
    if state.phase == Phase.CREATED:
        state.phase = Phase.INSPECTED


def sparse_multiply_compute(policy, state: OperationState, A, B, C, D=None):
    alpha, beta, pa, pb, pd, views = _spgemm_operands(A, B, D)
    _check_shell_extents(C, pa.nrows, pb.ncols)
    fp = _fingerprint("sparse_multiply", *views)
    if _begin_compute(state, "sparse_multiply", fp):
        state.phase = Phase.COMPUTED if state.phase < Phase.COMPUTED else state.phase
        return
    dtype = _result_dtype(pa, pb, pd)
    rows = _spgemm_rows(alpha, beta, pa, pb, pd, dtype, numeric=False)
    indptr, _ = _structure_pass(rows, pa.nrows)
    _store_structure(state, indptr)
    state.phase = Phase.COMPUTED


def sparse_multiply_fill(policy, state: OperationState, A, B, C: OutputShell, D=None):
    state.bind("sparse_multiply")
    state.require_phase(Phase.COMPUTED, Phase.FILLED)
    alpha, beta, pa, pb, pd, views = _spgemm_operands(A, B, D)
    if state.fingerprint != _fingerprint("sparse_multiply", *views):
        raise StaleStructureError("operand structure changed since compute")
    dtype = _result_dtype(pa, pb, pd)
    rows = _spgemm_rows(alpha, beta, pa, pb, pd, dtype, numeric=True)
    indptr, indices, values = _numeric_pass(rows, pa.nrows, dtype)
    _emit(C, indptr, indices, values)
    state.phase = Phase.FILLED


def sparse_multiply_symbolic_compute(policy, state: OperationState, A, B, C, D=None):
    alpha, beta, pa, pb, pd, views = _spgemm_operands(A, B, D)
    _check_shell_extents(C, pa.nrows, pb.ncols)
    fp = _fingerprint("sparse_multiply", *views)
    if _begin_compute(state, "sparse_multiply", fp, split=True):
        return
    dtype = _result_dtype(pa, pb, pd)
    rows = _spgemm_rows(alpha, beta, pa, pb, pd, dtype, numeric=False)
    indptr, indices = _structure_pass(rows, pa.nrows)
    _store_structure(state, indptr, indices)
    state.phase = Phase.COMPUTED


def sparse_multiply_symbolic_fill(policy, state: OperationState, A, B, C: OutputShell, D=None):
    state.bind("sparse_multiply")
    if not state.internal.get("split"):
        raise PhaseError("symbolic_fill requires symbolic_compute first")
    state.require_phase(Phase.COMPUTED, Phase.SYMBOLIC_DONE, Phase.NUMERIC_DONE, Phase.FILLED)
    _emit(C, state.internal["indptr"], state.internal["indices"], None, structure_only=True)
    state.phase = Phase.SYMBOLIC_DONE


def _check_numeric_ready(state, views):
    if not state.internal.get("split"):
        raise PhaseError("numeric phase requires the symbolic pair first")
    if state.fingerprint != _fingerprint("sparse_multiply", *views):
        raise StaleStructureError("operand structure changed since symbolic phase")


def sparse_multiply_numeric_compute(policy, state: OperationState, A, B, C, D=None):
    state.bind("sparse_multiply")
    state.require_phase(Phase.SYMBOLIC_DONE, Phase.NUMERIC_DONE, Phase.FILLED)
    *_, views = _spgemm_operands(A, B, D)
    _check_numeric_ready(state, views)
    state.phase = Phase.NUMERIC_DONE


def sparse_multiply_numeric_fill(policy, state: OperationState, A, B, C: OutputShell, D=None):
    state.bind("sparse_multiply")
    state.require_phase(Phase.NUMERIC_DONE)
    alpha, beta, pa, pb, pd, views = _spgemm_operands(A, B, D)
    _check_numeric_ready(state, views)
    dtype = _result_dtype(pa, pb, pd)
    rows = _spgemm_rows(alpha, beta, pa, pb, pd, dtype, numeric=True)
    indptr, indices, values = _numeric_pass(rows, pa.nrows, dtype)
    _emit(C, indptr, indices, values)
    state.phase = Phase.FILLED


def _check_shell_extents(C, nrows, ncols):
    if isinstance(C, OutputShell) and (C.nrows, C.ncols) != (nrows, ncols):
        raise ShapeError(f"output shell is {C.nrows}x{C.ncols}, expected {nrows}x{ncols}")


# ---------------------------------------------------------------------------
# addition and element-wise multiply (merge of sorted rows)


def _merge_rows(pa, pb, alphaA, alphaB, dtype, mode, numeric):
    aA = None if not numeric else np.dtype(dtype).type(alphaA)
    aB = None if not numeric else np.dtype(dtype).type(alphaB)
    for i in range(pa.nrows):
        pa_lo, pa_hi = int(pa.indptr[i]), int(pa.indptr[i + 1])
        pb_lo, pb_hi = int(pb.indptr[i]), int(pb.indptr[i + 1])
        cols, vals = [], ([] if numeric else None)
        p, q = pa_lo, pb_lo
        while p < pa_hi or q < pb_hi:
            ja = int(pa.indices[p]) if p < pa_hi else None
            jb = int(pb.indices[q]) if q < pb_hi else None
            if jb is None or (ja is not None and ja < jb):
                if mode == "add":
                    cols.append(ja)
                    if numeric:
                        vals.append(pa.values[p] if alphaA == 1 else aA * pa.values[p])
                p += 1
            elif ja is None or jb < ja:
                if mode == "add":
                    cols.append(jb)
                    if numeric:
                        vals.append(pb.values[q] if alphaB == 1 else aB * pb.values[q])
                q += 1
            else:
                cols.append(ja)
                if numeric:
                    va = pa.values[p] if alphaA == 1 else aA * pa.values[p]
                    vb = pb.values[q] if alphaB == 1 else aB * pb.values[q]
                    vals.append(va + vb if mode == "add" else va * vb)
                p += 1
                q += 1
        yield (np.asarray(cols, dtype=INDEX_DT),
               np.asarray(vals, dtype=dtype) if numeric else None)


def _ewise_operands(A, B):
    alphaA, pa, viewA = _operand_parts(A)
    alphaB, pb, viewB = _operand_parts(B)
    if (pa.nrows, pa.ncols) != (pb.nrows, pb.ncols):
        raise ShapeError("A and B must have the same extents")
    return alphaA, alphaB, pa, pb, (viewA, viewB)


def _make_ewise_family(kind, mode):
    def _inspect(policy, state, A, B, C):
        state.bind(kind)
        if state.phase == Phase.CREATED:
            state.phase = Phase.INSPECTED

    def _compute(policy, state, A, B, C):
        alphaA, alphaB, pa, pb, views = _ewise_operands(A, B)
        _check_shell_extents(C, pa.nrows, pa.ncols)
        fp = _fingerprint(kind, *views)
        if _begin_compute(state, kind, fp):
            return
        dtype = _result_dtype(pa, pb)
        rows = _merge_rows(pa, pb, alphaA, alphaB, dtype, mode, numeric=False)
        indptr, _ = _structure_pass(rows, pa.nrows)
        _store_structure(state, indptr)
        state.phase = Phase.COMPUTED

    def _fill(policy, state, A, B, C):
        state.bind(kind)
        state.require_phase(Phase.COMPUTED, Phase.FILLED)
        alphaA, alphaB, pa, pb, views = _ewise_operands(A, B)
        if state.fingerprint != _fingerprint(kind, *views):
            raise StaleStructureError("operand structure changed since compute")
        dtype = _result_dtype(pa, pb)
        rows = _merge_rows(pa, pb, alphaA, alphaB, dtype, mode, numeric=True)
        indptr, indices, values = _numeric_pass(rows, pa.nrows, dtype)
        _emit(C, indptr, indices, values)
        state.phase = Phase.FILLED

    return _inspect, _compute, _fill


add_inspect, add_compute, add_fill = _make_ewise_family("add", "add")
multiply_elementwise_inspect, multiply_elementwise_compute, multiply_elementwise_fill = \
    _make_ewise_family("multiply_elementwise", "mul")


# ---------------------------------------------------------------------------
# format conversion, B = sparse(A) or sparse-to-sparse restructure


def _convert_source(A):
    alpha, transpose, conjugate, view = _resolve(A)
    if alpha != 1 or transpose or conjugate:
        raise ShapeError("convert takes a plain view (use transpose_* to reorient)")
    return view


def _dense_to_csr(view: DenseView):
    a = view.as2d()
    nrows, ncols = a.shape
    indptr = np.zeros(nrows + 1, dtype=INDEX_DT)
    cols, vals = [], []
    for i in range(nrows):
        keep = np.nonzero(a[i, :] != 0)[0]  # NaN != 0 keeps NaN; -0 dropped
        indptr[i + 1] = indptr[i] + keep.size
        cols.append(keep.astype(INDEX_DT))
        vals.append(a[i, keep])
    indices = np.concatenate(cols) if cols else np.empty(0, dtype=INDEX_DT)
    values = np.concatenate(vals) if vals else np.empty(0, dtype=a.dtype)
    from ._core import CsrParts

    return CsrParts(nrows, ncols, indptr, indices, values)


def _convert_parts(view):
    if isinstance(view, DenseView):
        if view.order != 2:
            raise ShapeError("dense source must be two-dimensional")
        return _dense_to_csr(view)
    validate(view).raise_if_failed()
    return to_csr_parts(view)


def convert_inspect(policy, state: OperationState, A, B):
    state.bind("convert")
    if state.phase == Phase.CREATED:
        state.phase = Phase.INSPECTED


def convert_compute(policy, state: OperationState, A, B):
    view = _convert_source(A)
    parts = _convert_parts(view)
    _check_shell_extents(B, parts.nrows, parts.ncols)
    if isinstance(view, DenseView):
        fp = ("convert", parts.indptr.tobytes(), parts.indices.tobytes())
    else:
        fp = _fingerprint("convert", view)
    if _begin_compute(state, "convert", fp):
        return
    _store_structure(state, parts.indptr)
    state.phase = Phase.COMPUTED


def convert_fill(policy, state: OperationState, A, B: OutputShell):
    state.bind("convert")
    state.require_phase(Phase.COMPUTED, Phase.FILLED)
    view = _convert_source(A)
    parts = _convert_parts(view)
    if int(parts.indptr[-1]) != state.result_nnz:
        raise StaleStructureError("source structure changed since compute")
    _emit(B, parts.indptr, parts.indices, parts.values)
    state.phase = Phase.FILLED


# ---------------------------------------------------------------------------
# predicate filtering, B = A(predicate)


def filter_compute(policy, state: OperationState, A, B, pred):
    """Keep exactly the stored entries for which pred(i, j, v) holds;
    indices are presented to the predicate in the source view's index base.
    The acceptance bitmap is recorded so fill never re-evaluates pred."""
    alpha, transpose, conjugate, view = _resolve(A)
    if alpha != 1 or transpose or conjugate:
        raise ShapeError("filter takes a plain view or handle")
    validate(view).raise_if_failed()
    parts = to_csr_parts(view)
    _check_shell_extents(B, parts.nrows, parts.ncols)
    state.bind("filter")
    state.reset()
    state.internal["split"] = False
    state.fingerprint = _fingerprint("filter", view)
    base = view.index_base
    keep = np.zeros(len(parts.indices), dtype=bool)
    indptr = np.zeros(parts.nrows + 1, dtype=INDEX_DT)
    for i in range(parts.nrows):
        cnt = 0
        for p in range(int(parts.indptr[i]), int(parts.indptr[i + 1])):
            if pred(i + base, int(parts.indices[p]) + base, parts.values[p]):
                keep[p] = True
                cnt += 1
        indptr[i + 1] = indptr[i] + cnt
    _store_structure(state, indptr)
    kb = state._alloc(max(len(keep), 1), np.uint8)
    kb[:len(keep)] = keep
    state.internal["keep"] = kb[:len(keep)]
    state.phase = Phase.COMPUTED


def filter_fill(policy, state: OperationState, A, B: OutputShell, pred):
    state.bind("filter")
    state.require_phase(Phase.COMPUTED, Phase.FILLED)
    alpha, transpose, conjugate, view = _resolve(A)
    if state.fingerprint != _fingerprint("filter", view):
        raise StaleStructureError("source structure changed since compute")
    parts = to_csr_parts(view)
    keep = state.internal["keep"].astype(bool)
    indptr = state.internal["indptr"]
    _emit(B, indptr, parts.indices[keep], parts.values[keep])
    state.phase = Phase.FILLED


# ---------------------------------------------------------------------------
# materialized transpose, B = op(A)


def transpose_compute(policy, state: OperationState, A, B, conjugate=False):
    alpha, transpose, conj_w, view = _resolve(A)
    if alpha != 1:
        raise ShapeError("transpose takes an unscaled matrix")
    validate(view).raise_if_failed()
    parts = to_csr_parts(view, transpose, conj_w, need_values=False)
    _check_shell_extents(B, parts.ncols, parts.nrows)
    fp = _fingerprint("transpose", view) + (transpose, conj_w, bool(conjugate))
    if _begin_compute(state, "transpose", fp):
        return
    t = csr_transpose(parts.nrows, parts.ncols, parts.indptr, parts.indices, None)
    _store_structure(state, t.indptr)
    state.phase = Phase.COMPUTED


def transpose_fill(policy, state: OperationState, A, B: OutputShell, conjugate=False):
    state.bind("transpose")
    state.require_phase(Phase.COMPUTED, Phase.FILLED)
    alpha, transpose, conj_w, view = _resolve(A)
    if state.fingerprint != _fingerprint("transpose", view) + (transpose, conj_w, bool(conjugate)):
        raise StaleStructureError("source structure changed since compute")
    parts = to_csr_parts(view, transpose, conj_w)
    t = csr_transpose(parts.nrows, parts.ncols, parts.indptr, parts.indices,
                      parts.values, conjugate=bool(conjugate))
    _emit(B, t.indptr, t.indices, t.values)
    state.phase = Phase.FILLED
