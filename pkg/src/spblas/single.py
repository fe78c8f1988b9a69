"""Single-stage kernels: the output structure is known a priori.

Covers in-place scaling, the two matrix norms, sparse-times-dense multiply
(vector and matrix right-hand sides), triangular solve, and sampled
dense-dense multiply.  Each kernel takes an execution policy and an
operation state and accepts plain views or matrix handles; the optional
``*_inspect`` entry points may cache data in a handle's opt store but never
change results.

Accumulation is per output element, left to right over stored order, so
results are bitwise reproducible for any thread count.
"""

import numpy as np

from ._core import fold, to_csr_parts
from .errors import (
    AliasError,
    NumericSingularityError,
    PatternError,
    ReadOnlyValuesError,
    ShapeError,
    SingularStructureError,
)
from .runtime import MatrixHandle, OperationState, Phase
from .views import DenseView, IsoValue, unwrap, validate

__all__ = [
    "scale",
    "matrix_inf_norm",
    "matrix_frob_norm",
    "multiply",
    "multiply_inspect",
    "triangular_solve",
    "triangular_solve_inspect",
    "sampled_multiply",
    "sampled_multiply_inspect",
]


def _resolve(obj):
    """Unwrap scaling/transposition and a possible handle.

    Returns ``(alpha, transpose, conjugate, view, handle_or_none)``.
    """
    alpha, transpose, conjugate, core = unwrap(obj)
    if isinstance(core, MatrixHandle):
        return alpha, transpose, conjugate, core.view, core
    return alpha, transpose, conjugate, core, None


def _advance(state, kind, phase=Phase.COMPUTED):
    state.bind(kind)
    state.phase = phase


def _writable_values(view):
    vals = view.values
    if isinstance(vals, IsoValue):
        raise ReadOnlyValuesError("iso-valued arrays cannot be written")
    vals = np.asarray(vals)
    if not vals.flags.writeable:
        raise ReadOnlyValuesError("values array is read-only")
    return vals


def scale(policy, state: OperationState, alpha, A):
    """A := alpha * A, in place; the stored pattern is kept even where
    values become zero."""
    _, _, _, view, _ = _resolve(A)
    validate(view).raise_if_failed()
    vals = _writable_values(view)
    np.multiply(vals, vals.dtype.type(alpha), out=vals)
    _advance(state, "scale")


def _norm_parts(A):
    alpha, transpose, conjugate, view, _ = _resolve(A)
    if alpha != 1:
        raise ShapeError("norms take an unscaled matrix")
    validate(view).raise_if_failed()
    return to_csr_parts(view, transpose, conjugate)


def matrix_inf_norm(policy, state: OperationState, A):
    """Maximum row sum of absolute stored values; empty rows contribute 0."""
    parts = _norm_parts(A)
    _advance(state, "matrix_inf_norm")
    dtype = np.abs(parts.values[:0]).dtype if parts.values is not None else np.dtype(np.float64)
    best = dtype.type(0)
    for i in range(parts.nrows):
        seg = parts.values[int(parts.indptr[i]):int(parts.indptr[i + 1])]
        s = fold(np.abs(seg), dtype)
        if np.isnan(s) or s > best:
            best = s
            if np.isnan(s):
                break
    return best


def matrix_frob_norm(*args):
    """sqrt of the sum of squared magnitudes of stored values.

    Callable as ``matrix_frob_norm(policy, state, A)`` or, defaulting the
    policy, ``matrix_frob_norm(state, A)``.
    """
    if len(args) == 3:
        _, state, A = args
    elif len(args) == 2:
        state, A = args
    else:
        raise TypeError("matrix_frob_norm takes (policy, state, A) or (state, A)")
    parts = _norm_parts(A)
    _advance(state, "matrix_frob_norm")
    dtype = np.abs(parts.values[:0]).dtype
    mags = np.abs(parts.values)
    return np.sqrt(fold(mags * mags, dtype))


def _dense(obj, want_order=None, name="operand"):
    if not isinstance(obj, DenseView):
        raise TypeError(f"{name} must be a DenseView")
    if want_order is not None and obj.order != want_order:
        raise ShapeError(f"{name}: expected order {want_order}, got {obj.order}")
    return obj


def multiply(policy, state: OperationState, A, X, D, Y=None):
    """y = op(alpha*A) * x  (three operands)  or
    Y = op(alpha*A) * X + beta*D  (four operands, beta via scaled(beta, D)).

    With alpha == 0 the element data of A and X is never read; with
    beta == 0 (or no D) the element data of D is never read.  D may alias Y.
    """
    if Y is None:
        Y, D = D, None
    _advance(state, "multiply")
    alpha, transpose, conjugate, viewA, _ = _resolve(A)
    m, n = (viewA.ncols, viewA.nrows) if transpose else (viewA.nrows, viewA.ncols)

    beta = 0
    viewD = None
    if D is not None:
        beta, trD, _, viewD, _ = _resolve(D)
        if trD:
            raise ShapeError("transposed dense operand is not supported")
        viewD = _dense(viewD, name="D")

    X = _dense(X, name="X")
    Y = _dense(Y, name="Y")
    if X.order != Y.order:
        raise ShapeError("X and Y must have the same order")
    nrhs = 1 if X.order == 1 else X.extents[1]
    x_rows = X.extents[0]
    y_rows = Y.extents[0]
    if x_rows != n or y_rows != m:
        raise ShapeError(f"op(A) is {m}x{n}, X has {x_rows} rows, Y has {y_rows} rows")
    if X.order == 2 and Y.extents[1] != X.extents[1]:
        raise ShapeError("X and Y must have the same number of columns")
    if viewD is not None and viewD.extents != Y.extents:
        raise ShapeError("D must conform to Y")

    xd = np.asarray(X.data)
    yd = np.asarray(Y.data)
    if np.shares_memory(xd, yd):
        raise AliasError("X must not alias Y")

    Y2 = Y.as2d() if Y.order == 2 else Y.as1d().reshape(-1, 1)
    D2 = None
    if viewD is not None and beta != 0:
        D2 = viewD.as2d() if viewD.order == 2 else viewD.as1d().reshape(-1, 1)

    dtype = Y2.dtype

    if alpha == 0:
        # A and X are never read
        if D2 is None:
            Y2[...] = 0
        else:
            np.multiply(D2, dtype.type(beta), out=Y2)
        return

    validate(viewA).raise_if_failed()
    parts = to_csr_parts(viewA, transpose, conjugate)
    X2 = X.as2d() if X.order == 2 else X.as1d().reshape(-1, 1)
    a = dtype.type(alpha)
    b = dtype.type(beta)
    for i in range(m):
        lo, hi = int(parts.indptr[i]), int(parts.indptr[i + 1])
        cols = parts.indices[lo:hi]
        vals = parts.values[lo:hi]
        for c in range(nrhs):
            s = a * fold(vals * X2[cols, c], dtype)
            if D2 is not None:
                s = s + b * D2[i, c]
            Y2[i, c] = s


def multiply_inspect(policy, state: OperationState, A, X, D, Y=None):
    """Optional pre-pass; may cache a per-row nnz histogram in the handle.
    Never changes multiply results."""
    _, _, _, view, handle = _resolve(A)
    if handle is not None and view.format in ("csr", "csc", "coo"):
        parts = to_csr_parts(view, need_values=False)
        hist = np.diff(parts.indptr)
        handle.opt_store.setdefault("row_nnz_hist", hist)
    _advance(state, "multiply", Phase.INSPECTED)


def _triangular_parts(T):
    alpha, transpose, conjugate, view, handle = _resolve(T)
    if alpha != 1:
        raise ShapeError("triangular_solve takes an unscaled matrix")
    if view.nrows != view.ncols:
        raise ShapeError("triangular matrix must be square")
    validate(view).raise_if_failed()
    parts = to_csr_parts(view, transpose, conjugate)
    lower = upper = False
    diag_pos = np.full(parts.nrows, -1, dtype=np.int64)
    for i in range(parts.nrows):
        for p in range(int(parts.indptr[i]), int(parts.indptr[i + 1])):
            j = int(parts.indices[p])
            if j < i:
                lower = True
            elif j > i:
                upper = True
            else:
                diag_pos[i] = p
    if lower and upper:
        raise PatternError("stored pattern is not triangular")
    missing = np.nonzero(diag_pos < 0)[0]
    if missing.size:
        raise SingularStructureError(int(missing[0]))
    zero = np.nonzero(parts.values[diag_pos] == 0)[0]
    if zero.size:
        raise NumericSingularityError(int(zero[0]))
    return parts, ("upper" if upper else "lower"), diag_pos, handle


def triangular_solve(policy, state: OperationState, T, b, x):
    """Solve T*x = b by substitution in stored-index order; orientation is
    detected from the stored pattern."""
    _advance(state, "triangular_solve")
    parts, orient, diag_pos, _ = _triangular_parts(T)
    b = _dense(b, 1, "b")
    x = _dense(x, 1, "x")
    n = parts.nrows
    if b.extents[0] != n or x.extents[0] != n:
        raise ShapeError("b and x must have length n")
    bd = b.as1d()
    xd = x.as1d()
    if np.shares_memory(bd, xd):
        raise AliasError("b and x must not alias")
    dtype = xd.dtype
    order = range(n) if orient == "lower" else range(n - 1, -1, -1)
    for i in order:
        lo, hi = int(parts.indptr[i]), int(parts.indptr[i + 1])
        dp = int(diag_pos[i])
        sel = [p for p in range(lo, hi) if p != dp]
        if sel:
            cols = parts.indices[sel]
            s = fold(parts.values[sel] * xd[cols], dtype)
        else:
            s = dtype.type(0)
        xd[i] = (bd[i] - s) / parts.values[dp]


def triangular_solve_inspect(policy, state: OperationState, T, b, x):
    """Optional pre-pass; may cache a level-set schedule in the handle."""
    _, _, _, view, handle = _resolve(T)
    if handle is not None and "levels" not in handle.opt_store:
        try:
            parts, orient, _, _ = _triangular_parts(T)
        except Exception:
            parts = None
        if parts is not None:
            n = parts.nrows
            level = np.zeros(n, dtype=np.int64)
            order = range(n) if orient == "lower" else range(n - 1, -1, -1)
            for i in order:
                deps = [
                    int(level[int(parts.indices[p])])
                    for p in range(int(parts.indptr[i]), int(parts.indptr[i + 1]))
                    if int(parts.indices[p]) != i
                ]
                level[i] = 1 + max(deps) if deps else 0
            handle.opt_store["levels"] = level
    _advance(state, "triangular_solve", Phase.INSPECTED)


def sampled_multiply(policy, state: OperationState, X, Y, C):
    """SDDMM: for every stored position (i, j) of C, write the dot product
    of row i of X with column j of Y.  C's pattern is the mask and stays
    fixed."""
    _advance(state, "sampled_multiply")
    X = _dense(X, 2, "X")
    Y = _dense(Y, 2, "Y")
    _, _, _, viewC, _ = _resolve(C)
    validate(viewC).raise_if_failed()
    m, k = X.extents
    k2, n = Y.extents
    if k != k2:
        raise ShapeError("inner extents of X and Y differ")
    if viewC.shape != (m, n):
        raise ShapeError("C extents must be (rows(X), cols(Y))")
    cvals = _writable_values(viewC)
    parts = to_csr_parts(viewC, need_values=False)
    # map canonical positions back to the view's storage order
    X2, Y2 = X.as2d(), Y.as2d()
    dtype = cvals.dtype
    pos = _storage_positions(viewC, parts)
    p = 0
    for i in range(m):
        for q in range(int(parts.indptr[i]), int(parts.indptr[i + 1])):
            j = int(parts.indices[q])
            cvals[pos[p]] = fold(X2[i, :] * Y2[:, j], dtype)
            p += 1


def _storage_positions(view, parts):
    """For each canonical (row-major) entry, the position in the view's own
    values array."""
    if view.format == "csr":
        return np.arange(view.nnz)
    if view.format == "coo":
        return np.arange(view.nnz)  # canonical COO is row-major already
    # csc: canonical order permutes the column-major storage
    import numpy as _np

    from ._core import INDEX_DT
    coff = _np.asarray(view.col_offsets, dtype=INDEX_DT)
    ri = _np.asarray(view.row_indices, dtype=INDEX_DT)
    base = view.index_base
    coff = coff - coff[0]
    order = []
    heads = [(int(ri[p]) - base, j, p) for j in range(view.ncols)
             for p in range(int(coff[j]), int(coff[j + 1]))]
    heads.sort()
    return _np.asarray([p for (_, _, p) in heads], dtype=INDEX_DT)


def sampled_multiply_inspect(policy, state: OperationState, X, Y, C):
    _advance(state, "sampled_multiply", Phase.INSPECTED)
