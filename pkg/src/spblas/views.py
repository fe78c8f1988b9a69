"""Non-owning sparse and dense views plus the symbolic scale/transpose wrappers.

Views are immutable descriptors over user-provided arrays.  They never copy,
resize, or free the arrays they reference.  ``ScaledView`` and
``TransposedView`` are purely symbolic: constructing one touches no element
data, so they can wrap arbitrary array-like stubs.
"""

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ValidationError

__all__ = [
    "CsrView",
    "CscView",
    "CooView",
    "DenseView",
    "IsoValue",
    "ScaledView",
    "TransposedView",
    "ValidationReport",
    "validate",
    "scaled",
    "transposed",
]


def _as_array(a):
    """Coerce to ndarray without copying when already an ndarray."""
    if isinstance(a, (IsoValue, np.ndarray)):
        return a
    return np.asarray(a)


class IsoValue:
    """Symbolic constant-valued array: every position below ``count`` reads
    as ``value``.  Accepted wherever a values array is read, never where one
    is written."""

    __slots__ = ("value", "count")

    def __init__(self, value, count):
        self.value = value
        self.count = int(count)

    def __len__(self):
        return self.count

    def __getitem__(self, k):
        if isinstance(k, slice):
            n = len(range(*k.indices(self.count)))
            return np.full(n, self.value)
        arr_k = np.asarray(k)
        if arr_k.ndim:
            return np.full(arr_k.shape, self.value)
        if not 0 <= int(arr_k) < self.count:
            raise IndexError(k)
        return self.value

    def materialize(self, dtype=None):
        return np.full(self.count, self.value, dtype=dtype)

    def __repr__(self):
        return f"IsoValue({self.value!r}, count={self.count})"


@dataclass(frozen=True)
class CsrView:
    """Compressed sparse row view: ``row_offsets`` (nrows+1), ``col_indices``
    and ``values`` (nnz each)."""

    nrows: int
    ncols: int
    row_offsets: Any
    col_indices: Any
    values: Any
    nnz: Optional[int] = None
    index_base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "row_offsets", _as_array(self.row_offsets))
        object.__setattr__(self, "col_indices", _as_array(self.col_indices))
        object.__setattr__(self, "values", _as_array(self.values))
        if self.nnz is None:
            object.__setattr__(self, "nnz", len(self.col_indices))

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def format(self):
        return "csr"


@dataclass(frozen=True)
class CscView:
    """Compressed sparse column view: ``col_offsets`` (ncols+1),
    ``row_indices`` and ``values`` (nnz each)."""

    nrows: int
    ncols: int
    col_offsets: Any
    row_indices: Any
    values: Any
    nnz: Optional[int] = None
    index_base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "col_offsets", _as_array(self.col_offsets))
        object.__setattr__(self, "row_indices", _as_array(self.row_indices))
        object.__setattr__(self, "values", _as_array(self.values))
        if self.nnz is None:
            object.__setattr__(self, "nnz", len(self.row_indices))

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def format(self):
        return "csc"


@dataclass(frozen=True)
class CooView:
    """Coordinate view: parallel ``row_indices``/``col_indices``/``values``
    arrays, sorted lexicographically by (row, column), no duplicates."""

    nrows: int
    ncols: int
    row_indices: Any
    col_indices: Any
    values: Any
    nnz: Optional[int] = None
    index_base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "row_indices", _as_array(self.row_indices))
        object.__setattr__(self, "col_indices", _as_array(self.col_indices))
        object.__setattr__(self, "values", _as_array(self.values))
        if self.nnz is None:
            object.__setattr__(self, "nnz", len(self.row_indices))

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def format(self):
        return "coo"


@dataclass(frozen=True)
class DenseView:
    """Contiguous dense vector (order 1) or matrix (order 2) view.

    ``layout`` distinguishes row-major from column-major storage and only
    matters for order 2.
    """

    data: Any
    extents: Tuple[int, ...]
    layout: str = "row"  # "row" | "col"

    def __post_init__(self):
        object.__setattr__(self, "data", _as_array(self.data))
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        if self.layout not in ("row", "col"):
            raise ValueError(f"bad layout {self.layout!r}")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")

    @classmethod
    def vector(cls, data):
        data = np.asarray(data)
        return cls(data.reshape(-1), (data.size,))

    @classmethod
    def matrix(cls, data, layout="row"):
        data = np.asarray(data)
        if data.ndim != 2:
            raise ValueError("matrix() expects a 2-d array")
        flat = data.reshape(-1, order="C" if layout == "row" else "F")
        return cls(flat, data.shape, layout)

    @property
    def order(self):
        return len(self.extents)

    def as1d(self):
        return np.asarray(self.data)

    def as2d(self):
        """2-d ndarray aliasing the flat buffer (no copy)."""
        order = "C" if self.layout == "row" else "F"
        return np.asarray(self.data).reshape(self.extents, order=order)


@dataclass(frozen=True)
class ScaledView:
    """Symbolic ``alpha * inner``; nesting composes multiplicatively."""

    alpha: Any
    inner: Any


@dataclass(frozen=True)
class TransposedView:
    """Symbolic (conjugate) transpose of ``inner``."""

    inner: Any
    conjugate: bool = False


def scaled(alpha, v):
    return ScaledView(alpha, v)


def transposed(v, conjugate=False):
    return TransposedView(v, conjugate)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)

    def raise_if_failed(self):
        if not self.ok:
            raise ValidationError(self.violations)


def _values_length_ok(values, nnz):
    if isinstance(values, IsoValue):
        return values.count >= nnz
    return len(values) == nnz


def _check_compressed(offsets, indices, values, n_major, n_minor, nnz, base, kind):
    # kind is "row"/"col"; offsets run over the major dimension
    bad = []
    if len(offsets) != n_major + 1:
        bad.append((f"{kind}_offsets wrong length", len(offsets)))
        return bad
    if len(indices) != nnz:
        bad.append(("indices wrong length", len(indices)))
        return bad
    if not _values_length_ok(values, nnz):
        bad.append(("values wrong length", len(values)))
    off = np.asarray(offsets)
    dec = np.nonzero(off[1:] < off[:-1])[0]
    if dec.size:
        bad.append((f"{kind}_offsets not non-decreasing", int(dec[0])))
        return bad
    if int(off[n_major]) - int(off[0]) != nnz:
        bad.append(("offsets/nnz mismatch", int(off[n_major]) - int(off[0])))
        return bad
    idx = np.asarray(indices)
    if nnz:
        oor = np.nonzero((idx < base) | (idx >= base + n_minor))[0]
        if oor.size:
            bad.append(("index out of range", int(oor[0])))
    for i in range(n_major):
        lo, hi = int(off[i]) - int(off[0]), int(off[i + 1]) - int(off[0])
        seg = idx[lo:hi]
        if seg.size > 1 and not np.all(seg[1:] > seg[:-1]):
            bad.append((f"indices not strictly increasing within {kind}", i))
            break
    return bad


def validate(view) -> ValidationReport:
    """Check a sparse or dense view against its format invariants.

    Reports the first offending index per violation category; never raises.
    """
    bad = []
    if isinstance(view, CsrView):
        bad = _check_compressed(
            view.row_offsets, view.col_indices, view.values,
            view.nrows, view.ncols, view.nnz, view.index_base, "row",
        )
    elif isinstance(view, CscView):
        bad = _check_compressed(
            view.col_offsets, view.row_indices, view.values,
            view.ncols, view.nrows, view.nnz, view.index_base, "col",
        )
    elif isinstance(view, CooView):
        ri, ci = np.asarray(view.row_indices), np.asarray(view.col_indices)
        if len(ri) != view.nnz or len(ci) != view.nnz:
            bad.append(("indices wrong length", min(len(ri), len(ci))))
        elif not _values_length_ok(view.values, view.nnz):
            bad.append(("values wrong length", len(view.values)))
        else:
            b = view.index_base
            if view.nnz:
                oor = np.nonzero(
                    (ri < b) | (ri >= b + view.nrows)
                    | (ci < b) | (ci >= b + view.ncols)
                )[0]
                if oor.size:
                    bad.append(("index out of range", int(oor[0])))
            if view.nnz > 1:
                key_prev = (ri[:-1].astype(np.int64), ci[:-1].astype(np.int64))
                key_next = (ri[1:].astype(np.int64), ci[1:].astype(np.int64))
                ordered = (key_next[0] > key_prev[0]) | (
                    (key_next[0] == key_prev[0]) & (key_next[1] > key_prev[1])
                )
                off = np.nonzero(~ordered)[0]
                if off.size:
                    bad.append(("entries not sorted/unique", int(off[0])))
    elif isinstance(view, DenseView):
        want = 1
        for e in view.extents:
            want *= e
        if len(view.data) != want:
            bad.append(("data wrong length", len(view.data)))
    else:
        raise TypeError(f"not a view: {type(view).__name__}")
    return ValidationReport(ok=not bad, violations=bad)


# ---------------------------------------------------------------------------
# wrapper unwrapping shared by every kernel


def unwrap(obj):
    """Peel ScaledView/TransposedView layers.

    Returns ``(alpha, transpose, conjugate, core)`` where ``core`` is the
    innermost view or handle.  ``alpha`` is 1 when no scaling wrapper is
    present; double transposition cancels.
    """
    alpha = 1
    transpose = False
    conjugate = False
    while True:
        if isinstance(obj, ScaledView):
            alpha = obj.alpha * alpha if alpha != 1 else obj.alpha
            obj = obj.inner
        elif isinstance(obj, TransposedView):
            transpose = not transpose
            if obj.conjugate:
                conjugate = not conjugate
            obj = obj.inner
        else:
            return alpha, transpose, conjugate, obj


def core_view(obj):
    """Innermost plain view behind wrappers and handles."""
    _, _, _, core = unwrap(obj)
    return getattr(core, "view", core)
