"""Independent reference implementations used to judge the kernels.

Nothing in this module calls a kernel.  Mirrors are extracted straight from
the view arrays with naive loops; dot products are evaluated exactly
(error-free transformation of each product, then exact summation with
``math.fsum``), so the reference value is the correctly rounded true result.
For binary32 operands the float64 arithmetic is already exact.
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .views import CooView, CscView, CsrView, DenseView, IsoValue

__all__ = [
    "DenseMirror",
    "mirror_from_view",
    "exact_dot",
    "oracle_spmv",
    "oracle_gemm",
    "oracle_add",
    "oracle_hadamard",
    "oracle_trisolve",
    "oracle_pattern",
    "ErrorBoundSpec",
    "serial_bound_spec",
    "check_error_bound",
    "BoundCheck",
]


# ---------------------------------------------------------------------------
# exact dot products


_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant


def _two_prod(a: float, b: float):
    """Error-free product: returns (p, e) with a*b == p + e exactly."""
    p = a * b
    a_hi = a * _SPLITTER
    a_hi = a_hi - (a_hi - a)
    a_lo = a - a_hi
    b_hi = b * _SPLITTER
    b_hi = b_hi - (b_hi - b)
    b_lo = b - b_hi
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


def exact_dot(xs, ys) -> float:
    """Correctly rounded sum of products of two float sequences."""
    pieces = []
    for a, b in zip(xs, ys):
        p, e = _two_prod(float(a), float(b))
        pieces.append(p)
        pieces.append(e)
    return math.fsum(pieces)


def exact_sum(xs) -> float:
    return math.fsum(float(v) for v in xs)


# ---------------------------------------------------------------------------
# dense mirrors


@dataclass
class DenseMirror:
    """Dense reflection of a sparse view: float64 data plus a boolean
    pattern.  Positions outside the pattern hold exact zero."""

    nrows: int
    ncols: int
    data: Any
    pattern: Any

    @classmethod
    def zeros(cls, nrows, ncols):
        return cls(nrows, ncols, np.zeros((nrows, ncols)),
                   np.zeros((nrows, ncols), dtype=bool))

    def triples(self):
        out = []
        for i in range(self.nrows):
            for j in range(self.ncols):
                if self.pattern[i, j]:
                    out.append((i, j, self.data[i, j]))
        return out


def _value_at(values, k):
    v = values[k]
    return complex(v).real if isinstance(v, complex) or np.iscomplexobj(v) else float(v)


def mirror_from_view(view) -> DenseMirror:
    """Extract a mirror directly from a view's arrays (no library kernels)."""
    if isinstance(view, DenseView):
        a = view.as2d() if view.order == 2 else view.as1d().reshape(-1, 1)
        m = DenseMirror.zeros(*a.shape)
        m.data[...] = np.asarray(a, dtype=np.float64)
        m.pattern[...] = True
        return m
    base = view.index_base
    m = DenseMirror.zeros(view.nrows, view.ncols)
    if isinstance(view, CsrView):
        off = view.row_offsets
        for i in range(view.nrows):
            for p in range(int(off[i]) - int(off[0]), int(off[i + 1]) - int(off[0])):
                j = int(view.col_indices[p]) - base
                m.data[i, j] = float(view.values[p])
                m.pattern[i, j] = True
    elif isinstance(view, CscView):
        off = view.col_offsets
        for j in range(view.ncols):
            for p in range(int(off[j]) - int(off[0]), int(off[j + 1]) - int(off[0])):
                i = int(view.row_indices[p]) - base
                m.data[i, j] = float(view.values[p])
                m.pattern[i, j] = True
    elif isinstance(view, CooView):
        for p in range(view.nnz):
            i = int(view.row_indices[p]) - base
            j = int(view.col_indices[p]) - base
            m.data[i, j] = float(view.values[p])
            m.pattern[i, j] = True
    else:
        raise TypeError(f"cannot mirror {type(view).__name__}")
    return m


# ---------------------------------------------------------------------------
# reference operations (exact where summation is involved)


def oracle_spmv(m: DenseMirror, x, alpha=1.0, beta=0.0, d=None):
    """Exact per-element alpha * A @ x + beta * d over the stored pattern."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(m.nrows)
    for i in range(m.nrows):
        js = [j for j in range(m.ncols) if m.pattern[i, j]]
        pieces = []
        for j in js:
            p, e = _two_prod(float(alpha) * m.data[i, j], x[j])
            pieces.extend((p, e))
        if beta != 0.0 and d is not None:
            pieces.append(float(beta) * float(d[i]))
        out[i] = math.fsum(pieces)
    return out


def oracle_gemm(ma: DenseMirror, mb: DenseMirror):
    """Exact dense product of two mirrors, plus the boolean product pattern."""
    if ma.ncols != mb.nrows:
        raise ValueError("extent mismatch")
    out = DenseMirror.zeros(ma.nrows, mb.ncols)
    out.pattern[...] = (ma.pattern.astype(np.int64) @ mb.pattern.astype(np.int64)) > 0
    for i in range(ma.nrows):
        for j in range(mb.ncols):
            if out.pattern[i, j]:
                ks = [k for k in range(ma.ncols) if ma.pattern[i, k] and mb.pattern[k, j]]
                out.data[i, j] = exact_dot(
                    [ma.data[i, k] for k in ks], [mb.data[k, j] for k in ks]
                )
    return out


def oracle_add(ma: DenseMirror, mb: DenseMirror):
    out = DenseMirror.zeros(ma.nrows, ma.ncols)
    out.pattern[...] = ma.pattern | mb.pattern
    out.data[...] = ma.data + mb.data
    return out


def oracle_hadamard(ma: DenseMirror, mb: DenseMirror):
    out = DenseMirror.zeros(ma.nrows, ma.ncols)
    out.pattern[...] = ma.pattern & mb.pattern
    out.data[out.pattern] = (ma.data * mb.data)[out.pattern]
    return out


def oracle_trisolve(mt: DenseMirror, b):
    """Dense substitution with exact row dots; orientation from the pattern."""
    n = mt.nrows
    b = np.asarray(b, dtype=np.float64)
    lower = any(mt.pattern[i, j] for i in range(n) for j in range(i))
    order = range(n) if lower or not _has_upper(mt) else range(n - 1, -1, -1)
    x = np.zeros(n)
    for i in order:
        js = [j for j in range(n) if mt.pattern[i, j] and j != i]
        s = exact_dot([mt.data[i, j] for j in js], [x[j] for j in js])
        x[i] = (b[i] - s) / mt.data[i, i]
    return x


def _has_upper(mt):
    return any(mt.pattern[i, j] for i in range(mt.nrows) for j in range(i + 1, mt.ncols))


def oracle_pattern(kind, A: DenseMirror, B: Optional[DenseMirror] = None):
    """Boolean-arithmetic pattern oracle: product / union / intersection /
    transpose / dense extraction."""
    if kind == "product":
        return (A.pattern.astype(np.int64) @ B.pattern.astype(np.int64)) > 0
    if kind == "union":
        return A.pattern | B.pattern
    if kind == "intersection":
        return A.pattern & B.pattern
    if kind == "transpose":
        return A.pattern.T.copy()
    if kind == "extract":
        return (A.data != 0) & A.pattern
    raise ValueError(f"unknown pattern kind {kind!r}")


# ---------------------------------------------------------------------------
# the error-bound framework


@dataclass
class ErrorBoundSpec:
    """Evaluates f(m)*eps*sum(|x_i||y_i|) + g(m)*UN for a declared
    summation order."""

    eps: float
    UN: float
    f_of_n: Callable[[int], float]
    g_of_n: Callable[[int], float]

    def bound(self, terms: Sequence[float]) -> float:
        m = len(terms)
        return self.f_of_n(m) * self.eps * math.fsum(abs(t) for t in terms) \
            + self.g_of_n(m) * self.UN


def serial_bound_spec(dtype) -> ErrorBoundSpec:
    """Serial-summation spec for a working dtype: f(m) = m, g(m) = 2m."""
    fi = np.finfo(np.dtype(dtype))
    return ErrorBoundSpec(
        eps=float(fi.eps),
        UN=float(fi.smallest_subnormal),
        f_of_n=lambda m: m,
        g_of_n=lambda m: 2 * m,
    )


@dataclass
class BoundCheck:
    passed: bool
    error: float
    bound: float

    @property
    def slack(self):
        if self.bound == 0:
            return 0.0 if self.error == 0 else math.inf
        return self.error / self.bound


def check_error_bound(computed, exact, spec: ErrorBoundSpec, terms,
                      dtype=np.float64) -> BoundCheck:
    """Pass iff |computed - round(exact)| is within the spec's bound."""
    rounded = np.dtype(dtype).type(exact)
    err = abs(float(computed) - float(rounded))
    b = spec.bound(terms)
    return BoundCheck(passed=(err <= b) or (err == 0.0), error=err, bound=b)
