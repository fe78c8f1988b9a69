"""Conformance harness: seeded matrix corpus, per-family accuracy suites
judged by the oracle module, the exception-propagation case table, and the
reproducibility (byte-identity) suite.

Each check produces one structured record (family, case id, verdict, slack)
so reports stay machine-readable.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import multistage as ms
from . import single
from .oracle import (
    DenseMirror,
    check_error_bound,
    exact_dot,
    mirror_from_view,
    oracle_add,
    oracle_gemm,
    oracle_hadamard,
    oracle_pattern,
    oracle_spmv,
    oracle_trisolve,
    serial_bound_spec,
)
from .runtime import (
    CnrProperty,
    ExecutionPolicy,
    OperationState,
    deterministic_parallel,
    get_cnr_property,
    sequential,
)
from .views import CsrView, DenseView, scaled

__all__ = [
    "ConformanceRecord",
    "random_csr",
    "structured_cases",
    "corpus",
    "values_suite",
    "patterns_suite",
    "exception_matrix_suite",
    "reproducibility_suite",
    "run_conformance",
    "FAMILIES",
]

DENSITIES = (0.01, 0.1, 0.3)


@dataclass
class ConformanceRecord:
    family: str
    case_id: str
    verdict: str  # "pass" | "fail" | "info"
    slack: float = 0.0
    detail: str = ""

    def line(self):
        return f"{self.family}\t{self.case_id}\t{self.verdict}\t{self.slack:.3e}\t{self.detail}"


# ---------------------------------------------------------------------------
# corpus


def random_csr(rng, nrows, ncols, density, dtype=np.float64, integer=False,
               explicit_zero_frac=0.05):
    """Seeded random CSR matrix; a small fraction of stored entries are
    explicit zeros so the retention rule stays exercised."""
    mask = rng.random((nrows, ncols)) < density
    indptr = [0]
    cols, vals = [], []
    for i in range(nrows):
        js = np.nonzero(mask[i])[0]
        for j in js:
            cols.append(int(j))
            if integer:
                v = float(rng.integers(-(2 ** 10), 2 ** 10 + 1))
            else:
                v = float(rng.uniform(-1, 1))
            if rng.random() < explicit_zero_frac:
                v = 0.0
            vals.append(v)
        indptr.append(len(cols))
    return CsrView(nrows, ncols,
                   np.asarray(indptr, dtype=np.int64),
                   np.asarray(cols, dtype=np.int64),
                   np.asarray(vals, dtype=dtype))


def random_triangular(rng, n, dtype=np.float64, integer=False, lower=True):
    """Unit-ish triangular matrix with a full stored diagonal."""
    dense = np.zeros((n, n))
    for i in range(n):
        rng_row = rng.random(n) < 0.25
        for j in range(n):
            if lower and j < i and rng_row[j]:
                dense[i, j] = int(rng.integers(-4, 5)) if integer else rng.uniform(-0.5, 0.5)
            if not lower and j > i and rng_row[j]:
                dense[i, j] = int(rng.integers(-4, 5)) if integer else rng.uniform(-0.5, 0.5)
        dense[i, i] = 1.0 if integer else rng.uniform(1.0, 2.0)
    indptr = [0]
    cols, vals = [], []
    for i in range(n):
        js = np.nonzero(dense[i])[0]
        cols.extend(int(j) for j in js)
        vals.extend(dense[i, js])
        indptr.append(len(cols))
    return CsrView(n, n, np.asarray(indptr), np.asarray(cols),
                   np.asarray(vals, dtype=dtype))


def structured_cases(dtype=np.float64):
    """Identity, diagonal, dense single row/column, empty, 1xn, nx1."""
    n = 8
    eye = CsrView(n, n, np.arange(n + 1), np.arange(n), np.ones(n, dtype=dtype))
    diag = CsrView(n, n, np.arange(n + 1), np.arange(n),
                   np.asarray([i + 1 for i in range(n)], dtype=dtype))
    dense_row = CsrView(n, n, np.asarray([0] + [n] * n), np.arange(n),
                        np.linspace(-1, 1, n).astype(dtype))
    col_ptr = np.arange(n + 1)
    dense_col = CsrView(n, n, col_ptr, np.zeros(n, dtype=np.int64),
                        np.linspace(-1, 1, n).astype(dtype))
    empty = CsrView(n, n, np.zeros(n + 1, dtype=np.int64),
                    np.empty(0, dtype=np.int64), np.empty(0, dtype=dtype))
    wide = CsrView(1, n, np.asarray([0, n]), np.arange(n), np.ones(n, dtype=dtype))
    tall = CsrView(n, 1, np.arange(n + 1), np.zeros(n, dtype=np.int64),
                   np.ones(n, dtype=dtype))
    return [("identity", eye), ("diagonal", diag), ("dense_row", dense_row),
            ("dense_col", dense_col), ("empty", empty), ("1xn", wide), ("nx1", tall)]


def corpus(seed, count, max_dim=64, densities=DENSITIES, dtype=np.float64,
           integer=False, square=False):
    """Deterministic stream of random matrices for a suite."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        nrows = int(rng.integers(1, max_dim + 1))
        ncols = nrows if square else int(rng.integers(1, max_dim + 1))
        d = densities[k % len(densities)]
        out.append(random_csr(rng, nrows, ncols, d, dtype=dtype, integer=integer))
    return out


# ---------------------------------------------------------------------------
# staged-family drivers (shared by suites and the CLI)


def staged_run(family, policy, A, B=None, D=None, pred=None, conjugate=False,
               out_format="csr", dtype=None, resource=None, shell_base=0):
    """Run a multi-stage family through compute/allocate/fill; returns the
    filled shell."""
    state = OperationState(resource)
    try:
        if family == "sparse_multiply":
            av, bv = ms._resolve(A)[3], ms._resolve(B)[3]
            nrows = av.ncols if _is_transposed(A) else av.nrows
            ncols = bv.nrows if _is_transposed(B) else bv.ncols
            shell = ms.OutputShell(out_format, nrows, ncols, index_base=shell_base)
            ms.sparse_multiply_compute(policy, state, A, B, shell, D)
            shell.allocate(state.result_nnz, dtype=dtype or _dtype_of(A, B, D))
            ms.sparse_multiply_fill(policy, state, A, B, shell, D)
        elif family in ("add", "multiply_elementwise"):
            av = ms._resolve(A)[3]
            shell = ms.OutputShell(out_format, av.nrows, av.ncols, index_base=shell_base)
            compute = ms.add_compute if family == "add" else ms.multiply_elementwise_compute
            fill = ms.add_fill if family == "add" else ms.multiply_elementwise_fill
            compute(policy, state, A, B, shell)
            shell.allocate(state.result_nnz, dtype=dtype or _dtype_of(A, B))
            fill(policy, state, A, B, shell)
        elif family == "convert":
            av = ms._resolve(A)[3]
            nrows = av.extents[0] if isinstance(av, DenseView) else av.nrows
            ncols = av.extents[1] if isinstance(av, DenseView) else av.ncols
            shell = ms.OutputShell(out_format, nrows, ncols, index_base=shell_base)
            ms.convert_compute(policy, state, A, shell)
            shell.allocate(state.result_nnz, dtype=dtype or _dtype_of(A))
            ms.convert_fill(policy, state, A, shell)
        elif family == "filter":
            av = ms._resolve(A)[3]
            shell = ms.OutputShell(out_format, av.nrows, av.ncols, index_base=shell_base)
            ms.filter_compute(policy, state, A, shell, pred)
            shell.allocate(state.result_nnz, dtype=dtype or _dtype_of(A))
            ms.filter_fill(policy, state, A, shell, pred)
        elif family == "transpose":
            av = ms._resolve(A)[3]
            shell = ms.OutputShell(out_format, av.ncols, av.nrows, index_base=shell_base)
            ms.transpose_compute(policy, state, A, shell, conjugate)
            shell.allocate(state.result_nnz, dtype=dtype or _dtype_of(A))
            ms.transpose_fill(policy, state, A, shell, conjugate)
        else:
            raise ValueError(f"unknown staged family {family!r}")
    finally:
        state.destroy()
    return shell


def _is_transposed(obj):
    from .views import unwrap

    return unwrap(obj)[1]


def _dtype_of(*objs):
    from .views import IsoValue, core_view

    dts = []
    for o in objs:
        if o is None:
            continue
        v = core_view(o)
        vals = getattr(v, "values", None)
        if vals is None and isinstance(v, DenseView):
            vals = np.asarray(v.data)
        if isinstance(vals, IsoValue):
            continue
        if vals is not None:
            dts.append(np.asarray(vals).dtype)
    return np.result_type(*dts) if dts else np.dtype(np.float64)


# ---------------------------------------------------------------------------
# value-accuracy suites (section "oracle equivalence")


def _bound_record(family, case_id, computed, exact, terms, dtype):
    spec = serial_bound_spec(dtype)
    chk = check_error_bound(computed, exact, spec, terms, dtype=dtype)
    return ConformanceRecord(family, case_id, "pass" if chk.passed else "fail",
                             chk.slack, f"err={chk.error:.3e} bound={chk.bound:.3e}")


def _spmv_case(case_id, A, dtype, rng, policy):
    x = rng.uniform(-1, 1, A.ncols).astype(dtype)
    y = np.zeros(A.nrows, dtype=dtype)
    st = OperationState()
    single.multiply(policy, st, A, DenseView.vector(x), DenseView.vector(y))
    st.destroy()
    m = mirror_from_view(A)
    exact = oracle_spmv(m, x.astype(np.float64))
    worst = None
    for i in range(A.nrows):
        terms = [abs(m.data[i, j] * float(x[j])) for j in range(A.ncols) if m.pattern[i, j]]
        rec = _bound_record("multiply", f"{case_id}:row{i}", y[i], exact[i], terms, dtype)
        if worst is None or rec.slack > worst.slack or rec.verdict == "fail":
            worst = rec
        if rec.verdict == "fail":
            return rec
    if worst is None:
        worst = ConformanceRecord("multiply", case_id, "pass", 0.0, "empty")
    worst.case_id = case_id
    return worst


def _pattern_equal(view, pattern):
    got = mirror_from_view(view).pattern
    return bool(np.array_equal(got, pattern))


def _spgemm_case(case_id, A, B, dtype, policy):
    shell = staged_run("sparse_multiply", policy, A, B, dtype=dtype)
    C = shell.view()
    ma, mb = mirror_from_view(A), mirror_from_view(B)
    want_pat = oracle_pattern("product", ma, mb)
    if not _pattern_equal(C, want_pat):
        return ConformanceRecord("sparse_multiply", case_id, "fail", math.inf,
                                 "pattern mismatch")
    exact = oracle_gemm(ma, mb)
    mc = mirror_from_view(C)
    worst = ConformanceRecord("sparse_multiply", case_id, "pass", 0.0)
    for i in range(C.nrows):
        for j in range(C.ncols):
            if not want_pat[i, j]:
                continue
            ks = [k for k in range(A.ncols) if ma.pattern[i, k] and mb.pattern[k, j]]
            terms = [abs(ma.data[i, k] * mb.data[k, j]) for k in ks]
            rec = _bound_record("sparse_multiply", case_id, mc.data[i, j],
                               exact.data[i, j], terms, dtype)
            if rec.verdict == "fail":
                return rec
            if rec.slack > worst.slack:
                worst = rec
    return worst


def _ewise_case(family, case_id, A, B, dtype, policy):
    shell = staged_run(family, policy, A, B, dtype=dtype)
    C = shell.view()
    ma, mb = mirror_from_view(A), mirror_from_view(B)
    kind = "union" if family == "add" else "intersection"
    want_pat = oracle_pattern(kind, ma, mb)
    if not _pattern_equal(C, want_pat):
        return ConformanceRecord(family, case_id, "fail", math.inf, "pattern mismatch")
    exact = oracle_add(ma, mb) if family == "add" else oracle_hadamard(ma, mb)
    mc = mirror_from_view(C)
    worst = ConformanceRecord(family, case_id, "pass", 0.0)
    for (i, j, v) in mc.triples():
        terms = [abs(ma.data[i, j]), abs(mb.data[i, j])] if family == "add" \
            else [abs(ma.data[i, j] * mb.data[i, j])]
        rec = _bound_record(family, case_id, v, exact.data[i, j], terms, dtype)
        if rec.verdict == "fail":
            return rec
        if rec.slack > worst.slack:
            worst = rec
    return worst


def _sddmm_case(case_id, C_mask, k, dtype, rng, policy):
    m, n = C_mask.nrows, C_mask.ncols
    X = rng.uniform(-1, 1, (m, k)).astype(dtype)
    Y = rng.uniform(-1, 1, (k, n)).astype(dtype)
    vals = np.zeros(C_mask.nnz, dtype=dtype)
    C = CsrView(m, n, C_mask.row_offsets, C_mask.col_indices, vals)
    st = OperationState()
    single.sampled_multiply(policy, st, DenseView.matrix(X), DenseView.matrix(Y), C)
    st.destroy()
    mx = DenseMirror(m, k, X.astype(np.float64), np.ones((m, k), dtype=bool))
    my = DenseMirror(k, n, Y.astype(np.float64), np.ones((k, n), dtype=bool))
    exact = oracle_gemm(mx, my)
    mc = mirror_from_view(C)
    worst = ConformanceRecord("sampled_multiply", case_id, "pass", 0.0)
    for (i, j, v) in mc.triples():
        terms = [abs(float(X[i, t]) * float(Y[t, j])) for t in range(k)]
        rec = _bound_record("sampled_multiply", case_id, v, exact.data[i, j], terms, dtype)
        if rec.verdict == "fail":
            return rec
        if rec.slack > worst.slack:
            worst = rec
    return worst


def _trisolve_case(case_id, T, dtype, rng, policy):
    """Row-wise residual check: T is applied exactly to the computed x and
    compared against b within the dot-product bound."""
    n = T.nrows
    b = rng.uniform(-1, 1, n).astype(dtype)
    x = np.zeros(n, dtype=dtype)
    st = OperationState()
    single.triangular_solve(policy, st, T, DenseView.vector(b), DenseView.vector(x))
    st.destroy()
    mt = mirror_from_view(T)
    worst = ConformanceRecord("triangular_solve", case_id, "pass", 0.0)
    spec = serial_bound_spec(dtype)
    for i in range(n):
        js = [j for j in range(n) if mt.pattern[i, j]]
        resid = exact_dot([mt.data[i, j] for j in js], [float(x[j]) for j in js]) - float(b[i])
        terms = [abs(mt.data[i, j] * float(x[j])) for j in js] + [abs(float(b[i]))]
        bound = spec.bound(terms)
        ok = abs(resid) <= bound or resid == 0.0
        slack = abs(resid) / bound if bound else 0.0
        if not ok:
            return ConformanceRecord("triangular_solve", case_id, "fail", slack,
                                     f"residual={resid:.3e} bound={bound:.3e}")
        if slack > worst.slack:
            worst = ConformanceRecord("triangular_solve", case_id, "pass", slack)
    return worst


def _norm_case(case_id, A, dtype, policy):
    st = OperationState()
    inf_n = single.matrix_inf_norm(policy, st, A)
    st.destroy()
    st = OperationState()
    frob = single.matrix_frob_norm(policy, st, A)
    st.destroy()
    m = mirror_from_view(A)
    rows = [math.fsum(abs(m.data[i, j]) for j in range(A.ncols) if m.pattern[i, j])
            for i in range(A.nrows)]
    exact_inf = max(rows) if rows else 0.0
    exact_frob = math.sqrt(math.fsum(m.data[i, j] ** 2 for (i, j, _) in
                                     [(i, j, 0) for i in range(A.nrows)
                                      for j in range(A.ncols) if m.pattern[i, j]]))
    vals = [abs(m.data[i, j]) for i in range(A.nrows) for j in range(A.ncols)
            if m.pattern[i, j]]
    r1 = _bound_record("norms", f"{case_id}:inf", inf_n, exact_inf, vals, dtype)
    r2 = _bound_record("norms", f"{case_id}:frob", frob, exact_frob,
                       [v * v for v in vals] + [exact_frob], dtype)
    return r1 if (r1.verdict == "fail" or r1.slack >= r2.slack) else r2


def values_suite(family, count=200, seed=1234, dtype=np.float64,
                 policy=sequential, max_dim=64) -> List[ConformanceRecord]:
    """Accuracy records for one kernel family over the seeded corpus."""
    rng = np.random.default_rng(seed)
    records = []
    for k in range(count):
        cid = f"{family}:{np.dtype(dtype).name}:{k}"
        d = DENSITIES[k % len(DENSITIES)]
        if family == "multiply":
            A = random_csr(rng, int(rng.integers(1, max_dim + 1)),
                           int(rng.integers(1, max_dim + 1)), d, dtype=dtype)
            records.append(_spmv_case(cid, A, dtype, rng, policy))
        elif family == "sparse_multiply":
            n1, n2, n3 = (int(rng.integers(1, max_dim // 2 + 1)) for _ in range(3))
            A = random_csr(rng, n1, n2, d, dtype=dtype)
            B = random_csr(rng, n2, n3, d, dtype=dtype)
            records.append(_spgemm_case(cid, A, B, dtype, policy))
        elif family in ("add", "multiply_elementwise"):
            n1, n2 = (int(rng.integers(1, max_dim + 1)) for _ in range(2))
            A = random_csr(rng, n1, n2, d, dtype=dtype)
            B = random_csr(rng, n1, n2, d, dtype=dtype)
            records.append(_ewise_case(family, cid, A, B, dtype, policy))
        elif family == "sampled_multiply":
            n1, n2 = (int(rng.integers(1, max_dim // 2 + 1)) for _ in range(2))
            kk = int(rng.integers(1, 17))
            mask = random_csr(rng, n1, n2, max(d, 0.1), dtype=dtype)
            records.append(_sddmm_case(cid, mask, kk, dtype, rng, policy))
        elif family == "triangular_solve":
            n = int(rng.integers(1, max_dim // 2 + 1))
            T = random_triangular(rng, n, dtype=dtype, lower=bool(rng.integers(2)))
            records.append(_trisolve_case(cid, T, dtype, rng, policy))
        elif family == "norms":
            A = random_csr(rng, int(rng.integers(1, max_dim + 1)),
                           int(rng.integers(1, max_dim + 1)), d, dtype=dtype)
            records.append(_norm_case(cid, A, dtype, policy))
        else:
            raise ValueError(f"unknown family {family!r}")
    return records


def patterns_suite(count=50, seed=4321, dtype=np.float64,
                   policy=sequential) -> List[ConformanceRecord]:
    """Exact pattern equality for every staged family on random corpora."""
    rng = np.random.default_rng(seed)
    records = []
    for k in range(count):
        d = DENSITIES[k % len(DENSITIES)]
        n1, n2, n3 = (int(rng.integers(1, 33)) for _ in range(3))
        A = random_csr(rng, n1, n2, d, dtype=dtype)
        B = random_csr(rng, n2, n3, d, dtype=dtype)
        E = random_csr(rng, n1, n2, d, dtype=dtype)
        ma, mb, me = (mirror_from_view(v) for v in (A, B, E))
        checks = [
            ("sparse_multiply", staged_run("sparse_multiply", policy, A, B).view(),
             oracle_pattern("product", ma, mb)),
            ("add", staged_run("add", policy, A, E).view(),
             oracle_pattern("union", ma, me)),
            ("multiply_elementwise", staged_run("multiply_elementwise", policy, A, E).view(),
             oracle_pattern("intersection", ma, me)),
            ("transpose", staged_run("transpose", policy, A).view(),
             oracle_pattern("transpose", ma)),
            ("filter", staged_run("filter", policy, A, pred=lambda i, j, v: v > 0).view(),
             ma.pattern & (ma.data > 0)),
            ("convert", staged_run("convert", policy, A, out_format="csc").view(),
             ma.pattern),
        ]
        for fam, got, want in checks:
            ok = _pattern_equal(got, want)
            records.append(ConformanceRecord(
                fam, f"pattern:{k}", "pass" if ok else "fail",
                0.0 if ok else math.inf))
    return records


# ---------------------------------------------------------------------------
# exception-propagation case table


def _run_spmv(A, x, alpha, beta, y0):
    y = y0.copy()
    st = OperationState()
    Ad = scaled(alpha, A) if alpha != 1 else A
    D = scaled(beta, DenseView.vector(y))
    with np.errstate(all="ignore"):  # NaN/Inf cases are the point here
        single.multiply(sequential, st, Ad, DenseView.vector(x), D,
                        DenseView.vector(y))
    st.destroy()
    return y


def exception_matrix_suite() -> List[ConformanceRecord]:
    """The eight NaN/Inf/zero-scalar propagation cases."""
    fam = "exception_consistency"
    rec = []
    nan, inf = float("nan"), float("inf")

    def case(cid, ok, detail=""):
        rec.append(ConformanceRecord(fam, cid, "pass" if ok else "fail",
                                     0.0 if ok else math.inf, detail))

    # 1. stored NaN in A propagates to the affected row
    A = CsrView(2, 2, [0, 1, 2], [0, 1], [nan, 1.0])
    y = _run_spmv(A, np.ones(2), 1.0, 0.0, np.zeros(2))
    case("stored_nan", math.isnan(y[0]) and y[1] == 1.0)

    # 2. stored Inf propagates as Inf or NaN
    A = CsrView(2, 2, [0, 1, 2], [0, 1], [inf, 1.0])
    y = _run_spmv(A, np.ones(2), 1.0, 0.0, np.zeros(2))
    case("stored_inf", (math.isinf(y[0]) or math.isnan(y[0])) and y[1] == 1.0)

    # 3. NaN in x against an all-implicit-zero column stays out of y
    A = CsrView(2, 2, [0, 1, 2], [0, 0], [1.0, 2.0])  # column 1 never stored
    x = np.asarray([1.0, nan])
    y = _run_spmv(A, x, 1.0, 0.0, np.zeros(2))
    case("x_nan_implicit_col", np.all(np.isfinite(y)))

    # 4. Inf in x against an explicit stored zero participates (0*Inf = NaN)
    A = CsrView(1, 2, [0, 2], [0, 1], [1.0, 0.0])
    y = _run_spmv(A, np.asarray([1.0, inf]), 1.0, 0.0, np.zeros(1))
    case("x_inf_explicit_zero", math.isnan(y[0]))

    # 5. alpha=0: A and x are never read
    A = CsrView(2, 2, [0, 2, 4], [0, 1, 0, 1], [nan, inf, nan, inf])
    y0 = np.asarray([3.0, 4.0])
    y = _run_spmv(A, np.asarray([nan, inf]), 0.0, 1.0, y0)
    case("alpha_zero", np.array_equal(y, y0))

    # 6. beta=0: the input y is never read
    A = CsrView(2, 2, [0, 1, 2], [0, 1], [1.0, 1.0])
    y = _run_spmv(A, np.ones(2), 1.0, 0.0, np.asarray([nan, inf]))
    case("beta_zero", np.all(np.isfinite(y)))

    # 7. alpha=beta=0: y is simply initialized to 0
    y = _run_spmv(A, np.asarray([nan, nan]), 0.0, 0.0, np.asarray([nan, inf]))
    case("alpha_beta_zero", np.array_equal(y, np.zeros(2)))

    # 8. overflow cancellation: any of {NaN, +Inf, -Inf, 0} is acceptable
    big = np.finfo(np.float64).max * 0.75
    A = CsrView(1, 4, [0, 4], [0, 1, 2, 3], [big, big, -big, -big])
    y = _run_spmv(A, np.ones(4), 1.0, 0.0, np.zeros(1))
    v = y[0]
    case("inf_cancellation",
         math.isnan(v) or math.isinf(v) or v == 0.0, detail=f"value={v!r}")
    return rec


# ---------------------------------------------------------------------------
# reproducibility (byte identity)


FAMILIES = ("multiply", "sparse_multiply", "add", "multiply_elementwise",
            "sampled_multiply", "triangular_solve", "norms", "convert",
            "filter", "transpose")


def _family_bytes(family, policy, seed=7):
    """Run one representative case of a family and serialize every output."""
    rng = np.random.default_rng(seed)
    d = 0.2
    if family == "multiply":
        A = random_csr(rng, 40, 32, d)
        x = rng.uniform(-1, 1, 32)
        y = np.zeros(40)
        st = OperationState()
        single.multiply(policy, st, A, DenseView.vector(x), DenseView.vector(y))
        st.destroy()
        return y.tobytes()
    if family == "norms":
        A = random_csr(rng, 40, 32, d)
        st = OperationState()
        v1 = single.matrix_inf_norm(policy, st, A)
        st.destroy()
        st = OperationState()
        v2 = single.matrix_frob_norm(policy, st, A)
        st.destroy()
        return np.asarray([v1, v2]).tobytes()
    if family == "triangular_solve":
        T = random_triangular(rng, 24)
        b = rng.uniform(-1, 1, 24)
        x = np.zeros(24)
        st = OperationState()
        single.triangular_solve(policy, st, T, DenseView.vector(b), DenseView.vector(x))
        st.destroy()
        return x.tobytes()
    if family == "sampled_multiply":
        mask = random_csr(rng, 16, 20, 0.3)
        X = rng.uniform(-1, 1, (16, 8))
        Y = rng.uniform(-1, 1, (8, 20))
        C = CsrView(16, 20, mask.row_offsets, mask.col_indices,
                    np.zeros(mask.nnz))
        st = OperationState()
        single.sampled_multiply(policy, st, DenseView.matrix(X),
                                DenseView.matrix(Y), C)
        st.destroy()
        return np.asarray(C.values).tobytes()
    # staged families
    A = random_csr(rng, 24, 20, d)
    if family == "sparse_multiply":
        B = random_csr(rng, 20, 28, d)
        shell = staged_run("sparse_multiply", policy, A, B)
    elif family in ("add", "multiply_elementwise"):
        B = random_csr(rng, 24, 20, d)
        shell = staged_run(family, policy, A, B)
    elif family == "convert":
        shell = staged_run("convert", policy, A, out_format="csc")
    elif family == "filter":
        shell = staged_run("filter", policy, A, pred=lambda i, j, v: v > 0)
    elif family == "transpose":
        shell = staged_run("transpose", policy, A)
    else:
        raise ValueError(family)
    parts = [np.asarray(a).tobytes() for a in
             (shell.row_offsets, shell.col_indices, shell.col_offsets,
              shell.row_indices, shell.values) if a is not None]
    return b"".join(parts)


def _first_divergence(a: bytes, b: bytes):
    if len(a) != len(b):
        return min(len(a), len(b))
    for i, (ca, cb) in enumerate(zip(a, b)):
        if ca != cb:
            return i
    return None


def reproducibility_suite(families=FAMILIES, thread_counts=(1, 2, 4, 8),
                          repeats=10, seed=7) -> List[ConformanceRecord]:
    """cnr: byte-identical repeats at fixed thread count.  strict_cnr:
    byte-identical across thread counts.  Under the default property the
    suite records but never fails."""
    records = []
    prop = get_cnr_property()
    for fam in families:
        pol = deterministic_parallel(4)
        ref = _family_bytes(fam, pol, seed)
        ok = True
        where = None
        for _ in range(repeats - 1):
            div = _first_divergence(ref, _family_bytes(fam, pol, seed))
            if div is not None:
                ok, where = False, div
                break
        verdict = "pass" if ok else ("info" if prop == CnrProperty.DEFAULT else "fail")
        records.append(ConformanceRecord(
            fam, "cnr_repeats", verdict, 0.0,
            "" if ok else f"first divergent byte {where}"))
        ref1 = _family_bytes(fam, deterministic_parallel(thread_counts[0]), seed)
        ok = True
        where = None
        for tc in thread_counts[1:]:
            div = _first_divergence(ref1, _family_bytes(fam, deterministic_parallel(tc), seed))
            if div is not None:
                ok, where = False, div
                break
        verdict = "pass" if ok else (
            "fail" if prop == CnrProperty.STRICT_CNR else "info")
        records.append(ConformanceRecord(
            fam, "strict_cnr_threads", verdict, 0.0,
            "" if ok else f"first divergent byte {where}"))
    return records


# ---------------------------------------------------------------------------
# top-level runner


def run_conformance(families=None, seed=1234, count=50,
                    dtypes=(np.float32, np.float64)) -> List[ConformanceRecord]:
    value_families = ("multiply", "sparse_multiply", "add",
                      "multiply_elementwise", "sampled_multiply",
                      "triangular_solve", "norms")
    records = []
    for fam in (families or value_families):
        for dt in dtypes:
            records.extend(values_suite(fam, count=count, seed=seed, dtype=dt))
    records.extend(patterns_suite(count=max(count // 2, 10), seed=seed + 1))
    records.extend(exception_matrix_suite())
    records.extend(reproducibility_suite(repeats=3))
    return records
