"""Acceptance suite.

One test per acceptance criterion; each prints a single machine-readable
pass/fail line (visible in the pytest output) and then asserts.  Tolerances
are pinned here, not imported from the library under test:

  * element error bound: f(m)*eps*sum|x_i||y_i| + g(m)*UN with f(m) = m,
    g(m) = 2m, eps/UN taken from the working precision,
  * value corpora: 200 seeded cases per family (100 per precision),
    dims <= 64, densities {0.01, 0.1, 0.3}, binary32 and binary64,
  * integer channel: |entries| <= 2**10, dims <= 32, bitwise equality,
  * reproducibility: 10 repeats at 4 threads (cnr), threads {1,2,4,8}
    (strict_cnr), byte identity,
  * runtime budgets: 60 s for the value corpora, 120 s for reproducibility.
"""

import time

import numpy as np

from spblas import multistage as ms
from spblas import single
from spblas.conformance import (
    corpus,
    exception_matrix_suite,
    patterns_suite,
    random_csr,
    random_triangular,
    reproducibility_suite,
    staged_run,
    values_suite,
)
from spblas.errors import PhaseError
from spblas.mmio import mm_read, mm_write
from spblas.oracle import (
    mirror_from_view,
    oracle_add,
    oracle_gemm,
    oracle_spmv,
    oracle_trisolve,
)
from spblas.runtime import (
    CnrProperty,
    CountingMemoryResource,
    OperationState,
    deterministic_parallel,
    make_handle,
    sequential,
    set_cnr_property,
)
from spblas.views import CsrView, DenseView

VALUE_FAMILIES = ("multiply", "sparse_multiply", "add", "multiply_elementwise",
                  "sampled_multiply", "triangular_solve", "norms")

CASES_PER_PRECISION = 100  # x2 precisions = 200 seeded cases per family
VALUES_BUDGET_S = 60.0
REPRO_BUDGET_S = 120.0
SEED = 20240601


def _verdict(capsys, name, ok, detail=""):
    with capsys.disabled():
        suffix = f"  ({detail})" if detail else ""
        print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}{suffix}")
    assert ok, f"{name} {detail}"


def _bits(arr):
    return np.ascontiguousarray(arr).tobytes()


def _triple_bits(view):
    m = mirror_from_view(view)
    return sorted((i, j, np.float64(v).tobytes()) for i, j, v in m.triples())


# ---------------------------------------------------------------------------
# 1. oracle equivalence, values


def test_criterion_oracle_values(capsys):
    t0 = time.perf_counter()
    fails = []
    n = 0
    for fam in VALUE_FAMILIES:
        for dt in (np.float32, np.float64):
            recs = values_suite(fam, count=CASES_PER_PRECISION, seed=SEED, dtype=dt)
            n += len(recs)
            fails.extend(r for r in recs if r.verdict == "fail")
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed < VALUES_BUDGET_S
    detail = f"{n} cases, {len(fails)} fails, {elapsed:.1f}s"
    if fails:
        detail += f"; first: {fails[0].family}/{fails[0].case_id} {fails[0].detail}"
    _verdict(capsys, "oracle-values", ok, detail)


# ---------------------------------------------------------------------------
# 2. oracle equivalence, patterns


def test_criterion_oracle_patterns(capsys):
    recs = patterns_suite(count=200, seed=SEED + 1)
    fails = [r for r in recs if r.verdict == "fail"]
    _verdict(capsys, "oracle-patterns", not fails,
             f"{len(recs)} checks, {len(fails)} fails")


# ---------------------------------------------------------------------------
# 3. exact-integer channel (bitwise)


def _int_csr(rng, nrows, ncols, density):
    return random_csr(rng, nrows, ncols, density, integer=True,
                      explicit_zero_frac=0.0)


def test_criterion_exact_integer_channel(capsys):
    rng = np.random.default_rng(SEED + 2)
    bad = []
    for case in range(25):
        n1 = int(rng.integers(1, 33))
        n2 = int(rng.integers(1, 33))
        n3 = int(rng.integers(1, 33))
        d = (0.1, 0.3)[case % 2]
        A = _int_csr(rng, n1, n2, d)
        B = _int_csr(rng, n2, n3, d)
        E = _int_csr(rng, n1, n2, d)
        ma, mb, me = (mirror_from_view(v) for v in (A, B, E))

        # SpMV
        x = rng.integers(-(2 ** 10), 2 ** 10 + 1, n2).astype(np.float64)
        y = np.zeros(n1)
        st = OperationState()
        single.multiply(sequential, st, A, DenseView.vector(x), DenseView.vector(y))
        st.destroy()
        if _bits(y) != _bits(oracle_spmv(ma, x)):
            bad.append(f"spmv:{case}")

        # SpGEMM
        C = staged_run("sparse_multiply", sequential, A, B).view()
        mc = mirror_from_view(C)
        want = oracle_gemm(ma, mb)
        if _bits(mc.data) != _bits(want.data) or not np.array_equal(mc.pattern, want.pattern):
            bad.append(f"spgemm:{case}")

        # add
        S = staged_run("add", sequential, A, E).view()
        if _bits(mirror_from_view(S).data) != _bits(oracle_add(ma, me).data):
            bad.append(f"add:{case}")

        # SDDMM
        k = int(rng.integers(1, 9))
        X = rng.integers(-(2 ** 5), 2 ** 5 + 1, (n1, k)).astype(np.float64)
        Y = rng.integers(-(2 ** 5), 2 ** 5 + 1, (k, n3)).astype(np.float64)
        mask = _int_csr(rng, n1, n3, 0.3)
        Cm = CsrView(n1, n3, mask.row_offsets, mask.col_indices, np.zeros(mask.nnz))
        st = OperationState()
        single.sampled_multiply(sequential, st, DenseView.matrix(X),
                                DenseView.matrix(Y), Cm)
        st.destroy()
        full = X @ Y  # exact: integer products and sums well below 2**53
        for (i, j, v) in mirror_from_view(Cm).triples():
            if np.float64(v).tobytes() != np.float64(full[i, j]).tobytes():
                bad.append(f"sddmm:{case}")
                break

        # triangular solve (unit diagonal keeps the result integral; modest
        # dims keep every intermediate below 2**53, hence exact)
        nt = int(rng.integers(1, 13))
        T = random_triangular(rng, nt, integer=True, lower=bool(rng.integers(2)))
        b = rng.integers(-(2 ** 10), 2 ** 10 + 1, nt).astype(np.float64)
        xs = np.zeros(nt)
        st = OperationState()
        single.triangular_solve(sequential, st, T, DenseView.vector(b),
                                DenseView.vector(xs))
        st.destroy()
        if _bits(xs) != _bits(oracle_trisolve(mirror_from_view(T), b)):
            bad.append(f"trisolve:{case}")

    _verdict(capsys, "exact-integer-channel", not bad,
             f"25 cases x 5 kernels, fails: {bad[:4]}")


# ---------------------------------------------------------------------------
# 4. exception-consistency table


def test_criterion_exception_consistency(capsys):
    recs = exception_matrix_suite()
    fails = [r.case_id for r in recs if r.verdict != "pass"]
    ok = len(recs) == 8 and not fails
    _verdict(capsys, "exception-consistency", ok, f"8 cases, fails: {fails}")


# ---------------------------------------------------------------------------
# 5. reproducibility


def test_criterion_reproducibility(capsys):
    t0 = time.perf_counter()
    fails = []
    try:
        set_cnr_property(CnrProperty.CNR)
        recs = reproducibility_suite(thread_counts=(4,), repeats=10)
        fails += [r for r in recs if r.case_id == "cnr_repeats" and r.verdict != "pass"]
        set_cnr_property(CnrProperty.STRICT_CNR)
        recs = reproducibility_suite(thread_counts=(1, 2, 4, 8), repeats=2)
        fails += [r for r in recs
                  if r.case_id == "strict_cnr_threads" and r.verdict != "pass"]
    finally:
        set_cnr_property(CnrProperty.DEFAULT)
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed < REPRO_BUDGET_S
    _verdict(capsys, "reproducibility", ok,
             f"{elapsed:.1f}s, fails: {[(r.family, r.case_id) for r in fails]}")


# ---------------------------------------------------------------------------
# 6. staged-protocol state machine


def _combined_run(A, B, state=None):
    st = state or OperationState()
    shell = ms.OutputShell("csr", A.nrows, B.ncols)
    ms.sparse_multiply_compute(sequential, st, A, B, shell)
    shell.allocate(st.result_nnz)
    ms.sparse_multiply_fill(sequential, st, A, B, shell)
    if state is None:
        st.destroy()
    return shell


def test_criterion_staged_state_machine(capsys):
    rng = np.random.default_rng(SEED + 3)
    A = random_csr(rng, 16, 16, 0.25)
    B = random_csr(rng, 16, 16, 0.25)
    problems = []

    # illegal orderings raise and the state stays reusable after reset
    st = OperationState()
    for label, call in [
        ("fill-before-compute",
         lambda: ms.sparse_multiply_fill(sequential, st, A, B,
                                         ms.OutputShell("csr", 16, 16))),
        ("result_nnz-before-compute", lambda: st.result_nnz),
        ("numeric-before-symbolic",
         lambda: ms.sparse_multiply_numeric_compute(
             sequential, st, A, B, ms.OutputShell("csr", 16, 16))),
    ]:
        try:
            call()
            problems.append(f"{label}: no error")
        except PhaseError:
            pass
        st.reset()
    # after the errors the same state still completes a full run
    ref = _combined_run(A, B, st)
    st.destroy()

    # pattern 1: one-shot compute/allocate/fill reproduces an independent run
    shell1 = _combined_run(A, B)
    if _bits(shell1.values) != _bits(ref.values):
        problems.append("pattern1: bitwise mismatch")

    # pattern 2: repeated compute with unchanged structure skips analysis,
    # results track the updated values bitwise
    st = OperationState()
    shell = ms.OutputShell("csr", 16, 16)
    ms.sparse_multiply_compute(sequential, st, A, B, shell)
    shell.allocate(st.result_nnz)
    ms.sparse_multiply_fill(sequential, st, A, B, shell)
    analyses = st.analysis_count
    vals = np.asarray(A.values)
    for k in range(3):
        vals[:] = vals * 0.5
        ms.sparse_multiply_compute(sequential, st, A, B, shell)
        ms.sparse_multiply_fill(sequential, st, A, B, shell)
        scratch = _combined_run(A, B)
        if _bits(shell.values) != _bits(scratch.values):
            problems.append(f"pattern2 iter {k}: bitwise mismatch")
    if st.analysis_count != analyses:
        problems.append("pattern2: structural analysis repeated")
    st.destroy()

    # pattern 3: symbolic once, numeric inside the value-update loop
    st = OperationState()
    shell = ms.OutputShell("csr", 16, 16)
    ms.sparse_multiply_symbolic_compute(sequential, st, A, B, shell)
    shell.allocate(st.result_nnz)
    ms.sparse_multiply_symbolic_fill(sequential, st, A, B, shell)
    for k in range(3):
        vals[:] = vals * 2.0
        ms.sparse_multiply_numeric_compute(sequential, st, A, B, shell)
        ms.sparse_multiply_numeric_fill(sequential, st, A, B, shell)
        scratch = _combined_run(A, B)
        if _bits(shell.values) != _bits(scratch.values):
            problems.append(f"pattern3 iter {k}: bitwise mismatch")
    st.destroy()

    _verdict(capsys, "staged-state-machine", not problems, str(problems))


# ---------------------------------------------------------------------------
# 7. resource accounting + fill canary


def test_criterion_resource_accounting(capsys):
    rng = np.random.default_rng(SEED + 4)
    problems = []

    # every operation family through a counting resource
    res = CountingMemoryResource()
    A = random_csr(rng, 18, 18, 0.25)
    B = random_csr(rng, 18, 18, 0.25)
    h = make_handle(A, res)
    st = OperationState(res)
    x = rng.uniform(-1, 1, 18)
    y = np.zeros(18)
    single.multiply_inspect(sequential, st, h, DenseView.vector(x), DenseView.vector(y))
    single.multiply(sequential, st, h, DenseView.vector(x), DenseView.vector(y))
    st.destroy()
    for fam, kw in [("sparse_multiply", dict(B=B)), ("add", dict(B=B)),
                    ("multiply_elementwise", dict(B=B)),
                    ("convert", dict(out_format="csc")),
                    ("filter", dict(pred=lambda i, j, v: v > 0)),
                    ("transpose", dict())]:
        staged_run(fam, sequential, A, resource=res, **kw)
    T = random_triangular(rng, 12)
    ht = make_handle(T, res)
    st = OperationState(res)
    b = rng.uniform(-1, 1, 12)
    xs = np.zeros(12)
    single.triangular_solve_inspect(sequential, st, ht, DenseView.vector(b),
                                    DenseView.vector(xs))
    single.triangular_solve(sequential, st, ht, DenseView.vector(b),
                            DenseView.vector(xs))
    st.destroy()
    ht.destroy()
    h.destroy()
    if res.balance != 0:
        problems.append(f"balance {res.balance} after destruction")

    # canary: fill must write exactly result_nnz entries, never beyond
    st = OperationState()
    shell = ms.OutputShell("csr", 18, 18)
    ms.sparse_multiply_compute(sequential, st, A, B, shell)
    nnz = st.result_nnz
    guard = 17
    big_vals = np.full(nnz + guard, np.pi)
    big_cols = np.full(nnz + guard, -7, dtype=np.int64)
    shell.row_offsets = np.empty(19, dtype=np.int64)
    shell.col_indices = big_cols[:nnz]
    shell.values = big_vals[:nnz]
    ms.sparse_multiply_fill(sequential, st, A, B, shell)
    st.destroy()
    if not np.all(big_vals[nnz:] == np.pi):
        problems.append("values canary overwritten")
    if not np.all(big_cols[nnz:] == -7):
        problems.append("index canary overwritten")

    _verdict(capsys, "resource-accounting", not problems, str(problems))


# ---------------------------------------------------------------------------
# 8. round trips across 50 corpus matrices


def test_criterion_round_trips(capsys, tmp_path):
    mats = corpus(SEED + 5, 50)
    bad = 0
    for k, A in enumerate(mats):
        ref = _triple_bits(A)
        csc = staged_run("convert", sequential, A, out_format="csc").view()
        coo = staged_run("convert", sequential, csc, out_format="coo").view()
        back = staged_run("convert", sequential, coo, out_format="csr").view()
        ok = (_triple_bits(csc) == ref and _triple_bits(coo) == ref
              and _triple_bits(back) == ref
              and _bits(back.row_offsets) == _bits(np.asarray(A.row_offsets, dtype=np.int64))
              and _bits(back.col_indices) == _bits(np.asarray(A.col_indices, dtype=np.int64))
              and _bits(back.values) == _bits(A.values))
        p = tmp_path / f"m{k}.mtx"
        mm_write(p, A)
        rt, _ = mm_read(p)
        ok = ok and _triple_bits(rt) == ref
        bad += not ok
    _verdict(capsys, "round-trips", bad == 0, f"50 matrices, {bad} mismatched")


# ---------------------------------------------------------------------------
# 9. handle transparency


def test_criterion_handle_transparency(capsys):
    rng = np.random.default_rng(SEED + 6)
    problems = []
    A = random_csr(rng, 20, 16, 0.25)
    T = random_triangular(rng, 14)
    x = rng.uniform(-1, 1, 16)
    Xm = rng.uniform(-1, 1, (20, 3))
    Ym = rng.uniform(-1, 1, (3, 16))
    b = rng.uniform(-1, 1, 14)

    def spmv(op, inspect):
        y = np.zeros(20)
        st = OperationState()
        if inspect:
            single.multiply_inspect(sequential, st, op, DenseView.vector(x),
                                    DenseView.vector(y))
        single.multiply(sequential, st, op, DenseView.vector(x), DenseView.vector(y))
        st.destroy()
        return _bits(y)

    def norms(op, inspect):
        st = OperationState()
        v1 = single.matrix_inf_norm(sequential, st, op)
        st.destroy()
        st = OperationState()
        v2 = single.matrix_frob_norm(sequential, st, op)
        st.destroy()
        return _bits(np.asarray([v1, v2]))

    def trisolve(op, inspect):
        xs = np.zeros(14)
        st = OperationState()
        if inspect:
            single.triangular_solve_inspect(sequential, st, op, DenseView.vector(b),
                                            DenseView.vector(xs))
        single.triangular_solve(sequential, st, op, DenseView.vector(b),
                                DenseView.vector(xs))
        st.destroy()
        return _bits(xs)

    def sddmm(op, inspect):
        base = op.view if hasattr(op, "view") else op
        vals = np.zeros(base.nnz)
        V = CsrView(20, 16, base.row_offsets, base.col_indices, vals)
        target = make_handle(V) if hasattr(op, "view") else V
        st = OperationState()
        if inspect:
            single.sampled_multiply_inspect(sequential, st, DenseView.matrix(Xm),
                                            DenseView.matrix(Ym), target)
        single.sampled_multiply(sequential, st, DenseView.matrix(Xm),
                                DenseView.matrix(Ym), target)
        st.destroy()
        if hasattr(op, "view"):
            target.destroy()
        return _bits(vals)

    def scale_family(op, inspect):
        base = op.view if hasattr(op, "view") else op
        vals = np.asarray(base.values).copy()
        V = CsrView(20, 16, base.row_offsets, base.col_indices, vals)
        target = make_handle(V) if hasattr(op, "view") else V
        st = OperationState()
        single.scale(sequential, st, 1.5, target)
        st.destroy()
        if hasattr(op, "view"):
            target.destroy()
        return _bits(vals)

    checks = [("multiply", spmv, A), ("norms", norms, A),
              ("triangular_solve", trisolve, T), ("sampled_multiply", sddmm, A),
              ("scale", scale_family, A)]
    for fam, fn, mat in checks:
        plain = fn(mat, False)
        for inspect in (False, True):
            h = make_handle(mat)
            if fn(h, inspect) != plain:
                problems.append(f"{fam} inspect={inspect}")
            h.destroy()
    _verdict(capsys, "handle-transparency", not problems, str(problems))
