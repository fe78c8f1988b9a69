import math
from fractions import Fraction

import numpy as np

from spblas.conformance import (
    exception_matrix_suite,
    patterns_suite,
    reproducibility_suite,
    values_suite,
)
from spblas.oracle import (
    DenseMirror,
    _two_prod,
    check_error_bound,
    exact_dot,
    mirror_from_view,
    oracle_gemm,
    oracle_spmv,
    oracle_trisolve,
    serial_bound_spec,
)
from spblas.views import CooView, CsrView


def test_two_prod_is_error_free():
    rng = np.random.default_rng(77)
    for _ in range(500):
        a = float(rng.uniform(-1e3, 1e3))
        b = float(rng.uniform(-1e3, 1e3))
        p, e = _two_prod(a, b)
        assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


def test_exact_dot_is_correctly_rounded():
    rng = np.random.default_rng(78)
    for _ in range(200):
        n = int(rng.integers(1, 50))
        xs = rng.uniform(-1, 1, n)
        ys = rng.uniform(-1, 1, n)
        got = exact_dot(xs, ys)
        true = sum(Fraction(float(a)) * Fraction(float(b)) for a, b in zip(xs, ys))
        # correctly rounded: converting the exact rational to float64 must
        # reproduce the oracle value
        assert float(true) == got


def test_exact_dot_cancellation():
    # naive summation loses this entirely; the oracle must not
    big = 2.0 ** 60
    assert exact_dot([big, 1.0, -big], [1.0, 1.0, 1.0]) == 1.0


def test_mirror_round_trip():
    A = CsrView(2, 3, [0, 2, 3], [0, 2, 1], np.asarray([1.0, 0.0, -2.0]))
    m = mirror_from_view(A)
    assert m.pattern.sum() == 3
    assert m.pattern[0, 2] and m.data[0, 2] == 0.0  # explicit zero kept
    assert m.data[1, 1] == -2.0


def test_mirror_coo_one_based():
    A = CooView(2, 2, [1, 2], [2, 1], np.asarray([5.0, 6.0]), index_base=1)
    m = mirror_from_view(A)
    assert m.data[0, 1] == 5.0 and m.data[1, 0] == 6.0


def test_oracle_spmv_respects_pattern():
    m = DenseMirror.zeros(2, 2)
    m.data[0, 0] = 1.0
    m.pattern[0, 0] = True
    # position (0,1) holds data but is outside the pattern: never read
    m.data[0, 1] = 999.0
    y = oracle_spmv(m, [1.0, 1.0])
    assert y[0] == 1.0 and y[1] == 0.0


def test_oracle_gemm_small():
    a = DenseMirror(2, 2, np.asarray([[1.0, 2.0], [0.0, 3.0]]),
                    np.asarray([[True, True], [False, True]]))
    c = oracle_gemm(a, a)
    assert c.data[0, 1] == 1.0 * 2.0 + 2.0 * 3.0
    assert not c.pattern[1, 0]


def test_oracle_trisolve_lower():
    t = DenseMirror(2, 2, np.asarray([[2.0, 0.0], [1.0, 1.0]]),
                    np.asarray([[True, False], [True, True]]))
    x = oracle_trisolve(t, [2.0, 2.0])
    assert np.array_equal(x, [1.0, 1.0])


def test_bound_spec_values():
    spec = serial_bound_spec(np.float64)
    assert spec.eps == np.finfo(np.float64).eps
    assert spec.UN == float(np.finfo(np.float64).smallest_subnormal)
    terms = [1.0, 2.0, 3.0]
    assert spec.bound(terms) == 3 * spec.eps * 6.0 + 6 * spec.UN


def test_check_error_bound_pass_and_fail():
    spec = serial_bound_spec(np.float64)
    assert check_error_bound(1.0, 1.0, spec, [1.0]).passed
    chk = check_error_bound(1.1, 1.0, spec, [1.0])
    assert not chk.passed and chk.slack > 1


def test_check_error_bound_zero_terms():
    spec = serial_bound_spec(np.float64)
    chk = check_error_bound(0.0, 0.0, spec, [])
    assert chk.passed and chk.slack == 0.0


# ---------------------------------------------------------------------------
# the conformance suites themselves stay green at reduced size


def test_values_suites_small():
    for fam in ("multiply", "sparse_multiply", "add", "triangular_solve"):
        recs = values_suite(fam, count=8, seed=5, dtype=np.float32)
        assert all(r.verdict == "pass" for r in recs), fam


def test_patterns_suite_small():
    recs = patterns_suite(count=6, seed=6)
    assert all(r.verdict == "pass" for r in recs)


def test_exception_suite_all_pass():
    recs = exception_matrix_suite()
    assert len(recs) == 8
    assert all(r.verdict == "pass" for r in recs)


def test_reproducibility_suite_small():
    recs = reproducibility_suite(families=("multiply", "sparse_multiply"),
                                 thread_counts=(1, 4), repeats=3)
    assert all(r.verdict == "pass" for r in recs)
