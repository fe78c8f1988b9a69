import numpy as np
import pytest

from spblas.cli import main
from spblas.conformance import random_csr, staged_run
from spblas.mmio import (
    DuplicateEntryError,
    MmFormatError,
    mm_read,
    mm_write,
    vec_read,
    vec_write,
)
from spblas.oracle import mirror_from_view
from spblas.runtime import sequential
from spblas.views import CooView, CsrView, IsoValue


def _triples(view):
    return mirror_from_view(view).triples()


# ---------------------------------------------------------------------------
# matrix market


def test_mm_round_trip_exact_values(tmp_path):
    vals = np.asarray([np.pi, 1e-300, -0.0, 1.0 / 3.0])
    A = CooView(2, 2, [0, 0, 1, 1], [0, 1, 0, 1], vals)
    p = tmp_path / "a.mtx"
    mm_write(p, A)
    B, meta = mm_read(p)
    assert meta.field == "real" and meta.symmetry == "general"
    assert np.asarray(B.values).tobytes() == vals.tobytes()
    assert np.array_equal(np.asarray(B.row_indices), [0, 0, 1, 1])


def test_mm_round_trip_from_csr(tmp_path, rng):
    A = random_csr(rng, 20, 15, 0.2)
    p = tmp_path / "a.mtx"
    mm_write(p, A)
    B, _ = mm_read(p)
    assert sorted(_triples(B)) == sorted(_triples(A))


def test_mm_symmetric_expansion(tmp_path):
    p = tmp_path / "s.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                 "2 2 2\n1 1 1.0\n2 1 3.0\n")
    A, meta = mm_read(p)
    assert meta.symmetry == "symmetric"
    assert A.nnz == 3
    m = mirror_from_view(A)
    assert m.data[0, 1] == 3.0 and m.data[1, 0] == 3.0


def test_mm_skew_symmetric_expansion(tmp_path):
    p = tmp_path / "s.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real skew-symmetric\n"
                 "2 2 1\n2 1 4.0\n")
    A, _ = mm_read(p)
    m = mirror_from_view(A)
    assert m.data[1, 0] == 4.0 and m.data[0, 1] == -4.0


def test_mm_pattern_field_gives_iso(tmp_path):
    p = tmp_path / "p.mtx"
    p.write_text("%%MatrixMarket matrix coordinate pattern general\n"
                 "2 2 2\n1 1\n2 2\n")
    A, meta = mm_read(p)
    assert meta.field == "pattern"
    assert isinstance(A.values, IsoValue)
    assert A.values[0] == 1.0


def test_mm_duplicate_rejected(tmp_path):
    p = tmp_path / "d.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n"
                 "2 2 2\n1 1 1.0\n1 1 2.0\n")
    with pytest.raises(DuplicateEntryError):
        mm_read(p)


def test_mm_bad_banner(tmp_path):
    p = tmp_path / "b.mtx"
    p.write_text("%%NotMatrixMarket\n1 1 0\n")
    with pytest.raises(MmFormatError):
        mm_read(p)


def test_mm_array_layout(tmp_path):
    p = tmp_path / "arr.mtx"
    p.write_text("%%MatrixMarket matrix array real general\n"
                 "2 2\n1.0\n0.0\n3.0\n4.0\n")
    A, meta = mm_read(p)
    assert meta.layout == "array"
    assert A.nnz == 4  # array layout stores every entry, zeros included
    m = mirror_from_view(A)
    assert m.data[1, 0] == 0.0 and m.pattern[1, 0]
    assert m.data[0, 1] == 3.0  # column-major input


def test_vec_round_trip(tmp_path):
    v = np.asarray([1.5, -2.0 / 3.0, 1e-200])
    p = tmp_path / "v.vec"
    vec_write(p, v, comment="test vector")
    back = vec_read(p)
    assert back.tobytes() == v.tobytes()


# ---------------------------------------------------------------------------
# CLI (in-process through main)


def _write_fixture(tmp_path, rng):
    A = random_csr(rng, 8, 8, 0.4)
    pa = tmp_path / "A.mtx"
    mm_write(pa, A)
    x = rng.uniform(-1, 1, 8)
    px = tmp_path / "x.vec"
    vec_write(px, x)
    return A, str(pa), x, str(px)


def test_cli_info_and_validate(tmp_path, rng, capsys):
    A, pa, _, _ = _write_fixture(tmp_path, rng)
    assert main(["info", pa]) == 0
    out = capsys.readouterr().out
    assert f"nnz\t{A.nnz}" in out
    assert main(["validate", pa]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_cli_spmv_matches_library(tmp_path, rng, capsys):
    A, pa, x, px = _write_fixture(tmp_path, rng)
    out_path = tmp_path / "y.vec"
    assert main(["spmv", pa, px, "--output", str(out_path)]) == 0
    y = vec_read(out_path)
    from spblas import single
    from spblas.runtime import OperationState
    from spblas.views import DenseView

    want = np.zeros(8)
    st = OperationState()
    single.multiply(sequential, st, A, DenseView.vector(x), DenseView.vector(want))
    st.destroy()
    assert y.tobytes() == want.tobytes()


def test_cli_spgemm_split_matches_combined(tmp_path, rng, capsys):
    _, pa, _, _ = _write_fixture(tmp_path, rng)
    p1 = tmp_path / "c1.mtx"
    p2 = tmp_path / "c2.mtx"
    assert main(["spgemm", pa, pa, "--output", str(p1)]) == 0
    assert main(["spgemm", pa, pa, "--symbolic-numeric", "--output", str(p2)]) == 0
    assert p1.read_text() == p2.read_text()


def test_cli_convert_round_trip(tmp_path, rng):
    _, pa, _, _ = _write_fixture(tmp_path, rng)
    pc = tmp_path / "csc.mtx"
    pb = tmp_path / "back.mtx"
    assert main(["convert", pa, str(pc), "--format", "csc"]) == 0
    assert main(["convert", str(pc), str(pb), "--format", "csr"]) == 0
    a_body = open(pa).read().splitlines()[1:]
    b_body = open(pb).read().splitlines()[1:]
    assert sorted(a_body) == sorted(b_body)


def test_cli_norm(tmp_path, rng, capsys):
    A, pa, _, _ = _write_fixture(tmp_path, rng)
    assert main(["norm", pa, "--kind", "inf"]) == 0
    got = float(capsys.readouterr().out.strip())
    m = mirror_from_view(A)
    want = max(sum(abs(m.data[i, j]) for j in range(8) if m.pattern[i, j])
               for i in range(8))
    assert got == pytest.approx(want, rel=1e-12)


def test_cli_error_reporting(tmp_path, capsys):
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix coordinate real general\n"
                   "1 1 1\n5 5 1.0\n")
    code = main(["info", str(bad)])
    assert code == 7
    err = capsys.readouterr().err
    assert err.startswith("error: malformed_file:")


def test_cli_missing_file(capsys):
    assert main(["info", "/nonexistent/file.mtx"]) == 9
    assert "error: io_error:" in capsys.readouterr().err


def test_cli_conformance_report_and_figures(tmp_path, capsys):
    report = tmp_path / "report.tsv"
    figs = tmp_path / "figs"
    code = main(["conformance", "--count", "3", "--families", "multiply",
                 "--report", str(report), "--plot-dir", str(figs)])
    assert code == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "family\tcase_id\tverdict\tslack\tdetail"
    assert all("\tfail\t" not in ln for ln in lines[1:])
    assert (figs / "conformance_verdicts.png").exists()
    assert (figs / "conformance_slack.png").exists()


def test_cli_bench_figure(tmp_path, rng, capsys):
    _, pa, _, _ = _write_fixture(tmp_path, rng)
    fig = tmp_path / "bench.png"
    assert main(["bench", "spmv", pa, "--repeat", "3", "--plot", str(fig)]) == 0
    out = capsys.readouterr().out
    assert "median_s\t" in out
    assert fig.exists()


def test_cli_seeded_conformance_is_reproducible(tmp_path):
    r1 = tmp_path / "r1.tsv"
    r2 = tmp_path / "r2.tsv"
    for r in (r1, r2):
        assert main(["--seed", "42", "conformance", "--count", "2",
                     "--families", "add", "--report", str(r)]) == 0
    assert r1.read_text() == r2.read_text()
