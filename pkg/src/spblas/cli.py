"""Command-line front end.

Every command is a thin adapter over the library: parse files, call the
corresponding kernel, serialize the result.  Failures print one
machine-parsable line ``error: <category>: <message>`` and exit nonzero.

The default thread count for ``--policy detpar`` comes from the
``SPBLAS_NUM_THREADS`` environment variable (fallback 4).
"""

import argparse
import os
import sys
import time

import numpy as np

from . import conformance as cf
from . import multistage as ms
from . import single
from .errors import SparseBlasError
from .mmio import mm_read, mm_write, vec_read, vec_write
from .runtime import (
    CnrProperty,
    OperationState,
    deterministic_parallel,
    sequential,
    set_cnr_property,
)
from .views import DenseView, scaled, transposed, validate

_EXIT_CODES = {
    "validation_failed": 2,
    "shape_mismatch": 3,
    "phase_error": 4,
    "stale_structure": 4,
    "aliasing": 5,
    "read_only_values": 5,
    "singular_structure": 6,
    "numeric_singularity": 6,
    "pattern_error": 6,
    "malformed_file": 7,
    "duplicate_entry": 7,
    "unsupported": 8,
}


def _policy(args):
    if args.policy == "seq":
        return sequential
    threads = args.threads or int(os.environ.get("SPBLAS_NUM_THREADS", "4"))
    return deterministic_parallel(threads)


def _apply_cnr(args):
    set_cnr_property({
        "default": CnrProperty.DEFAULT,
        "cnr": CnrProperty.CNR,
        "strict": CnrProperty.STRICT_CNR,
    }[args.cnr])


def _out_stream(path):
    return open(path, "w") if path else sys.stdout


def _write_vector(vec, path):
    if path:
        vec_write(path, vec)
    else:
        for v in vec:
            print(repr(float(v)))


def _write_matrix(view, path):
    if path:
        mm_write(path, view)
    else:
        import io as _io
        import tempfile

        with tempfile.NamedTemporaryFile("r", suffix=".mtx", delete=False) as tmp:
            name = tmp.name
        mm_write(name, view)
        with open(name) as fh:
            sys.stdout.write(fh.read())
        os.unlink(name)


def cmd_info(args):
    view, meta = mm_read(args.file)
    print(f"file\t{args.file}")
    print(f"layout\t{meta.layout}")
    print(f"field\t{meta.field}")
    print(f"symmetry\t{meta.symmetry}")
    print(f"nrows\t{view.nrows}")
    print(f"ncols\t{view.ncols}")
    print(f"nnz\t{view.nnz}")
    return 0


def cmd_validate(args):
    view, _ = mm_read(args.file)
    rep = validate(view)
    if rep.ok:
        print("ok")
        return 0
    for cat, idx in rep.violations:
        print(f"violation\t{cat}\t{idx}")
    print("error: validation_failed: view rejected", file=sys.stderr)
    return _EXIT_CODES["validation_failed"]


def cmd_convert(args):
    view, _ = mm_read(args.input)
    policy = _policy(args)
    shell = cf.staged_run("convert", policy, view, out_format=args.format)
    mm_write(args.output, shell.view())
    return 0


def cmd_spmv(args):
    A, _ = mm_read(args.A)
    x = vec_read(args.x)
    policy = _policy(args)
    Aop = transposed(A) if args.transpose else A
    if args.alpha != 1.0:
        Aop = scaled(args.alpha, Aop)
    m = A.ncols if args.transpose else A.nrows
    y = np.zeros(m)
    st = OperationState()
    if args.beta != 0.0:
        y0 = vec_read(args.y) if args.y else np.zeros(m)
        y[:] = y0
        single.multiply(policy, st, Aop, DenseView.vector(x),
                        scaled(args.beta, DenseView.vector(y)), DenseView.vector(y))
    else:
        single.multiply(policy, st, Aop, DenseView.vector(x), DenseView.vector(y))
    st.destroy()
    _write_vector(y, args.output)
    return 0


def cmd_spgemm(args):
    A, _ = mm_read(args.A)
    B, _ = mm_read(args.B)
    policy = _policy(args)
    if args.symbolic_numeric:
        state = OperationState()
        shell = ms.OutputShell("csr", A.nrows, B.ncols)
        ms.sparse_multiply_symbolic_compute(policy, state, A, B, shell)
        shell.allocate(state.result_nnz)
        ms.sparse_multiply_symbolic_fill(policy, state, A, B, shell)
        ms.sparse_multiply_numeric_compute(policy, state, A, B, shell)
        ms.sparse_multiply_numeric_fill(policy, state, A, B, shell)
        state.destroy()
    else:
        shell = cf.staged_run("sparse_multiply", policy, A, B)
    _write_matrix(shell.view(), args.output)
    return 0


def cmd_trisolve(args):
    T, _ = mm_read(args.T)
    b = vec_read(args.b)
    policy = _policy(args)
    x = np.zeros(T.nrows)
    st = OperationState()
    single.triangular_solve(policy, st, T, DenseView.vector(b), DenseView.vector(x))
    st.destroy()
    _write_vector(x, args.output)
    return 0


def cmd_norm(args):
    A, _ = mm_read(args.A)
    policy = _policy(args)
    st = OperationState()
    if args.kind == "inf":
        v = single.matrix_inf_norm(policy, st, A)
    else:
        v = single.matrix_frob_norm(policy, st, A)
    st.destroy()
    print(repr(float(v)))
    return 0


def cmd_filter(args):
    A, _ = mm_read(args.A)
    policy = _policy(args)
    t = args.min_abs
    shell = cf.staged_run("filter", policy, A,
                          pred=lambda i, j, v: abs(v) >= t)
    _write_matrix(shell.view(), args.output)
    return 0


def cmd_bench(args):
    A, _ = mm_read(args.file)
    policy = _policy(args)
    times = []

    def run_once():
        st = OperationState()
        if args.op == "spmv":
            x = np.ones(A.ncols)
            y = np.zeros(A.nrows)
            single.multiply(policy, st, A, DenseView.vector(x), DenseView.vector(y))
        elif args.op == "spgemm":
            cf.staged_run("sparse_multiply", policy, A, transposed(A))
        elif args.op == "norm":
            single.matrix_frob_norm(policy, st, A)
        elif args.op == "transpose":
            cf.staged_run("transpose", policy, A)
        else:
            raise SparseBlasError(f"unknown bench op {args.op}")
        st.destroy()

    for _ in range(args.repeat):
        t0 = time.perf_counter()
        run_once()
        times.append(time.perf_counter() - t0)
    times_sorted = sorted(times)
    median = times_sorted[len(times) // 2]
    print(f"op\t{args.op}")
    print(f"repeats\t{args.repeat}")
    print(f"min_s\t{min(times):.6f}")
    print(f"median_s\t{median:.6f}")
    print(f"nnz\t{A.nnz}")
    print(f"nnz_per_s\t{A.nnz / median:.3e}")
    if args.plot:
        from .report import render_bench_figure  # matplotlib import is heavy

        path = render_bench_figure(times, A.nnz, f"{args.op} on {os.path.basename(args.file)}", args.plot)
        print(f"figure\t{path}")
    return 0


def cmd_conformance(args):
    from .report import render_conformance_figures, write_records

    records = cf.run_conformance(
        families=args.families, seed=args.seed, count=args.count)
    stream = _out_stream(args.report)
    try:
        write_records(records, stream)
    finally:
        if stream is not sys.stdout:
            stream.close()
    if args.plot_dir:
        for p in render_conformance_figures(records, args.plot_dir):
            print(f"figure\t{p}", file=sys.stderr)
    fails = sum(r.verdict == "fail" for r in records)
    if fails:
        print(f"error: conformance_failed: {fails} failing records", file=sys.stderr)
        return 1
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="spblas", description=__doc__)
    ap.add_argument("--policy", choices=("seq", "detpar"), default="seq")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--cnr", choices=("default", "cnr", "strict"), default="default")
    ap.add_argument("--seed", type=int, default=1234)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="print file metadata")
    p.add_argument("file")
    p.set_defaults(fn=cmd_info)

    p = sub.add_parser("validate", help="check format invariants")
    p.add_argument("file")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("convert", help="convert between storage formats")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", choices=("csr", "csc", "coo"), default="csr")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("spmv", help="y = alpha*op(A)*x + beta*y")
    p.add_argument("A")
    p.add_argument("x")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--y", default=None, help="input y for beta != 0")
    p.add_argument("--transpose", action="store_true")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=cmd_spmv)

    p = sub.add_parser("spgemm", help="C = A*B (staged)")
    p.add_argument("A")
    p.add_argument("B")
    p.add_argument("--symbolic-numeric", action="store_true", dest="symbolic_numeric")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=cmd_spgemm)

    p = sub.add_parser("trisolve", help="solve T*x = b")
    p.add_argument("T")
    p.add_argument("b")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=cmd_trisolve)

    p = sub.add_parser("norm", help="matrix norm")
    p.add_argument("A")
    p.add_argument("--kind", choices=("inf", "frob"), default="frob")
    p.set_defaults(fn=cmd_norm)

    p = sub.add_parser("filter", help="keep entries with |v| >= threshold")
    p.add_argument("A")
    p.add_argument("--min-abs", type=float, required=True, dest="min_abs")
    p.add_argument("--output", default=None)
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("bench", help="time one operation")
    p.add_argument("op", choices=("spmv", "spgemm", "norm", "transpose"))
    p.add_argument("file")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--plot", default=None, help="write a timing figure (PNG)")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("conformance", help="run the oracle conformance suite")
    p.add_argument("--families", nargs="*", default=None)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--report", default=None, help="write records to a file")
    p.add_argument("--plot-dir", default=None, help="render figures into a directory")
    p.set_defaults(fn=cmd_conformance)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    _apply_cnr(args)
    try:
        return args.fn(args)
    except SparseBlasError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return _EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        print(f"error: io_error: {exc}", file=sys.stderr)
        return 9


if __name__ == "__main__":
    sys.exit(main())
