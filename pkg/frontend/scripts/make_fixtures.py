#!/usr/bin/env python3
"""Generate the bitwise parity fixtures for the binding tests.

Runs the native library directly (seeded corpus, sequential policy) and
records every operand and result as little-endian float64 hex bits, so the
TypeScript side can compare without any tolerance.

Usage: python3 make_fixtures.py > ../test/fixtures.json
"""

import json
import struct
import sys

import numpy as np

from spblas import single
from spblas.conformance import random_csr, staged_run
from spblas.runtime import OperationState, sequential
from spblas.views import DenseView

N_MATRICES = 20


def bits(v):
    return struct.pack("<d", float(v)).hex()


def csr_json(view):
    return {
        "nrows": view.nrows,
        "ncols": view.ncols,
        "row_offsets": [int(o) for o in np.asarray(view.row_offsets)],
        "col_indices": [int(c) for c in np.asarray(view.col_indices)],
        "value_bits": [bits(v) for v in np.asarray(view.values)],
    }


def main():
    rng = np.random.default_rng(987654)
    cases = []
    for k in range(N_MATRICES):
        n1 = int(rng.integers(2, 24))
        n2 = int(rng.integers(2, 24))
        n3 = int(rng.integers(2, 24))
        d = (0.1, 0.3)[k % 2]
        A = random_csr(rng, n1, n2, d)
        B = random_csr(rng, n2, n3, d)
        x = rng.uniform(-1, 1, n2)
        y = np.zeros(n1)
        st = OperationState()
        single.multiply(sequential, st, A, DenseView.vector(x), DenseView.vector(y))
        st.destroy()
        C = staged_run("sparse_multiply", sequential, A, B).view()
        cases.append({
            "A": csr_json(A),
            "B": csr_json(B),
            "x_bits": [bits(v) for v in x],
            "y_bits": [bits(v) for v in y],
            "C": csr_json(C),
        })
    json.dump({"cases": cases}, sys.stdout, indent=1)


if __name__ == "__main__":
    main()
