/** Flat binding surface: opaque integer handles, integer status codes.
 *
 * Functions returning an id report failure as a negative status
 * (`-SpblasStatus.x`); ids are always >= 1.  Caller arrays stay caller-owned:
 * the binding reads them when marshaling and writes results only into the
 * arrays passed for output, never resizing or retaining them.
 */

import { SpblasStatus } from "./errors.js";
import { runCli } from "./native.js";
import {
  CsrArrays,
  readMatrixMarket,
  readVector,
  writeMatrixMarket,
  writeVector,
} from "./serialize.js";

export { SpblasStatus } from "./errors.js";

export enum CnrProperty {
  DEFAULT = 0,
  CNR = 1,
  STRICT_CNR = 2,
}

interface ViewEntry {
  kind: "view";
  arrays: CsrArrays;
}

interface StateEntry {
  kind: "spgemm_state";
  result: CsrArrays;
}

type Entry = ViewEntry | StateEntry;

const registry = new Map<number, Entry>();
let nextId = 1;
let cnr = CnrProperty.DEFAULT;

function globalFlags(): string[] {
  const name = ["default", "cnr", "strict"][cnr];
  return ["--policy", "seq", "--cnr", name];
}

function view(id: number): ViewEntry | undefined {
  const e = registry.get(id);
  return e && e.kind === "view" ? e : undefined;
}

/** Marshal-level argument checks; anything structural beyond these is the
 * backend's verdict.  Returns OK or VALIDATION_FAILED. */
function checkCsrArrays(a: CsrArrays, nnz: number): SpblasStatus {
  const off = Array.from(a.rowOffsets, Number);
  const idx = Array.from(a.colIndices, Number);
  if (off.length !== a.nrows + 1) return SpblasStatus.VALIDATION_FAILED;
  if (idx.length !== nnz || a.values.length !== nnz) {
    return SpblasStatus.VALIDATION_FAILED;
  }
  if (off[a.nrows] - off[0] !== nnz) return SpblasStatus.VALIDATION_FAILED;
  for (let i = 0; i < a.nrows; i++) {
    if (off[i + 1] < off[i]) return SpblasStatus.VALIDATION_FAILED;
    let prev = -1;
    for (let p = off[i] - off[0]; p < off[i + 1] - off[0]; p++) {
      const j = idx[p] - a.indexBase;
      if (j < 0 || j >= a.ncols || j <= prev) return SpblasStatus.VALIDATION_FAILED;
      prev = j;
    }
  }
  return SpblasStatus.OK;
}

export function spblas_create_csr_view(
  nrows: number,
  ncols: number,
  nnz: number,
  rowOffsets: BigInt64Array | Int32Array | number[],
  colIndices: BigInt64Array | Int32Array | number[],
  values: Float64Array,
  indexBase = 0,
): number {
  const arrays: CsrArrays = { nrows, ncols, rowOffsets, colIndices, values, indexBase };
  const st = checkCsrArrays(arrays, nnz);
  if (st !== SpblasStatus.OK) return -st;
  const id = nextId++;
  registry.set(id, { kind: "view", arrays });
  return id;
}

export function spblas_destroy(id: number): SpblasStatus {
  if (!registry.delete(id)) return SpblasStatus.INVALID_HANDLE;
  return SpblasStatus.OK;
}

/** y = alpha * op(A) * x + beta * y */
export function spblas_spmv(
  id: number,
  x: Float64Array,
  y: Float64Array,
  alpha = 1.0,
  beta = 0.0,
  transpose = false,
): SpblasStatus {
  const e = view(id);
  if (!e) return SpblasStatus.INVALID_HANDLE;
  const files: Record<string, string> = {
    "A.mtx": writeMatrixMarket(e.arrays),
    "x.vec": writeVector(x),
  };
  const args = ["spmv", "@A.mtx", "@x.vec",
                "--alpha", String(alpha), "--output", "@y.vec"];
  if (beta !== 0) {
    files["y0.vec"] = writeVector(y);
    args.push("--beta", String(beta), "--y", "@y0.vec");
  }
  if (transpose) args.push("--transpose");
  const res = runCli(globalFlags(), args, files, ["y.vec"]);
  if (res.status !== SpblasStatus.OK) return res.status;
  const got = readVector(res.files["y.vec"]);
  if (got.length !== y.length) return SpblasStatus.SHAPE_MISMATCH;
  y.set(got);
  return SpblasStatus.OK;
}

/** Solve T * x = b; the backend detects orientation from the pattern. */
export function spblas_trisolve(
  id: number,
  b: Float64Array,
  x: Float64Array,
): SpblasStatus {
  const e = view(id);
  if (!e) return SpblasStatus.INVALID_HANDLE;
  const res = runCli(
    globalFlags(),
    ["trisolve", "@T.mtx", "@b.vec", "--output", "@x.vec"],
    { "T.mtx": writeMatrixMarket(e.arrays), "b.vec": writeVector(b) },
    ["x.vec"],
  );
  if (res.status !== SpblasStatus.OK) return res.status;
  const got = readVector(res.files["x.vec"]);
  if (got.length !== x.length) return SpblasStatus.SHAPE_MISMATCH;
  x.set(got);
  return SpblasStatus.OK;
}

/** Staged product C = A * B: run the structural+numeric analysis, park the
 * result in an opaque state, and report its id (negative status on error). */
export function spblas_spgemm_compute(idA: number, idB: number): number {
  const a = view(idA);
  const b = view(idB);
  if (!a || !b) return -SpblasStatus.INVALID_HANDLE;
  const res = runCli(
    globalFlags(),
    ["spgemm", "@A.mtx", "@B.mtx", "--symbolic-numeric", "--output", "@C.mtx"],
    { "A.mtx": writeMatrixMarket(a.arrays), "B.mtx": writeMatrixMarket(b.arrays) },
    ["C.mtx"],
  );
  if (res.status !== SpblasStatus.OK) return -res.status;
  const id = nextId++;
  registry.set(id, { kind: "spgemm_state", result: readMatrixMarket(res.files["C.mtx"]) });
  return id;
}

export function spblas_spgemm_nnz(stateId: number): number {
  const e = registry.get(stateId);
  if (!e) return -SpblasStatus.INVALID_HANDLE;
  if (e.kind !== "spgemm_state") return -SpblasStatus.PHASE_ERROR;
  return e.result.values.length;
}

/** Copy the staged product into caller arrays of exactly result-nnz length. */
export function spblas_spgemm_fill(
  stateId: number,
  rowOffsets: BigInt64Array,
  colIndices: BigInt64Array,
  values: Float64Array,
): SpblasStatus {
  const e = registry.get(stateId);
  if (!e) return SpblasStatus.INVALID_HANDLE;
  if (e.kind !== "spgemm_state") return SpblasStatus.PHASE_ERROR;
  const r = e.result;
  const nnz = r.values.length;
  if (rowOffsets.length !== r.nrows + 1 || colIndices.length !== nnz ||
      values.length !== nnz) {
    return SpblasStatus.SHAPE_MISMATCH;
  }
  rowOffsets.set(r.rowOffsets as BigInt64Array);
  colIndices.set(r.colIndices as BigInt64Array);
  values.set(r.values);
  return SpblasStatus.OK;
}

export function spblas_set_cnr(prop: number): SpblasStatus {
  if (prop !== CnrProperty.DEFAULT && prop !== CnrProperty.CNR &&
      prop !== CnrProperty.STRICT_CNR) {
    return SpblasStatus.UNSUPPORTED;
  }
  cnr = prop;
  return SpblasStatus.OK;
}

export function spblas_get_cnr(): CnrProperty {
  return cnr;
}
