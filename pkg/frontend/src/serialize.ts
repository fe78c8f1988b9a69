/** Matrix Market / vector-file serialization shared with the backend CLI.
 *
 * Values are written with JavaScript's shortest round-trip decimal form,
 * which the backend parses back to the identical float64 bits; the backend
 * writes with Python's shortest form, which `Number()` likewise restores
 * exactly.  Bitwise parity therefore survives the text channel in both
 * directions.
 */

export interface CsrArrays {
  nrows: number;
  ncols: number;
  rowOffsets: BigInt64Array | Int32Array | number[];
  colIndices: BigInt64Array | Int32Array | number[];
  values: Float64Array;
  indexBase: number;
}

export function fmtValue(v: number): string {
  if (Number.isNaN(v)) return "nan";
  if (v === Infinity) return "inf";
  if (v === -Infinity) return "-inf";
  if (Object.is(v, -0)) return "-0.0";
  return v.toString();
}

export function parseValue(s: string): number {
  const t = s.toLowerCase();
  if (t === "nan" || t === "-nan") return NaN;
  if (t === "inf" || t === "infinity") return Infinity;
  if (t === "-inf" || t === "-infinity") return -Infinity;
  return Number(s);
}

const at = (a: CsrArrays["rowOffsets"], i: number): number =>
  typeof (a as BigInt64Array)[i] === "bigint"
    ? Number((a as BigInt64Array)[i])
    : ((a as number[])[i] as number);

/** 1-based general coordinate file from CSR arrays (any index base). */
export function writeMatrixMarket(a: CsrArrays): string {
  const off0 = at(a.rowOffsets, 0);
  const nnz = at(a.rowOffsets, a.nrows) - off0;
  const lines = [
    "%%MatrixMarket matrix coordinate real general",
    `${a.nrows} ${a.ncols} ${nnz}`,
  ];
  for (let i = 0; i < a.nrows; i++) {
    const lo = at(a.rowOffsets, i) - off0;
    const hi = at(a.rowOffsets, i + 1) - off0;
    for (let p = lo; p < hi; p++) {
      const j = at(a.colIndices, p) - a.indexBase;
      lines.push(`${i + 1} ${j + 1} ${fmtValue(a.values[p])}`);
    }
  }
  return lines.join("\n") + "\n";
}

/** Parse a coordinate real/integer general file into 0-based CSR arrays.
 * The backend writes entries in row-major order already. */
export function readMatrixMarket(text: string): CsrArrays {
  const lines = text.split("\n");
  let k = 0;
  const banner = lines[k++].trim().split(/\s+/);
  if (banner[0] !== "%%MatrixMarket" || banner[2] !== "coordinate") {
    throw new Error("unexpected matrix file layout");
  }
  while (k < lines.length && lines[k].startsWith("%")) k++;
  const [nrows, ncols, nnz] = lines[k++].trim().split(/\s+/).map(Number);
  const rowOffsets = new BigInt64Array(nrows + 1);
  const colIndices = new BigInt64Array(nnz);
  const values = new Float64Array(nnz);
  let p = 0;
  for (; k < lines.length; k++) {
    const s = lines[k].trim();
    if (!s || s.startsWith("%")) continue;
    const toks = s.split(/\s+/);
    const i = Number(toks[0]) - 1;
    colIndices[p] = BigInt(Number(toks[1]) - 1);
    values[p] = toks.length > 2 ? parseValue(toks[2]) : 1;
    rowOffsets[i + 1]++;
    p++;
  }
  if (p !== nnz) throw new Error(`expected ${nnz} entries, got ${p}`);
  for (let i = 0; i < nrows; i++) rowOffsets[i + 1] += rowOffsets[i];
  return { nrows, ncols, rowOffsets, colIndices, values, indexBase: 0 };
}

export function writeVector(v: Float64Array | number[]): string {
  return Array.from(v, (x) => fmtValue(x)).join("\n") + "\n";
}

export function readVector(text: string): Float64Array {
  const out: number[] = [];
  for (const line of text.split("\n")) {
    const s = line.split("%")[0].trim();
    if (s) out.push(parseValue(s));
  }
  return Float64Array.from(out);
}
