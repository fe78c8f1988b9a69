/** Integer status codes returned across the flat interface.
 *
 * The mapping from backend error categories is total: every category the
 * backend can report resolves to exactly one code here.
 */
export enum SpblasStatus {
  OK = 0,
  INVALID_HANDLE = 1,
  VALIDATION_FAILED = 2,
  SHAPE_MISMATCH = 3,
  PHASE_ERROR = 4,
  SINGULAR = 5,
  UNSUPPORTED = 6,
}

/** Backend CLI exit codes (see its `error: <category>: ...` contract). */
const EXIT_CODE_MAP: Record<number, SpblasStatus> = {
  2: SpblasStatus.VALIDATION_FAILED, // validation_failed
  3: SpblasStatus.SHAPE_MISMATCH, // shape_mismatch
  4: SpblasStatus.PHASE_ERROR, // phase_error / stale_structure
  5: SpblasStatus.VALIDATION_FAILED, // aliasing / read_only_values: bad arguments
  6: SpblasStatus.SINGULAR, // singular_structure / numeric_singularity / pattern
  7: SpblasStatus.VALIDATION_FAILED, // malformed_file / duplicate_entry
  8: SpblasStatus.UNSUPPORTED,
  9: SpblasStatus.UNSUPPORTED, // io_error: environment failure, nothing better
};

export function statusFromExitCode(code: number): SpblasStatus {
  if (code === 0) return SpblasStatus.OK;
  return EXIT_CODE_MAP[code] ?? SpblasStatus.UNSUPPORTED;
}
