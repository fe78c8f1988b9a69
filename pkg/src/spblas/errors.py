"""Exception hierarchy shared by every kernel and the CLI.

Each exception carries a stable machine-readable ``category`` string; the
CLI prints that category on failure so scripts can branch on it without
parsing prose.
"""


class SparseBlasError(Exception):
    """Base class for all library errors."""

    category = "error"


class ValidationError(SparseBlasError):
    """A view failed its format invariants."""

    category = "validation_failed"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"{c} at {i}" for c, i in self.violations))


class ShapeError(SparseBlasError):
    category = "shape_mismatch"


class PhaseError(SparseBlasError):
    """A staged operation was called out of protocol order."""

    category = "phase_error"


class StaleStructureError(SparseBlasError):
    """Operand structure changed between symbolic and numeric phases."""

    category = "stale_structure"


class AliasError(SparseBlasError):
    category = "aliasing"


class ReadOnlyValuesError(SparseBlasError):
    """A kernel tried to write through an iso-valued (read-only) array."""

    category = "read_only_values"


class SingularStructureError(SparseBlasError):
    """Triangular solve: a diagonal entry is structurally absent."""

    category = "singular_structure"

    def __init__(self, row):
        self.row = row
        super().__init__(f"missing diagonal entry in row {row}")


class NumericSingularityError(SparseBlasError):
    """Triangular solve: a stored diagonal entry is numerically zero."""

    category = "numeric_singularity"

    def __init__(self, row):
        self.row = row
        super().__init__(f"zero diagonal value in row {row}")


class PatternError(SparseBlasError):
    """Stored pattern is not triangular (or otherwise structurally wrong)."""

    category = "pattern_error"


class UnsupportedError(SparseBlasError):
    category = "unsupported"
