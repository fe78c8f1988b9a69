"""Sparse BLAS reference library: non-owning views, opaque handles,
single-stage kernels, the multi-stage compute/fill protocol, and an
oracle-based conformance suite."""

from .errors import (
    AliasError,
    NumericSingularityError,
    PatternError,
    PhaseError,
    ReadOnlyValuesError,
    ShapeError,
    SingularStructureError,
    SparseBlasError,
    StaleStructureError,
    UnsupportedError,
    ValidationError,
)
from .views import (
    CooView,
    CscView,
    CsrView,
    DenseView,
    IsoValue,
    ScaledView,
    TransposedView,
    ValidationReport,
    scaled,
    transposed,
    validate,
)
from .runtime import (
    CnrProperty,
    CountingMemoryResource,
    ExecutionPolicy,
    MatrixHandle,
    MemoryResource,
    OperationState,
    Phase,
    default_resource,
    deterministic_parallel,
    get_cnr_property,
    make_handle,
    parallel,
    sequential,
    set_cnr_property,
    state_result_nnz,
)
from .single import (
    matrix_frob_norm,
    matrix_inf_norm,
    multiply,
    multiply_inspect,
    sampled_multiply,
    sampled_multiply_inspect,
    scale,
    triangular_solve,
    triangular_solve_inspect,
)
from .multistage import (
    OutputShell,
    add_compute,
    add_fill,
    add_inspect,
    convert_compute,
    convert_fill,
    convert_inspect,
    filter_compute,
    filter_fill,
    multiply_elementwise_compute,
    multiply_elementwise_fill,
    multiply_elementwise_inspect,
    sparse_multiply_compute,
    sparse_multiply_fill,
    sparse_multiply_inspect,
    sparse_multiply_numeric_compute,
    sparse_multiply_numeric_fill,
    sparse_multiply_symbolic_compute,
    sparse_multiply_symbolic_fill,
    transpose_compute,
    transpose_fill,
)

__version__ = "0.1.0"
