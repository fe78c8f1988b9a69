"""Handles, memory resources, operation states, execution policies, and the
process-global conditional-reproducibility (CNR) property."""

import enum
import hashlib
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .errors import PhaseError, SparseBlasError
from .views import (
    CooView,
    CscView,
    CsrView,
    IsoValue,
    validate,
)

__all__ = [
    "MemoryResource",
    "CountingMemoryResource",
    "default_resource",
    "MatrixHandle",
    "make_handle",
    "OperationState",
    "Phase",
    "state_result_nnz",
    "ExecutionPolicy",
    "sequential",
    "deterministic_parallel",
    "parallel",
    "CnrProperty",
    "set_cnr_property",
    "get_cnr_property",
    "structure_fingerprint",
]


class MemoryResource:
    """Allocation callback pair used for all library-owned memory.

    Every array handed out by :meth:`allocate_array` must come back through
    :meth:`deallocate` before the owning handle or state is destroyed; the
    counting subclass makes that checkable.
    """

    def allocate(self, size, alignment=8):
        block = np.zeros(int(size), dtype=np.uint8)
        return block

    def allocate_array(self, shape, dtype):
        dtype = np.dtype(dtype)
        n = int(np.prod(shape)) if not np.isscalar(shape) else int(shape)
        block = self.allocate(n * dtype.itemsize)
        return block.view(dtype)[:n].reshape(shape)

    def deallocate(self, block):
        pass


class CountingMemoryResource(MemoryResource):
    """Resource that tracks live blocks; ``balance`` is allocs - frees."""

    def __init__(self):
        self.allocations = 0
        self.deallocations = 0
        self._live = {}

    def allocate(self, size, alignment=8):
        block = super().allocate(size, alignment)
        self.allocations += 1
        self._live[id(block)] = block
        return block

    def deallocate(self, block):
        base = block
        while isinstance(base, np.ndarray) and base.base is not None:
            base = base.base
        key = id(base)
        if key not in self._live:
            raise SparseBlasError("deallocate of unknown block")
        del self._live[key]
        self.deallocations += 1

    @property
    def balance(self):
        return self.allocations - self.deallocations


_default = MemoryResource()


def default_resource():
    return _default


class _BlockOwner:
    """Mixin tracking blocks taken from a resource, for leak-free teardown."""

    def _init_owner(self, resource):
        self.resource = resource if resource is not None else default_resource()
        self._blocks = []

    def _alloc(self, shape, dtype):
        arr = self.resource.allocate_array(shape, dtype)
        self._blocks.append(arr)
        return arr

    def _release_blocks(self):
        while self._blocks:
            self.resource.deallocate(self._blocks.pop())


class MatrixHandle(_BlockOwner):
    """Opaque wrapper pairing a sparse view with a library-owned optimization
    store.  The user's arrays are never touched; all cached data lives in
    memory drawn from the handle's resource."""

    def __init__(self, view, resource=None):
        self._init_owner(resource)
        self.view = view
        self.opt_store: Dict[str, Any] = {}

    def destroy(self):
        self.opt_store.clear()
        self._release_blocks()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.destroy()


def make_handle(view, resource=None) -> MatrixHandle:
    """Wrap a validated sparse view into a handle."""
    validate(view).raise_if_failed()
    return MatrixHandle(view, resource)


class Phase(enum.IntEnum):
    CREATED = 0
    INSPECTED = 1
    COMPUTED = 2
    SYMBOLIC_DONE = 3
    NUMERIC_DONE = 4
    FILLED = 5


class OperationState(_BlockOwner):
    """Per-operation opaque state carrying staged artifacts.

    A state binds to one operation family on first use; reusing it with a
    structurally different operand tuple resets the staged data.
    """

    def __init__(self, resource=None):
        self._init_owner(resource)
        self.kind: Optional[str] = None
        self.phase = Phase.CREATED
        self._result_nnz: Optional[int] = None
        self.internal: Dict[str, Any] = {}
        self.fingerprint = None
        self.analysis_count = 0  # structural analyses actually performed

    # -- protocol helpers used by the kernels ------------------------------

    def bind(self, kind):
        if self.kind is None:
            self.kind = kind
        elif self.kind != kind:
            raise PhaseError(
                f"state bound to {self.kind!r}, used with {kind!r}"
            )

    def reset(self):
        self.phase = Phase.CREATED
        self._result_nnz = None
        self.internal.clear()
        self.fingerprint = None
        self._release_blocks()

    def require_phase(self, *allowed):
        if self.phase not in allowed:
            raise PhaseError(
                f"{self.kind or 'state'}: phase {self.phase.name} not in "
                f"{[p.name for p in allowed]}"
            )

    def set_result_nnz(self, nnz):
        self._result_nnz = int(nnz)

    @property
    def result_nnz(self):
        if self.phase < Phase.COMPUTED or self._result_nnz is None:
            raise PhaseError("result_nnz read before compute")
        return self._result_nnz

    def destroy(self):
        self.reset()
        self.kind = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.destroy()


def state_result_nnz(state: OperationState) -> int:
    return state.result_nnz


@dataclass(frozen=True)
class ExecutionPolicy:
    """Where and how a kernel runs.

    ``sequential`` is bitwise deterministic by definition;
    ``deterministic_parallel`` uses fixed work partitions so results do not
    depend on the thread count.
    """

    mode: str = "sequential"  # sequential | deterministic_parallel | parallel
    thread_count: int = 1

    def __post_init__(self):
        if self.mode not in ("sequential", "deterministic_parallel", "parallel"):
            raise ValueError(f"bad policy mode {self.mode!r}")
        if self.thread_count < 1:
            raise ValueError("thread_count must be >= 1")


sequential = ExecutionPolicy("sequential")


def deterministic_parallel(thread_count=4):
    return ExecutionPolicy("deterministic_parallel", thread_count)


def parallel(thread_count=4):
    return ExecutionPolicy("parallel", thread_count)


class CnrProperty(enum.IntEnum):
    DEFAULT = 0
    NONE = 0
    CNR = 1
    STRICT_CNR = 2


_cnr_lock = threading.Lock()
_cnr_value = CnrProperty.DEFAULT


def set_cnr_property(prop: CnrProperty):
    global _cnr_value
    with _cnr_lock:
        _cnr_value = CnrProperty(prop)


def get_cnr_property() -> CnrProperty:
    with _cnr_lock:
        return _cnr_value


# ---------------------------------------------------------------------------
# structural fingerprints (staged-reuse detection)


def _digest(h, arr):
    h.update(np.ascontiguousarray(arr).tobytes())


def structure_fingerprint(*views):
    """64-bit hash of shapes, nnz, and structure arrays (values excluded)."""
    h = hashlib.blake2b(digest_size=8)
    for v in views:
        if v is None:
            h.update(b"-")
            continue
        h.update(f"{v.format}:{v.nrows}x{v.ncols}:{v.nnz}:{v.index_base};".encode())
        if isinstance(v, CsrView):
            _digest(h, v.row_offsets)
            _digest(h, v.col_indices)
        elif isinstance(v, CscView):
            _digest(h, v.col_offsets)
            _digest(h, v.row_indices)
        elif isinstance(v, CooView):
            _digest(h, v.row_indices)
            _digest(h, v.col_indices)
    return h.digest()
