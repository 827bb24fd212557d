"""Coded data shuffling between a master and K=2 or K=3 workers."""

from .core import (
    Dataset,
    DivisibilityError,
    EnumerationCapExceeded,
    Fragment,
    InvariantViolation,
    Message,
    ProtocolStateError,
    ProtocolViolation,
    RateRecord,
    Shuffle,
    WorkerState,
    batch,
    enumerate_shuffles,
    make_dataset,
    random_shuffle,
    xor_fold,
)
from .schemes import (
    FullStorage,
    HalfMap,
    K2Min,
    K3Min,
    K3TwoThirds,
    MemoryShare,
    select_scheme,
)
from .harness import SimulationRun, run_chain, step, worst_case_search

__version__ = "0.1.0"
