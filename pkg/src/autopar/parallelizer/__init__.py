"""Future placement, loop lowering and method cloning."""

from autopar.parallelizer.granularity import (
    DEFAULT_THRESHOLD, parallelizable_functions, should_parallelize,
)
from autopar.parallelizer.loops import ReductionRegistry, detect_doacross, detect_doall
from autopar.parallelizer.lower import clone_method, lower, verify_plan
from autopar.parallelizer.placement import find_future_position
from autopar.parallelizer.plan import (
    ATOMIC, BLOCKING, DOACROSS, DOALL, NONBLOCKING, FunctionPlan, FutureCreate,
    FutureGet, FuturePlacement, Guard, LoopPlan, ParallelLoop, ParallelPlan, Reduction,
    seq_name,
)

__all__ = [
    "ATOMIC", "BLOCKING", "DEFAULT_THRESHOLD", "DOACROSS", "DOALL", "NONBLOCKING",
    "FunctionPlan", "FutureCreate", "FutureGet", "FuturePlacement", "Guard", "LoopPlan",
    "ParallelLoop", "ParallelPlan", "Reduction", "ReductionRegistry", "clone_method",
    "detect_doacross", "detect_doall", "find_future_position", "lower",
    "parallelizable_functions", "seq_name", "should_parallelize", "verify_plan",
]
