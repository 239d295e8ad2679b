"""Online fair division laboratory: mechanisms, advice, exact and sampled
welfare evaluation, offline optima and axiom checks."""
from .core import (
    DISCARD,
    AllocationDistribution,
    AssignmentMatrix,
    BidProfile,
    Instance,
    Objective,
    RatioReport,
    WelfareReport,
    ratio,
)
from .evaluation import EngineConfig, evaluate
from .mechanisms import Mechanism, advised, get_mechanism

__all__ = [
    "DISCARD", "AllocationDistribution", "AssignmentMatrix", "BidProfile", "Instance", "Objective",
    "RatioReport", "WelfareReport", "ratio", "EngineConfig", "evaluate", "Mechanism", "advised",
    "get_mechanism",
]
__version__ = "0.1.0"
