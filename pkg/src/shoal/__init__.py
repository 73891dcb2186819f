"""Moving-object spatial index with update shedding and tiered archiving.

Objects reporting (position, velocity) updates are grouped into "schools":
one leader per school is tracked in a sorted KV store under Hilbert-curve
row keys, while followers' updates are shed whenever the school's motion
model predicts them within a threshold. Exact k-nearest-neighbor queries
adapt their scan granularity to leader density; aged records flow to a
double-buffered multi-disk archive with locality-preserving placement.
"""

from .archive import (
    ArchivedRecord,
    Archiver,
    DiskModelParams,
    InfeasibleError,
    OptimizeResult,
    optimize,
    placement_hash,
)
from .engine import Engine, EngineConfig
from .nn import FlagConfig, Neighbor, NNQuery, QueryStats, Searcher
from .schooling import (
    Affiliation,
    LocationRecord,
    MergeStats,
    Outcome,
    SchoolConfig,
    StaleUpdateError,
    Tracker,
    UpdateMessage,
    UpdateOutcome,
    hexagon_bin,
)
from .spatial import CellBox, LevelConfig, SpatialIndex
from .store import Store, Table
from .workload import Generator, RoadMap, WorkloadConfig, generate_map, record_trace, replay_trace

__version__ = "0.1.0"

__all__ = [
    "Affiliation",
    "ArchivedRecord",
    "Archiver",
    "CellBox",
    "DiskModelParams",
    "Engine",
    "EngineConfig",
    "FlagConfig",
    "Generator",
    "InfeasibleError",
    "LevelConfig",
    "LocationRecord",
    "MergeStats",
    "NNQuery",
    "Neighbor",
    "OptimizeResult",
    "Outcome",
    "QueryStats",
    "RoadMap",
    "SchoolConfig",
    "Searcher",
    "SpatialIndex",
    "StaleUpdateError",
    "Store",
    "Table",
    "Tracker",
    "UpdateMessage",
    "UpdateOutcome",
    "WorkloadConfig",
    "generate_map",
    "hexagon_bin",
    "optimize",
    "placement_hash",
    "record_trace",
    "replay_trace",
    "__version__",
]
