"""Wiring layer: store, schooling tracker, NN searcher, archiver, sim clock.

The engine owns simulated time. Updates carry their own timestamps; between
updates `advance_time` runs the clustering scheduler at its cadence and ages
store tiers once per `age_interval` simulated second. Aged-out location cells
flow into the archiver, which is drained explicitly at shutdown.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

from .archive import Archiver, DiskModelParams
from .nn import FlagConfig, Neighbor, NNQuery, Searcher
from .schooling import SchoolConfig, Tracker, UpdateMessage, UpdateOutcome
from .spatial import LevelConfig
from .store import Store


@dataclass
class EngineConfig:
    levels: LevelConfig = field(default_factory=LevelConfig)
    school: SchoolConfig = field(default_factory=SchoolConfig)
    flag: FlagConfig = field(default_factory=FlagConfig)
    location_ttls: tuple[float, ...] = (60.0, 120.0, 240.0)
    age_interval: float = 1.0
    archive_enabled: bool = True
    archive_params: DiskModelParams = field(default_factory=DiskModelParams)
    n_disks: int = 4
    work_dir: str | None = None  # holds store tiers and archive pages


class Engine:
    """One complete moving-object index over simulated time."""

    def __init__(self, cfg: EngineConfig | None = None):
        self.cfg = cfg = cfg if cfg is not None else EngineConfig()
        self.work_dir = cfg.work_dir or tempfile.mkdtemp(prefix="shoal-")
        self.now = 0.0
        self.store = Store(tier_dir=os.path.join(self.work_dir, "tiers"))
        self.archive: Archiver | None = None
        if cfg.archive_enabled:
            self.archive = Archiver(
                cfg.archive_params,
                cfg.n_disks,
                os.path.join(self.work_dir, "pages"),
                levels=cfg.levels,
            )
        self.tracker = Tracker(
            self.store,
            cfg.levels,
            cfg.school,
            archive=self.archive,
            location_ttls=cfg.location_ttls,
        )
        self.searcher = Searcher(self.tracker, cfg.flag, clock=lambda: self.now)
        self._next_age = cfg.age_interval
        self.cluster_log: list = []  # MergeStats from every scheduler pass

    # ------------------------------------------------------------------ drive

    def ingest(self, msg: UpdateMessage) -> UpdateOutcome:
        if msg.t > self.now:
            self.advance_time(msg.t)
        return self.tracker.process_update(msg)

    def advance_time(self, t: float) -> None:
        """Move the sim clock forward, running due clustering and aging work."""
        while self._next_age <= t:
            self.now = self._next_age
            self.cluster_log.extend(self.tracker.clustering_tick(self.now))
            self.store.age_tick(int(self.now * 1e6))
            self._next_age += self.cfg.age_interval
        if t > self.now:
            self.now = t
        self.cluster_log.extend(self.tracker.clustering_tick(self.now))

    def query(self, x: float, y: float, k: int, t: float | None = None) -> list[Neighbor]:
        return self.searcher.knn(NNQuery(x, y, self.now if t is None else t, k))

    # --------------------------------------------------------------- shutdown

    def drain(self) -> None:
        """Push every live location through the tiers into the archive."""
        self.store.drain_aging()
        if self.archive is not None:
            self.archive.drain()

    def close(self) -> None:
        if self.archive is not None:
            self.archive.close()
        self.store.close()
