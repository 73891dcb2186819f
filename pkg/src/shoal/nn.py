"""Nearest-neighbor search over the spatial index.

nearest_leaders runs a best-first search over Hilbert cells: a min-priority
queue of cells ordered by their minimum distance to the query point, a
bounded result set of the closest leaders found so far, and a termination
bound equal to the current count-th distance. Cells are read with one batch
scan each; edge neighbors of every scanned cell are pushed once.

knn expands leaders into whole schools (followers are modeled from the
leader's extrapolated position plus their displacement) and widens the leader
fetch until the k-th candidate provably beats every unfetched school, using
conservative bounds on displacement magnitude and extrapolation drift.

best_level picks the search cell level from local leader density: starting
from the global-density guess, it probes the cell at the current level with
one scan and moves by the truncated half-log of the local over-target ratio,
tightening a (min, max) window until the step converges or crosses a bound.
cached_level memoizes the result keyed by key-level row-key intervals with a
freshness TTL, so repeat queries in a neighborhood skip the probes entirely.

Distance comparisons use squared distances with object-id tie-breaks, so
results are deterministic and reproducible against a brute-force oracle.
"""

from __future__ import annotations

import heapq
import math
import struct
import threading
import time
from dataclasses import dataclass
from typing import Callable

from . import spatial
from .schooling import Tracker
from .spatial import SpatialIndex

_POS = struct.Struct("<dd")
_POS_SIZE = _POS.size


class SearchError(Exception):
    pass


@dataclass(frozen=True)
class FlagConfig:
    sigma: float = 32.0
    l_min: int = 1
    l_max: int = 8
    delta_max: int = 4
    cache_ttl: float = 60.0
    cache_max: int = 4096

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.l_min > self.l_max:
            raise ValueError("l_min must not exceed l_max")
        if self.delta_max < 1:
            raise ValueError("delta_max must be at least 1")
        if self.cache_ttl <= 0:
            raise ValueError("cache_ttl must be positive")


@dataclass(frozen=True)
class NNQuery:
    x: float
    y: float
    t: float
    k: int


@dataclass
class QueryStats:
    rows_scanned: int = 0
    scans: int = 0
    cells_popped: int = 0
    widenings: int = 0
    flag_probes: int = 0
    cache_hit: bool = False


@dataclass(frozen=True)
class Neighbor:
    oid: int
    x: float
    y: float
    dist: float


@dataclass
class _CacheRecord:
    left: bytes
    right: bytes
    level: int
    created: float


@dataclass
class _Candidate:
    d2: float
    oid: int
    x: float
    y: float


class Searcher:
    """Query side: exact kNN and adaptive level selection over a tracker."""

    def __init__(
        self,
        tracker: Tracker,
        flag: FlagConfig | None = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.tracker = tracker
        self.levels = tracker.levels
        cfg = flag or FlagConfig()
        if cfg.l_max > self.levels.key_level:
            cfg = FlagConfig(
                sigma=cfg.sigma,
                l_min=min(cfg.l_min, self.levels.key_level),
                l_max=self.levels.key_level,
                delta_max=cfg.delta_max,
                cache_ttl=cfg.cache_ttl,
                cache_max=cfg.cache_max,
            )
        self.flag = cfg
        self.clock = clock
        self._cache: list[_CacheRecord] = []
        self._cache_lock = threading.Lock()
        self.cache_hits = 0
        self.cache_misses = 0
        self.last_stats = QueryStats()
        self._unpack_pos = _POS.unpack

    # ---------------------------------------------------------- leader search

    def nearest_leaders(
        self, loc: tuple[float, float], count: int, l_n: int, stats: QueryStats | None = None
    ) -> list[Neighbor]:
        """Exactly the `count` leaders nearest to loc by recorded position.

        Ties are broken by smaller object id. Returns fewer only when the
        index holds fewer leaders. l_n sets the cell granularity of the
        search frontier.
        """
        if stats is None:
            stats = QueryStats()
            self.last_stats = stats
        if count <= 0:
            return []
        if not 0 <= l_n <= self.levels.key_level:
            raise SearchError("level %d outside [0, %d]" % (l_n, self.levels.key_level))
        spa = self.tracker.spa
        if spa.row_count() == 0:
            return []
        qx, qy = loc
        seed = spatial.encode(loc, l_n, self.levels)
        frontier: list[tuple[float, int]] = [(0.0, seed.value)]
        pushed = {seed.value}
        # max-heap of the best `count` so far, keyed (-d2, -oid)
        best: list[tuple[float, int, float, float]] = []
        bound_d2 = math.inf
        bound_oid = -1
        while frontier:
            dmin2, value = heapq.heappop(frontier)
            if len(best) == count and dmin2 > bound_d2:
                break
            cell = SpatialIndex(l_n, value)
            stats.cells_popped += 1
            start, end = spatial.key_range(cell, self.levels.key_level)
            rows = spa.scan_range(start, end)
            stats.scans += 1
            stats.rows_scanned += len(rows)
            for _, cells in rows:
                for c in cells:
                    if c.family != "ids" or len(c.value) != _POS_SIZE:
                        continue
                    ox, oy = self._unpack_pos(c.value)
                    oid = int(c.column)
                    dx = ox - qx
                    dy = oy - qy
                    d2 = dx * dx + dy * dy
                    if len(best) < count:
                        heapq.heappush(best, (-d2, -oid, ox, oy))
                        bound_d2 = -best[0][0]
                        bound_oid = -best[0][1]
                    elif (d2, oid) < (bound_d2, bound_oid):
                        heapq.heapreplace(best, (-d2, -oid, ox, oy))
                        bound_d2 = -best[0][0]
                        bound_oid = -best[0][1]
            for nbr in spatial.neighbors(cell, self.levels):
                if nbr.value not in pushed:
                    pushed.add(nbr.value)
                    box = spatial.decode(nbr, self.levels)
                    ddx = max(box.x_min - qx, 0.0, qx - box.x_max)
                    ddy = max(box.y_min - qy, 0.0, qy - box.y_max)
                    heapq.heappush(frontier, (ddx * ddx + ddy * ddy, nbr.value))
        out = sorted(((-e[0], -e[1], e[2], e[3]) for e in best), key=lambda e: (e[0], e[1]))
        return [Neighbor(oid, x, y, math.sqrt(d2)) for d2, oid, x, y in out]

    # ------------------------------------------------------------------- kNN

    def knn(self, q: NNQuery, l_n: int | None = None) -> list[Neighbor]:
        """The exact k nearest objects to the query by modeled location.

        Leaders are extrapolated to q.t; followers are the leader's
        extrapolated position plus their displacement. The leader fetch is
        widened until the k-th candidate distance provably beats the best
        possible member of any unfetched school.
        """
        stats = QueryStats()
        self.last_stats = stats
        tr = self.tracker
        if q.k <= 0:
            return []
        level = l_n if l_n is not None else self.cached_level((q.x, q.y), stats)
        fetch = max(1, math.ceil(q.k / tr.avg_school_size()))
        total_leaders = tr.leader_count
        while True:
            leaders = self.nearest_leaders((q.x, q.y), fetch, level, stats)
            exhausted = len(leaders) < fetch or len(leaders) >= total_leaders
            cands: list[_Candidate] = []
            for lead in leaders:
                rec = tr.latest_record(lead.oid)
                if rec is None:
                    continue
                dt = q.t - rec.t
                lx = rec.x + rec.vx * dt
                ly = rec.y + rec.vy * dt
                dx = lx - q.x
                dy = ly - q.y
                cands.append(_Candidate(dx * dx + dy * dy, lead.oid, lx, ly))
                for fid, (fdx, fdy) in tr.followers_of(lead.oid):
                    fx = lx + fdx
                    fy = ly + fdy
                    dx = fx - q.x
                    dy = fy - q.y
                    cands.append(_Candidate(dx * dx + dy * dy, fid, fx, fy))
            cands.sort(key=lambda c: (c.d2, c.oid))
            if exhausted:
                chosen = cands[: q.k]
                break
            if len(cands) >= q.k:
                kth = math.sqrt(cands[q.k - 1].d2)
                r_l = leaders[-1].dist
                # worst-case distance between an unfetched leader's recorded
                # and modeled member positions: displacement plus drift over
                # the largest possible record-to-query time gap
                horizon = max(0.0, q.t - tr.min_live_leader_t(), tr.max_record_t - q.t)
                bound = tr.max_abs_disp + tr.max_speed * horizon
                if kth < r_l - bound:
                    chosen = cands[: q.k]
                    break
            fetch *= 2
            stats.widenings += 1
        return [Neighbor(c.oid, c.x, c.y, math.sqrt(c.d2)) for c in chosen]

    # ------------------------------------------------------- level selection

    def _count_in_cell(self, loc: tuple[float, float], level: int, stats: QueryStats | None) -> int:
        cell = spatial.encode(loc, level, self.levels)
        start, end = spatial.key_range(cell, self.levels.key_level)
        rows = self.tracker.spa.scan_range(start, end)
        if stats is not None:
            stats.scans += 1
            stats.rows_scanned += len(rows)
            stats.flag_probes += 1
        m = 0
        for _, cells in rows:
            m += sum(1 for c in cells if c.family == "ids")
        return m

    def best_level(self, loc: tuple[float, float], stats: QueryStats | None = None) -> int:
        """Density-adaptive search level for this location.

        One scan per probe; the step is the truncated half-log of how far the
        cell's population is from sigma. Empty cells step down by delta_max
        at most. Stops when the step is zero, repeats a level, or crosses a
        previously established bound; the result stays within
        [l_min, l_max].
        """
        f = self.flag
        n = self.tracker.leader_count
        if n <= 0:
            return f.l_min
        guess = round(0.5 * math.log2(n / f.sigma))
        l = min(max(int(guess), f.l_min), f.l_max)
        min_b = -math.inf
        max_b = math.inf
        for _ in range(f.l_max - f.l_min + 2):
            m = self._count_in_cell(loc, l, stats)
            if m == 0:
                delta = -f.delta_max
            else:
                delta = int(0.5 * math.log2(m / f.sigma))  # truncated toward zero
            if delta > 0:
                min_b = l
            elif delta < 0:
                max_b = l
            else:
                break
            nxt = min(max(l + delta, f.l_min), f.l_max)
            if nxt <= min_b or nxt >= max_b or nxt == l:
                break
            l = nxt
        return l

    def cached_level(self, loc: tuple[float, float], stats: QueryStats | None = None) -> int:
        """best_level through the key-interval cache.

        A hit (a fresh record whose interval covers the location's key-level
        row key) answers with zero store access. A miss runs best_level and
        inserts a record covering the whole key interval of the chosen cell.
        """
        now = self.clock()
        key = spatial.encode(loc, self.levels.key_level, self.levels).key()
        ttl = self.flag.cache_ttl
        with self._cache_lock:
            best: _CacheRecord | None = None
            for rec in self._cache:
                if now - rec.created < ttl and rec.left <= key <= rec.right:
                    if best is None or rec.created > best.created:
                        best = rec
            if best is not None:
                self.cache_hits += 1
                if stats is not None:
                    stats.cache_hit = True
                return best.level
        level = self.best_level(loc, stats)
        cell = spatial.encode(loc, level, self.levels)
        left, right = spatial.key_interval(cell, self.levels.key_level)
        with self._cache_lock:
            self.cache_misses += 1
            if len(self._cache) >= self.flag.cache_max:
                self._cache = [r for r in self._cache if now - r.created < ttl]
                del self._cache[: max(0, len(self._cache) - self.flag.cache_max + 1)]
            self._cache.append(_CacheRecord(left, right, level, now))
        return level

    def cache_size(self) -> int:
        with self._cache_lock:
            return len(self._cache)
