"""Deployment strategies: popularity-driven cache pre-placement and
real-time hotspot repositioning.

Both work on snapshots (request logs, demand grids) and return pure
results; the event engine or the caller applies them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from skyoff.domain import CachedItem, UavNode, Vec3


@dataclass
class LogEntry:
    t: float
    user_id: int
    content_id: str
    position: Vec3


@dataclass
class RequestLog:
    entries: list[LogEntry] = field(default_factory=list)

    def append(self, t: float, user_id: int, content_id: str, position: Vec3):
        if self.entries and t < self.entries[-1].t:
            raise ValueError("request log timestamps must be nondecreasing")
        self.entries.append(LogEntry(t, user_id, content_id, position))


def log_to_csv(log: RequestLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "user_id", "content_id", "x", "y", "z"])
    for e in log.entries:
        w.writerow([repr(e.t), e.user_id, e.content_id] + [repr(c) for c in e.position])
    return buf.getvalue()


def log_from_csv(text: str) -> RequestLog:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["t", "user_id", "content_id", "x", "y", "z"]:
        raise ValueError("request log CSV must start with t,user_id,content_id,x,y,z")
    log = RequestLog()
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 6:
            raise ValueError(f"request log line {i}: expected 6 columns")
        log.append(
            float(row[0]), int(row[1]), row[2], (float(row[3]), float(row[4]), float(row[5]))
        )
    return log


# ---------------------------------------------------------------------------
# Historical mining


def _in_window(t: float, now: float, window: float) -> bool:
    return now - window < t <= now


def mine_popular_contents(
    log: RequestLog, window: float, top_c: int, now: float | None = None
) -> list[tuple[str, int]]:
    """Request counts per content over the trailing window, most popular
    first; ties break on the content id.  `now` defaults to the last
    entry's timestamp."""
    if window <= 0:
        raise ValueError("window must be > 0")
    if not log.entries:
        return []
    if now is None:
        now = log.entries[-1].t
    counts: dict[str, int] = {}
    for e in log.entries:
        if _in_window(e.t, now, window):
            counts[e.content_id] = counts.get(e.content_id, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:top_c]


def content_centroids(
    log: RequestLog, window: float, now: float | None = None
) -> dict[str, Vec3]:
    """Mean request position per content over the trailing window."""
    if not log.entries:
        return {}
    if now is None:
        now = log.entries[-1].t
    sums: dict[str, list[float]] = {}
    counts: dict[str, int] = {}
    for e in log.entries:
        if _in_window(e.t, now, window):
            acc = sums.setdefault(e.content_id, [0.0, 0.0, 0.0])
            for i in range(3):
                acc[i] += e.position[i]
            counts[e.content_id] = counts.get(e.content_id, 0) + 1
    return {
        cid: tuple(v / counts[cid] for v in acc) for cid, acc in sums.items()
    }


def preplace_cache(
    uavs: list[UavNode],
    popular: list[tuple[str, int]],
    result_sizes: dict[str, float],
    centroids: dict[str, Vec3],
) -> tuple[list[tuple[int, str, float]], list[str]]:
    """Greedy pre-placement of popular results into UAV caches.

    Contents are placed in rank order on the UAV nearest their request
    centroid that still has room; contents fitting nowhere are skipped.
    Returns (placements as (uav_id, content_id, bits), skipped ids).
    Caches are not mutated here; see apply_placements.
    """
    remaining = {u.id: u.cache_capacity - u.cached_bits() for u in uavs}
    by_id = {u.id: u for u in uavs}
    placements: list[tuple[int, str, float]] = []
    skipped: list[str] = []
    for content_id, _count in popular:
        if content_id not in result_sizes:
            raise KeyError(f"no result size for content {content_id}")
        bits = result_sizes[content_id]
        center = centroids.get(content_id)
        order = sorted(
            by_id,
            key=lambda uid: (
                math.dist(by_id[uid].position, center) if center is not None else 0.0,
                uid,
            ),
        )
        placed = False
        for uid in order:
            if remaining[uid] >= bits:
                remaining[uid] -= bits
                placements.append((uid, content_id, bits))
                placed = True
                break
        if not placed:
            skipped.append(content_id)
    return placements, skipped


def apply_placements(
    uavs: list[UavNode], placements: list[tuple[int, str, float]], expiry: float = math.inf
) -> None:
    by_id = {u.id: u for u in uavs}
    for uid, content_id, bits in placements:
        by_id[uid].cache_contents.append(CachedItem(content_id, bits, expiry))


def placements_to_csv(placements: list[tuple[int, str, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["uav_id", "content_id", "bits"])
    for uid, cid, bits in placements:
        w.writerow([uid, cid, repr(bits)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Demand grid and hotspots


@dataclass
class DemandMap:
    """Per-cell request counts and position sums over a sliding window."""

    cell_size: float
    counts: dict[tuple[int, int], int] = field(default_factory=dict)
    pos_sums: dict[tuple[int, int], list[float]] = field(default_factory=dict)

    def add(self, position: Vec3) -> None:
        cell = (
            math.floor(position[0] / self.cell_size),
            math.floor(position[1] / self.cell_size),
        )
        self.counts[cell] = self.counts.get(cell, 0) + 1
        acc = self.pos_sums.setdefault(cell, [0.0, 0.0, 0.0])
        for i in range(3):
            acc[i] += position[i]


def build_demand_map(
    log: RequestLog, window: float, now: float | None = None, cell_size: float = 100.0
) -> DemandMap:
    if window <= 0:
        raise ValueError("window must be > 0")
    dmap = DemandMap(cell_size=cell_size)
    if not log.entries:
        return dmap
    if now is None:
        now = log.entries[-1].t
    for e in log.entries:
        if _in_window(e.t, now, window):
            dmap.add(e.position)
    return dmap


def detect_hotspots(dmap: DemandMap, k: int) -> list[Vec3]:
    """Centers of the k busiest cells, each weighted by its requests.

    Cell ties break on the cell index, so the result is independent of
    insertion order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    live = [(cell, n) for cell, n in dmap.counts.items() if n > 0]
    if not live:
        raise ValueError("no demand: the map holds no requests")
    ranked = sorted(live, key=lambda kv: (-kv[1], kv[0]))
    out: list[Vec3] = []
    for cell, n in ranked[:k]:
        acc = dmap.pos_sums[cell]
        out.append(tuple(v / n for v in acc))
    return out


def reposition(
    uavs: list[UavNode],
    centroids: list[Vec3],
    dt: float,
    vmax: float,
    busy_ids: set[int] | None = None,
) -> dict[int, Vec3]:
    """Steer idle UAVs toward hotspot centroids.

    Greedy nearest-pair matching over (distance, uav id, centroid index);
    each matched UAV gets a horizontal velocity toward its centroid with
    speed min(vmax, distance/dt), keeping its own altitude.  Busy UAVs
    and unmatched UAVs are untouched.  Returns uav_id -> new velocity.
    """
    if vmax <= 0:
        raise ValueError("vmax must be > 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    busy_ids = busy_ids or set()
    idle = [u for u in uavs if u.id not in busy_ids]
    pairs = []
    for u in idle:
        for ci, c in enumerate(centroids):
            d = math.hypot(c[0] - u.position[0], c[1] - u.position[1])
            pairs.append((d, u.id, ci))
    pairs.sort()
    taken_uavs: set[int] = set()
    taken_cents: set[int] = set()
    by_id = {u.id: u for u in idle}
    out: dict[int, Vec3] = {}
    for d, uid, ci in pairs:
        if uid in taken_uavs or ci in taken_cents:
            continue
        taken_uavs.add(uid)
        taken_cents.add(ci)
        u = by_id[uid]
        c = centroids[ci]
        if d == 0.0:
            out[uid] = (0.0, 0.0, 0.0)
            continue
        speed = min(vmax, d / dt)
        out[uid] = (
            (c[0] - u.position[0]) / d * speed,
            (c[1] - u.position[1]) / d * speed,
            0.0,
        )
    return out
