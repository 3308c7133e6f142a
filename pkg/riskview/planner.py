"""Local risk-averse replanning on the lattice.

A segment from z_j toward z_{j+1} is planned inside a box-shaped partition of
the lattice, over the vertices whose risk value clears the tolerance gamma.
When the next waypoint is unsafe or unreachable, the safest reachable vertex
near it (the proxy subgoal) becomes the target.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.sparse import csgraph

from .errors import PlanBlockedError
from .risk import RiskField
from .scene import EDGE_LENGTH_FACTORS, NEIGHBOR_OFFSETS, Lattice

DEFAULT_PROXY_EXPANSIONS = 5


@dataclass(frozen=True, eq=False)
class SafeSet:
    """Vertices of a partition whose risk value is at least gamma."""

    lattice: Lattice
    vertices: np.ndarray  # sorted partition vertex indices
    member: np.ndarray  # bool, aligned with vertices
    gamma: float

    @cached_property
    def members(self) -> np.ndarray:
        return self.vertices[self.member]

    @cached_property
    def member_set(self) -> FrozenSet[int]:
        return frozenset(int(v) for v in self.members)

    def __contains__(self, vertex: object) -> bool:
        return int(vertex) in self.member_set  # type: ignore[arg-type]

    def __len__(self) -> int:
        return int(self.members.shape[0])

    def restricted_to(self, vertices: np.ndarray) -> "SafeSet":
        keep = np.isin(self.vertices, vertices) & self.member
        return SafeSet(lattice=self.lattice, vertices=self.vertices, member=keep, gamma=self.gamma)


@dataclass(frozen=True, eq=False)
class PathSegment:
    waypoints: np.ndarray  # (K, 3)
    vertices: Tuple[int, ...]
    reached_proxy: bool
    total_length: float
    fallback: bool = False
    safe: Optional[SafeSet] = dc_field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.vertices)


def _segment_from_vertices(
    lattice: Lattice,
    vertices: Sequence[int],
    reached_proxy: bool = False,
    fallback: bool = False,
    safe: Optional[SafeSet] = None,
) -> PathSegment:
    pts = np.array([lattice.position(v) for v in vertices]).reshape(-1, 3)
    length = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))) if len(vertices) > 1 else 0.0
    return PathSegment(
        waypoints=pts,
        vertices=tuple(int(v) for v in vertices),
        reached_proxy=reached_proxy,
        total_length=length,
        fallback=fallback,
        safe=safe,
    )


def concat_segments(lattice: Lattice, segments: Sequence[PathSegment]) -> PathSegment:
    """Join consecutive segments, dropping the repeated joint vertex."""
    verts: List[int] = []
    for seg in segments:
        for v in seg.vertices:
            if not verts or verts[-1] != v:
                verts.append(v)
    return _segment_from_vertices(lattice, verts, reached_proxy=any(s.reached_proxy for s in segments))


def local_partition(lattice: Lattice, z_j: Sequence[float], z_next: Sequence[float], margin: float) -> np.ndarray:
    """Vertices inside the bounding box of {z_j, z_next} inflated by margin, clipped to the lattice.

    A thin box that fits between two vertex planes gives an empty set. Only a
    box that misses the lattice extent altogether is an error.
    """
    a = np.asarray(z_j, dtype=np.float64)
    b = np.asarray(z_next, dtype=np.float64)
    lo = np.minimum(a, b) - margin
    hi = np.maximum(a, b) + margin
    origin = np.asarray(lattice.origin)
    if np.any(hi < origin - 1e-9) or np.any(lo > lattice.upper + 1e-9):
        raise ValueError(f"local partition between {tuple(a)} and {tuple(b)} is outside the lattice")
    dims = np.asarray(lattice.dims)
    first = np.maximum(np.ceil((lo - origin) / lattice.spacing - 1e-9), 0).astype(np.int64)
    last = np.minimum(np.floor((hi - origin) / lattice.spacing + 1e-9), dims - 1).astype(np.int64)
    if np.any(last < first):
        return np.zeros(0, dtype=np.int64)
    i, j, k = np.meshgrid(
        np.arange(first[0], last[0] + 1),
        np.arange(first[1], last[1] + 1),
        np.arange(first[2], last[2] + 1),
        indexing="ij",
    )
    _, ny, nz = lattice.dims
    return ((i * ny + j) * nz + k).reshape(-1)


def filter_safe(field: RiskField, partition: np.ndarray, gamma: float) -> SafeSet:
    """Vertices of the partition whose alpha clears gamma (inclusive)."""
    verts = np.unique(np.asarray(partition, dtype=np.int64))
    return SafeSet(lattice=field.lattice, vertices=verts, member=field.values[verts] >= gamma, gamma=gamma)


def full_safe_set(lattice: Lattice) -> SafeSet:
    """Every vertex, no risk threshold."""
    verts = np.arange(lattice.vertex_count, dtype=np.int64)
    return SafeSet(lattice=lattice, vertices=verts, member=np.ones(verts.shape[0], dtype=bool), gamma=-math.inf)


def _heuristic(lattice: Lattice, a: int, b: int) -> float:
    ia, ja, ka = lattice.ijk(a)
    ib, jb, kb = lattice.ijk(b)
    return lattice.spacing * math.sqrt((ia - ib) ** 2 + (ja - jb) ** 2 + (ka - kb) ** 2)


def astar(safe: SafeSet, start: int, goal: int) -> Optional[PathSegment]:
    """Shortest 26-connected path over safe vertices; None when goal is unreachable.

    Queue order is (f, h, vertex index), which makes expansions deterministic.
    """
    if start not in safe or goal not in safe:
        raise ValueError(f"astar endpoints must be safe (start={start}, goal={goal})")
    lattice = safe.lattice
    allowed = safe.member_set
    g_best: Dict[int, float] = {start: 0.0}
    came_from: Dict[int, int] = {}
    h0 = _heuristic(lattice, start, goal)
    frontier: List[Tuple[float, float, int, float]] = [(h0, h0, start, 0.0)]
    expansions = 0
    while frontier:
        _, _, cur, g_cur = heapq.heappop(frontier)
        if g_cur > g_best[cur]:
            continue
        if cur == goal:
            path = [cur]
            while path[-1] in came_from:
                path.append(came_from[path[-1]])
            path.reverse()
            logger.trace(f"A* reached {goal} after {expansions} expansions")
            return _segment_from_vertices(lattice, path, safe=safe)
        expansions += 1
        g_here = g_best[cur]
        for nb, cost in lattice.neighbors(cur):
            if nb not in allowed:
                continue
            g_new = g_here + cost
            if g_new < g_best.get(nb, math.inf):
                g_best[nb] = g_new
                came_from[nb] = cur
                h = _heuristic(lattice, nb, goal)
                heapq.heappush(frontier, (g_new + h, h, nb, g_new))
    return None


def proxy_subgoal(safe: SafeSet, field: RiskField, z_next: Sequence[float], delta: float) -> Optional[int]:
    """Safe vertex within distance delta of z_next with the largest alpha.

    Ties prefer the smaller distance to z_next, then the smaller vertex index.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    cand = safe.members
    if cand.size == 0:
        return None
    pos = safe.lattice.positions()[cand]
    dist = np.linalg.norm(pos - np.asarray(z_next, dtype=np.float64), axis=1)
    inside = dist <= delta
    if not np.any(inside):
        return None
    cand, dist = cand[inside], dist[inside]
    alpha = field.values[cand]
    best = np.lexsort((cand, dist, -alpha))[0]
    return int(cand[best])


def safe_graph(safe: SafeSet) -> Tuple[sparse.csr_matrix, np.ndarray]:
    """Weighted 26-connected adjacency over safe members (local ids follow ``safe.members``)."""
    lattice = safe.lattice
    members = safe.members
    n = members.shape[0]
    if n == 0:
        return sparse.csr_matrix((0, 0)), members
    ijk = lattice.ijk_array(members)
    dims = np.asarray(lattice.dims)
    _, ny, nz = lattice.dims
    rows, cols, data = [], [], []
    for off in NEIGHBOR_OFFSETS:
        nb = ijk + np.asarray(off)
        ok = np.all((nb >= 0) & (nb < dims), axis=1)
        nb_idx = (nb[:, 0] * ny + nb[:, 1]) * nz + nb[:, 2]
        pos = np.searchsorted(members, nb_idx)
        pos_c = np.minimum(pos, n - 1)
        ok &= members[pos_c] == nb_idx
        src = np.flatnonzero(ok)
        rows.append(src)
        cols.append(pos_c[ok])
        step = EDGE_LENGTH_FACTORS[sum(abs(o) for o in off)] * lattice.spacing
        data.append(np.full(src.shape[0], step))
    graph = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return graph, members


def graph_distances(safe: SafeSet, source: int) -> Tuple[np.ndarray, np.ndarray]:
    """Shortest-path distance from ``source`` to every safe member (inf when unreachable)."""
    graph, members = safe_graph(safe)
    local = int(np.searchsorted(members, source))
    if local >= members.shape[0] or members[local] != source:
        raise ValueError(f"source vertex {source} is not in the safe set")
    dist = csgraph.dijkstra(graph, directed=False, indices=local)
    return members, dist


def reachable(safe: SafeSet, start: int) -> np.ndarray:
    """Sorted safe vertices connected to ``start``."""
    graph, members = safe_graph(safe)
    local = int(np.searchsorted(members, start))
    if local >= members.shape[0] or members[local] != start:
        return np.zeros(0, dtype=np.int64)
    order = csgraph.breadth_first_order(graph, local, directed=False, return_predecessors=False)
    return np.sort(members[order])


def plan_segment(
    field: RiskField,
    z_j: Sequence[float],
    z_next: Sequence[float],
    gamma: float,
    margin: float,
    delta: float,
    max_expansions: int = DEFAULT_PROXY_EXPANSIONS,
) -> PathSegment:
    """Partition, filter, pick the nominal goal or a proxy, then A*.

    Raises PlanBlockedError when z_j does not snap to a safe vertex. If neither
    the goal nor any proxy is reachable, the reachable safe vertex closest to
    z_next is returned with ``fallback`` set.
    """
    lattice = field.lattice
    start = lattice.snap(z_j)
    if start is None:
        raise PlanBlockedError(f"start {tuple(z_j)} is outside the lattice")
    goal = lattice.snap(z_next)
    partition = local_partition(lattice, z_j, z_next, margin)
    extra = [start] + ([goal] if goal is not None else [])
    safe = filter_safe(field, np.union1d(partition, extra), gamma)
    if start not in safe:
        raise PlanBlockedError(
            f"start vertex {start} has alpha {field.values[start]:.4f} below gamma {gamma:.4f}"
        )

    if goal is not None and goal in safe:
        seg = astar(safe, start, goal)
        if seg is not None:
            return seg
        logger.info(f"Subgoal vertex {goal} is safe but unreachable; looking for a proxy")
    else:
        logger.info(f"Subgoal {tuple(np.round(np.asarray(z_next), 3))} is unsafe; looking for a proxy")

    component = reachable(safe, start)
    candidates = safe.restricted_to(component)
    for attempt in range(max_expansions + 1):
        radius = delta + attempt * lattice.spacing
        proxy = proxy_subgoal(candidates, field, z_next, radius)
        if proxy is None:
            continue
        seg = astar(safe, start, proxy)
        if seg is not None:
            logger.debug(f"Proxy subgoal {proxy} (alpha={field.values[proxy]:.3f}) within {radius:.3f} m")
            return _segment_from_vertices(lattice, seg.vertices, reached_proxy=True, safe=safe)

    pos = lattice.positions()[component]
    dist = np.linalg.norm(pos - np.asarray(z_next, dtype=np.float64), axis=1)
    target = int(component[np.lexsort((component, dist))[0]])
    seg = astar(safe, start, target)
    assert seg is not None
    logger.warning(f"No proxy subgoal near {tuple(np.round(np.asarray(z_next), 3))}; exploring toward vertex {target}")
    return _segment_from_vertices(lattice, seg.vertices, reached_proxy=True, fallback=True, safe=safe)


def risk_ignoring_path(lattice: Lattice, points: Sequence[Sequence[float]]) -> PathSegment:
    """Straight-shot A* through consecutive reference points over the whole lattice."""
    safe = full_safe_set(lattice)
    segments: List[PathSegment] = []
    for a, b in zip(points[:-1], points[1:]):
        va, vb = lattice.snap(a), lattice.snap(b)
        if va is None or vb is None:
            raise ValueError(f"reference points {tuple(a)} / {tuple(b)} lie outside the lattice")
        seg = astar(safe, va, vb)
        assert seg is not None
        segments.append(seg)
    return concat_segments(lattice, segments)


def write_path_csv(segment: PathSegment, field: RiskField, path: Union[str, Path]) -> None:
    """Waypoints of ``segment`` with the alpha the field assigns to each."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["k", "x", "y", "z", "alpha_at_waypoint"])
        for k, (v, pt) in enumerate(zip(segment.vertices, segment.waypoints)):
            writer.writerow([k, *(repr(float(c)) for c in pt), repr(float(field.values[v]))])
