"""Weighted graph environments and shortest-path primitives.

Environments are connected undirected graphs with positive edge weights.
They come from occupancy-grid text (free cells become vertices, 4-adjacent
free cells become edges weighted by the grid resolution) or from explicit
edge lists. Vertex ids are dense integers 0..n-1; for grids they follow
row-major scan order over free cells.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

UNREACHABLE = math.inf


class GraphFormatError(ValueError):
    """Malformed environment input (ragged rows, bad chars, bad edge lines)."""


class EmptyEnvironmentError(ValueError):
    """Environment has no free cells / no vertices."""


class DisconnectedEnvironmentError(ValueError):
    """Environment splits into more than one connected component."""

    def __init__(self, message: str, components: int):
        super().__init__(message)
        self.components = components


class WeightedGraph:
    """Immutable connected undirected graph with positive edge weights."""

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int, float]],
        coords: Optional[Sequence[tuple[float, float]]] = None,
        _validate: bool = True,
    ):
        if n <= 0:
            raise EmptyEnvironmentError("graph needs at least one vertex")
        self.n = n
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        edge_list: list[tuple[int, int, float]] = []
        seen: set[tuple[int, int]] = set()
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u},{v}) out of range for {n} vertices")
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}")
            if w <= 0 or not math.isfinite(w):
                raise GraphFormatError(f"edge ({u},{v}) has non-positive weight {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(f"duplicate edge ({u},{v})")
            seen.add(key)
            w = float(w)
            adj[u].append((v, w))
            adj[v].append((u, w))
            edge_list.append((key[0], key[1], w))
        self._adj = adj
        self._edges = edge_list
        if coords is not None and len(coords) != n:
            raise GraphFormatError("coords length does not match vertex count")
        self.coords = list(coords) if coords is not None else None

        weights = [w for _, _, w in edge_list]
        self.max_edge_weight = max(weights) if weights else 0.0
        self.uniform_weights = bool(weights) and all(w == weights[0] for w in weights)
        self.unit_weight = weights[0] if self.uniform_weights else None

        self._csr: Optional[csr_matrix] = None
        self._ball_cache: dict[tuple[int, float], frozenset[int]] = {}

        if _validate and n > 1:
            comps = _component_count(self)
            if comps != 1:
                raise DisconnectedEnvironmentError(
                    f"environment graph has {comps} connected components", comps
                )

    # ---- basic queries ----

    def neighbors(self, v: int) -> list[tuple[int, float]]:
        return self._adj[v]

    def edge_weight(self, u: int, v: int) -> float:
        for nbr, w in self._adj[u]:
            if nbr == v:
                return w
        raise KeyError(f"no edge between {u} and {v}")

    def edges(self) -> Iterator[tuple[int, int, float]]:
        return iter(self._edges)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def vertices(self) -> range:
        return range(self.n)

    def csr(self) -> csr_matrix:
        """Sparse adjacency matrix, built lazily and cached."""
        if self._csr is None:
            rows = []
            cols = []
            data = []
            for u, v, w in self._edges:
                rows.append(u)
                cols.append(v)
                data.append(w)
            self._csr = csr_matrix(
                (np.asarray(data), (np.asarray(rows), np.asarray(cols))),
                shape=(self.n, self.n),
            )
        return self._csr

    def neighborhood(self, v: int, radius: float) -> frozenset[int]:
        """Vertices at graph distance strictly less than radius from v.

        Cached per (vertex, radius); used for communication-range tests.
        """
        key = (v, radius)
        ball = self._ball_cache.get(key)
        if ball is None:
            dist = {v: 0.0}
            queue = [(0.0, v)]
            members = []
            while queue:
                d, u = heapq.heappop(queue)
                if d > dist.get(u, UNREACHABLE):
                    continue
                members.append(u)
                for nbr, w in self._adj[u]:
                    nd = d + w
                    if nd < radius and nd < dist.get(nbr, UNREACHABLE):
                        dist[nbr] = nd
                        heapq.heappush(queue, (nd, nbr))
            ball = frozenset(members)
            self._ball_cache[key] = ball
        return ball


@dataclass(frozen=True)
class DistanceMap:
    """Distances from one source; UNREACHABLE marks vertices outside reach."""

    source: int
    dist: np.ndarray

    def __getitem__(self, v: int) -> float:
        return float(self.dist[v])


def _component_count(graph: WeightedGraph) -> int:
    seen = bytearray(graph.n)
    comps = 0
    for start in range(graph.n):
        if seen[start]:
            continue
        comps += 1
        seen[start] = 1
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v, _ in graph.neighbors(u):
                if not seen[v]:
                    seen[v] = 1
                    queue.append(v)
    return comps


def _region_mask(graph: WeightedGraph, region: Optional[Iterable[int]]) -> Optional[bytearray]:
    if region is None:
        return None
    mask = bytearray(graph.n)
    count = 0
    for v in region:
        if not 0 <= v < graph.n:
            raise ValueError(f"region vertex {v} out of range")
        if not mask[v]:
            mask[v] = 1
            count += 1
    if count == 0:
        raise ValueError("region is empty")
    return mask


def one_to_all(
    graph: WeightedGraph, region: Optional[Iterable[int]], source: int
) -> DistanceMap:
    """Distances from source to every vertex of the induced subgraph.

    region=None means the whole graph. Uniform-weight graphs take the
    breadth-first route, general weights take Dijkstra; both accumulate
    edge weights hop by hop so their outputs match bit for bit on
    uniform inputs. Vertices outside the region or unreached stay at
    UNREACHABLE.
    """
    mask = _region_mask(graph, region)
    if not 0 <= source < graph.n:
        raise ValueError(f"source {source} out of range")
    if mask is not None and not mask[source]:
        raise ValueError(f"source {source} not in region")
    dist = np.full(graph.n, UNREACHABLE)
    if graph.uniform_weights:
        _bfs_into(graph, mask, source, dist)
    else:
        _dijkstra_into(graph, mask, source, dist)
    return DistanceMap(source=source, dist=dist)


def _bfs_into(
    graph: WeightedGraph, mask: Optional[bytearray], source: int, dist: np.ndarray
) -> None:
    adj = graph._adj
    dist[source] = 0.0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        for v, w in adj[u]:
            if (mask is None or mask[v]) and dist[v] == UNREACHABLE:
                dist[v] = du + w
                queue.append(v)


def _dijkstra_into(
    graph: WeightedGraph, mask: Optional[bytearray], source: int, dist: np.ndarray
) -> None:
    adj = graph._adj
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for v, w in adj[u]:
            if mask is None or mask[v]:
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))


def shortest_path(
    graph: WeightedGraph, region: Optional[Iterable[int]], frm: int, to: int
) -> list[int]:
    """One shortest path from frm to to inside the induced subgraph.

    Deterministic: walking back from the target, ties between equal-cost
    predecessors go to the lowest vertex id. Raises ValueError when the
    endpoints are outside the region or no path exists.
    """
    mask = _region_mask(graph, region)
    if mask is not None and not (0 <= to < graph.n and mask[to]):
        raise ValueError(f"target {to} not in region")
    dmap = one_to_all(graph, region, frm)
    dist = dmap.dist
    if dist[to] == UNREACHABLE:
        raise ValueError(f"no path from {frm} to {to} within region")
    path = [to]
    v = to
    while v != frm:
        best = -1
        for u, w in graph.neighbors(v):
            if (mask is None or mask[u]) and dist[u] + w == dist[v]:
                if best < 0 or u < best:
                    best = u
        if best < 0:
            raise AssertionError("path reconstruction lost the predecessor chain")
        path.append(best)
        v = best
    path.reverse()
    return path


def is_connected(graph: WeightedGraph, region: Iterable[int]) -> bool:
    """True when the induced subgraph is connected and nonempty."""
    verts = sorted(set(region))
    if not verts:
        return False
    for v in verts:
        if not 0 <= v < graph.n:
            raise ValueError(f"region vertex {v} out of range")
    mask = bytearray(graph.n)
    for v in verts:
        mask[v] = 1
    seen = bytearray(graph.n)
    start = verts[0]
    seen[start] = 1
    queue = deque([start])
    count = 1
    while queue:
        u = queue.popleft()
        for v, _ in graph.neighbors(u):
            if mask[v] and not seen[v]:
                seen[v] = 1
                count += 1
                queue.append(v)
    return count == len(verts)


def hops_from(
    graph: WeightedGraph, region_ids: Optional[np.ndarray], source: int
) -> np.ndarray:
    """Hop counts from source inside the induced subgraph (-1 = unreached).

    Length-n integer array; on uniform-weight graphs distance in meters
    is hops * unit_weight. region_ids=None means the whole graph.
    """
    if region_ids is None:
        mask = None
    else:
        mask = np.zeros(graph.n, dtype=bool)
        mask[region_ids] = True
    hops = np.full(graph.n, -1, dtype=np.int64)
    hops[source] = 0
    queue = deque([source])
    adj = graph._adj
    while queue:
        u = queue.popleft()
        hu = hops[u]
        for v, _ in adj[u]:
            if (mask is None or mask[v]) and hops[v] < 0:
                hops[v] = hu + 1
                queue.append(v)
    return hops


def region_distance_matrix(
    graph: WeightedGraph, region_ids: np.ndarray
) -> tuple[np.ndarray, Optional[float]]:
    """All-pairs distances of the induced subgraph, ordered like region_ids.

    Uniform-weight graphs return integer hop counts plus the unit weight
    (distance in meters = hops * unit); exact integer arithmetic keeps
    cost comparisons free of rounding. General weights return accumulated
    distances and None.
    """
    sub = graph.csr()[region_ids][:, region_ids]
    if graph.uniform_weights:
        hops = _csgraph_dijkstra(sub, directed=False, unweighted=True)
        return hops, graph.unit_weight
    dist = _csgraph_dijkstra(sub, directed=False)
    return dist, None


def parse_grid(text: str) -> WeightedGraph:
    """Build a graph from occupancy-grid text.

    Rows use '#' for obstacles and '.' for free cells. An optional
    header line `resolution=<meters>` fixes the cell size (default 1.0).
    Free cells become vertices in row-major order; 4-adjacent free cells
    are joined by edges weighted by the resolution. coords hold cell
    centers in meters.
    """
    resolution = 1.0
    rows: list[str] = []
    for raw in text.splitlines():
        line = raw.rstrip()
        if not rows and line.startswith("resolution"):
            _, _, value = line.partition("=")
            try:
                resolution = float(value.strip())
            except ValueError:
                raise GraphFormatError(f"bad resolution header: {line!r}")
            if resolution <= 0 or not math.isfinite(resolution):
                raise GraphFormatError(f"resolution must be positive, got {resolution}")
            continue
        if not line:
            if rows:
                break
            continue
        rows.append(line)
    if not rows:
        raise EmptyEnvironmentError("grid has no rows")
    width = len(rows[0])
    ids: dict[tuple[int, int], int] = {}
    for r, row in enumerate(rows):
        if len(row) != width:
            raise GraphFormatError(f"row {r} has length {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            if ch == ".":
                ids[(r, c)] = len(ids)
            elif ch != "#":
                raise GraphFormatError(f"bad grid char {ch!r} at row {r} col {c}")
    if not ids:
        raise EmptyEnvironmentError("grid has no free cells")
    edges = []
    for (r, c), u in ids.items():
        for rr, cc in ((r + 1, c), (r, c + 1)):
            v = ids.get((rr, cc))
            if v is not None:
                edges.append((u, v, resolution))
    coords = [None] * len(ids)
    for (r, c), u in ids.items():
        coords[u] = ((c + 0.5) * resolution, (r + 0.5) * resolution)
    return WeightedGraph(len(ids), edges, coords=coords)


def load_grid(path: str) -> WeightedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_grid(fh.read())


def parse_edge_list(text: str) -> WeightedGraph:
    """Build a graph from edge-list text.

    First significant line is the vertex count; the rest are `u v w`
    lines. Lines starting with '#' are comments.
    """
    n = None
    edges = []
    for idx, raw in enumerate(text.splitlines()):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            try:
                n = int(line)
            except ValueError:
                raise GraphFormatError(f"line {idx + 1}: expected vertex count, got {line!r}")
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphFormatError(f"line {idx + 1}: expected 'u v w', got {line!r}")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphFormatError(f"line {idx + 1}: bad edge values {line!r}")
        edges.append((u, v, w))
    if n is None:
        raise EmptyEnvironmentError("edge list has no vertex count")
    return WeightedGraph(n, edges)


def load_edge_list(path: str) -> WeightedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def format_edge_list(graph: WeightedGraph) -> str:
    lines = [str(graph.n)]
    for u, v, w in graph.edges():
        lines.append(f"{u} {v} {float(w)!r}")
    return "\n".join(lines) + "\n"


def load_environment(path: str) -> WeightedGraph:
    """Load a grid or edge-list environment, picking the format by content.

    A file whose first significant line is made of '.'/'#' cells (or a
    resolution header) parses as a grid; anything else parses as an
    edge list.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("resolution") or set(line) <= {".", "#"}:
            return parse_grid(text)
        break
    return parse_edge_list(text)
