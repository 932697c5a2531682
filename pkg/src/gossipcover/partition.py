"""Connected partitions of graph environments and their coverage costs.

A partition assigns every vertex to exactly one of N robots; each
region must be nonempty and connected in the induced subgraph. The
coverage cost of a region is the phi-weighted sum of distances from a
center, minimized at the generalized centroid; the expected cost of a
partition averages the centroid costs over total phi mass.

On uniform-weight graphs every cost is computed from integer hop
counts and scaled by the edge weight once, so equality and tie
comparisons are exact.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import (
    UNREACHABLE,
    WeightedGraph,
    hops_from,
    is_connected,
    one_to_all,
    region_distance_matrix,
)


class PartitionError(ValueError):
    """A partition invariant (coverage, ownership, connectivity) failed."""


class PhiWeights:
    """Strictly positive per-vertex weights with a cached total."""

    def __init__(self, values: Sequence[float]):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("phi needs a nonempty 1-d value array")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("phi values must be finite and strictly positive")
        self.values = arr
        self.total = float(arr.sum())

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def uniform(cls, n: int) -> "PhiWeights":
        return cls(np.ones(n))

    @classmethod
    def from_mapping(cls, n: int, mapping: dict[int, float]) -> "PhiWeights":
        values = np.ones(n)
        for v, phi in mapping.items():
            if not 0 <= v < n:
                raise ValueError(f"phi vertex {v} out of range")
            values[v] = phi
        return cls(values)


def parse_phi(text: str, n: int) -> PhiWeights:
    """Parse `vertex_id phi_value` lines; unlisted vertices default to 1."""
    mapping: dict[int, float] = {}
    for idx, raw in enumerate(text.splitlines()):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"phi line {idx + 1}: expected 'vertex value', got {line!r}")
        mapping[int(parts[0])] = float(parts[1])
    return PhiWeights.from_mapping(n, mapping)


def format_phi(phi: PhiWeights) -> str:
    lines = [f"{v} {float(phi.values[v])!r}" for v in range(len(phi))]
    return "\n".join(lines) + "\n"


class Partition:
    """Vertex-to-owner assignment for N robots."""

    __slots__ = ("owner", "n_robots")

    def __init__(self, owner: Sequence[int], n_robots: int):
        arr = np.asarray(owner, dtype=np.int32)
        if arr.ndim != 1 or arr.size == 0:
            raise PartitionError("owner array must be nonempty and 1-d")
        if n_robots <= 0:
            raise PartitionError("need at least one robot")
        self.owner = arr
        self.n_robots = int(n_robots)

    def region(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n_robots:
            raise PartitionError(f"robot index {i} out of range")
        return np.flatnonzero(self.owner == i)

    def regions(self) -> list[np.ndarray]:
        return [self.region(i) for i in range(self.n_robots)]

    def copy(self) -> "Partition":
        return Partition(self.owner.copy(), self.n_robots)

    def replace(self, assignments: dict[int, np.ndarray]) -> "Partition":
        """New partition with the given robots' regions reassigned."""
        owner = self.owner.copy()
        for robot, ids in assignments.items():
            owner[np.asarray(ids, dtype=np.int64)] = robot
        return Partition(owner, self.n_robots)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.n_robots == other.n_robots and np.array_equal(self.owner, other.owner)

    def __ne__(self, other: object) -> bool:
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    def validate(self, graph: WeightedGraph) -> None:
        """Raise PartitionError on any violated partition invariant."""
        if self.owner.size != graph.n:
            raise PartitionError(
                f"partition covers {self.owner.size} vertices, graph has {graph.n}"
            )
        if self.owner.min() < 0 or self.owner.max() >= self.n_robots:
            raise PartitionError("owner ids outside 0..N-1")
        for i in range(self.n_robots):
            ids = self.region(i)
            if ids.size == 0:
                raise PartitionError(f"robot {i} owns no vertices")
            if not is_connected(graph, ids.tolist()):
                raise PartitionError(f"region of robot {i} is disconnected")


def parse_partition(text: str, n_vertices: int) -> Partition:
    """Parse a partition file: header `N=<robots>`, lines `vertex owner`."""
    n_robots = None
    owner = np.full(n_vertices, -1, dtype=np.int32)
    for idx, raw in enumerate(text.splitlines()):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n_robots is None:
            if not line.startswith("N="):
                raise PartitionError(f"partition line {idx + 1}: expected 'N=<robots>' header")
            n_robots = int(line[2:])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PartitionError(
                f"partition line {idx + 1}: expected 'vertex owner', got {line!r}"
            )
        v, o = int(parts[0]), int(parts[1])
        if not 0 <= v < n_vertices:
            raise PartitionError(f"partition line {idx + 1}: vertex {v} out of range")
        if owner[v] != -1:
            raise PartitionError(f"partition line {idx + 1}: vertex {v} assigned twice")
        owner[v] = o
    if n_robots is None:
        raise PartitionError("partition file has no N= header")
    missing = np.flatnonzero(owner == -1)
    if missing.size:
        raise PartitionError(f"partition leaves vertex {int(missing[0])} unassigned")
    return Partition(owner, n_robots)


def format_partition(partition: Partition) -> str:
    lines = [f"N={partition.n_robots}"]
    for v, o in enumerate(partition.owner):
        lines.append(f"{v} {int(o)}")
    return "\n".join(lines) + "\n"


def h_one(graph: WeightedGraph, region: Iterable[int], h: int, phi: PhiWeights) -> float:
    """Phi-weighted sum of distances from center h over the induced region.

    Raises PartitionError when h lies outside the region or the region
    is disconnected.
    """
    ids = np.asarray(sorted(set(int(v) for v in region)), dtype=np.int64)
    if ids.size == 0:
        raise PartitionError("region is empty")
    if h not in set(ids.tolist()):
        raise PartitionError(f"center {h} not in region")
    if graph.uniform_weights:
        hops = hops_from(graph, ids, h)[ids]
        if np.any(hops < 0):
            raise PartitionError("region is disconnected")
        return float(hops.astype(np.float64) @ phi.values[ids]) * graph.unit_weight
    dist = one_to_all(graph, ids.tolist(), h).dist[ids]
    if np.any(dist == UNREACHABLE):
        raise PartitionError("region is disconnected")
    return float(dist @ phi.values[ids])


def centroid_and_cost(
    graph: WeightedGraph, region: Iterable[int], phi: PhiWeights
) -> tuple[int, float]:
    """Generalized centroid of a region and its h_one cost.

    The centroid is the region vertex minimizing h_one; ties go to the
    lowest vertex id.
    """
    ids = np.asarray(sorted(set(int(v) for v in region)), dtype=np.int64)
    if ids.size == 0:
        raise PartitionError("region is empty")
    dmat, unit = region_distance_matrix(graph, ids)
    if np.any(np.isinf(dmat)):
        raise PartitionError("region is disconnected")
    costs = dmat @ phi.values[ids]
    best = int(np.argmin(costs))
    cost = float(costs[best])
    if unit is not None:
        cost *= unit
    return int(ids[best]), cost


def centroid(graph: WeightedGraph, region: Iterable[int], phi: PhiWeights) -> int:
    return centroid_and_cost(graph, region, phi)[0]


def h_multicenter(
    graph: WeightedGraph,
    centers: Sequence[int],
    partition: Partition,
    phi: PhiWeights,
) -> float:
    """Average of per-region center costs over total phi mass."""
    if len(centers) != partition.n_robots:
        raise PartitionError("one center per robot required")
    total = 0.0
    for i, c in enumerate(centers):
        total += h_one(graph, partition.region(i).tolist(), int(c), phi)
    return total / phi.total

def h_exp(graph: WeightedGraph, partition: Partition, phi: PhiWeights) -> float:
    """Expected coverage cost: centroid costs averaged over phi mass."""
    total = 0.0
    for i in range(partition.n_robots):
        total += centroid_and_cost(graph, partition.region(i), phi)[1]
    return total / phi.total


def _generator_distance_rows(
    graph: WeightedGraph, generators: Sequence[int]
) -> np.ndarray:
    """Stacked full-graph distance rows, hop counts when weights are uniform."""
    rows = np.empty((len(generators), graph.n))
    for k, g in enumerate(generators):
        if graph.uniform_weights:
            hops = hops_from(graph, None, int(g))
            rows[k] = np.where(hops < 0, np.inf, hops.astype(np.float64))
        else:
            rows[k] = one_to_all(graph, None, int(g)).dist
    return rows


def voronoi_partition(
    graph: WeightedGraph, generators: Sequence[int]
) -> Partition:
    """Partition by graph distance to generators; ties to the lowest index."""
    gens = [int(g) for g in generators]
    if len(gens) == 0:
        raise PartitionError("need at least one generator")
    if len(set(gens)) != len(gens):
        raise PartitionError("generators must be distinct")
    for g in gens:
        if not 0 <= g < graph.n:
            raise PartitionError(f"generator {g} out of range")
    rows = _generator_distance_rows(graph, gens)
    owner = np.argmin(rows, axis=0).astype(np.int32)
    return Partition(owner, len(gens))


def adjacency_edges(graph: WeightedGraph, partition: Partition) -> frozenset[tuple[int, int]]:
    """Robot pairs whose regions touch along at least one graph edge."""
    pairs = set()
    owner = partition.owner
    for u, v, _ in graph.edges():
        a, b = int(owner[u]), int(owner[v])
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    return frozenset(pairs)


def is_centroidal_voronoi(
    graph: WeightedGraph, partition: Partition, phi: PhiWeights
) -> bool:
    """True when every vertex is at least as close to its own region's
    centroid as to any other region's centroid (ties allowed)."""
    centroids = [
        centroid_and_cost(graph, partition.region(i), phi)[0]
        for i in range(partition.n_robots)
    ]
    rows = _generator_distance_rows(graph, centroids)
    own = rows[partition.owner, np.arange(graph.n)]
    return bool(np.all(own <= rows.min(axis=0)))


def is_pairwise_optimal(
    graph: WeightedGraph, partition: Partition, phi: PhiWeights
) -> bool:
    """True when no adjacent pair of regions admits a cheaper two-center
    repartition of their union."""
    from .exchange import optimal_two_partition

    for i, j in sorted(adjacency_edges(graph, partition)):
        result = optimal_two_partition(
            graph, partition.region(i), partition.region(j), phi
        )
        if result.improved:
            return False
    return True
