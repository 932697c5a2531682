"""Pairwise territory exchange between two robots.

Given two disjoint connected regions, the exchange searches every
ordered pair of vertices (a, b) of their union U for the cheapest
two-center split: a's side collects the vertices at least as close to
a as to b (ties to a), b's side takes the rest, and the candidate cost
is the phi-weighted sum of each vertex's distance to its side's
center. Candidates are visited in lexicographic (a, b) order and
replace the incumbent only on strictly lower cost, so truncating the
scan at any point still leaves a valid (anytime) answer, and resuming
from the recorded cursor reproduces the untruncated result bit for
bit.

The incumbent starts as the two input regions priced at their own
centroids with region-induced distances. Because every vertex's
shortest path to its winning center stays inside the winning side,
both sides of any candidate split are connected and the candidate
price equals sum_k min(d_U(a,k), d_U(b,k)) * phi(k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import WeightedGraph, hops_from, is_connected, one_to_all, region_distance_matrix
from .partition import Partition, PartitionError, PhiWeights


@dataclass(frozen=True)
class ExchangeBudget:
    """Cap on candidate pairs per invocation plus resume bookkeeping.

    max_pairs=None scans to the end. resume_cursor picks up a truncated
    scan at that position of the ordered pair list. resume_centers must
    carry the incumbent centers whenever a previous chunk already
    improved on the original regions; leave it None when the regions
    passed in are still the originals.
    """

    max_pairs: Optional[int] = None
    resume_cursor: int = 0
    resume_centers: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        if self.max_pairs is not None and self.max_pairs < 1:
            raise ValueError("max_pairs must be positive or None")
        if self.resume_cursor < 0:
            raise ValueError("resume_cursor must be nonnegative")


@dataclass
class ExchangeResult:
    """Outcome of one (possibly truncated) exchange scan.

    side_a/side_b are sorted vertex ids; center_a/center_b their
    centers. improved reports whether the incumbent differs from the
    regions the scan originally started from. cursor is the next
    position in the ordered pair list; completed marks a fully scanned
    list. cost is the incumbent's two-center cost (same scale as
    h_one sums).
    """

    side_a: np.ndarray
    side_b: np.ndarray
    center_a: int
    center_b: int
    improved: bool
    pairs_evaluated: int
    completed: bool
    cursor: int
    cost: float

    def next_budget(self, max_pairs: Optional[int] = None) -> ExchangeBudget:
        """Budget that resumes this scan; pass side_a/side_b back in."""
        return ExchangeBudget(
            max_pairs=max_pairs,
            resume_cursor=self.cursor,
            resume_centers=(self.center_a, self.center_b) if self.improved else None,
        )


def _clean_region(graph: WeightedGraph, region, label: str) -> np.ndarray:
    arr = region if isinstance(region, np.ndarray) else np.asarray(list(region))
    ids = np.unique(arr.astype(np.int64)) if arr.size else np.empty(0, dtype=np.int64)
    if ids.size == 0:
        raise PartitionError(f"{label} region is empty")
    if ids[0] < 0 or ids[-1] >= graph.n:
        raise PartitionError(f"{label} region has out-of-range vertices")
    if not is_connected(graph, ids.tolist()):
        raise PartitionError(f"{label} region is disconnected")
    return ids


def _centroid_cost_units(
    graph: WeightedGraph, ids: np.ndarray, phi: PhiWeights
) -> tuple[int, float]:
    """Centroid and its cost in the scan's internal units (hops when uniform)."""
    dmat, _ = region_distance_matrix(graph, ids)
    costs = dmat @ phi.values[ids]
    best = int(np.argmin(costs))
    return int(ids[best]), float(costs[best])


def optimal_two_partition(
    graph: WeightedGraph,
    region_a,
    region_b,
    phi: PhiWeights,
    budget: Optional[ExchangeBudget] = None,
) -> ExchangeResult:
    """Anytime search for the cheapest two-center split of a region union."""
    if budget is None:
        budget = ExchangeBudget()
    a_ids = _clean_region(graph, region_a, "first")
    b_ids = _clean_region(graph, region_b, "second")
    if np.intersect1d(a_ids, b_ids).size:
        raise PartitionError("regions overlap")

    union = np.union1d(a_ids, b_ids)
    m = union.size
    scan_len = m * (m - 1)
    if budget.resume_cursor > scan_len:
        raise ValueError(f"resume_cursor {budget.resume_cursor} beyond scan length {scan_len}")

    dmat, unit = region_distance_matrix(graph, union)
    phi_u = phi.values[union]
    local = {int(v): k for k, v in enumerate(union)}

    if budget.resume_centers is None:
        ca, cost_a = _centroid_cost_units(graph, a_ids, phi)
        cb, cost_b = _centroid_cost_units(graph, b_ids, phi)
        incumbent_cost = cost_a + cost_b
        dirty = False
    else:
        ca, cb = int(budget.resume_centers[0]), int(budget.resume_centers[1])
        if ca not in local or cb not in local:
            raise ValueError("resume_centers outside the region union")
        ia, ib = local[ca], local[cb]
        incumbent_cost = float(np.minimum(dmat[ia], dmat[ib]) @ phi_u)
        dirty = True

    cursor = budget.resume_cursor
    end = scan_len if budget.max_pairs is None else min(scan_len, cursor + budget.max_pairs)
    accepted = False

    pos = cursor
    while pos < end:
        row = pos // (m - 1)
        row_end = min(end - row * (m - 1), m - 1)
        offs = np.arange(pos - row * (m - 1), row_end)
        cols = offs + (offs >= row)
        row_costs = np.minimum(dmat[row], dmat) @ phi_u
        seg = row_costs[cols]
        k = int(np.argmin(seg))
        if seg[k] < incumbent_cost:
            incumbent_cost = float(seg[k])
            ca, cb = int(union[row]), int(union[cols[k]])
            accepted = True
        pos = row * (m - 1) + row_end

    if accepted or dirty:
        ia, ib = local[ca], local[cb]
        mask = dmat[ia] <= dmat[ib]
        side_a = union[mask]
        side_b = union[~mask]
        improved = True
    else:
        side_a, side_b = a_ids, b_ids
        improved = False

    return ExchangeResult(
        side_a=side_a,
        side_b=side_b,
        center_a=ca,
        center_b=cb,
        improved=improved,
        pairs_evaluated=end - cursor,
        completed=end == scan_len,
        cursor=end,
        cost=incumbent_cost * (unit if unit is not None else 1.0),
    )


def assign_sides(
    graph: WeightedGraph,
    center_a: int,
    center_b: int,
    pos_i: int,
    pos_j: int,
) -> bool:
    """True when robot i should take the a-side.

    The matching minimizes the robots' combined travel distance to the
    side centers; on a tie robot i keeps the a-side.
    """
    if graph.uniform_weights:
        from_i = hops_from(graph, None, pos_i).astype(np.float64)
        from_j = hops_from(graph, None, pos_j).astype(np.float64)
    else:
        from_i = one_to_all(graph, None, pos_i).dist
        from_j = one_to_all(graph, None, pos_j).dist
    keep = from_i[center_a] + from_j[center_b]
    swap = from_i[center_b] + from_j[center_a]
    return bool(keep <= swap)


def pairwise_exchange(
    graph: WeightedGraph,
    partition: Partition,
    i: int,
    j: int,
    phi: PhiWeights,
    budget: Optional[ExchangeBudget] = None,
    positions: Optional[tuple[int, int]] = None,
) -> tuple[Partition, ExchangeResult]:
    """Run the exchange between robots i and j on their current regions.

    The lower-indexed robot's region seeds the a-side. When the scan
    improves on the current regions, the new sides are matched to the
    robots (by travel distance when positions=(pos_i, pos_j) is given,
    identity otherwise) and a new partition is returned; otherwise the
    partition comes back unchanged.
    """
    if i == j:
        raise PartitionError("exchange needs two distinct robots")
    lo, hi = (i, j) if i < j else (j, i)
    result = optimal_two_partition(
        graph, partition.region(lo), partition.region(hi), phi, budget
    )
    if not result.improved:
        return partition, result

    if positions is not None:
        pos = dict(zip((i, j), positions))
        lo_takes_a = assign_sides(graph, result.center_a, result.center_b, pos[lo], pos[hi])
    else:
        lo_takes_a = True
    if lo_takes_a:
        new_partition = partition.replace({lo: result.side_a, hi: result.side_b})
    else:
        new_partition = partition.replace({lo: result.side_b, hi: result.side_a})
    for robot in (lo, hi):
        ids = new_partition.region(robot)
        if ids.size == 0 or not is_connected(graph, ids.tolist()):
            raise PartitionError(f"exchange produced an invalid region for robot {robot}")
    return new_partition, result
