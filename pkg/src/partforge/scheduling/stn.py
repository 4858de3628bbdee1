"""Simple temporal network: time points, distance-bound edges, propagation.

Edges encode constraints of the form t_j - t_i <= bound.  The network is
consistent iff its distance graph contains no negative cycle; propagation
computes the all-pairs shortest-path closure, which tightens every pairwise
bound to its implied minimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORIGIN = 0


@dataclass
class PropagationResult:
    consistent: bool
    distance: np.ndarray      # (n, n) tightened bounds; meaningless if inconsistent

    def earliest(self, point: int) -> float:
        """Earliest time of a point relative to the origin."""
        return -self.distance[point, ORIGIN]

    def latest(self, point: int) -> float:
        return self.distance[ORIGIN, point]


class STN:
    """Mutable temporal network anchored at an origin time point (id 0)."""

    def __init__(self):
        self.labels: list[str] = ["origin"]
        self.edges: dict[tuple[int, int], float] = {}

    def __len__(self) -> int:
        return len(self.labels)

    def add_point(self, label: str = "") -> int:
        self.labels.append(label or f"t{len(self.labels)}")
        return len(self.labels) - 1

    def add_edge(self, i: int, j: int, bound: float) -> None:
        """Constrain t_j - t_i <= bound, keeping the tightest bound seen."""
        n = len(self.labels)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"unknown time point in edge ({i}, {j})")
        key = (i, j)
        if key in self.edges:
            self.edges[key] = min(self.edges[key], bound)
        else:
            self.edges[key] = float(bound)

    def add_interval(self, i: int, j: int, lower: float, upper: float) -> None:
        """Constrain lower <= t_j - t_i <= upper."""
        self.add_edge(i, j, upper)
        self.add_edge(j, i, -lower)

    def propagate(self) -> PropagationResult:
        """Floyd-Warshall closure; a negative diagonal signals inconsistency."""
        n = len(self.labels)
        dist = np.full((n, n), np.inf)
        np.fill_diagonal(dist, 0.0)
        for (i, j), w in self.edges.items():
            dist[i, j] = min(dist[i, j], w)
        for k in range(n):
            np.minimum(dist, dist[:, k, None] + dist[None, k, :], out=dist)
        consistent = bool(np.all(np.diag(dist) >= -1e-9))
        return PropagationResult(consistent=consistent, distance=dist)
