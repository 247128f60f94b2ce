"""Connectivity graphs and spanning-tree extraction.

The disk model induces an undirected graph; the BFS and minimum spanning
trees restrict message passing for the NBP-BFS and NBP-MIN baselines.
Neighbor iteration is always in ascending node id so tree construction and
tie-breaking are reproducible across platforms.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import ConfigurationError, IntegrityError
from .scenario import MeasurementSet, Scenario


def _edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected disk-model graph: edge set E and neighbor sets S_i."""

    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int]]
    neighbors: dict[int, tuple[int, ...]]

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])


@dataclass(frozen=True)
class TreeGraph:
    """Spanning forest: retained edges plus the roots it grew from."""

    retained_edges: frozenset[tuple[int, int]]
    root_set: frozenset[int]
    unreachable: tuple[int, ...] = ()

    def neighbors_map(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {}
        for a, b in self.retained_edges:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        return {n: tuple(sorted(v)) for n, v in adj.items()}


def build_connectivity(scenario: Scenario) -> ConnectivityGraph:
    """Edge (v,i) present iff pair distance <= R (boundary inclusive)."""
    ids = list(scenario.node_ids)
    edges = set()
    neigh: dict[int, list[int]] = {n: [] for n in ids}
    for idx, v in enumerate(ids):
        for i in ids[idx + 1 :]:
            if scenario.pair_distance(v, i) <= scenario.radio_range:
                edges.add((v, i))
                neigh[v].append(i)
                neigh[i].append(v)
    return ConnectivityGraph(
        nodes=tuple(ids),
        edges=frozenset(edges),
        neighbors={n: tuple(sorted(v)) for n, v in neigh.items()},
    )


def bfs_spanning_tree(graph: ConnectivityGraph, roots: Iterable[int]) -> TreeGraph:
    """Breadth-first forest grown from the root set.

    Roots enter the queue in ascending id and neighbors are expanded in
    ascending id, so the retained edge set is deterministic.  Nodes not
    reachable from any root are reported, not spanned.
    """
    root_set = frozenset(roots)
    if not root_set:
        raise ConfigurationError("BFS spanning tree needs a nonempty root set")
    if not root_set <= set(graph.nodes):
        raise IntegrityError("roots must be graph nodes")
    visited = set(root_set)
    retained = set()
    queue = deque(sorted(root_set))
    while queue:
        u = queue.popleft()
        for v in graph.neighbors[u]:
            if v not in visited:
                visited.add(v)
                retained.add(_edge_key(u, v))
                queue.append(v)
    unreachable = tuple(sorted(set(graph.nodes) - visited))
    return TreeGraph(frozenset(retained), root_set, unreachable)


def min_spanning_tree(
    graph: ConnectivityGraph, weights: Mapping[tuple[int, int], float]
) -> TreeGraph:
    """Kruskal forest with ties broken by ascending (weight, low id, high id)."""
    for edge in graph.edges:
        if _edge_key(*edge) not in weights and edge not in weights:
            raise IntegrityError(f"missing weight for edge {edge}")
    parent = {n: n for n in graph.nodes}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    retained = set()
    ranked = sorted(graph.edges, key=lambda e: (weights[_edge_key(*e)], e[0], e[1]))
    for a, b in ranked:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            retained.add(_edge_key(a, b))
    return TreeGraph(frozenset(retained), frozenset(), ())


def count_links(edge_subset: Iterable[tuple[int, int]], mode: str = "undirected") -> int:
    """Link accounting: |E| for undirected, 2 message slots per edge otherwise."""
    n = len(set(_edge_key(*e) for e in edge_subset))
    if mode == "undirected":
        return n
    if mode == "directed-messages":
        return 2 * n
    raise ConfigurationError(f"unknown link-count mode: {mode!r}")


def export_edges_csv(
    path, graph: ConnectivityGraph, scenario: Scenario, measurements: MeasurementSet | None = None
) -> None:
    """Edge list dump: node_a, node_b, true_distance, measured_distance."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_a", "node_b", "true_distance", "measured_distance"])
        for a, b in sorted(graph.edges):
            d = scenario.pair_distance(a, b)
            meas = measurements.get(a, b) if measurements is not None else ""
            writer.writerow([a, b, f"{d:.9g}", f"{meas:.9g}" if meas != "" else ""])
