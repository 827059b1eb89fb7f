"""Shared fixtures and brute-force reference helpers for the test suite."""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from motifcache.temporal_graph import TemporalEdge, TemporalGraph, build_graph_ms, decompose


def make_hand_graph() -> TemporalGraph:
    """Six events on four vehicles, all chaining into one macroscopic graph.

    Built so that event 0's partners are events {1, 2, 3, 5} while event 4
    shares no vehicle with it, and so that the first three events form the
    shape "1 -> 0, 1 -> 2, 0 -> 2" (vehicle 1 sends twice).
    """
    return build_graph_ms(
        [
            (1, 0, 10_000),
            (1, 2, 20_000),
            (0, 2, 30_000),
            (0, 3, 40_000),
            (2, 3, 50_000),
            (1, 3, 60_000),
        ]
    )


@pytest.fixture
def hand_graph() -> TemporalGraph:
    return make_hand_graph()


@pytest.fixture
def hand_macro(hand_graph):
    comps = decompose(hand_graph, 100.0)
    assert len(comps) == 1
    return comps[0]


def random_temporal_graph(
    rng: np.random.Generator,
    n_vehicles: int,
    n_edges: int,
    t_span_ms: int = 90_000,
) -> TemporalGraph:
    """A random temporal graph with distinct timestamps (no clashes possible)."""
    ts = rng.choice(t_span_ms, size=n_edges, replace=False)
    triples = []
    for t in ts:
        a, b = rng.choice(n_vehicles, size=2, replace=False)
        triples.append((int(a), int(b), int(t)))
    return build_graph_ms(triples)


def edges_share_vehicle(a: TemporalEdge, b: TemporalEdge) -> bool:
    return bool({a.src, a.dst} & {b.src, b.dst})


def brute_force_components(edges, T: float) -> list[tuple[int, ...]]:
    """All-pairs union-find over the chaining relation; label tuples, sorted.

    Quadratic on purpose: this is the reference the production decomposition
    is checked against.
    """
    t_max_ms = round(T * 1000)
    n = len(edges)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if (
                edges_share_vehicle(edges[i], edges[j])
                and abs(edges[i].t_ms - edges[j].t_ms) <= t_max_ms
            ):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    comps = [
        tuple(edges[i].label for i in idxs)
        for idxs in groups.values()
        if len(idxs) >= 2
    ]
    return sorted(comps)


def exhaustive_connected_subsets(edges, k: int) -> set[frozenset[int]]:
    """Every connected k-subset of edges, by direct filtering of all subsets."""
    out: set[frozenset[int]] = set()
    for combo in combinations(range(len(edges)), k):
        # connectivity of the chosen edges under shared-vehicle adjacency
        remaining = set(combo[1:])
        frontier = [combo[0]]
        while frontier:
            i = frontier.pop()
            linked = [
                j for j in remaining if edges_share_vehicle(edges[i], edges[j])
            ]
            for j in linked:
                remaining.discard(j)
            frontier.extend(linked)
        if not remaining:
            out.add(frozenset(edges[i].label for i in combo))
    return out
