"""Time-stamped directed communication events between vehicles.

A temporal graph is a list of events ``src -> dst`` ordered by start time.
Events that share a vehicle and happen close together in time chain into
larger "macroscopic" communication graphs; :func:`decompose` extracts those.

Timestamps are stored as integral milliseconds so ordering and simultaneity
checks are exact; the public API accepts seconds.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

MS_PER_S = 1000

EDGE_LIST_HEADER = ("src", "dst", "t_ms")

__all__ = [
    "MS_PER_S",
    "EDGE_LIST_HEADER",
    "TemporalEdge",
    "TemporalGraph",
    "MacroscopicGraph",
    "build_graph",
    "build_graph_ms",
    "decompose",
    "load_edge_list",
    "save_edge_list",
]


@dataclass(frozen=True)
class TemporalEdge:
    """One directed communication event ``src -> dst`` starting at ``t_ms``.

    ``label`` is the position of the event in the time-sorted edge list of
    the graph it belongs to (ties in time are broken by ``(src, dst)``).
    """

    label: int
    src: int
    dst: int
    t_ms: int

    @property
    def t(self) -> float:
        """Start time in seconds."""
        return self.t_ms / MS_PER_S

    @property
    def vehicles(self) -> frozenset[int]:
        return frozenset((self.src, self.dst))

    def shares_vehicle(self, other: "TemporalEdge") -> bool:
        return (
            self.src == other.src
            or self.src == other.dst
            or self.dst == other.src
            or self.dst == other.dst
        )


@dataclass(frozen=True)
class TemporalGraph:
    """Vehicles plus their time-ordered communication events."""

    nodes: frozenset[int]
    edges: tuple[TemporalEdge, ...]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def span(self) -> tuple[float, float]:
        """(earliest, latest) event time in seconds.  Requires a non-empty graph."""
        if not self.edges:
            raise ValueError("empty graph has no time span")
        return self.edges[0].t, self.edges[-1].t


@dataclass(frozen=True)
class MacroscopicGraph:
    """A maximal group of events chained by shared vehicles within ``T`` seconds.

    Edges keep the labels they were assigned in the original temporal graph.
    """

    edges: tuple[TemporalEdge, ...]
    T: float

    @property
    def nodes(self) -> frozenset[int]:
        out: set[int] = set()
        for e in self.edges:
            out.add(e.src)
            out.add(e.dst)
        return frozenset(out)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def build_graph(triples: Iterable[tuple[int, int, float]]) -> TemporalGraph:
    """Build a temporal graph from raw ``(src, dst, t_seconds)`` triples.

    Events are sorted by ``(t, src, dst)`` and labelled 0..n-1 in that order.
    Raises ``ValueError`` for self-loops, negative vehicle ids, or two events
    that share a vehicle at the same (millisecond) timestamp.
    """
    return build_graph_ms(
        (src, dst, round(t * MS_PER_S)) for src, dst, t in triples
    )


def build_graph_ms(triples_ms: Iterable[tuple[int, int, int]]) -> TemporalGraph:
    """Like :func:`build_graph` but with timestamps already in milliseconds."""
    rows = []
    for src, dst, t_ms in triples_ms:
        src, dst, t_ms = int(src), int(dst), int(t_ms)
        if src < 0 or dst < 0:
            raise ValueError(f"vehicle ids must be non-negative, got ({src}, {dst})")
        if src == dst:
            raise ValueError(f"self-loop event on vehicle {src} at t_ms={t_ms}")
        rows.append((t_ms, src, dst))
    rows.sort()
    edges = tuple(
        TemporalEdge(label=i, src=src, dst=dst, t_ms=t_ms)
        for i, (t_ms, src, dst) in enumerate(rows)
    )
    busy: set[tuple[int, int]] = set()
    for e in edges:
        for v in (e.src, e.dst):
            key = (v, e.t_ms)
            if key in busy:
                raise ValueError(
                    f"vehicle {v} appears in two events at t={e.t_ms} ms"
                )
            busy.add(key)
    nodes = frozenset(v for e in edges for v in (e.src, e.dst))
    return TemporalGraph(nodes=nodes, edges=edges)


def decompose(g: TemporalGraph, T: float) -> list[MacroscopicGraph]:
    """Split ``g`` into macroscopic communication graphs.

    Two events chain when they share a vehicle and their start times differ
    by at most ``T`` seconds.  Returned graphs are the connected components
    of this chaining relation that contain at least two events; events with
    no chain partner are dropped.  Components are ordered by their smallest
    edge label, edges within a component by label.
    """
    if T <= 0:
        raise ValueError(f"time constraint T must be positive, got {T}")
    t_max_ms = round(T * MS_PER_S)
    edges = g.edges
    parent = list(range(len(edges)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    incident: defaultdict[int, list[int]] = defaultdict(list)
    for i, e in enumerate(edges):
        incident[e.src].append(i)
        incident[e.dst].append(i)
    # Within one vehicle's (time-sorted) event list, linking consecutive
    # events that fall within T yields the same components as linking every
    # qualifying pair: if the outer pair of a triple is within T, both inner
    # pairs are too.
    for idxs in incident.values():
        for a, b in zip(idxs, idxs[1:]):
            if edges[b].t_ms - edges[a].t_ms <= t_max_ms:
                union(a, b)

    groups: defaultdict[int, list[int]] = defaultdict(list)
    for i in range(len(edges)):
        groups[find(i)].append(i)
    comps = sorted(
        (idxs for idxs in groups.values() if len(idxs) >= 2),
        key=lambda idxs: idxs[0],
    )
    return [
        MacroscopicGraph(edges=tuple(edges[i] for i in idxs), T=T)
        for idxs in comps
    ]


def load_edge_list(path: str | Path) -> TemporalGraph:
    """Read an edge-list CSV with header ``src,dst,t_ms``."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected header {EDGE_LIST_HEADER}")
        if tuple(header) != EDGE_LIST_HEADER:
            raise ValueError(
                f"{path}: bad header {header!r}, expected {list(EDGE_LIST_HEADER)}"
            )
        triples = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
            try:
                triples.append((int(row[0]), int(row[1]), int(row[2])))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-integer field in {row!r}")
    return build_graph_ms(triples)


def save_edge_list(g: TemporalGraph, path: str | Path) -> Path:
    """Write ``g`` as an edge-list CSV (events in label order)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EDGE_LIST_HEADER)
        for e in g.edges:
            writer.writerow((e.src, e.dst, e.t_ms))
    return path
