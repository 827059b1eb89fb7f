"""Connected k-edge subgraph enumeration, canonical labels and motif detection.

The miner works on macroscopic communication graphs.  Inside one graph, two
events are neighbours when they share a vehicle; time no longer matters
because the time window was already enforced during decomposition.

A "structure class" collapses a subgraph's events to the distinct directed
vehicle pairs and identifies the result up to vehicle relabelling.  Classes
whose observed count sits far above the count expected under a randomized
reference ensemble are reported as motifs.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import permutations
from typing import Callable, Iterable, Sequence

import numpy as np

from .temporal_graph import (
    MS_PER_S,
    MacroscopicGraph,
    TemporalEdge,
    TemporalGraph,
    build_graph_ms,
    decompose,
)

__all__ = [
    "EdgeSubgraph",
    "StructureClass",
    "Motif",
    "NullModelParams",
    "enumerate_subgraphs",
    "canonical_label",
    "classify",
    "randomize_reference",
    "detect_motifs",
    "z_score",
]

SeedLike = int | Sequence[int]


@dataclass(frozen=True)
class EdgeSubgraph:
    """A connected set of events from one macroscopic graph, in label order."""

    edges: tuple[TemporalEdge, ...]

    @property
    def k(self) -> int:
        return len(self.edges)

    @property
    def edge_labels(self) -> tuple[int, ...]:
        return tuple(e.label for e in self.edges)

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(v for e in self.edges for v in (e.src, e.dst))


@dataclass(frozen=True)
class StructureClass:
    """All enumerated subgraphs that share one canonical label."""

    label: str
    instances: tuple[EdgeSubgraph, ...]

    @property
    def f(self) -> int:
        """Occurrence count of this structure."""
        return len(self.instances)


@dataclass(frozen=True)
class Motif:
    """A structure class whose count is significantly above the reference mean."""

    label: str
    k: int
    f: int
    f_ref: float
    sigma_ref: float
    z: float
    instances: tuple[EdgeSubgraph, ...]


@dataclass(frozen=True)
class NullModelParams:
    """Controls the randomized reference ensemble.

    ``window`` is the (start, end) time range in seconds that reference
    timestamps are drawn from; ``None`` means "use the span of the graph(s)
    at hand".  ``rng_seed`` may be an int or a tuple of ints.
    """

    samples: int = 100
    rng_seed: SeedLike = 0
    window: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.samples < 2:
            raise ValueError(f"need at least 2 reference samples, got {self.samples}")
        if self.window is not None and self.window[1] < self.window[0]:
            raise ValueError(f"bad reference window {self.window}")


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


def _edge_adjacency(edges: Sequence[TemporalEdge]) -> list[set[int]]:
    """adjacency[i] = indices of edges sharing a vehicle with edges[i]."""
    incident: defaultdict[int, list[int]] = defaultdict(list)
    for i, e in enumerate(edges):
        incident[e.src].append(i)
        incident[e.dst].append(i)
    adj: list[set[int]] = [set() for _ in edges]
    for idxs in incident.values():
        for pos, a in enumerate(idxs):
            for b in idxs[pos + 1:]:
                adj[a].add(b)
                adj[b].add(a)
    return adj


def _index_subgraphs(adj: list[set[int]], k: int, emit: Callable[[tuple[int, ...]], None]) -> None:
    """Emit every connected k-set of edge indices exactly once.

    Each set is grown from its minimum index ``root``; the extension frontier
    only ever receives indices greater than ``root`` that are not already
    reachable from the current set, which makes every set reachable by
    exactly one growth sequence.
    """
    m = len(adj)

    def extend(sub: tuple[int, ...], ext: list[int], reach: set[int], root: int) -> None:
        if len(sub) + 1 == k:
            for u in ext:
                emit(tuple(sorted(sub + (u,))))
            return
        while ext:
            u = ext.pop(0)
            new_reach = reach | adj[u]
            new_ext = ext + sorted(
                v for v in adj[u] if v > root and v not in reach
            )
            extend(sub + (u,), new_ext, new_reach, root)

    for root in range(m):
        ext = sorted(u for u in adj[root] if u > root)
        if ext:
            extend((root,), ext, {root} | adj[root], root)


def enumerate_subgraphs(g: MacroscopicGraph, k: int) -> list[EdgeSubgraph]:
    """Every connected k-edge subgraph of ``g``, each exactly once.

    Connectivity is via shared vehicles.  ``k`` must be at least 2; if ``g``
    has fewer than ``k`` edges the result is empty.
    """
    if k < 2:
        raise ValueError(f"subgraph size k must be >= 2, got {k}")
    edges = g.edges
    if k > len(edges):
        return []
    adj = _edge_adjacency(edges)
    out: list[EdgeSubgraph] = []
    _index_subgraphs(
        adj, k, lambda idxs: out.append(EdgeSubgraph(tuple(edges[i] for i in idxs)))
    )
    return out


# ---------------------------------------------------------------------------
# canonical labelling
# ---------------------------------------------------------------------------


def _collapsed_pattern(edges: Sequence[TemporalEdge]) -> tuple[int, frozenset[tuple[int, int]]]:
    """Collapse events to distinct directed pairs, relabelled by first appearance."""
    relabel: dict[int, int] = {}
    for e in edges:
        for v in (e.src, e.dst):
            if v not in relabel:
                relabel[v] = len(relabel)
    pairs = frozenset((relabel[e.src], relabel[e.dst]) for e in edges)
    return len(relabel), pairs


@lru_cache(maxsize=None)
def _min_bits(n: int, pairs: frozenset[tuple[int, int]]) -> str:
    best: str | None = None
    for perm in permutations(range(n)):
        bits = "".join(
            "1" if (perm[i], perm[j]) in pairs else "0"
            for i in range(n)
            for j in range(n)
        )
        if best is None or bits < best:
            best = bits
    return best or ""


def canonical_label(sub: EdgeSubgraph) -> str:
    """Row-major bit string of the lexicographically smallest adjacency matrix.

    The subgraph's events are collapsed to distinct directed vehicle pairs and
    all orderings of the vehicles are tried; two subgraphs get equal labels
    exactly when their collapsed structures are isomorphic.
    """
    if not sub.edges:
        raise ValueError("cannot label an empty subgraph")
    n, pairs = _collapsed_pattern(sub.edges)
    return _min_bits(n, pairs)


def classify(subgraphs: Iterable[EdgeSubgraph]) -> list[StructureClass]:
    """Group subgraphs by canonical label.

    All subgraphs must have the same number of edges.  Classes come back
    ordered by descending count, then label.
    """
    groups: defaultdict[str, list[EdgeSubgraph]] = defaultdict(list)
    k_seen: set[int] = set()
    for sub in subgraphs:
        k_seen.add(sub.k)
        groups[canonical_label(sub)].append(sub)
    if len(k_seen) > 1:
        raise ValueError(f"mixed subgraph sizes {sorted(k_seen)} cannot be classified together")
    classes = [
        StructureClass(label=label, instances=tuple(insts))
        for label, insts in groups.items()
    ]
    classes.sort(key=lambda c: (-c.f, c.label))
    return classes


def _count_classes(g: MacroscopicGraph, k: int) -> Counter:
    """Per-label subgraph counts of ``g`` without materializing instances."""
    edges = g.edges
    if k > len(edges):
        return Counter()
    adj = _edge_adjacency(edges)
    counts: Counter = Counter()

    def emit(idxs: tuple[int, ...]) -> None:
        n, pairs = _collapsed_pattern([edges[i] for i in idxs])
        counts[_min_bits(n, pairs)] += 1

    _index_subgraphs(adj, k, emit)
    return counts


# ---------------------------------------------------------------------------
# reference ensemble and detection
# ---------------------------------------------------------------------------


def redraw_simultaneous(
    triples_ms: list[tuple[int, int, int]],
    lo_ms: int,
    hi_ms: int,
    rng: np.random.Generator,
    max_rounds: int = 10_000,
) -> list[tuple[int, int, int]]:
    """Redraw timestamps until no vehicle has two events at the same millisecond."""
    triples = list(triples_ms)
    for _ in range(max_rounds):
        busy: Counter = Counter()
        for src, dst, t in triples:
            busy[(src, t)] += 1
            busy[(dst, t)] += 1
        bad = [
            i
            for i, (src, dst, t) in enumerate(triples)
            if busy[(src, t)] > 1 or busy[(dst, t)] > 1
        ]
        if not bad:
            return triples
        for i in bad:
            src, dst, _ = triples[i]
            triples[i] = (src, dst, int(rng.integers(lo_ms, hi_ms + 1)))
    raise RuntimeError("could not resolve simultaneous events; time window too small")


def randomize_reference(
    g: MacroscopicGraph,
    p: NullModelParams,
    rng: np.random.Generator | None = None,
) -> TemporalGraph:
    """One randomized reference draw for ``g``.

    Keeps the vehicle set and event count; endpoints are uniform ordered
    vehicle pairs and timestamps are uniform over ``p.window``.
    """
    vehicles = sorted(g.nodes)
    n = len(vehicles)
    if n < 2:
        raise ValueError("reference draw needs at least two vehicles")
    if rng is None:
        rng = np.random.default_rng(p.rng_seed)
    if p.window is not None:
        lo, hi = p.window
    else:
        lo = min(e.t for e in g.edges)
        hi = max(e.t for e in g.edges)
    lo_ms, hi_ms = round(lo * MS_PER_S), round(hi * MS_PER_S)
    m = len(g.edges)
    src_idx = rng.integers(0, n, size=m)
    dst_idx = rng.integers(0, n - 1, size=m)
    dst_idx = dst_idx + (dst_idx >= src_idx)
    ts = rng.integers(lo_ms, hi_ms + 1, size=m)
    triples = [
        (vehicles[s], vehicles[d], int(t))
        for s, d, t in zip(src_idx, dst_idx, ts)
    ]
    triples = redraw_simultaneous(triples, lo_ms, hi_ms, rng)
    return build_graph_ms(triples)


def z_score(f: float, f_ref: float, sigma_ref: float) -> float:
    """Significance of an observed count against the reference ensemble.

    With zero spread the score degenerates: ``+inf`` when the observed count
    exceeds the reference mean, ``-inf`` otherwise.
    """
    if sigma_ref < 0:
        raise ValueError(f"sigma_ref must be non-negative, got {sigma_ref}")
    if sigma_ref == 0:
        return math.inf if f > f_ref else -math.inf
    return (f - f_ref) / sigma_ref


def _seed_tuple(seed: SeedLike) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def detect_motifs(
    graphs: Sequence[MacroscopicGraph],
    k: int,
    z_threshold: float = 2.0,
    p: NullModelParams | None = None,
) -> list[Motif]:
    """Find structure classes that are significantly over-represented.

    Observed counts are aggregated over all ``graphs``.  Each of the
    ``p.samples`` reference draws randomizes every graph, re-decomposes it
    with the same time constraint, and counts classes the same way; classes
    that only ever show up in references are ignored.  A class is a motif
    when its score exceeds ``z_threshold`` (population standard deviation in
    the denominator).  Results are ordered by descending score.
    """
    if z_threshold <= 0:
        raise ValueError(f"z_threshold must be positive, got {z_threshold}")
    p = p or NullModelParams()
    observed = classify(
        [sub for g in graphs for sub in enumerate_subgraphs(g, k)]
    )
    if not observed:
        return []
    if p.window is None:
        ts = [e.t for g in graphs for e in g.edges]
        p = replace(p, window=(min(ts), max(ts)))
    index = {c.label: i for i, c in enumerate(observed)}
    ref_counts = np.zeros((p.samples, len(observed)))
    base = _seed_tuple(p.rng_seed)
    for s in range(p.samples):
        for gi, g in enumerate(graphs):
            rng = np.random.default_rng((*base, s, gi))
            ref = randomize_reference(g, p, rng=rng)
            for comp in decompose(ref, g.T):
                for label, count in _count_classes(comp, k).items():
                    col = index.get(label)
                    if col is not None:
                        ref_counts[s, col] += count
    f_ref = ref_counts.mean(axis=0)
    sigma_ref = ref_counts.std(axis=0)  # population spread over samples
    motifs = []
    for c, fr, sg in zip(observed, f_ref, sigma_ref):
        z = z_score(c.f, float(fr), float(sg))
        if z > z_threshold:
            motifs.append(
                Motif(
                    label=c.label,
                    k=k,
                    f=c.f,
                    f_ref=float(fr),
                    sigma_ref=float(sg),
                    z=z,
                    instances=c.instances,
                )
            )
    motifs.sort(key=lambda m: (-m.z, m.label))
    return motifs
