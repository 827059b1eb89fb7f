"""Cache placement: who serves, who requests, and what rate they get.

Serving vehicles hold the most popular files; every other vehicle requests
files by Zipf popularity and fetches cached ones from its nearest serving
vehicle and the rest from the base station.  Two selection strategies are
provided: by motif influence and by plain distance.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .motif_miner import EdgeSubgraph, Motif
from .radio_model import (
    BS_ID,
    ChannelParams,
    GainTable,
    LinkState,
    feasibility,
    rate,
    sinr_bs,
    sinr_v2v,
)

__all__ = [
    "NoMotifsError",
    "DemandModel",
    "InfluenceTable",
    "Placement",
    "PlacementEvaluation",
    "zipf_pmf",
    "influential_car",
    "influence_scores",
    "select_serving_motif",
    "select_serving_location",
    "assign_requesters",
    "make_placement",
    "evaluate_placement",
    "objective_value",
]

Position = tuple[float, float]


class NoMotifsError(RuntimeError):
    """Raised when influence scores are requested but no motifs were found."""


@dataclass(frozen=True)
class DemandModel:
    """Zipf file popularity over a catalog of ``m_total`` files.

    The ``f_cached`` most popular files are replicated on serving vehicles.
    """

    m_total: int = 10
    f_cached: int = 3
    theta_r: float = 2.0

    def __post_init__(self) -> None:
        if self.m_total < 1:
            raise ValueError(f"catalog size must be >= 1, got {self.m_total}")
        if not 1 <= self.f_cached <= self.m_total:
            raise ValueError(
                f"cached file count must be in [1, {self.m_total}], got {self.f_cached}"
            )
        if self.theta_r < 0:
            raise ValueError(f"popularity exponent must be >= 0, got {self.theta_r}")

    def pmf(self) -> np.ndarray:
        """Popularity of files 1..m_total (sums to 1)."""
        ranks = np.arange(1, self.m_total + 1, dtype=float)
        weights = ranks ** (-self.theta_r)
        return weights / weights.sum()

    @property
    def cached_mass(self) -> float:
        """Probability that a request hits a cached file."""
        return float(self.pmf()[: self.f_cached].sum())


def zipf_pmf(m: int, dm: DemandModel) -> float:
    """Request probability of the file with popularity rank ``m``."""
    if not 1 <= m <= dm.m_total:
        raise ValueError(f"rank must be in [1, {dm.m_total}], got {m}")
    return float(dm.pmf()[m - 1])


def influential_car(sub: EdgeSubgraph) -> int:
    """The dominant vehicle of a subgraph instance.

    Highest outdegree in the collapsed directed structure wins; ties go to
    the larger total degree, then to the smaller vehicle id.
    """
    if not sub.edges:
        raise ValueError("cannot pick an influential car from an empty subgraph")
    pairs = {(e.src, e.dst) for e in sub.edges}
    out: Counter = Counter()
    deg: Counter = Counter()
    for s, d in pairs:
        out[s] += 1
        deg[s] += 1
        deg[d] += 1
    nodes = {v for p in pairs for v in p}
    return max(nodes, key=lambda v: (out[v], deg[v], -v))


@dataclass(frozen=True)
class InfluenceTable:
    """Per-vehicle influence, with the per-motif weights behind it.

    ``scores[j]`` is the weighted frequency with which vehicle ``j`` is the
    influential car across motif instances; ``weights`` are the per-motif
    significance weights (they sum to 1); ``freqs[label][j]`` is the fraction
    of that motif's instances led by ``j``.
    """

    vehicles: tuple[int, ...]
    scores: Mapping[int, float]
    weights: Mapping[str, float]
    freqs: Mapping[str, Mapping[int, float]]


def influence_scores(motifs: Sequence[Motif], vehicles: Sequence[int]) -> InfluenceTable:
    """Score every vehicle by its weighted motif leadership.

    Motif weights are proportional to their significance scores; motifs with
    an infinite score are taken out of that normalization and given raw
    weight 1, after which all raw weights are renormalized to sum to 1.
    """
    if not motifs:
        raise NoMotifsError("no motifs to score; fall back to location-based selection")
    finite_total = sum(m.z for m in motifs if math.isfinite(m.z))
    raw: dict[str, float] = {}
    for m in motifs:
        if not m.instances:
            raise ValueError(f"motif {m.label} has no retained instances")
        raw[m.label] = 1.0 if math.isinf(m.z) else m.z / finite_total
    total = sum(raw.values())
    weights = {label: w / total for label, w in raw.items()}
    freqs: dict[str, dict[int, float]] = {}
    for m in motifs:
        leads = Counter(influential_car(inst) for inst in m.instances)
        n = len(m.instances)
        freqs[m.label] = {v: c / n for v, c in sorted(leads.items())}
    vids = tuple(sorted(vehicles))
    scores = {v: 0.0 for v in vids}
    for m in motifs:
        w = weights[m.label]
        for v, fij in freqs[m.label].items():
            if v not in scores:
                raise ValueError(f"motif instance vehicle {v} is not in the vehicle set")
            scores[v] += w * fij
    return InfluenceTable(vehicles=vids, scores=scores, weights=weights, freqs=freqs)


def select_serving_motif(table: InfluenceTable, c: int) -> frozenset[int]:
    """The ``c`` highest-influence vehicles (ties to the smaller id)."""
    n = len(table.vehicles)
    if not 1 <= c < n:
        raise ValueError(f"serving count must be in [1, {n - 1}], got {c}")
    ranked = sorted(table.vehicles, key=lambda v: (-table.scores[v], v))
    return frozenset(ranked[:c])


def pair_distance(
    p: Position, q: Position, ring_length: float | None = None
) -> float:
    """Distance between two road positions.

    With ``ring_length`` the x axis is circular (wrap-around road), so the
    along-road separation is the shorter way around.
    """
    dx = abs(float(p[0]) - float(q[0]))
    if ring_length is not None:
        dx = min(dx, ring_length - dx)
    return math.hypot(dx, float(p[1]) - float(q[1]))


def _distance_matrix(
    vids: Sequence[int],
    positions: Mapping[int, Position],
    ring_length: float | None = None,
) -> np.ndarray:
    pts = np.array([positions[v] for v in vids], dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    dx = np.abs(diff[..., 0])
    if ring_length is not None:
        dx = np.minimum(dx, ring_length - dx)
    return np.hypot(dx, diff[..., 1])


def _coverage_cost(selected: Sequence[int], vids: Sequence[int], dmat: np.ndarray) -> float:
    """Sum over unselected vehicles of the distance to the nearest selected one."""
    sel = np.array(selected, dtype=int)
    rest = np.array([i for i in range(len(vids)) if i not in set(selected)], dtype=int)
    if rest.size == 0:
        return 0.0
    return float(dmat[np.ix_(rest, sel)].min(axis=1).sum())


def select_serving_location(
    positions: Mapping[int, Position],
    c: int,
    ring_length: float | None = None,
) -> frozenset[int]:
    """Distance-based serving selection.

    Minimizes the summed distance from every non-serving vehicle to its
    nearest serving vehicle.  Exact (exhaustive) up to 12 vehicles; above
    that, greedy seeding plus best-improvement swaps.  Deterministic: ties
    prefer the lexicographically smallest id set.
    """
    vids = sorted(positions)
    n = len(vids)
    if not 1 <= c < n:
        raise ValueError(f"serving count must be in [1, {n - 1}], got {c}")
    dmat = _distance_matrix(vids, positions, ring_length)

    if n <= 12:
        # combinations() yields candidate sets in lexicographic order, so
        # keeping only strict improvements resolves ties toward smaller ids.
        best_cost, best_sel = math.inf, None
        for sel in combinations(range(n), c):
            cost = _coverage_cost(sel, vids, dmat)
            if cost < best_cost - 1e-15:
                best_cost, best_sel = cost, sel
        return frozenset(vids[i] for i in best_sel)

    selected: list[int] = []
    while len(selected) < c:
        best_cost, best_i = math.inf, None
        for i in range(n):
            if i in selected:
                continue
            cost = _coverage_cost(selected + [i], vids, dmat)
            if cost < best_cost - 1e-15:
                best_cost, best_i = cost, i
        selected.append(best_i)
    current = _coverage_cost(selected, vids, dmat)
    improved = True
    while improved:
        improved = False
        best_cost, best_swap = current, None
        for out_i in sorted(selected):
            for in_i in range(n):
                if in_i in selected:
                    continue
                trial = [i for i in selected if i != out_i] + [in_i]
                cost = _coverage_cost(trial, vids, dmat)
                if cost < best_cost - 1e-12:
                    best_cost, best_swap = cost, (out_i, in_i)
        if best_swap is not None:
            out_i, in_i = best_swap
            selected = [i for i in selected if i != out_i] + [in_i]
            current = best_cost
            improved = True
    return frozenset(vids[i] for i in selected)


@dataclass(frozen=True)
class Placement:
    """A serving set plus the nearest-server assignment of every requester."""

    serving: frozenset[int]
    assignment: Mapping[int, int]
    objective: float | None = None


@dataclass(frozen=True)
class PlacementEvaluation:
    placement: Placement
    per_car_rate: Mapping[int, float]


def assign_requesters(
    serving: frozenset[int],
    positions: Mapping[int, Position],
    ring_length: float | None = None,
) -> dict[int, int]:
    """Map every non-serving vehicle to its nearest serving vehicle."""
    servers = sorted(serving)
    if not servers:
        raise ValueError("empty serving set")
    for s in servers:
        if s not in positions:
            raise ValueError(f"serving vehicle {s} has no position")
    out: dict[int, int] = {}
    for a in sorted(positions):
        if a in serving:
            continue
        out[a] = min(
            servers,
            key=lambda s: (pair_distance(positions[s], positions[a], ring_length), s),
        )
    return out


def make_placement(
    serving: frozenset[int],
    positions: Mapping[int, Position],
    ring_length: float | None = None,
) -> Placement:
    return Placement(
        serving=frozenset(serving),
        assignment=assign_requesters(frozenset(serving), positions, ring_length),
    )


def evaluate_placement(
    placement: Placement,
    positions: Mapping[int, Position],
    demand: DemandModel,
    params: ChannelParams,
    bs_position: Position,
    fading_seed: int | Sequence[int] | None = None,
    gains: GainTable | None = None,
    ring_length: float | None = None,
) -> PlacementEvaluation:
    """Average per-requester data rate of a placement under the link model.

    Every requester simultaneously holds a vehicle link from its assigned
    server and a base-station downlink.  After feasibility resolution, the
    vehicle rate of an inactive link is zero while the base-station term is
    always delivered at its achieved SINR.  A prebuilt ``gains`` table takes
    precedence over ``fading_seed``; pass the same table to several
    placements for a paired comparison.
    """
    requesters = sorted(set(positions) - placement.serving)
    if not requesters:
        raise ValueError("placement leaves no requesters (serving count equals fleet size)")
    if gains is None:
        if fading_seed is None:
            raise ValueError("need either a fading seed or a prebuilt gain table")
        gains = GainTable.from_positions(
            positions, bs_position, params, fading_seed, ring_length=ring_length
        )
    links: list[LinkState] = []
    for a in requesters:
        server = placement.assignment[a]
        links.append(
            LinkState(tx=server, rx=a, power=params.p_max, gain=gains.gain(server, a))
        )
        links.append(
            LinkState(tx=BS_ID, rx=a, power=params.p_bs, gain=gains.gain(BS_ID, a))
        )
    resolved = feasibility(links, params, gains)
    bs_links = [l for l in resolved if l.tx == BS_ID]
    v2v_links = [l for l in resolved if l.tx != BS_ID]
    v2v_by_rx = {l.rx: l for l in v2v_links}
    bs_by_rx = {l.rx: l for l in bs_links}
    hit = demand.cached_mass
    miss = 1.0 - hit
    per_car: dict[int, float] = {}
    for a in requesters:
        lv, lb = v2v_by_rx[a], bs_by_rx[a]
        r_vehicle = (
            rate(sinr_v2v(lv, bs_links, v2v_links, params, gains), params.omega)
            if lv.active
            else 0.0
        )
        r_bs = rate(sinr_bs(lb, v2v_links, params, gains), params.omega)
        per_car[a] = hit * r_vehicle + miss * r_bs
    objective = sum(per_car.values()) / len(per_car)
    return PlacementEvaluation(
        placement=Placement(
            serving=placement.serving,
            assignment=placement.assignment,
            objective=objective,
        ),
        per_car_rate=per_car,
    )


def objective_value(
    placement: Placement,
    positions: Mapping[int, Position],
    demand: DemandModel,
    params: ChannelParams,
    bs_position: Position,
    fading_seed: int | Sequence[int] | None = None,
    gains: GainTable | None = None,
    ring_length: float | None = None,
) -> float:
    """Scalar objective (average requester rate, bit/s) of a placement."""
    return evaluate_placement(
        placement, positions, demand, params, bs_position, fading_seed, gains,
        ring_length,
    ).placement.objective
