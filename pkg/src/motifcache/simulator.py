"""Freeway traces, stochastic link events, and the placement-comparison sweeps.

A trace samples every vehicle's 2-D position on a fixed time grid.  Link
events between nearby vehicles are drawn from per-pair Poisson counts whose
intensity falls off with the pair's window-average distance; the resulting
temporal graph feeds the motif miner.  :func:`run_scenario` compares
motif-influence placement against distance-based placement under paired
randomness and reports per-replication average rates plus rate CDFs.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .caching import (
    DemandModel,
    InfluenceTable,
    NoMotifsError,
    influence_scores,
    make_placement,
    evaluate_placement,
    select_serving_location,
    select_serving_motif,
)
from .motif_miner import Motif, NullModelParams, detect_motifs
from .radio_model import ChannelParams, GainTable, default_proximity_cutoff
from .temporal_graph import MS_PER_S, TemporalGraph, build_graph_ms, decompose
from .motif_miner import redraw_simultaneous

logger = logging.getLogger(__name__)

TRACE_HEADER = ("t_s", "vehicle_id", "x_m", "y_m")
METRICS_HEADER = ("scenario", "sweep_point", "strategy", "replication", "avg_rate_bps")
CDF_HEADER = ("scenario", "serving_count", "strategy", "rate_bps", "cdf")

STRATEGY_MOTIF = "motif"
STRATEGY_LOCATION = "location"

# substream tags for deriving independent RNG streams from the master seed
_S_TRACE, _S_EVENTS, _S_NULL, _S_FADING = range(4)

__all__ = [
    "TRACE_HEADER",
    "METRICS_HEADER",
    "CDF_HEADER",
    "STRATEGY_MOTIF",
    "STRATEGY_LOCATION",
    "Trace",
    "TraceParams",
    "EventGenParams",
    "ScenarioConfig",
    "MetricsRow",
    "CdfRow",
    "ScenarioResult",
    "generate_synthetic_trace",
    "load_trace",
    "save_trace",
    "mean_pair_distances",
    "resolve_event_params",
    "generate_link_events",
    "run_scenario",
    "compute_cdf",
    "write_metrics_csv",
    "write_cdf_csv",
]


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceParams:
    """Geometry and motion knobs for the synthetic freeway.

    Six lanes (three per direction) by default.  Vehicles travel in platoons:
    a platoon shares one speed draw and its members hold fixed spacing behind
    each other, which is what makes repeated communication between the same
    vehicles plausible.
    """

    lane_width: float = 3.5            # m
    n_lanes: int = 6
    segment_length: float = 5000.0     # m
    sample_dt: float = 1.0             # s
    speed_range: tuple[float, float] = (22.0, 36.0)   # m/s
    platoon_size_range: tuple[int, int] = (6, 6)
    platoon_spacing_range: tuple[float, float] = (18.0, 22.0)  # m
    platoon_speed_jitter: float = 0.05  # m/s

    def __post_init__(self) -> None:
        if self.lane_width <= 0 or self.segment_length <= 0 or self.sample_dt <= 0:
            raise ValueError("lane width, segment length and sample step must be positive")
        if self.n_lanes < 2 or self.n_lanes % 2:
            raise ValueError(f"need an even lane count >= 2, got {self.n_lanes}")
        if self.speed_range[0] <= 0 or self.speed_range[1] < self.speed_range[0]:
            raise ValueError(f"bad speed range {self.speed_range}")
        if self.platoon_size_range[0] < 1 or self.platoon_size_range[1] < self.platoon_size_range[0]:
            raise ValueError(f"bad platoon size range {self.platoon_size_range}")


@dataclass(frozen=True)
class Trace:
    """Positions of every vehicle on a shared uniform time grid."""

    times: np.ndarray                  # (n_steps,)
    vehicle_ids: tuple[int, ...]
    positions: np.ndarray              # (n_steps, n_vehicles, 2)
    lane_width: float = 3.5
    n_lanes: int = 6
    segment_length: float = 5000.0
    # True when x coordinates wrap at segment_length (circular road), so
    # separations along x must be measured the short way around.
    ring: bool = False

    def __post_init__(self) -> None:
        if self.positions.shape != (len(self.times), len(self.vehicle_ids), 2):
            raise ValueError(
                f"positions shape {self.positions.shape} does not match "
                f"{len(self.times)} steps x {len(self.vehicle_ids)} vehicles"
            )
        if len(self.times) > 1:
            dt = np.diff(self.times)
            if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-9) or dt[0] <= 0:
                raise ValueError("trace time grid must be uniform and increasing")

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicle_ids)

    @property
    def road_bounds(self) -> tuple[float, float]:
        return self.segment_length, self.lane_width * self.n_lanes

    def last_positions(self) -> dict[int, tuple[float, float]]:
        """Snapshot at the final sample, keyed by vehicle id."""
        snap = self.positions[-1]
        return {
            v: (float(snap[i, 0]), float(snap[i, 1]))
            for i, v in enumerate(self.vehicle_ids)
        }

    def positions_at(self, t: float) -> dict[int, tuple[float, float]]:
        """Snapshot at time ``t`` (snapped to the nearest sample), by id."""
        t0 = float(self.times[0])
        t1 = float(self.times[-1])
        if not t0 - 1e-9 <= t <= t1 + 1e-9:
            raise ValueError(f"time {t} outside trace range [{t0}, {t1}]")
        dt = float(self.times[1] - self.times[0]) if len(self.times) > 1 else 1.0
        i = int(round((t - t0) / dt))
        snap = self.positions[i]
        return {
            v: (float(snap[i_v, 0]), float(snap[i_v, 1]))
            for i_v, v in enumerate(self.vehicle_ids)
        }

    def subset(self, vehicle_ids: Iterable[int]) -> "Trace":
        """Restrict the trace to the given vehicles (ids preserved)."""
        wanted = sorted(set(vehicle_ids))
        index = {v: i for i, v in enumerate(self.vehicle_ids)}
        missing = [v for v in wanted if v not in index]
        if missing:
            raise ValueError(f"vehicles {missing} are not in the trace")
        cols = [index[v] for v in wanted]
        return Trace(
            times=self.times,
            vehicle_ids=tuple(wanted),
            positions=self.positions[:, cols, :],
            lane_width=self.lane_width,
            n_lanes=self.n_lanes,
            segment_length=self.segment_length,
            ring=self.ring,
        )

    @property
    def ring_length(self) -> float | None:
        """Circumference for wrap-aware x distances, or None on a flat road."""
        return self.segment_length if self.ring else None


def _platoon_sizes(
    count: int, size_range: tuple[int, int], rng: np.random.Generator
) -> list[int]:
    """Split ``count`` vehicles into platoon sizes drawn from ``size_range``.

    A trailing remainder smaller than the minimum size would form a runt
    group too quiet to ever matter, so those vehicles are spread over the
    platoons already drawn instead.
    """
    lo, hi = size_range
    sizes: list[int] = []
    remaining = count
    while remaining >= lo:
        size = int(min(remaining, rng.integers(lo, hi + 1)))
        sizes.append(size)
        remaining -= size
    if not sizes:
        return [remaining] if remaining else []
    for i in range(remaining):
        sizes[i % len(sizes)] += 1
    return sizes


def generate_synthetic_trace(
    n_vehicles: int,
    duration: float,
    seed: int | Sequence[int],
    params: TraceParams = TraceParams(),
) -> Trace:
    """Seeded synthetic freeway trace.

    Vehicles are split between the two directions, grouped into platoons,
    placed uniformly along the segment and advanced at constant speed with
    wrap-around.  ``duration`` of zero gives a single-timestep trace.
    """
    if n_vehicles < 2:
        raise ValueError(f"need at least 2 vehicles, got {n_vehicles}")
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    rng = np.random.default_rng(seed)
    n_steps = int(math.floor(duration / params.sample_dt)) + 1
    times = np.arange(n_steps) * params.sample_dt

    half = params.n_lanes // 2
    n_fwd = (n_vehicles + 1) // 2
    x0 = np.empty(n_vehicles)
    y = np.empty(n_vehicles)
    speed = np.empty(n_vehicles)

    vid = 0
    for direction, count in ((1.0, n_fwd), (-1.0, n_vehicles - n_fwd)):
        lanes = range(half) if direction > 0 else range(half, params.n_lanes)
        lanes = list(lanes)
        lane_cursor = 0
        sizes = _platoon_sizes(count, params.platoon_size_range, rng)
        for size in sizes:
            lane = lanes[lane_cursor % len(lanes)]
            lane_cursor += 1
            v_platoon = rng.uniform(*params.speed_range)
            jitter = rng.uniform(
                -params.platoon_speed_jitter, params.platoon_speed_jitter
            )
            # One speed per platoon: members hold their spacing (car-following),
            # so intra-platoon geometry is rigid over the whole trace.
            v_members = direction * max(v_platoon + jitter, 1.0)
            head = rng.uniform(0.0, params.segment_length)
            offset = 0.0
            for member in range(size):
                if member > 0:
                    offset += rng.uniform(*params.platoon_spacing_range)
                x0[vid] = (head - direction * offset) % params.segment_length
                y[vid] = (lane + 0.5) * params.lane_width
                speed[vid] = v_members
                vid += 1

    x = (x0[None, :] + speed[None, :] * times[:, None]) % params.segment_length
    positions = np.stack(
        [x, np.broadcast_to(y[None, :], x.shape).copy()], axis=-1
    )
    return Trace(
        times=times,
        vehicle_ids=tuple(range(n_vehicles)),
        positions=positions,
        lane_width=params.lane_width,
        n_lanes=params.n_lanes,
        segment_length=params.segment_length,
        ring=True,
    )


def save_trace(trace: Trace, path: str | Path) -> Path:
    """Write a trace CSV (rows sorted by time then vehicle id).

    Geometry metadata rides along in ``#`` comment lines so a round trip
    through :func:`load_trace` is lossless.
    """
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# lane_width_m={trace.lane_width!r}\n")
        fh.write(f"# n_lanes={trace.n_lanes}\n")
        fh.write(f"# segment_length_m={trace.segment_length!r}\n")
        fh.write(f"# ring={int(trace.ring)}\n")
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for step, t in enumerate(trace.times):
            for i, v in enumerate(trace.vehicle_ids):
                writer.writerow(
                    (
                        repr(float(t)),
                        v,
                        repr(float(trace.positions[step, i, 0])),
                        repr(float(trace.positions[step, i, 1])),
                    )
                )
    return path


def load_trace(path: str | Path) -> Trace:
    """Read a trace CSV, validating the grid and road bounds.

    Every vehicle must be sampled at every timestep of a uniform grid;
    gaps, malformed rows and out-of-bounds positions raise ``ValueError``
    with the offending line.
    """
    path = Path(path)
    # ring is kept as an int so the generic ``type(default)(value)`` coercion
    # below parses "0" correctly (bool("0") would be True).
    meta = {"lane_width_m": 3.5, "n_lanes": 6, "segment_length_m": 5000.0, "ring": 0}
    samples: dict[int, dict[float, tuple[float, float]]] = defaultdict(dict)
    with open(path, newline="") as fh:
        lineno = 0
        header_seen = False
        for raw in fh:
            lineno += 1
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                key = key.strip()
                if key in meta:
                    meta[key] = type(meta[key])(value.strip())
                continue
            row = next(csv.reader([line]))
            if not header_seen:
                if tuple(row) != TRACE_HEADER:
                    raise ValueError(
                        f"{path}: line {lineno}: bad header {row!r}, expected {list(TRACE_HEADER)}"
                    )
                header_seen = True
                continue
            if len(row) != 4:
                raise ValueError(f"{path}: line {lineno}: expected 4 fields, got {len(row)}")
            try:
                t, v, x, ypos = float(row[0]), int(row[1]), float(row[2]), float(row[3])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed row {row!r}")
            if t in samples[v]:
                raise ValueError(
                    f"{path}: line {lineno}: duplicate sample for vehicle {v} at t={t}"
                )
            if not 0 <= x <= meta["segment_length_m"]:
                raise ValueError(
                    f"{path}: line {lineno}: x={x} outside [0, {meta['segment_length_m']}]"
                )
            if not 0 <= ypos <= meta["lane_width_m"] * meta["n_lanes"]:
                raise ValueError(
                    f"{path}: line {lineno}: y={ypos} outside the road width"
                )
            samples[v][t] = (x, ypos)
    if not header_seen:
        raise ValueError(f"{path}: missing header {list(TRACE_HEADER)}")
    if not samples:
        raise ValueError(f"{path}: no samples")
    vids = tuple(sorted(samples))
    times = sorted({t for series in samples.values() for t in series})
    for v in vids:
        missing = [t for t in times if t not in samples[v]]
        if missing:
            raise ValueError(
                f"{path}: vehicle {v} has gaps (missing t={missing[:3]}...)"
            )
    times_arr = np.array(times, dtype=float)
    if len(times_arr) > 1:
        dt = np.diff(times_arr)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-9):
            raise ValueError(f"{path}: time grid is not uniform")
    positions = np.array(
        [[samples[v][t] for v in vids] for t in times], dtype=float
    )
    return Trace(
        times=times_arr,
        vehicle_ids=vids,
        positions=positions,
        lane_width=meta["lane_width_m"],
        n_lanes=int(meta["n_lanes"]),
        segment_length=meta["segment_length_m"],
        ring=bool(meta["ring"]),
    )


# ---------------------------------------------------------------------------
# link events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventGenParams:
    """Parameters of the Poisson link-event generator.

    ``kappa`` scales the per-pair event intensity ``kappa / mean_distance``;
    ``None`` derives it from the fleet so that a vehicle sends a few events
    per window toward its typical nearest partner.  ``proximity_cutoff``
    (m) limits which pairs exchange data at all; ``None`` derives it from
    the channel parameters.  ``window`` (s) is the observation window;
    ``None`` spans the whole trace.
    """

    kappa: float | None = None
    proximity_cutoff: float | None = None
    window: float | None = None
    rng_seed: int | Sequence[int] = 0

    def __post_init__(self) -> None:
        if self.kappa is not None and self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.proximity_cutoff is not None and self.proximity_cutoff <= 0:
            raise ValueError(f"proximity cutoff must be positive, got {self.proximity_cutoff}")
        if self.window is not None and self.window < 0:
            raise ValueError(f"window must be non-negative, got {self.window}")


NEAREST_PARTNER_RATE = 2.5  # expected events per window toward the typical closest partner


def mean_pair_distances(trace: Trace, window: float | None = None) -> np.ndarray:
    """Window-averaged pairwise distance matrix (n_vehicles x n_vehicles).

    On a ring trace the x separation is measured the short way around, so
    two neighbours straddling the wrap point stay close.
    """
    t0 = float(trace.times[0])
    t_end = t0 + window if window is not None else float(trace.times[-1])
    mask = trace.times <= t_end + 1e-9
    pos = trace.positions[mask]
    diff = pos[:, :, None, :] - pos[:, None, :, :]
    dx = np.abs(diff[..., 0])
    if trace.ring:
        dx = np.minimum(dx, trace.segment_length - dx)
    return np.hypot(dx, diff[..., 1]).mean(axis=0)


def resolve_event_params(
    trace: Trace,
    p: EventGenParams,
    channel: ChannelParams | None = None,
) -> EventGenParams:
    """Fill in the derived defaults of ``p`` for a concrete trace."""
    window = p.window if p.window is not None else float(trace.times[-1] - trace.times[0])
    cutoff = p.proximity_cutoff
    if cutoff is None:
        cutoff = default_proximity_cutoff(channel or ChannelParams())
    kappa = p.kappa
    if kappa is None:
        dbar = mean_pair_distances(trace, window)
        np.fill_diagonal(dbar, np.inf)
        nearest = dbar.min(axis=1)
        nearest = nearest[nearest <= cutoff]
        if nearest.size == 0:
            kappa = 1.0  # no qualifying pairs; value is irrelevant
        else:
            # Median (not minimum) nearest-partner distance: one freakishly
            # close pair should not depress every other pair's event rate.
            kappa = NEAREST_PARTNER_RATE * float(np.median(nearest))
    return replace(p, kappa=kappa, proximity_cutoff=cutoff, window=window)


def generate_link_events(
    trace: Trace,
    p: EventGenParams,
    channel: ChannelParams | None = None,
) -> TemporalGraph:
    """Draw a temporal graph of link events for a trace.

    For each ordered pair within the proximity cutoff the event count is
    Poisson with mean ``kappa / mean_distance`` and timestamps are uniform
    over the window; clashes (same vehicle, same millisecond) are redrawn.
    """
    p = resolve_event_params(trace, p, channel)
    rng = np.random.default_rng(p.rng_seed)
    dbar = mean_pair_distances(trace, p.window)
    vids = trace.vehicle_ids
    n = len(vids)
    pairs = [
        (i, j)
        for i in range(n)
        for j in range(n)
        if i != j and dbar[i, j] <= p.proximity_cutoff
    ]
    lo_ms = round(float(trace.times[0]) * MS_PER_S)
    hi_ms = round((float(trace.times[0]) + p.window) * MS_PER_S)
    triples: list[tuple[int, int, int]] = []
    if pairs:
        lams = np.array([p.kappa / dbar[i, j] for i, j in pairs])
        counts = rng.poisson(lams)
        for (i, j), count in zip(pairs, counts):
            if count == 0:
                continue
            ts = rng.integers(lo_ms, hi_ms + 1, size=count)
            triples.extend((vids[i], vids[j], int(t)) for t in ts)
    triples = redraw_simultaneous(triples, lo_ms, hi_ms, rng)
    return build_graph_ms(triples)


# ---------------------------------------------------------------------------
# scenario sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one comparison sweep needs.

    Scenario 1 fixes the fleet and sweeps the serving count; scenario 2
    sweeps the fleet size with a fixed number of non-serving vehicles,
    generating an independent fleet per car-set size.

    Timing: link events are observed over ``window`` seconds, the serving
    set and each requester's server are fixed from the snapshot at the end
    of the window, and delivery is then evaluated at each time in
    ``service_lags`` (seconds past the decision) without re-assignment.
    A placement therefore pays for choosing servers whose proximity does
    not outlive the decision instant.
    """

    scenario: int = 1
    n_vehicles: int = 53
    serving_counts: tuple[int, ...] = (5, 10, 15, 20, 25, 30, 35, 40, 45, 50)
    car_set_sizes: tuple[int, ...] = (31, 33, 35, 37, 39, 41, 43, 45, 47, 49, 51, 53)
    non_serving: int = 30
    replications: int = 20
    time_constraint: float = 100.0     # chaining window, seconds
    subgraph_size: int = 3
    z_threshold: float = 2.0
    null_samples: int = 50
    window: float = 200.0              # observation window, s
    service_lags: tuple[float, ...] = (60.0, 90.0, 120.0, 150.0, 180.0)
    bs_distance: float = 10_000.0      # m, perpendicular to the road midpoint
    master_seed: int = 3
    demand: DemandModel = DemandModel()
    channel: ChannelParams = ChannelParams()
    # Vehicles only exchange data within a few hundred meters of each other,
    # far short of what the channel alone could reach.
    events: EventGenParams = EventGenParams(proximity_cutoff=400.0)
    trace: TraceParams = TraceParams()

    def __post_init__(self) -> None:
        if self.scenario not in (1, 2):
            raise ValueError(f"scenario must be 1 or 2, got {self.scenario}")
        if self.n_vehicles < 2:
            raise ValueError(f"need at least 2 vehicles, got {self.n_vehicles}")
        if self.replications < 1:
            raise ValueError(f"need at least 1 replication, got {self.replications}")
        if self.subgraph_size < 2:
            raise ValueError(f"subgraph size must be >= 2, got {self.subgraph_size}")
        if self.master_seed < 0:
            raise ValueError(f"master seed must be non-negative, got {self.master_seed}")
        if self.window <= 0:
            raise ValueError(f"window must be positive, got {self.window}")
        if not self.service_lags or any(l <= 0 for l in self.service_lags):
            raise ValueError(
                f"service lags must be positive and non-empty, got {self.service_lags}"
            )
        if list(self.service_lags) != sorted(set(self.service_lags)):
            raise ValueError(
                f"service lags must be strictly increasing, got {self.service_lags}"
            )
        if self.scenario == 1:
            bad = [c for c in self.serving_counts if not 1 <= c < self.n_vehicles]
            if not self.serving_counts or bad:
                raise ValueError(
                    f"serving counts must lie in [1, {self.n_vehicles - 1}], got {bad or '[]'}"
                )
        else:
            if self.non_serving < 1:
                raise ValueError(f"non-serving count must be >= 1, got {self.non_serving}")
            if not self.car_set_sizes:
                raise ValueError("car set sizes must be non-empty")
            if min(self.car_set_sizes) <= self.non_serving:
                raise ValueError(
                    f"car sets must exceed the {self.non_serving} non-serving "
                    f"vehicles, got {min(self.car_set_sizes)}"
                )


@dataclass(frozen=True)
class MetricsRow:
    scenario: int
    sweep_point: int
    strategy: str
    replication: int
    avg_rate_bps: float


@dataclass(frozen=True)
class CdfRow:
    scenario: int
    serving_count: int
    strategy: str
    rate_bps: float
    cdf: float


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    metrics: list[MetricsRow]
    cdf: list[CdfRow]
    per_point_rates: dict[tuple[int, str], list[float]] = field(default_factory=dict)
    fallback_points: int = 0


def compute_cdf(rates: Sequence[float]) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF points ``(rate, fraction <= rate)``."""
    if len(rates) == 0:
        raise ValueError("cannot build a CDF from no samples")
    xs = sorted(float(r) for r in rates)
    n = len(xs)
    return [(x, (i + 1) / n) for i, x in enumerate(xs)]


def _stream(cfg: ScenarioConfig, purpose: int, point: int, rep: int) -> tuple[int, ...]:
    return (cfg.master_seed, cfg.scenario, purpose, point, rep)


def _mine_influence(
    trace: Trace,
    cfg: ScenarioConfig,
    point: int,
    rep: int,
) -> tuple[InfluenceTable | None, list[Motif]]:
    """Mine motifs on the trace's link events; None table means fallback."""
    events = replace(
        cfg.events,
        rng_seed=_stream(cfg, _S_EVENTS, point, rep),
        # Observation stops at the decision instant even though the trace
        # runs on through the service period.
        window=cfg.events.window if cfg.events.window is not None else cfg.window,
    )
    graph = generate_link_events(trace, events, cfg.channel)
    macros = decompose(graph, cfg.time_constraint)
    window = (float(trace.times[0]), float(trace.times[0]) + cfg.window)
    motifs = detect_motifs(
        macros,
        cfg.subgraph_size,
        cfg.z_threshold,
        NullModelParams(
            samples=cfg.null_samples,
            rng_seed=_stream(cfg, _S_NULL, point, rep),
            window=window,
        ),
    )
    if not motifs:
        return None, motifs
    return influence_scores(motifs, trace.vehicle_ids), motifs


def _bs_position(cfg: ScenarioConfig) -> tuple[float, float]:
    road_mid_y = cfg.trace.n_lanes * cfg.trace.lane_width / 2.0
    return (cfg.trace.segment_length / 2.0, road_mid_y + cfg.bs_distance)


def _evaluate_point(
    cfg: ScenarioConfig,
    trace: Trace,
    table: InfluenceTable | None,
    serving_count: int,
    point: int,
    rep: int,
) -> dict[str, tuple[float, list[float]]]:
    """Evaluate both strategies at one sweep point under shared fading.

    Servers and the requester-to-server assignment are fixed from the
    snapshot at the end of the observation window; the achieved rates are
    then averaged over the configured service lags while traffic keeps
    moving.  Fading is drawn once per lag and shared by both strategies.
    """
    t_decision = float(trace.times[0]) + cfg.window
    ring = trace.ring_length
    positions_dec = trace.positions_at(t_decision)
    serving_location = select_serving_location(
        positions_dec, serving_count, ring_length=ring
    )
    if table is not None:
        serving_motif = select_serving_motif(table, serving_count)
    else:
        serving_motif = serving_location
    bs = _bs_position(cfg)
    epochs = [
        (li, trace.positions_at(t_decision + lag))
        for li, lag in enumerate(cfg.service_lags)
    ]
    gain_tables = {
        li: GainTable.from_positions(
            pos,
            bs,
            cfg.channel,
            (*_stream(cfg, _S_FADING, point, rep), li),
            ring_length=ring,
        )
        for li, pos in epochs
    }
    out: dict[str, tuple[float, list[float]]] = {}
    for strategy, serving in (
        (STRATEGY_MOTIF, serving_motif),
        (STRATEGY_LOCATION, serving_location),
    ):
        frozen = make_placement(serving, positions_dec, ring_length=ring)
        requesters = sorted(frozen.assignment)
        objectives = []
        rate_sums = dict.fromkeys(requesters, 0.0)
        for li, pos in epochs:
            ev = evaluate_placement(
                frozen, pos, cfg.demand, cfg.channel, bs, gains=gain_tables[li]
            )
            objectives.append(ev.placement.objective)
            for r in requesters:
                rate_sums[r] += ev.per_car_rate[r]
        n_epochs = len(epochs)
        rates = [rate_sums[r] / n_epochs for r in requesters]
        out[strategy] = (float(np.mean(objectives)), rates)
    return out


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Run one full comparison sweep.

    Per replication: a trace covering the observation window plus the
    service period is generated, link events are mined over the window,
    both serving sets are chosen from the decision snapshot at the end of
    the window, and delivery rates are averaged over the service lags with
    assignments held fixed.  Both strategies at a sweep point share the
    trace, the link events and the fading draws, so differences come from
    the serving choice alone.  When no motifs are found the motif strategy
    falls back to the distance-based choice (with a warning).
    """
    metrics: list[MetricsRow] = []
    pooled: dict[tuple[int, str], list[float]] = defaultdict(list)
    serving_count_of_point: dict[int, int] = {}
    fallbacks = 0

    duration = cfg.window + max(cfg.service_lags)
    for rep in range(cfg.replications):
        if cfg.scenario == 1:
            trace = generate_synthetic_trace(
                cfg.n_vehicles, duration, _stream(cfg, _S_TRACE, 0, rep), cfg.trace
            )
            table, _ = _mine_influence(trace, cfg, 0, rep)
            if table is None:
                fallbacks += 1
                logger.warning(
                    "replication %d: no motifs found; motif strategy falls back "
                    "to location-based selection",
                    rep,
                )
            for pi, count in enumerate(cfg.serving_counts):
                results = _evaluate_point(cfg, trace, table, count, pi, rep)
                serving_count_of_point[count] = count
                for strategy, (objective, rates) in results.items():
                    metrics.append(MetricsRow(1, count, strategy, rep, objective))
                    pooled[(count, strategy)].extend(rates)
        else:
            for pi, set_size in enumerate(cfg.car_set_sizes):
                count = set_size - cfg.non_serving
                # Each car set is its own fleet: carving a subset out of one
                # big trace would shred the platoons it rode in.
                trace = generate_synthetic_trace(
                    set_size, duration, _stream(cfg, _S_TRACE, pi, rep), cfg.trace
                )
                table, _ = _mine_influence(trace, cfg, pi, rep)
                if table is None:
                    fallbacks += 1
                    logger.warning(
                        "replication %d, car set %d: no motifs found; motif "
                        "strategy falls back to location-based selection",
                        rep,
                        set_size,
                    )
                results = _evaluate_point(cfg, trace, table, count, pi, rep)
                serving_count_of_point[set_size] = count
                for strategy, (objective, rates) in results.items():
                    metrics.append(MetricsRow(2, set_size, strategy, rep, objective))
                    pooled[(set_size, strategy)].extend(rates)

    cdf_rows: list[CdfRow] = []
    for (point, strategy) in sorted(pooled):
        for x, frac in compute_cdf(pooled[(point, strategy)]):
            cdf_rows.append(
                CdfRow(cfg.scenario, serving_count_of_point[point], strategy, x, frac)
            )
    return ScenarioResult(
        config=cfg,
        metrics=metrics,
        cdf=cdf_rows,
        per_point_rates=dict(pooled),
        fallback_points=fallbacks,
    )


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------


def write_metrics_csv(rows: Iterable[MetricsRow], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for r in rows:
            writer.writerow(
                (r.scenario, r.sweep_point, r.strategy, r.replication, repr(r.avg_rate_bps))
            )
    return path


def write_cdf_csv(rows: Iterable[CdfRow], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CDF_HEADER)
        for r in rows:
            writer.writerow(
                (r.scenario, r.serving_count, r.strategy, repr(r.rate_bps), repr(r.cdf))
            )
    return path
