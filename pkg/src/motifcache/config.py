"""Run configuration: YAML/JSON documents resolved against full defaults.

Config files use natural units (dBm, dB, MHz as Hz, meters, seconds); the
conversion to the linear units used internally happens here and only here.
Unknown keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from .caching import DemandModel
from .radio_model import ChannelParams, db_to_linear, dbm_to_watt, linear_to_db, watt_to_dbm
from .simulator import EventGenParams, ScenarioConfig, TraceParams

__all__ = ["RunConfig", "load_config_file", "resolve_config", "describe"]


@dataclass(frozen=True)
class RunConfig:
    out_dir: Path
    scenario: ScenarioConfig


_TOP_KEYS = {"seed", "out_dir", "scenario", "channel", "demand", "events", "null_model", "trace"}
_SCENARIO_KEYS = {
    "id",
    "n_vehicles",
    "serving_counts",
    "car_set_sizes",
    "non_serving",
    "replications",
    "time_constraint_s",
    "subgraph_size",
    "z_threshold",
    "window_s",
    "service_lags_s",
    "bs_distance_m",
}
_CHANNEL_KEYS = {
    "path_loss_exponent",
    "noise_dbm",
    "bandwidth_hz",
    "p_max_dbm",
    "p_bs_w",
    "sinr_threshold_db",
    "rayleigh",
    "reference_distance_m",
}
_DEMAND_KEYS = {"catalog_size", "cached_files", "zipf_exponent"}
_EVENTS_KEYS = {"kappa", "proximity_cutoff_m", "window_s"}
_NULL_KEYS = {"samples"}
_TRACE_KEYS = {
    "lane_width_m",
    "n_lanes",
    "segment_length_m",
    "sample_dt_s",
    "speed_range_mps",
    "platoon_size",
    "platoon_spacing_m",
    "platoon_speed_jitter_mps",
}


def _check_keys(section: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ValueError(
            f"unknown config key(s) {unknown} in '{where}'; allowed: {sorted(allowed)}"
        )


def _section(doc: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    sect = doc.get(name) or {}
    if not isinstance(sect, Mapping):
        raise ValueError(f"config section '{name}' must be a mapping, got {type(sect).__name__}")
    return sect


def _pair(value: Any, where: str) -> tuple[float, float]:
    try:
        lo, hi = value
        return float(lo), float(hi)
    except (TypeError, ValueError):
        raise ValueError(f"'{where}' must be a [low, high] pair, got {value!r}")


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Parse a YAML (or JSON) config document into a plain dict."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config root must be a mapping, got {type(doc).__name__}")
    return doc


def resolve_config(
    doc: Mapping[str, Any] | None = None,
    seed: int | None = None,
    out_dir: str | Path | None = None,
) -> RunConfig:
    """Resolve a (possibly partial) config document into a full RunConfig.

    Precedence: explicit arguments (CLI flags) override document keys, which
    override the built-in defaults.
    """
    doc = doc or {}
    _check_keys(doc, _TOP_KEYS, "top level")

    sc = _section(doc, "scenario")
    _check_keys(sc, _SCENARIO_KEYS, "scenario")
    ch = _section(doc, "channel")
    _check_keys(ch, _CHANNEL_KEYS, "channel")
    dm = _section(doc, "demand")
    _check_keys(dm, _DEMAND_KEYS, "demand")
    ev = _section(doc, "events")
    _check_keys(ev, _EVENTS_KEYS, "events")
    nm = _section(doc, "null_model")
    _check_keys(nm, _NULL_KEYS, "null_model")
    tr = _section(doc, "trace")
    _check_keys(tr, _TRACE_KEYS, "trace")

    channel_defaults = ChannelParams()
    channel = ChannelParams(
        alpha=float(ch.get("path_loss_exponent", channel_defaults.alpha)),
        sigma2=dbm_to_watt(float(ch["noise_dbm"])) if "noise_dbm" in ch else channel_defaults.sigma2,
        omega=float(ch.get("bandwidth_hz", channel_defaults.omega)),
        p_max=dbm_to_watt(float(ch["p_max_dbm"])) if "p_max_dbm" in ch else channel_defaults.p_max,
        p_bs=float(ch.get("p_bs_w", channel_defaults.p_bs)),
        gamma_bar=db_to_linear(float(ch["sinr_threshold_db"]))
        if "sinr_threshold_db" in ch
        else channel_defaults.gamma_bar,
        rayleigh=bool(ch.get("rayleigh", channel_defaults.rayleigh)),
        d_ref=float(ch.get("reference_distance_m", channel_defaults.d_ref)),
    )

    demand = DemandModel(
        m_total=int(dm.get("catalog_size", 10)),
        f_cached=int(dm.get("cached_files", 3)),
        theta_r=float(dm.get("zipf_exponent", 2.0)),
    )

    # The scenario-level default events carry a concrete proximity cutoff, so
    # resolve against those rather than the bare EventGenParams defaults.
    events_defaults = ScenarioConfig().events
    kappa = ev.get("kappa", events_defaults.kappa)
    cutoff = ev.get("proximity_cutoff_m", events_defaults.proximity_cutoff)
    ev_window = ev.get("window_s", events_defaults.window)
    events = EventGenParams(
        kappa=None if kappa is None else float(kappa),
        proximity_cutoff=None if cutoff is None else float(cutoff),
        window=None if ev_window is None else float(ev_window),
    )

    trace_defaults = TraceParams()
    trace = TraceParams(
        lane_width=float(tr.get("lane_width_m", trace_defaults.lane_width)),
        n_lanes=int(tr.get("n_lanes", trace_defaults.n_lanes)),
        segment_length=float(tr.get("segment_length_m", trace_defaults.segment_length)),
        sample_dt=float(tr.get("sample_dt_s", trace_defaults.sample_dt)),
        speed_range=_pair(tr.get("speed_range_mps", trace_defaults.speed_range), "trace.speed_range_mps"),
        platoon_size_range=tuple(
            int(v) for v in _pair(tr.get("platoon_size", trace_defaults.platoon_size_range), "trace.platoon_size")
        ),
        platoon_spacing_range=_pair(
            tr.get("platoon_spacing_m", trace_defaults.platoon_spacing_range), "trace.platoon_spacing_m"
        ),
        platoon_speed_jitter=float(
            tr.get("platoon_speed_jitter_mps", trace_defaults.platoon_speed_jitter)
        ),
    )

    sc_defaults = ScenarioConfig()
    master_seed = int(seed if seed is not None else doc.get("seed", sc_defaults.master_seed))
    scenario = ScenarioConfig(
        scenario=int(sc.get("id", sc_defaults.scenario)),
        n_vehicles=int(sc.get("n_vehicles", sc_defaults.n_vehicles)),
        serving_counts=tuple(int(c) for c in sc.get("serving_counts", sc_defaults.serving_counts)),
        car_set_sizes=tuple(int(c) for c in sc.get("car_set_sizes", sc_defaults.car_set_sizes)),
        non_serving=int(sc.get("non_serving", sc_defaults.non_serving)),
        replications=int(sc.get("replications", sc_defaults.replications)),
        time_constraint=float(sc.get("time_constraint_s", sc_defaults.time_constraint)),
        subgraph_size=int(sc.get("subgraph_size", sc_defaults.subgraph_size)),
        z_threshold=float(sc.get("z_threshold", sc_defaults.z_threshold)),
        null_samples=int(nm.get("samples", sc_defaults.null_samples)),
        window=float(sc.get("window_s", sc_defaults.window)),
        service_lags=tuple(
            float(l) for l in sc.get("service_lags_s", sc_defaults.service_lags)
        ),
        bs_distance=float(sc.get("bs_distance_m", sc_defaults.bs_distance)),
        master_seed=master_seed,
        demand=demand,
        channel=channel,
        events=events,
        trace=trace,
    )

    resolved_out = Path(out_dir if out_dir is not None else doc.get("out_dir", "out"))
    return RunConfig(out_dir=resolved_out, scenario=scenario)


def describe(cfg: RunConfig) -> str:
    """Human-readable dump of every resolved value (for --dry-run)."""
    s = cfg.scenario
    ch = s.channel
    lines = [
        f"out_dir                      = {cfg.out_dir}",
        f"seed                         = {s.master_seed}",
        f"scenario.id                  = {s.scenario}",
        f"scenario.n_vehicles          = {s.n_vehicles}",
        f"scenario.serving_counts      = {list(s.serving_counts)}",
        f"scenario.car_set_sizes       = {list(s.car_set_sizes)}",
        f"scenario.non_serving         = {s.non_serving}",
        f"scenario.replications        = {s.replications}",
        f"scenario.time_constraint_s   = {s.time_constraint}",
        f"scenario.subgraph_size       = {s.subgraph_size}",
        f"scenario.z_threshold         = {s.z_threshold}",
        f"scenario.window_s            = {s.window}",
        f"scenario.service_lags_s      = {list(s.service_lags)}",
        f"scenario.bs_distance_m       = {s.bs_distance}",
        f"channel.path_loss_exponent   = {ch.alpha}",
        f"channel.noise_dbm            = {watt_to_dbm(ch.sigma2):.6g} ({ch.sigma2:.6g} W)",
        f"channel.bandwidth_hz         = {ch.omega:.6g}",
        f"channel.p_max_dbm            = {watt_to_dbm(ch.p_max):.6g} ({ch.p_max:.6g} W)",
        f"channel.p_bs_w               = {ch.p_bs}",
        f"channel.sinr_threshold_db    = {linear_to_db(ch.gamma_bar):.6g} ({ch.gamma_bar:.6g} linear)",
        f"channel.rayleigh             = {ch.rayleigh}",
        f"channel.reference_distance_m = {ch.d_ref}",
        f"demand.catalog_size          = {s.demand.m_total}",
        f"demand.cached_files          = {s.demand.f_cached}",
        f"demand.zipf_exponent         = {s.demand.theta_r}",
        f"events.kappa                 = {s.events.kappa if s.events.kappa is not None else 'auto'}",
        f"events.proximity_cutoff_m    = {s.events.proximity_cutoff if s.events.proximity_cutoff is not None else 'auto'}",
        f"events.window_s              = {s.events.window if s.events.window is not None else 'trace span'}",
        f"null_model.samples           = {s.null_samples}",
        f"trace.lane_width_m           = {s.trace.lane_width}",
        f"trace.n_lanes                = {s.trace.n_lanes}",
        f"trace.segment_length_m       = {s.trace.segment_length}",
        f"trace.sample_dt_s            = {s.trace.sample_dt}",
        f"trace.speed_range_mps        = {list(s.trace.speed_range)}",
        f"trace.platoon_size           = {list(s.trace.platoon_size_range)}",
        f"trace.platoon_spacing_m      = {list(s.trace.platoon_spacing_range)}",
        f"trace.platoon_speed_jitter_mps = {s.trace.platoon_speed_jitter}",
    ]
    return "\n".join(lines)
