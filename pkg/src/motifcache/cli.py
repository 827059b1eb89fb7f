"""Command-line front end: ``mine``, ``place`` and ``simulate``.

Every command reads an optional YAML config (CLI flags override file keys,
file keys override defaults), writes CSV reports into the output directory,
and renders matching figures unless ``--no-figures`` is given.

Exit codes: 0 on success, 1 for validation problems, 2 for I/O problems.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .caching import (
    NoMotifsError,
    influence_scores,
    make_placement,
    evaluate_placement,
    select_serving_location,
    select_serving_motif,
)
from .config import RunConfig, describe, load_config_file, resolve_config
from .motif_miner import NullModelParams, detect_motifs
from .radio_model import GainTable
from .simulator import (
    ScenarioResult,
    generate_link_events,
    load_trace,
    run_scenario,
    write_cdf_csv,
    write_metrics_csv,
)
from .temporal_graph import decompose, load_edge_list

logger = logging.getLogger(__name__)

MOTIF_REPORT_HEADER = ("canonical_label", "k", "f", "f_ref", "sigma_ref", "z")
PLACEMENT_HEADER = ("vehicle_id", "role", "assigned_server", "score")


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    doc = load_config_file(args.config) if args.config else {}
    return resolve_config(doc, seed=args.seed, out_dir=args.out)


def _prepare_out(cfg: RunConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir


def _write_motif_report(motifs, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MOTIF_REPORT_HEADER)
        for m in motifs:
            writer.writerow(
                (m.label, m.k, m.f, repr(m.f_ref), repr(m.sigma_ref), repr(m.z))
            )
    return path


def _write_placement_report(serving, assignment, scores, vehicles, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PLACEMENT_HEADER)
        for v in sorted(vehicles):
            role = "serving" if v in serving else "nonserving"
            server = "" if v in serving else assignment[v]
            writer.writerow((v, role, server, repr(scores.get(v, 0.0))))
    return path


def cmd_mine(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    if args.dry_run:
        print(describe(cfg))
        return 0
    out = _prepare_out(cfg)
    sc = cfg.scenario
    graph = load_edge_list(args.edge_list)
    macros = decompose(graph, sc.time_constraint) if graph.edges else []
    window = graph.span if graph.edges else None
    motifs = detect_motifs(
        macros,
        sc.subgraph_size,
        sc.z_threshold,
        NullModelParams(
            samples=sc.null_samples, rng_seed=sc.master_seed, window=window
        ),
    )
    report = _write_motif_report(motifs, out / "motifs.csv")
    print(f"{len(motifs)} motif(s) -> {report}")
    if motifs and not args.no_figures:
        from .figures import plot_motif_zscores

        print(f"figure -> {plot_motif_zscores(motifs, out / 'motifs.png')}")
    return 0


def cmd_place(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    if args.dry_run:
        print(describe(cfg))
        return 0
    out = _prepare_out(cfg)
    sc = cfg.scenario
    trace = load_trace(args.trace)
    c = args.serving_count
    n = trace.n_vehicles
    if not 1 <= c < n:
        raise ValueError(f"serving count must be in [1, {n - 1}], got {c}")
    graph = generate_link_events(
        trace,
        replace(sc.events, rng_seed=(sc.master_seed, 1)),
        sc.channel,
    )
    macros = decompose(graph, sc.time_constraint)
    window = (float(trace.times[0]), float(trace.times[0]) + (sc.events.window or float(trace.times[-1] - trace.times[0]) or sc.window))
    motifs = detect_motifs(
        macros,
        sc.subgraph_size,
        sc.z_threshold,
        NullModelParams(samples=sc.null_samples, rng_seed=(sc.master_seed, 2), window=window),
    )
    positions = trace.last_positions()
    ring = trace.ring_length
    serving_location = select_serving_location(positions, c, ring_length=ring)
    scores: dict[int, float] = {}
    if motifs:
        table = influence_scores(motifs, trace.vehicle_ids)
        scores = dict(table.scores)
        serving_motif = select_serving_motif(table, c)
    else:
        logger.warning("no motifs found; motif strategy falls back to location-based selection")
        serving_motif = serving_location
    road_mid_y = sc.trace.n_lanes * sc.trace.lane_width / 2.0
    bs_position = (sc.trace.segment_length / 2.0, road_mid_y + sc.bs_distance)
    gains = GainTable.from_positions(
        positions, bs_position, sc.channel, (sc.master_seed, 3), ring_length=ring
    )
    for strategy, serving in (("motif", serving_motif), ("location", serving_location)):
        placement = make_placement(serving, positions, ring_length=ring)
        ev = evaluate_placement(
            placement, positions, sc.demand, sc.channel, bs_position, gains=gains
        )
        report = _write_placement_report(
            serving, placement.assignment, scores, trace.vehicle_ids,
            out / f"placement_{strategy}.csv",
        )
        print(
            f"{strategy}: serving {sorted(serving)} "
            f"avg rate {ev.placement.objective:.6g} bit/s -> {report}"
        )
    if not args.no_figures:
        from .figures import plot_placements

        fig = plot_placements(
            positions,
            {"motif": serving_motif, "location": serving_location},
            out / "placement.png",
        )
        print(f"figure -> {fig}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_run_config(args)
    if args.dry_run:
        print(describe(cfg))
        return 0
    out = _prepare_out(cfg)
    result: ScenarioResult = run_scenario(cfg.scenario)
    metrics = write_metrics_csv(result.metrics, out / "metrics.csv")
    cdf = write_cdf_csv(result.cdf, out / "cdf.csv")
    print(f"{len(result.metrics)} metric rows -> {metrics}")
    print(f"{len(result.cdf)} CDF rows -> {cdf}")
    if result.fallback_points:
        print(f"note: motif strategy fell back at {result.fallback_points} point(s)")
    if not args.no_figures:
        from .figures import plot_average_rates, plot_rate_cdfs

        print(f"figure -> {plot_average_rates(result.metrics, out / 'rates.png')}")
        print(f"figure -> {plot_rate_cdfs(result.cdf, out / 'cdf.png')}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motifcache",
        description="Temporal-motif mining and motif-driven cache placement for V2V fleets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="YAML config file")
        p.add_argument("--seed", type=int, default=None, help="master RNG seed (overrides config)")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides config)")
        p.add_argument(
            "--dry-run", action="store_true", help="print the resolved config and exit"
        )
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    p_mine = sub.add_parser("mine", help="mine motifs from an edge-list CSV")
    p_mine.add_argument("edge_list", type=Path, help="CSV with header src,dst,t_ms")
    common(p_mine)
    p_mine.set_defaults(func=cmd_mine)

    p_place = sub.add_parser("place", help="select serving vehicles for a trace CSV")
    p_place.add_argument("trace", type=Path, help="CSV with header t_s,vehicle_id,x_m,y_m")
    p_place.add_argument(
        "-c", "--serving-count", type=int, required=True, help="number of serving vehicles"
    )
    common(p_place)
    p_place.set_defaults(func=cmd_place)

    p_sim = sub.add_parser("simulate", help="run a full comparison sweep")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        logger.error("%s", exc)
        return 2
    except (ValueError, NoMotifsError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
