"""Temporal-graph motif mining and motif-driven V2V cache placement.

The pipeline: decompose time-stamped communication events into macroscopic
graphs, enumerate and classify their connected k-edge subgraphs, score
structures against a randomized reference ensemble, rank vehicles by motif
influence, and compare the resulting cache placement against a plain
distance-based one under a full SINR link model.
"""

__version__ = "0.1.0"

from .temporal_graph import (
    MacroscopicGraph,
    TemporalEdge,
    TemporalGraph,
    build_graph,
    build_graph_ms,
    decompose,
    load_edge_list,
    save_edge_list,
)
from .motif_miner import (
    EdgeSubgraph,
    Motif,
    NullModelParams,
    StructureClass,
    canonical_label,
    classify,
    detect_motifs,
    enumerate_subgraphs,
    randomize_reference,
    z_score,
)
from .radio_model import (
    BS_ID,
    ChannelParams,
    FadingDraw,
    GainTable,
    LinkState,
    channel_gain,
    db_to_linear,
    dbm_to_watt,
    default_proximity_cutoff,
    feasibility,
    linear_to_db,
    rate,
    sinr_bs,
    sinr_v2v,
    watt_to_dbm,
)
from .caching import (
    DemandModel,
    InfluenceTable,
    NoMotifsError,
    Placement,
    PlacementEvaluation,
    assign_requesters,
    evaluate_placement,
    influence_scores,
    influential_car,
    make_placement,
    objective_value,
    select_serving_location,
    select_serving_motif,
    zipf_pmf,
)
from .simulator import (
    CdfRow,
    EventGenParams,
    MetricsRow,
    ScenarioConfig,
    ScenarioResult,
    Trace,
    TraceParams,
    compute_cdf,
    generate_link_events,
    generate_synthetic_trace,
    load_trace,
    mean_pair_distances,
    run_scenario,
    save_trace,
    write_cdf_csv,
    write_metrics_csv,
)
from .config import RunConfig, describe, load_config_file, resolve_config
