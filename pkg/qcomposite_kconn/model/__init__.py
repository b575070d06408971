from .connectivity import (
    ConnectivityReport,
    analyze,
    component_count,
    is_connected,
    is_k_connected,
    local_node_connectivity,
    min_degree,
    node_connectivity,
    node_connectivity_bruteforce,
)
from .graph_model import (
    Graph,
    KeyAssignment,
    Seed,
    Stream,
    build_q_intersection_graph,
    generate_network,
    intersect,
    pairwise_overlaps,
    read_edge_list,
    sample_er_graph,
    sample_key_rings,
    write_edge_list,
)
from .probability import (
    BoundEstimate,
    CriticalParameter,
    Mode,
    ModelParams,
    RegimeDiagnostics,
    ScalingPoint,
    alpha_of,
    approx_key_share_prob,
    bloznelis_bound,
    critical_channel_prob,
    critical_edge_prob,
    critical_key_ring_size,
    critical_pool_size,
    edge_prob,
    edge_prob_from_alpha,
    key_share_prob,
    limiting_kconn_prob,
    overlap_pmf,
    regime_diagnostics,
)

__all__ = [
    "BoundEstimate",
    "ConnectivityReport",
    "CriticalParameter",
    "Graph",
    "KeyAssignment",
    "Mode",
    "ModelParams",
    "RegimeDiagnostics",
    "ScalingPoint",
    "Seed",
    "Stream",
    "alpha_of",
    "analyze",
    "approx_key_share_prob",
    "bloznelis_bound",
    "build_q_intersection_graph",
    "component_count",
    "critical_channel_prob",
    "critical_edge_prob",
    "critical_key_ring_size",
    "critical_pool_size",
    "edge_prob",
    "edge_prob_from_alpha",
    "generate_network",
    "intersect",
    "is_connected",
    "is_k_connected",
    "key_share_prob",
    "limiting_kconn_prob",
    "local_node_connectivity",
    "min_degree",
    "node_connectivity",
    "node_connectivity_bruteforce",
    "overlap_pmf",
    "pairwise_overlaps",
    "read_edge_list",
    "regime_diagnostics",
    "sample_er_graph",
    "sample_key_rings",
    "write_edge_list",
]
