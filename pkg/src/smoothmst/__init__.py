"""Simulator and algorithms for minimum spanning trees on epsilon-smoothed
networks in the CONGEST model."""

from .engine import (
    BandwidthViolation,
    Message,
    RoundEngine,
    RoundReport,
    SmoothedOverlay,
    UnknownEdge,
    run_smoothing,
    smoothing_step,
)
from .graph import (
    NON_CANDIDATE,
    EdgeRef,
    Origin,
    WeightedGraph,
    diameter,
    generate_lower_bound_graph,
    generate_random_connected,
    kruskal_mst,
)
from .mst import baseline_mst, smoothed_mst_basic, smoothed_mst_improved

__version__ = "0.1.0"

__all__ = [
    "BandwidthViolation",
    "Message",
    "RoundEngine",
    "RoundReport",
    "SmoothedOverlay",
    "UnknownEdge",
    "run_smoothing",
    "smoothing_step",
    "NON_CANDIDATE",
    "EdgeRef",
    "Origin",
    "WeightedGraph",
    "diameter",
    "generate_lower_bound_graph",
    "generate_random_connected",
    "kruskal_mst",
    "baseline_mst",
    "smoothed_mst_basic",
    "smoothed_mst_improved",
]
