"""MST procedures: controlled GHS, smoothed Borůvka and the two smoothed algorithms."""

from .algorithms import (
    DEFAULT_C,
    MstResult,
    SmoothingPrecondition,
    SuperGraph,
    baseline_mst,
    build_super_graph,
    ghs_phases,
    smoothed_mst_basic,
    smoothed_mst_improved,
    smoothing_rounds,
)
from .boruvka import BoruvkaResult, BoruvkaStall, boruvka_smoothed
from .forest import FragmentForest, tree_broadcast, tree_convergecast
from .ghs import GhsStats, controlled_ghs, local_moe

__all__ = [
    "DEFAULT_C",
    "MstResult",
    "SmoothingPrecondition",
    "SuperGraph",
    "baseline_mst",
    "build_super_graph",
    "ghs_phases",
    "smoothed_mst_basic",
    "smoothed_mst_improved",
    "smoothing_rounds",
    "BoruvkaResult",
    "BoruvkaStall",
    "boruvka_smoothed",
    "FragmentForest",
    "tree_broadcast",
    "tree_convergecast",
    "GhsStats",
    "controlled_ghs",
    "local_moe",
]
