"""End-to-end MST algorithms: basic smoothed, improved smoothed, baseline."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import IO

from ..engine import RoundEngine, RoundReport, SmoothedOverlay, run_smoothing
from ..graph import EdgeRef, Origin, WeightedGraph
from ..routing import Backbone, BackboneRouter, PathFailure, SuperRouter
from ..spectral import mixing_time_exact
from .boruvka import BoruvkaResult, boruvka_smoothed
from .forest import FragmentForest
from .ghs import GhsStats, controlled_ghs

__all__ = [
    "DEFAULT_C",
    "SuperGraph",
    "MstResult",
    "SmoothingPrecondition",
    "build_super_graph",
    "smoothing_rounds",
    "ghs_phases",
    "smoothed_mst_basic",
    "smoothed_mst_improved",
    "baseline_mst",
]

DEFAULT_C = 10.0


class SmoothingPrecondition(ValueError):
    pass


@dataclass
class SuperGraph:
    """Fragments contracted to super-nodes ``0..n'-1`` (ordered by root id).

    ``base_edges[(i, j)] = (w, a, b)`` is the lightest base edge between
    super-nodes ``i < j``; ``overlay_edges[(i, j)] = (a, b)`` is the smallest
    overlay pair between them.
    """

    roots: list[int]
    fragment_of: list[int]
    base_edges: dict[tuple[int, int], tuple[int, int, int]]
    overlay_edges: dict[tuple[int, int], tuple[int, int]]

    @property
    def n_prime(self) -> int:
        return len(self.roots)

    @property
    def p_prime(self) -> float:
        """Measured overlay super-edge density ``|S'| / C(n', 2)``."""
        pairs = self.n_prime * (self.n_prime - 1) // 2
        return len(self.overlay_edges) / pairs if pairs else math.nan

    @property
    def density_floor(self) -> float:
        """``ln(n') / n'``, the connectivity threshold for G(n', p)."""
        return math.log(self.n_prime) / self.n_prime if self.n_prime > 1 else 0.0

    def overlay_adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in self.roots]
        for i, j in self.overlay_edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def overlay_connected(self) -> bool:
        return Backbone(self.overlay_adjacency()).is_connected()


def build_super_graph(forest: FragmentForest, g: WeightedGraph, overlay: SmoothedOverlay) -> SuperGraph:
    roots = sorted(forest.roots)
    index = {r: i for i, r in enumerate(roots)}
    fragment_of = [index[forest.fid[u]] for u in range(g.n)]
    base: dict[tuple[int, int], tuple[int, int, int]] = {}
    for a, b, w in g.edges:
        i, j = fragment_of[a], fragment_of[b]
        if i == j:
            continue
        key, rec = ((i, j), (w, a, b)) if i < j else ((j, i), (w, b, a))
        if key not in base or rec < base[key]:
            base[key] = rec
    over: dict[tuple[int, int], tuple[int, int]] = {}
    for a, b in overlay.pairs():  # sorted, so the first hit is the smallest pair
        i, j = fragment_of[a], fragment_of[b]
        if i == j:
            continue
        key, rec = ((i, j), (a, b)) if i < j else ((j, i), (b, a))
        over.setdefault(key, rec)
    return SuperGraph(roots, fragment_of, base, over)


@dataclass
class MstResult:
    edges: set[EdgeRef]
    report: RoundReport
    boruvka: BoruvkaResult | None = None
    ghs: GhsStats | None = None
    fragments_after_ghs: int = 0
    super_graph: SuperGraph | None = None
    walk_budget: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def boruvka_iterations(self) -> int:
        return self.boruvka.iterations if self.boruvka else 0


def smoothing_rounds(n: int, epsilon: float, c: float = DEFAULT_C, improved: bool = False) -> int:
    """``ceil(c log2 n / eps)``, or ``ceil(c log2 n / sqrt(eps))`` for the improved algorithm."""
    denom = math.sqrt(epsilon) if improved else epsilon
    return math.ceil(c * math.log2(n) / denom)


def ghs_phases(epsilon: float) -> int:
    """``ceil(log2(1/sqrt(eps)))``, clamped at 0."""
    return max(0, math.ceil(math.log2(1.0 / math.sqrt(epsilon)) - 1e-12))


def _check_epsilon(epsilon: float) -> None:
    if not (0.0 < epsilon <= 1.0):
        raise SmoothingPrecondition(
            f"epsilon={epsilon} outside (0, 1]; with no smoothing use the baseline "
            "algorithm instead (the reported bound is the min over both)"
        )


def _check_overlay(engine: RoundEngine, result_edges: set[EdgeRef]) -> None:
    for e in result_edges:
        if e.origin is not Origin.BASE or not engine.base.has_edge(e.u, e.v):
            raise AssertionError(f"non-base edge {e} in MST output")


def smoothed_mst_basic(
    g: WeightedGraph,
    epsilon: float,
    seed: int,
    c: float = DEFAULT_C,
    route_setup_rounds: int = 0,
    trace: IO[str] | None = None,
    on_iteration: Callable | None = None,
) -> MstResult:
    """Smooth for ``ceil(c log2 n / eps)`` rounds, then Borůvka from singleton
    fragments, routing over R(G) node by node."""
    _check_epsilon(epsilon)
    engine = RoundEngine(g, seed, trace=trace)
    engine.begin_phase("smoothing")
    run_smoothing(engine, epsilon, smoothing_rounds(g.n, epsilon, c))
    engine.begin_phase("boruvka")
    forest = FragmentForest.singletons(g.n)
    backbone = Backbone(engine.overlay.adjacency)
    if g.n > 1 and not backbone.is_connected():
        raise PathFailure("smoothed backbone R(G) is disconnected")
    budget = mixing_time_exact(engine.overlay) if g.n > 1 else 1
    router = BackboneRouter(backbone, budget, engine, route_setup_rounds)
    bor = boruvka_smoothed(engine, forest, router, on_iteration=on_iteration)
    _check_overlay(engine, bor.edges)
    return MstResult(bor.edges, engine.report(), boruvka=bor, fragments_after_ghs=g.n, walk_budget=budget)


def smoothed_mst_improved(
    g: WeightedGraph,
    epsilon: float,
    seed: int,
    c: float = DEFAULT_C,
    route_setup_rounds: int = 0,
    trace: IO[str] | None = None,
    on_iteration: Callable | None = None,
) -> MstResult:
    """Smooth for ``ceil(c log2 n / sqrt(eps))`` rounds, grow fragments with
    ``ceil(log2(1/sqrt(eps)))`` controlled-GHS phases, then Borůvka over the
    contracted overlay R' with every super-hop expanded through fragment
    trees."""
    _check_epsilon(epsilon)
    if 1.0 / math.sqrt(epsilon) > g.n:
        return smoothed_mst_basic(g, epsilon, seed, c, route_setup_rounds, trace, on_iteration)
    engine = RoundEngine(g, seed, trace=trace)
    engine.begin_phase("smoothing")
    run_smoothing(engine, epsilon, smoothing_rounds(g.n, epsilon, c, improved=True))
    engine.begin_phase("controlled_ghs")
    stats = GhsStats()
    forest = controlled_ghs(engine, ghs_phases(epsilon), stats=stats)
    fragments = forest.count
    engine.begin_phase("boruvka")
    sg = build_super_graph(forest, g, engine.overlay)
    r_prime = Backbone(sg.overlay_adjacency())
    if sg.n_prime > 1 and not r_prime.is_connected():
        raise PathFailure("contracted overlay R' is disconnected")
    budget = mixing_time_exact(r_prime.adj) if sg.n_prime > 1 else 1
    router = SuperRouter(
        sg.fragment_of, sg.roots, forest.parent, r_prime, sg.overlay_edges, budget, engine, route_setup_rounds
    )
    bor = boruvka_smoothed(engine, forest, router, on_iteration=on_iteration)
    _check_overlay(engine, bor.edges)
    return MstResult(
        bor.edges, engine.report(), boruvka=bor, ghs=stats, fragments_after_ghs=fragments,
        super_graph=sg, walk_budget=budget,
    )


def baseline_mst(g: WeightedGraph, seed: int = 0, trace: IO[str] | None = None) -> MstResult:
    """Controlled GHS run to completion on the base graph alone."""
    engine = RoundEngine(g, seed, trace=trace)
    engine.begin_phase("ghs")
    stats = GhsStats()
    forest = controlled_ghs(engine, None, stats=stats)
    if forest.count != 1:
        raise AssertionError("baseline GHS ended with several fragments")
    return MstResult(set(forest.tree_edges), engine.report(), ghs=stats, fragments_after_ghs=1)
