"""Lower-bound apparatus: set-disjointness instances on G(x, y), the
spanning-subgraph to MST reduction, and the smoothed simulation budget."""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .graph import (
    WeightedGraph,
    generate_lower_bound_graph,
    is_connected,
    kruskal_mst,
    lower_bound_layout,
    parse_bits,
)

__all__ = [
    "SdInstance",
    "CssInstance",
    "encode_sd",
    "spanning_connected",
    "css_to_mst_weights",
    "css_threshold",
    "decide_css_via_mst",
    "BudgetConstants",
    "SimulationBudget",
    "simulation_budget",
    "crossing_edges_expectation",
    "crossing_edges_aggregated",
    "monte_carlo_crossings",
]


@dataclass(frozen=True)
class SdInstance:
    x: tuple[int, ...]
    y: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ValueError(f"|x| = {len(self.x)} differs from |y| = {len(self.y)}")

    @classmethod
    def from_strings(cls, x: str, y: str) -> SdInstance:
        return cls(tuple(parse_bits(x)), tuple(parse_bits(y)))

    @property
    def disjoint(self) -> bool:
        return not any(a and b for a, b in zip(self.x, self.y))


@dataclass(frozen=True)
class CssInstance:
    g: WeightedGraph
    h: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for a, b in self.h:
            if a >= b or not self.g.has_edge(a, b):
                raise ValueError(f"H edge ({a}, {b}) is not a canonical edge of g")

    def incident_flags(self, u: int) -> dict[int, bool]:
        """What node ``u`` knows: H-membership of each incident edge."""
        return {v: (min(u, v), max(u, v)) in self.h for v in self.g.neighbors(u)}


def encode_sd(instance: SdInstance, weight_seed: int = 0) -> CssInstance:
    """H = tree edges, path edges, and whichever s/t spokes the bits keep."""
    k = len(instance.x)
    layout = lower_bound_layout(k)
    g = generate_lower_bound_graph(k, instance.x, instance.y, weight_seed)
    h = layout.tree_edges() + layout.path_edges() + layout.s_spokes(instance.x) + layout.t_spokes(instance.y)
    return CssInstance(g, frozenset((min(a, b), max(a, b)) for a, b in h))


def spanning_connected(n: int, h: Iterable[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in h:
        adj[a].append(b)
        adj[b].append(a)
    return is_connected(n, adj)


def _scale(g: WeightedGraph) -> int:
    # per-edge rank perturbations total < m < scale/2
    return 2 * g.n * max(g.m, 1)


def css_to_mst_weights(instance: CssInstance) -> WeightedGraph:
    """H edges get weight ~1 and the others ~n, as scaled integers.

    With ``S = 2 n m``, edge ``i`` (in ``g.edges`` order) gets ``S + i`` if in
    H and ``n S + i`` otherwise. Perturbations sum to less than ``S / 2``, so
    the MST weighs under ``n S`` exactly when H is spanning and connected.
    """
    g = instance.g
    s = _scale(g)
    weights = [(s if (a, b) in instance.h else g.n * s) + i for i, (a, b, _) in enumerate(g.edges)]
    return g.reweighted(weights)


def css_threshold(g: WeightedGraph) -> int:
    return g.n * _scale(g)


def decide_css_via_mst(instance: CssInstance) -> bool:
    """Accept iff the MST of the reweighted graph weighs less than ``n`` units."""
    rw = css_to_mst_weights(instance)
    return rw.total_weight(kruskal_mst(rw)) < css_threshold(rw)


@dataclass(frozen=True)
class BudgetConstants:
    """Constants standing in for the Theta terms of the budget inequality."""

    quadratic: float = 1.0  # multiplies eps * delta^2 * sqrt(n)
    linear: float = 1.0  # multiplies delta * log2 n
    rhs: float = 1.0  # multiplies sqrt(n) / B


@dataclass(frozen=True)
class SimulationBudget:
    delta: int  # largest integer satisfying the inequality
    delta_real: float  # positive root of the quadratic
    closed_form: float  # 1 / sqrt(eps * log2 n)

    @property
    def ratio(self) -> float:
        return self.delta_real / self.closed_form


def simulation_budget(
    epsilon: float, n: int, bandwidth: int, constants: BudgetConstants = BudgetConstants()
) -> SimulationBudget:
    """Largest ``delta`` with ``eps delta^2 sqrt(n) + delta log2 n <= sqrt(n) / B``."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if n < 2 or bandwidth < 1:
        raise ValueError("need n >= 2 and B >= 1")
    a = constants.quadratic * epsilon * math.sqrt(n)
    b = constants.linear * math.log2(n)
    c = constants.rhs * math.sqrt(n) / bandwidth
    root = (-b + math.sqrt(b * b + 4 * a * c)) / (2 * a)
    delta = math.floor(root)
    # guard floating error at the boundary
    while delta > 0 and a * delta * delta + b * delta > c:
        delta -= 1
    while a * (delta + 1) ** 2 + b * (delta + 1) <= c:
        delta += 1
    return SimulationBudget(delta, root, 1.0 / math.sqrt(epsilon * math.log2(n)))


def crossing_edges_expectation(epsilon: float, n: int, i: float) -> float:
    """Expected smoothed edges crossing a cut of ``i sqrt(n)`` nodes in one
    round: ``2 eps (i sqrt n)(n - i sqrt n) / n``."""
    side = i * math.sqrt(n)
    if not (0 <= side <= n + 1e-9):
        raise ValueError("need 0 <= i * sqrt(n) <= n")
    return 2 * epsilon * side * (n - side) / n


def crossing_edges_aggregated(epsilon: float, n: int, delta: int) -> float:
    """Upper-bounding form over ``delta`` rounds, with ``i`` replaced by
    ``delta``: ``eps * delta * sqrt(n)`` per round."""
    return epsilon * delta * math.sqrt(n)


def monte_carlo_crossings(
    epsilon: float, n: int, side: int, rounds: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-round counts of smoothing picks crossing the cut ``[0, side)``,
    simulated directly (self-picks discarded, as in the engine)."""
    out = np.empty(rounds, dtype=np.int64)
    ids = np.arange(n)
    for r in range(rounds):
        coins = rng.random(n) < epsilon
        targets = rng.integers(0, n, size=n)
        src, dst = ids[coins], targets[coins]
        out[r] = int(np.count_nonzero((src < side) != (dst < side)))
    return out
