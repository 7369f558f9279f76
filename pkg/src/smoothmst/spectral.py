"""Conductance and lazy-walk mixing time of the smoothed backbone R(G)."""

from __future__ import annotations

import enum
import math
import statistics
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .engine import RoundEngine, SmoothedOverlay, run_smoothing
from .graph import WeightedGraph, is_connected, path_graph

__all__ = [
    "CondMethod",
    "MixMethod",
    "SpectralReport",
    "BackboneSummary",
    "SpectralError",
    "as_adjacency",
    "conductance_exact",
    "conductance_exact_reference",
    "conductance_sweep",
    "lazy_walk_matrix",
    "mixing_time_exact",
    "spectral_report",
    "verify_backbone_lemma",
    "EXACT_CONDUCTANCE_MAX_N",
    "MIXING_CAP",
]

EXACT_CONDUCTANCE_MAX_N = 20
MIXING_CAP = 100_000
MIXING_MAX_N = 2000


class SpectralError(ValueError):
    pass


class CondMethod(enum.Enum):
    EXACT = "ExactBruteForce"
    SWEEP = "SweepApprox"


class MixMethod(enum.Enum):
    MATRIX_POWER = "MatrixPower"
    SAMPLED_WALKS = "SampledWalks"


def as_adjacency(graph) -> list[set[int]]:
    """Accept a WeightedGraph, a SmoothedOverlay or adjacency sets; multi-edges
    are already collapsed by every one of these."""
    if isinstance(graph, WeightedGraph):
        return graph.neighbor_sets()
    if isinstance(graph, SmoothedOverlay):
        return [set(s) for s in graph.adjacency]
    return [set(s) for s in graph]


def _edge_arrays(adj: Sequence[set[int]]) -> tuple[np.ndarray, np.ndarray]:
    pairs = [(u, v) for u, row in enumerate(adj) for v in row if u < v]
    if not pairs:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    arr = np.array(pairs, dtype=np.int64)
    return arr[:, 0], arr[:, 1]


def conductance_exact(graph) -> float:
    """Minimum of ``|boundary(S)| / min(Vol S, Vol S-bar)`` over nonempty ``S``
    with ``|S| <= n/2``, by enumeration. A disconnected graph scores 0.

    Raises:
        SpectralError: if ``n > 20``.
    """
    adj = as_adjacency(graph)
    n = len(adj)
    if n > EXACT_CONDUCTANCE_MAX_N:
        raise SpectralError(f"exact conductance limited to n <= {EXACT_CONDUCTANCE_MAX_N}, got {n}")
    if n < 2:
        raise SpectralError("conductance needs at least two nodes")
    us, vs = _edge_arrays(adj)
    if us.size == 0:
        return 0.0
    masks = np.arange(1, 1 << n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n, dtype=np.int64)) & 1
    size = bits.sum(axis=1)
    keep = size <= n // 2
    masks, bits = masks[keep], bits[keep]
    deg = np.array([len(r) for r in adj], dtype=np.int64)
    vol_s = bits @ deg
    vol_rest = deg.sum() - vol_s
    cut = np.zeros(masks.size, dtype=np.int64)
    for u, v in zip(us.tolist(), vs.tolist()):
        cut += ((masks >> u) ^ (masks >> v)) & 1
    denom = np.minimum(vol_s, vol_rest)
    if np.any(denom == 0):
        return 0.0
    return float((cut / denom).min())


def conductance_exact_reference(graph) -> float:
    """Independent brute force: iterate subsets via itertools, recompute
    volumes and boundary from scratch. Slow; used as a test oracle."""
    from itertools import combinations

    adj = as_adjacency(graph)
    n = len(adj)
    deg = [len(r) for r in adj]
    total = sum(deg)
    best = math.inf
    for k in range(n // 2, 0, -1):
        for subset in combinations(range(n - 1, -1, -1), k):
            s = set(subset)
            vol = sum(deg[u] for u in s)
            boundary = sum(1 for u in s for v in adj[u] if v not in s)
            denom = min(vol, total - vol)
            if denom == 0:
                return 0.0
            best = min(best, boundary / denom)
    return best


def conductance_sweep(graph) -> float:
    """Best prefix cut along the second eigenvector of the normalized
    Laplacian (the Fiedler sweep). An estimate, never a certificate: it is an
    upper bound on the true conductance."""
    adj = as_adjacency(graph)
    n = len(adj)
    if n < 2:
        raise SpectralError("conductance needs at least two nodes")
    if not is_connected(n, adj):
        return 0.0
    deg = np.array([len(r) for r in adj], dtype=float)
    a = np.zeros((n, n))
    for u, row in enumerate(adj):
        a[u, list(row)] = 1.0
    dinv = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - dinv[:, None] * a * dinv[None, :]
    _, vecs = np.linalg.eigh(lap)
    order = np.argsort(vecs[:, 1] * dinv, kind="stable")
    total = deg.sum()
    in_s = np.zeros(n, dtype=bool)
    vol = 0.0
    cut = 0
    best = math.inf
    for k, u in enumerate(order[:-1].tolist(), start=1):
        inside = sum(1 for v in adj[u] if in_s[v])
        cut += len(adj[u]) - 2 * inside
        in_s[u] = True
        vol += deg[u]
        denom = min(vol, total - vol)
        best = min(best, cut / denom)
    return float(best)


def lazy_walk_matrix(graph) -> np.ndarray:
    """Row-stochastic lazy walk: stay with probability 1/2, otherwise move to
    a uniform neighbour."""
    adj = as_adjacency(graph)
    n = len(adj)
    p = np.eye(n) * 0.5
    for u, row in enumerate(adj):
        if row:
            p[u, list(row)] = 0.5 / len(row)
        else:
            p[u, u] = 1.0
    return p


def mixing_time_exact(graph, cap: int = MIXING_CAP) -> int:
    """Least ``t >= 1`` with ``|P^t(v, u) - pi(u)| <= pi(u) / n`` for every start
    ``v`` and target ``u``, where ``pi(u) = d(u) / 2m``.

    Found by squaring (``P, P^2, P^4, ...``) until the bound holds, then a
    binary search inside the last doubling interval.

    Raises:
        SpectralError: disconnected input, ``n > 2000``, or no convergence by ``cap``.
    """
    adj = as_adjacency(graph)
    n = len(adj)
    if n == 1:
        return 1
    if n > MIXING_MAX_N:
        raise SpectralError(f"matrix powering limited to n <= {MIXING_MAX_N}")
    if not is_connected(n, adj):
        raise SpectralError("mixing time is undefined on a disconnected graph")
    p = lazy_walk_matrix(adj)
    deg = np.array([len(r) for r in adj], dtype=float)
    pi = deg / deg.sum()
    tol = pi / n

    def ok(m: np.ndarray) -> bool:
        return bool(np.all(np.abs(m - pi[None, :]) <= tol[None, :]))

    if ok(p):
        return 1
    # For a lazy reversible walk the worst relative deviation sits on the
    # diagonal and is non-increasing in t, so the predicate is monotone and
    # a binary search over powers of P is exact.
    powers = [p]  # powers[k] = P^(2^k); the bound fails at 2^(len-1)
    while True:
        lo = 1 << (len(powers) - 1)
        if lo >= cap:
            raise SpectralError(f"lazy walk did not mix within {cap} steps")
        nxt = powers[-1] @ powers[-1]
        if ok(nxt):
            break
        powers.append(nxt)
    cur_t, cur = lo, powers[-1]
    for k in range(len(powers) - 2, -1, -1):
        cand = cur @ powers[k]
        if not ok(cand):
            cur_t, cur = cur_t + (1 << k), cand
    t = cur_t + 1
    if t > cap:
        raise SpectralError(f"lazy walk did not mix within {cap} steps")
    return t


@dataclass
class SpectralReport:
    n: int
    m: int
    conductance: float
    cond_method: CondMethod
    mixing_time: int
    mix_method: MixMethod = MixMethod.MATRIX_POWER


def spectral_report(graph) -> SpectralReport:
    adj = as_adjacency(graph)
    n = len(adj)
    m = sum(len(r) for r in adj) // 2
    if n <= EXACT_CONDUCTANCE_MAX_N:
        cond, method = conductance_exact(adj), CondMethod.EXACT
    else:
        cond, method = conductance_sweep(adj), CondMethod.SWEEP
    return SpectralReport(n, m, cond, method, mixing_time_exact(adj))


@dataclass
class BackboneSummary:
    n: int
    epsilon: float
    rounds: int
    reports: dict[int, SpectralReport] = field(default_factory=dict)
    failures: list[int] = field(default_factory=list)
    initiation_violations: list[int] = field(default_factory=list)
    initiations_range: tuple[int, int] = (0, 0)
    degree_range: tuple[int, int] = (0, 0)

    def _stat(self, attr: str) -> tuple[float, float, float]:
        vals = [getattr(r, attr) for r in self.reports.values()]
        if not vals:
            return (math.nan, math.nan, math.nan)
        return (min(vals), statistics.median(vals), max(vals))

    @property
    def conductance(self) -> tuple[float, float, float]:
        """(min, median, max) over successful seeds."""
        return self._stat("conductance")

    @property
    def mixing_time(self) -> tuple[float, float, float]:
        return self._stat("mixing_time")

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_backbone_lemma(
    n: int,
    epsilon: float,
    seeds: int | Sequence[int],
    c: float = 10.0,
    rounds: int | None = None,
    graph: WeightedGraph | None = None,
    alpha: float = 0.5,
) -> BackboneSummary:
    """Smooth ``graph`` (a path on ``n`` nodes by default) for
    ``ceil(c * log2(n) / epsilon)`` rounds per seed and measure R(G).

    Seeds whose overlay is disconnected or empty are listed in ``failures``.
    Seeds where some node's initiation count leaves
    ``[(1-alpha) c log2 n, (1+alpha) c log2 n]`` are listed in
    ``initiation_violations`` (only meaningful with the default round count).
    """
    if rounds is None:
        if epsilon <= 0:
            raise ValueError("epsilon must be positive when rounds is derived")
        rounds = math.ceil(c * math.log2(n) / epsilon)
    g = graph if graph is not None else path_graph(n)
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    out = BackboneSummary(n, epsilon, rounds)
    target = c * math.log2(n)
    lo_r, hi_r = (1 - alpha) * target, (1 + alpha) * target
    init_min, init_max, deg_min, deg_max = math.inf, -math.inf, math.inf, -math.inf
    for seed in seed_list:
        engine = RoundEngine(g, seed)
        overlay = run_smoothing(engine, epsilon, rounds)
        r = overlay.initiations
        d = overlay.degrees()
        init_min, init_max = min(init_min, int(r.min())), max(init_max, int(r.max()))
        deg_min, deg_max = min(deg_min, int(d.min())), max(deg_max, int(d.max()))
        if r.min() < lo_r or r.max() > hi_r:
            out.initiation_violations.append(seed)
        if len(overlay) == 0 or not overlay.is_connected():
            out.failures.append(seed)
            continue
        out.reports[seed] = spectral_report(overlay)
    if seed_list:
        out.initiations_range = (int(init_min), int(init_max))
        out.degree_range = (int(deg_min), int(deg_max))
    return out
