"""Weighted input graphs, generators and the sequential MST oracle.

A :class:`WeightedGraph` is the immutable base topology G(V, E). Weights are
pairwise-distinct non-negative integers below ``n**4`` so the MST is unique
and every weight fits in O(log n) bits. Smoothed communication edges never
live here; see :class:`smoothmst.engine.SmoothedOverlay`.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

__all__ = [
    "NON_CANDIDATE",
    "Origin",
    "EdgeRef",
    "WeightedGraph",
    "GraphError",
    "GraphGenerationError",
    "UnionFind",
    "generate_random_connected",
    "generate_lower_bound_graph",
    "lower_bound_layout",
    "LowerBoundLayout",
    "kruskal_mst",
    "mst_weight",
    "diameter",
    "bfs_distances",
    "is_connected",
    "path_graph",
    "cycle_graph",
    "complete_graph",
    "parse_bits",
    "format_bits",
    "write_graph",
    "read_graph",
]

#: Weight carried by smoothed edges. Compares greater than every finite weight.
NON_CANDIDATE = math.inf

CONNECT_RESAMPLE_BUDGET = 100


class GraphError(ValueError):
    """Raised when a graph violates a WeightedGraph invariant."""


class GraphGenerationError(RuntimeError):
    """Raised when a generator cannot produce a valid instance within budget."""


class Origin(enum.Enum):
    BASE = "base"
    SMOOTHED = "smoothed"


@dataclass(frozen=True, order=True)
class EdgeRef:
    """Canonical undirected edge key: ``u < v`` plus where the edge came from."""

    u: int
    v: int
    origin: Origin = Origin.BASE

    def __post_init__(self) -> None:
        if self.u >= self.v:
            raise GraphError(f"EdgeRef endpoints must satisfy u < v, got ({self.u}, {self.v})")

    @classmethod
    def of(cls, a: int, b: int, origin: Origin = Origin.BASE) -> EdgeRef:
        return cls(a, b, origin) if a < b else cls(b, a, origin)

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.u, self.v)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.components = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.components -= 1
        return True


class WeightedGraph:
    """Undirected, connected, simple graph with distinct integer weights.

    Args:
        n: number of nodes; node ids are ``0..n-1``.
        edges: iterable of ``(u, v, w)`` triples in any orientation.

    Raises:
        GraphError: on self-loops, duplicate pairs, repeated weights, weights
            outside ``[0, n**4)``, or a disconnected topology.
    """

    __slots__ = ("n", "edges", "adjacency", "_weight", "_index")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, int]]):
        if n < 1:
            raise GraphError("a graph needs at least one node")
        canon: list[tuple[int, int, int]] = []
        seen_pairs: set[tuple[int, int]] = set()
        seen_weights: set[int] = set()
        limit = n**4
        for u, v, w in edges:
            u, v, w = int(u), int(v), int(w)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            a, b = (u, v) if u < v else (v, u)
            if (a, b) in seen_pairs:
                raise GraphError(f"duplicate edge ({a}, {b})")
            if w in seen_weights:
                raise GraphError(f"weight {w} is not unique")
            if not (0 <= w < limit):
                raise GraphError(f"weight {w} outside [0, n^4 = {limit})")
            seen_pairs.add((a, b))
            seen_weights.add(w)
            canon.append((a, b, w))
        self.n = n
        self.edges: tuple[tuple[int, int, int], ...] = tuple(canon)
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for a, b, w in canon:
            adjacency[a].append((b, w))
            adjacency[b].append((a, w))
        self.adjacency: tuple[tuple[tuple[int, int], ...], ...] = tuple(
            tuple(sorted(row)) for row in adjacency
        )
        self._weight = {(a, b): w for a, b, w in canon}
        self._index = {(a, b): i for i, (a, b, _) in enumerate(canon)}
        if not is_connected(n, self.neighbor_sets()):
            raise GraphError("graph is not connected")

    @property
    def m(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> list[int]:
        return [v for v, _ in self.adjacency[u]]

    def neighbor_sets(self) -> list[set[int]]:
        return [{v for v, _ in row} for row in self.adjacency]

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def weight(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        try:
            return self._weight[key]
        except KeyError:
            raise GraphError(f"({u}, {v}) is not an edge") from None

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._weight

    def edge_refs(self) -> set[EdgeRef]:
        return {EdgeRef(a, b) for a, b, _ in self.edges}

    def total_weight(self, refs: Iterable[EdgeRef]) -> int:
        return sum(self._weight[r.endpoints] for r in refs)

    def reweighted(self, weights: Sequence[int]) -> WeightedGraph:
        """Same topology, new weights aligned with ``self.edges``."""
        return WeightedGraph(self.n, ((a, b, w) for (a, b, _), w in zip(self.edges, weights)))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, WeightedGraph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m})"


def is_connected(n: int, adjacency: Sequence[Iterable[int]]) -> bool:
    if n <= 1:
        return True
    return len(bfs_distances(adjacency, 0)) == n


def bfs_distances(adjacency: Sequence[Iterable[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        dx = dist[x] + 1
        for y in adjacency[x]:
            if y not in dist:
                dist[y] = dx
                queue.append(y)
    return dist


def diameter(g: WeightedGraph) -> int:
    """Unweighted diameter: max over node pairs of BFS hop distance."""
    if g.n == 1:
        return 0
    a = np.array([e[0] for e in g.edges], dtype=np.int64)
    b = np.array([e[1] for e in g.edges], dtype=np.int64)
    mat = coo_matrix((np.ones(a.size), (a, b)), shape=(g.n, g.n)).tocsr()
    dist = shortest_path(mat, directed=False, unweighted=True)
    return int(dist.max())


def kruskal_mst(g: WeightedGraph) -> set[EdgeRef]:
    uf = UnionFind(g.n)
    tree: set[EdgeRef] = set()
    for a, b, _ in sorted(g.edges, key=lambda e: e[2]):
        if uf.union(a, b):
            tree.add(EdgeRef(a, b))
            if len(tree) == g.n - 1:
                break
    return tree


def mst_weight(g: WeightedGraph) -> int:
    return g.total_weight(kruskal_mst(g))


# ---------------------------------------------------------------------------
# generators


def generate_random_connected(n: int, p: float, seed: int) -> WeightedGraph:
    """Erdős–Rényi G(n, p) conditioned on connectivity.

    Resamples (from one seeded stream) until connected, at most
    ``CONNECT_RESAMPLE_BUDGET`` times. Weights are a random permutation of
    ``1..m``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not (0.0 < p <= 1.0):
        raise ValueError("p must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    iu, iv = np.triu_indices(n, k=1)
    for _ in range(CONNECT_RESAMPLE_BUDGET):
        keep = rng.random(iu.size) < p
        us, vs = iu[keep], iv[keep]
        if us.size < n - 1:
            continue
        adjacency: list[list[int]] = [[] for _ in range(n)]
        for a, b in zip(us.tolist(), vs.tolist()):
            adjacency[a].append(b)
            adjacency[b].append(a)
        if not is_connected(n, adjacency):
            continue
        weights = rng.permutation(us.size) + 1
        return WeightedGraph(n, zip(us.tolist(), vs.tolist(), weights.tolist()))
    raise GraphGenerationError(
        f"no connected G({n}, {p}) sample in {CONNECT_RESAMPLE_BUDGET} attempts"
    )


def path_graph(n: int, weights: Sequence[int] | None = None) -> WeightedGraph:
    ws = list(weights) if weights is not None else list(range(1, n))
    return WeightedGraph(n, ((i, i + 1, ws[i]) for i in range(n - 1)))


def cycle_graph(n: int) -> WeightedGraph:
    return WeightedGraph(n, [(i, (i + 1) % n, i + 1) for i in range(n)])


def complete_graph(n: int) -> WeightedGraph:
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    return WeightedGraph(n, ((a, b, i + 1) for i, (a, b) in enumerate(pairs)))


@dataclass(frozen=True)
class LowerBoundLayout:
    """Node numbering of the lower-bound family G(x, y).

    Path ``i`` node ``j`` is ``i * sqrt_n + j``. Tree nodes follow, in heap
    order (root first); the leaves are the last ``sqrt_n`` tree nodes, leaf
    ``j`` lining up with column ``j`` of every path. ``s`` is leaf 0 and ``t``
    is leaf ``sqrt_n - 1``.
    """

    sqrt_n: int

    @property
    def path_nodes(self) -> int:
        return self.sqrt_n * self.sqrt_n

    @property
    def tree_nodes(self) -> int:
        return 2 * self.sqrt_n - 1

    @property
    def n(self) -> int:
        return self.path_nodes + self.tree_nodes

    def path_node(self, i: int, j: int) -> int:
        return i * self.sqrt_n + j

    def tree_node(self, heap_index: int) -> int:
        return self.path_nodes + heap_index

    def leaf(self, j: int) -> int:
        return self.tree_node(self.sqrt_n - 1 + j)

    @property
    def s(self) -> int:
        return self.leaf(0)

    @property
    def t(self) -> int:
        return self.leaf(self.sqrt_n - 1)

    def tree_edges(self) -> list[tuple[int, int]]:
        return [
            (self.tree_node((h - 1) // 2), self.tree_node(h)) for h in range(1, self.tree_nodes)
        ]

    def path_edges(self) -> list[tuple[int, int]]:
        k = self.sqrt_n
        return [(self.path_node(i, j), self.path_node(i, j + 1)) for i in range(k) for j in range(k - 1)]

    def fixed_spokes(self) -> list[tuple[int, int]]:
        k = self.sqrt_n
        return [(self.leaf(j), self.path_node(i, j)) for j in range(1, k - 1) for i in range(k)]

    def s_spokes(self, x: Sequence[int]) -> list[tuple[int, int]]:
        return [(self.s, self.path_node(i, 0)) for i, bit in enumerate(x) if bit == 0]

    def t_spokes(self, y: Sequence[int]) -> list[tuple[int, int]]:
        k = self.sqrt_n
        return [(self.t, self.path_node(i, k - 1)) for i, bit in enumerate(y) if bit == 0]


def lower_bound_layout(sqrt_n: int) -> LowerBoundLayout:
    if sqrt_n < 2 or sqrt_n & (sqrt_n - 1):
        raise ValueError(f"sqrt_n must be a power of two >= 2, got {sqrt_n}")
    return LowerBoundLayout(sqrt_n)


def _check_bits(name: str, bits: Sequence[int], length: int) -> list[int]:
    out = [int(b) for b in bits]
    if len(out) != length:
        raise ValueError(f"|{name}| = {len(out)} but sqrt_n = {length}")
    if any(b not in (0, 1) for b in out):
        raise ValueError(f"{name} must be a 0/1 vector")
    return out


def generate_lower_bound_graph(
    sqrt_n: int, x: Sequence[int] | str, y: Sequence[int] | str, weight_seed: int = 0
) -> WeightedGraph:
    """Build G(x, y): ``sqrt_n`` paths, a full binary tree over the path
    columns, fixed spokes from every interior leaf, and bit-controlled spokes
    at ``s`` (x_i = 0) and ``t`` (y_i = 0).

    Weights are a permutation of ``1..m`` drawn from ``weight_seed``, so the
    result is a deterministic function of the arguments.
    """
    layout = lower_bound_layout(sqrt_n)
    xs = _check_bits("x", parse_bits(x) if isinstance(x, str) else x, sqrt_n)
    ys = _check_bits("y", parse_bits(y) if isinstance(y, str) else y, sqrt_n)
    pairs = (
        layout.tree_edges()
        + layout.path_edges()
        + layout.fixed_spokes()
        + layout.s_spokes(xs)
        + layout.t_spokes(ys)
    )
    weights = np.random.default_rng(weight_seed).permutation(len(pairs)) + 1
    return WeightedGraph(layout.n, ((a, b, int(w)) for (a, b), w in zip(pairs, weights)))


# ---------------------------------------------------------------------------
# text format: header "n m", then "u v w" per line; overlay edges use w=inf


def parse_bits(text: str) -> list[int]:
    text = text.strip()
    if any(ch not in "01" for ch in text):
        raise ValueError(f"bit vector must be a 0/1 string, got {text!r}")
    return [int(ch) for ch in text]


def format_bits(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def write_graph(
    path: str | Path,
    g: WeightedGraph,
    overlay: Iterable[tuple[int, int]] = (),
    h_edges: set[tuple[int, int]] | None = None,
) -> None:
    """Write ``g`` (and optionally overlay pairs) in the line-oriented format.

    With ``h_edges`` given, each base line carries a fourth ``#H`` column of
    0/1 membership flags.
    """
    overlay = list(overlay)
    lines = [f"{g.n} {g.m + len(overlay)}"]
    for a, b, w in g.edges:
        if h_edges is None:
            lines.append(f"{a} {b} {w}")
        else:
            lines.append(f"{a} {b} {w} {int((a, b) in h_edges)}")
    for a, b in overlay:
        lines.append(f"{min(a, b)} {max(a, b)} inf")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph(
    path: str | Path,
) -> tuple[WeightedGraph, list[tuple[int, int]], set[tuple[int, int]] | None]:
    """Inverse of :func:`write_graph`: returns (graph, overlay pairs, H or None)."""
    raw = [ln.split() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    rows = [r for r in raw if r and not r[0].startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise GraphError(f"{path}: expected header 'n m'")
    n, m = int(rows[0][0]), int(rows[0][1])
    if len(rows) - 1 != m:
        raise GraphError(f"{path}: header says {m} edges, found {len(rows) - 1}")
    base: list[tuple[int, int, int]] = []
    overlay: list[tuple[int, int]] = []
    h: set[tuple[int, int]] | None = None
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) not in (3, 4):
            raise GraphError(f"{path}:{lineno}: expected 'u v w' or 'u v w h'")
        a, b = int(row[0]), int(row[1])
        if row[2] == "inf":
            overlay.append((min(a, b), max(a, b)))
            continue
        base.append((a, b, int(row[2])))
        if len(row) == 4:
            h = h if h is not None else set()
            if row[3] == "1":
                h.add((min(a, b), max(a, b)))
    return WeightedGraph(n, base), overlay, h
