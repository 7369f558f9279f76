"""Fragment forests and the tree convergecast/broadcast primitives."""

from __future__ import annotations

from collections import defaultdict, deque
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field

from ..engine import Message, RoundEngine
from ..graph import EdgeRef

__all__ = ["FragmentForest", "tree_convergecast", "tree_broadcast"]


@dataclass
class FragmentForest:
    """Rooted spanning forest whose trees are MST fragments.

    ``fid[u]`` is the id of u's fragment, which is the root's node id.
    """

    n: int
    fid: list[int]
    parent: list[int | None]
    children: list[list[int]]
    tree_edges: set[EdgeRef] = field(default_factory=set)

    @classmethod
    def singletons(cls, n: int) -> FragmentForest:
        return cls(n, list(range(n)), [None] * n, [[] for _ in range(n)], set())

    @classmethod
    def from_tree_edges(cls, n: int, edges: Iterable[EdgeRef | tuple[int, int]]) -> FragmentForest:
        """Root every component at its smallest node id."""
        refs = {e if isinstance(e, EdgeRef) else EdgeRef.of(*e) for e in edges}
        adj: list[list[int]] = [[] for _ in range(n)]
        for e in refs:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
        fid = [-1] * n
        parent: list[int | None] = [None] * n
        children: list[list[int]] = [[] for _ in range(n)]
        for root in range(n):
            if fid[root] >= 0:
                continue
            fid[root] = root
            queue = deque([root])
            while queue:
                x = queue.popleft()
                for y in sorted(adj[x]):
                    if fid[y] < 0:
                        fid[y] = root
                        parent[y] = x
                        children[x].append(y)
                        queue.append(y)
        return cls(n, fid, parent, children, refs)

    # -- views --------------------------------------------------------------
    @property
    def roots(self) -> list[int]:
        return [u for u in range(self.n) if self.parent[u] is None]

    @property
    def count(self) -> int:
        return len(self.roots)

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for u in range(self.n):
            out[self.fid[u]].append(u)
        return dict(out)

    def sizes(self) -> dict[int, int]:
        return {f: len(m) for f, m in self.members().items()}

    def tree_adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u in range(self.n):
            for c in self.children[u]:
                adj[u].append(c)
                adj[c].append(u)
        return adj

    def heights(self) -> dict[int, int]:
        depth = [0] * self.n
        out: dict[int, int] = {}
        for r in self.roots:
            queue = deque([r])
            h = 0
            while queue:
                x = queue.popleft()
                h = max(h, depth[x])
                for c in self.children[x]:
                    depth[c] = depth[x] + 1
                    queue.append(c)
            out[r] = h
        return out

    def diameters(self) -> dict[int, int]:
        """Hop diameter of every fragment tree (double sweep)."""
        adj = self.tree_adjacency()

        def far(src: int) -> tuple[int, int]:
            dist = {src: 0}
            queue = deque([src])
            last = src
            while queue:
                x = queue.popleft()
                last = x
                for y in adj[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        queue.append(y)
            return last, dist[last]

        return {r: far(far(r)[0])[1] for r in self.roots}

    def validate(self, mst: set[EdgeRef] | None = None) -> None:
        """Check the structural invariants; optionally that every tree edge is
        in ``mst``."""
        for u in range(self.n):
            p = self.parent[u]
            if p is None:
                if self.fid[u] != u:
                    raise AssertionError(f"root {u} carries fragment id {self.fid[u]}")
            else:
                if u not in self.children[p]:
                    raise AssertionError(f"{u} missing from children of its parent {p}")
                if self.fid[p] != self.fid[u]:
                    raise AssertionError(f"tree edge ({p}, {u}) crosses fragments")
                if EdgeRef.of(p, u) not in self.tree_edges:
                    raise AssertionError(f"parent link ({p}, {u}) is not a tree edge")
            for c in self.children[u]:
                if self.parent[c] != u:
                    raise AssertionError(f"child {c} of {u} points elsewhere")
        if len(self.tree_edges) != self.n - self.count:
            raise AssertionError("tree edge count does not match a spanning forest")
        for r in self.roots:
            seen = 0
            queue = deque([r])
            while queue:
                x = queue.popleft()
                seen += 1
                queue.extend(self.children[x])
            if seen != sum(1 for u in range(self.n) if self.fid[u] == r):
                raise AssertionError(f"fragment {r} is not a single rooted tree")
        if mst is not None and not self.tree_edges <= mst:
            raise AssertionError("a fragment tree edge is not an MST edge")


def tree_convergecast(
    engine: RoundEngine,
    forest: FragmentForest,
    values: Mapping[int, tuple],
    combine: Callable[[tuple, tuple], tuple],
    kind: str = "up",
) -> dict[int, tuple]:
    """Fold ``values`` up every fragment tree; returns ``{root: folded}``.

    A node reports to its parent once all its children have reported, so the
    cost is the largest tree height. Nodes absent from ``values`` do not
    participate (their whole fragment must be absent).
    """
    acc = dict(values)
    waiting = {u: len(forest.children[u]) for u in values}
    ready = sorted(u for u, k in waiting.items() if k == 0 and forest.parent[u] is not None)
    while ready:
        engine.transmit([(u, forest.parent[u], Message(kind, acc[u])) for u in ready])
        ready = []
        for y, inbox in sorted(engine.take_inbox().items()):
            for _x, msg in inbox:
                acc[y] = combine(acc[y], msg.payload)
                waiting[y] -= 1
            if waiting[y] == 0 and forest.parent[y] is not None:
                ready.append(y)
    return {u: acc[u] for u in values if forest.parent[u] is None}


def tree_broadcast(
    engine: RoundEngine,
    forest: FragmentForest,
    root_values: Mapping[int, tuple],
    kind: str = "down",
) -> dict[int, tuple]:
    """Push each root's value to every member of its tree."""
    got = dict(root_values)
    frontier = sorted(u for u in root_values if forest.children[u])
    while frontier:
        engine.transmit([(u, c, Message(kind, got[u])) for u in frontier for c in forest.children[u]])
        frontier = []
        for y, inbox in sorted(engine.take_inbox().items()):
            for _x, msg in inbox:
                got[y] = msg.payload
            if forest.children[y]:
                frontier.append(y)
    return got
