"""Routing over the smoothed backbone.

Paths are lazy random walks of length about one mixing time, spliced to the
destination along a shortest path. Delivery uses random initial delays and
store-and-forward queues (one message per directed edge per round), planned
offline and then replayed message-by-message on a :class:`RoundEngine`.

k-aggregate routing combines in-flight messages bound for the same leader;
:func:`downcast` mirrors a recorded upcast schedule to push one value per
leader back to every member.
"""

from __future__ import annotations

import enum
import heapq
import math
from collections import Counter, defaultdict
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .engine import Message, RoundEngine

__all__ = [
    "PathFailure",
    "MissingHopTable",
    "AggregationError",
    "AggregateFn",
    "Partition",
    "RoutingInstance",
    "RoutingPaths",
    "Backbone",
    "build_paths",
    "keyed_congestion",
    "Schedule",
    "plan_schedule",
    "RouteStats",
    "schedule_and_deliver",
    "HopTable",
    "k_aggregate_route",
    "downcast",
    "BackboneRouter",
    "SuperRouter",
    "PATH_RETRIES",
    "SCHEDULE_RETRIES",
]

PATH_RETRIES = 8
SCHEDULE_RETRIES = 5


class PathFailure(RuntimeError):
    pass


class MissingHopTable(RuntimeError):
    pass


class AggregationError(AssertionError):
    pass


class AggregateFn(enum.Enum):
    """Separable aggregate over records. Min and Max compare tuples such as
    ``(weight, u, v)``; ``None`` is the identity. Sum adds integers."""

    MIN = "min"
    MAX = "max"
    SUM = "sum"

    @property
    def identity(self) -> Any:
        return 0 if self is AggregateFn.SUM else None

    def combine(self, a: Any, b: Any) -> Any:
        if self is AggregateFn.SUM:
            return a + b
        if a is None:
            return b
        if b is None:
            return a
        return min(a, b) if self is AggregateFn.MIN else max(a, b)

    def fold(self, values) -> Any:
        acc = self.identity
        for v in values:
            acc = self.combine(acc, v)
        return acc

    def encode(self, value: Any) -> tuple:
        if self is AggregateFn.SUM:
            return (int(value),)
        return () if value is None else tuple(value)

    def decode(self, fields: tuple) -> Any:
        if self is AggregateFn.SUM:
            return fields[0]
        return tuple(fields) if fields else None


@dataclass(frozen=True)
class Partition:
    """``assignment[u]`` is u's part; ``leaders[i]`` is the leader of part ``i``."""

    assignment: tuple[int, ...]
    leaders: tuple[int, ...]

    def __post_init__(self) -> None:
        k = len(self.leaders)
        for u, part in enumerate(self.assignment):
            if not (0 <= part < k):
                raise ValueError(f"node {u} assigned to missing part {part}")
        for i, lead in enumerate(self.leaders):
            if self.assignment[lead] != i:
                raise ValueError(f"leader {lead} of part {i} is not a member of it")

    @classmethod
    def from_leader_map(cls, leader_of: Sequence[int]) -> Partition:
        """Build from ``leader_of[u]`` (the leader node of u's part)."""
        leaders = sorted(set(leader_of))
        index = {lead: i for i, lead in enumerate(leaders)}
        return cls(tuple(index[leader_of[u]] for u in range(len(leader_of))), tuple(leaders))

    def leader_of(self, u: int) -> int:
        return self.leaders[self.assignment[u]]

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.leaders]
        for u, part in enumerate(self.assignment):
            out[part].append(u)
        return out


@dataclass(frozen=True)
class RoutingInstance:
    pairs: tuple[tuple[int, int], ...]
    n: int

    @property
    def width(self) -> int:
        counts: Counter[int] = Counter()
        for s, d in self.pairs:
            counts[s] += 1
            counts[d] += 1
        return max(counts.values(), default=0)

    @property
    def beyond_polylog(self) -> bool:
        """Width exceeds log2(n)^2; accepted but outside the intended regime."""
        return self.width > max(1.0, math.log2(max(self.n, 2)) ** 2)


def _congestion(paths: Sequence[Sequence[int]]) -> int:
    load: Counter[tuple[int, int]] = Counter()
    for p in paths:
        for a, b in zip(p, p[1:]):
            load[(a, b) if a < b else (b, a)] += 1
    return max(load.values(), default=0)


def keyed_congestion(paths: Sequence[Sequence[int]], keys: Sequence[int]) -> int:
    """Largest number of distinct keys sharing one edge: the per-edge load
    left once same-key messages are combined in flight."""
    users: dict[tuple[int, int], set[int]] = defaultdict(set)
    for p, k in zip(paths, keys):
        for a, b in zip(p, p[1:]):
            users[(a, b) if a < b else (b, a)].add(k)
    return max((len(s) for s in users.values()), default=0)


def _dilation(paths: Sequence[Sequence[int]]) -> int:
    return max((len(p) - 1 for p in paths), default=0)


@dataclass
class RoutingPaths:
    """One node sequence per pair (``[s]`` when source equals destination)."""

    paths: list[list[int]]
    congestion: int = -1
    dilation: int = -1

    def __post_init__(self) -> None:
        if self.congestion < 0:
            self.congestion = _congestion(self.paths)
        if self.dilation < 0:
            self.dilation = _dilation(self.paths)

    def verify(self, engine_or_adj=None) -> None:
        if self.congestion != _congestion(self.paths) or self.dilation != _dilation(self.paths):
            raise AssertionError("stored congestion/dilation disagree with the paths")
        if engine_or_adj is None:
            return
        has = (
            engine_or_adj.has_link
            if isinstance(engine_or_adj, RoundEngine)
            else (lambda a, b: b in engine_or_adj[a])
        )
        for p in self.paths:
            for a, b in zip(p, p[1:]):
                if not has(a, b):
                    raise AssertionError(f"path step {a}->{b} is not an edge")


class Backbone:
    """Static adjacency (e.g. R(G)) with CSR arrays and cached BFS trees."""

    def __init__(self, adjacency: Sequence[set[int]] | Sequence[Sequence[int]]):
        self.adj: list[set[int]] = [set(r) for r in adjacency]
        self.n = len(self.adj)
        rows = [sorted(r) for r in self.adj]
        self.degree = np.array([len(r) for r in rows], dtype=np.int64)
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.degree, out=self.indptr[1:])
        self.indices = np.array([v for r in rows for v in r], dtype=np.int64)
        self._csr = csr_matrix(
            (np.ones(self.indices.size, dtype=np.int8), self.indices, self.indptr), shape=(self.n, self.n)
        )
        self._pred: dict[int, np.ndarray] = {}

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        order = breadth_first_order(self._csr, 0, directed=False, return_predecessors=False)
        return order.size == self.n

    def toward(self, dest: int) -> np.ndarray:
        pred = self._pred.get(dest)
        if pred is None:
            _, pred = breadth_first_order(self._csr, dest, directed=False, return_predecessors=True)
            self._pred[dest] = pred
        return pred

    def splice(self, a: int, d: int) -> list[int]:
        """Shortest path from ``a`` to ``d``, excluding ``a``."""
        if a == d:
            return []
        if d in self.adj[a]:
            return [d]
        common = self.adj[a] & self.adj[d]
        if common:
            return [min(common), d]
        pred = self.toward(d)
        out: list[int] = []
        x = a
        while x != d:
            x = int(pred[x])
            if x < 0:
                raise PathFailure(f"no backbone path from {a} to {d}")
            out.append(x)
        return out


def build_paths(
    backbone: Backbone,
    instance: RoutingInstance | Sequence[tuple[int, int]],
    walk_budget: int,
    seed: int | np.random.Generator = 0,
) -> RoutingPaths:
    """Lazy-random-walk paths with shortest-path splicing.

    Each walk runs ``walk_budget`` lazy steps from the source (lazy stays are
    dropped from the recorded path) and stops early if it reaches the
    destination; a shortest path then finishes the route. Pairs whose path
    exceeds ``4 * walk_budget`` hops are re-walked up to 8 times.
    """
    pairs = list(instance.pairs if isinstance(instance, RoutingInstance) else instance)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    walk_budget = max(1, int(walk_budget))
    limit = 4 * walk_budget
    out: list[list[int] | None] = [None] * len(pairs)
    todo = []
    for i, (s, d) in enumerate(pairs):
        if s == d:
            out[i] = [s]
        else:
            todo.append(i)
    if todo and np.any(backbone.degree == 0):
        isolated = np.flatnonzero(backbone.degree == 0)
        involved = {x for i in todo for x in pairs[i]}
        if involved & set(isolated.tolist()) or not backbone.is_connected():
            raise PathFailure("backbone is disconnected")
    for _attempt in range(PATH_RETRIES + 1):
        if not todo:
            break
        idx = np.array(todo, dtype=np.int64)
        src = np.array([pairs[i][0] for i in todo], dtype=np.int64)
        dst = np.array([pairs[i][1] for i in todo], dtype=np.int64)
        pos = src.copy()
        done = pos == dst
        traj = [pos]
        for _ in range(walk_budget):
            move = (rng.random(idx.size) >= 0.5) & ~done
            offs = (rng.random(idx.size) * backbone.degree[pos]).astype(np.int64)
            nxt = backbone.indices[np.minimum(backbone.indptr[pos] + offs, backbone.indices.size - 1)]
            pos = np.where(move, nxt, pos)
            done |= pos == dst
            traj.append(pos)
        steps = np.stack(traj, axis=1).tolist()
        retry = []
        for row, i in zip(steps, todo):
            d = pairs[i][1]
            path = [row[0]]
            for x in row[1:]:
                if x != path[-1]:
                    path.append(x)
                if x == d:
                    break
            if path[-1] != d:
                path.extend(backbone.splice(path[-1], d))
            if len(path) - 1 > limit:
                retry.append(i)
            else:
                out[i] = path
        todo = retry
    if todo:
        s, d = pairs[todo[0]]
        raise PathFailure(f"{len(todo)} pairs (e.g. {s}->{d}) exceeded {limit} hops after {PATH_RETRIES} retries")
    return RoutingPaths([p for p in out if p is not None])


# ---------------------------------------------------------------------------
# offline store-and-forward planning


@dataclass
class Schedule:
    """Planned sends: ``rounds[t]`` lists ``(x, y, key)`` for round ``t``."""

    rounds: list[list[tuple[int, int, int]]]
    delays: list[int]
    window: int
    bound: int
    attempts: int
    congestion: int = 0

    @property
    def length(self) -> int:
        return len(self.rounds)

    @property
    def within_bound(self) -> bool:
        return self.length <= self.bound


def _plan_once(
    paths: Sequence[Sequence[int]], keys: Sequence[int], delays: Sequence[int], combine: bool
) -> list[list[tuple[int, int, int]]]:
    # entry state: path index, position along it; arrival/release pushes onto
    # the heap of the next directed edge ordered by (ready round, entry id)
    pos = [0] * len(paths)
    releases: dict[int, list[int]] = defaultdict(list)
    resident: dict[tuple[int, int], int] = {}  # (node, key) -> entry waiting there
    unreleased: set[int] = set()
    live = 0
    for e, p in enumerate(paths):
        if len(p) > 1:
            releases[delays[e]].append(e)
            live += 1
            if combine:
                # own entry waits at its source until released
                key = (p[0], keys[e])
                if key in resident:
                    # two flows with one source and key: fold at source
                    live -= 1
                    releases[delays[e]].remove(e)
                    continue
                resident[key] = e
                unreleased.add(e)
    heaps: dict[tuple[int, int], list[tuple[int, int]]] = {}
    arrivals: list[int] = []
    rounds: list[list[tuple[int, int, int]]] = []
    t = 0
    last_release = max(releases, default=-1)
    while live > 0:
        # arrivals happen before sends in a round
        for e in arrivals:
            p = paths[e]
            node = p[pos[e]]
            if pos[e] == len(p) - 1:
                live -= 1
                continue
            if combine:
                key = (node, keys[e])
                r = resident.get(key)
                if r is not None and r not in unreleased:
                    live -= 1  # absorbed into the queued entry
                    continue
                if r is not None:
                    unreleased.discard(r)  # own entry joins the arrival
                    live -= 1
                resident[key] = e
            heapq.heappush(heaps.setdefault((node, p[pos[e] + 1]), []), (t, e))
        arrivals = []
        for e in releases.pop(t, ()):
            if combine and e not in unreleased:
                continue  # already absorbed into an arrival
            unreleased.discard(e)
            p = paths[e]
            heapq.heappush(heaps.setdefault((p[0], p[1]), []), (t, e))
        sends: list[tuple[int, int, int]] = []
        for edge in list(heaps):
            h = heaps[edge]
            _, e = heapq.heappop(h)
            if not h:
                del heaps[edge]
            if combine:
                resident.pop((edge[0], keys[e]), None)
            sends.append((edge[0], edge[1], keys[e]))
            pos[e] += 1
            arrivals.append(e)
        rounds.append(sends)
        t += 1
        if not heaps and not arrivals and t > last_release and live > 0:
            raise AssertionError("planner lost track of live entries")
    while rounds and not rounds[-1]:
        rounds.pop()
    return rounds


def plan_schedule(
    paths: RoutingPaths,
    n: int,
    rng: np.random.Generator,
    keys: Sequence[int] | None = None,
    retries: int = SCHEDULE_RETRIES,
) -> Schedule:
    """Random-delay store-and-forward schedule for ``paths``.

    Delays are uniform in ``[0, c * ceil(log2 n))`` with ``c`` the path
    congestion. With ``keys``, entries bound for the same key merge whenever
    they meet at a node, and ``c`` is the keyed congestion (distinct keys per
    edge), which is the load that combining leaves. A schedule longer than
    ``c * ceil(log2 n) + d`` is redrawn up to ``retries`` times; the shortest
    draw is kept.
    """
    d = paths.dilation
    c = paths.congestion if keys is None else keyed_congestion(paths.paths, keys)
    log_n = max(1, math.ceil(math.log2(max(n, 2))))
    window = max(1, c * log_n)
    bound = c * log_n + d
    combine = keys is not None
    keyseq = list(keys) if keys is not None else list(range(len(paths.paths)))
    best: Schedule | None = None
    for attempt in range(retries + 1):
        delays = rng.integers(0, window, size=len(paths.paths)).tolist()
        rounds = _plan_once(paths.paths, keyseq, delays, combine)
        sched = Schedule(rounds, delays, window, bound, attempt + 1, c)
        if best is None or sched.length < best.length:
            best = sched
        if sched.within_bound:
            break
    assert best is not None
    best.attempts = attempt + 1
    return best


@dataclass
class RouteStats:
    pairs: int
    width: int
    c: int
    d: int
    delivery_rounds: int
    retries: int
    within_bound: bool


@dataclass
class HopTable:
    """Upcast sends ``(t, x, y, key)`` plus the length of that schedule.

    Each record is local knowledge of node ``y``: it received ``key`` from
    ``x`` in round ``t + 1``."""

    records: list[tuple[int, int, int, int]]
    length: int
    sources: dict[int, int]  # node -> key it contributed to
    stats: RouteStats | None = None

    def mirrored(self) -> list[list[tuple[int, int, int]]]:
        rounds: list[list[tuple[int, int, int]]] = [[] for _ in range(self.length)]
        for t, x, y, key in self.records:
            rounds[self.length - 1 - t].append((y, x, key))
        return rounds


def schedule_and_deliver(
    engine: RoundEngine,
    paths: RoutingPaths,
    payloads: Sequence[tuple],
    rng: np.random.Generator | None = None,
) -> tuple[dict[int, list[tuple]], RouteStats]:
    """Deliver ``payloads[i]`` along ``paths.paths[i]``.

    Returns ``{dest: [payload, ...]}`` (in pair order) and the routing stats.
    Rounds are charged to ``engine``.
    """
    rng = engine.rng if rng is None else rng
    sched = plan_schedule(paths, engine.n, rng)
    held: dict[tuple[int, int], tuple] = {}
    for i, p in enumerate(paths.paths):
        held[(p[0], i)] = tuple(payloads[i])
    # the plan doubles as each node's forwarding table: a message arriving
    # over x->y belongs to the flow scheduled on that link last round
    in_flight: dict[tuple[int, int], int] = {}

    def receive() -> None:
        for y, inbox in engine.take_inbox().items():
            for x, msg in inbox:
                held[(y, in_flight[(x, y)])] = msg.payload

    for sends in sched.rounds:
        receive()
        out = []
        in_flight = {}
        for x, y, flow in sends:
            out.append((x, y, Message("route", held.pop((x, flow)))))
            in_flight[(x, y)] = flow
        engine.transmit(out)
    receive()
    delivered: dict[int, list[tuple]] = defaultdict(list)
    for i, p in enumerate(paths.paths):
        delivered[p[-1]].append(held.pop((p[-1], i)))
    inst = RoutingInstance(tuple((p[0], p[-1]) for p in paths.paths), engine.n)
    stats = RouteStats(len(paths.paths), inst.width, paths.congestion, paths.dilation,
                       sched.length, sched.attempts - 1, sched.within_bound)
    return dict(delivered), stats


def k_aggregate_route(
    engine: RoundEngine,
    router,
    partition: Partition | Mapping[int, int],
    f: AggregateFn,
    local_values: Mapping[int, Any],
) -> tuple[dict[int, Any], HopTable]:
    """Fold ``local_values`` per part at the part's leader.

    Args:
        router: anything with ``route(pairs, rng) -> RoutingPaths``.
        partition: a :class:`Partition`, or a mapping ``node -> leader`` for
            just the contributing nodes.
        local_values: ``node -> value`` for every contributing node.

    Returns:
        ``{leader: aggregate}`` and the hop table needed by :func:`downcast`.
    """
    if isinstance(partition, Partition):
        leader_of = {u: partition.leader_of(u) for u in local_values}
        leaders = set(partition.leaders)
    else:
        leader_of = {u: partition[u] for u in local_values}
        leaders = set(leader_of.values())
    nodes = sorted(local_values)
    pairs = [(u, leader_of[u]) for u in nodes]
    paths = router.route(pairs, engine.rng)
    keys = [leader_of[u] for u in nodes]
    sched = plan_schedule(paths, engine.n, engine.rng, keys=keys)

    acc: dict[tuple[int, int], Any] = {}
    for u in nodes:
        k = (u, leader_of[u])
        acc[k] = f.combine(acc.get(k, f.identity), local_values[u])
    records: list[tuple[int, int, int, int]] = []

    def fold_inbox() -> None:
        for y, inbox in engine.take_inbox().items():
            for _x, msg in inbox:
                key = msg.payload[0]
                acc[(y, key)] = f.combine(acc.get((y, key), f.identity), f.decode(msg.payload[1:]))

    for t, sends in enumerate(sched.rounds):
        fold_inbox()
        out = []
        seen: set[tuple[int, int]] = set()
        for x, y, key in sends:
            if (x, key) in seen:
                raise AggregationError(f"node {x} forwarded two messages toward {key} in round {t}")
            seen.add((x, key))
            value = acc.pop((x, key), f.identity)
            out.append((x, y, Message("agg", (key,) + f.encode(value))))
            records.append((t, x, y, key))
        engine.transmit(out)
    fold_inbox()
    result = {lead: acc.get((lead, lead), f.identity) for lead in sorted(leaders)}
    inst = RoutingInstance(tuple(pairs), engine.n)
    stats = RouteStats(len(pairs), inst.width, sched.congestion, paths.dilation,
                       sched.length, sched.attempts - 1, sched.within_bound)
    return result, HopTable(records, sched.length, dict(zip(nodes, keys)), stats)


def downcast(
    engine: RoundEngine,
    leader_values: Mapping[int, Any],
    hops: HopTable | None,
    encode=tuple,
    decode=tuple,
) -> dict[int, Any]:
    """Reverse a recorded upcast: every contributing node receives its
    leader's value. Costs exactly as many rounds as the upcast did.

    Leaders whose value is ``None`` stay silent; their members get ``None``.
    """
    if hops is None:
        raise MissingHopTable("downcast needs the hop table of a preceding upcast")
    have: dict[tuple[int, int], Any] = {}
    for lead, val in leader_values.items():
        if val is not None:
            have[(lead, lead)] = val

    def read() -> None:
        for y, inbox in engine.take_inbox().items():
            for _x, msg in inbox:
                have[(y, msg.payload[0])] = decode(msg.payload[1:])

    for sends in hops.mirrored():
        read()
        out = []
        done: set[tuple[int, int, int]] = set()
        for y, x, key in sends:
            val = have.get((y, key))
            if val is None or (y, x, key) in done:
                continue
            done.add((y, x, key))
            out.append((y, x, Message("down", (key,) + encode(val))))
        engine.transmit(out)
    read()
    return {u: have.get((u, key)) for u, key in hops.sources.items()}


# ---------------------------------------------------------------------------
# routers


class BackboneRouter:
    """Node-level routing over the overlay graph R(G)."""

    def __init__(self, backbone: Backbone, walk_budget: int, engine: RoundEngine | None = None,
                 route_setup_rounds: int = 0):
        self.backbone = backbone
        self.walk_budget = walk_budget
        self.engine = engine
        self.route_setup_rounds = route_setup_rounds
        self.last_paths: RoutingPaths | None = None

    def route(self, pairs: Sequence[tuple[int, int]], rng: np.random.Generator) -> RoutingPaths:
        if self.engine is not None and self.route_setup_rounds:
            self.engine.idle(self.route_setup_rounds)
        self.last_paths = build_paths(self.backbone, pairs, self.walk_budget, rng)
        return self.last_paths


@dataclass
class _TreeIndex:
    parent: Sequence[int | None]
    depth: dict[int, int] = field(default_factory=dict)

    def path(self, a: int, b: int) -> list[int]:
        """Tree path from ``a`` to ``b`` (inclusive of both)."""
        up_a, up_b = [a], [b]
        x, y = a, b
        while self.depth[x] > self.depth[y]:
            x = self.parent[x]
            up_a.append(x)
        while self.depth[y] > self.depth[x]:
            y = self.parent[y]
            up_b.append(y)
        while x != y:
            x, y = self.parent[x], self.parent[y]
            up_a.append(x)
            up_b.append(y)
        return up_a + up_b[-2::-1]


class SuperRouter:
    """Routing between fragment roots over the contracted overlay R'.

    A walk runs on super-nodes; each super-hop expands into the tree path
    inside the current fragment to the endpoint of a representative overlay
    edge (the smallest canonical pair between the two fragments), then the
    crossing itself.
    """

    def __init__(
        self,
        fragment_of: Sequence[int],
        roots: Sequence[int],
        parent: Sequence[int | None],
        r_prime: Backbone,
        representative: Mapping[tuple[int, int], tuple[int, int]],
        walk_budget: int,
        engine: RoundEngine | None = None,
        route_setup_rounds: int = 0,
    ):
        self.fragment_of = fragment_of  # node -> super index
        self.roots = roots  # super index -> root node
        self.index_of_root = {r: i for i, r in enumerate(roots)}
        self.r_prime = r_prime
        self.rep = representative  # (i, j) with i < j -> (a in i, b in j)
        self.walk_budget = walk_budget
        self.engine = engine
        self.route_setup_rounds = route_setup_rounds
        depth: dict[int, int] = {}
        for u in range(len(parent)):
            chain = []
            x = u
            while x not in depth and parent[x] is not None:
                chain.append(x)
                x = parent[x]
            base = depth.setdefault(x, 0) if parent[x] is None else depth[x]
            for y in reversed(chain):
                base += 1
                depth[y] = base
        self.tree = _TreeIndex(parent, depth)
        self.last_paths: RoutingPaths | None = None

    def crossing(self, i: int, j: int) -> tuple[int, int]:
        if i < j:
            return self.rep[(i, j)]
        b, a = self.rep[(j, i)]
        return a, b

    def expand(self, super_path: Sequence[int], start: int, end: int) -> list[int]:
        path = [start]
        for i, j in zip(super_path, super_path[1:]):
            a, b = self.crossing(i, j)
            path.extend(self.tree.path(path[-1], a)[1:])
            path.append(b)
        path.extend(self.tree.path(path[-1], end)[1:])
        return path

    def route(self, pairs: Sequence[tuple[int, int]], rng: np.random.Generator) -> RoutingPaths:
        if self.engine is not None and self.route_setup_rounds:
            self.engine.idle(self.route_setup_rounds)
        fo = self.fragment_of
        super_pairs = [(fo[s], fo[d]) for s, d in pairs]
        sp = build_paths(self.r_prime, super_pairs, self.walk_budget, rng)
        self.last_paths = RoutingPaths([self.expand(q, s, d) for q, (s, d) in zip(sp.paths, pairs)])
        return self.last_paths
