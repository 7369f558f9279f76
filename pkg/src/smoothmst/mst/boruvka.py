"""Borůvka with head/tail merging over routed super-fragments.

A super-fragment (SF) is a union of base fragments (trees from controlled
GHS, or single nodes). Its leader is the root of one base fragment. One
iteration, as CONGEST rounds:

1. nodes whose SF id changed tell their base neighbours;
2. every node picks its local MOE; a convergecast folds it to the base root;
3. base roots route their MOE to the SF leader (k-aggregate, Min);
4. the leader flips head/tail and downcasts ``(u, v, coin)``, which each base
   fragment re-broadcasts;
5. a tail SF's endpoint ``u`` queries ``v``; if ``v`` is in a head SF both
   endpoints adopt the edge;
6. ``u`` routes the head's leader id to its own leader, which downcasts it
   along the mirrored upcast of step 3, then base fragments broadcast it.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

from ..engine import Message, RoundEngine
from ..graph import EdgeRef
from ..routing import AggregateFn, downcast, k_aggregate_route
from .forest import FragmentForest, tree_broadcast, tree_convergecast
from .ghs import NO_MOE, local_moe

__all__ = ["BoruvkaStall", "BoruvkaResult", "boruvka_smoothed", "HEAD", "TAIL"]

HEAD, TAIL = 0, 1


class BoruvkaStall(RuntimeError):
    """Iteration cap exceeded; reseed and retry."""


@dataclass
class BoruvkaResult:
    edges: set[EdgeRef]
    iterations: int
    history: list[int] = field(default_factory=list)  # SF count before each iteration
    flagged: bool = False  # SF count failed to drop across 3 consecutive iterations
    route_stats: list = field(default_factory=list)


def _min3(a: tuple, b: tuple) -> tuple:
    return min(a, b)


def boruvka_smoothed(
    engine: RoundEngine,
    forest: FragmentForest,
    router,
    on_iteration: Callable[[int, set[EdgeRef], list[int]], None] | None = None,
    max_iterations: int | None = None,
) -> BoruvkaResult:
    """Merge ``forest``'s fragments into the MST.

    Args:
        router: routes between base-fragment roots (see
            :class:`~smoothmst.routing.BackboneRouter` and
            :class:`~smoothmst.routing.SuperRouter`).
        on_iteration: called after every iteration with
            ``(iteration, mst_edges_so_far, sf_id_per_node)``.

    Raises:
        BoruvkaStall: more than ``10 * log2 n`` iterations.
    """
    n = engine.n
    cap = max_iterations if max_iterations is not None else max(1, math.ceil(10 * math.log2(max(n, 2))))
    edges = set(forest.tree_edges)
    roots = forest.roots
    sf = [forest.fid[u] for u in range(n)]  # SF leader id known by each node
    nbr_sf: list[dict[int, int]] = [{} for _ in range(n)]
    changed = set(range(n))
    result = BoruvkaResult(edges, 0)
    iteration = 0
    while True:
        # 1. SF id exchange
        if changed:
            engine.transmit(
                [(u, v, Message("sf", (sf[u],))) for u in sorted(changed) for v in engine.base.neighbors(u)]
            )
            for y, inbox in engine.take_inbox().items():
                for x, msg in inbox:
                    nbr_sf[y][x] = msg.payload[0]
            changed = set()
        # 2. local MOE, folded to base roots
        local = {u: local_moe(engine, u, sf[u], nbr_sf[u]) for u in range(n)}
        at_root = tree_convergecast(engine, forest, local, _min3, kind="moe")
        # 3. route to SF leaders
        values = {r: (None if v == NO_MOE else v) for r, v in at_root.items()}
        leader_map = {r: sf[r] for r in roots}
        moes, hops = k_aggregate_route(engine, router, leader_map, AggregateFn.MIN, values)
        result.route_stats.append(hops.stats)
        result.history.append(len(moes))
        h = result.history
        if len(h) >= 4 and h[-1] >= h[-4]:
            result.flagged = True  # three iterations without progress
        if any(v is None for v in moes.values()):
            if len(moes) != 1:
                raise AssertionError("a super-fragment without outgoing edges coexists with others")
            break
        iteration += 1
        if iteration > cap:
            raise BoruvkaStall(f"no single fragment after {cap} iterations")
        # 4. coin flips at leaders, downcast, base-fragment broadcast
        coins = {lead: int(engine.rng.integers(0, 2)) for lead in sorted(moes)}
        decision = {lead: (moes[lead][1], moes[lead][2], coins[lead]) for lead in moes}
        at_roots = downcast(engine, decision, hops)
        told = tree_broadcast(engine, forest, at_roots, kind="coin")
        # 5. tail endpoints query across their MOE
        queries = []
        my_coin = {u: told[u][2] for u in range(n)}
        for lead, (u, v, coin) in sorted(decision.items()):
            if coin == TAIL:
                queries.append((u, v, Message("query", (sf[u],))))
        engine.transmit(queries)
        replies = []
        for y, inbox in sorted(engine.take_inbox().items()):
            for x, _msg in inbox:
                replies.append((y, x, Message("reply", (sf[y], my_coin[y]))))
                if my_coin[y] == HEAD:
                    edges.add(EdgeRef.of(x, y))
        engine.transmit(replies)
        new_leader: dict[int, tuple] = {}
        for y, inbox in engine.take_inbox().items():
            for x, msg in inbox:
                head_sf, coin = msg.payload
                if coin == HEAD:
                    edges.add(EdgeRef.of(x, y))
                    new_leader[y] = (head_sf,)
        # 6. route the adopted id to the tail's leader, then push it down
        upd, _ = k_aggregate_route(
            engine, router, {u: sf[u] for u in new_leader}, AggregateFn.MIN, new_leader
        )
        pushed = downcast(engine, {lead: upd.get(lead) for lead in moes}, hops)
        got = tree_broadcast(engine, forest, {r: v for r, v in pushed.items() if v is not None}, kind="adopt")
        for u, (new_id,) in got.items():
            if sf[u] != new_id:
                sf[u] = new_id
                changed.add(u)
        if on_iteration is not None:
            on_iteration(iteration, set(edges), list(sf))
    result.iterations = iteration
    return result
