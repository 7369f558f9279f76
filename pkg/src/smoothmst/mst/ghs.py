"""Controlled GHS: size-capped fragment merging over base edges.

Phase ``i`` (1-based) lets a fragment join along its minimum outgoing edge
only while it has fewer than ``2**i`` members. Each phase runs, as CONGEST
rounds:

1. fragment-id exchange with base neighbours (only nodes whose id changed);
2. convergecast of ``(size, moe)`` to the root;
3. broadcast of the root's decision to active fragments;
4. a CONNECT across each chosen MOE, which both endpoints mark as a tree edge;
5. min-id flooding over tree edges to elect the new root;
6. an orientation wave from every new root re-hanging its tree.

Flooding and orientation stop when no message is in flight; the orchestrator
detects that quiescence.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from ..engine import Message, RoundEngine
from ..graph import EdgeRef
from .forest import FragmentForest, tree_broadcast, tree_convergecast

__all__ = ["GhsStats", "controlled_ghs", "NO_MOE", "local_moe"]

NO_MOE = (math.inf, -1, -1)


@dataclass
class GhsStats:
    phases_run: int = 0
    completed: bool = False
    rounds_per_phase: list[int] = field(default_factory=list)
    fragments_per_phase: list[int] = field(default_factory=list)


def local_moe(engine: RoundEngine, u: int, own: int, nbr_label: dict[int, int]) -> tuple:
    """Lightest base edge from ``u`` to a neighbour labelled differently,
    as ``(w, u, v)``; :data:`NO_MOE` if none."""
    best = NO_MOE
    for v, w in engine.base.adjacency[u]:
        if nbr_label[v] != own and w < best[0]:
            best = (w, u, v)
    return best


def _combine_size_moe(a: tuple, b: tuple) -> tuple:
    return (a[0] + b[0],) + min(a[1:], b[1:])


def controlled_ghs(
    engine: RoundEngine,
    phases: int | None,
    forest: FragmentForest | None = None,
    stats: GhsStats | None = None,
) -> FragmentForest:
    """Run ``phases`` controlled-GHS phases (``None``: until one fragment).

    Returns the resulting forest; per-phase measurements go into ``stats``.
    """
    n = engine.n
    forest = forest if forest is not None else FragmentForest.singletons(n)
    stats = stats if stats is not None else GhsStats()
    fid = forest.fid
    tree_nbrs: list[set[int]] = [set() for _ in range(n)]
    for e in forest.tree_edges:
        tree_nbrs[e.u].add(e.v)
        tree_nbrs[e.v].add(e.u)
    nbr_fid: list[dict[int, int]] = [{} for _ in range(n)]
    changed = set(range(n))
    i = 0
    while phases is None or i < phases:
        i += 1
        start = engine.round
        # 1. id exchange
        if changed:
            engine.transmit(
                [(u, v, Message("fid", (fid[u],))) for u in sorted(changed) for v in engine.base.neighbors(u)]
            )
            for y, inbox in engine.take_inbox().items():
                for x, msg in inbox:
                    nbr_fid[y][x] = msg.payload[0]
            changed = set()
        # 2. size + MOE convergecast
        local = {u: (1,) + local_moe(engine, u, fid[u], nbr_fid[u]) for u in range(n)}
        at_root = tree_convergecast(engine, forest, local, _combine_size_moe, kind="report")
        if all(v[1] == math.inf for v in at_root.values()):
            stats.completed = True
            stats.phases_run = i
            stats.rounds_per_phase.append(engine.round - start)
            stats.fragments_per_phase.append(len(at_root))
            break
        cap = 1 << i
        decisions = {
            r: (1, w, a, b) for r, (size, w, a, b) in at_root.items() if size < cap and w != math.inf
        }
        # 3. broadcast to active fragments
        told = tree_broadcast(engine, forest, decisions, kind="decide")
        # 4. connect across the chosen MOEs
        connects = [
            (a, b, Message("connect", (fid[a],)))
            for r, (_, _, a, b) in sorted(decisions.items())
        ]
        assert all(told.get(a, (0,))[0] == 1 for a, _, _ in connects)
        engine.transmit(connects)
        touched: set[int] = set()
        for y, inbox in engine.take_inbox().items():
            for x, _msg in inbox:
                tree_nbrs[y].add(x)
                tree_nbrs[x].add(y)
                forest.tree_edges.add(EdgeRef.of(x, y))
                touched.update((x, y))
        # 5. min-id flooding over tree edges
        cur = list(fid)
        senders = sorted(touched)
        while senders:
            engine.transmit(
                [(u, v, Message("flood", (cur[u],))) for u in senders for v in sorted(tree_nbrs[u])]
            )
            nxt = set()
            for y, inbox in engine.take_inbox().items():
                best = min(m.payload[0] for _, m in inbox)
                if best < cur[y]:
                    cur[y] = best
                    nxt.add(y)
            senders = sorted(nxt)
        changed = {u for u in range(n) if cur[u] != fid[u]}
        # 6. orientation from each root of a merged component
        merged_ids = {cur[u] for u in touched}
        fid[:] = cur
        wave = sorted(merged_ids)
        for r in wave:
            forest.parent[r] = None
        members = defaultdict(list)
        for u in range(n):
            if fid[u] in merged_ids:
                members[fid[u]].append(u)
        while wave:
            engine.transmit([(u, v, Message("orient", (u,))) for u in wave for v in sorted(tree_nbrs[u]) if v != forest.parent[u]])
            nxt_wave = []
            for y, inbox in sorted(engine.take_inbox().items()):
                (x, _), = inbox
                forest.parent[y] = x
                nxt_wave.append(y)
            for u in wave:
                forest.children[u] = sorted(v for v in tree_nbrs[u] if v != forest.parent[u])
            wave = nxt_wave
        stats.phases_run = i
        stats.rounds_per_phase.append(engine.round - start)
        stats.fragments_per_phase.append(len({fid[u] for u in range(n)}))
    return forest
