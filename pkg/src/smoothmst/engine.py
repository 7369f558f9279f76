"""Synchronous CONGEST round executor and the per-round smoothing process.

Messages handed to :meth:`RoundEngine.transmit` in round ``r`` become readable
(once) in round ``r + 1``. Each directed link carries at most one
:class:`Message` per round; a second message is a hard
:class:`BandwidthViolation`, never a silent drop.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from typing import IO, Any, ClassVar, NamedTuple

import numpy as np

from .graph import EdgeRef, Origin, WeightedGraph

__all__ = [
    "Message",
    "BandwidthViolation",
    "UnknownEdge",
    "PayloadTooLarge",
    "RoundReport",
    "SmoothedOverlay",
    "RoundEngine",
    "SmoothingStep",
    "smoothing_step",
    "run_smoothing",
    "MAX_PAYLOAD_FIELDS",
    "overlay_from_pairs",
]

MAX_PAYLOAD_FIELDS = 4


class BandwidthViolation(RuntimeError):
    raised = 0  # process-wide tally, read by the acceptance suite

    def __init__(self, edge: tuple[int, int], round_: int):
        BandwidthViolation.raised += 1
        super().__init__(f"two messages on directed edge {edge[0]}->{edge[1]} in round {round_}")
        self.edge = edge
        self.round = round_


class UnknownEdge(RuntimeError):
    def __init__(self, edge: tuple[int, int], round_: int):
        super().__init__(f"node {edge[0]} has no link to {edge[1]} (round {round_})")
        self.edge = edge
        self.round = round_


class PayloadTooLarge(RuntimeError):
    pass


class Message(NamedTuple):
    """A CONGEST message: a short tag plus at most four scalar fields.

    Scalars are ints (node ids, fragment ids, weights, counters), ``None`` or
    ``math.inf`` (the non-candidate weight).
    """

    kind: str
    payload: tuple = ()


def _payload_bits(payload: tuple, field_bits: int) -> int:
    if len(payload) > MAX_PAYLOAD_FIELDS:
        raise PayloadTooLarge(f"{len(payload)} fields > {MAX_PAYLOAD_FIELDS}")
    for x in payload:
        if type(x) is int:
            if x.bit_length() > field_bits:
                raise PayloadTooLarge(f"field {x} needs more than {field_bits} bits")
        elif x is None or x == math.inf or isinstance(x, (bool, np.bool_)):
            continue
        elif isinstance(x, (int, np.integer)):
            if int(x).bit_length() > field_bits:
                raise PayloadTooLarge(f"field {x} needs more than {field_bits} bits")
        else:
            raise PayloadTooLarge(f"non-scalar payload field {x!r}")
    return len(payload) * field_bits


@dataclass
class RoundReport:
    total_rounds: int = 0
    smoothing_rounds: int = 0
    messages_sent: int = 0
    overlay_edges_added: int = 0
    phase_breakdown: list[tuple[str, int]] = field(default_factory=list)

    KEYS = ("total_rounds", "smoothing_rounds", "messages_sent", "overlay_edges_added", "phase_breakdown")

    def phase_rounds(self, label: str) -> int:
        return sum(r for lab, r in self.phase_breakdown if lab == label)

    def check(self) -> None:
        if sum(r for _, r in self.phase_breakdown) != self.total_rounds:
            raise AssertionError("phase breakdown does not sum to total_rounds")
        if min(self.total_rounds, self.smoothing_rounds, self.messages_sent, self.overlay_edges_added) < 0:
            raise AssertionError("negative counter in RoundReport")

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_rounds": self.total_rounds,
            "smoothing_rounds": self.smoothing_rounds,
            "messages_sent": self.messages_sent,
            "overlay_edges_added": self.overlay_edges_added,
            "phase_breakdown": [[lab, r] for lab, r in self.phase_breakdown],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class SmoothedOverlay:
    """The random communication edges R, with creation stamps.

    Repeated picks of the same pair collapse into the first record. Overlay
    edges have non-candidate weight and never enter an MST.
    """

    def __init__(self, n: int):
        self.n = n
        self.records: dict[tuple[int, int], tuple[int, int]] = {}
        self.adjacency: list[set[int]] = [set() for _ in range(n)]
        self.initiations = np.zeros(n, dtype=np.int64)  # non-self edges initiated
        self.attempts = np.zeros(n, dtype=np.int64)  # successful coin flips

    def add(self, u: int, v: int, round_: int, initiator: int | None = None) -> bool:
        if u == v:
            raise ValueError("overlay edges cannot be self-loops")
        key = (u, v) if u < v else (v, u)
        if key in self.records:
            return False
        self.records[key] = (round_, u if initiator is None else initiator)
        self.adjacency[u].add(v)
        self.adjacency[v].add(u)
        return True

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, pair: tuple[int, int]) -> bool:
        u, v = pair
        return ((u, v) if u < v else (v, u)) in self.records

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.records)

    def edge_refs(self) -> set[EdgeRef]:
        return {EdgeRef(a, b, Origin.SMOOTHED) for a, b in self.records}

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(s) for s in self.adjacency), dtype=np.int64, count=self.n)

    def is_connected(self) -> bool:
        from .graph import is_connected

        return self.n >= 1 and is_connected(self.n, self.adjacency)


class SmoothingStep(NamedTuple):
    initiations: int  # coin successes this round
    self_picks: int  # successes discarded because target == initiator
    new_edges: int  # distinct pairs added to the overlay


class RoundEngine:
    """Deterministic synchronous executor over ``base`` plus a smoothed overlay.

    Args:
        base: the input graph.
        seed: master seed; every random choice made by algorithms running on
            this engine must come from :attr:`rng`.
        trace: optional text stream receiving ``round, msgs, overlay_added``
            once per simulated round.
    """

    # copied into every new engine; lets audits watch engines built internally
    default_observers: ClassVar[list[Callable[[int, list[tuple[int, int, Message]]], None]]] = []

    def __init__(self, base: WeightedGraph, seed: int | np.random.SeedSequence, trace: IO[str] | None = None):
        self.base = base
        self.n = base.n
        self.rng = np.random.default_rng(seed)
        self.overlay = SmoothedOverlay(base.n)
        self.round = 0
        self.trace = trace
        self.field_bits = max(1, math.ceil(4 * math.log2(max(self.n, 2))))
        self.max_message_bits = MAX_PAYLOAD_FIELDS * self.field_bits
        self._base_adj = base.neighbor_sets()
        self._inbox: dict[int, list[tuple[int, Message]]] = {}
        self._messages = 0
        self._overlay_added = 0
        self._smoothing_rounds = 0
        self._phases: list[tuple[str, int]] = []
        self._phase_label: str | None = None
        self._phase_start = 0
        self.observers: list[Callable[[int, list[tuple[int, int, Message]]], None]] = list(
            RoundEngine.default_observers
        )

    # -- links --------------------------------------------------------------
    def has_link(self, u: int, v: int) -> bool:
        return v in self._base_adj[u] or v in self.overlay.adjacency[u]

    def links(self, u: int) -> set[int]:
        return self._base_adj[u] | self.overlay.adjacency[u]

    def base_neighbors(self, u: int) -> set[int]:
        return self._base_adj[u]

    # -- delivery -----------------------------------------------------------
    def transmit(self, sends: Iterable[tuple[int, int, Message]]) -> None:
        """Validate this round's outbox, deliver it for next round, advance.

        Undelivered messages from the previous round are discarded: the inbox
        is observable exactly once.
        """
        used: set[tuple[int, int]] = set()
        inbox: dict[int, list[tuple[int, Message]]] = defaultdict(list)
        batch = sends if isinstance(sends, list) else list(sends)
        fb = self.field_bits
        limit = 1 << fb
        base_adj, over_adj = self._base_adj, self.overlay.adjacency
        for u, v, msg in batch:
            key = (u, v)
            if key in used:
                raise BandwidthViolation(key, self.round)
            if v not in base_adj[u] and v not in over_adj[u]:
                raise UnknownEdge(key, self.round)
            payload = msg.payload
            if len(payload) > MAX_PAYLOAD_FIELDS:
                raise PayloadTooLarge(f"{len(payload)} fields > {MAX_PAYLOAD_FIELDS}")
            for x in payload:
                if x.__class__ is not int or not -limit < x < limit:
                    _payload_bits(payload, fb)  # slow path: validates or raises
                    break
            used.add(key)
            inbox[v].append((u, msg))
        for obs in self.observers:
            obs(self.round, batch)
        self._messages += len(batch)
        self._tick(len(batch), 0)
        self._inbox = dict(inbox)

    def take_inbox(self) -> dict[int, list[tuple[int, Message]]]:
        box, self._inbox = self._inbox, {}
        return box

    def step_round(
        self,
        behavior: Callable[[int, list[tuple[int, Message]]], Iterable[tuple[int, Message]] | None],
        active: Iterable[int] | None = None,
    ) -> None:
        """Run one round: call ``behavior(u, inbox_u)`` for every node that is
        in ``active`` or has mail (all nodes when ``active`` is None), collect
        the ``(dest, message)`` pairs it returns and transmit them."""
        box = self.take_inbox()
        nodes = range(self.n) if active is None else sorted(set(active) | set(box))
        sends: list[tuple[int, int, Message]] = []
        for u in nodes:
            out = behavior(u, box.get(u, []))
            if out:
                sends.extend((u, v, m) for v, m in out)
        self.transmit(sends)

    def idle(self, rounds: int) -> None:
        for _ in range(rounds):
            self.transmit([])

    def _tick(self, msgs: int, added: int) -> None:
        if self.trace is not None:
            self.trace.write(f"{self.round}, {msgs}, {added}\n")
        self.round += 1

    # -- accounting ---------------------------------------------------------
    def begin_phase(self, label: str) -> None:
        self._close_phase()
        self._phase_label = label
        self._phase_start = self.round

    def _close_phase(self) -> None:
        if self._phase_label is not None:
            self._phases.append((self._phase_label, self.round - self._phase_start))
            self._phase_label = None
        elif self.round > self._phase_start:
            self._phases.append(("unlabelled", self.round - self._phase_start))
        self._phase_start = self.round

    def report(self) -> RoundReport:
        phases = list(self._phases)
        if self.round > self._phase_start or self._phase_label is not None:
            phases.append((self._phase_label or "unlabelled", self.round - self._phase_start))
        merged: list[tuple[str, int]] = []
        for lab, r in phases:
            if merged and merged[-1][0] == lab:
                merged[-1] = (lab, merged[-1][1] + r)
            else:
                merged.append((lab, r))
        rep = RoundReport(
            total_rounds=self.round,
            smoothing_rounds=self._smoothing_rounds,
            messages_sent=self._messages,
            overlay_edges_added=self._overlay_added,
            phase_breakdown=merged,
        )
        rep.check()
        return rep


def smoothing_step(engine: RoundEngine, epsilon: float) -> SmoothingStep:
    """One smoothing round: every node flips an ``epsilon`` coin and, on
    success, links to a uniform target in V. Self-picks are discarded."""
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError("epsilon must lie in [0, 1]")
    n = engine.n
    coins = engine.rng.random(n) < epsilon
    targets = engine.rng.integers(0, n, size=n)
    initiators = np.flatnonzero(coins)
    picked = targets[initiators]
    self_mask = picked == initiators
    ov = engine.overlay
    ov.attempts[initiators] += 1
    added = 0
    r = engine.round
    for u, v in zip(initiators[~self_mask].tolist(), picked[~self_mask].tolist()):
        ov.initiations[u] += 1
        if ov.add(u, v, r, u):
            added += 1
    engine._overlay_added += added
    engine._smoothing_rounds += 1
    engine._tick(0, added)
    return SmoothingStep(int(initiators.size), int(self_mask.sum()), added)


def run_smoothing(engine: RoundEngine, epsilon: float, rounds: int) -> SmoothedOverlay:
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    for _ in range(rounds):
        smoothing_step(engine, epsilon)
    return engine.overlay


def overlay_from_pairs(n: int, pairs: Iterable[tuple[int, int]], round_: int = 0) -> SmoothedOverlay:
    ov = SmoothedOverlay(n)
    for u, v in pairs:
        ov.add(u, v, round_)
    return ov
