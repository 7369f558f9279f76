"""Offline smoothing models and the conversions between them.

Three ways to decorate a graph with random communication edges:

* :class:`EpsilonRounds` - the per-round process (each node, each round,
  links to a uniform node with probability epsilon), run on a scratch engine;
* :class:`KEdges` - exactly ``k`` distinct pairs drawn uniformly from all
  ``n choose 2``;
* :class:`DeltaPerPair` - every pair present independently with probability
  ``delta``.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .engine import RoundEngine, SmoothedOverlay, run_smoothing
from .graph import WeightedGraph

__all__ = [
    "EpsilonRounds",
    "KEdges",
    "DeltaPerPair",
    "SmoothingModelSpec",
    "SmoothingSpecError",
    "RegimeWarning",
    "materialize",
    "equivalent_k",
    "equivalent_delta",
    "distribution_matched_k",
    "predicted_pair_probability",
    "parse_smoothing_spec",
    "pair_from_index",
    "floyd_sample",
]


class SmoothingSpecError(ValueError):
    pass


class RegimeWarning(UserWarning):
    """The product ell*epsilon is not small relative to n."""


@dataclass(frozen=True)
class EpsilonRounds:
    epsilon: float
    rounds: int


@dataclass(frozen=True)
class KEdges:
    k: int


@dataclass(frozen=True)
class DeltaPerPair:
    delta: float


Variant = Union[EpsilonRounds, KEdges, DeltaPerPair]


@dataclass(frozen=True)
class SmoothingModelSpec:
    """One smoothing model plus its seed.

    ``known`` marks whether algorithms may tell smoothed edges apart from base
    edges. Every algorithm in this package requires ``known=True``; the flag
    only documents the unknown-edge variants, which nothing consumes.
    """

    variant: Variant
    seed: int = 0
    known: bool = True

    def __post_init__(self) -> None:
        v = self.variant
        if isinstance(v, EpsilonRounds):
            if not (0.0 <= v.epsilon <= 1.0):
                raise SmoothingSpecError(f"epsilon={v.epsilon} outside [0, 1]")
            if v.rounds < 0:
                raise SmoothingSpecError(f"rounds={v.rounds} is negative")
        elif isinstance(v, KEdges):
            if v.k < 0:
                raise SmoothingSpecError(f"k={v.k} is negative")
        elif isinstance(v, DeltaPerPair):
            if not (0.0 <= v.delta <= 1.0):
                raise SmoothingSpecError(f"delta={v.delta} outside [0, 1]")
        else:
            raise SmoothingSpecError(f"unknown smoothing variant {v!r}")


def pair_from_index(idx: int | np.ndarray, n: int):
    """Map a linear index in ``[0, n(n-1)/2)`` to the pair ``(u, v)``, ``u < v``,
    in row-major upper-triangle order."""
    idx = np.asarray(idx, dtype=np.int64)
    # row u starts at u*n - u*(u+1)/2; invert with the quadratic formula
    b = 2 * n - 1
    u = np.floor((b - np.sqrt(b * b - 8.0 * idx)) / 2).astype(np.int64)
    start = u * n - u * (u + 1) // 2
    # guard against floating error at row boundaries
    over = idx < start
    u = np.where(over, u - 1, u)
    start = u * n - u * (u + 1) // 2
    nxt = (u + 1) * n - (u + 1) * (u + 2) // 2
    under = idx >= nxt
    u = np.where(under, u + 1, u)
    start = u * n - u * (u + 1) // 2
    v = idx - start + u + 1
    return u, v


def floyd_sample(total: int, k: int, rng: np.random.Generator) -> list[int]:
    """Floyd's algorithm: ``k`` distinct integers from ``range(total)``."""
    chosen: set[int] = set()
    order: list[int] = []
    for j in range(total - k, total):
        t = int(rng.integers(0, j + 1))
        pick = j if t in chosen else t
        chosen.add(pick)
        order.append(pick)
    return order


def materialize(spec: SmoothingModelSpec, g: WeightedGraph) -> SmoothedOverlay:
    n = g.n
    total = n * (n - 1) // 2
    v = spec.variant
    if isinstance(v, EpsilonRounds):
        engine = RoundEngine(g, spec.seed)
        return run_smoothing(engine, v.epsilon, v.rounds)
    rng = np.random.default_rng(spec.seed)
    overlay = SmoothedOverlay(n)
    if isinstance(v, KEdges):
        if v.k > total:
            raise SmoothingSpecError(f"k={v.k} exceeds the {total} available pairs")
        idx = np.array(sorted(floyd_sample(total, v.k, rng)), dtype=np.int64)
    else:
        idx = np.flatnonzero(rng.random(total) < v.delta)
    if idx.size:
        us, vs = pair_from_index(idx, n)
        for a, b in zip(us.tolist(), vs.tolist()):
            overlay.add(a, b, 0, a)
    return overlay


def predicted_pair_probability(epsilon: float, ell: int, n: int) -> float:
    """Probability that a fixed pair is joined after ``ell`` smoothing rounds:
    ``1 - (1 - epsilon/n)**(2*ell)``."""
    if not (0.0 <= epsilon <= 1.0) or ell < 0 or n < 1:
        raise ValueError("need epsilon in [0,1], ell >= 0, n >= 1")
    return -math.expm1(2 * ell * math.log1p(-epsilon / n))


def _regime_check(epsilon: float, ell: int, n: int) -> None:
    # ell*eps = o(n); we flag anything above n/10
    if ell * epsilon > n / 10:
        warnings.warn(
            f"ell*epsilon = {ell * epsilon:g} is not small next to n = {n}; "
            "the edge-count equivalence is only asymptotic there",
            RegimeWarning,
            stacklevel=3,
        )


def equivalent_k(epsilon: float, ell: int, n: int) -> int:
    """Edge count ``round(2 * ell * epsilon * n)`` of the k-edge model that the
    literature pairs with ``ell`` rounds of epsilon-smoothing.

    Note this counts each expected edge twice relative to the pair
    probability; :func:`distribution_matched_k` gives the count whose overlay
    size actually matches.
    """
    _regime_check(epsilon, ell, n)
    return round(2 * ell * epsilon * n)


def equivalent_delta(epsilon: float, ell: int, n: int) -> float:
    _regime_check(epsilon, ell, n)
    return 2 * ell * epsilon / n


def distribution_matched_k(epsilon: float, ell: int, n: int) -> int:
    """``round(C(n,2) * p)`` with ``p`` from :func:`predicted_pair_probability`:
    the k whose fixed overlay size equals the expected size under
    ``ell`` rounds of epsilon-smoothing."""
    return round(n * (n - 1) / 2 * predicted_pair_probability(epsilon, ell, n))


_FIELD = re.compile(r"^\s*([a-z]+)\s*:\s*([^\s,]+)\s*$")


def parse_smoothing_spec(text: str, seed: int = 0) -> SmoothingModelSpec:
    """Parse ``eps:0.1,rounds:50``, ``k:2000`` or ``delta:0.001``."""
    fields: dict[str, str] = {}
    for part in text.split(","):
        m = _FIELD.match(part)
        if not m:
            raise SmoothingSpecError(f"malformed smoothing field {part!r} in {text!r}")
        key, val = m.groups()
        if key in fields:
            raise SmoothingSpecError(f"field {key!r} given twice in {text!r}")
        fields[key] = val
    try:
        if set(fields) == {"eps", "rounds"}:
            variant: Variant = EpsilonRounds(float(fields["eps"]), int(fields["rounds"]))
        elif set(fields) == {"k"}:
            variant = KEdges(int(fields["k"]))
        elif set(fields) == {"delta"}:
            variant = DeltaPerPair(float(fields["delta"]))
        else:
            raise SmoothingSpecError(
                f"expected 'eps:..,rounds:..', 'k:..' or 'delta:..', got {text!r}"
            )
    except ValueError as exc:
        if isinstance(exc, SmoothingSpecError):
            raise
        raise SmoothingSpecError(f"bad number in {text!r}: {exc}") from None
    return SmoothingModelSpec(variant, seed)
