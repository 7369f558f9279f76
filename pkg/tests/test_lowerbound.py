from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothmst.graph import (
    WeightedGraph,
    bfs_distances,
    cycle_graph,
    kruskal_mst,
    lower_bound_layout,
    path_graph,
)
from smoothmst.lowerbound import (
    BudgetConstants,
    CssInstance,
    SdInstance,
    crossing_edges_aggregated,
    crossing_edges_expectation,
    css_threshold,
    css_to_mst_weights,
    decide_css_via_mst,
    encode_sd,
    monte_carlo_crossings,
    simulation_budget,
    spanning_connected,
)


def bfs_spanning(n: int, h) -> bool:
    """Oracle independent of the library's connectivity helper."""
    adj = [set() for _ in range(n)]
    for a, b in h:
        adj[a].add(b)
        adj[b].add(a)
    return len(bfs_distances(adj, 0)) == n


def atlas_graphs(max_n: int):
    for g in nx.graph_atlas_g():
        n = g.number_of_nodes()
        if 2 <= n <= max_n and nx.is_connected(g):
            yield WeightedGraph(n, [(a, b, i + 1) for i, (a, b) in enumerate(sorted(g.edges()))])


def edge_subsets(g: WeightedGraph, cap: int, seed: int):
    pairs = [(a, b) for a, b, _ in g.edges]
    if 2 ** len(pairs) <= cap:
        for mask in range(2 ** len(pairs)):
            yield frozenset(p for i, p in enumerate(pairs) if mask >> i & 1)
        return
    rng = np.random.default_rng(seed)
    for _ in range(cap):
        keep = rng.random(len(pairs)) < 0.5
        yield frozenset(p for p, k in zip(pairs, keep) if k)


class TestSdInstance:
    def test_disjoint(self):
        assert SdInstance.from_strings("0101", "1010").disjoint
        assert not SdInstance.from_strings("0110", "0100").disjoint

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            SdInstance((0, 1), (1,))


class TestEncodeSd:
    def test_disjoint_example(self):
        inst = encode_sd(SdInstance.from_strings("0101", "1010"))
        assert spanning_connected(inst.g.n, inst.h)

    def test_intersecting_example(self):
        inst = encode_sd(SdInstance.from_strings("0110", "0100"))
        assert not spanning_connected(inst.g.n, inst.h)

    def test_h_membership_known_locally(self):
        inst = encode_sd(SdInstance.from_strings("1111", "0000"))
        lay = lower_bound_layout(4)
        flags = inst.incident_flags(lay.s)
        assert flags and all(flags.values())  # s keeps only its tree edge

    def test_exhaustive_sqrt4(self):
        for bits in itertools.product([0, 1], repeat=8):
            sd = SdInstance(bits[:4], bits[4:])
            inst = encode_sd(sd)
            assert bfs_spanning(inst.g.n, inst.h) == sd.disjoint
            assert decide_css_via_mst(inst) == sd.disjoint

    @pytest.mark.parametrize("k", [8, 16])
    def test_random_pairs(self, k):
        rng = np.random.default_rng(k)
        for _ in range(1000):
            x = rng.integers(0, 2, k)
            # bias toward disjoint pairs so both outcomes appear often
            y = rng.integers(0, 2, k) * (rng.random(k) < 0.9) * (1 - x * (rng.random(k) < 0.9))
            sd = SdInstance(tuple(x.tolist()), tuple(y.tolist()))
            inst = encode_sd(sd)
            assert bfs_spanning(inst.g.n, inst.h) == sd.disjoint


class TestCss:
    def test_rejects_non_edge(self):
        with pytest.raises(ValueError):
            CssInstance(path_graph(3), frozenset({(0, 2)}))

    def test_spanning_tree_of_c4(self):
        g = cycle_graph(4)
        inst = CssInstance(g, frozenset({(0, 1), (1, 2), (2, 3)}))
        assert decide_css_via_mst(inst)
        rw = css_to_mst_weights(inst)
        assert len({w for *_, w in rw.edges}) == rw.m

    def test_empty_h(self):
        assert not decide_css_via_mst(CssInstance(cycle_graph(4), frozenset()))

    def test_threshold_margin(self):
        g = cycle_graph(5)
        rw = css_to_mst_weights(CssInstance(g, frozenset({(0, 1), (1, 2), (2, 3), (3, 4)})))
        s = 2 * g.n * g.m
        assert css_threshold(rw) == g.n * s
        # a spanning H keeps the MST below n - 1/2 units
        assert rw.total_weight(kruskal_mst(rw)) < (g.n - 1) * s + s / 2

    def test_exhaustive_small_atlas(self):
        count = 0
        for g in atlas_graphs(5):
            for h in edge_subsets(g, 2**12, g.m):
                assert decide_css_via_mst(CssInstance(g, h)) == bfs_spanning(g.n, h)
                count += 1
        assert count > 1000


class TestSimulationBudget:
    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            simulation_budget(0.0, 16, 1)
        with pytest.raises(ValueError):
            simulation_budget(0.5, 1, 1)

    def test_delta_is_maximal(self):
        for eps in (1e-5, 1e-4, 1e-3):
            b = simulation_budget(eps, 2**30, 8)
            a, lin, c = eps * 2**15, 30, 2**15 / 8
            assert a * b.delta**2 + lin * b.delta <= c
            assert a * (b.delta + 1) ** 2 + lin * (b.delta + 1) > c

    def test_linear_regime_at_n16(self):
        # at n = 2^16, B = 16 the linear term alone exceeds the right side
        assert simulation_budget(1.0, 2**16, 16).delta == 0
        assert simulation_budget(1e-3, 2**16, 16).delta == 0

    def test_quadrupling_eps_halves_budget(self):
        n, bw = 2**40, 16
        lo, hi = simulation_budget(1e-4, n, bw), simulation_budget(4e-4, n, bw)
        assert 0.45 <= hi.delta_real / lo.delta_real <= 0.55
        assert 0.45 <= hi.delta / lo.delta <= 0.55
        assert 0.5 <= lo.ratio <= 2.0 and 0.5 <= hi.ratio <= 2.0

    @given(st.floats(1e-6, 1.0), st.floats(1.0, 4.0), st.integers(4, 60), st.integers(1, 64))
    @settings(max_examples=100)
    def test_monotone(self, eps, factor, log_n, bw):
        n = 2**log_n
        base = simulation_budget(eps, n, bw)
        assert simulation_budget(min(1.0, eps * factor), n, bw).delta <= base.delta
        assert simulation_budget(eps, n, bw + 1).delta <= base.delta

    def test_constants_exposed(self):
        loose = simulation_budget(1e-4, 2**40, 16, BudgetConstants(quadratic=0.25))
        assert loose.delta_real == pytest.approx(2 * simulation_budget(1e-4, 2**40, 16).delta_real, rel=0.05)


class TestCrossingEdges:
    def test_midpoint_value(self):
        assert crossing_edges_expectation(0.5, 10_000, 50) == pytest.approx(2500)

    @pytest.mark.parametrize("n", [100, 10_000])
    def test_symmetric_about_half(self, n):
        root = math.sqrt(n)
        for side in (1, 7, n // 4, n // 3):
            i1, i2 = side / root, (n - side) / root
            assert crossing_edges_expectation(0.3, n, i1) == pytest.approx(crossing_edges_expectation(0.3, n, i2))

    def test_maximised_at_half(self):
        n = 10_000
        peak = crossing_edges_expectation(0.5, n, 50)
        assert all(crossing_edges_expectation(0.5, n, i) <= peak for i in np.linspace(0, 100, 41))

    def test_aggregated_form_upper_bounds(self):
        n = 10_000
        for delta in (1, 5, 20):
            assert all(
                crossing_edges_expectation(0.2, n, i) <= crossing_edges_aggregated(0.2, n, delta) * 2
                for i in range(0, delta + 1)
            )

    def test_rejects_oversized_cut(self):
        with pytest.raises(ValueError):
            crossing_edges_expectation(0.5, 100, 11)

    def test_monte_carlo(self):
        eps, n, i, rounds = 0.5, 10_000, 50, 400
        counts = monte_carlo_crossings(eps, n, int(i * math.sqrt(n)), rounds, np.random.default_rng(0))
        expected = crossing_edges_expectation(eps, n, i)
        # per-round count ~ Binomial(n, eps / 2)
        sigma = math.sqrt(n * (eps / 2) * (1 - eps / 2) / rounds)
        assert abs(counts.mean() - expected) <= 3 * sigma
