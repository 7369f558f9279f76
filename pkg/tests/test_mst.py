from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smoothmst.engine import RoundEngine, overlay_from_pairs
from smoothmst.graph import (
    EdgeRef,
    Origin,
    WeightedGraph,
    complete_graph,
    generate_random_connected,
    kruskal_mst,
    path_graph,
)
from smoothmst.mst import (
    FragmentForest,
    GhsStats,
    SmoothingPrecondition,
    baseline_mst,
    boruvka_smoothed,
    build_super_graph,
    controlled_ghs,
    ghs_phases,
    local_moe,
    smoothed_mst_basic,
    smoothed_mst_improved,
    smoothing_rounds,
    tree_broadcast,
    tree_convergecast,
)
from smoothmst.routing import Backbone, BackboneRouter


def random_p(n: int) -> float:
    return min(1.0, 3 * math.log(n) / n)


class TestForest:
    def test_singletons_valid(self):
        f = FragmentForest.singletons(5)
        f.validate()
        assert f.count == 5 and f.roots == list(range(5))

    def test_from_tree_edges(self):
        f = FragmentForest.from_tree_edges(6, [(0, 1), (1, 2), (4, 5)])
        f.validate()
        assert f.roots == [0, 3, 4]
        assert f.sizes() == {0: 3, 3: 1, 4: 2}
        assert f.heights()[0] == 2 and f.diameters()[0] == 2

    def test_validate_catches_non_mst_edge(self):
        g = WeightedGraph(3, [(0, 1, 1), (1, 2, 2), (0, 2, 3)])
        f = FragmentForest.from_tree_edges(3, [(0, 2)])
        with pytest.raises(AssertionError):
            f.validate(kruskal_mst(g))

    def test_validate_catches_bad_parent(self):
        f = FragmentForest.from_tree_edges(3, [(0, 1), (1, 2)])
        f.parent[2] = 0
        with pytest.raises(AssertionError):
            f.validate()

    def test_convergecast_and_broadcast(self):
        eng = RoundEngine(path_graph(5), 0)
        f = FragmentForest.from_tree_edges(5, [(0, 1), (1, 2), (3, 4)])
        got = tree_convergecast(eng, f, {u: (u,) for u in range(5)}, lambda a, b: (a[0] + b[0],))
        assert got == {0: (3,), 3: (7,)}
        assert eng.round == 2  # height of the taller tree
        down = tree_broadcast(eng, f, {0: (9,), 3: (8,)})
        assert down == {0: (9,), 1: (9,), 2: (9,), 3: (8,), 4: (8,)}


class TestLocalMoe:
    @pytest.mark.parametrize("seed", range(500))
    def test_fragment_moe_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 25))
        g = generate_random_connected(n, random_p(n), seed)
        mst = sorted(kruskal_mst(g), key=lambda e: (e.u, e.v))
        keep = [e for e in mst if rng.random() < 0.6]
        f = FragmentForest.from_tree_edges(n, keep)
        f.validate(set(mst))
        eng = RoundEngine(g, seed)
        labels = {v: f.fid[v] for v in range(n)}
        local = {u: local_moe(eng, u, f.fid[u], labels) for u in range(n)}
        got = tree_convergecast(eng, f, local, min)
        for r in f.roots:
            crossing = [(w, a, b) for a, b, w in g.edges if (f.fid[a] == r) != (f.fid[b] == r)]
            want = min(crossing)[0] if crossing else math.inf
            assert got[r][0] == want
            if crossing:
                # the MOE is an MST edge (cut property)
                assert EdgeRef.of(got[r][1], got[r][2]) in set(mst)


class TestControlledGhs:
    def test_zero_phases_leaves_singletons(self):
        eng = RoundEngine(path_graph(6), 0)
        f = controlled_ghs(eng, 0)
        assert f.count == 6 and eng.round == 0

    def test_path_one_phase(self):
        g = path_graph(8)
        eng = RoundEngine(g, 0)
        stats = GhsStats()
        f = controlled_ghs(eng, 1, stats=stats)
        f.validate(kruskal_mst(g))
        assert f.count < 8
        assert max(f.sizes().values()) <= 8
        assert stats.phases_run == 0 or stats.rounds_per_phase

    def test_run_to_completion_equals_kruskal(self):
        g = generate_random_connected(40, random_p(40), 3)
        eng = RoundEngine(g, 3)
        f = controlled_ghs(eng, None)
        assert f.count == 1
        assert f.tree_edges == kruskal_mst(g)

    @pytest.mark.parametrize("seed", range(4))
    def test_n256_fragment_shape(self, seed):
        n, phases = 256, 3
        g = generate_random_connected(n, random_p(n), seed)
        eng = RoundEngine(g, seed)
        stats = GhsStats()
        f = controlled_ghs(eng, phases, stats=stats)
        f.validate(kruskal_mst(g))
        # each active fragment at least doubles per phase
        assert all(size >= 2**phases for size in f.sizes().values())
        assert stats.fragments_per_phase == sorted(stats.fragments_per_phase, reverse=True)

    @given(st.integers(2, 30), st.integers(0, 10**6), st.integers(0, 4))
    @settings(max_examples=25)
    def test_partial_forest_is_mst_subforest(self, n, seed, phases):
        g = generate_random_connected(n, random_p(n), seed)
        f = controlled_ghs(RoundEngine(g, seed), phases)
        f.validate(kruskal_mst(g))


class TestBoruvka:
    def _run(self, g, forest=None, seed=0):
        eng = RoundEngine(g, seed)
        full = [(a, b) for a in range(g.n) for b in range(a + 1, g.n)]
        eng.overlay = overlay_from_pairs(g.n, full)
        router = BackboneRouter(Backbone(eng.overlay.adjacency), 2, eng)
        return boruvka_smoothed(eng, forest or FragmentForest.singletons(g.n), router)

    def test_triangle(self):
        g = WeightedGraph(3, [(0, 1, 1), (1, 2, 2), (0, 2, 3)])
        res = self._run(g)
        assert res.edges == kruskal_mst(g)
        assert res.iterations >= 1

    def test_already_one_fragment(self):
        g = path_graph(5)
        f = FragmentForest.from_tree_edges(5, g.edge_refs())
        res = self._run(g, f)
        assert res.edges == kruskal_mst(g)
        assert res.iterations == 0

    @pytest.mark.parametrize("seed", range(6))
    def test_random_graphs(self, seed):
        g = generate_random_connected(30, random_p(30), seed)
        res = self._run(g, seed=seed)
        assert res.edges == kruskal_mst(g)
        assert res.history == sorted(res.history, reverse=True)
        assert not res.flagged


class TestSmoothedAlgorithms:
    def test_basic_k4(self):
        res = smoothed_mst_basic(complete_graph(4), 1.0, 0)
        assert res.edges == kruskal_mst(complete_graph(4))
        assert sum(complete_graph(4).weight(e.u, e.v) for e in res.edges) == 6

    @pytest.mark.parametrize("algo", [smoothed_mst_basic, smoothed_mst_improved])
    @pytest.mark.parametrize("eps", [0.0, -0.5, 1.5])
    def test_rejects_bad_epsilon(self, algo, eps):
        with pytest.raises(SmoothingPrecondition):
            algo(path_graph(4), eps, 0)

    def test_smoothing_rounds_formula(self):
        assert smoothing_rounds(512, 0.25) == 360
        assert smoothing_rounds(512, 0.125) == 720
        assert smoothing_rounds(512, 0.25, improved=True) == 180
        assert ghs_phases(1.0) == 0 and ghs_phases(1 / 16) == 2 and ghs_phases(1 / 64) == 3

    def test_basic_smoothing_rounds_halving_eps(self):
        g = generate_random_connected(512, random_p(512), 0)
        for seed in range(20):
            a = smoothed_mst_basic(g, 0.5, seed)
            b = smoothed_mst_basic(g, 0.25, seed)
            assert a.edges == b.edges == kruskal_mst(g)
            assert 1.8 <= b.report.smoothing_rounds / a.report.smoothing_rounds <= 2.2

    @pytest.mark.parametrize("seed", range(4))
    def test_improved_eps_one(self, seed):
        g = generate_random_connected(48, random_p(48), seed)
        res = smoothed_mst_improved(g, 1.0, seed)
        assert res.edges == kruskal_mst(g)
        assert res.fragments_after_ghs == 48  # zero GHS phases

    @pytest.mark.parametrize("seed", range(4))
    def test_improved_small_eps(self, seed):
        g = generate_random_connected(128, random_p(128), seed)
        checks = []

        def on_iteration(it, edges, sf):
            checks.append(it)
            FragmentForest.from_tree_edges(g.n, edges).validate(kruskal_mst(g))
            # nodes sharing a super-fragment id are connected by found edges
            f = FragmentForest.from_tree_edges(g.n, edges)
            for u in range(g.n):
                for v in range(g.n):
                    if sf[u] == sf[v]:
                        assert f.fid[u] == f.fid[v]

        res = smoothed_mst_improved(g, 1 / 16, seed, on_iteration=on_iteration)
        assert res.edges == kruskal_mst(g)
        assert checks
        assert all(e.origin is Origin.BASE for e in res.edges)
        rep = res.report
        rep.check()
        assert rep.smoothing_rounds == smoothing_rounds(128, 1 / 16, improved=True)
        assert res.fragments_after_ghs < 128

    def test_improved_falls_back_when_eps_tiny(self):
        g = path_graph(4)
        res = smoothed_mst_improved(g, 1 / 64, 0)
        assert res.ghs is None
        assert res.edges == kruskal_mst(g)

    def test_build_super_graph(self):
        g = path_graph(6)
        f = FragmentForest.from_tree_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)])
        ov = overlay_from_pairs(6, [(0, 5), (1, 4), (0, 2)])
        sg = build_super_graph(f, g, ov)
        assert sg.roots == [0, 3] and sg.n_prime == 2
        assert sg.base_edges == {(0, 1): (3, 2, 3)}
        assert sg.overlay_edges == {(0, 1): (0, 5)}
        assert sg.p_prime == 1.0 and sg.overlay_connected()

    def test_super_graph_identity_and_single(self):
        g = path_graph(4)
        sg = build_super_graph(FragmentForest.singletons(4), g, overlay_from_pairs(4, [(0, 3)]))
        assert sg.fragment_of == [0, 1, 2, 3]
        assert sg.base_edges == {(0, 1): (1, 0, 1), (1, 2): (2, 1, 2), (2, 3): (3, 2, 3)}
        one = build_super_graph(FragmentForest.from_tree_edges(4, g.edge_refs()), g, overlay_from_pairs(4, []))
        assert one.n_prime == 1 and math.isnan(one.p_prime) and one.density_floor == 0.0

    @pytest.mark.parametrize("seed", range(3))
    def test_baseline(self, seed):
        g = generate_random_connected(64, random_p(64), seed)
        res = baseline_mst(g, seed)
        assert res.edges == kruskal_mst(g)
        assert res.report.smoothing_rounds == 0
        assert res.ghs.completed

    def test_deterministic(self):
        g = generate_random_connected(64, random_p(64), 1)
        a, b = smoothed_mst_improved(g, 0.25, 5), smoothed_mst_improved(g, 0.25, 5)
        assert a.report == b.report and a.edges == b.edges
