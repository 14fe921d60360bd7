import json
import math

import numpy as np
import pytest

from lbsimtsc import graph
from lbsimtsc.errors import InvalidDistance, KTooLarge
from lbsimtsc.graph import BatchGraph, GraphConfig, build_graph, select_neighbors, to_similarity


def rng_for(seed=0, batch=0, row=0):
    return graph._row_rng(seed, batch, row)


class TestSimilarity:
    def test_zero_distance_is_one(self):
        for alpha in (0.0, 0.3, 11.0):
            assert to_similarity(np.array([0.0]), alpha)[0] == 1.0

    def test_alpha_zero_collapses(self):
        assert np.all(to_similarity(np.array([0.0, 3.0, 100.0]), 0.0) == 1.0)

    def test_hand_value(self):
        got = to_similarity(np.array([0.1]), 11.0)[0]
        assert got == pytest.approx(math.exp(-1.1), abs=1e-12)
        assert got == pytest.approx(0.33287, abs=5e-6)

    def test_negative_distance(self):
        with pytest.raises(InvalidDistance):
            to_similarity(np.array([-0.1]), 1.0)

    def test_range(self):
        d = np.random.default_rng(0).uniform(0, 50, size=200)
        a = to_similarity(d, 2.0)
        assert np.all((a > 0) & (a <= 1))


class TestSelectNeighbors:
    def test_forced_zero_set(self):
        d = np.array([0.0, 0.0, 0.0, 0.5])
        idx, w = select_neighbors(d, to_similarity(d, 1.0), 3, rng_for())
        assert sorted(idx.tolist()) == [0, 1, 2]
        assert np.all(w == 1.0 / 3.0)

    def test_topk_branch(self):
        d = np.array([0.0, 0.2, 0.4, 0.9])
        a = to_similarity(d, 1.0)
        idx, w = select_neighbors(d, a, 3, rng_for())
        assert sorted(idx.tolist()) == [0, 1, 2]
        order = np.argsort(idx)
        assert np.allclose(np.sort(w)[::-1], [1.0, math.exp(-0.2), math.exp(-0.4)], atol=1e-12)

    def test_deterministic_given_seed(self):
        d = np.zeros(10)
        a = to_similarity(d, 1.0)
        one = select_neighbors(d, a, 3, rng_for(seed=5, batch=2, row=7))
        two = select_neighbors(d, a, 3, rng_for(seed=5, batch=2, row=7))
        assert np.array_equal(one[0], two[0])

    def test_k_too_large(self):
        d = np.zeros(2)
        with pytest.raises(KTooLarge):
            select_neighbors(d, to_similarity(d, 1.0), 3, rng_for())

    def test_ties_lowest_index(self):
        # equal similarities: stable ordering keeps the lowest indices
        d = np.array([0.0, 0.7, 0.7, 0.7, 0.7])
        a = to_similarity(d, 1.0)
        idx, _ = select_neighbors(d, a, 3, rng_for())
        assert sorted(idx.tolist()) == [0, 1, 2]


class TestBuildGraph:
    def test_row_stochastic(self):
        rng = np.random.default_rng(0)
        d = rng.uniform(0, 2, size=(30, 30))
        np.fill_diagonal(d, 0.0)
        g = build_graph(d, GraphConfig(alpha=1.5, k=4, seed=1))
        E = g.as_matrix()
        assert np.allclose(E.sum(axis=1), 1.0, atol=1e-9)

    def test_zero_branch_exact_uniform(self):
        d = np.zeros((6, 6))
        g = build_graph(d, GraphConfig(alpha=11.0, k=3, seed=0))
        for w in g.weights:
            assert np.all(w == 1.0 / 3.0)

    def test_single_node_self_edge(self):
        g = build_graph(np.zeros((1, 1)), GraphConfig(alpha=1.0, k=1, seed=0))
        assert g.targets[0].tolist() == [0]
        assert g.weights[0].tolist() == [1.0]

    def test_topk_normalization_hand_case(self):
        # frozen from direct evaluation of the similarity/normalization chain
        d = np.array([[0.0, 0.2, 0.4, 0.9]] * 4)
        g = build_graph(d, GraphConfig(alpha=1.0, k=3, seed=0))
        s = 1.0 + math.exp(-0.2) + math.exp(-0.4)
        want = np.array([1.0, math.exp(-0.2), math.exp(-0.4)]) / s
        assert g.targets[0].tolist() == [0, 1, 2]
        assert np.allclose(g.weights[0], want, atol=1e-12)
        assert np.allclose(want, [0.401760, 0.328934, 0.269307], atol=5e-7)
        assert g.weights[0].sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_branch_ignores_alpha(self):
        rng = np.random.default_rng(3)
        d = (rng.uniform(0, 1, size=(20, 20)) < 0.5).astype(float) * rng.uniform(0.1, 2, (20, 20))
        np.fill_diagonal(d, 0.0)
        a = build_graph(d, GraphConfig(alpha=0.5, k=3, seed=9))
        b = build_graph(d, GraphConfig(alpha=50.0, k=3, seed=9))
        for i in range(20):
            if np.sum(d[i] == 0.0) >= 3:
                assert np.array_equal(a.targets[i], b.targets[i])
                assert np.array_equal(a.weights[i], b.weights[i])

    def test_topk_selection_scale_invariant(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            m = int(rng.integers(4, 30))
            d = rng.uniform(0.01, 3.0, size=m)  # no zeros: top-k branch
            row = np.vstack([d] * 1)
            idx1, _ = select_neighbors(d, to_similarity(d, 2.0), 3, rng_for())
            c = float(rng.uniform(0.1, 10))
            idx2, _ = select_neighbors(c * d, to_similarity(c * d, 2.0), 3, rng_for())
            assert np.array_equal(idx1, idx2)

    def test_self_always_qualifies(self):
        rng = np.random.default_rng(5)
        d = rng.uniform(0.5, 2, size=(8, 8))
        np.fill_diagonal(d, 0.0)
        g = build_graph(d, GraphConfig(alpha=1.0, k=1, seed=0))
        for i in range(8):
            assert g.targets[i].tolist() == [i]

    def test_exclude_self(self):
        rng = np.random.default_rng(6)
        d = rng.uniform(0.5, 2, size=(8, 8))
        np.fill_diagonal(d, 0.0)
        g = build_graph(d, GraphConfig(alpha=1.0, k=3, seed=0, exclude_self=True))
        for i in range(8):
            assert i not in g.targets[i].tolist()

    def test_no_duplicate_targets(self):
        rng = np.random.default_rng(7)
        d = (rng.uniform(0, 1, size=(40, 40)) < 0.4).astype(float) * rng.uniform(0.1, 2, (40, 40))
        np.fill_diagonal(d, 0.0)
        g = build_graph(d, GraphConfig(alpha=2.0, k=5, seed=3))
        for t in g.targets:
            assert len(np.unique(t)) == len(t) == 5

    def test_batch_id_changes_sampling(self):
        d = np.zeros((10, 10))
        a = build_graph(d, GraphConfig(alpha=1.0, k=3, seed=0), batch_id=0)
        b = build_graph(d, GraphConfig(alpha=1.0, k=3, seed=0), batch_id=1)
        assert any(not np.array_equal(x, y) for x, y in zip(a.targets, b.targets))

    def test_negative_distance_rejected(self):
        d = np.zeros((3, 3))
        d[0, 1] = -1.0
        with pytest.raises(InvalidDistance):
            build_graph(d, GraphConfig(alpha=1.0, k=2, seed=0))

    def test_json_dump_schema(self):
        d = np.zeros((3, 3))
        cfg = GraphConfig(alpha=2.0, k=2, seed=0)
        g = build_graph(d, cfg)
        doc = json.loads(g.dump_json(cfg))
        assert doc["m"] == 3 and doc["k"] == 2 and doc["alpha"] == 2.0
        assert len(doc["edges"]) == 3
        assert set(doc["edges"][0][0]) == {"to", "w"}
