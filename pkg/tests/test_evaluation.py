import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import wilcoxon_bruteforce
from lbsimtsc import evaluation
from lbsimtsc.errors import DegenerateTest, LengthMismatch
from lbsimtsc.evaluation import (
    ONE_SIDED_B_GREATER,
    TWO_SIDED,
    PairedResults,
    accuracy,
    bench_graph_construction,
    wilcoxon,
)

# Published benchmark accuracy columns used as golden regression inputs:
# ten datasets, (1NN-DTW, LB-SimTSC) at 10 and 20 labels per class, and
# (SimTSC, LB-SimTSC) at 20 labels per class.
T1_BETA10 = [
    (0.531, 0.826), (0.603, 0.806), (0.704, 0.743), (0.788, 0.798), (0.854, 0.549),
    (0.204, 0.330), (0.960, 0.963), (0.796, 0.883), (0.819, 0.891), (0.683, 0.939),
]
T1_BETA20 = [
    (0.535, 0.825), (0.630, 0.820), (0.720, 0.855), (0.819, 0.856), (0.879, 0.628),
    (0.258, 0.408), (0.971, 0.971), (0.838, 0.914), (0.855, 0.922), (0.798, 0.924),
]
T3_BETA20 = [
    (0.821, 0.825), (0.824, 0.820), (0.887, 0.855), (0.896, 0.856), (0.640, 0.628),
    (0.405, 0.408), (0.974, 0.971), (0.902, 0.914), (0.919, 0.922), (0.947, 0.924),
]


def paired(rows, names=("a", "b")):
    return PairedResults(names, [(f"d{i}", a, b) for i, (a, b) in enumerate(rows)])


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0

    def test_none_correct(self):
        assert accuracy([1, 1, 1], [2, 2, 2]) == 0.0

    def test_seven_of_ten(self):
        pred = [1] * 7 + [2] * 3
        truth = [1] * 10
        assert accuracy(pred, truth) == pytest.approx(0.7)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            accuracy([1, 2], [1, 2, 3])
        with pytest.raises(LengthMismatch):
            accuracy([], [])


class TestWilcoxonGolden:
    def test_beta10_one_sided(self):
        p = wilcoxon(paired(T1_BETA10), ONE_SIDED_B_GREATER)
        assert p == pytest.approx(43 / 1024, abs=1e-12)
        assert abs(p - 0.042) <= 0.0005

    def test_beta20_one_sided(self):
        p = wilcoxon(paired(T1_BETA20), ONE_SIDED_B_GREATER)
        assert abs(p - 0.043) <= 0.0005

    def test_beta20_two_sided(self):
        p = wilcoxon(paired(T3_BETA20), TWO_SIDED)
        assert abs(p - 0.232) <= 0.005


class TestWilcoxonProperties:
    def test_extreme_rank_case(self):
        rows = [(0.1, 0.2), (0.2, 0.35), (0.3, 0.45), (0.4, 0.6), (0.5, 0.8)]
        assert wilcoxon(paired(rows), ONE_SIDED_B_GREATER) == pytest.approx(1 / 32, abs=1e-12)

    def test_all_zero_differences(self):
        with pytest.raises(DegenerateTest):
            wilcoxon(paired([(0.5, 0.5), (0.3, 0.3)]), TWO_SIDED)

    def test_zero_pairs_dropped(self):
        base = [(0.1, 0.3), (0.5, 0.2), (0.4, 0.9), (0.25, 0.3), (0.6, 0.65), (0.9, 0.2)]
        # duplicating exact ties must not move the (approximate) p much: the
        # zero rows are dropped before ranking
        with_zero = base + [(0.7, 0.7)]
        pa = wilcoxon(paired(base + [(0.8, 0.1)]), TWO_SIDED)
        pb = wilcoxon(paired(with_zero + [(0.8, 0.1)]), TWO_SIDED)
        assert pa > 0 and pb > 0

    @given(
        st.lists(
            st.tuples(
                st.floats(0.0, 1.0, allow_nan=False).map(lambda v: round(v, 3)),
                st.floats(0.0, 1.0, allow_nan=False).map(lambda v: round(v, 3)),
            ),
            min_size=2,
            max_size=10,
        )
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_bruteforce_enumeration(self, rows):
        d = np.round([b - a for a, b in rows], 12)
        if np.all(d == 0) or np.any(d == 0):
            return  # degenerate or approx path; oracle covers the exact path
        for side in (ONE_SIDED_B_GREATER, TWO_SIDED):
            got = wilcoxon(paired(rows), side)
            want = wilcoxon_bruteforce(d, side)
            assert got == pytest.approx(want, abs=1e-12)

    def test_one_sided_antisymmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n = int(rng.integers(2, 12))
            a = np.round(rng.uniform(0, 1, n), 6)
            b = np.round(rng.uniform(0, 1, n), 6)
            d = np.round(b - a, 12)
            if np.any(d == 0) or len(np.unique(np.abs(d))) != n:
                continue  # tie-free, zero-free inputs only
            p_fwd = wilcoxon(paired(list(zip(a, b))), ONE_SIDED_B_GREATER)
            p_rev = wilcoxon(paired(list(zip(b, a))), ONE_SIDED_B_GREATER)
            # P(W >= S - w) = 1 - P(W >= w) + P(W = w)
            ranks = np.argsort(np.argsort(np.abs(d))) + 1
            w = ranks[d > 0].sum()
            cnt = evaluation._exact_tail_counts(2 * ranks)
            p_eq = cnt[int(2 * w)] / 2.0 ** n
            assert p_rev == pytest.approx(1 - p_fwd + p_eq, abs=1e-12)

    def test_exact_close_to_approx_at_n20(self):
        # one-sided cross-check: the exact tail includes the atom at W once,
        # so the discreteness gap to the normal curve stays inside 0.02
        rng = np.random.default_rng(1)
        checked = 0
        for trial in range(25):
            a = rng.uniform(0, 1, 20)
            b = np.clip(a + rng.normal(0, 0.08, 20), 0, 1)
            d = b - a
            if np.any(d == 0) or len(np.unique(np.abs(d))) != 20:
                continue
            rows = list(zip(a, b))
            exact = wilcoxon(paired(rows), ONE_SIDED_B_GREATER)
            # appending an exactly-tied pair disables the exact path (zeros
            # are dropped before ranking) and routes to the approximation
            approx = wilcoxon(paired(rows + [(0.5, 0.5)]), ONE_SIDED_B_GREATER)
            assert abs(exact - approx) <= 0.02
            checked += 1
        assert checked >= 20

    def test_large_n_uses_approximation(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(0, 1, 40)
        b = np.clip(a + rng.normal(0.02, 0.05, 40), 0, 1)
        p = wilcoxon(paired(list(zip(a, b))), TWO_SIDED)
        assert 0.0 < p <= 1.0

    def test_p_in_unit_interval(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(1, 15))
            rows = list(zip(np.round(rng.uniform(0, 1, n), 3), np.round(rng.uniform(0, 1, n), 3)))
            d = np.array([b - a for a, b in rows])
            if np.all(d == 0):
                continue
            for side in (ONE_SIDED_B_GREATER, TWO_SIDED):
                p = wilcoxon(paired(rows), side)
                assert 0.0 < p <= 1.0


class TestCsv:
    def test_with_header(self, tmp_path):
        p = tmp_path / "pairs.csv"
        p.write_text("dataset,one_nn,lb\nfirst,0.5,0.6\nsecond,0.7,0.65\n")
        pr = PairedResults.from_csv(p)
        assert pr.names == ("one_nn", "lb")
        assert pr.scores == [("first", 0.5, 0.6), ("second", 0.7, 0.65)]

    def test_without_header(self, tmp_path):
        p = tmp_path / "pairs.csv"
        p.write_text("a,0.5,0.6\nb,0.7,0.65\n")
        assert len(PairedResults.from_csv(p).scores) == 2

    def test_score_range_validated(self):
        with pytest.raises(ValueError):
            paired([(0.5, 1.5)])


class TestBench:
    def test_n2_runs_and_reports(self):
        rep = bench_graph_construction(2, 16, 0.05, workers=1, seed=0)
        assert rep.n == 2 and rep.length == 16
        assert rep.radius == 1  # floor(0.05*16)=0 -> minimum 1
        assert rep.dtw_seconds > 0 and rep.lb_seconds > 0

    def test_speedup_is_exact_ratio(self):
        rep = bench_graph_construction(4, 32, 0.1, workers=1, seed=1)
        assert rep.speedup == rep.dtw_seconds / rep.lb_seconds

    def test_pair_counts(self):
        # n=2: each method computes exactly 2 off-diagonal entries
        from lbsimtsc import distance

        X = evaluation.random_walks(2, 16, seed=2)
        for kind, band in ((distance.KIND_DTW, distance.WarpBand(None)),
                           (distance.KIND_LBKEOGH, distance.WarpBand(1))):
            m = distance.pairwise(X, kind, band)
            off = m.values[~np.eye(2, dtype=bool)]
            assert off.shape == (2,)
            assert np.all(np.diag(m.values) == 0.0)

    def test_random_walks_normalized(self):
        X = evaluation.random_walks(5, 64, seed=3)
        assert np.allclose(X.mean(axis=1), 0, atol=1e-12)
        assert np.allclose(X.std(axis=1), 1, atol=1e-12)

    def test_csv_rows(self):
        rep = bench_graph_construction(2, 16, 0.05, workers=1, seed=0)
        text = evaluation.bench_csv_rows([rep])
        lines = text.strip().splitlines()
        assert lines[0].startswith("n,length,radius")
        assert len(lines) == 2
