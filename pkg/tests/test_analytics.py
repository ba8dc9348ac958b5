import itertools
import math

import numpy as np
import pytest

from oracles import brute_rank_sum_p, subset_with_sum
from ph_connect.analytics import (
    DistanceMatrix, DistanceMeta, group_distance_test, inter_roi_matrix,
    inter_subject_matrix, load_distance_matrix, save_distance_matrix,
    top_k_lifespans, wilcoxon_rank_sum,
)
from ph_connect.diagrams import INF, PersistenceDiagram
from ph_connect.distances import WassersteinParams, wasserstein_distance
from ph_connect.errors import SchemaError, ValidationError


def dgm(*pairs, dim=1):
    return PersistenceDiagram(dim, tuple(pairs))


class TestMatrices:
    def test_identical_diagrams_zero_matrix(self):
        d = dgm((0, 1), (0.2, 0.9))
        m = inter_roi_matrix({"r1": d, "r2": d, "r3": d})
        assert np.array_equal(m.values, np.zeros((3, 3)))
        assert m.labels == ("r1", "r2", "r3")

    def test_entries_match_pairwise_calls(self):
        rng = np.random.default_rng(0)
        ds = {}
        for name in ("a", "b", "c"):
            pairs = [(float(b), float(b + l))
                     for b, l in rng.uniform(0, 2, (4, 2))]
            ds[name] = dgm(*pairs)
        params = WassersteinParams()
        m = inter_roi_matrix(ds, params)
        for (i, ni), (j, nj) in itertools.combinations(enumerate(ds), 2):
            assert m.values[i, j] == wasserstein_distance(ds[ni], ds[nj], params)

    def test_mixed_dimensions_rejected(self):
        with pytest.raises(ValidationError, match="dimension"):
            inter_roi_matrix({"a": dgm(dim=0), "b": dgm(dim=1)})

    def test_two_subject_matrix(self):
        a, b = dgm((0, 1)), dgm((0, 2))
        m = inter_subject_matrix({"s1": a, "s2": b})
        d = wasserstein_distance(a, b)
        assert m.values[0, 1] == d and m.values[1, 0] == d

    def test_subject_order_permutes_rows(self):
        rng = np.random.default_rng(1)
        ds = {f"s{i}": dgm(*[(float(b), float(b + l))
                             for b, l in rng.uniform(0, 2, (3, 2))])
              for i in range(4)}
        m1 = inter_subject_matrix(ds)
        order = ["s2", "s0", "s3", "s1"]
        m2 = inter_subject_matrix({k: ds[k] for k in order})
        idx = [m1.labels.index(k) for k in order]
        assert np.array_equal(m2.values, m1.values[np.ix_(idx, idx)])

    def test_type_invariants_enforced(self):
        meta = DistanceMeta(dimension=1)
        with pytest.raises(SchemaError):
            DistanceMatrix(labels=("a", "b"),
                           values=np.array([[0.0, 1.0], [2.0, 0.0]]), meta=meta)
        with pytest.raises(SchemaError):
            DistanceMatrix(labels=("a", "b"),
                           values=np.array([[0.0, -1.0], [-1.0, 0.0]]), meta=meta)
        with pytest.raises(SchemaError):
            DistanceMatrix(labels=("a", "b"),
                           values=np.array([[0.5, 1.0], [1.0, 0.0]]), meta=meta)

    def test_csv_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        n = 5
        vals = rng.uniform(0.1, 2.0, size=(n, n))
        vals = (vals + vals.T) / 2
        np.fill_diagonal(vals, 0.0)
        m = DistanceMatrix(labels=tuple(f"s{i}" for i in range(n)), values=vals,
                           meta=DistanceMeta(dimension=1, network="SYN",
                                             filtration="rips"))
        save_distance_matrix(m, tmp_path / "m.csv")
        again = load_distance_matrix(tmp_path / "m.csv")
        assert again.labels == m.labels
        assert np.array_equal(again.values, m.values)
        assert again.meta == m.meta


class TestWilcoxon:
    def test_small_exact_example(self):
        r = wilcoxon_rank_sum([1, 2], [3, 4])
        assert r.method == "exact"
        assert r.p_value == pytest.approx(1 / 3, abs=1e-15)

    def test_identical_samples_no_evidence(self):
        r = wilcoxon_rank_sum([1, 2, 3], [1, 2, 3])
        assert r.p_value >= 0.99

    def test_exact_matches_brute_enumeration(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            n1 = int(rng.integers(1, 7))
            n2 = int(rng.integers(1, 7))
            if n1 + n2 > 8:
                continue
            vals = rng.choice(1000, size=n1 + n2, replace=False).astype(float)
            x, y = list(vals[:n1]), list(vals[n1:])
            got = wilcoxon_rank_sum(x, y)
            assert got.method == "exact"
            assert got.p_value == pytest.approx(brute_rank_sum_p(x, y),
                                                abs=1e-12)

    def test_normal_close_to_exact_midrange(self):
        # exhaustive over shapes and achievable statistics
        for n in range(10, 21):
            for n1 in range(2, n - 1):
                n2 = n - n1
                lo, hi = n1 * (n1 + 1) // 2, n1 * (n1 + 2 * n2 + 1) // 2
                for w in range(lo, hi + 1, max(1, (hi - lo) // 12)):
                    x = [float(v) for v in subset_with_sum(n, n1, w)]
                    y = [float(v) for v in sorted(set(range(1, n + 1)) - set(map(int, x)))]
                    pe = wilcoxon_rank_sum(x, y, method="exact").p_value
                    pn = wilcoxon_rank_sum(x, y, method="normal").p_value
                    assert abs(pe - pn) <= 0.02, (n1, n2, w)

    def test_planted_shift_significant(self):
        rng = np.random.default_rng(4)
        x = rng.normal(0.0, 1.0, 50)
        y = rng.normal(2.0, 1.0, 50)
        r = wilcoxon_rank_sum(x, y)
        assert r.method == "normal_approx"
        assert r.p_value < 0.001

    def test_empty_sample_rejected(self):
        with pytest.raises(ValidationError):
            wilcoxon_rank_sum([], [1.0])

    def test_exact_with_ties_rejected(self):
        with pytest.raises(ValidationError, match="tie"):
            wilcoxon_rank_sum([1, 1], [2, 3], method="exact")


class TestGroupTest:
    def make_matrix(self, rng, ids):
        n = len(ids)
        vals = rng.uniform(0.1, 1.0, size=(n, n))
        vals = (vals + vals.T) / 2
        np.fill_diagonal(vals, 0.0)
        return DistanceMatrix(labels=tuple(ids), values=vals,
                              meta=DistanceMeta(dimension=1))

    def test_identical_groups_no_evidence(self):
        ids = [f"s{i}" for i in range(8)]
        vals = np.zeros((8, 8))
        m = DistanceMatrix(labels=tuple(ids), values=vals,
                           meta=DistanceMeta(dimension=1))
        groups = {sid: ("A" if i < 4 else "B") for i, sid in enumerate(ids)}
        r = group_distance_test(m, groups, "A", "B")
        assert r.p_value >= 0.99

    def test_block_sample_sizes(self):
        rng = np.random.default_rng(5)
        ids = [f"s{i}" for i in range(9)]
        m = self.make_matrix(rng, ids)
        groups = {sid: ("A" if i < 5 else "B") for i, sid in enumerate(ids)}
        r = group_distance_test(m, groups, "A", "B")
        assert (r.n1, r.n2) == (5 * 4 // 2, 4 * 3 // 2)

    def test_relabeling_within_groups_invariant(self):
        rng = np.random.default_rng(6)
        ids = [f"s{i}" for i in range(10)]
        m = self.make_matrix(rng, ids)
        groups = {sid: ("A" if i < 5 else "B") for i, sid in enumerate(ids)}
        r1 = group_distance_test(m, groups, "A", "B")
        perm = ids[:5][::-1] + ids[5:][::-1]
        idx = [ids.index(s) for s in perm]
        m2 = DistanceMatrix(labels=tuple(perm),
                            values=m.values[np.ix_(idx, idx)], meta=m.meta)
        r2 = group_distance_test(m2, groups, "A", "B")
        assert r1.p_value == r2.p_value

    def test_small_group_rejected(self):
        rng = np.random.default_rng(7)
        ids = ["a1", "a2", "b1"]
        m = self.make_matrix(rng, ids)
        groups = {"a1": "A", "a2": "A", "b1": "B"}
        with pytest.raises(ValidationError, match=">= 2"):
            group_distance_test(m, groups, "A", "B")

    def test_missing_subject_rejected(self):
        rng = np.random.default_rng(8)
        m = self.make_matrix(rng, ["a1", "a2", "b1", "b2"])
        groups = {"a1": "A", "a2": "A", "b1": "B", "b2": "B", "b3": "B"}
        with pytest.raises(ValidationError, match="missing"):
            group_distance_test(m, groups, "A", "B")


class TestTopKLifespans:
    def test_cap_and_sort(self):
        f = top_k_lifespans(dgm((0, 3), (1, 2), (0, INF), dim=0), k=3, cap=5.0)
        assert f.lifespans == (5.0, 3.0, 1.0)

    def test_empty_diagram_pads(self):
        f = top_k_lifespans(dgm(), k=10)
        assert f.lifespans == (0.0,) * 10

    def test_truncates_to_largest_k(self):
        rng = np.random.default_rng(9)
        pairs = [(float(b), float(b + l)) for b, l in rng.uniform(0, 1, (12, 2))]
        f = top_k_lifespans(dgm(*pairs), k=10)
        all_spans = sorted((d - b for b, d in pairs), reverse=True)
        assert f.lifespans == tuple(all_spans[:10])

    def test_invariant_under_permutation_and_zero_pairs(self):
        pairs = [(0.1, 0.5), (0.2, 0.9), (0.3, 0.3)]
        f1 = top_k_lifespans(dgm(*pairs), k=4)
        f2 = top_k_lifespans(dgm(*reversed(pairs)), k=4)
        f3 = top_k_lifespans(dgm(*(pairs + [(0.7, 0.7)])), k=4)
        assert f1.lifespans == f2.lifespans
        # the zero-persistence pair only displaces a padding zero
        assert f3.lifespans == f1.lifespans

    def test_infinite_needs_cap(self):
        with pytest.raises(ValidationError, match="cap"):
            top_k_lifespans(dgm((0, INF)), k=2)

    def test_cap_below_finite_death_rejected(self):
        with pytest.raises(ValidationError, match="cap"):
            top_k_lifespans(dgm((0, INF), (0, 3.0)), k=2, cap=1.0)
