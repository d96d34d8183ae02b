"""Configurations, proximities, and rank structures."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drqa.geometry import (
    Configuration,
    ProximityMatrix,
    RankStructure,
    correlation_similarities,
    euclidean_distances,
    rank_structure,
    ranks_from_config,
)

from oracles import naive_neighbors, naive_ranks


class TestConfiguration:
    def test_basic_construction(self):
        c = Configuration(np.arange(6.0).reshape(3, 2), labels=("a", "b", "c"))
        assert c.n == 3 and c.m == 2
        assert c.fully_observed

    def test_items_are_frozen(self):
        c = Configuration(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            c.items[0, 0] = 1.0

    def test_single_item_rejected(self):
        with pytest.raises(ValueError):
            Configuration(np.zeros((1, 3)))

    def test_non_finite_cell_named(self):
        x = np.zeros((3, 2))
        x[1, 1] = np.nan
        with pytest.raises(ValueError, match="item 1, dimension 1"):
            Configuration(x)

    def test_masked_nan_allowed(self):
        x = np.zeros((3, 2))
        x[1, 1] = np.nan
        mask = np.ones((3, 2), bool)
        mask[1, 1] = False
        c = Configuration(x, mask=mask)
        assert not c.fully_observed

    def test_all_true_mask_collapses(self):
        c = Configuration(np.zeros((2, 2)), mask=np.ones((2, 2), bool))
        assert c.mask is None

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError):
            Configuration(np.zeros((2, 2)), labels=("x", "x"))


class TestEuclideanDistances:
    def test_unit_square(self):
        pts = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], float)
        d = euclidean_distances(Configuration(pts)).values
        assert d[0, 1] == pytest.approx(1.0)
        assert d[0, 3] == pytest.approx(np.sqrt(2))
        assert (np.diag(d) == 0).all()

    def test_manhattan_vs_euclidean(self):
        pts = np.array([[0, 0], [3, 4]], float)
        c = Configuration(pts)
        assert euclidean_distances(c, p=1).values[0, 1] == pytest.approx(7.0)
        assert euclidean_distances(c, p=2).values[0, 1] == pytest.approx(5.0)

    def test_invalid_exponent(self):
        c = Configuration(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            euclidean_distances(c, p=0.5)

    def test_cap_enforced(self):
        c = Configuration(np.zeros((5, 1)))
        with pytest.raises(ValueError, match="cap"):
            euclidean_distances(c, cap=4)

    def test_masked_pairs_use_shared_columns(self):
        x = np.array([[0.0, 10.0], [3.0, 0.0], [0.0, 6.0]])
        mask = np.array([[True, True], [True, False], [True, True]])
        d = euclidean_distances(Configuration(x, mask=mask)).values
        # items 0 and 1 share only the first column
        assert d[0, 1] == pytest.approx(3.0)
        assert d[0, 2] == pytest.approx(4.0)

    def test_no_shared_columns_rejected(self):
        x = np.zeros((2, 2))
        mask = np.array([[True, False], [False, True]])
        with pytest.raises(ValueError, match="share no observed"):
            euclidean_distances(Configuration(x, mask=mask))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.floats(1.0, 4.0))
    def test_triangle_inequality(self, seed, p):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 12))
        d = euclidean_distances(Configuration(rng.standard_normal((n, 3))), p=p).values
        lhs = d[:, :, None]
        rhs = d[:, None, :] + d[None, :, :]
        assert (lhs <= rhs + 1e-9).all()

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_symmetry_and_identity(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((8, 2))
        d = euclidean_distances(Configuration(pts)).values
        assert np.abs(d - d.T).max() == 0.0
        assert (np.diag(d) == 0).all()


class TestCorrelationSimilarities:
    def test_perfect_and_anti_correlation(self):
        x = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [3.0, 2.0, 1.0]])
        s = correlation_similarities(Configuration(x)).values
        assert s[0, 1] == pytest.approx(1.0)
        assert s[0, 2] == pytest.approx(-1.0)
        assert (np.diag(s) == 1.0).all()

    def test_zero_variance_row_named(self):
        x = np.array([[1.0, 1.0, 1.0], [1.0, 2.0, 3.0]])
        with pytest.raises(ValueError, match="zero variance"):
            correlation_similarities(Configuration(x, labels=("flat", "ok")))

    def test_single_dimension_rejected(self):
        with pytest.raises(ValueError):
            correlation_similarities(Configuration(np.zeros((3, 1))))

    def test_range_bounds(self):
        rng = np.random.default_rng(3)
        s = correlation_similarities(Configuration(rng.standard_normal((20, 6)))).values
        assert s.min() >= -1.0 and s.max() <= 1.0

    def test_masked_shared_columns(self):
        x = np.array([[1.0, 2.0, 3.0, 9.0], [2.0, 4.0, 6.0, 0.0], [5.0, 1.0, 2.0, 7.0]])
        mask = np.ones((3, 4), bool)
        mask[1, 3] = False
        s = correlation_similarities(Configuration(x, mask=mask)).values
        # pair (0, 1) correlates over the first three columns only
        assert s[0, 1] == pytest.approx(1.0)


class TestProximityMatrix:
    def test_asymmetry_rejected(self):
        v = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValueError, match="symmetric"):
            ProximityMatrix(v, "distance")

    def test_negative_distance_rejected(self):
        v = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(ValueError):
            ProximityMatrix(v, "distance")

    def test_similarity_diag_must_be_one(self):
        v = np.array([[0.5, 0.1], [0.1, 0.5]])
        with pytest.raises(ValueError):
            ProximityMatrix(v, "similarity")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ProximityMatrix(np.zeros((2, 2)), "affinity")


class TestRankStructure:
    def test_matches_naive_neighbors(self):
        rng = np.random.default_rng(7)
        pts = rng.standard_normal((12, 3))
        rs = ranks_from_config(Configuration(pts))
        nb = naive_neighbors(pts)
        assert (rs.neighbors == np.array(nb)).all()
        assert (rs.ranks == naive_ranks(nb)).all()

    def test_rows_are_permutations(self):
        rng = np.random.default_rng(8)
        rs = ranks_from_config(Configuration(rng.standard_normal((15, 2))))
        n = rs.n
        off = ~np.eye(n, dtype=bool)
        for i in range(n):
            assert sorted(rs.ranks[i][off[i]]) == list(range(1, n))

    def test_ties_break_by_index(self):
        # items 1 and 2 are equidistant from item 0
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [5.0, 0.0]])
        rs = ranks_from_config(Configuration(pts))
        assert rs.ranks[0, 1] == 1
        assert rs.ranks[0, 2] == 2

    def test_similarity_conversion_flips_order(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((10, 5))
        s = correlation_similarities(Configuration(x))
        rs = rank_structure(s)
        assert rs.tie_policy["converted_from_similarity"]
        row = s.values[0].copy()
        row[0] = -np.inf
        assert rs.neighbors[0, 0] == int(np.argmax(row))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000), st.sampled_from(["square", "sqrt", "scale"]))
    def test_invariance_under_monotone_transform(self, seed, kind):
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((10, 3))
        d = euclidean_distances(Configuration(pts))
        if kind == "square":
            v = d.values**2
        elif kind == "sqrt":
            v = np.sqrt(d.values)
        else:
            v = 3.5 * d.values
        rs1 = rank_structure(d)
        rs2 = rank_structure(ProximityMatrix(v, "distance"))
        assert (rs1.ranks == rs2.ranks).all()

    def test_inverse_consistency_validated(self):
        ranks = np.array([[0, 1, 2], [1, 0, 2], [2, 1, 0]])
        bad = np.array([[1, 2], [0, 2], [0, 1]])
        with pytest.raises(ValueError):
            RankStructure(ranks, bad)
