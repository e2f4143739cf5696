import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sociolens.topics import (
    TopicModel,
    cosine_similarities,
    fit_topics,
    inertia,
    kmeans,
    nearest_claims,
    project_2d,
)

from oracles import oracle_cosine_topk, oracle_pca_coords


def blob_points(n_per, centers, seed, scale=0.15):
    rng = np.random.default_rng(seed)
    parts = [c + scale * rng.standard_normal((n_per, len(c))) for c in np.asarray(centers, float)]
    return np.vstack(parts)


class TestKmeans:
    def test_recovers_well_separated_blobs(self):
        centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]
        points = blob_points(40, centers, seed=1)
        assign, centroids = kmeans(points, k=3, seed=0)
        # each blob is internally pure
        for b in range(3):
            block = assign[b * 40:(b + 1) * 40]
            assert len(set(block.tolist())) == 1
        # and the three blobs get three different clusters
        assert len({int(assign[0]), int(assign[40]), int(assign[80])}) == 3

    def test_centroids_are_member_means(self):
        points = blob_points(25, [[0, 0], [5, 5]], seed=2)
        assign, centroids = kmeans(points, k=2, seed=3)
        for c in range(2):
            np.testing.assert_allclose(centroids[c], points[assign == c].mean(axis=0))

    def test_deterministic_per_seed(self):
        points = blob_points(30, [[0, 0, 0], [3, 3, 3]], seed=4)
        a1, c1 = kmeans(points, k=4, seed=9)
        a2, c2 = kmeans(points, k=4, seed=9)
        np.testing.assert_array_equal(a1, a2)
        np.testing.assert_array_equal(c1, c2)

    def test_no_empty_clusters(self):
        points = blob_points(50, [[0, 0]], seed=5)  # one tight blob, k=6
        assign, centroids = kmeans(points, k=6, seed=1)
        assert set(assign.tolist()) == set(range(6))

    def test_k_validation(self):
        points = np.array([[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(ValueError):
            kmeans(points, k=0, seed=0)
        with pytest.raises(ValueError):
            kmeans(points, k=3, seed=0)  # only 2 distinct points
        dup = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]])
        with pytest.raises(ValueError):
            kmeans(dup, k=3, seed=0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            kmeans(np.array([[0.0, np.nan], [1.0, 1.0]]), k=1, seed=0)

    def test_k_equals_n_distinct(self):
        points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assign, centroids = kmeans(points, k=3, seed=7)
        assert sorted(assign.tolist()) == [0, 1, 2]
        np.testing.assert_allclose(np.sort(centroids, axis=0), np.sort(points, axis=0))

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_lloyd_never_worse_than_init_assignment(self, seed):
        points = blob_points(20, [[0, 0], [4, 0], [0, 4]], seed=6)
        assign, centroids = kmeans(points, k=3, seed=seed)
        # member-mean centroids are optimal for the final assignment: moving
        # any single point to another cluster cannot lower total inertia
        base = inertia(points, assign, centroids)
        for i in range(len(points)):
            for c in range(3):
                if c != assign[i]:
                    trial = assign.copy()
                    trial[i] = c
                    assert inertia(points, trial, centroids) >= base - 1e-9


class TestProject2D:
    def test_matches_eigensolver_oracle(self):
        points = blob_points(60, [[0, 0, 0, 0], [6, 1, 0, 2]], seed=8)
        got = project_2d(points)
        want = oracle_pca_coords(points)
        np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-8)

    def test_translation_invariant(self):
        points = blob_points(40, [[0, 0, 0], [2, 3, 1]], seed=9)
        a = project_2d(points)
        b = project_2d(points + np.array([100.0, -40.0, 7.0]))
        np.testing.assert_allclose(a, b, atol=1e-8)

    def test_first_axis_carries_most_variance(self):
        points = blob_points(50, [[0, 0], [9, 1]], seed=10)
        coords = project_2d(points)
        assert coords[:, 0].var() >= coords[:, 1].var()

    def test_rank1_data_gets_zero_second_axis(self):
        t = np.linspace(0, 5, 30)
        points = np.column_stack([t, 2 * t, -t])
        coords = project_2d(points)
        np.testing.assert_allclose(coords[:, 1], 0.0, atol=1e-8)
        assert np.abs(coords[:, 0]).max() > 0

    def test_constant_data_projects_to_origin(self):
        points = np.tile([3.0, 4.0], (10, 1))
        np.testing.assert_allclose(project_2d(points), 0.0)

    def test_independent_of_input_order_up_to_rows(self):
        points = blob_points(30, [[0, 0, 0], [5, 5, 5]], seed=11)
        perm = np.random.default_rng(0).permutation(len(points))
        a = project_2d(points)
        b = project_2d(points[perm])
        np.testing.assert_allclose(a[perm], b, rtol=1e-7, atol=1e-9)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            project_2d(np.array([[1.0, 2.0]]))


class TestFitTopics:
    def test_mapping_iteration_order_irrelevant(self):
        points = blob_points(20, [[0, 0], [8, 8]], seed=12)
        ids = [f"p{i:03d}" for i in range(len(points))]
        fwd = {pid: points[i].tolist() for i, pid in enumerate(ids)}
        rev = dict(reversed(list(fwd.items())))
        a = fit_topics(fwd, k=2, seed=5)
        b = fit_topics(rev, k=2, seed=5)
        assert a.assignment == b.assignment
        assert a.projection == b.projection

    def test_projection_ignores_clustering_seed(self):
        points = blob_points(20, [[0, 0], [8, 8]], seed=13)
        emb = {f"p{i:03d}": points[i].tolist() for i in range(len(points))}
        a = fit_topics(emb, k=2, seed=1)
        b = fit_topics(emb, k=2, seed=2)
        assert a.projection == b.projection

    def test_single_post_gets_origin_projection(self):
        model = fit_topics({"only": [1.0, 2.0, 3.0]}, k=1, seed=0)
        assert model.projection == {"only": (0.0, 0.0)}
        assert model.assignment == {"only": 0}

    def test_members_of_sorted(self):
        model = TopicModel(
            k=2,
            centroids=np.zeros((2, 2)),
            assignment={"b": 0, "a": 0, "c": 1},
        )
        assert model.members_of(0) == ["a", "b"]
        assert model.members_of(1) == ["c"]

    def test_empty_mapping_rejected(self):
        with pytest.raises(ValueError):
            fit_topics({}, k=1, seed=0)


class TestNearestClaims:
    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(14)
        emb = {f"p{i:04d}": rng.standard_normal(8).tolist() for i in range(300)}
        emb["p0007"] = [0.0] * 8  # zero row must score 0, not crash
        query = rng.standard_normal(8).tolist()
        got = nearest_claims(emb, query, k=12)
        want = oracle_cosine_topk(emb, query, 12)
        assert [pid for pid, _ in got] == [pid for pid, _ in want]
        np.testing.assert_allclose([s for _, s in got], [s for _, s in want], atol=1e-12)

    def test_exact_match_scores_one(self):
        emb = {"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [-1.0, 0.0]}
        top = nearest_claims(emb, [2.0, 0.0], k=3)
        assert top[0] == ("a", 1.0)
        assert top[-1] == ("c", -1.0)

    def test_ties_break_by_post_id(self):
        emb = {"z": [1.0, 0.0], "a": [2.0, 0.0], "m": [3.0, 0.0]}
        top = nearest_claims(emb, [1.0, 0.0], k=3)
        assert [pid for pid, _ in top] == ["a", "m", "z"]

    def test_k_larger_than_corpus(self):
        emb = {"a": [1.0], "b": [-1.0]}
        assert len(nearest_claims(emb, [1.0], k=10)) == 2

    def test_validation(self):
        emb = {"a": [1.0, 0.0]}
        with pytest.raises(ValueError):
            nearest_claims(emb, [1.0, 0.0], k=0)
        with pytest.raises(ValueError):
            nearest_claims(emb, [1.0, 0.0, 0.0], k=1)  # dimension mismatch
        with pytest.raises(ValueError):
            nearest_claims(emb, [0.0, 0.0], k=1)  # zero-norm query
        assert nearest_claims({}, [1.0], k=1) == []

    def test_cosine_similarities_clipped_against_rounding(self):
        # parallel vectors whose dot/norm ratio rounds a hair above 1.0
        v = np.array([0.1, 0.2, 0.3, 0.7])
        mat = np.vstack([v * 3.0, -v * 7.0, np.zeros(4)])
        sims = cosine_similarities(mat, v)
        assert -1.0 <= float(sims.min()) and float(sims.max()) <= 1.0
        assert float(sims[0]) == pytest.approx(1.0)
        assert float(sims[1]) == pytest.approx(-1.0)
        assert float(sims[2]) == 0.0
