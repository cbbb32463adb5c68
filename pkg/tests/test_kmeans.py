import numpy as np
import pytest

from palstream.errors import ContractError, InfeasibleError
from palstream.kmeans import Clustering, KmeansConfig, assign, init_centers, run, update_centers


def brute_force_assign(points, centers):
    out = np.empty(len(points), dtype=np.int64)
    for i, p in enumerate(points):
        best, best_d = 0, None
        for j, c in enumerate(centers):
            d = float(((p - c) ** 2).sum())
            if best_d is None or d < best_d:
                best, best_d = j, d
        out[i] = best
    return out


def test_config_validation():
    with pytest.raises(ContractError):
        KmeansConfig(k=0)
    with pytest.raises(ContractError):
        KmeansConfig(k=2, max_iterations=0)
    with pytest.raises(ContractError):
        KmeansConfig(k=2, tolerance=-1.0)


def test_init_centers_are_distinct_and_deterministic():
    rng = np.random.default_rng(0)
    # Heavy duplication: only 5 distinct values.
    pts = rng.choice(5, size=(200, 3)).astype(float)
    cfg = KmeansConfig(k=5, seed=3)
    first = init_centers(pts, cfg)
    second = init_centers(pts, cfg)
    assert np.array_equal(first, second)
    assert len(np.unique(first, axis=0)) == 5


def test_init_centers_infeasible_when_k_exceeds_distinct():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(InfeasibleError):
        init_centers(pts, KmeansConfig(k=3))


def test_assign_matches_brute_force():
    rng = np.random.default_rng(42)
    for _ in range(10):
        n = int(rng.integers(5, 400))
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 9))
        pts = rng.normal(size=(n, d))
        centers = rng.normal(size=(k, d))
        assert np.array_equal(assign(pts, centers), brute_force_assign(pts, centers))


def test_assign_tie_breaks_toward_lowest_index():
    pts = np.array([[0.0, 0.0]])
    centers = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    assert assign(pts, centers)[0] == 0


def test_assign_dimension_mismatch():
    with pytest.raises(ContractError):
        assign(np.zeros((3, 2)), np.zeros((2, 3)))


def test_update_centers_takes_cluster_means():
    pts = np.array([[0.0], [2.0], [10.0], [14.0]])
    membership = np.array([0, 0, 1, 1])
    centers = np.array([[5.0], [5.0]])
    new = update_centers(pts, membership, centers)
    assert np.allclose(new, [[1.0], [12.0]])


def test_update_centers_keeps_empty_cluster_in_place():
    pts = np.array([[0.0], [2.0]])
    membership = np.array([0, 0])
    centers = np.array([[5.0], [99.0]])
    new = update_centers(pts, membership, centers)
    assert np.allclose(new, [[1.0], [99.0]])


def test_run_sse_history_is_monotone(photo):
    pts = photo.pixels.reshape(-1, 3).astype(float)
    result = run(pts, KmeansConfig(k=8, seed=1))
    hist = result.sse_history
    assert len(hist) >= 2
    for a, b in zip(hist, hist[1:]):
        assert b <= a + 1e-9


def test_run_membership_is_a_fixed_point(photo):
    pts = photo.pixels.reshape(-1, 3).astype(float)
    result = run(pts, KmeansConfig(k=6, seed=4))
    assert np.array_equal(assign(pts, result.centers), result.membership)
    assert result.sse == pytest.approx(
        float(((pts - result.centers[result.membership]) ** 2).sum())
    )


def test_run_with_k_equal_to_distinct_points_reaches_zero_sse():
    rng = np.random.default_rng(9)
    base = rng.normal(size=(12, 3)) * 10
    pts = np.repeat(base, 4, axis=0)
    result = run(pts, KmeansConfig(k=12, seed=2))
    assert result.sse < 1e-9


def test_run_is_deterministic_per_seed(photo):
    pts = photo.pixels.reshape(-1, 3).astype(float)
    a = run(pts, KmeansConfig(k=5, seed=7))
    b = run(pts, KmeansConfig(k=5, seed=7))
    assert np.array_equal(a.centers, b.centers)
    assert np.array_equal(a.membership, b.membership)
    assert a.sse == b.sse
    assert isinstance(a, Clustering)


def test_run_respects_max_iterations():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(500, 2))
    result = run(pts, KmeansConfig(k=7, seed=0, max_iterations=3, tolerance=0.0))
    assert result.iterations <= 3
