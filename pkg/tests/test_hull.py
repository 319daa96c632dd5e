import numpy as np
import pytest

from basecamp.hull import ConvexHull, DegeneracyError, affine_rank, quickhull

from helpers import check_hull_invariants
from oracles import hull_volume, incremental_hull

CUBE = np.array([
    [0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0],
    [0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1],
], dtype=float)


def test_cube_corners():
    hull = quickhull(CUBE)
    assert len(hull.vertices) == 8
    assert len(hull.triangles) == 12
    assert hull.volume() == pytest.approx(1.0, abs=1e-12)
    check_hull_invariants(hull, CUBE)


def test_tetrahedron():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    hull = quickhull(pts)
    assert len(hull.vertices) == 4
    assert len(hull.triangles) == 4
    assert hull.volume() == pytest.approx(1 / 6, abs=1e-12)
    check_hull_invariants(hull, pts)


def test_interior_point_excluded():
    pts = np.vstack([CUBE, [[0.5, 0.5, 0.5]]])
    hull = quickhull(pts)
    assert len(hull.vertices) == 8
    for v in hull.vertices:
        assert not np.allclose(v, [0.5, 0.5, 0.5])


def test_face_point_not_a_vertex():
    pts = np.vstack([CUBE, [[0.5, 0.5, 0.0]]])
    hull = quickhull(pts)
    assert len(hull.vertices) == 8


@pytest.mark.parametrize("seed", range(8))
def test_random_ball_matches_incremental_oracle(seed):
    rng = np.random.default_rng(seed)
    n = rng.integers(10, 500)
    pts = rng.normal(size=(n, 3))
    pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1, keepdims=True))
    hull = quickhull(pts)
    check_hull_invariants(hull, pts)
    oracle_faces = incremental_hull(pts)
    oracle_vol = hull_volume(pts, oracle_faces)
    assert hull.volume() == pytest.approx(oracle_vol, rel=1e-9)


def test_permutation_invariance():
    rng = np.random.default_rng(42)
    pts = rng.uniform(-1, 1, size=(60, 3))
    hull_a = quickhull(pts)
    perm = rng.permutation(len(pts))
    hull_b = quickhull(pts[perm])
    set_a = {tuple(np.round(v, 12)) for v in hull_a.vertices}
    set_b = {tuple(np.round(v, 12)) for v in hull_b.vertices}
    assert set_a == set_b
    assert hull_a.volume() == pytest.approx(hull_b.volume(), rel=1e-12)


@pytest.mark.parametrize("pts,rank", [
    (np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0.0]]), 1),
    (np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]]), 2),
    (np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]), 2),
    (np.array([[1, 2, 3.0]]), 0),
])
def test_degenerate_inputs_raise_with_rank(pts, rank):
    with pytest.raises(DegeneracyError) as exc:
        quickhull(pts)
    assert exc.value.rank == rank


def test_affine_rank_tolerance():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.5, 0.5, 1e-10]])
    assert affine_rank(pts) == 2
    pts[3, 2] = 1e-6
    assert affine_rank(pts) == 3


def test_json_round_trip():
    hull = quickhull(CUBE)
    again = ConvexHull.from_json(hull.to_json())
    np.testing.assert_allclose(again.vertices, hull.vertices)
    np.testing.assert_array_equal(again.triangles, hull.triangles)
