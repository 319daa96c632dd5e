import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from basecamp.cloud import (
    CropBox,
    PlyParseError,
    PointCloud,
    crop_to_box,
    filter_outliers,
    load_cloud,
    save_cloud,
)
from basecamp.geometry import Transform, quat_from_axis_angle


def test_single_vertex_ply(tmp_path):
    p = tmp_path / "one.ply"
    p.write_text("ply\nformat ascii 1.0\nelement vertex 1\n"
                 "property float x\nproperty float y\nproperty float z\n"
                 "end_header\n0 0 0\n")
    cloud = load_cloud(p)
    assert len(cloud) == 1
    np.testing.assert_allclose(cloud.points[0], [0, 0, 0])


def test_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    cloud = PointCloud(rng.uniform(-2, 2, size=(57, 3)))
    path = tmp_path / "c.ply"
    save_cloud(cloud, path)
    again = load_cloud(path)
    assert len(again) == 57
    np.testing.assert_allclose(again.points, cloud.points, atol=1e-6)


def test_round_trip_with_colors(tmp_path):
    rng = np.random.default_rng(4)
    cloud = PointCloud(rng.uniform(-1, 1, size=(12, 3)),
                       rng.integers(0, 256, size=(12, 3)))
    path = tmp_path / "c.ply"
    save_cloud(cloud, path)
    text = path.read_text()
    assert "property uchar red" in text
    again = load_cloud(path)
    np.testing.assert_array_equal(again.colors, cloud.colors)


def test_empty_cloud_round_trip(tmp_path):
    path = tmp_path / "empty.ply"
    save_cloud(PointCloud(np.zeros((0, 3))), path)
    assert "element vertex 0" in path.read_text()
    assert len(load_cloud(path)) == 0


def test_save_deterministic(tmp_path):
    rng = np.random.default_rng(5)
    cloud = PointCloud(rng.uniform(-1, 1, size=(40, 3)))
    a, b = tmp_path / "a.ply", tmp_path / "b.ply"
    save_cloud(cloud, a)
    save_cloud(cloud, b)
    assert a.read_bytes() == b.read_bytes()


def test_count_mismatch_names_line(tmp_path):
    p = tmp_path / "bad.ply"
    p.write_text("ply\nformat ascii 1.0\nelement vertex 5\n"
                 "property float x\nproperty float y\nproperty float z\n"
                 "end_header\n0 0 0\n1 1 1\n2 2 2\n3 3 3\n")
    with pytest.raises(PlyParseError) as exc:
        load_cloud(p)
    assert "5 vertices" in str(exc.value)


def test_malformed_header(tmp_path):
    p = tmp_path / "bad.ply"
    p.write_text("ply\nformat binary_little_endian 1.0\nend_header\n")
    with pytest.raises(PlyParseError) as exc:
        load_cloud(p)
    assert exc.value.line == 2


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_cloud("/nonexistent/cloud.ply")


def test_crop_axis_aligned():
    cloud = PointCloud(np.array([[0.0, 0, 0], [2.0, 0, 0]]))
    box = CropBox(np.zeros(3), np.ones(3))
    out = crop_to_box(cloud, box)
    assert len(out) == 1
    np.testing.assert_allclose(out.points[0], [0, 0, 0])


def test_crop_containing_all_is_identity():
    rng = np.random.default_rng(6)
    cloud = PointCloud(rng.uniform(-1, 1, size=(30, 3)))
    out = crop_to_box(cloud, CropBox(np.zeros(3), np.full(3, 5.0)))
    np.testing.assert_array_equal(out.points, cloud.points)


def test_crop_rotated_box():
    # box rotated 90 deg about z with half extents (1, 0.1, 1):
    # world point (0, 0.5, 0) has box-local coords (0.5, 0, 0) -> inside.
    # Oracle: local = R^T (p - c); R = rot z 90 deg maps x->y, so
    # R^T maps y->x and local = (0.5, -0.0, 0).
    box = CropBox(np.zeros(3), np.array([1.0, 0.1, 1.0]),
                  quat_from_axis_angle([0, 0, 1], np.pi / 2))
    cloud = PointCloud(np.array([[0.0, 0.5, 0.0], [0.5, 0.0, 0.0]]))
    out = crop_to_box(cloud, box)
    # second point has box-local coords (0, -0.5, 0): |y| = 0.5 > 0.1 -> out
    assert len(out) == 1
    np.testing.assert_allclose(out.points[0], [0, 0.5, 0])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_crop_idempotent_subset(seed):
    rng = np.random.default_rng(seed)
    cloud = PointCloud(rng.uniform(-2, 2, size=(rng.integers(1, 60), 3)))
    box = CropBox(rng.uniform(-1, 1, size=3), rng.uniform(0.2, 2.0, size=3))
    once = crop_to_box(cloud, box)
    twice = crop_to_box(once, box)
    np.testing.assert_array_equal(once.points, twice.points)
    src = {tuple(p) for p in cloud.points}
    assert all(tuple(p) in src for p in once.points)


def test_filter_outliers_removes_far_point():
    rng = np.random.default_rng(7)
    cluster = rng.uniform(0, 1, size=(100, 3))
    pts = np.vstack([cluster, [[10.0, 10.0, 10.0]]])
    result = filter_outliers(PointCloud(pts), k=8, std_ratio=1.0)
    assert not result.skipped
    assert not result.mask[100]  # far point dropped
    assert result.mask[:100].sum() >= 95

    # oracle: direct knn mean distances via brute force
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    d.sort(axis=1)
    mean_d = d[:, 1:9].mean(axis=1)
    thr = mean_d.mean() + mean_d.std()
    np.testing.assert_array_equal(result.mask, mean_d <= thr)


def test_filter_identical_points_all_kept():
    pts = np.tile([[1.0, 2.0, 3.0]], (20, 1))
    result = filter_outliers(PointCloud(pts), k=8)
    assert result.mask.all()
    assert len(result.cloud) == 20


def test_filter_tiny_cloud_skipped():
    result = filter_outliers(PointCloud(np.array([[0, 0, 0], [1, 1, 1.0]])), k=8)
    assert result.skipped
    assert result.mask.all()
    assert len(result.cloud) == 2


def test_filter_rigid_invariance():
    rng = np.random.default_rng(8)
    pts = np.vstack([rng.uniform(0, 1, size=(80, 3)), [[5.0, 5, 5], [-4, 6, 2]]])
    base = filter_outliers(PointCloud(pts), k=6, std_ratio=0.8)
    t = Transform(np.array([3.0, -1.0, 2.0]), quat_from_axis_angle([1, 2, 3], 1.1))
    moved = filter_outliers(PointCloud(t.apply(pts)), k=6, std_ratio=0.8)
    np.testing.assert_array_equal(base.mask, moved.mask)


def test_colors_follow_filter_and_crop():
    pts = np.vstack([np.random.default_rng(9).uniform(0, 1, (50, 3)), [[9, 9, 9.0]]])
    colors = np.arange(51 * 3, dtype=np.uint8).reshape(51, 3) % 255
    cloud = PointCloud(pts, colors)
    result = filter_outliers(cloud, k=8)
    kept = np.flatnonzero(result.mask)
    np.testing.assert_array_equal(result.cloud.colors, colors[kept])


def test_color_length_mismatch_rejected():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((3, 3)), np.zeros((2, 3), dtype=np.uint8))


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        PointCloud(np.array([[0, 0, np.nan]]))
