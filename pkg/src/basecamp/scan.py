"""Synthetic LiDAR scan simulator over triangle-mesh scenes.

Stands in for the handheld scanner: frames are captured along a camera
trajectory whenever the pose has rotated or translated past the trigger
thresholds, and each frame ray-casts a regular grid on a virtual image
plane 1 m in front of the camera. Camera frame: +z forward, +x right,
+y image-down (right-handed, OpenCV-style).
"""

from __future__ import annotations

import numpy as np

from .cloud import CameraTrajectory, MeshScene, PointCloud, ScanConfig
from .geometry import quat_rotation_angle


def captured_frame_indices(trajectory: CameraTrajectory, config: ScanConfig) -> list[int]:
    """Pose indices at which a frame fires: pose 0, then every pose whose
    motion from the last captured pose meets either trigger."""
    captured = [0]
    last = trajectory.poses[0]
    rot_trigger = np.deg2rad(config.rotation_trigger)
    for i, pose in enumerate(trajectory.poses[1:], start=1):
        rot = quat_rotation_angle(last.quaternion, pose.quaternion)
        trans = float(np.linalg.norm(pose.position - last.position))
        if rot >= rot_trigger - 1e-12 or trans >= config.translation_trigger - 1e-12:
            captured.append(i)
            last = pose
    return captured


def _grid_directions(config: ScanConfig) -> np.ndarray:
    """Camera-frame unit ray directions in (row, col) order, capped."""
    half_fov = np.deg2rad(config.fov) / 2.0
    extent = np.tan(half_fov)
    n = int(np.floor(extent / config.grid_size + 1e-9))
    offsets = np.arange(-n, n + 1) * config.grid_size
    # rows sweep v (image y), cols sweep u (image x)
    uu, vv = np.meshgrid(offsets, offsets, indexing="xy")
    dirs = np.stack([uu.ravel(), vv.ravel(), np.ones(uu.size)], axis=1)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    inside = dirs[:, 2] >= np.cos(half_fov) - 1e-12
    dirs = dirs[inside]
    return dirs[: config.points_per_frame_cap]


def _cast_rays(origin: np.ndarray, dirs: np.ndarray, triangles: np.ndarray,
               max_range: float) -> np.ndarray:
    """Nearest-hit distances per ray (inf when no hit), Moller-Trumbore."""
    eps = 1e-12
    v0 = triangles[:, 0]
    e1 = triangles[:, 1] - v0
    e2 = triangles[:, 2] - v0
    h = np.cross(dirs[:, None, :], e2[None, :, :])  # (R, T, 3)
    a = np.einsum("tk,rtk->rt", e1, h)
    s = origin[None, :] - v0  # (T, 3)
    q = np.cross(s, e1)  # (T, 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = 1.0 / a
        u = f * np.einsum("tk,rtk->rt", s, h)
        v = f * np.einsum("rk,tk->rt", dirs, q)
        t = f * np.einsum("tk,tk->t", e2, q)[None, :]
        valid = (
            (np.abs(a) > eps)
            & (u >= -1e-12) & (u <= 1 + 1e-12)
            & (v >= -1e-12) & (u + v <= 1 + 1e-12)
            & (t > eps) & (t <= max_range)
        )
    t = np.where(valid, t, np.inf)
    return t.min(axis=1)


def simulate_scan(scene: MeshScene, trajectory: CameraTrajectory,
                  config: ScanConfig, seed: int = 0) -> PointCloud:
    """Accumulate ray-cast frames along the trajectory into one point cloud.

    Hits carry gaussian range noise along the ray (noise_sigma, seeded);
    output point order is deterministic (frame, grid-row, grid-col).
    """
    frame_id = f"scan:seed={seed}"
    dirs_cam = _grid_directions(config)
    if len(scene.triangles) == 0 or len(dirs_cam) == 0:
        return PointCloud(np.zeros((0, 3)), frame_id=frame_id)
    rng = np.random.default_rng(seed)
    chunks = []
    for idx in captured_frame_indices(trajectory, config):
        pose = trajectory.poses[idx]
        dirs_world = pose.apply_direction(dirs_cam)
        t = _cast_rays(pose.position, dirs_world, scene.triangles, config.max_range)
        hit = np.isfinite(t)
        if not hit.any():
            continue
        t_hit = t[hit]
        if config.noise_sigma > 0:
            t_hit = t_hit + rng.normal(0.0, config.noise_sigma, size=t_hit.shape)
        chunks.append(pose.position[None, :] + t_hit[:, None] * dirs_world[hit])
    if not chunks:
        return PointCloud(np.zeros((0, 3)), frame_id=frame_id)
    return PointCloud(np.vstack(chunks), frame_id=frame_id)
