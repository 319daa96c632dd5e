"""Spray-stroke annotation: turn marked point-cloud regions into the three
optimization inputs — interaction zones, avoidance hulls, and the search-space
plane that defines the workcell coordinate origin."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cloud import PointCloud, filter_outliers
from .geometry import (
    QUAT_IDENTITY,
    Transform,
    quat_multiply,
    quat_to_matrix,
)
from .hull import ConvexHull, DegeneracyError, quickhull


class InsufficientSprayError(ValueError):
    """Too few surviving points to derive geometry from a spray."""


class SprayLabel(str, Enum):
    INTERACT = "interact"
    AVOID = "avoid"


# corner sign order: binary over (x, y, z) with x as the most significant bit
CORNER_SIGNS = np.array([
    [sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)
])


@dataclass
class SprayStroke:
    """Ordered brush samples (view ray origin + direction) with a reach radius."""

    label: SprayLabel
    zone_id: str
    radius: float
    origins: np.ndarray  # (N, 3)
    directions: np.ndarray  # (N, 3) unit
    approach_dir: np.ndarray | None = None  # interact strokes only

    def __post_init__(self):
        self.label = SprayLabel(self.label)
        if self.radius <= 0:
            raise ValueError("brush radius must be positive")
        self.origins = np.asarray(self.origins, dtype=float).reshape(-1, 3)
        self.directions = np.asarray(self.directions, dtype=float).reshape(-1, 3)
        if len(self.origins) != len(self.directions):
            raise ValueError("origins and directions must pair up")
        norms = np.linalg.norm(self.directions, axis=1)
        if len(norms) and np.abs(norms - 1.0).max() > 1e-9:
            raise ValueError("stroke directions must be unit-norm (1e-9)")
        if self.approach_dir is not None:
            self.approach_dir = np.asarray(self.approach_dir, dtype=float).reshape(3)

    def to_json(self) -> dict:
        obj = {
            "label": self.label.value,
            "zone_id": self.zone_id,
            "radius": self.radius,
            "samples": [
                {"origin": [float(v) for v in o], "direction": [float(v) for v in d]}
                for o, d in zip(self.origins, self.directions)
            ],
        }
        if self.approach_dir is not None:
            obj["approach_dir"] = [float(v) for v in self.approach_dir]
        return obj

    @staticmethod
    def from_json(obj: dict) -> "SprayStroke":
        samples = obj.get("samples", [])
        origins = np.array([s["origin"] for s in samples], dtype=float).reshape(-1, 3)
        dirs = np.array([s["direction"] for s in samples], dtype=float).reshape(-1, 3)
        return SprayStroke(obj["label"], obj["zone_id"], float(obj["radius"]),
                           origins, dirs,
                           np.array(obj["approach_dir"], dtype=float)
                           if "approach_dir" in obj else None)


@dataclass
class InteractionZone:
    """A robot task region: oriented box with corners and approach direction."""

    zone_id: str
    center: np.ndarray
    half_extents: np.ndarray
    orientation: np.ndarray
    corners: np.ndarray  # (8, 3)
    approach_dir: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)
        self.orientation = np.asarray(self.orientation, dtype=float).reshape(4)
        self.corners = np.asarray(self.corners, dtype=float).reshape(8, 3)
        self.approach_dir = np.asarray(self.approach_dir, dtype=float).reshape(3)
        n = np.linalg.norm(self.approach_dir)
        if n < 1e-9:
            raise ValueError("approach_dir must be nonzero")
        self.approach_dir = self.approach_dir / n
        rebuilt = box_corners(self.center, self.half_extents, self.orientation)
        if np.abs(rebuilt - self.corners).max() > 1e-9:
            raise ValueError("corners do not reconstruct from center/extents")

    def to_json(self) -> dict:
        return {
            "zone_id": self.zone_id,
            "center": [float(v) for v in self.center],
            "half_extents": [float(v) for v in self.half_extents],
            "orientation": [float(v) for v in self.orientation],
            "corners": [[float(c) for c in row] for row in self.corners],
            "approach_dir": [float(v) for v in self.approach_dir],
        }

    @staticmethod
    def from_json(obj: dict) -> "InteractionZone":
        return InteractionZone(obj["zone_id"], np.array(obj["center"]),
                               np.array(obj["half_extents"]),
                               np.array(obj["orientation"]),
                               np.array(obj["corners"]),
                               np.array(obj["approach_dir"]))


@dataclass
class AvoidanceRegion:
    """An obstacle to keep the robot clear of, as a convex hull."""

    region_id: str
    hull: ConvexHull

    def to_json(self) -> dict:
        return {"region_id": self.region_id, "hull": self.hull.to_json()}

    @staticmethod
    def from_json(obj: dict) -> "AvoidanceRegion":
        return AvoidanceRegion(obj["region_id"], ConvexHull.from_json(obj["hull"]))


@dataclass
class SearchSpace:
    """Planar candidate region for the base; its center is the workcell origin
    and its z axis is the plane normal."""

    center: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: QUAT_IDENTITY.copy())
    half_extent_x: float = 0.5
    half_extent_y: float = 0.5

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.orientation = np.asarray(self.orientation, dtype=float).reshape(4)
        if self.half_extent_x <= 0 or self.half_extent_y <= 0:
            raise ValueError("search-space half extents must be positive")

    def plane_transform(self) -> Transform:
        return Transform(self.center, self.orientation)

    def normal(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)[:, 2]

    def to_json(self) -> dict:
        return {
            "center": [float(v) for v in self.center],
            "orientation": [float(v) for v in self.orientation],
            "half_extent_x": self.half_extent_x,
            "half_extent_y": self.half_extent_y,
        }

    @staticmethod
    def from_json(obj: dict) -> "SearchSpace":
        return SearchSpace(np.array(obj["center"]), np.array(obj["orientation"]),
                           float(obj["half_extent_x"]), float(obj["half_extent_y"]))


def box_corners(center, half_extents, orientation) -> np.ndarray:
    """The 8 box vertices in CORNER_SIGNS order."""
    R = quat_to_matrix(orientation)
    return np.asarray(center) + (CORNER_SIGNS * np.asarray(half_extents)) @ R.T


def spray_select(cloud: PointCloud, stroke: SprayStroke) -> np.ndarray:
    """Indices of points the brush reaches, sorted ascending.

    Each sample marks points within `radius` of the segment running from the
    sample origin along its ray, ending 2 x radius past the first cloud
    contact (bounded penetration). The result is the union over samples.
    """
    if len(cloud) == 0 or len(stroke.origins) == 0:
        return np.zeros(0, dtype=int)
    pts = cloud.points
    selected = np.zeros(len(pts), dtype=bool)
    for o, d in zip(stroke.origins, stroke.directions):
        rel = pts - o
        t = rel @ d
        perp = np.linalg.norm(rel - t[:, None] * d[None, :], axis=1)
        in_beam = (perp <= stroke.radius) & (t >= 0.0)
        if not in_beam.any():
            continue
        t_end = float(t[in_beam].min()) + 2.0 * stroke.radius
        tc = np.clip(t, 0.0, t_end)
        dist = np.linalg.norm(rel - tc[:, None] * d[None, :], axis=1)
        selected |= dist <= stroke.radius
    return np.flatnonzero(selected)


def make_interaction_zone(cloud: PointCloud, indices, approach_dir, zone_id: str,
                          frame_orientation=None, k: int = 8,
                          std_ratio: float = 1.0) -> InteractionZone:
    """Fit the minimum box (axis-aligned in the given frame, default world)
    around the outlier-filtered selection."""
    indices = np.asarray(indices, dtype=int)
    if len(indices) < 4:
        raise InsufficientSprayError(
            f"zone '{zone_id}': {len(indices)} sprayed points, need at least 4")
    result = filter_outliers(cloud.select(indices), k=k, std_ratio=std_ratio)
    pts = result.cloud.points
    if len(pts) < 4:
        raise InsufficientSprayError(
            f"zone '{zone_id}': only {len(pts)} points survive outlier filtering")
    quat = QUAT_IDENTITY.copy() if frame_orientation is None else \
        np.asarray(frame_orientation, dtype=float)
    R = quat_to_matrix(quat)
    local = pts @ R  # == R.T applied to each point
    lo, hi = local.min(axis=0), local.max(axis=0)
    center_local = (lo + hi) / 2.0
    half = (hi - lo) / 2.0
    center = R @ center_local
    return InteractionZone(zone_id, center, half, quat,
                           box_corners(center, half, quat), approach_dir)


def make_avoidance_region(cloud: PointCloud, indices, region_id: str,
                          k: int = 8, std_ratio: float = 1.0) -> AvoidanceRegion:
    """Outlier-filter the selection and hull the survivors."""
    indices = np.asarray(indices, dtype=int)
    if len(indices) < 4:
        raise DegeneracyError(0, f"region '{region_id}': "
                                 f"{len(indices)} sprayed points, need at least 4")
    result = filter_outliers(cloud.select(indices), k=k, std_ratio=std_ratio)
    try:
        hull = quickhull(result.cloud.points)
    except DegeneracyError as exc:
        raise DegeneracyError(
            exc.rank,
            f"region '{region_id}': sprayed points are degenerate, "
            f"spray more surface") from exc
    return AvoidanceRegion(region_id, hull)


def define_search_space(center, orientation, half_extent_x: float,
                        half_extent_y: float) -> SearchSpace:
    return SearchSpace(center, orientation, half_extent_x, half_extent_y)


def to_workcell_frame(entity, space: SearchSpace):
    """Re-express an entity in the search-space plane frame (origin at the
    plane center, axes along the plane axes). Directions rotate only."""
    inv = space.plane_transform().inverse()
    if isinstance(entity, PointCloud):
        return PointCloud(inv.apply(entity.points), entity.colors, entity.frame_id)
    if isinstance(entity, InteractionZone):
        return InteractionZone(
            entity.zone_id,
            inv.apply(entity.center),
            entity.half_extents,
            quat_multiply(inv.quaternion, entity.orientation),
            inv.apply(entity.corners),
            inv.apply_direction(entity.approach_dir),
        )
    if isinstance(entity, AvoidanceRegion):
        return AvoidanceRegion(
            entity.region_id,
            ConvexHull(inv.apply(entity.hull.vertices), entity.hull.triangles),
        )
    raise TypeError(f"cannot re-frame {type(entity).__name__}")
