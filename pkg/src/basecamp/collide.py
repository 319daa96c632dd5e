"""Convex collision queries: support maps, GJK intersection, hull membership,
and whole-robot collision against workcell avoidance hulls."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import gjk_distance, robot_in_collision_kernel
from .geometry import Transform
from .hull import ConvexHull

DEFAULT_TOLERANCE = 1e-6


@dataclass
class Capsule:
    """Link collision capsule in link-local coordinates."""

    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    radius: float

    def __post_init__(self):
        self.endpoint_a = np.asarray(self.endpoint_a, dtype=float).reshape(3)
        self.endpoint_b = np.asarray(self.endpoint_b, dtype=float).reshape(3)
        if self.radius <= 0:
            raise ValueError("capsule radius must be positive")

    def to_json(self) -> dict:
        return {
            "endpoint_a": [float(v) for v in self.endpoint_a],
            "endpoint_b": [float(v) for v in self.endpoint_b],
            "radius": self.radius,
        }

    @staticmethod
    def from_json(obj: dict) -> "Capsule":
        return Capsule(np.array(obj["endpoint_a"]), np.array(obj["endpoint_b"]),
                       float(obj["radius"]))


@dataclass
class PosedCapsule:
    """Capsule placed in the world by a rigid transform."""

    capsule: Capsule
    pose: Transform = field(default_factory=Transform.identity)

    @property
    def core_vertices(self) -> np.ndarray:
        return np.vstack([self.pose.apply(self.capsule.endpoint_a),
                          self.pose.apply(self.capsule.endpoint_b)])

    @property
    def radius(self) -> float:
        return self.capsule.radius


@dataclass
class HullShape:
    """Convex hull already expressed in world coordinates."""

    hull: ConvexHull

    @property
    def core_vertices(self) -> np.ndarray:
        return self.hull.vertices

    radius: float = 0.0


@dataclass
class PointShape:
    point: np.ndarray

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float).reshape(3)

    @property
    def core_vertices(self) -> np.ndarray:
        return self.point[None, :]

    radius: float = 0.0


def support(shape, direction) -> np.ndarray:
    """Point of the shape extreme along `direction` (unit). Vertex ties go to
    the lowest index; a capsule answers with the farther endpoint pushed out
    by its radius."""
    d = np.asarray(direction, dtype=float)
    verts = shape.core_vertices
    idx = int(np.argmax(verts @ d))
    return verts[idx] + shape.radius * d


def gjk_intersect(a, b, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """True iff the minimum distance between the shapes is <= tolerance.

    Runs GJK on the Minkowski difference of the shape cores and subtracts
    the capsule radii; an iteration-cap hit reports the conservative True.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    va = np.ascontiguousarray(a.core_vertices, dtype=float)
    vb = np.ascontiguousarray(b.core_vertices, dtype=float)
    dist, converged = gjk_distance(va, vb)
    if not converged:
        return True
    return dist - a.radius - b.radius <= tolerance


def point_in_hull(hull: ConvexHull, p, eps: float = 1e-9) -> bool:
    """True iff p is on or inside every face plane (boundary counts as inside)."""
    p = np.asarray(p, dtype=float)
    normals, offsets = hull.face_planes()
    return bool((normals @ p - offsets <= eps).all())


def pack_hulls(hulls: list[ConvexHull]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate hull vertex arrays for the collision kernel."""
    if not hulls:
        return np.zeros((0, 3)), np.zeros(1, dtype=np.int64)
    verts = np.vstack([h.vertices for h in hulls])
    starts = np.zeros(len(hulls) + 1, dtype=np.int64)
    np.cumsum([len(h.vertices) for h in hulls], out=starts[1:])
    return np.ascontiguousarray(verts), starts


def robot_in_collision(model, q, base: Transform, regions,
                       tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """True if any posed link capsule touches an avoidance hull, or any two
    capsules on non-adjacent links touch (self-collision). Raises if q is
    outside the model's joint limits."""
    from ._kernels import fk_frames  # local import keeps module load cheap

    q = np.asarray(q, dtype=float)
    model.validate_q(q)
    p = model.packed()
    Rs, ps = fk_frames(p.axes, p.orig_R, p.orig_t, q,
                       base.rotation_matrix(), base.position)
    hull_verts, hull_starts = pack_hulls([_region_hull(r) for r in regions])
    return bool(robot_in_collision_kernel(
        Rs, ps, p.cap_link, p.cap_a, p.cap_b, p.cap_r,
        hull_verts, hull_starts, tolerance))


def _region_hull(region) -> ConvexHull:
    return region.hull if hasattr(region, "hull") else region
