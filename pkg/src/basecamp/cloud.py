"""Point cloud data model, ASCII PLY I/O, cropping, and outlier filtering."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Transform


class PlyParseError(ValueError):
    """Malformed PLY input; carries the 1-based line number of the offence."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class PointCloud:
    """Scanned workcell points in meters, with optional per-point color."""

    points: np.ndarray
    colors: np.ndarray | None = None
    frame_id: str = "scan"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.isfinite(self.points).all():
            raise ValueError("point coordinates must be finite")
        if self.colors is not None:
            self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
            if len(self.colors) != len(self.points):
                raise ValueError(
                    f"colors length {len(self.colors)} != points length {len(self.points)}"
                )

    def __len__(self) -> int:
        return len(self.points)

    def select(self, indices) -> "PointCloud":
        """Subset cloud by integer indices or boolean mask, order preserved."""
        indices = np.asarray(indices)
        colors = self.colors[indices] if self.colors is not None else None
        return PointCloud(self.points[indices], colors, self.frame_id)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self) == 0:
            return np.zeros(3), np.zeros(3)
        return self.points.min(axis=0), self.points.max(axis=0)


@dataclass
class CropBox:
    """Oriented box used to crop a scan to the workcell of interest."""

    center: np.ndarray
    half_extents: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 0.0, 1.0]))

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=float).reshape(3)
        if not (self.half_extents > 0).all():
            raise ValueError("half_extents must be positive")
        self.orientation = np.asarray(self.orientation, dtype=float).reshape(4)

    def to_json(self) -> dict:
        return {
            "center": [float(v) for v in self.center],
            "half_extents": [float(v) for v in self.half_extents],
            "orientation": [float(v) for v in self.orientation],
        }

    @staticmethod
    def from_json(obj: dict) -> "CropBox":
        return CropBox(obj["center"], obj["half_extents"], obj["orientation"])


@dataclass
class ScanConfig:
    """Synthetic scanner settings; grid spacing is on the 1 m image plane."""

    grid_size: float = 0.0087
    rotation_trigger: float = 1.0  # degrees
    translation_trigger: float = 0.01  # meters
    points_per_frame_cap: int = 2000
    fov: float = 70.0  # full cone angle, degrees
    max_range: float = 5.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.grid_size <= 0:
            raise ValueError("grid_size must be positive")
        if self.rotation_trigger <= 0 or self.translation_trigger <= 0:
            raise ValueError("frame triggers must be positive")
        if self.points_per_frame_cap < 1:
            raise ValueError("points_per_frame_cap must be >= 1")

    def to_json(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "rotation_trigger": self.rotation_trigger,
            "translation_trigger": self.translation_trigger,
            "points_per_frame_cap": self.points_per_frame_cap,
            "fov": self.fov,
            "max_range": self.max_range,
            "noise_sigma": self.noise_sigma,
        }

    @staticmethod
    def from_json(obj: dict) -> "ScanConfig":
        return ScanConfig(**obj)


@dataclass
class MeshScene:
    """Triangle soup standing in for the real workcell geometry."""

    triangles: np.ndarray  # (T, 3, 3)

    def __post_init__(self):
        self.triangles = np.asarray(self.triangles, dtype=float).reshape(-1, 3, 3)
        if len(self.triangles):
            e1 = self.triangles[:, 1] - self.triangles[:, 0]
            e2 = self.triangles[:, 2] - self.triangles[:, 0]
            areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
            if (areas <= 1e-12).any():
                bad = int(np.argmax(areas <= 1e-12))
                raise ValueError(f"degenerate triangle at index {bad} (area <= 1e-12)")


@dataclass
class CameraTrajectory:
    """Ordered camera poses driving frame capture."""

    poses: list[Transform]

    def __post_init__(self):
        if not self.poses:
            raise ValueError("trajectory must contain at least one pose")


def load_cloud(path) -> PointCloud:
    """Read an ASCII PLY file with float x,y,z and optional uchar red,green,blue."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    with open(path, "r") as fh:
        lines = fh.read().splitlines()

    if not lines or lines[0].strip() != "ply":
        raise PlyParseError("expected 'ply' magic", 1)

    vertex_count = None
    properties: list[str] = []
    in_vertex_element = False
    body_start = None
    fmt_seen = False
    for i, raw in enumerate(lines[1:], start=2):
        tokens = raw.split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            if tokens[1] != "ascii":
                raise PlyParseError(f"unsupported format '{tokens[1]}' (ascii only)", i)
            fmt_seen = True
        elif tokens[0] == "element":
            if tokens[1] == "vertex":
                try:
                    vertex_count = int(tokens[2])
                except (IndexError, ValueError):
                    raise PlyParseError("bad vertex count", i) from None
                in_vertex_element = True
            else:
                in_vertex_element = False
        elif tokens[0] == "property":
            if in_vertex_element:
                properties.append(tokens[-1])
        elif tokens[0] == "end_header":
            body_start = i
            break
        else:
            raise PlyParseError(f"unexpected header keyword '{tokens[0]}'", i)

    if body_start is None:
        raise PlyParseError("missing end_header", len(lines))
    if not fmt_seen:
        raise PlyParseError("missing format declaration", body_start)
    if vertex_count is None:
        raise PlyParseError("missing 'element vertex' declaration", body_start)
    for axis in ("x", "y", "z"):
        if axis not in properties:
            raise PlyParseError(f"vertex element lacks property '{axis}'", body_start)
    has_color = all(c in properties for c in ("red", "green", "blue"))
    ix, iy, iz = (properties.index(a) for a in ("x", "y", "z"))
    if has_color:
        ir, ig, ib = (properties.index(c) for c in ("red", "green", "blue"))

    points = np.zeros((vertex_count, 3))
    colors = np.zeros((vertex_count, 3), dtype=np.uint8) if has_color else None
    row = 0
    for i, raw in enumerate(lines[body_start:], start=body_start + 1):
        if raw.strip() == "":
            continue
        if row >= vertex_count:
            raise PlyParseError(
                f"body has more rows than the declared {vertex_count} vertices", i
            )
        tokens = raw.split()
        if len(tokens) < len(properties):
            raise PlyParseError(
                f"expected {len(properties)} values, found {len(tokens)}", i
            )
        try:
            points[row] = (float(tokens[ix]), float(tokens[iy]), float(tokens[iz]))
            if has_color:
                colors[row] = (int(tokens[ir]), int(tokens[ig]), int(tokens[ib]))
        except ValueError:
            raise PlyParseError("non-numeric vertex value", i) from None
        row += 1
    if row != vertex_count:
        raise PlyParseError(
            f"header declares {vertex_count} vertices, body has {row}", len(lines)
        )
    return PointCloud(points, colors, frame_id=path.stem)


def save_cloud(cloud: PointCloud, path) -> None:
    """Write ASCII PLY with 6-decimal fixed-point coordinates (byte-deterministic)."""
    path = Path(path)
    out = ["ply", "format ascii 1.0", f"element vertex {len(cloud)}"]
    out += ["property float x", "property float y", "property float z"]
    if cloud.colors is not None:
        out += ["property uchar red", "property uchar green", "property uchar blue"]
    out.append("end_header")
    for i, p in enumerate(cloud.points):
        row = f"{p[0]:.6f} {p[1]:.6f} {p[2]:.6f}"
        if cloud.colors is not None:
            c = cloud.colors[i]
            row += f" {c[0]} {c[1]} {c[2]}"
        out.append(row)
    path.write_text("\n".join(out) + "\n")


def crop_to_box(cloud: PointCloud, box: CropBox) -> PointCloud:
    """Keep exactly the points inside the oriented box (boundary inclusive)."""
    if len(cloud) == 0:
        return cloud.select(np.zeros(0, dtype=int))
    world_to_box = Transform(box.center, box.orientation).inverse()
    local = world_to_box.apply(cloud.points)
    mask = (np.abs(local) <= box.half_extents).all(axis=1)
    return cloud.select(mask)


@dataclass
class FilterResult:
    """Outlier-filter output: surviving cloud plus diagnostics."""

    cloud: PointCloud
    mask: np.ndarray  # boolean, True for inliers
    skipped: bool  # True when the cloud was too small to filter
    mean_distance: float = 0.0
    threshold: float = 0.0


def filter_outliers(cloud: PointCloud, k: int = 8, std_ratio: float = 1.0) -> FilterResult:
    """Statistical outlier removal by mean distance to the k nearest neighbors.

    Points whose mean k-NN distance exceeds (global mean + std_ratio * global
    std) are dropped. Clouds with fewer than k+1 points pass through unchanged
    with the `skipped` flag set, so sparse sprays never hard-fail.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(cloud)
    if n < k + 1:
        return FilterResult(cloud, np.ones(n, dtype=bool), skipped=True)
    tree = cKDTree(cloud.points)
    # k+1 neighbors include the query point itself at distance 0.
    dists, _ = tree.query(cloud.points, k=k + 1)
    mean_dists = dists[:, 1:].mean(axis=1)
    mu = float(mean_dists.mean())
    sigma = float(mean_dists.std())
    threshold = mu + std_ratio * sigma
    mask = mean_dists <= threshold
    return FilterResult(cloud.select(mask), mask, skipped=False,
                        mean_distance=mu, threshold=threshold)
