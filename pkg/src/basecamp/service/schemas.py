"""Request/response models for the session service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

import numpy as np

from ..annotate import SearchSpace, SprayStroke


class SessionInfo(BaseModel):
    session_id: str
    status: Literal["annotating", "optimizing", "done", "below_threshold", "failed"]
    progress: float = Field(0.0, ge=0.0, le=1.0)
    created_at: str
    updated_at: str
    point_count: Optional[int] = None
    has_annotations: bool = False
    has_result: bool = False
    failure: Optional[str] = None


class CloudSummary(BaseModel):
    point_count: int
    bounds_min: list[float]
    bounds_max: list[float]


class StrokeSample(BaseModel):
    origin: list[float]
    direction: list[float]


class StrokeModel(BaseModel):
    label: Literal["interact", "avoid"]
    zone_id: str
    radius: float = Field(gt=0)
    samples: list[StrokeSample]
    approach_dir: Optional[list[float]] = None

    def to_stroke(self) -> SprayStroke:
        origins = np.array([s.origin for s in self.samples], dtype=float).reshape(-1, 3)
        dirs = np.array([s.direction for s in self.samples], dtype=float).reshape(-1, 3)
        return SprayStroke(self.label, self.zone_id, self.radius, origins, dirs,
                           None if self.approach_dir is None
                           else np.array(self.approach_dir, dtype=float))

    @staticmethod
    def from_stroke(stroke: SprayStroke) -> "StrokeModel":
        return StrokeModel(**stroke.to_json())


class SearchSpaceModel(BaseModel):
    center: list[float]
    orientation: list[float]
    half_extent_x: float = Field(gt=0)
    half_extent_y: float = Field(gt=0)

    def to_space(self) -> SearchSpace:
        return SearchSpace(np.array(self.center), np.array(self.orientation),
                           self.half_extent_x, self.half_extent_y)

    @staticmethod
    def from_space(space: SearchSpace) -> "SearchSpaceModel":
        return SearchSpaceModel(**space.to_json())


class AnnotationsRequest(BaseModel):
    strokes: list[StrokeModel]
    searchspace: Optional[SearchSpaceModel] = None


class ZoneModel(BaseModel):
    zone_id: str
    center: list[float]
    half_extents: list[float]
    orientation: list[float]
    corners: list[list[float]]
    approach_dir: list[float]


class HullModel(BaseModel):
    vertices: list[list[float]]
    triangles: list[list[int]]


class RegionModel(BaseModel):
    region_id: str
    hull: HullModel


class DerivedGeometry(BaseModel):
    zones: list[ZoneModel]
    regions: list[RegionModel]
    searchspace: SearchSpaceModel


class OptimizeRequest(BaseModel):
    robot: str = "generic6r"
    seed_targets: int = 0
    seed_opt: int = 0
    threshold: float = 90.0
    per_zone: int = Field(100, ge=1)
    max_evals: Optional[int] = Field(None, ge=1)


class RunHandle(BaseModel):
    session_id: str
    status: str
    progress: float


class AdjustmentRequest(BaseModel):
    op: Literal["translate", "scale", "rotate"]
    offset: Optional[list[float]] = None  # translate: plane-local meters
    fx: Optional[float] = None  # scale
    fy: Optional[float] = None
    quaternion: Optional[list[float]] = None  # rotate
