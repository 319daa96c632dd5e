"""The on-disk workcell bundle: one directory holding the scan, annotations,
search space, robot, and optimization result as versioned JSON/PLY files."""

from __future__ import annotations

import json
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .annotate import AvoidanceRegion, InteractionZone, SearchSpace, SprayStroke
from .cloud import CameraTrajectory, MeshScene
from .geometry import Transform
from .kinematics import IkConfig, ReachConfig, TaskTarget
from .optimizer import (
    MlslConfig,
    NelderMeadConfig,
    OptimizationResult,
    OptimizeConfig,
    PlacementCandidate,
    PlacementEvaluation,
    base_pose_for,
)

SCHEMA_VERSION = 1

CLOUD_FILE = "cloud.ply"
ANNOTATIONS_FILE = "annotations.json"
SEARCHSPACE_FILE = "searchspace.json"
ROBOT_FILE = "robot.json"
RESULT_FILE = "result.json"
META_FILE = "meta.json"
SCENE_FILE = "scene.json"
TRAJECTORY_FILE = "trajectory.json"


class BundleError(ValueError):
    """Missing or inconsistent bundle contents."""


def _check_version(obj: dict, path: Path) -> None:
    if obj.get("v") != SCHEMA_VERSION:
        raise BundleError(f"{path}: schema version {obj.get('v')!r}, "
                          f"expected {SCHEMA_VERSION}")


def write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise BundleError(f"missing bundle file: {path}")
    obj = json.loads(path.read_text())
    _check_version(obj, path)
    return obj


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def update_meta(bundle: Path, section: str, payload: dict) -> None:
    path = Path(bundle) / META_FILE
    meta = json.loads(path.read_text()) if path.exists() else {"v": SCHEMA_VERSION}
    meta.setdefault("created_at", now_iso())
    meta["updated_at"] = now_iso()
    meta[section] = payload
    write_json(path, meta)


# ---------------------------------------------------------------------------
# scene / trajectory


def save_scene(scene: MeshScene, path) -> None:
    write_json(Path(path), {
        "v": SCHEMA_VERSION,
        "triangles": [[[float(c) for c in v] for v in tri] for tri in scene.triangles],
    })


def load_scene(path) -> MeshScene:
    obj = read_json(Path(path))
    return MeshScene(np.array(obj["triangles"], dtype=float).reshape(-1, 3, 3))


def save_trajectory(traj: CameraTrajectory, path) -> None:
    write_json(Path(path), {
        "v": SCHEMA_VERSION,
        "poses": [p.to_json() for p in traj.poses],
    })


def load_trajectory(path) -> CameraTrajectory:
    obj = read_json(Path(path))
    if not obj.get("poses"):
        raise BundleError(f"{path}: trajectory has no poses")
    return CameraTrajectory([Transform.from_json(p) for p in obj["poses"]])


# ---------------------------------------------------------------------------
# annotations + search space


def save_annotations(bundle: Path, strokes: list[SprayStroke],
                     zones: list[InteractionZone] | None = None,
                     regions: list[AvoidanceRegion] | None = None) -> None:
    write_json(Path(bundle) / ANNOTATIONS_FILE, {
        "v": SCHEMA_VERSION,
        "strokes": [s.to_json() for s in strokes],
        "zones": [z.to_json() for z in (zones or [])],
        "regions": [r.to_json() for r in (regions or [])],
    })


def load_annotations(bundle: Path) -> tuple[list[SprayStroke],
                                            list[InteractionZone],
                                            list[AvoidanceRegion]]:
    obj = read_json(Path(bundle) / ANNOTATIONS_FILE)
    strokes = [SprayStroke.from_json(s) for s in obj.get("strokes", [])]
    zones = [InteractionZone.from_json(z) for z in obj.get("zones", [])]
    regions = [AvoidanceRegion.from_json(r) for r in obj.get("regions", [])]
    return strokes, zones, regions


def save_searchspace(bundle: Path, space: SearchSpace) -> None:
    write_json(Path(bundle) / SEARCHSPACE_FILE,
               {"v": SCHEMA_VERSION, **space.to_json()})


def load_searchspace(bundle: Path) -> SearchSpace:
    obj = read_json(Path(bundle) / SEARCHSPACE_FILE)
    return SearchSpace.from_json(obj)


# ---------------------------------------------------------------------------
# optimize config + result


def optimize_config_to_json(cfg: OptimizeConfig) -> dict:
    return asdict(cfg)


def optimize_config_from_json(obj: dict) -> OptimizeConfig:
    reach = obj.get("reach", {})
    ik = reach.get("ik", {})
    return OptimizeConfig(
        per_zone=obj.get("per_zone", 100),
        threshold=obj.get("threshold", 90.0),
        seed_targets=obj.get("seed_targets", 0),
        seed_opt=obj.get("seed_opt", 0),
        reach=ReachConfig(
            restarts=reach.get("restarts", 8),
            path_resolution=reach.get("path_resolution", 0.05),
            seed=reach.get("seed", 0),
            ik=IkConfig(**ik) if ik else IkConfig(),
            collision_tolerance=reach.get("collision_tolerance", 1e-6),
        ),
        nm=NelderMeadConfig(**obj["nm"]) if "nm" in obj else NelderMeadConfig(),
        mlsl=MlslConfig(**obj["mlsl"]) if "mlsl" in obj else MlslConfig(),
    )


def _outcome_to_json(outcome, target: TaskTarget) -> dict:
    return {
        "target_index": outcome.target_index,
        "zone_id": target.zone_id,
        "position": [float(v) for v in target.position],
        "approach_axis": [float(v) for v in target.approach_axis],
        "reached": outcome.reached,
        "position_error": float(outcome.position_error),
        "q_solution": None if outcome.q_solution is None
        else [float(v) for v in outcome.q_solution],
        "failure_reason": None if outcome.failure_reason is None
        else outcome.failure_reason.value,
    }


def result_to_json(result: OptimizationResult, cfg: OptimizeConfig,
                   robot_name: str, space: SearchSpace,
                   targets: list[TaskTarget]) -> dict:
    best = result.best
    world_pose = base_pose_for(space, best.candidate.x, best.candidate.y)
    return {
        "v": SCHEMA_VERSION,
        "robot": robot_name,
        "config": optimize_config_to_json(cfg),
        "seeds": result.seeds,
        "best": {
            "candidate": {"x": best.candidate.x, "y": best.candidate.y},
            "n_reached": best.n_reached,
            "miss_sum": best.miss_sum,
            "objective": best.objective,
            "outcomes": [_outcome_to_json(o, targets[o.target_index])
                         for o in best.outcomes],
        },
        "base_pose": {
            "plane_local": [best.candidate.x, best.candidate.y, 0.0],
            "world": world_pose.to_json(),
        },
        "reach_percentage": result.reach_percentage,
        "meets_threshold": result.meets_threshold,
        "local_runs": result.local_runs,
        "evaluations": result.evaluations,
        "trace": [[c.x, c.y, v] for c, v in result.trace],
    }


def save_result(bundle: Path, payload: dict) -> None:
    write_json(Path(bundle) / RESULT_FILE, payload)


def load_result(bundle: Path) -> dict:
    return read_json(Path(bundle) / RESULT_FILE)


def result_best_evaluation(payload: dict) -> PlacementEvaluation:
    """Rebuild the best PlacementEvaluation (sans outcomes detail) from disk."""
    best = payload["best"]
    return PlacementEvaluation(
        PlacementCandidate(best["candidate"]["x"], best["candidate"]["y"]),
        best["n_reached"], best["miss_sum"], best["objective"], [])
