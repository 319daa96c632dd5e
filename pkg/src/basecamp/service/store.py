"""Disk-backed session store: each session is a bundle directory plus a
session.json status file. Optimization runs on a background thread; a run
found on disk without a live thread (service restarted mid-run) is failed
rather than silently resumed."""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from .. import bundle as bd
from ..annotate import (
    InsufficientSprayError,
    SearchSpace,
    SprayLabel,
    SprayStroke,
    make_avoidance_region,
    make_interaction_zone,
    spray_select,
)
from ..cloud import PlyParseError, load_cloud
from ..kinematics import load_robot, save_robot
from ..optimizer import (
    MlslConfig,
    OptimizeConfig,
    Workcell,
    adjust_search_space,
    optimize_base,
    sample_targets,
)

ANNOTATING = "annotating"
OPTIMIZING = "optimizing"
DONE = "done"
BELOW_THRESHOLD = "below_threshold"
FAILED = "failed"


class SessionNotFound(KeyError):
    pass


class WorkflowError(ValueError):
    """Operation not allowed in the session's current state (HTTP 409)."""


class SessionStore:
    def __init__(self, data_dir: Path):
        self.root = Path(data_dir) / "sessions"
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._threads: dict[str, threading.Thread] = {}

    # -- session state ------------------------------------------------------

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _state_path(self, session_id: str) -> Path:
        return self._dir(session_id) / "session.json"

    def _read_state(self, session_id: str) -> dict:
        path = self._state_path(session_id)
        if not path.exists():
            raise SessionNotFound(session_id)
        import json

        return json.loads(path.read_text())

    def _write_state(self, state: dict) -> None:
        state["updated_at"] = bd.now_iso()
        bd.write_json(self._state_path(state["session_id"]), state)

    def create(self) -> dict:
        session_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._dir(session_id).mkdir(parents=True)
            state = {
                "v": 1,
                "session_id": session_id,
                "status": ANNOTATING,
                "progress": 0.0,
                "created_at": bd.now_iso(),
                "updated_at": bd.now_iso(),
                "failure": None,
            }
            self._write_state(state)
        return state

    def get(self, session_id: str) -> dict:
        with self._lock:
            state = self._read_state(session_id)
            if state["status"] == OPTIMIZING and session_id not in self._threads:
                # service restarted while a run was active: never report a
                # silent partial result
                state["status"] = FAILED
                state["failure"] = "optimization interrupted by service restart"
                self._write_state(state)
        return state

    def info(self, session_id: str) -> dict:
        state = self.get(session_id)
        path = self._dir(session_id)
        point_count = None
        if (path / bd.CLOUD_FILE).exists():
            point_count = state.get("point_count")
        has_annotations = False
        if (path / bd.ANNOTATIONS_FILE).exists():
            _, zones, _ = bd.load_annotations(path)
            has_annotations = bool(zones)
        return {
            **{k: state.get(k) for k in ("session_id", "status", "progress",
                                         "created_at", "updated_at", "failure")},
            "point_count": point_count,
            "has_annotations": has_annotations,
            "has_result": (path / bd.RESULT_FILE).exists(),
        }

    def _require_idle(self, state: dict) -> None:
        if state["status"] == OPTIMIZING:
            raise WorkflowError("an optimization run is active; try again later")

    # -- cloud --------------------------------------------------------------

    def upload_cloud(self, session_id: str, body: bytes) -> dict:
        with self._lock:
            state = self.get(session_id)
            self._require_idle(state)
            path = self._dir(session_id)
            cloud_path = path / bd.CLOUD_FILE
            tmp = path / (bd.CLOUD_FILE + ".tmp")
            tmp.write_bytes(body)
            try:
                cloud = load_cloud(tmp)  # raises PlyParseError with location
            except PlyParseError:
                tmp.unlink()
                raise
            tmp.replace(cloud_path)
            # a new cloud invalidates everything derived from the old one
            if (path / bd.ANNOTATIONS_FILE).exists():
                strokes, _, _ = bd.load_annotations(path)
                bd.save_annotations(path, strokes, [], [])
            (path / bd.RESULT_FILE).unlink(missing_ok=True)
            lo, hi = cloud.bounds()
            state["status"] = ANNOTATING
            state["progress"] = 0.0
            state["point_count"] = len(cloud)
            self._write_state(state)
            return {
                "point_count": len(cloud),
                "bounds_min": [float(v) for v in lo],
                "bounds_max": [float(v) for v in hi],
            }

    # -- annotations --------------------------------------------------------

    def put_annotations(self, session_id: str, strokes: list[SprayStroke],
                        space: SearchSpace | None):
        with self._lock:
            state = self.get(session_id)
            self._require_idle(state)
            path = self._dir(session_id)
            if not (path / bd.CLOUD_FILE).exists():
                raise WorkflowError("upload a point cloud before annotating")
            cloud = load_cloud(path / bd.CLOUD_FILE)
            if space is None:
                try:
                    space = bd.load_searchspace(path)
                except bd.BundleError:
                    raise WorkflowError(
                        "no search space: include one in the annotations")
            zones, regions = [], []
            for stroke in strokes:
                indices = spray_select(cloud, stroke)
                if stroke.label is SprayLabel.INTERACT:
                    if stroke.approach_dir is None:
                        raise InsufficientSprayError(
                            f"interact stroke '{stroke.zone_id}' lacks approach_dir")
                    zones.append(make_interaction_zone(
                        cloud, indices, stroke.approach_dir, stroke.zone_id,
                        frame_orientation=space.orientation))
                else:
                    regions.append(make_avoidance_region(cloud, indices,
                                                         stroke.zone_id))
            bd.save_annotations(path, strokes, zones, regions)
            bd.save_searchspace(path, space)
            state["status"] = ANNOTATING
            self._write_state(state)
            return zones, regions, space

    # -- optimization -------------------------------------------------------

    def start_optimize(self, session_id: str, robot_ref: str, seed_targets: int,
                       seed_opt: int, threshold: float, per_zone: int,
                       max_evals: int | None) -> dict:
        with self._lock:
            state = self.get(session_id)
            if state["status"] == OPTIMIZING:
                raise WorkflowError("an optimization run is already active")
            if state["status"] not in (ANNOTATING,):
                raise WorkflowError(
                    f"cannot start optimization from status '{state['status']}'; "
                    f"adjust the search space first")
            path = self._dir(session_id)
            _, zones, regions = bd.load_annotations(path) \
                if (path / bd.ANNOTATIONS_FILE).exists() else ([], [], [])
            if not zones:
                raise WorkflowError("annotate at least one interaction zone first")
            try:
                space = bd.load_searchspace(path)
            except bd.BundleError:
                raise WorkflowError("define a search space before optimizing")
            robot = load_robot(robot_ref)
            workcell = Workcell(zones, regions, space, cloud_ref=bd.CLOUD_FILE)
            mlsl = MlslConfig() if max_evals is None else MlslConfig(max_evals=max_evals)
            cfg = OptimizeConfig(per_zone=per_zone, threshold=threshold,
                                 seed_targets=seed_targets, seed_opt=seed_opt,
                                 mlsl=mlsl)
            state["status"] = OPTIMIZING
            state["progress"] = 0.0
            state["failure"] = None
            self._write_state(state)

            thread = threading.Thread(
                target=self._run_optimize,
                args=(session_id, workcell, robot, cfg),
                name=f"optimize-{session_id}", daemon=True)
            self._threads[session_id] = thread
            thread.start()
            return self.get(session_id)

    def _set_progress(self, session_id: str, frac: float) -> None:
        with self._lock:
            state = self._read_state(session_id)
            # progress is monotone within a run
            state["progress"] = max(state.get("progress", 0.0), min(1.0, frac))
            self._write_state(state)

    def _run_optimize(self, session_id: str, workcell: Workcell, robot,
                      cfg: OptimizeConfig) -> None:
        path = self._dir(session_id)
        last = [0.0]

        def progress(evals, max_evals):
            frac = evals / max_evals
            if frac - last[0] >= 0.01:
                last[0] = frac
                self._set_progress(session_id, frac)

        try:
            result = optimize_base(workcell, robot, cfg, progress_cb=progress)
            targets = sample_targets(workcell, cfg.per_zone, cfg.seed_targets)
            payload = bd.result_to_json(result, cfg, robot.name, workcell.space,
                                        targets.targets)
            bd.save_result(path, payload)
            save_robot(robot, path / bd.ROBOT_FILE)
            with self._lock:
                state = self._read_state(session_id)
                state["status"] = DONE if result.meets_threshold else BELOW_THRESHOLD
                state["progress"] = 1.0
                self._write_state(state)
        except Exception as exc:  # surfaced via session status, never silent
            with self._lock:
                state = self._read_state(session_id)
                state["status"] = FAILED
                state["failure"] = f"{type(exc).__name__}: {exc}"
                self._write_state(state)
        finally:
            with self._lock:
                self._threads.pop(session_id, None)

    def get_result_bytes(self, session_id: str) -> bytes:
        state = self.get(session_id)
        if state["status"] == OPTIMIZING:
            raise WorkflowError("optimization still running")
        path = self._dir(session_id) / bd.RESULT_FILE
        if not path.exists():
            raise SessionNotFound(f"{session_id}: no result")
        return path.read_bytes()

    # -- search space -------------------------------------------------------

    def patch_searchspace(self, session_id: str, adjustment) -> SearchSpace:
        with self._lock:
            state = self.get(session_id)
            if state["status"] not in (ANNOTATING, BELOW_THRESHOLD):
                raise WorkflowError(
                    f"cannot adjust the search space from status '{state['status']}'")
            path = self._dir(session_id)
            try:
                space = bd.load_searchspace(path)
            except bd.BundleError:
                raise WorkflowError("no search space defined yet")
            new_space = adjust_search_space(space, adjustment)
            bd.save_searchspace(path, new_space)
            state["status"] = ANNOTATING
            self._write_state(state)
            return new_space
