"""Serial-manipulator model, forward kinematics, Jacobian, damped-least-squares
IK with a free tool yaw, and the collision-aware per-target reach check."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from ._kernels import fk_frames, ik_dls, path_collision_free, robot_in_collision_kernel
from .collide import Capsule, pack_hulls
from .geometry import Transform, quat_from_matrix


class JointLimitError(ValueError):
    """Joint vector outside the model's limits."""


@dataclass
class Joint:
    axis: np.ndarray  # unit, joint-local
    origin: Transform  # parent link frame -> joint frame
    limits: tuple[float, float]  # radians

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(self.axis)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"joint axis must be unit-norm, got |axis|={n:.3g}")
        self.axis = self.axis / n
        lo, hi = self.limits
        if not lo < hi:
            raise ValueError(f"joint limits must satisfy lo < hi, got [{lo}, {hi}]")
        self.limits = (float(lo), float(hi))


@dataclass
class _PackedModel:
    """Contiguous float64 views of the model for the numba kernels."""

    axes: np.ndarray
    orig_R: np.ndarray
    orig_t: np.ndarray
    tool_R: np.ndarray
    tool_t: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    cap_link: np.ndarray
    cap_a: np.ndarray
    cap_b: np.ndarray
    cap_r: np.ndarray


@dataclass
class RobotModel:
    """Revolute serial chain with per-link collision capsules."""

    name: str
    joints: list[Joint]
    link_capsules: list[list[Capsule]]
    tool_transform: Transform = field(default_factory=Transform.identity)

    def __post_init__(self):
        if len(self.joints) < 2:
            raise ValueError("robot model needs at least 2 joints")
        if len(self.link_capsules) != len(self.joints):
            raise ValueError("link_capsules must have one entry per joint")
        self._packed: _PackedModel | None = None
        self._max_reach: float | None = None

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def limits_array(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.limits[0] for j in self.joints])
        hi = np.array([j.limits[1] for j in self.joints])
        return lo, hi

    def validate_q(self, q: np.ndarray) -> None:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n_joints,):
            raise ValueError(f"expected {self.n_joints} joint values, got {q.shape}")
        lo, hi = self.limits_array()
        if (q < lo - 1e-9).any() or (q > hi + 1e-9).any():
            raise JointLimitError(f"joint vector {q} outside limits")

    def max_reach(self) -> float:
        """Upper bound on tool distance from the base origin (sum of link
        offsets); nothing beyond this radius is ever reachable."""
        if self._max_reach is None:
            total = sum(float(np.linalg.norm(j.origin.position)) for j in self.joints)
            self._max_reach = total + float(np.linalg.norm(self.tool_transform.position))
        return self._max_reach

    def packed(self) -> _PackedModel:
        if self._packed is None:
            n = self.n_joints
            axes = np.ascontiguousarray([j.axis for j in self.joints], dtype=float)
            orig_R = np.ascontiguousarray(
                [j.origin.rotation_matrix() for j in self.joints], dtype=float)
            orig_t = np.ascontiguousarray(
                [j.origin.position for j in self.joints], dtype=float)
            lo, hi = self.limits_array()
            caps = [(li, c) for li, lst in enumerate(self.link_capsules) for c in lst]
            if caps:
                cap_link = np.array([li for li, _ in caps], dtype=np.int64)
                cap_a = np.ascontiguousarray([c.endpoint_a for _, c in caps])
                cap_b = np.ascontiguousarray([c.endpoint_b for _, c in caps])
                cap_r = np.array([c.radius for _, c in caps])
            else:
                cap_link = np.zeros(0, dtype=np.int64)
                cap_a = np.zeros((0, 3))
                cap_b = np.zeros((0, 3))
                cap_r = np.zeros(0)
            self._packed = _PackedModel(
                axes, orig_R, orig_t,
                np.ascontiguousarray(self.tool_transform.rotation_matrix()),
                np.ascontiguousarray(self.tool_transform.position),
                lo, hi, cap_link, cap_a, cap_b, cap_r)
        return self._packed

    def to_json(self) -> dict:
        return {
            "v": 1,
            "name": self.name,
            "joints": [
                {
                    "axis": [float(v) for v in j.axis],
                    "origin": j.origin.to_json(),
                    "limits": [j.limits[0], j.limits[1]],
                }
                for j in self.joints
            ],
            "link_capsules": [[c.to_json() for c in lst] for lst in self.link_capsules],
            "tool_transform": self.tool_transform.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "RobotModel":
        joints = [
            Joint(np.array(j["axis"]), Transform.from_json(j["origin"]),
                  (j["limits"][0], j["limits"][1]))
            for j in obj["joints"]
        ]
        caps = [[Capsule.from_json(c) for c in lst] for lst in obj["link_capsules"]]
        return RobotModel(obj["name"], joints, caps,
                          Transform.from_json(obj["tool_transform"]))


def load_robot(path_or_name) -> RobotModel:
    """Load robot.json, or resolve a built-in model name."""
    name = str(path_or_name)
    if name in BUILTIN_MODELS:
        return BUILTIN_MODELS[name]()
    path = Path(path_or_name)
    if not path.exists():
        raise FileNotFoundError(
            f"no robot file '{path}' and no built-in model of that name "
            f"(built-ins: {', '.join(sorted(BUILTIN_MODELS))})")
    return RobotModel.from_json(json.loads(path.read_text()))


def save_robot(model: RobotModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), indent=2, sort_keys=True) + "\n")


@dataclass
class TaskTarget:
    """A tool pose the robot must achieve: position plus required tool z-axis."""

    position: np.ndarray
    approach_axis: np.ndarray
    zone_id: str = ""

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).reshape(3)
        self.approach_axis = np.asarray(self.approach_axis, dtype=float).reshape(3)
        n = np.linalg.norm(self.approach_axis)
        if n < 1e-9:
            raise ValueError("approach_axis must be nonzero")
        self.approach_axis = self.approach_axis / n


@dataclass
class IkConfig:
    pos_tol: float = 1e-3
    axis_tol: float = 2e-3
    damping: float = 0.05
    max_iters: int = 300
    step_cap: float = 0.2
    stall_iters: int = 60  # abandon a run whose best iterate stops improving


@dataclass
class IkResult:
    success: bool
    q: np.ndarray
    position_error: float
    axis_error: float
    iterations: int


class FailureReason(str, Enum):
    IK_FAIL = "IkFail"
    COLLISION = "Collision"
    PATH_COLLISION = "PathCollision"


@dataclass
class ReachOutcome:
    target_index: int
    reached: bool
    position_error: float
    q_solution: np.ndarray | None = None
    failure_reason: FailureReason | None = None


@dataclass
class ReachConfig:
    restarts: int = 8
    path_resolution: float = 0.05
    seed: int = 0
    ik: IkConfig = field(default_factory=IkConfig)
    collision_tolerance: float = 1e-6


def forward_kinematics(model: RobotModel, q,
                       base: Transform | None = None) -> tuple[list[Transform], Transform]:
    """World frames of every link plus the tool frame."""
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n_joints,):
        raise ValueError(f"expected {model.n_joints} joint values, got {q.shape}")
    base = base or Transform.identity()
    p = model.packed()
    Rs, ps = fk_frames(p.axes, p.orig_R, p.orig_t, q,
                       base.rotation_matrix(), base.position)
    frames = [Transform(ps[i], quat_from_matrix(Rs[i])) for i in range(model.n_joints)]
    tool = frames[-1].compose(model.tool_transform)
    return frames, tool


def jacobian(model: RobotModel, q, base: Transform | None = None) -> np.ndarray:
    """Geometric Jacobian (6, n): linear rows over angular rows, column i =
    (z_i x (p_tool - p_i), z_i) with z_i the world joint axis."""
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n_joints,):
        raise ValueError(f"expected {model.n_joints} joint values, got {q.shape}")
    base = base or Transform.identity()
    p = model.packed()
    Rs, ps = fk_frames(p.axes, p.orig_R, p.orig_t, q,
                       base.rotation_matrix(), base.position)
    p_tool = ps[-1] + Rs[-1] @ p.tool_t
    J = np.zeros((6, model.n_joints))
    for i in range(model.n_joints):
        z = Rs[i] @ p.axes[i]
        J[:3, i] = np.cross(z, p_tool - ps[i])
        J[3:, i] = z
    return J


def solve_ik(model: RobotModel, base: Transform, target: TaskTarget,
             seed_q, cfg: IkConfig | None = None) -> IkResult:
    """Damped-least-squares IK on position + tool-z alignment (yaw free).

    Iterates dq = J^T (J J^T + lambda^2 I)^-1 e on the 5-row task with the
    per-iteration step capped and joints clamped to limits. On failure the
    reported q and errors belong to the best iterate seen.
    """
    cfg = cfg or IkConfig()
    seed_q = np.asarray(seed_q, dtype=float)
    model.validate_q(seed_q)
    p = model.packed()
    q, pos_err, axis_err, iters, ok = ik_dls(
        p.axes, p.orig_R, p.orig_t, p.tool_R, p.tool_t, p.lo, p.hi,
        base.rotation_matrix(), base.position,
        target.position, target.approach_axis, seed_q,
        cfg.pos_tol, cfg.axis_tol, cfg.damping, cfg.max_iters, cfg.step_cap,
        cfg.stall_iters)
    return IkResult(bool(ok), q, float(pos_err), float(axis_err), int(iters))


def reach_check(model: RobotModel, base: Transform, target: TaskTarget,
                regions, prev_q=None, cfg: ReachConfig | None = None,
                target_index: int = 0, packed_regions=None,
                executor=None) -> ReachOutcome:
    """Decide whether the target is reachable from this base placement.

    A target is reached iff some IK restart succeeds, its final q is
    collision-free, and (when prev_q is given) the straight joint-space
    path from prev_q is collision-free at every sample. When unreached,
    position_error is the smallest best-iterate position error over all
    attempts (0.0 when reached).

    Callers evaluating many targets against the same regions may pass
    `packed_regions` from `pack_hulls` once. An optional thread-pool
    executor runs the restarts concurrently; the accepted attempt is
    always the first success in seed order, so results are identical
    with or without it.
    """
    cfg = cfg or ReachConfig()
    p = model.packed()
    base_R = base.rotation_matrix()
    base_p = base.position

    # targets beyond the chain's reach bound need no iteration
    dist = float(np.linalg.norm(target.position - base.position))
    if dist > model.max_reach():
        return ReachOutcome(target_index, False, dist - model.max_reach(),
                            None, FailureReason.IK_FAIL)

    hull_verts, hull_starts = packed_regions if packed_regions is not None else \
        pack_hulls([r.hull if hasattr(r, "hull") else r for r in regions])
    rng = np.random.default_rng(cfg.seed)
    prev = None if prev_q is None else np.asarray(prev_q, dtype=float)
    seeds = [] if prev is None else [prev]
    while len(seeds) < cfg.restarts:
        seeds.append(rng.uniform(p.lo, p.hi))

    REACHED, PATH, COLL, IK = 3, 2, 1, 0

    def attempt(q0):
        q, pos_err, _axis_err, _iters, ok = ik_dls(
            p.axes, p.orig_R, p.orig_t, p.tool_R, p.tool_t, p.lo, p.hi,
            base_R, base_p, target.position, target.approach_axis, q0,
            cfg.ik.pos_tol, cfg.ik.axis_tol, cfg.ik.damping,
            cfg.ik.max_iters, cfg.ik.step_cap, cfg.ik.stall_iters)
        if not ok:
            return IK, float(pos_err), None
        Rs, ps = fk_frames(p.axes, p.orig_R, p.orig_t, q, base_R, base_p)
        if robot_in_collision_kernel(Rs, ps, p.cap_link, p.cap_a, p.cap_b,
                                     p.cap_r, hull_verts, hull_starts,
                                     cfg.collision_tolerance):
            return COLL, float(pos_err), None
        if prev is not None and not path_collision_free(
                p.axes, p.orig_R, p.orig_t, base_R, base_p,
                prev, q, cfg.path_resolution,
                p.cap_link, p.cap_a, p.cap_b, p.cap_r,
                hull_verts, hull_starts, cfg.collision_tolerance):
            return PATH, float(pos_err), None
        return REACHED, 0.0, q

    # With a previous pose the first success (prev-seeded) continues its
    # solution family. Without one, scan every restart and keep the success
    # nearest the home posture so the chain starts in a natural family.
    chain_mode = prev is not None
    if executor is not None and len(seeds) > 1:
        results = list(executor.map(attempt, seeds))
    else:
        results = []
        for q0 in seeds:
            res = attempt(q0)
            results.append(res)
            if chain_mode and res[0] == REACHED:
                break

    best_err = np.inf
    reason_rank = IK
    home = (p.lo + p.hi) / 2.0
    chosen = None
    chosen_dist = np.inf
    for rank, err, q in results:
        if rank == REACHED:
            if chain_mode:
                return ReachOutcome(target_index, True, 0.0, q, None)
            d = float(np.linalg.norm(q - home))
            if d < chosen_dist:
                chosen, chosen_dist = q, d
            continue
        reason_rank = max(reason_rank, rank)
        best_err = min(best_err, err)
    if chosen is not None:
        return ReachOutcome(target_index, True, 0.0, chosen, None)

    reason = (FailureReason.PATH_COLLISION if reason_rank == PATH
              else FailureReason.COLLISION if reason_rank == COLL
              else FailureReason.IK_FAIL)
    return ReachOutcome(target_index, False, best_err, None, reason)


def _planar2() -> RobotModel:
    """Two-link planar test arm, l1 = l2 = 0.5 m, both joints about z."""
    joints = [
        Joint(np.array([0.0, 0.0, 1.0]), Transform.identity(), (-np.pi, np.pi)),
        Joint(np.array([0.0, 0.0, 1.0]),
              Transform(np.array([0.5, 0.0, 0.0])), (-np.pi, np.pi)),
    ]
    caps = [
        [Capsule(np.array([0.0, 0.0, 0.0]), np.array([0.45, 0.0, 0.0]), 0.04)],
        [Capsule(np.array([0.0, 0.0, 0.0]), np.array([0.45, 0.0, 0.0]), 0.04)],
    ]
    return RobotModel("planar2", joints, caps,
                      Transform(np.array([0.5, 0.0, 0.0])))


def _generic6r() -> RobotModel:
    """Reference 6R articulated arm (yaw-pitch-pitch-roll-pitch-roll),
    about 0.94 m of reach; all geometry is published in its model file."""
    z = np.array([0.0, 0.0, 1.0])
    y = np.array([0.0, 1.0, 0.0])
    t = lambda *v: Transform(np.array(v, dtype=float))
    joints = [
        Joint(z, t(0.0, 0.0, 0.10), (-np.pi, np.pi)),
        Joint(y, t(0.0, 0.0, 0.08), (-2.2, 2.2)),
        Joint(y, t(0.0, 0.0, 0.38), (-2.5, 2.5)),
        Joint(z, t(0.0, 0.0, 0.32), (-np.pi, np.pi)),
        Joint(y, t(0.0, 0.0, 0.09), (-2.2, 2.2)),
        Joint(z, t(0.0, 0.0, 0.07), (-np.pi, np.pi)),
    ]
    caps = [
        [Capsule(np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.08]), 0.055)],
        [Capsule(np.array([0.0, 0.0, 0.04]), np.array([0.0, 0.0, 0.34]), 0.045)],
        [Capsule(np.array([0.0, 0.0, 0.04]), np.array([0.0, 0.0, 0.28]), 0.04)],
        [Capsule(np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.07]), 0.04)],
        [Capsule(np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.05]), 0.035)],
        [Capsule(np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.0, 0.04]), 0.03)],
    ]
    return RobotModel("generic6r", joints, caps, Transform(np.array([0.0, 0.0, 0.06])))


BUILTIN_MODELS = {
    "planar2": _planar2,
    "generic6r": _generic6r,
}
