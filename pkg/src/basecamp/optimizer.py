"""Base-placement optimization: reach objective over (x, y) candidates,
uniform target sampling per zone, Nelder-Mead local search, multi-level
single-linkage global search, and the threshold-gated end-to-end run."""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .annotate import AvoidanceRegion, InteractionZone, SearchSpace
from .collide import pack_hulls
from .geometry import Transform, quat_multiply, quat_rotate
from .kinematics import ReachConfig, ReachOutcome, RobotModel, TaskTarget, reach_check

MISS_WEIGHT = 0.1  # objective = n_reached - MISS_WEIGHT * miss_sum


@dataclass
class Workcell:
    """Everything the optimizer consumes: task zones, obstacles, search plane."""

    zones: list[InteractionZone]
    regions: list[AvoidanceRegion]
    space: SearchSpace
    cloud_ref: str | None = None

    def __post_init__(self):
        if not self.zones:
            raise ValueError("workcell needs at least one interaction zone")


@dataclass
class TargetSet:
    targets: list[TaskTarget]
    per_zone_count: int
    seed: int


@dataclass
class PlacementCandidate:
    x: float
    y: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class PlacementEvaluation:
    candidate: PlacementCandidate
    n_reached: int
    miss_sum: float
    objective: float
    outcomes: list[ReachOutcome]


@dataclass
class NelderMeadConfig:
    initial_step: float = 0.05
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    xtol: float = 1e-3
    ftol: float = 1e-4
    max_evals: int = 200


@dataclass
class MlslConfig:
    batch: int = 10
    sigma: float = 2.0
    max_local: int = 50
    max_evals: int = 2000
    seed: int = 0


@dataclass
class EvalConfig:
    """Per-candidate evaluation settings; `seed` feeds per-target restart RNGs."""

    seed: int = 0
    reach: ReachConfig = field(default_factory=ReachConfig)


@dataclass
class OptimizeConfig:
    per_zone: int = 100
    threshold: float = 90.0
    seed_targets: int = 0
    seed_opt: int = 0
    reach: ReachConfig = field(default_factory=ReachConfig)
    nm: NelderMeadConfig = field(default_factory=NelderMeadConfig)
    mlsl: MlslConfig = field(default_factory=MlslConfig)


@dataclass
class OptimizationResult:
    best: PlacementEvaluation
    reach_percentage: float
    meets_threshold: bool
    local_runs: int
    evaluations: int
    seeds: dict
    trace: list[tuple[PlacementCandidate, float]]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("BASECAMP_THREADS", "1")))
    except ValueError:
        return 1


_executor_lock = threading.Lock()
_executor: ThreadPoolExecutor | None = None
_executor_size = 0


def _shared_executor() -> ThreadPoolExecutor | None:
    """Process-wide restart pool sized by BASECAMP_THREADS (None when 1)."""
    global _executor, _executor_size
    workers = worker_count()
    if workers <= 1:
        return None
    with _executor_lock:
        if _executor is None or _executor_size != workers:
            if _executor is not None:
                _executor.shutdown(wait=False)
            _executor = ThreadPoolExecutor(max_workers=workers,
                                           thread_name_prefix="basecamp-reach")
            _executor_size = workers
    return _executor


def _target_seed(run_seed: int, target_index: int) -> int:
    return int(np.random.SeedSequence((run_seed, target_index)).generate_state(1)[0])


def sample_targets(workcell: Workcell, per_zone: int = 100, seed: int = 0) -> TargetSet:
    """Uniform targets inside each zone's oriented box; the tool z-axis of
    every target points along the approach into the task (anti-parallel to
    the zone's approach_dir)."""
    if per_zone < 1:
        raise ValueError("per_zone must be >= 1")
    rng = np.random.default_rng(seed)
    targets = []
    for zone in workcell.zones:
        local = rng.uniform(-1.0, 1.0, size=(per_zone, 3)) * zone.half_extents
        world = zone.center + quat_rotate(zone.orientation, local)
        for p in world:
            targets.append(TaskTarget(p, -zone.approach_dir, zone.zone_id))
    return TargetSet(targets, per_zone, seed)


def clamp_candidate(xy, space: SearchSpace) -> np.ndarray:
    xy = np.asarray(xy, dtype=float)
    return np.array([
        min(max(xy[0], -space.half_extent_x), space.half_extent_x),
        min(max(xy[1], -space.half_extent_y), space.half_extent_y),
    ])


def base_pose_for(space: SearchSpace, x: float, y: float) -> Transform:
    """World pose of the robot base for plane-local coordinates (x, y):
    translated in-plane, z-axis along the plane normal."""
    return space.plane_transform().compose(Transform(np.array([x, y, 0.0])))


def evaluate_placement(cand, workcell: Workcell, targets: TargetSet,
                       robot: RobotModel, cfg: EvalConfig | None = None,
                       executor: ThreadPoolExecutor | None = None) -> PlacementEvaluation:
    """Score one base placement: count reached targets (threading the previous
    solution into each path check) and sum the miss distances of the rest."""
    cfg = cfg or EvalConfig()
    if isinstance(cand, PlacementCandidate):
        cand = cand.as_array()
    xy = clamp_candidate(cand, workcell.space)
    base = base_pose_for(workcell.space, xy[0], xy[1])
    packed = pack_hulls([r.hull for r in workcell.regions])
    if executor is None:
        executor = _shared_executor()

    outcomes: list[ReachOutcome] = []
    prev_q = None
    for idx, target in enumerate(targets.targets):
        rcfg = replace(cfg.reach, seed=_target_seed(cfg.seed, idx))
        out = reach_check(robot, base, target, workcell.regions, prev_q=prev_q,
                          cfg=rcfg, target_index=idx, packed_regions=packed,
                          executor=executor)
        if out.reached:
            prev_q = out.q_solution
        outcomes.append(out)
    n_reached = sum(1 for o in outcomes if o.reached)
    miss_sum = float(sum(o.position_error for o in outcomes if not o.reached))
    objective = n_reached - MISS_WEIGHT * miss_sum
    return PlacementEvaluation(PlacementCandidate(float(xy[0]), float(xy[1])),
                               n_reached, miss_sum, objective, outcomes)


def nelder_mead(f, x0, space: SearchSpace,
                cfg: NelderMeadConfig | None = None) -> tuple[np.ndarray, float, int]:
    """Maximize f over the search plane with the standard 2D simplex moves.

    Every evaluated point is projected onto the bound box before calling f.
    Terminates when the simplex diameter has dropped below xtol and the value
    spread below ftol (joint test, as in scipy), or when the evaluation
    budget runs out.
    """
    cfg = cfg or NelderMeadConfig()
    evals = 0
    best_x: np.ndarray | None = None
    best_v = -np.inf

    def call(xy):
        nonlocal evals, best_x, best_v
        xc = clamp_candidate(xy, space)
        v = f(xc)
        evals += 1
        if v > best_v:
            best_v = v
            best_x = xc
        return v

    x0 = clamp_candidate(x0, space)
    simplex = [x0,
               x0 + np.array([cfg.initial_step, 0.0]),
               x0 + np.array([0.0, cfg.initial_step])]
    values = [call(x) for x in simplex]

    while evals < cfg.max_evals:
        order = np.argsort(values)[::-1]  # descending: best first
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        diameter = max(np.linalg.norm(simplex[i] - simplex[j])
                       for i in range(3) for j in range(i + 1, 3))
        if diameter < cfg.xtol and (values[0] - values[2]) < cfg.ftol:
            break
        centroid = (simplex[0] + simplex[1]) / 2.0
        worst = simplex[2]
        reflected = centroid + cfg.reflection * (centroid - worst)
        v_r = call(reflected)
        if v_r > values[0]:
            expanded = centroid + cfg.expansion * (centroid - worst)
            v_e = call(expanded)
            if v_e > v_r:
                simplex[2], values[2] = expanded, v_e
            else:
                simplex[2], values[2] = reflected, v_r
            continue
        if v_r > values[1]:
            simplex[2], values[2] = reflected, v_r
            continue
        if v_r > values[2]:  # outside contraction
            contracted = centroid + cfg.contraction * (reflected - centroid)
        else:  # inside contraction
            contracted = centroid - cfg.contraction * (centroid - worst)
        v_c = call(contracted)
        if v_c > min(values[2], v_r):
            simplex[2], values[2] = contracted, v_c
            continue
        # shrink toward the best vertex
        for i in (1, 2):
            simplex[i] = simplex[0] + cfg.shrink * (simplex[i] - simplex[0])
            values[i] = call(simplex[i])
            if evals >= cfg.max_evals:
                break
    return best_x, best_v, evals


@dataclass
class MlslOutcome:
    best_x: np.ndarray
    best_value: float
    local_runs: int
    evaluations: int
    trace: list[tuple[PlacementCandidate, float]]


def mlsl_optimize(f, space: SearchSpace, cfg: MlslConfig | None = None,
                  nm_cfg: NelderMeadConfig | None = None,
                  progress_cb=None) -> MlslOutcome:
    """Multi-level single-linkage global maximization over the search plane.

    Draws uniform batches, computes the shrinking critical radius
    r_k = sigma * sqrt(area * ln(kN) / (kN * pi)), and starts Nelder-Mead
    only from samples with no better-valued sample within r_k that are not
    within xtol of an already-found local optimum. Stops when the evaluation
    budget is spent or `batch` consecutive iterations bring no improvement
    above ftol.
    """
    cfg = cfg or MlslConfig()
    nm_cfg = nm_cfg or NelderMeadConfig()
    if cfg.batch < 1 or cfg.max_evals < 1 or cfg.max_local < 1:
        raise ValueError("mlsl budgets must be positive")
    rng = np.random.default_rng(cfg.seed)
    wx, wy = space.half_extent_x, space.half_extent_y
    area = 4.0 * wx * wy

    trace: list[tuple[PlacementCandidate, float]] = []
    evals = 0
    best_x: np.ndarray | None = None
    best_v = -np.inf

    def call(xy):
        nonlocal evals, best_x, best_v
        xc = clamp_candidate(xy, space)
        v = f(xc)
        evals += 1
        trace.append((PlacementCandidate(float(xc[0]), float(xc[1])), float(v)))
        if v > best_v:
            best_v = v
            best_x = xc
        if progress_cb is not None:
            progress_cb(evals, cfg.max_evals)
        return v

    sample_xy: list[np.ndarray] = []
    sample_v: list[float] = []
    started: list[bool] = []
    optima: list[np.ndarray] = []
    local_runs = 0
    stall = 0

    while evals < cfg.max_evals and local_runs < cfg.max_local:
        before = best_v
        n_draw = min(cfg.batch, cfg.max_evals - evals)
        draws = rng.uniform((-wx, -wy), (wx, wy), size=(n_draw, 2))
        for xy in draws:
            sample_xy.append(xy)
            sample_v.append(call(xy))
            started.append(False)
        kn = len(sample_xy)
        r_k = cfg.sigma * np.sqrt(area * np.log(kn) / (kn * np.pi)) if kn > 1 else np.inf

        xs = np.array(sample_xy)
        vs = np.array(sample_v)
        for i in range(kn):
            if started[i] or local_runs >= cfg.max_local or evals >= cfg.max_evals:
                continue
            dist = np.linalg.norm(xs - xs[i], axis=1)
            if ((dist <= r_k) & (vs > vs[i])).any():
                continue
            if any(np.linalg.norm(xs[i] - o) <= nm_cfg.xtol for o in optima):
                continue
            started[i] = True
            budget = min(nm_cfg.max_evals, cfg.max_evals - evals)
            local_cfg = replace(nm_cfg, max_evals=budget)
            lx, _lv, _ = nelder_mead(call, xs[i], space, local_cfg)
            optima.append(lx)
            local_runs += 1
        if best_v > before + nm_cfg.ftol:
            stall = 0
        else:
            stall += 1
            if stall >= cfg.batch:
                break
    return MlslOutcome(best_x, best_v, local_runs, evals, trace)


@dataclass
class Translate:
    offset: np.ndarray  # plane-local meters

    def __post_init__(self):
        self.offset = np.asarray(self.offset, dtype=float).reshape(3)


@dataclass
class Scale:
    fx: float
    fy: float


@dataclass
class Rotate:
    quaternion: np.ndarray

    def __post_init__(self):
        self.quaternion = np.asarray(self.quaternion, dtype=float).reshape(4)


def adjust_search_space(space: SearchSpace, op) -> SearchSpace:
    """Translate (plane-local), scale the extents, or rotate the plane."""
    if isinstance(op, Translate):
        return SearchSpace(space.center + quat_rotate(space.orientation, op.offset),
                           space.orientation, space.half_extent_x,
                           space.half_extent_y)
    if isinstance(op, Scale):
        if op.fx <= 0 or op.fy <= 0:
            raise ValueError("scale factors must be positive")
        return SearchSpace(space.center, space.orientation,
                           space.half_extent_x * op.fx,
                           space.half_extent_y * op.fy)
    if isinstance(op, Rotate):
        return SearchSpace(space.center,
                           quat_multiply(op.quaternion, space.orientation),
                           space.half_extent_x, space.half_extent_y)
    raise TypeError(f"unknown adjustment {type(op).__name__}")


def optimize_base(workcell: Workcell, robot: RobotModel,
                  cfg: OptimizeConfig | None = None,
                  progress_cb=None) -> OptimizationResult:
    """Sample targets once, run MLSL over the placement objective, and report
    the best placement with its threshold verdict. Deterministic per seeds."""
    cfg = cfg or OptimizeConfig()
    targets = sample_targets(workcell, cfg.per_zone, cfg.seed_targets)
    eval_cfg = EvalConfig(seed=cfg.seed_opt, reach=cfg.reach)

    best_eval: PlacementEvaluation | None = None

    def objective(xy):
        nonlocal best_eval
        ev = evaluate_placement(xy, workcell, targets, robot, eval_cfg)
        if best_eval is None or ev.objective > best_eval.objective:
            best_eval = ev
        return ev.objective

    mlsl_cfg = replace(cfg.mlsl, seed=cfg.seed_opt)
    outcome = mlsl_optimize(objective, workcell.space, mlsl_cfg, cfg.nm,
                            progress_cb=progress_cb)
    total = len(targets.targets)
    reach_pct = 100.0 * best_eval.n_reached / total
    return OptimizationResult(
        best=best_eval,
        reach_percentage=reach_pct,
        meets_threshold=reach_pct >= cfg.threshold,
        local_runs=outcome.local_runs,
        evaluations=outcome.evaluations,
        seeds={"targets": cfg.seed_targets, "optimizer": cfg.seed_opt},
        trace=outcome.trace,
    )
