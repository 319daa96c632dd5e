import numpy as np
import pytest

from basecamp.annotate import InteractionZone, SearchSpace, box_corners
from basecamp.geometry import QUAT_IDENTITY, quat_from_axis_angle
from basecamp.hull import quickhull
from basecamp.annotate import AvoidanceRegion
from basecamp.kinematics import load_robot
from basecamp.optimizer import (
    EvalConfig,
    MlslConfig,
    NelderMeadConfig,
    OptimizeConfig,
    Rotate,
    Scale,
    Translate,
    Workcell,
    adjust_search_space,
    evaluate_placement,
    mlsl_optimize,
    nelder_mead,
    optimize_base,
    sample_targets,
)

PLANAR = load_robot("planar2")
DOWN = np.array([0.0, 0.0, -1.0])  # approach_dir for planar tasks (tool z = +z)


def make_zone(zone_id, center, half, approach=DOWN):
    center = np.asarray(center, dtype=float)
    half = np.asarray(half, dtype=float)
    return InteractionZone(zone_id, center, half, QUAT_IDENTITY.copy(),
                           box_corners(center, half, QUAT_IDENTITY), approach)


def plane(wx=0.5, wy=0.5):
    return SearchSpace(np.zeros(3), QUAT_IDENTITY.copy(), wx, wy)


def reachable_cell():
    # one flat zone hovering around (0.45, 0, 0), all inside planar2 reach
    zone = make_zone("pick", [0.45, 0.0, 0.0], [0.08, 0.08, 0.0])
    return Workcell([zone], [], plane(0.2, 0.2))


def test_sample_targets_counts_and_zone_ids():
    cell = Workcell([make_zone("a", [0.4, 0, 0], [0.1, 0.1, 0]),
                     make_zone("b", [-0.4, 0, 0], [0.1, 0.1, 0])],
                    [], plane())
    ts = sample_targets(cell, per_zone=100, seed=5)
    assert len(ts.targets) == 200
    assert sum(1 for t in ts.targets if t.zone_id == "a") == 100
    # tool z of each target is anti-parallel to the zone approach direction
    np.testing.assert_allclose(ts.targets[0].approach_axis, [0, 0, 1], atol=1e-12)


def test_sample_targets_flat_zone_on_plane():
    cell = Workcell([make_zone("flat", [0.3, 0.1, 0.25], [0.1, 0.05, 0.0])], [],
                    plane())
    ts = sample_targets(cell, per_zone=50, seed=1)
    zs = np.array([t.position[2] for t in ts.targets])
    np.testing.assert_allclose(zs, 0.25, atol=1e-12)


def test_sample_targets_deterministic():
    cell = reachable_cell()
    a = sample_targets(cell, 30, seed=7)
    b = sample_targets(cell, 30, seed=7)
    for ta, tb in zip(a.targets, b.targets):
        np.testing.assert_array_equal(ta.position, tb.position)


def test_sample_targets_inside_rotated_zone():
    q = quat_from_axis_angle([0, 0, 1], 0.6)
    center = np.array([0.2, -0.1, 0.4])
    half = np.array([0.2, 0.1, 0.05])
    zone = InteractionZone("r", center, half, q, box_corners(center, half, q),
                           DOWN)
    ts = sample_targets(Workcell([zone], [], plane()), 200, seed=3)
    from basecamp.geometry import quat_to_matrix
    R = quat_to_matrix(q)
    local = (np.array([t.position for t in ts.targets]) - center) @ R
    assert (np.abs(local) <= half + 1e-12).all()


def test_sample_targets_mean_convergence():
    # fixed-seed aggregate of per-axis means vs 3 sigma / sqrt(n)
    zone = make_zone("m", [0.4, -0.2, 0.3], [0.12, 0.2, 0.03])
    cell = Workcell([zone], [], plane())
    all_pts = []
    for seed in range(20):
        ts = sample_targets(cell, 100, seed=seed)
        all_pts.append([t.position for t in ts.targets])
    pts = np.concatenate(all_pts)
    n = len(pts)
    sigma = zone.half_extents / np.sqrt(3.0)
    tol = 3.0 * sigma / np.sqrt(n)
    dev = np.abs(pts.mean(axis=0) - zone.center)
    assert (dev <= np.maximum(tol, 1e-12)).all()


def test_evaluate_objective_identity_and_full_reach():
    cell = reachable_cell()
    ts = sample_targets(cell, 40, seed=11)
    ev = evaluate_placement(np.zeros(2), cell, ts, PLANAR, EvalConfig(seed=2))
    assert ev.n_reached == 40
    assert ev.miss_sum == 0.0
    assert ev.objective == 40.0
    assert ev.objective == ev.n_reached - 0.1 * ev.miss_sum


def test_evaluate_unreachable_shortfalls_analytic():
    # zone far beyond planar2's 1.0 m reach: every miss distance is exactly
    # (target distance from base) - 1.0
    zone = make_zone("far", [5.0, 0.0, 0.0], [0.1, 0.1, 0.0])
    cell = Workcell([zone], [], plane(0.2, 0.2))
    ts = sample_targets(cell, 25, seed=13)
    ev = evaluate_placement(np.zeros(2), cell, ts, PLANAR, EvalConfig(seed=0))
    assert ev.n_reached == 0
    expected = sum(np.linalg.norm(t.position) - 1.0 for t in ts.targets)
    assert ev.miss_sum == pytest.approx(expected, abs=1e-12)
    assert ev.objective == pytest.approx(-0.1 * expected, abs=1e-12)
    assert ev.objective == ev.n_reached - 0.1 * ev.miss_sum


def test_evaluate_candidate_projected_into_bounds():
    cell = reachable_cell()
    ts = sample_targets(cell, 10, seed=1)
    ev = evaluate_placement(np.array([9.0, -9.0]), cell, ts, PLANAR, EvalConfig())
    assert ev.candidate.x == pytest.approx(0.2)
    assert ev.candidate.y == pytest.approx(-0.2)


def test_evaluate_deterministic():
    cell = reachable_cell()
    ts = sample_targets(cell, 25, seed=4)
    a = evaluate_placement(np.array([0.05, 0.02]), cell, ts, PLANAR, EvalConfig(seed=9))
    b = evaluate_placement(np.array([0.05, 0.02]), cell, ts, PLANAR, EvalConfig(seed=9))
    assert a.objective == b.objective
    assert [o.reached for o in a.outcomes] == [o.reached for o in b.outcomes]


def test_nelder_mead_shifted_quadratic():
    f = lambda xy: -((xy[0] - 0.2) ** 2) - (xy[1] + 0.1) ** 2
    best_x, best_v, evals = nelder_mead(f, np.zeros(2), plane())
    np.testing.assert_allclose(best_x, [0.2, -0.1], atol=1e-3)
    assert evals <= 200


def test_nelder_mead_constant_function():
    f = lambda xy: 7.5
    best_x, best_v, evals = nelder_mead(f, np.array([0.1, 0.1]), plane())
    assert best_v == 7.5
    assert evals < 200  # terminates well before the budget, no error


def test_nelder_mead_rosenbrock():
    # rosenbrock domain [-2, 2]^2 scaled onto the plane: u = 4x, v = 4y
    def f(xy):
        u, v = 4 * xy[0], 4 * xy[1]
        return -((1 - u) ** 2 + 100 * (v - u * u) ** 2)

    cfg = NelderMeadConfig(max_evals=200)
    best_x, best_v, evals = nelder_mead(f, np.zeros(2), plane(), cfg)
    np.testing.assert_allclose(best_x, [0.25, 0.25], atol=1e-3)


def test_nelder_mead_respects_bounds():
    # optimum outside the box: all evaluated points must stay inside
    seen = []

    def f(xy):
        seen.append(xy.copy())
        return xy[0] + xy[1]

    best_x, _, _ = nelder_mead(f, np.array([0.4, 0.4]), plane(0.5, 0.5))
    pts = np.array(seen)
    assert (np.abs(pts) <= 0.5 + 1e-12).all()
    np.testing.assert_allclose(best_x, [0.5, 0.5], atol=1e-6)


def camel_objective(xy):
    u, v = 6.0 * xy[0], 4.0 * xy[1]
    f = ((4 - 2.1 * u * u + u ** 4 / 3) * u * u + u * v
         + (-4 + 4 * v * v) * v * v)
    return -f


CAMEL_MAX = 1.031628453489877


def test_mlsl_unimodal_centers():
    f = lambda xy: -(xy[0] ** 2 + xy[1] ** 2)
    for seed in range(5):
        out = mlsl_optimize(f, plane(), MlslConfig(seed=seed, max_evals=600))
        np.testing.assert_allclose(out.best_x, [0, 0], atol=1e-3)


def test_mlsl_six_hump_camel_quick():
    hits = 0
    for seed in range(3):
        out = mlsl_optimize(camel_objective, plane(), MlslConfig(seed=seed))
        if abs(out.best_value - CAMEL_MAX) <= 1e-3:
            hits += 1
    assert hits >= 2


def test_mlsl_single_local_run():
    f = lambda xy: -(xy[0] ** 2 + xy[1] ** 2)
    out = mlsl_optimize(f, plane(), MlslConfig(seed=0, max_local=1))
    assert out.local_runs == 1


def test_mlsl_trace_and_best_consistency():
    out = mlsl_optimize(camel_objective, plane(), MlslConfig(seed=1))
    values = [v for _, v in out.trace]
    assert out.best_value == max(values)
    assert out.evaluations == len(out.trace)
    for cand, _ in out.trace:
        assert -0.5 - 1e-12 <= cand.x <= 0.5 + 1e-12
        assert -0.5 - 1e-12 <= cand.y <= 0.5 + 1e-12


def test_adjust_search_space_ops():
    s = plane(0.5, 0.4)
    doubled = adjust_search_space(s, Scale(2, 2))
    assert doubled.half_extent_x == 1.0
    assert doubled.half_extent_y == 0.8

    moved = adjust_search_space(s, Translate([0.3, 0.0, 0.0]))
    np.testing.assert_allclose(moved.center, [0.3, 0, 0], atol=1e-12)

    q = quat_from_axis_angle([0, 0, 1], 0.5)
    rot = adjust_search_space(s, Rotate(q))
    np.testing.assert_allclose(rot.orientation, q, atol=1e-12)

    with pytest.raises(ValueError):
        adjust_search_space(s, Scale(0, 1))


def test_adjust_translate_is_plane_local():
    q = quat_from_axis_angle([0, 0, 1], np.pi / 2)
    s = SearchSpace(np.zeros(3), q, 0.5, 0.5)
    moved = adjust_search_space(s, Translate([0.3, 0.0, 0.0]))
    # plane x axis points along world +y after the 90 degree rotation
    np.testing.assert_allclose(moved.center, [0, 0.3, 0], atol=1e-12)


def small_cfg(seed_targets=1, seed_opt=2):
    return OptimizeConfig(per_zone=15, seed_targets=seed_targets, seed_opt=seed_opt,
                          mlsl=MlslConfig(batch=5, max_local=3, max_evals=60))


def test_optimize_base_end_to_end_small():
    cell = reachable_cell()
    result = optimize_base(cell, PLANAR, small_cfg())
    assert result.meets_threshold
    assert result.best.n_reached == 15
    assert result.reach_percentage == 100.0
    assert result.evaluations == len(result.trace)
    assert result.best.objective >= max(v for _, v in result.trace) - 1e-12


def test_optimize_base_infeasible_cell():
    zone = make_zone("far", [10.0, 0.0, 0.0], [0.1, 0.1, 0.0])
    cell = Workcell([zone], [], plane(0.2, 0.2))
    result = optimize_base(cell, PLANAR, small_cfg())
    assert not result.meets_threshold
    assert result.best.n_reached == 0


def test_optimize_base_deterministic():
    cell = reachable_cell()
    a = optimize_base(cell, PLANAR, small_cfg())
    b = optimize_base(cell, PLANAR, small_cfg())
    assert a.best.candidate == b.best.candidate
    assert a.best.objective == b.best.objective
    assert len(a.trace) == len(b.trace)
    for (ca, va), (cb, vb) in zip(a.trace, b.trace):
        assert (ca.x, ca.y, va) == (cb.x, cb.y, vb)


def test_adding_region_never_increases_reach():
    cell = reachable_cell()
    ts = sample_targets(cell, 20, seed=21)
    wall = quickhull(np.array([0.45, 0.0, 0.0]) + np.array(
        [[sx, sy, sz] for sx in (-0.05, 0.05) for sy in (-0.05, 0.05)
         for sz in (-0.3, 0.3)]))
    blocked = Workcell(cell.zones, [AvoidanceRegion("wall", wall)], cell.space)
    rng = np.random.default_rng(22)
    for _ in range(5):
        xy = rng.uniform(-0.2, 0.2, size=2)
        free_ev = evaluate_placement(xy, cell, ts, PLANAR, EvalConfig(seed=3))
        blocked_ev = evaluate_placement(xy, blocked, ts, PLANAR, EvalConfig(seed=3))
        assert blocked_ev.n_reached <= free_ev.n_reached
