"""Command-line workbench: scan, annotate, optimize, report, demo, serve.

Thin argument-parsing layer over the core package; every command reads and
writes the on-disk bundle so the whole loop is replayable and diffable.
Exit codes: 0 success, 2 bad input, 3 finished but below the reach threshold.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import bundle as bd
from . import demo as demo_mod
from . import report as report_mod
from .annotate import (
    InsufficientSprayError,
    SprayLabel,
    SprayStroke,
    make_avoidance_region,
    make_interaction_zone,
    spray_select,
)
from .cloud import CropBox, ScanConfig, crop_to_box, load_cloud, save_cloud
from .hull import DegeneracyError
from .kinematics import load_robot, save_robot
from .optimizer import (
    MlslConfig,
    OptimizeConfig,
    Workcell,
    optimize_base,
    sample_targets,
)
from .scan import captured_frame_indices, simulate_scan


def _fail(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Robot base-placement workbench."""


@main.command("scan")
@click.option("--scene", "scene_path", required=True, type=click.Path(exists=True))
@click.option("--trajectory", "traj_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="Scan config JSON; flags below override its fields.")
@click.option("--grid-size", type=float, help="Image-plane grid spacing [m].")
@click.option("--points-per-frame", type=int, help="Per-frame ray cap.")
@click.option("--fov", type=float, help="Full cone angle [deg].")
@click.option("--max-range", type=float)
@click.option("--noise-sigma", type=float)
@click.option("--rotation-trigger", type=float, help="New-frame rotation [deg].")
@click.option("--translation-trigger", type=float, help="New-frame translation [m].")
@click.option("--crop", "crop_path", type=click.Path(exists=True),
              help="Optional crop box JSON applied after scanning.")
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_scan(scene_path, traj_path, out_dir, config_path, grid_size,
             points_per_frame, fov, max_range, noise_sigma, rotation_trigger,
             translation_trigger, crop_path, seed):
    """Simulate a scan of a mesh scene into BUNDLE/cloud.ply."""
    try:
        scene = bd.load_scene(scene_path)
        trajectory = bd.load_trajectory(traj_path)
        cfg_fields = {}
        if config_path:
            obj = bd.read_json(Path(config_path))
            cfg_fields = {k: v for k, v in obj.items() if k != "v"}
        overrides = {
            "grid_size": grid_size,
            "points_per_frame_cap": points_per_frame,
            "fov": fov,
            "max_range": max_range,
            "noise_sigma": noise_sigma,
            "rotation_trigger": rotation_trigger,
            "translation_trigger": translation_trigger,
        }
        cfg_fields.update({k: v for k, v in overrides.items() if v is not None})
        config = ScanConfig(**{**dataclasses.asdict(ScanConfig()), **cfg_fields})
    except (bd.BundleError, ValueError, TypeError) as exc:
        _fail(str(exc))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cloud = simulate_scan(scene, trajectory, config, seed)
    crop_echo = None
    if crop_path:
        try:
            crop_obj = bd.read_json(Path(crop_path))
            box = CropBox.from_json(crop_obj)
        except (bd.BundleError, ValueError, KeyError) as exc:
            _fail(f"bad crop box: {exc}")
        cloud = crop_to_box(cloud, box)
        crop_echo = box.to_json()
    save_cloud(cloud, out / bd.CLOUD_FILE)
    frames = len(captured_frame_indices(trajectory, config))
    bd.update_meta(out, "scan", {
        "config": config.to_json(),
        "seed": seed,
        "crop": crop_echo,
        "points": len(cloud),
        "frames": frames,
        "scene": str(scene_path),
        "trajectory": str(traj_path),
    })
    click.echo(f"scanned {len(cloud)} points from {frames} frames "
               f"-> {out / bd.CLOUD_FILE}")


@main.command("annotate")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--annotations", "annotations_path", type=click.Path(exists=True),
              help="Strokes + search space JSON; defaults to the bundle's own.")
def cmd_annotate(bundle_dir, annotations_path):
    """Derive zones, avoidance hulls, and the search space from spray strokes."""
    bundle_path = Path(bundle_dir)
    cloud_file = bundle_path / bd.CLOUD_FILE
    if not cloud_file.exists():
        _fail(f"bundle has no {bd.CLOUD_FILE}; run `basecamp scan` first")
    cloud = load_cloud(cloud_file)

    try:
        if annotations_path:
            obj = bd.read_json(Path(annotations_path))
            strokes = [SprayStroke.from_json(s) for s in obj.get("strokes", [])]
            space = None
            if "searchspace" in obj:
                from .annotate import SearchSpace
                space = SearchSpace.from_json(obj["searchspace"])
        else:
            strokes, _, _ = bd.load_annotations(bundle_path)
            space = None
        if space is None:
            space = bd.load_searchspace(bundle_path)
    except bd.BundleError as exc:
        _fail(str(exc))
    if not strokes:
        _fail("no spray strokes to annotate")

    zones, regions = [], []
    try:
        for stroke in strokes:
            indices = spray_select(cloud, stroke)
            if stroke.label is SprayLabel.INTERACT:
                if stroke.approach_dir is None:
                    _fail(f"interact stroke '{stroke.zone_id}' lacks approach_dir")
                zones.append(make_interaction_zone(
                    cloud, indices, stroke.approach_dir, stroke.zone_id,
                    frame_orientation=space.orientation))
            else:
                regions.append(make_avoidance_region(cloud, indices,
                                                     stroke.zone_id))
    except (InsufficientSprayError, DegeneracyError) as exc:
        _fail(str(exc))

    bd.save_annotations(bundle_path, strokes, zones, regions)
    bd.save_searchspace(bundle_path, space)
    bd.update_meta(bundle_path, "annotate", {
        "zones": [z.zone_id for z in zones],
        "regions": [r.region_id for r in regions],
    })
    click.echo(f"derived {len(zones)} zones and {len(regions)} avoidance regions")


def _load_workcell(bundle_path: Path) -> Workcell:
    _, zones, regions = bd.load_annotations(bundle_path)
    space = bd.load_searchspace(bundle_path)
    if not zones:
        raise bd.BundleError("bundle has no derived zones; run `basecamp annotate`")
    return Workcell(zones, regions, space, cloud_ref=bd.CLOUD_FILE)


@main.command("optimize")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--robot", "robot_ref", default="generic6r", show_default=True,
              help="Built-in model name or robot.json path.")
@click.option("--seed-targets", type=int, default=0, show_default=True)
@click.option("--seed-opt", type=int, default=0, show_default=True)
@click.option("--threshold", type=float, default=90.0, show_default=True)
@click.option("--per-zone", type=int, default=100, show_default=True)
@click.option("--max-evals", type=int, default=None,
              help="Cap on objective evaluations (default: library default).")
def cmd_optimize(bundle_dir, robot_ref, seed_targets, seed_opt, threshold,
                 per_zone, max_evals):
    """Optimize the base placement; exit 0 when the reach threshold is met,
    3 when a best placement exists but is below threshold."""
    bundle_path = Path(bundle_dir)
    try:
        workcell = _load_workcell(bundle_path)
        robot = load_robot(robot_ref)
    except (bd.BundleError, FileNotFoundError, ValueError) as exc:
        _fail(str(exc))

    mlsl = MlslConfig() if max_evals is None else MlslConfig(max_evals=max_evals)
    cfg = OptimizeConfig(per_zone=per_zone, threshold=threshold,
                         seed_targets=seed_targets, seed_opt=seed_opt, mlsl=mlsl)
    result = optimize_base(workcell, robot, cfg)

    targets = sample_targets(workcell, cfg.per_zone, cfg.seed_targets)
    payload = bd.result_to_json(result, cfg, robot.name, workcell.space,
                                targets.targets)
    bd.save_result(bundle_path, payload)
    save_robot(robot, bundle_path / bd.ROBOT_FILE)
    bd.update_meta(bundle_path, "optimize", {
        "robot": robot.name,
        "seeds": result.seeds,
        "evaluations": result.evaluations,
    })
    best = result.best
    click.echo(f"best placement: x={best.candidate.x:+.4f} m, "
               f"y={best.candidate.y:+.4f} m (plane frame)")
    click.echo(f"reached {best.n_reached}/{len(targets.targets)} targets "
               f"({result.reach_percentage:.1f}%), miss sum "
               f"{best.miss_sum:.4f} m, objective {best.objective:.4f}")
    if not result.meets_threshold:
        click.echo(f"below the {threshold:.0f}% threshold: adjust or grow the "
                   f"search space and re-run", err=True)
        sys.exit(3)
    click.echo("meets threshold")


@main.command("report")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--pitch", type=float, default=report_mod.DEFAULT_PITCH,
              show_default=True, help="Heatmap grid pitch [m].")
def cmd_report(bundle_dir, pitch):
    """Print the base pose and write reach_heatmap.csv + targets.csv."""
    bundle_path = Path(bundle_dir)
    try:
        if pitch <= 0:
            raise ValueError("heatmap pitch must be positive")
        payload = bd.load_result(bundle_path)
        workcell = _load_workcell(bundle_path)
        robot = load_robot(bundle_path / bd.ROBOT_FILE)
    except (bd.BundleError, FileNotFoundError, ValueError) as exc:
        _fail(str(exc))

    cfg = bd.optimize_config_from_json(payload["config"])
    base = payload["base_pose"]
    click.echo(f"base (workcell frame): x={base['plane_local'][0]:+.4f} m, "
               f"y={base['plane_local'][1]:+.4f} m")
    world = base["world"]
    click.echo(f"base (world frame): position {world['position']}, "
               f"quaternion {world['quaternion']}")

    from .optimizer import EvalConfig
    targets = sample_targets(workcell, cfg.per_zone, cfg.seed_targets)
    eval_cfg = EvalConfig(seed=cfg.seed_opt, reach=cfg.reach)
    xs, ys, obj, reached, miss = report_mod.compute_heatmap(
        workcell, targets, robot, eval_cfg, pitch)
    heatmap_path = bundle_path / report_mod.HEATMAP_FILE
    slack = report_mod.write_heatmap_csv(heatmap_path, xs, ys, obj, reached,
                                         miss, pitch,
                                         payload["best"]["objective"])
    report_mod.write_target_table(bundle_path / report_mod.TARGETS_FILE,
                                  payload["best"]["outcomes"])
    click.echo(f"heatmap: {obj.size} cells, max {obj.max():.4f}, "
               f"grid slack {slack:.4f} -> {heatmap_path}")
    click.echo(f"target table -> {bundle_path / report_mod.TARGETS_FILE}")


@main.command("demo")
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_demo(out_dir):
    """Write the synthetic demo workcell: scene, trajectory, strokes, robots."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _fail(f"cannot create {out}: {exc}")
    bd.save_scene(demo_mod.build_scene(), out / "scene.json")
    bd.save_trajectory(demo_mod.build_trajectory(), out / "trajectory.json")
    bd.write_json(out / "scan_config.json",
                  {"v": 1, **demo_mod.DEMO_SCAN_CONFIG.to_json()})
    strokes = demo_mod.build_strokes()
    space = demo_mod.build_searchspace()
    bd.write_json(out / "strokes.json", {
        "v": 1,
        "strokes": [s.to_json() for s in strokes],
        "searchspace": space.to_json(),
    })
    for name in ("generic6r", "planar2"):
        save_robot(load_robot(name), out / f"{name}.json")
    click.echo(f"demo workcell written to {out}")
    click.echo("next: basecamp scan --scene scene.json --trajectory "
               "trajectory.json --config scan_config.json --out <bundle>")


@main.command("serve")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", "data_dir", required=True, type=click.Path())
@click.option("--studio-dir", "studio_dir", type=click.Path(exists=True),
              help="Serve the built browser studio from this directory at /studio.")
def cmd_serve(port, host, data_dir, studio_dir):
    """Run the HTTP session service for the browser studio."""
    import uvicorn

    from .service.app import create_app

    app = create_app(Path(data_dir),
                     Path(studio_dir) if studio_dir else None)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
