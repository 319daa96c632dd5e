"""Desk-scale robot base-placement workbench.

Scan a workcell into a point cloud, spray-annotate task zones, obstacles,
and the base search plane, then optimize the base position for reachability
with collision-checked inverse kinematics.
"""

__version__ = "0.1.0"

from .annotate import (
    AvoidanceRegion,
    InteractionZone,
    SearchSpace,
    SprayStroke,
    make_avoidance_region,
    make_interaction_zone,
    spray_select,
    to_workcell_frame,
)
from .cloud import (
    CameraTrajectory,
    CropBox,
    MeshScene,
    PointCloud,
    ScanConfig,
    crop_to_box,
    filter_outliers,
    load_cloud,
    save_cloud,
)
from .collide import Capsule, gjk_intersect, point_in_hull, robot_in_collision, support
from .geometry import Transform
from .hull import ConvexHull, quickhull
from .kinematics import (
    IkConfig,
    ReachConfig,
    RobotModel,
    TaskTarget,
    forward_kinematics,
    jacobian,
    load_robot,
    reach_check,
    solve_ik,
)
from .optimizer import (
    OptimizationResult,
    OptimizeConfig,
    Workcell,
    adjust_search_space,
    evaluate_placement,
    mlsl_optimize,
    nelder_mead,
    optimize_base,
    sample_targets,
)
from .scan import simulate_scan
