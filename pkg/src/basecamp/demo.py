"""Synthetic demo workcell: a tabletop picking area and a boxy machine with a
door opening and an interior chuck plate, plus a scan trajectory and spray
annotations — everything needed to run the full pipeline end to end."""

from __future__ import annotations

import numpy as np

from .annotate import SearchSpace, SprayStroke
from .cloud import CameraTrajectory, MeshScene, ScanConfig
from .geometry import Transform, quat_from_matrix

# the scan/world frame has z up and its origin on the tabletop surface.
# The pick patch sits diagonally off the machine axis so that no admissible
# base sees it at exactly the q1 wrap boundary, and the door opening is wider
# than the corridor the wrist naturally crosses when swinging toward the chuck.
TABLE_X = (-0.75, 0.75)
TABLE_Y = (-0.55, 0.55)
PICK_CENTER = np.array([-0.35, -0.28, 0.0])
PICK_SIZE = np.array([0.24, 0.18])  # x, y extent of the sprayed patch

MACHINE_X = (0.32, 0.75)
MACHINE_Y = (-0.34, 0.34)
MACHINE_Z = (0.0, 0.56)
DOOR_Y = (-0.26, 0.26)  # opening in the front face (x = MACHINE_X[0])
DOOR_Z = (0.0, 0.46)
CHUCK_CENTER = np.array([0.44, 0.0, 0.20])
CHUCK_SIZE = np.array([0.10, 0.10])  # y, z extent of the chuck plate

SEARCH_CENTER = np.array([-0.10, 0.04, 0.0])
SEARCH_WX = 0.18
SEARCH_WY = 0.14

# fov chosen so the full ray grid (43 x 43) fits under the per-frame cap
DEMO_SCAN_CONFIG = ScanConfig(grid_size=0.02, fov=46.0, max_range=4.0,
                              noise_sigma=0.0015, points_per_frame_cap=2000)


def _quad(a, b, c, d) -> list:
    """Two triangles covering the quad a-b-c-d (counter-clockwise)."""
    return [(a, b, c), (a, c, d)]


def _rect_x(x, y0, y1, z0, z1) -> list:
    """Quad in a plane of constant x."""
    return _quad([x, y0, z0], [x, y1, z0], [x, y1, z1], [x, y0, z1])


def _rect_z(z, x0, x1, y0, y1) -> list:
    """Quad in a plane of constant z."""
    return _quad([x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z])


def build_scene() -> MeshScene:
    tris = []
    # tabletop
    tris += _rect_z(0.0, *TABLE_X, *TABLE_Y)
    x0, x1 = MACHINE_X
    y0, y1 = MACHINE_Y
    z0, z1 = MACHINE_Z
    # machine front face: frame around the door opening (no sill, the
    # opening runs down to the tabletop)
    tris += _rect_x(x0, y0, DOOR_Y[0], z0, z1)          # left pillar
    tris += _rect_x(x0, DOOR_Y[1], y1, z0, z1)          # right pillar
    tris += _rect_x(x0, DOOR_Y[0], DOOR_Y[1], DOOR_Z[1], z1)  # lintel
    # machine shell
    tris += _rect_x(x1, y0, y1, z0, z1)                 # back
    tris += _quad([x0, y0, z0], [x1, y0, z0], [x1, y0, z1], [x0, y0, z1])  # left
    tris += _quad([x0, y1, z0], [x1, y1, z0], [x1, y1, z1], [x0, y1, z1])  # right
    tris += _rect_z(z1, x0, x1, y0, y1)                 # roof
    # chuck plate inside, facing the door (normal -x)
    cy, cz = CHUCK_CENTER[1], CHUCK_CENTER[2]
    hy, hz = CHUCK_SIZE / 2.0
    tris += _rect_x(CHUCK_CENTER[0], cy - hy, cy + hy, cz - hz, cz + hz)
    return MeshScene(np.array(tris, dtype=float))


def look_at(position, target, up=(0.0, 0.0, 1.0)) -> Transform:
    """Camera pose at `position` with +z (view direction) toward `target`.

    Camera frame is right-handed with +x right and +y image-down."""
    position = np.asarray(position, dtype=float)
    f = np.asarray(target, dtype=float) - position
    f = f / np.linalg.norm(f)
    r = np.cross(f, np.asarray(up, dtype=float))
    norm = np.linalg.norm(r)
    if norm < 1e-9:  # looking straight along up: pick a fallback right vector
        r = np.array([1.0, 0.0, 0.0])
    else:
        r = r / norm
    d = np.cross(f, r)  # image-down completes the right-handed frame
    R = np.column_stack([r, d, f])
    return Transform(position, quat_from_matrix(R))


def build_trajectory() -> CameraTrajectory:
    poses = []
    # sweep across the front of the cell, looking at the table center
    for y in np.linspace(-0.7, 0.7, 15):
        poses.append(look_at([-1.5, y, 0.7], [0.0, 0.0, 0.1]))
    # look down at the picking area
    for x in np.linspace(-0.55, -0.15, 8):
        poses.append(look_at([x, PICK_CENTER[1], 0.9], PICK_CENTER))
    # approach the door and look inside at the chuck
    for x in np.linspace(-0.6, -0.05, 10):
        poses.append(look_at([x, 0.0, CHUCK_CENTER[2]], CHUCK_CENTER))
    # angled views of the door frame
    for y in (-0.3, -0.15, 0.0, 0.15, 0.3):
        poses.append(look_at([-0.4, y, 0.35], [MACHINE_X[0], y / 2.0, 0.25]))
    return CameraTrajectory(poses)


def _grid_samples(center, half_x, half_y, z, direction, nx=4, ny=3):
    xs = np.linspace(center[0] - half_x, center[0] + half_x, nx)
    ys = np.linspace(center[1] - half_y, center[1] + half_y, ny)
    origins = [[x, y, z] for x in xs for y in ys]
    dirs = [direction] * len(origins)
    return np.array(origins, dtype=float), np.array(dirs, dtype=float)


def build_strokes() -> list[SprayStroke]:
    strokes = []
    down = [0.0, 0.0, -1.0]
    into = [1.0, 0.0, 0.0]

    # green: tabletop picking area, sprayed from above
    origins, dirs = _grid_samples(PICK_CENTER, PICK_SIZE[0] / 2 - 0.03,
                                  PICK_SIZE[1] / 2 - 0.03, 0.5, down, nx=5, ny=4)
    strokes.append(SprayStroke("interact", "pick", 0.05, origins, dirs,
                               approach_dir=[0.0, 0.0, 1.0]))

    # green: chuck plate, sprayed through the open door from in front
    ys = np.linspace(-0.03, 0.03, 3)
    zs = np.linspace(CHUCK_CENTER[2] - 0.03, CHUCK_CENTER[2] + 0.03, 3)
    origins = np.array([[-0.05, y, z] for y in ys for z in zs])
    dirs = np.tile(into, (len(origins), 1))
    strokes.append(SprayStroke("interact", "chuck", 0.035, origins, dirs,
                               approach_dir=[-1.0, 0.0, 0.0]))

    # red: door frame parts, one region each so the opening stays open
    x_front = MACHINE_X[0]
    jamb_mid = (abs(DOOR_Y[0]) + abs(MACHINE_Y[0])) / 2.0
    for region, y in (("door_left", -jamb_mid), ("door_right", jamb_mid)):
        zs = np.linspace(0.06, DOOR_Z[1] - 0.02, 5)
        origins = np.array([[x_front - 0.35, y, z] for z in zs])
        dirs = np.tile(into, (len(origins), 1))
        strokes.append(SprayStroke("avoid", region, 0.035, origins, dirs))
    # lintel above the opening
    ys = np.linspace(DOOR_Y[0] + 0.04, DOOR_Y[1] - 0.04, 5)
    lintel_z = (DOOR_Z[1] + MACHINE_Z[1]) / 2.0
    origins = np.array([[x_front - 0.35, y, lintel_z] for y in ys])
    dirs = np.tile(into, (len(origins), 1))
    strokes.append(SprayStroke("avoid", "door_top", 0.035, origins, dirs))
    return strokes


def build_searchspace() -> SearchSpace:
    return SearchSpace(SEARCH_CENTER.copy(), half_extent_x=SEARCH_WX,
                       half_extent_y=SEARCH_WY)
