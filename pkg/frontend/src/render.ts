/** Scene-to-draw-list projection. The draw list carries both world and
 * screen coordinates so tests can assert that what gets rendered is exactly
 * what the service returned; the canvas layer just strokes it. */

import type { OrbitCamera, Viewport } from "./camera.js";
import type { StudioState } from "./controller.js";
import { quatRotate, type Vec3 } from "./vecmath.js";

export const MAX_RENDERED_POINTS = 500_000;

export interface Marker {
  world: Vec3;
  screen: { x: number; y: number } | null;
}

export interface ZoneMarkers {
  zoneId: string;
  corners: Marker[]; // always 8, straight from the service response
  approachTip: Marker; // center + approach_dir, the task-frame arrow
}

export interface HullMarkers {
  regionId: string;
  vertexCount: number;
  vertices: Marker[];
}

export interface TargetDot {
  world: Vec3;
  screen: { x: number; y: number } | null;
  reached: boolean;
}

export interface DrawList {
  cloud: { screen: { x: number; y: number }[]; total: number; drawn: number };
  zones: ZoneMarkers[];
  hulls: HullMarkers[];
  planeOutline: Marker[] | null; // 4 rectangle corners
  baseMarker: Marker | null;
  targets: TargetDot[];
  banner: string;
  progress: number;
  warning: string | null;
  error: string | null;
}

export function buildDrawList(
  state: StudioState,
  camera: OrbitCamera,
  viewport: Viewport,
): DrawList {
  const mark = (world: Vec3): Marker => ({
    world,
    screen: toScreen(camera, viewport, world),
  });

  const cloudScreen: { x: number; y: number }[] = [];
  let drawn = 0;
  if (state.cloudPoints) {
    const total = state.cloudPoints.length / 3;
    const stride = Math.max(1, Math.ceil(total / MAX_RENDERED_POINTS));
    for (let i = 0; i < total; i += stride) {
      const p: Vec3 = [
        state.cloudPoints[i * 3],
        state.cloudPoints[i * 3 + 1],
        state.cloudPoints[i * 3 + 2],
      ];
      const s = toScreen(camera, viewport, p);
      if (s) cloudScreen.push(s);
      drawn++;
    }
  }

  const zones: ZoneMarkers[] = (state.derived?.zones ?? []).map((zone) => ({
    zoneId: zone.zone_id,
    corners: zone.corners.map((c) => mark(c as Vec3)),
    approachTip: mark([
      zone.center[0] + 0.1 * zone.approach_dir[0],
      zone.center[1] + 0.1 * zone.approach_dir[1],
      zone.center[2] + 0.1 * zone.approach_dir[2],
    ]),
  }));

  const hulls: HullMarkers[] = (state.derived?.regions ?? []).map((region) => ({
    regionId: region.region_id,
    vertexCount: region.hull.vertices.length,
    vertices: region.hull.vertices.map((v) => mark(v as Vec3)),
  }));

  let planeOutline: Marker[] | null = null;
  if (state.searchspace) {
    const s = state.searchspace;
    planeOutline = [
      [-s.half_extent_x, -s.half_extent_y],
      [s.half_extent_x, -s.half_extent_y],
      [s.half_extent_x, s.half_extent_y],
      [-s.half_extent_x, s.half_extent_y],
    ].map(([lx, ly]) => {
      const world = quatRotate(s.orientation, [lx, ly, 0]);
      return mark([
        s.center[0] + world[0],
        s.center[1] + world[1],
        s.center[2] + world[2],
      ]);
    });
  }

  let baseMarker: Marker | null = null;
  const targets: TargetDot[] = [];
  if (state.result) {
    baseMarker = mark(state.result.base_pose.world.position as Vec3);
    for (const outcome of state.result.best.outcomes) {
      targets.push({
        world: outcome.position,
        screen: toScreen(camera, viewport, outcome.position),
        reached: outcome.reached,
      });
    }
  }

  return {
    cloud: {
      screen: cloudScreen,
      total: state.cloudPoints ? state.cloudPoints.length / 3 : 0,
      drawn,
    },
    zones,
    hulls,
    planeOutline,
    baseMarker,
    targets,
    banner: state.banner,
    progress: state.progress,
    warning: state.warning,
    error: state.lastError,
  };
}

function toScreen(camera: OrbitCamera, viewport: Viewport, p: Vec3) {
  const projected = camera.project(p, viewport);
  return projected ? { x: projected.x, y: projected.y } : null;
}

/** Paint a draw list onto a 2D canvas. Kept trivially thin: no geometry. */
export function paint(ctx: CanvasRenderingContext2D, list: DrawList,
                      viewport: Viewport): void {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  ctx.fillStyle = "#1b1e23";
  ctx.fillRect(0, 0, viewport.width, viewport.height);

  ctx.fillStyle = "#9aa7b5";
  for (const s of list.cloud.screen) {
    ctx.fillRect(s.x, s.y, 1.5, 1.5);
  }
  if (list.planeOutline) {
    ctx.strokeStyle = "#d7b940";
    ctx.beginPath();
    list.planeOutline.forEach((m, i) => {
      if (!m.screen) return;
      if (i === 0) ctx.moveTo(m.screen.x, m.screen.y);
      else ctx.lineTo(m.screen.x, m.screen.y);
    });
    ctx.closePath();
    ctx.stroke();
  }
  for (const hull of list.hulls) {
    ctx.fillStyle = "#e05555";
    for (const v of hull.vertices) {
      if (v.screen) ctx.fillRect(v.screen.x - 1, v.screen.y - 1, 3, 3);
    }
  }
  for (const zone of list.zones) {
    ctx.fillStyle = "#5ad06b";
    for (const c of zone.corners) {
      if (c.screen) {
        ctx.beginPath();
        ctx.arc(c.screen.x, c.screen.y, 3, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
  }
  for (const t of list.targets) {
    if (!t.screen) continue;
    ctx.fillStyle = t.reached ? "#5ad06b" : "#e05555";
    ctx.fillRect(t.screen.x - 1, t.screen.y - 1, 3, 3);
  }
  if (list.baseMarker?.screen) {
    const s = list.baseMarker.screen;
    ctx.strokeStyle = "#58c4f0";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(s.x, s.y, 7, 0, 2 * Math.PI);
    ctx.moveTo(s.x - 10, s.y);
    ctx.lineTo(s.x + 10, s.y);
    ctx.moveTo(s.x, s.y - 10);
    ctx.lineTo(s.x, s.y + 10);
    ctx.stroke();
  }
}
