/** Studio session controller: owns the local state, talks to the service,
 * and enforces the UI rules (drafts are never sent until committed, derived
 * geometry always mirrors the last service response, the UI goes read-only
 * while a run is active, progress never decreases). DOM-free by design so
 * the scripted tests drive it exactly like the browser shell does. */

import { ApiError, StudioApi } from "./api.js";
import type { OrbitCamera, Viewport } from "./camera.js";
import { parsePly } from "./ply.js";
import type {
  DerivedGeometry,
  OptimizationResult,
  OptimizeRequest,
  PlaneAdjustment,
  SearchSpaceSpec,
  SessionStatus,
  Stroke,
  StrokeSample,
} from "./types.js";
import { normalize, quatMultiply, quatRotate, sub, type Vec3 } from "./vecmath.js";

export const MIN_PLANE_EXTENT = 0.05;

export interface DraftStroke {
  label: "interact" | "avoid";
  zone_id: string;
  radius: number;
  samples: StrokeSample[];
}

export type Banner = "none" | "success" | "adjust" | "failed";

export interface StudioState {
  sessionId: string | null;
  cloudPoints: Float64Array | null;
  pointCount: number;
  strokes: Stroke[];
  draft: DraftStroke | null;
  searchspace: SearchSpaceSpec | null;
  derived: DerivedGeometry | null;
  status: SessionStatus | null;
  progress: number;
  result: OptimizationResult | null;
  lastError: string | null;
  warning: string | null;
  banner: Banner;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class StudioController {
  readonly state: StudioState = {
    sessionId: null,
    cloudPoints: null,
    pointCount: 0,
    strokes: [],
    draft: null,
    searchspace: null,
    derived: null,
    status: null,
    progress: 0,
    result: null,
    lastError: null,
    warning: null,
    banner: "none",
  };

  constructor(
    readonly api: StudioApi,
    readonly camera: OrbitCamera,
    public viewport: Viewport,
    readonly pollIntervalMs = 500,
  ) {}

  get running(): boolean {
    return this.state.status === "optimizing";
  }

  private assertMutable(): void {
    if (this.running) {
      throw new Error("a run is active; the studio is read-only until it ends");
    }
  }

  async newSession(): Promise<string> {
    const info = await this.api.createSession();
    this.state.sessionId = info.session_id;
    this.state.status = info.status;
    this.state.progress = 0;
    this.state.result = null;
    this.state.banner = "none";
    return info.session_id;
  }

  private get sessionId(): string {
    if (!this.state.sessionId) throw new Error("no session; call newSession()");
    return this.state.sessionId;
  }

  async loadCloud(plyText: string): Promise<void> {
    this.assertMutable();
    const parsed = parsePly(plyText); // local display copy
    const summary = await this.api.uploadCloud(this.sessionId, plyText);
    this.state.cloudPoints = parsed.points;
    this.state.pointCount = summary.point_count;
    this.state.derived = null; // old zones referenced the old cloud
    this.state.result = null;
  }

  // -- spray tool -----------------------------------------------------------

  beginStroke(label: "interact" | "avoid", zoneId: string, radius: number): void {
    this.assertMutable();
    this.state.draft = { label, zone_id: zoneId, radius, samples: [] };
  }

  /** One drag sample: the pick ray through the pointer plays the part of the
   * physical device ray. Nothing is sent until commitStroke(). */
  spray(px: number, py: number): void {
    const draft = this.state.draft;
    if (!draft) return;
    const ray = this.camera.pickRay(px, py, this.viewport);
    draft.samples.push({
      origin: [...ray.origin] as [number, number, number],
      direction: [...ray.direction] as [number, number, number],
    });
  }

  discardDraft(): void {
    this.state.draft = null;
  }

  /** Fold the draft into the committed strokes and re-PUT the annotations.
   * An empty drag sends nothing. Interact strokes default their approach
   * direction to "toward the camera" (mean spray direction, negated). */
  async commitStroke(): Promise<DerivedGeometry | null> {
    this.assertMutable();
    const draft = this.state.draft;
    if (!draft || draft.samples.length === 0) {
      this.state.draft = null;
      return null;
    }
    const stroke: Stroke = {
      label: draft.label,
      zone_id: draft.zone_id,
      radius: draft.radius,
      samples: draft.samples,
    };
    if (draft.label === "interact") {
      const mean: Vec3 = [0, 0, 0];
      for (const s of draft.samples) {
        mean[0] -= s.direction[0];
        mean[1] -= s.direction[1];
        mean[2] -= s.direction[2];
      }
      stroke.approach_dir = normalize(mean) as [number, number, number];
    }
    this.state.strokes.push(stroke);
    this.state.draft = null;
    return this.putAnnotations();
  }

  private async putAnnotations(): Promise<DerivedGeometry> {
    try {
      const derived = await this.api.putAnnotations(
        this.sessionId,
        this.state.strokes,
        this.state.searchspace,
      );
      this.state.derived = derived;
      this.state.searchspace = derived.searchspace;
      this.state.lastError = null;
      return derived;
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.lastError = err.detail; // surfaced verbatim
      }
      throw err;
    }
  }

  /** Point the task frame's approach axis from the zone center toward the
   * current camera position, then push the update through the service. */
  async setApproachFromCamera(zoneId: string): Promise<DerivedGeometry> {
    this.assertMutable();
    const zone = this.state.derived?.zones.find((z) => z.zone_id === zoneId);
    if (!zone) throw new Error(`unknown zone '${zoneId}'`);
    const toCamera = sub(this.camera.position, zone.center as Vec3);
    let dir: Vec3;
    try {
      dir = normalize(toCamera);
    } catch {
      throw new Error("camera sits at the zone center; move it first");
    }
    const stroke = this.state.strokes.find(
      (s) => s.label === "interact" && s.zone_id === zoneId,
    );
    if (!stroke) throw new Error(`no committed stroke for zone '${zoneId}'`);
    stroke.approach_dir = dir as [number, number, number];
    return this.putAnnotations();
  }

  // -- search-space plane tool ----------------------------------------------

  /** Place the plane locally; it rides along with the next commit. Extents
   * are clamped to the minimum with a visible warning. */
  placePlane(center: Vec3, halfX: number, halfY: number,
             orientation: [number, number, number, number] = [0, 0, 0, 1]): void {
    this.assertMutable();
    const { x, y, warned } = this.clampExtents(halfX, halfY);
    this.state.searchspace = {
      center: [...center] as [number, number, number],
      orientation,
      half_extent_x: x,
      half_extent_y: y,
    };
    this.state.warning = warned
      ? `plane extent clamped to the ${MIN_PLANE_EXTENT} m minimum`
      : null;
  }

  private clampExtents(x: number, y: number) {
    const cx = Math.max(MIN_PLANE_EXTENT, x);
    const cy = Math.max(MIN_PLANE_EXTENT, y);
    return { x: cx, y: cy, warned: cx !== x || cy !== y };
  }

  /** Gesture edits. Before the first commit they apply locally; afterwards
   * they PATCH the service and display the echoed plane. */
  async adjustPlane(adjustment: PlaneAdjustment): Promise<SearchSpaceSpec> {
    this.assertMutable();
    const space = this.state.searchspace;
    if (!space) throw new Error("place the search plane first");
    if (adjustment.op === "scale") {
      const sx = Math.max(adjustment.fx, MIN_PLANE_EXTENT / space.half_extent_x);
      const sy = Math.max(adjustment.fy, MIN_PLANE_EXTENT / space.half_extent_y);
      this.state.warning = (sx !== adjustment.fx || sy !== adjustment.fy)
        ? `plane extent clamped to the ${MIN_PLANE_EXTENT} m minimum`
        : null;
      adjustment = { op: "scale", fx: sx, fy: sy };
    }
    if (this.state.derived) {
      const echoed = await this.api.patchSearchSpace(this.sessionId, adjustment);
      this.state.searchspace = echoed;
      if (this.state.status === "below_threshold") this.state.status = "annotating";
      return echoed;
    }
    this.state.searchspace = applyAdjustmentLocally(space, adjustment);
    return this.state.searchspace;
  }

  // -- run and review ---------------------------------------------------------

  /** Start a run and poll it to completion; returns the final result for
   * done/below-threshold runs. Progress is monotone even if a stale poll
   * response arrives late. */
  async runAndReview(request: OptimizeRequest = {}): Promise<OptimizationResult | null> {
    this.assertMutable();
    if (!this.state.derived) {
      throw new Error("commit annotations before running");
    }
    await this.api.startOptimize(this.sessionId, request);
    this.state.status = "optimizing";
    this.state.progress = 0;
    this.state.banner = "none";
    try {
      for (;;) {
        const info = await this.api.getSession(this.sessionId);
        this.state.progress = Math.max(this.state.progress, info.progress);
        if (info.status !== "optimizing") {
          this.state.status = info.status;
          if (info.status === "failed") {
            this.state.banner = "failed";
            this.state.lastError = info.failure ?? "optimization failed";
            return null;
          }
          break;
        }
        await sleep(this.pollIntervalMs);
      }
      const result = await this.api.getResult(this.sessionId);
      this.state.result = result;
      this.state.progress = 1;
      this.state.banner = result.meets_threshold ? "success" : "adjust";
      return result;
    } catch (err) {
      this.state.status = "failed";
      this.state.banner = "failed";
      if (err instanceof ApiError) this.state.lastError = err.detail;
      throw err;
    }
  }
}

export function applyAdjustmentLocally(
  space: SearchSpaceSpec,
  adjustment: PlaneAdjustment,
): SearchSpaceSpec {
  if (adjustment.op === "translate") {
    const offsetWorld = quatRotate(space.orientation, adjustment.offset);
    return {
      ...space,
      center: [
        space.center[0] + offsetWorld[0],
        space.center[1] + offsetWorld[1],
        space.center[2] + offsetWorld[2],
      ],
    };
  }
  if (adjustment.op === "scale") {
    return {
      ...space,
      half_extent_x: space.half_extent_x * adjustment.fx,
      half_extent_y: space.half_extent_y * adjustment.fy,
    };
  }
  return {
    ...space,
    orientation: quatMultiply(adjustment.quaternion, space.orientation),
  };
}
