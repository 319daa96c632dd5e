/** Wire types for the /v1 session service. */

export type SessionStatus =
  | "annotating"
  | "optimizing"
  | "done"
  | "below_threshold"
  | "failed";

export interface SessionInfo {
  session_id: string;
  status: SessionStatus;
  progress: number;
  created_at: string;
  updated_at: string;
  point_count: number | null;
  has_annotations: boolean;
  has_result: boolean;
  failure: string | null;
}

export interface CloudSummary {
  point_count: number;
  bounds_min: [number, number, number];
  bounds_max: [number, number, number];
}

export interface StrokeSample {
  origin: [number, number, number];
  direction: [number, number, number];
}

export interface Stroke {
  label: "interact" | "avoid";
  zone_id: string;
  radius: number;
  samples: StrokeSample[];
  approach_dir?: [number, number, number];
}

export interface SearchSpaceSpec {
  center: [number, number, number];
  orientation: [number, number, number, number]; // quaternion x, y, z, w
  half_extent_x: number;
  half_extent_y: number;
}

export interface Zone {
  zone_id: string;
  center: number[];
  half_extents: number[];
  orientation: number[];
  corners: number[][];
  approach_dir: number[];
}

export interface Region {
  region_id: string;
  hull: { vertices: number[][]; triangles: number[][] };
}

export interface DerivedGeometry {
  zones: Zone[];
  regions: Region[];
  searchspace: SearchSpaceSpec;
}

export interface OptimizeRequest {
  robot?: string;
  seed_targets?: number;
  seed_opt?: number;
  threshold?: number;
  per_zone?: number;
  max_evals?: number;
}

export interface TargetOutcome {
  target_index: number;
  zone_id: string;
  position: [number, number, number];
  reached: boolean;
  position_error: number;
  failure_reason: string | null;
}

export interface OptimizationResult {
  v: number;
  robot: string;
  best: {
    candidate: { x: number; y: number };
    n_reached: number;
    miss_sum: number;
    objective: number;
    outcomes: TargetOutcome[];
  };
  base_pose: {
    plane_local: [number, number, number];
    world: { position: number[]; quaternion: number[] };
  };
  reach_percentage: number;
  meets_threshold: boolean;
}

export type PlaneAdjustment =
  | { op: "translate"; offset: [number, number, number] }
  | { op: "scale"; fx: number; fy: number }
  | { op: "rotate"; quaternion: [number, number, number, number] };
