/** Orbit camera over the workcell plus screen-to-world pick rays. The pick
 * ray plays the role of the handheld device's physical pointing ray: spray
 * samples are (camera origin, ray direction) pairs. */

import { add, cross, normalize, scale, sub, type Vec3, dot } from "./vecmath.js";

export interface Viewport {
  width: number;
  height: number;
}

export interface PickRay {
  origin: Vec3;
  direction: Vec3;
}

export class OrbitCamera {
  target: Vec3 = [0, 0, 0];
  distance = 2.0;
  /** azimuth around world z, radians */
  azimuth = -Math.PI / 2;
  /** elevation above the horizon, radians */
  elevation = 0.6;
  /** full vertical field of view, radians */
  fov = (55 * Math.PI) / 180;

  get position(): Vec3 {
    const ce = Math.cos(this.elevation);
    return add(this.target, [
      this.distance * ce * Math.cos(this.azimuth),
      this.distance * ce * Math.sin(this.azimuth),
      this.distance * Math.sin(this.elevation),
    ]);
  }

  /** forward/right/up basis; up stays roughly world +z */
  basis(): { forward: Vec3; right: Vec3; up: Vec3 } {
    const forward = normalize(sub(this.target, this.position));
    const right = normalize(cross(forward, [0, 0, 1]));
    const up = cross(right, forward);
    return { forward, right, up };
  }

  orbit(dAzimuth: number, dElevation: number): void {
    this.azimuth += dAzimuth;
    const cap = Math.PI / 2 - 0.01;
    this.elevation = Math.min(cap, Math.max(-cap, this.elevation + dElevation));
  }

  zoom(factor: number): void {
    this.distance = Math.min(50, Math.max(0.05, this.distance * factor));
  }

  /** Ray through a screen pixel (origin at the camera position). */
  pickRay(px: number, py: number, viewport: Viewport): PickRay {
    const aspect = viewport.width / viewport.height;
    const tanHalf = Math.tan(this.fov / 2);
    const ndcX = (2 * px) / viewport.width - 1;
    const ndcY = 1 - (2 * py) / viewport.height;
    const { forward, right, up } = this.basis();
    const direction = normalize(
      add(
        forward,
        add(scale(right, ndcX * tanHalf * aspect), scale(up, ndcY * tanHalf)),
      ),
    );
    return { origin: this.position, direction };
  }

  /** Screen position of a world point, or null when behind the camera. */
  project(p: Vec3, viewport: Viewport): { x: number; y: number; depth: number } | null {
    const { forward, right, up } = this.basis();
    const rel = sub(p, this.position);
    const depth = dot(rel, forward);
    if (depth <= 1e-6) return null;
    const tanHalf = Math.tan(this.fov / 2);
    const aspect = viewport.width / viewport.height;
    const x = dot(rel, right) / (depth * tanHalf * aspect);
    const y = dot(rel, up) / (depth * tanHalf);
    return {
      x: ((x + 1) / 2) * viewport.width,
      y: ((1 - y) / 2) * viewport.height,
      depth,
    };
  }
}
