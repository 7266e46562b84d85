/**
 * three.js scene wiring: camera-relative terrain rendering, picking rays,
 * marker pins, measurement overlays, and clip-box driven clipping planes.
 *
 * World coordinates are ECEF doubles; everything handed to the renderer is
 * rebased against the tile origin (from the X-Tile-Origin header) so vertex
 * magnitudes stay inside float32-safe range.
 */

import * as THREE from "three";

import type { MarkerRecord, RayRequest } from "./api.js";
import type { ClipVolume } from "./clipbox.js";
import { clipPlanes } from "./clipbox.js";
import { Vec3, geodeticToEcef, sub } from "./geodesy.js";
import { markerLabel } from "./format.js";

/**
 * Rendered vertex coordinates (meters) must stay below this after rebasing.
 * float32 spacing at this magnitude is already ~0.5 m, and any unrebased
 * geocentric coordinate (≥ ~6.3e6 m) lands above it, so the guard catches a
 * forgotten rebase before the scene silently loses precision.
 */
export const SAFE_COORD_LIMIT = 2 ** 22;

export class WorldFrame {
  constructor(readonly originEcef: Vec3) {}

  toLocal(ecef: Vec3): THREE.Vector3 {
    const [x, y, z] = sub(ecef, this.originEcef);
    return new THREE.Vector3(x, y, z);
  }

  toEcef(local: THREE.Vector3): Vec3 {
    return [
      local.x + this.originEcef[0],
      local.y + this.originEcef[1],
      local.z + this.originEcef[2],
    ];
  }

  /** Guard: a rebased position must be float32-precision-safe. */
  assertSafe(local: THREE.Vector3): void {
    const magnitude = Math.max(
      Math.abs(local.x),
      Math.abs(local.y),
      Math.abs(local.z),
    );
    if (magnitude >= SAFE_COORD_LIMIT) {
      throw new Error(
        `rebased coordinate ${magnitude} exceeds float32-safe range; ` +
          "wrong tile origin?",
      );
    }
  }
}

/**
 * Convert a normalized screen click (-1..1 both axes) into an ECEF ray
 * request for the server, using the local camera and the world frame.
 */
export function pickRay(
  ndcX: number,
  ndcY: number,
  camera: THREE.Camera,
  frame: WorldFrame,
): RayRequest {
  const raycaster = new THREE.Raycaster();
  raycaster.setFromCamera(new THREE.Vector2(ndcX, ndcY), camera);
  const origin = frame.toEcef(raycaster.ray.origin);
  const d = raycaster.ray.direction;
  return {
    origin,
    direction: [d.x, d.y, d.z],
    t_max: 1e7,
  };
}

/** Compass heading of the camera's view direction in the local ENU frame. */
export function compassHeading(
  camera: THREE.Camera,
  east: Vec3,
  north: Vec3,
): number {
  const dir = new THREE.Vector3();
  camera.getWorldDirection(dir);
  const e = dir.x * east[0] + dir.y * east[1] + dir.z * east[2];
  const n = dir.x * north[0] + dir.y * north[1] + dir.z * north[2];
  const heading = (Math.atan2(e, n) * 180) / Math.PI;
  return ((heading % 360) + 360) % 360;
}

export interface Pin {
  markerId: string;
  object: THREE.Object3D;
  label: string;
  labelVisible: boolean;
}

export function buildPin(marker: MarkerRecord, frame: WorldFrame): Pin {
  const ecef = geodeticToEcef(marker.lat_deg, marker.lon_deg, marker.height_m);
  const local = frame.toLocal(ecef);
  frame.assertSafe(local);
  const geometry = new THREE.SphereGeometry(1.5, 12, 8);
  const material = new THREE.MeshBasicMaterial({ color: 0xff5533 });
  const object = new THREE.Mesh(geometry, material);
  object.position.copy(local);
  object.name = `pin:${marker.id}`;
  return {
    markerId: marker.id,
    object,
    label: markerLabel(marker),
    labelVisible: marker.label_visible,
  };
}

export function buildPolyline(
  pointsEcef: Vec3[],
  frame: WorldFrame,
): THREE.Line {
  const points = pointsEcef.map((p) => {
    const local = frame.toLocal(p);
    frame.assertSafe(local);
    return local;
  });
  const geometry = new THREE.BufferGeometry().setFromPoints(points);
  const material = new THREE.LineBasicMaterial({ color: 0xffe066 });
  return new THREE.Line(geometry, material);
}

/**
 * Apply (or clear) renderer clipping planes for the clip volume. Planes are
 * expressed in the rebased local frame so they match rendered geometry.
 */
export function applyClipVolume(
  materials: THREE.Material[],
  volume: ClipVolume | null,
  frame: WorldFrame,
  enabled: boolean,
): void {
  let planes: THREE.Plane[] = [];
  if (volume && enabled) {
    planes = clipPlanes(volume).map(({ point, normal }) => {
      const local = frame.toLocal(point);
      // renderer keeps fragments on the side the normal points away from,
      // so flip: inside the box means behind every outward plane
      const n = new THREE.Vector3(-normal[0], -normal[1], -normal[2]);
      return new THREE.Plane().setFromNormalAndCoplanarPoint(n, local);
    });
  }
  for (const material of materials) {
    material.clippingPlanes = planes;
    material.clipIntersection = false;
    material.needsUpdate = true;
  }
}
