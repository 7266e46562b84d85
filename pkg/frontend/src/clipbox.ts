/**
 * Client-side clip-box semantics: the same membership rule the server uses,
 * reconstructed from the serialized measurement result so materials and
 * shaders can hide fragments outside the box.
 */

import type { ClipBoxResult } from "./api.js";
import {
  EnuFrame,
  Vec3,
  dot,
  ecefHeight,
  enuFrameAt,
  scaleAdd,
  sub,
} from "./geodesy.js";

export interface ClipVolume {
  frame: EnuFrame;
  axisU: Vec3;
  axisV: Vec3;
  widthM: number;
  lengthM: number;
  hMinM: number;
  hMaxM: number;
}

function horizontalFromAzimuth(frame: EnuFrame, azimuthDeg: number): Vec3 {
  const az = (azimuthDeg * Math.PI) / 180.0;
  return scaleAdd(
    [Math.sin(az) * frame.east[0], Math.sin(az) * frame.east[1], Math.sin(az) * frame.east[2]],
    Math.cos(az),
    frame.north,
  );
}

export function clipVolumeFromResult(result: ClipBoxResult): ClipVolume {
  const frame = enuFrameAt(
    result.anchor.lat_deg,
    result.anchor.lon_deg,
    result.anchor.height_m,
  );
  return {
    frame,
    axisU: horizontalFromAzimuth(frame, result.azimuth_u_deg),
    axisV: horizontalFromAzimuth(frame, result.azimuth_v_deg),
    widthM: result.width_m,
    lengthM: result.length_m,
    hMinM: result.h_min_m,
    hMaxM: result.h_max_m,
  };
}

/** True iff the ECEF point lies inside the clip volume. */
export function pointInClipVolume(volume: ClipVolume, pointEcef: Vec3): boolean {
  const d = sub(pointEcef, volume.frame.origin);
  const u = dot(d, volume.axisU);
  const v = dot(d, volume.axisV);
  if (u < 0.0 || u > volume.widthM || v < 0.0 || v > volume.lengthM) {
    return false;
  }
  const h = ecefHeight(pointEcef);
  return h >= volume.hMinM && h <= volume.hMaxM;
}

/**
 * Six clipping planes (point + outward normal, ECEF) equivalent to the u/v
 * extent of the volume, for driving renderer clipping planes. The height
 * band is approximated by planes normal to local up at the anchor, which is
 * exact at the anchor and drifts only with ellipsoid curvature across the
 * box (sub-meter for boxes under ~5 km).
 */
export function clipPlanes(volume: ClipVolume): { point: Vec3; normal: Vec3 }[] {
  const o = volume.frame.origin;
  const { axisU, axisV } = volume;
  const up = volume.frame.up;
  const anchorH = ecefHeight(o);
  return [
    { point: o, normal: [-axisU[0], -axisU[1], -axisU[2]] },
    { point: scaleAdd(o, volume.widthM, axisU), normal: axisU },
    { point: o, normal: [-axisV[0], -axisV[1], -axisV[2]] },
    { point: scaleAdd(o, volume.lengthM, axisV), normal: axisV },
    { point: scaleAdd(o, volume.hMinM - anchorH, up), normal: [-up[0], -up[1], -up[2]] },
    { point: scaleAdd(o, volume.hMaxM - anchorH, up), normal: up },
  ];
}
