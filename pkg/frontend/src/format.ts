/**
 * Label text for pins and measurement annotations.
 *
 * Every number shown comes verbatim from a server response; formatting only
 * chooses digits, never recomputes. Full-precision variants exist so tests
 * can assert the display value equals the server value exactly.
 */

import type {
  DistanceResult,
  MarkerRecord,
  StrikeDipResult,
} from "./api.js";

export function markerLabel(marker: MarkerRecord): string {
  return (
    `${marker.id}: ${marker.lat_deg.toFixed(6)}°, ` +
    `${marker.lon_deg.toFixed(6)}°, ${marker.height_m.toFixed(1)} m`
  );
}

export function distanceLabels(result: DistanceResult): {
  total: string;
  segments: string[];
} {
  return {
    total: `total ${result.total_m.toFixed(2)} m`,
    segments: result.segments.map(
      (s, i) =>
        `seg ${i + 1}: ${s.distance_m.toFixed(2)} m ` +
        `(Δh ${s.elevation_diff_m.toFixed(2)} m)`,
    ),
  };
}

export function strikeDipLabel(result: StrikeDipResult): string {
  if (result.horizontal) {
    return `horizontal (dip < 0.01°), extent ${result.extent_m.toFixed(2)} m`;
  }
  return (
    `strike ${result.strike_azimuth_deg.toFixed(1)}°, ` +
    `dip ${result.dip_deg.toFixed(1)}° ` +
    `toward ${result.dip_direction_deg.toFixed(1)}°, ` +
    `extent ${result.extent_m.toFixed(2)} m`
  );
}

/** The dip value exactly as the server sent it (display-fidelity hook). */
export function dipAnnotationValue(result: StrikeDipResult): number {
  return result.dip_deg;
}

export function compassLabel(headingDeg: number): string {
  const names = ["N", "NE", "E", "SE", "S", "SW", "W", "NW"];
  const wrapped = ((headingDeg % 360) + 360) % 360;
  const name = names[Math.round(wrapped / 45) % 8];
  return `${wrapped.toFixed(0)}° ${name}`;
}
