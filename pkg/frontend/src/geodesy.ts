/**
 * Just enough WGS84 math for client-side rendering and clipping:
 * geodetic -> ECEF, ECEF -> ellipsoidal height, and local ENU frames.
 *
 * The server remains authoritative for every displayed value; this is only
 * used to position geometry and replicate clip-box semantics in materials.
 */

export const WGS84_A = 6378137.0;
export const WGS84_F = 1.0 / 298.257223563;
export const WGS84_E2 = WGS84_F * (2.0 - WGS84_F);

export type Vec3 = [number, number, number];

const DEG = Math.PI / 180.0;

export function geodeticToEcef(latDeg: number, lonDeg: number, heightM: number): Vec3 {
  const lat = latDeg * DEG;
  const lon = lonDeg * DEG;
  const sinLat = Math.sin(lat);
  const cosLat = Math.cos(lat);
  const n = WGS84_A / Math.sqrt(1.0 - WGS84_E2 * sinLat * sinLat);
  return [
    (n + heightM) * cosLat * Math.cos(lon),
    (n + heightM) * cosLat * Math.sin(lon),
    (n * (1.0 - WGS84_E2) + heightM) * sinLat,
  ];
}

/** Ellipsoidal height of an ECEF point (Bowring start + fixed point). */
export function ecefHeight(p: Vec3): number {
  const [x, y, z] = p;
  const rho = Math.hypot(x, y);
  const b = WGS84_A * (1.0 - WGS84_F);
  let lat = Math.atan2(z, rho * (1.0 - WGS84_E2));
  let h = 0.0;
  for (let i = 0; i < 10; i++) {
    const sinLat = Math.sin(lat);
    const n = WGS84_A / Math.sqrt(1.0 - WGS84_E2 * sinLat * sinLat);
    const hNew = rho * Math.cos(lat) + z * sinLat - (WGS84_A * WGS84_A) / n;
    lat = Math.atan2(z, rho * (1.0 - WGS84_E2 * (n / (n + hNew))));
    if (Math.abs(hNew - h) < 1e-9) {
      h = hNew;
      break;
    }
    h = hNew;
  }
  void b;
  return h;
}

export interface EnuFrame {
  origin: Vec3;
  east: Vec3;
  north: Vec3;
  up: Vec3;
}

export function enuFrameAt(latDeg: number, lonDeg: number, heightM: number): EnuFrame {
  const lat = latDeg * DEG;
  const lon = lonDeg * DEG;
  const sinLat = Math.sin(lat);
  const cosLat = Math.cos(lat);
  const sinLon = Math.sin(lon);
  const cosLon = Math.cos(lon);
  return {
    origin: geodeticToEcef(latDeg, lonDeg, heightM),
    east: [-sinLon, cosLon, 0.0],
    north: [-sinLat * cosLon, -sinLat * sinLon, cosLat],
    up: [cosLat * cosLon, cosLat * sinLon, sinLat],
  };
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function scaleAdd(a: Vec3, s: number, b: Vec3): Vec3 {
  return [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
}
