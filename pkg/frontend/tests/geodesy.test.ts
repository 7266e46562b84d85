import { describe, expect, it } from "vitest";

import {
  ecefHeight,
  enuFrameAt,
  geodeticToEcef,
  dot,
} from "../src/geodesy.js";

// frozen from an independent high-precision evaluation of the WGS84 closed
// form (same oracle set the backend tests pin against)
const REFERENCE: [number[], number[]][] = [
  [
    [36.5, 25.5, -500.0],
    [4632780.734128736, 2209723.058534827, 3772637.136425334],
  ],
  [
    [-45.25, -123.75, 1234.5],
    [-2499383.3895196775, -3740591.5838655517, -4507828.149521468],
  ],
  [
    [89.9, 10.0, 8848.0],
    [11014.912062641873, 1942.2261867748916, 6365590.553633043],
  ],
];

describe("geodeticToEcef", () => {
  it("matches the frozen reference points to a micrometer", () => {
    for (const [[lat, lon, h], expected] of REFERENCE) {
      const got = geodeticToEcef(lat, lon, h);
      for (let i = 0; i < 3; i++) {
        expect(Math.abs(got[i] - expected[i])).toBeLessThan(1e-6);
      }
    }
  });
});

describe("ecefHeight", () => {
  it("round-trips heights across latitudes", () => {
    for (let lat = -80; lat <= 80; lat += 16) {
      for (const h of [-500, 0, 1234.5, 8848]) {
        const p = geodeticToEcef(lat, 25.5, h);
        expect(Math.abs(ecefHeight(p) - h)).toBeLessThan(1e-6);
      }
    }
  });
});

describe("enuFrameAt", () => {
  it("builds an orthonormal right-handed frame", () => {
    const f = enuFrameAt(36.5, 25.5, 0);
    expect(Math.abs(dot(f.east, f.north))).toBeLessThan(1e-12);
    expect(Math.abs(dot(f.east, f.up))).toBeLessThan(1e-12);
    expect(Math.hypot(...f.east)).toBeCloseTo(1, 12);
    expect(Math.hypot(...f.up)).toBeCloseTo(1, 12);
    // up at the equator/prime meridian is +x
    const eq = enuFrameAt(0, 0, 0);
    expect(eq.up[0]).toBeCloseTo(1, 12);
  });
});
