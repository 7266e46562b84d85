import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import type { ClipBoxResult } from "../src/api.js";
import {
  clipPlanes,
  clipVolumeFromResult,
  pointInClipVolume,
} from "../src/clipbox.js";
import { dot, sub, Vec3 } from "../src/geodesy.js";

interface FixtureCase {
  ecef: Vec3;
  inside: boolean;
}

const fixturePath = join(
  dirname(fileURLToPath(import.meta.url)),
  "fixtures",
  "clipbox_cases.json",
);
const fixture = JSON.parse(readFileSync(fixturePath, "utf-8")) as {
  results: ClipBoxResult;
  cases: FixtureCase[];
};

describe("clip volume", () => {
  const volume = clipVolumeFromResult(fixture.results);

  it("reconstructs orthogonal horizontal axes", () => {
    expect(Math.abs(dot(volume.axisU, volume.axisV))).toBeLessThan(1e-9);
    expect(Math.abs(dot(volume.axisU, volume.frame.up))).toBeLessThan(1e-9);
    const uLen = Math.hypot(...volume.axisU);
    expect(uLen).toBeCloseTo(1.0, 12);
  });

  it("matches the service's membership verdict on every fixture point", () => {
    let inside = 0;
    for (const c of fixture.cases) {
      expect(pointInClipVolume(volume, c.ecef)).toBe(c.inside);
      if (c.inside) inside++;
    }
    // the sample straddles the boundary in both directions
    expect(inside).toBeGreaterThan(0);
    expect(inside).toBeLessThan(fixture.cases.length);
  });

  it("exposes six planes consistent with u/v membership", () => {
    const planes = clipPlanes(volume);
    expect(planes).toHaveLength(6);
    for (const c of fixture.cases) {
      // a point inside the volume is behind every outward-facing plane;
      // the height planes are a local approximation, so only check the
      // four exact lateral planes here
      const lateralBehind = planes
        .slice(0, 4)
        .every(({ point, normal }) => dot(sub(c.ecef, point), normal) <= 0);
      if (c.inside) {
        expect(lateralBehind).toBe(true);
      }
    }
  });
});
