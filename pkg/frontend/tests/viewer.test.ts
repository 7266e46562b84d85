import * as THREE from "three";
import { describe, expect, it } from "vitest";

import { geodeticToEcef } from "../src/geodesy.js";
import {
  SAFE_COORD_LIMIT,
  WorldFrame,
  buildPin,
  compassHeading,
  pickRay,
} from "../src/viewer.js";

const ORIGIN = geodeticToEcef(36.5, 25.5, 0);

describe("WorldFrame", () => {
  it("round-trips ECEF through the rebased local frame", () => {
    const frame = new WorldFrame(ORIGIN);
    const p = geodeticToEcef(36.51, 25.51, 120);
    const back = frame.toEcef(frame.toLocal(p));
    for (let i = 0; i < 3; i++) {
      expect(Math.abs(back[i] - p[i])).toBeLessThan(1e-6);
    }
  });

  it("keeps terrain-scale coordinates far inside float32-safe range", () => {
    const frame = new WorldFrame(ORIGIN);
    // 10 km off the origin: still orders of magnitude under the guard
    const p = geodeticToEcef(36.59, 25.5, 0);
    const local = frame.toLocal(p);
    frame.assertSafe(local);
    expect(
      Math.max(Math.abs(local.x), Math.abs(local.y), Math.abs(local.z)),
    ).toBeLessThan(SAFE_COORD_LIMIT / 100);
  });

  it("rejects unrebased geocentric coordinates", () => {
    const frame = new WorldFrame([0, 0, 0]);
    expect(() => frame.assertSafe(frame.toLocal(ORIGIN))).toThrow(
      /float32-safe/,
    );
  });
});

describe("pickRay", () => {
  it("centre-screen click rays along the camera view direction", () => {
    const frame = new WorldFrame(ORIGIN);
    const camera = new THREE.PerspectiveCamera(60, 1, 0.1, 1e6);
    camera.position.set(0, 0, 1000);
    camera.lookAt(new THREE.Vector3(0, 0, 0));
    camera.updateMatrixWorld();

    const ray = pickRay(0, 0, camera, frame);
    expect(ray.direction[0]).toBeCloseTo(0, 6);
    expect(ray.direction[1]).toBeCloseTo(0, 6);
    expect(ray.direction[2]).toBeCloseTo(-1, 6);
    // origin is reported in ECEF, i.e. camera position plus world origin
    expect(ray.origin[0]).toBeCloseTo(ORIGIN[0], 6);
    expect(ray.origin[2]).toBeCloseTo(ORIGIN[2] + 1000, 6);
  });

  it("off-centre clicks diverge from the axis", () => {
    const frame = new WorldFrame(ORIGIN);
    const camera = new THREE.PerspectiveCamera(60, 1, 0.1, 1e6);
    camera.position.set(0, 0, 1000);
    camera.lookAt(new THREE.Vector3(0, 0, 0));
    camera.updateMatrixWorld();
    const ray = pickRay(0.5, 0.0, camera, frame);
    expect(Math.abs(ray.direction[0])).toBeGreaterThan(0.1);
  });
});

describe("compassHeading", () => {
  it("reads 0 looking north and 90 looking east", () => {
    const east: [number, number, number] = [1, 0, 0];
    const north: [number, number, number] = [0, 1, 0];
    const camera = new THREE.PerspectiveCamera();
    camera.position.set(0, 0, 0);
    camera.lookAt(new THREE.Vector3(0, 10, 0));
    camera.updateMatrixWorld();
    expect(compassHeading(camera, east, north)).toBeCloseTo(0, 6);
    camera.lookAt(new THREE.Vector3(10, 0, 0));
    camera.updateMatrixWorld();
    expect(compassHeading(camera, east, north)).toBeCloseTo(90, 6);
  });
});

describe("buildPin", () => {
  it("positions the pin at the marker's rebased location with its label", () => {
    const frame = new WorldFrame(ORIGIN);
    const pin = buildPin(
      {
        id: "m-1",
        lat_deg: 36.5,
        lon_deg: 25.5,
        height_m: 0,
        label_visible: true,
        created_at: "",
      },
      frame,
    );
    expect(pin.object.position.length()).toBeLessThan(1e-6);
    expect(pin.label).toContain("36.5");
    expect(pin.labelVisible).toBe(true);
    expect(pin.object.name).toBe("pin:m-1");
  });
});
