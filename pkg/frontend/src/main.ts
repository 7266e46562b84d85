/**
 * Browser entry point: renderer setup, docked tool panel, and the glue
 * between DOM events, the service client, and the viewer state.
 */

import * as THREE from "three";
import { GLTFLoader } from "three/examples/jsm/loaders/GLTFLoader.js";

import { ServiceClient } from "./api.js";
import { clipVolumeFromResult } from "./clipbox.js";
import type { ClipBoxResult } from "./api.js";
import { enuFrameAt, geodeticToEcef } from "./geodesy.js";
import {
  compassLabel,
  distanceLabels,
  markerLabel,
  strikeDipLabel,
} from "./format.js";
import {
  applyDocument,
  applyEvent,
  initialState,
  latestClipBox,
  selectMarker,
  setActiveTool,
  Tool,
} from "./state.js";
import {
  Pin,
  WorldFrame,
  applyClipVolume,
  buildPin,
  buildPolyline,
  compassHeading,
  pickRay,
} from "./viewer.js";

const client = new ServiceClient("");
const state = initialState();

const renderer = new THREE.WebGLRenderer({ antialias: true });
renderer.localClippingEnabled = true;
renderer.setSize(window.innerWidth, window.innerHeight);
document.body.appendChild(renderer.domElement);

const scene = new THREE.Scene();
scene.add(new THREE.HemisphereLight(0xffffff, 0x445566, 1.0));
const camera = new THREE.PerspectiveCamera(
  60,
  window.innerWidth / window.innerHeight,
  0.1,
  1e7,
);

let frame: WorldFrame | null = null;
let terrainMaterials: THREE.Material[] = [];
let localEast: [number, number, number] = [1, 0, 0];
let localNorth: [number, number, number] = [0, 1, 0];
const pins = new Map<string, Pin>();
const overlays = new THREE.Group();
scene.add(overlays);

const hud = document.createElement("div");
hud.style.cssText =
  "position:fixed;top:8px;left:8px;color:#fff;font:13px monospace;" +
  "background:rgba(0,0,0,.5);padding:8px;border-radius:4px;white-space:pre";
document.body.appendChild(hud);

function setStatus(text: string) {
  hud.textContent = text;
}

async function loadTileset(uri: string) {
  const { tileset_id } = await client.registerTileset(uri);
  const payload = await client.fetchMeshes(tileset_id);
  frame = new WorldFrame(payload.origin);

  const loader = new GLTFLoader();
  const gltf = await loader.parseAsync(payload.glb, "");
  gltf.scene.traverse((node) => {
    const mesh = node as THREE.Mesh;
    if (mesh.isMesh) {
      terrainMaterials.push(mesh.material as THREE.Material);
    }
  });
  scene.add(gltf.scene);

  // aim the camera at the terrain from the south-west, local up as up
  const doc = await client.getSessionDocument();
  applyDocument(state, doc);
  const first = doc.markers[0];
  const anchor = first
    ? geodeticToEcef(first.lat_deg, first.lon_deg, first.height_m)
    : payload.origin;
  const enu = enuFrameAt(0, 0, 0);
  localEast = enu.east;
  localNorth = enu.north;
  const local = frame.toLocal(anchor);
  camera.position.set(local.x - 2000, local.y - 2000, local.z + 1500);
  camera.lookAt(local);
  refreshPins();
}

function refreshPins() {
  if (!frame) return;
  for (const pin of pins.values()) scene.remove(pin.object);
  pins.clear();
  for (const marker of state.markers.values()) {
    const pin = buildPin(marker, frame);
    pins.set(marker.id, pin);
    scene.add(pin.object);
  }
}

function refreshOverlays() {
  if (!frame) return;
  overlays.clear();
  const lines: string[] = [];
  for (const m of state.measurements) {
    const points = m.marker_ids
      .map((id) => state.markers.get(id))
      .filter((mk) => mk !== undefined)
      .map((mk) => geodeticToEcef(mk!.lat_deg, mk!.lon_deg, mk!.height_m));
    if (points.length >= 2) overlays.add(buildPolyline(points, frame));
    if (m.type === "distance") {
      const labels = distanceLabels(m.results as never);
      lines.push(`${m.id} ${labels.total}`);
    } else if (m.type === "strike_dip") {
      lines.push(`${m.id} ${strikeDipLabel(m.results as never)}`);
    }
  }
  const box = latestClipBox(state);
  applyClipVolume(
    terrainMaterials,
    box ? clipVolumeFromResult(box.results as ClipBoxResult) : null,
    frame,
    state.clipBoxVisible,
  );
  setStatus(
    [
      `tool: ${state.activeTool}  compass: ${compassLabel(state.compassHeadingDeg)}`,
      ...[...state.markers.values()]
        .filter((mk) => mk.label_visible)
        .map((mk) => markerLabel(mk)),
      ...lines,
    ].join("\n"),
  );
}

renderer.domElement.addEventListener("click", async (ev) => {
  if (!frame) return;
  const ndcX = (ev.clientX / window.innerWidth) * 2 - 1;
  const ndcY = -(ev.clientY / window.innerHeight) * 2 + 1;
  if (state.activeTool === "marker") {
    try {
      await client.placeMarkerByRay(pickRay(ndcX, ndcY, camera, frame));
    } catch {
      setStatus("no hit");
      setTimeout(refreshOverlays, 800);
    }
  }
});

window.addEventListener("keydown", async (ev) => {
  const tools: Record<string, Tool> = {
    m: "marker",
    d: "distance",
    s: "strike_dip",
    c: "clip_box",
    Escape: "none",
  };
  if (ev.key in tools) setActiveTool(state, tools[ev.key]);
  if (ev.key === "h") state.clipBoxVisible = !state.clipBoxVisible;
  if (ev.key === "Enter" && state.activeTool === "distance") {
    await client.measure("distance", state.toolSelection);
    state.toolSelection = [];
  }
  refreshOverlays();
});

// marker pins double as tool inputs: clicking a pin while a measurement
// tool is armed selects it, auto-submitting when the arity is reached
renderer.domElement.addEventListener("contextmenu", async (ev) => {
  ev.preventDefault();
  if (!frame) return;
  const ndcX = (ev.clientX / window.innerWidth) * 2 - 1;
  const ndcY = -(ev.clientY / window.innerHeight) * 2 + 1;
  const raycaster = new THREE.Raycaster();
  raycaster.setFromCamera(new THREE.Vector2(ndcX, ndcY), camera);
  const hits = raycaster.intersectObjects([...pins.values()].map((p) => p.object));
  const first = hits[0]?.object.name?.replace("pin:", "");
  if (!first) return;
  const ready = selectMarker(state, first);
  if (ready) {
    const kind = state.activeTool === "strike_dip" ? "strike-dip" : "clip-box";
    try {
      await client.measure(kind, ready);
    } catch (err) {
      setStatus(String(err));
    }
  }
});

client.subscribeEvents(async (event) => {
  applyEvent(state, event);
  if (state.needsResync) {
    applyDocument(state, await client.getSessionDocument());
  }
  refreshPins();
  refreshOverlays();
});

function animate() {
  requestAnimationFrame(animate);
  state.compassHeadingDeg = compassHeading(camera, localEast, localNorth);
  renderer.render(scene, camera);
}
animate();

const params = new URLSearchParams(window.location.search);
const tilesetUri = params.get("tileset");
if (tilesetUri) {
  loadTileset(tilesetUri).catch((err) => setStatus(String(err)));
} else {
  setStatus("add ?tileset=<uri> to load terrain");
}
