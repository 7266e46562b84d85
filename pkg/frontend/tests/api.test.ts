import { describe, expect, it } from "vitest";

import {
  ApiError,
  MarkerRecord,
  ServiceClient,
  SessionEvent,
  parseSseStream,
} from "../src/api.js";
import { applyEvent, initialState } from "../src/state.js";

/**
 * In-memory stand-in for the measurement service: one shared session,
 * mutations broadcast to every open event stream — just enough surface for
 * the client tests, with the same wire formats as the real service.
 */
class FakeService {
  markers: MarkerRecord[] = [];
  private seq = 0;
  private streams: ReadableStreamDefaultController<Uint8Array>[] = [];

  emit(type: SessionEvent["type"], data: unknown) {
    const event: SessionEvent = {
      seq: ++this.seq,
      type,
      data: data as Record<string, unknown>,
    };
    const chunk = new TextEncoder().encode(
      `id: ${event.seq}\ndata: ${JSON.stringify(event)}\n\n`,
    );
    for (const controller of this.streams) controller.enqueue(chunk);
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : {};

    if (path === "/tilesets" && method === "POST") {
      return Response.json({ tileset_id: "ts-1" });
    }
    if (path === "/tilesets/ts-1/meshes") {
      return new Response(new Uint8Array([103, 108, 84, 70]), {
        headers: {
          "content-type": "model/gltf-binary",
          "x-tile-origin": "4633143.05 2209895.87 3772934.26",
        },
      });
    }
    if (path === "/raycast" && method === "POST") {
      return Response.json(
        { code: "NoHit", message: "ray missed all geometry" },
        { status: 404 },
      );
    }
    if (path === "/markers" && method === "POST") {
      const g = body.geodetic ?? { lat_deg: 36.5, lon_deg: 25.5, height_m: 0 };
      const marker: MarkerRecord = {
        id: `m-${this.markers.length + 1}`,
        lat_deg: g.lat_deg,
        lon_deg: g.lon_deg,
        height_m: g.height_m ?? 0,
        label_visible: true,
        created_at: "2026-08-23T00:00:00+00:00",
      };
      this.markers.push(marker);
      this.emit("marker_added", marker);
      return Response.json(marker);
    }
    if (path === "/session" && method === "GET") {
      return new Response(
        JSON.stringify({
          schema_version: 1,
          tilesets: [],
          markers: this.markers,
          measurements: [],
        }),
        { headers: { "content-type": "application/json" } },
      );
    }
    if (path === "/events") {
      const streams = this.streams;
      const stream = new ReadableStream<Uint8Array>({
        start(controller) {
          streams.push(controller);
        },
      });
      return new Response(stream, {
        headers: { "content-type": "text/event-stream" },
      });
    }
    return Response.json({ code: "NotFound", message: path }, { status: 404 });
  };
}

function waitFor(check: () => boolean, ms = 2000): Promise<void> {
  return new Promise((resolve, reject) => {
    const start = Date.now();
    const timer = setInterval(() => {
      if (check()) {
        clearInterval(timer);
        resolve();
      } else if (Date.now() - start > ms) {
        clearInterval(timer);
        reject(new Error("condition never became true"));
      }
    }, 5);
  });
}

describe("ServiceClient", () => {
  it("registers tilesets and parses the 64-bit origin header", async () => {
    const service = new FakeService();
    const client = new ServiceClient("http://svc", service.fetch);
    const { tileset_id } = await client.registerTileset("x/tileset.json");
    const payload = await client.fetchMeshes(tileset_id);
    expect(payload.origin).toEqual([4633143.05, 2209895.87, 3772934.26]);
    expect(payload.glb.byteLength).toBe(4);
  });

  it("maps service error bodies to ApiError with code and status", async () => {
    const service = new FakeService();
    const client = new ServiceClient("http://svc", service.fetch);
    await expect(
      client.raycast({ origin: [0, 0, 0], direction: [1, 0, 0] }),
    ).rejects.toMatchObject({ code: "NoHit", status: 404 });
    await expect(
      client.raycast({ origin: [0, 0, 0], direction: [1, 0, 0] }),
    ).rejects.toBeInstanceOf(ApiError);
  });

  it("delivers one client's markers to another through the event stream", async () => {
    const service = new FakeService();
    const alice = new ServiceClient("http://svc", service.fetch);
    const bob = new ServiceClient("http://svc", service.fetch);

    const bobState = initialState();
    const stop = bob.subscribeEvents((e) => applyEvent(bobState, e));

    const placed = await alice.placeMarkerAt({
      lat_deg: 36.5,
      lon_deg: 25.5,
      height_m: -140,
    });
    await waitFor(() => bobState.markers.has(placed.id));
    expect(bobState.markers.get(placed.id)?.height_m).toBe(-140);
    stop();
  });

  it("keeps both subscribers in sync and in order", async () => {
    const service = new FakeService();
    const client = new ServiceClient("http://svc", service.fetch);
    const a = initialState();
    const b = initialState();
    const stopA = client.subscribeEvents((e) => applyEvent(a, e));
    const stopB = client.subscribeEvents((e) => applyEvent(b, e));

    for (let i = 0; i < 3; i++) {
      await client.placeMarkerAt({ lat_deg: i, lon_deg: 0, height_m: 0 });
    }
    await waitFor(() => a.markers.size === 3 && b.markers.size === 3);
    expect([...a.markers.keys()]).toEqual(["m-1", "m-2", "m-3"]);
    expect(a.lastEventSeq).toBe(3);
    expect(b.lastEventSeq).toBe(3);
    stopA();
    stopB();
  });

  it("loads the session document", async () => {
    const service = new FakeService();
    const client = new ServiceClient("http://svc", service.fetch);
    await client.placeMarkerAt({ lat_deg: 1, lon_deg: 2, height_m: 3 });
    const doc = await client.getSessionDocument();
    expect(doc.schema_version).toBe(1);
    expect(doc.markers).toHaveLength(1);
  });
});

describe("parseSseStream", () => {
  it("handles events split across arbitrary chunk boundaries", async () => {
    const wire =
      'id: 1\ndata: {"seq": 1, "type": "marker_added", "data": {"id": "m-1"}}\n\n' +
      'id: 2\ndata: {"seq": 2, "type": "session_replaced", "data": {}}\n\n';
    const bytes = new TextEncoder().encode(wire);
    for (const cut of [1, 7, 40, bytes.length - 3]) {
      const stream = new ReadableStream<Uint8Array>({
        start(controller) {
          controller.enqueue(bytes.slice(0, cut));
          controller.enqueue(bytes.slice(cut));
          controller.close();
        },
      });
      const events: SessionEvent[] = [];
      for await (const e of parseSseStream(stream)) events.push(e);
      expect(events.map((e) => e.seq)).toEqual([1, 2]);
      expect(events[1].type).toBe("session_replaced");
    }
  });
});
