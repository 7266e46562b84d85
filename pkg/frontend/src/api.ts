/**
 * Typed client for the measurement service HTTP API.
 *
 * All geometry math stays server-side; this module only moves JSON and
 * binary GLB payloads. The fetch implementation is injectable so tests
 * can run without a server.
 */

export interface GeodeticCoord {
  lat_deg: number;
  lon_deg: number;
  height_m: number;
}

export interface MarkerRecord extends GeodeticCoord {
  id: string;
  label_visible: boolean;
  created_at: string;
}

export interface RayRequest {
  origin: [number, number, number];
  direction: [number, number, number];
  t_max?: number;
}

export interface HitRecord {
  t: number;
  point: [number, number, number];
  mesh_id: number;
  triangle_index: number;
  u: number;
  v: number;
  normal: [number, number, number];
}

export interface DistanceResult {
  total_m: number;
  segments: { distance_m: number; elevation_diff_m: number }[];
}

export interface StrikeDipResult {
  strike_azimuth_deg: number;
  dip_deg: number;
  dip_direction_deg: number;
  extent_m: number;
  horizontal: boolean;
}

export interface ClipBoxResult {
  anchor: GeodeticCoord;
  azimuth_u_deg: number;
  azimuth_v_deg: number;
  width_m: number;
  length_m: number;
  h_min_m: number;
  h_max_m: number;
}

export type MeasurementResults = DistanceResult | StrikeDipResult | ClipBoxResult;

export interface MeasurementRecord {
  id: string;
  type: "distance" | "strike_dip" | "clip_box";
  marker_ids: string[];
  results: MeasurementResults;
}

export interface SessionDocument {
  schema_version: number;
  tilesets: { id: string; uri: string }[];
  markers: MarkerRecord[];
  measurements: MeasurementRecord[];
}

export interface SessionEvent {
  seq: number;
  type:
    | "marker_added"
    | "marker_updated"
    | "measurement_added"
    | "tileset_registered"
    | "session_replaced";
  data: Record<string, unknown>;
}

export interface MeshPayload {
  glb: ArrayBuffer;
  /** 64-bit ECEF origin from the X-Tile-Origin header. */
  origin: [number, number, number];
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = "HttpError";
    let message = `${response.status}`;
    try {
      const body = (await response.json()) as { code?: string; message?: string };
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(code, message, response.status);
  }
  return (await response.json()) as T;
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch.bind(globalThis),
  ) {}

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }).then((r) => asJson<T>(r));
  }

  registerTileset(uri: string): Promise<{ tileset_id: string }> {
    return this.post("/tilesets", { uri });
  }

  async fetchMeshes(tilesetId: string): Promise<MeshPayload> {
    const r = await this.fetchImpl(`${this.baseUrl}/tilesets/${tilesetId}/meshes`);
    if (!r.ok) {
      throw new ApiError("UnknownTileset", `no tileset ${tilesetId}`, r.status);
    }
    const header = r.headers.get("x-tile-origin") ?? "0 0 0";
    const origin = header.split(/\s+/).map(Number) as [number, number, number];
    return { glb: await r.arrayBuffer(), origin };
  }

  raycast(ray: RayRequest): Promise<HitRecord> {
    return this.post("/raycast", ray);
  }

  placeMarkerByRay(ray: RayRequest): Promise<MarkerRecord> {
    return this.post("/markers", { ray });
  }

  placeMarkerAt(geodetic: GeodeticCoord): Promise<MarkerRecord> {
    return this.post("/markers", { geodetic });
  }

  setLabelVisible(markerId: string, visible: boolean): Promise<MarkerRecord> {
    return this.fetchImpl(`${this.baseUrl}/markers/${markerId}`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ label_visible: visible }),
    }).then((r) => asJson<MarkerRecord>(r));
  }

  measure(
    kind: "distance" | "strike-dip" | "clip-box",
    markerIds: string[],
  ): Promise<MeasurementRecord> {
    return this.post(`/measurements/${kind}`, { marker_ids: markerIds });
  }

  async exportSession(): Promise<Uint8Array> {
    const r = await this.fetchImpl(`${this.baseUrl}/session`);
    if (!r.ok) throw new ApiError("HttpError", `${r.status}`, r.status);
    return new Uint8Array(await r.arrayBuffer());
  }

  async importSession(
    data: Uint8Array,
  ): Promise<{ markers: number; measurements: number }> {
    const r = await this.fetchImpl(`${this.baseUrl}/session`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: data as unknown as BodyInit,
    });
    return asJson(r);
  }

  async getSessionDocument(): Promise<SessionDocument> {
    const bytes = await this.exportSession();
    return JSON.parse(new TextDecoder().decode(bytes)) as SessionDocument;
  }

  /**
   * Subscribe to the server-sent event stream. Events are delivered in
   * arrival order until the returned abort function is called.
   */
  subscribeEvents(
    onEvent: (event: SessionEvent) => void,
    onError?: (err: unknown) => void,
  ): () => void {
    const controller = new AbortController();
    (async () => {
      try {
        const r = await this.fetchImpl(`${this.baseUrl}/events`, {
          signal: controller.signal,
        } as RequestInit);
        if (!r.ok || !r.body) throw new ApiError("HttpError", `${r.status}`, r.status);
        for await (const event of parseSseStream(r.body)) {
          onEvent(event);
        }
      } catch (err) {
        if (!controller.signal.aborted) onError?.(err);
      }
    })();
    return () => controller.abort();
  }
}

/** Incrementally parse an SSE byte stream into session events. */
export async function* parseSseStream(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<SessionEvent> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { value, done } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    let split;
    while ((split = buffer.indexOf("\n\n")) >= 0) {
      const block = buffer.slice(0, split);
      buffer = buffer.slice(split + 2);
      for (const line of block.split("\n")) {
        if (line.startsWith("data: ")) {
          yield JSON.parse(line.slice("data: ".length)) as SessionEvent;
        }
      }
    }
  }
}
