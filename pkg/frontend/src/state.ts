/**
 * Viewer session state, reconciled against the server's event stream.
 *
 * Markers and measurements always mirror server state: mutations arrive as
 * events (including echoes of this client's own requests) and are applied
 * in order. Only the camera is client-local.
 */

import type {
  MarkerRecord,
  MeasurementRecord,
  SessionDocument,
  SessionEvent,
} from "./api.js";

export type Tool = "marker" | "distance" | "strike_dip" | "clip_box" | "none";

export interface ViewerState {
  markers: Map<string, MarkerRecord>;
  measurements: MeasurementRecord[];
  tilesets: { id: string; uri: string }[];
  activeTool: Tool;
  /** markers selected as inputs to the active tool, in click order */
  toolSelection: string[];
  clipBoxVisible: boolean;
  compassHeadingDeg: number;
  lastEventSeq: number;
  /** set when the event stream signals a full reload is required */
  needsResync: boolean;
}

export function initialState(): ViewerState {
  return {
    markers: new Map(),
    measurements: [],
    tilesets: [],
    activeTool: "none",
    toolSelection: [],
    clipBoxVisible: true,
    compassHeadingDeg: 0,
    lastEventSeq: 0,
    needsResync: false,
  };
}

/** Replace session content from a full document (initial load / resync). */
export function applyDocument(state: ViewerState, doc: SessionDocument): void {
  state.markers = new Map(doc.markers.map((m) => [m.id, m]));
  state.measurements = [...doc.measurements];
  state.tilesets = [...doc.tilesets];
  state.toolSelection = [];
  state.needsResync = false;
}

/** Apply one server event; events must arrive in seq order per stream. */
export function applyEvent(state: ViewerState, event: SessionEvent): void {
  if (event.seq <= state.lastEventSeq) {
    return; // replayed backlog entry
  }
  state.lastEventSeq = event.seq;
  switch (event.type) {
    case "marker_added":
    case "marker_updated": {
      const marker = event.data as unknown as MarkerRecord;
      state.markers.set(marker.id, marker);
      break;
    }
    case "measurement_added": {
      const m = event.data as unknown as MeasurementRecord;
      state.measurements.push(m);
      // the server hides all but the first marker label on strike & dip;
      // mirror that without waiting for individual marker_updated echoes
      if (m.type === "strike_dip") {
        for (const id of m.marker_ids.slice(1)) {
          const pin = state.markers.get(id);
          if (pin) pin.label_visible = false;
        }
      }
      break;
    }
    case "tileset_registered": {
      const data = event.data as { tileset_id: string; uri: string };
      state.tilesets.push({ id: data.tileset_id, uri: data.uri });
      break;
    }
    case "session_replaced":
      state.needsResync = true;
      break;
  }
}

export function setActiveTool(state: ViewerState, tool: Tool): void {
  state.activeTool = tool;
  state.toolSelection = [];
}

/** Number of markers each tool needs before it can submit. */
export const TOOL_ARITY: Record<Exclude<Tool, "none" | "marker">, number> = {
  distance: 2,
  strike_dip: 3,
  clip_box: 3,
};

/**
 * Record a marker click for the active tool; returns the marker ids to
 * submit once the tool has enough inputs, else null.
 */
export function selectMarker(state: ViewerState, markerId: string): string[] | null {
  if (state.activeTool === "none" || state.activeTool === "marker") return null;
  if (!state.markers.has(markerId)) return null;
  state.toolSelection.push(markerId);
  const needed = TOOL_ARITY[state.activeTool];
  if (state.activeTool === "distance") {
    return null; // distance is open-ended; submitted explicitly
  }
  if (state.toolSelection.length >= needed) {
    const ids = [...state.toolSelection];
    state.toolSelection = [];
    return ids;
  }
  return null;
}

export function visibleLabels(state: ViewerState): MarkerRecord[] {
  return [...state.markers.values()].filter((m) => m.label_visible);
}

export function latestClipBox(state: ViewerState): MeasurementRecord | null {
  for (let i = state.measurements.length - 1; i >= 0; i--) {
    if (state.measurements[i].type === "clip_box") return state.measurements[i];
  }
  return null;
}
