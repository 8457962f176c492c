/** Stream ingestion: strict tick order, stale frames discarded. */

import type {
  FrameDoc,
  HelloDoc,
  IncidentNote,
  PlanDoc,
  StreamDoc,
} from "./types.js";

const TRAIL_CAP = 4000;
const INCIDENT_CAP = 200;

export interface TrailPoint {
  tick: number;
  x: number;
  y: number;
  z: number;
}

export class StreamStore {
  hello: HelloDoc | null = null;
  latest: FrameDoc | null = null;
  lastTick = -1;
  trailPhysical: TrailPoint[] = [];
  trailVirtual: TrailPoint[] = [];
  incidents: IncidentNote[] = []; // newest first
  plans = new Map<string, PlanDoc>();
  planOrder: string[] = [];
  terminal: string | null = null;
  connected = false;
  staleDiscarded = 0;
  /** Bumped on every accepted change; render loops compare it. */
  version = 0;

  ingest(doc: StreamDoc): void {
    if (doc.type === "hello") {
      this.hello = doc;
      this.version++;
      return;
    }
    if (doc.type === "batch") {
      if (doc.tick <= this.lastTick) {
        this.staleDiscarded++;
        return;
      }
      this.lastTick = doc.tick;
      this.latest = doc.frame;
      this.pushTrail(this.trailPhysical, doc.frame, doc.frame.pr);
      this.pushTrail(this.trailVirtual, doc.frame, doc.frame.pv);
      for (const note of doc.incidents) {
        this.incidents.unshift(note);
      }
      if (this.incidents.length > INCIDENT_CAP) {
        this.incidents.length = INCIDENT_CAP;
      }
      this.version++;
      return;
    }
    if (doc.type === "pending") {
      if (!this.plans.has(doc.plan.id)) {
        this.planOrder.push(doc.plan.id);
      }
      this.plans.set(doc.plan.id, doc.plan);
      this.version++;
      return;
    }
    if (doc.type === "terminal") {
      this.terminal = doc.state;
      this.version++;
    }
  }

  private pushTrail(trail: TrailPoint[], frame: FrameDoc, pose: { x: number; y: number; z: number }): void {
    trail.push({ tick: frame.tick, x: pose.x, y: pose.y, z: pose.z });
    if (trail.length > TRAIL_CAP) {
      trail.splice(0, trail.length - TRAIL_CAP);
    }
  }

  setConnected(connected: boolean): void {
    if (this.connected !== connected) {
      this.connected = connected;
      this.version++;
    }
  }

  replacePlans(plans: PlanDoc[]): void {
    this.plans.clear();
    this.planOrder = [];
    for (const plan of plans) {
      this.plans.set(plan.id, plan);
      this.planOrder.push(plan.id);
    }
    this.version++;
  }

  orderedPlans(): PlanDoc[] {
    return this.planOrder
      .map((id) => this.plans.get(id))
      .filter((p): p is PlanDoc => p !== undefined);
  }

  awaitingDecision(): PlanDoc[] {
    return this.orderedPlans().filter((p) => p.status === "awaiting-decision");
  }
}

// Adapter over both the DOM WebSocket and the node ws client.
export interface StreamSocketLike {
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onopen: ((ev: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onclose: ((ev: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onerror: ((ev: any) => void) | null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  onmessage: ((ev: any) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => StreamSocketLike;

export interface StreamConnection {
  close(): void;
}

/** Connect with automatic reconnect; store.connected drives the stale banner. */
export function connectStream(
  url: string,
  store: StreamStore,
  makeSocket: SocketFactory,
  reconnectDelayMs = 1000,
  schedule: (fn: () => void, ms: number) => unknown = (fn, ms) => setTimeout(fn, ms),
): StreamConnection {
  let closed = false;
  let socket: StreamSocketLike | null = null;

  const open = () => {
    if (closed) {
      return;
    }
    socket = makeSocket(url);
    socket.onopen = () => store.setConnected(true);
    socket.onmessage = (ev) => {
      const doc = JSON.parse(String(ev.data)) as StreamDoc;
      store.ingest(doc);
    };
    socket.onerror = () => {
      /* close follows */
    };
    socket.onclose = () => {
      store.setConnected(false);
      if (!closed) {
        schedule(open, reconnectDelayMs);
      }
    };
  };
  open();
  return {
    close() {
      closed = true;
      socket?.close();
    },
  };
}
