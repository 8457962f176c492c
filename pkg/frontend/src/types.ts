/** Wire documents, mirroring the service schema (v1) exactly. */

export interface PoseDoc {
  x: number;
  y: number;
  z: number;
  roll: number;
  pitch: number;
  yaw: number;
}

export interface ObstacleDoc {
  cx: number;
  cy: number;
  sx: number;
  sy: number;
  h: number;
}

export interface BoundsDoc {
  delta_q_m: number;
  delta_alpha_ms: number;
  delta_b_m: number;
}

export interface HelloDoc {
  v: 1;
  type: "hello";
  scenario: string;
  tick_ms: number;
  bounds: BoundsDoc;
  goal: PoseDoc;
  obstacles: ObstacleDoc[];
}

export interface FrameDoc {
  tick: number;
  ts_r_ms: number;
  ts_v_ms: number;
  pr: PoseDoc;
  pv: PoseDoc;
  dev_pos_m: number;
  dev_ts_ms: number;
  clearance_min_m: number | null;
  incidents: string[];
}

export interface IncidentNote {
  tick: number;
  kinds: string[];
}

export interface BatchDoc {
  v: 1;
  type: "batch";
  tick: number;
  frame: FrameDoc;
  incidents: IncidentNote[];
}

export interface RehearsalDoc {
  min_clearance_m: number | null;
  max_pose_deviation_m: number;
  completed: boolean;
  log_ref: string;
}

export interface DecisionDoc {
  verdict: "approve" | "reject";
  actor: string;
  override: boolean;
  time_ms: number;
}

export interface TriggerDoc {
  kind: string;
  measured: number;
  bound: number;
  unit: string;
  tick: number;
}

export interface PlanDoc {
  id: string;
  status: string;
  created_tick: number;
  trigger: TriggerDoc;
  candidate_waypoints: number;
  candidate_preview: number[][];
  rehearsal: RehearsalDoc | null;
  decision: DecisionDoc | null;
  deployed_tick: number | null;
}

export interface PendingEventDoc {
  v: 1;
  type: "pending";
  plan: PlanDoc;
}

export interface TerminalDoc {
  v: 1;
  type: "terminal";
  state: string;
}

export type StreamDoc = HelloDoc | BatchDoc | PendingEventDoc | TerminalDoc;

export interface StateDoc {
  v: 1;
  scenario: string;
  terminal_state: string;
  tick: number | null;
  frame: FrameDoc | null;
}
