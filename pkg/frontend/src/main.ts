/** Browser entry: wires the stream store, charts, feed, and decision panel.
 *
 * Service base URL comes from ?api=http://host:port (default same host,
 * port 8000). The page issues no writes except decision POSTs.
 */

import { ApiClient } from "./api.js";
import { drawGauge, drawTopDown, drawZStrip } from "./charts.js";
import { needsOverride, submitDecision } from "./decision.js";
import { displayNumber } from "./format.js";
import { connectStream, StreamStore } from "./stream.js";
import type { PlanDoc } from "./types.js";

function apiBase(): string {
  const param = new URLSearchParams(window.location.search).get("api");
  if (param) {
    return param.replace(/\/$/, "");
  }
  return `http://${window.location.hostname || "127.0.0.1"}:8000`;
}

function wsUrl(base: string): string {
  return base.replace(/^http/, "ws") + "/api/stream";
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const base = apiBase();
const api = new ApiClient(base);
const store = new StreamStore();
connectStream(wsUrl(base), store, (url) => new WebSocket(url));

const topdown = el<HTMLCanvasElement>("topdown");
const zstrip = el<HTMLCanvasElement>("zstrip");
const devGauge = el<HTMLCanvasElement>("dev-gauge");
const tsGauge = el<HTMLCanvasElement>("ts-gauge");
const banner = el<HTMLDivElement>("banner");
const statusLine = el<HTMLDivElement>("status-line");
const devText = el<HTMLSpanElement>("dev-text");
const tsText = el<HTMLSpanElement>("ts-text");
const clearText = el<HTMLSpanElement>("clear-text");
const feed = el<HTMLTableSectionElement>("incident-rows");
const panel = el<HTMLDivElement>("decision-panel");

let renderedVersion = -1;
let selectedPlanId: string | null = null;

function renderIncidents(): void {
  feed.innerHTML = "";
  for (const note of store.incidents.slice(0, 50)) {
    const row = document.createElement("tr");
    const tick = document.createElement("td");
    tick.textContent = String(note.tick);
    const kinds = document.createElement("td");
    kinds.textContent = note.kinds.join(", ");
    row.append(tick, kinds);
    feed.append(row);
  }
}

function planLabel(plan: PlanDoc): string {
  return `${plan.id} [${plan.status}] ${plan.trigger.kind} @ tick ${plan.trigger.tick}`;
}

function renderPanel(): void {
  panel.innerHTML = "";
  const plans = store.orderedPlans();
  if (plans.length === 0) {
    panel.textContent = "No pending plans.";
    return;
  }
  for (const plan of plans) {
    const card = document.createElement("div");
    card.className = "plan-card";
    const head = document.createElement("div");
    head.className = "plan-head";
    head.textContent = planLabel(plan);
    card.append(head);

    const rehearsal = document.createElement("div");
    if (plan.rehearsal) {
      rehearsal.textContent =
        `rehearsal: min clearance ${displayNumber(plan.rehearsal.min_clearance_m)} m, ` +
        `max tracking dev ${displayNumber(plan.rehearsal.max_pose_deviation_m)} m, ` +
        `completed ${plan.rehearsal.completed}`;
      if (!plan.rehearsal.completed) {
        const badge = document.createElement("span");
        badge.className = "badge warn";
        badge.textContent = "rehearsal failed";
        rehearsal.append(" ", badge);
      }
    } else {
      rehearsal.textContent = "rehearsal: none (empty candidate)";
    }
    card.append(rehearsal);

    const preview = document.createElement("div");
    preview.textContent = `candidate: ${plan.candidate_waypoints} waypoints`;
    card.append(preview);

    if (plan.decision) {
      const decided = document.createElement("div");
      decided.textContent =
        `decision: ${plan.decision.verdict} by ${plan.decision.actor}` +
        (plan.decision.override ? " (override)" : "");
      card.append(decided);
    }
    if (plan.status === "deployed") {
      const chip = document.createElement("span");
      chip.className = "badge ok";
      chip.textContent = `deployed @ tick ${plan.deployed_tick}`;
      card.append(chip);
    }

    if (plan.status === "awaiting-decision") {
      selectedPlanId = selectedPlanId ?? plan.id;
      const controls = document.createElement("div");
      controls.className = "controls";
      const actor = document.createElement("input");
      actor.placeholder = "operator name";
      actor.id = `actor-${plan.id}`;
      controls.append(actor);

      let overrideBox: HTMLInputElement | null = null;
      if (needsOverride(plan)) {
        const label = document.createElement("label");
        overrideBox = document.createElement("input");
        overrideBox.type = "checkbox";
        label.append(overrideBox, " override failed rehearsal");
        controls.append(label);
      }

      const outcome = document.createElement("div");
      outcome.className = "outcome";
      const submit = async (verdict: "approve" | "reject") => {
        const result = await submitDecision(
          api,
          plan,
          verdict,
          actor.value,
          overrideBox?.checked ?? false,
        );
        if (result.kind === "conflict") {
          store.replacePlans(result.plans);
        } else if (result.kind === "applied") {
          store.ingest({ v: 1, type: "pending", plan: result.plan });
        } else {
          outcome.textContent = result.kind === "rejected-input" ? result.reason : result.message;
        }
        renderedVersion = -1; // force re-render
      };

      const approve = document.createElement("button");
      approve.textContent = "approve";
      approve.onclick = () => void submit("approve");
      const reject = document.createElement("button");
      reject.textContent = "reject";
      reject.onclick = () => void submit("reject");
      controls.append(approve, reject, outcome);
      card.append(controls);
    }
    panel.append(card);
  }
}

function render(): void {
  if (store.version === renderedVersion) {
    requestAnimationFrame(render);
    return;
  }
  renderedVersion = store.version;

  banner.hidden = store.connected;
  const frame = store.latest;
  const bounds = store.hello?.bounds;
  statusLine.textContent = frame
    ? `scenario ${store.hello?.scenario ?? "?"} | tick ${frame.tick} | ` +
      `state ${store.terminal ?? "running"}`
    : "waiting for stream";
  if (frame && bounds) {
    devText.textContent = `${displayNumber(frame.dev_pos_m)} m (bound ${bounds.delta_q_m})`;
    tsText.textContent = `${displayNumber(frame.dev_ts_ms)} ms (bound ${bounds.delta_alpha_ms})`;
    clearText.textContent = `${displayNumber(frame.clearance_min_m)} m`;
    drawGauge(devGauge, frame.dev_pos_m, bounds.delta_q_m);
    drawGauge(tsGauge, frame.dev_ts_ms, bounds.delta_alpha_ms);
  }
  drawTopDown(topdown, store);
  drawZStrip(zstrip, store);
  renderIncidents();
  renderPanel();
  requestAnimationFrame(render);
}

requestAnimationFrame(render);
