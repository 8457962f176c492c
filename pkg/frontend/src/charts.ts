/** Canvas renderers: top-down X-Y plot, Z strip chart, bound gauges. */

import type { StreamStore } from "./stream.js";

const PHYS_COLOR = "#2563eb";
const VIRT_COLOR = "#f59e0b";
const OBSTACLE_FILL = "rgba(220, 38, 38, 0.25)";
const OBSTACLE_EDGE = "#dc2626";
const GOAL_COLOR = "#16a34a";

interface WorldWindow {
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

function worldWindow(store: StreamStore): WorldWindow {
  // Fixed frame around the arm workspace keeps the view stable.
  const win: WorldWindow = { xMin: -0.1, xMax: 0.9, yMin: -0.6, yMax: 0.6 };
  for (const obs of store.hello?.obstacles ?? []) {
    win.xMin = Math.min(win.xMin, obs.cx - obs.sx);
    win.xMax = Math.max(win.xMax, obs.cx + obs.sx);
    win.yMin = Math.min(win.yMin, obs.cy - obs.sy);
    win.yMax = Math.max(win.yMax, obs.cy + obs.sy);
  }
  return win;
}

export function drawTopDown(canvas: HTMLCanvasElement, store: StreamStore): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  const win = worldWindow(store);
  const sx = (x: number) => ((x - win.xMin) / (win.xMax - win.xMin)) * width;
  const sy = (y: number) => height - ((y - win.yMin) / (win.yMax - win.yMin)) * height;

  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#d4d4d8";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);

  for (const obs of store.hello?.obstacles ?? []) {
    const x0 = sx(obs.cx - obs.sx / 2);
    const y0 = sy(obs.cy + obs.sy / 2);
    const w = sx(obs.cx + obs.sx / 2) - x0;
    const h = sy(obs.cy - obs.sy / 2) - y0;
    ctx.fillStyle = OBSTACLE_FILL;
    ctx.strokeStyle = OBSTACLE_EDGE;
    ctx.fillRect(x0, y0, w, h);
    ctx.strokeRect(x0, y0, w, h);
  }

  const goal = store.hello?.goal;
  if (goal) {
    ctx.fillStyle = GOAL_COLOR;
    ctx.beginPath();
    ctx.arc(sx(goal.x), sy(goal.y), 5, 0, 2 * Math.PI);
    ctx.fill();
  }

  for (const [trail, color] of [
    [store.trailPhysical, PHYS_COLOR],
    [store.trailVirtual, VIRT_COLOR],
  ] as const) {
    if (trail.length === 0) {
      continue;
    }
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(sx(trail[0].x), sy(trail[0].y));
    for (const p of trail) {
      ctx.lineTo(sx(p.x), sy(p.y));
    }
    ctx.stroke();
    const tip = trail[trail.length - 1];
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(sx(tip.x), sy(tip.y), 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function drawZStrip(canvas: HTMLCanvasElement, store: StreamStore): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#d4d4d8";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  const trails = [store.trailPhysical, store.trailVirtual];
  const all = trails.flat();
  if (all.length === 0) {
    return;
  }
  const tickMin = Math.min(...trails.map((t) => t[0]?.tick ?? 0));
  const tickMax = Math.max(...trails.map((t) => t[t.length - 1]?.tick ?? 1));
  let zMin = Math.min(...all.map((p) => p.z));
  let zMax = Math.max(...all.map((p) => p.z));
  if (zMax - zMin < 0.05) {
    zMax += 0.05;
    zMin -= 0.05;
  }
  const sx = (t: number) => ((t - tickMin) / Math.max(1, tickMax - tickMin)) * width;
  const sy = (z: number) => height - ((z - zMin) / (zMax - zMin)) * height;
  for (const [trail, color] of [
    [store.trailPhysical, PHYS_COLOR],
    [store.trailVirtual, VIRT_COLOR],
  ] as const) {
    if (trail.length === 0) {
      continue;
    }
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.2;
    ctx.beginPath();
    ctx.moveTo(sx(trail[0].tick), sy(trail[0].z));
    for (const p of trail) {
      ctx.lineTo(sx(p.tick), sy(p.z));
    }
    ctx.stroke();
  }
}

/** Horizontal bar showing value against its bound; red at or past it. */
export function drawGauge(
  canvas: HTMLCanvasElement,
  value: number | null,
  bound: number,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#e4e4e7";
  ctx.fillRect(0, 0, width, height);
  if (value === null) {
    return;
  }
  const frac = Math.min(1.0, value / (bound * 1.25));
  const violating = value >= bound;
  ctx.fillStyle = violating ? "#dc2626" : "#2563eb";
  ctx.fillRect(0, 0, frac * width, height);
  const mark = (bound / (bound * 1.25)) * width;
  ctx.strokeStyle = "#18181b";
  ctx.beginPath();
  ctx.moveTo(mark, 0);
  ctx.lineTo(mark, height);
  ctx.stroke();
}
