"""HTTP/WebSocket service: live twin state, metrics, and decision endpoints.

The engine runs on a background thread and publishes immutable snapshots;
the service reads them and writes only through the serialized decision
path. Stream documents batch one message per 10 simulated milliseconds
(full fidelity lives in the CSV log). Wire schema is versioned ("v": 1)
and documented in docs/wire.md.
"""

import asyncio
import threading
import time

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.websockets import WebSocket, WebSocketDisconnect

from twinsync.controlblock import ScenarioEngine, metrics_report
from twinsync.errors import (
    DecisionConflictError,
    PlanNotFoundError,
    StateTransitionError,
)

__all__ = ["ServiceRuntime", "create_app"]

STREAM_WINDOW_MS = 10.0


def _plan_doc(pending) -> dict:
    candidate = pending.candidate
    preview = []
    if candidate is not None:
        stride = max(1, len(candidate.waypoints) // 200)
        preview = [
            [wp.x, wp.y, wp.z]
            for wp in candidate.waypoints[::stride]
        ]
        if [candidate.waypoints[-1].x, candidate.waypoints[-1].y, candidate.waypoints[-1].z] != preview[-1]:
            preview.append([candidate.waypoints[-1].x, candidate.waypoints[-1].y, candidate.waypoints[-1].z])
    trigger = pending.trigger
    return {
        "id": pending.id,
        "status": pending.status,
        "created_tick": pending.created_tick,
        "trigger": {
            "kind": trigger.kind,
            "measured": trigger.measured,
            "bound": trigger.bound,
            "unit": trigger.unit,
            "tick": trigger.tick,
        },
        "candidate_waypoints": len(candidate.waypoints) if candidate is not None else 0,
        "candidate_preview": preview,
        "rehearsal": None
        if pending.rehearsal is None
        else {
            "min_clearance_m": pending.rehearsal.min_clearance_m,
            "max_pose_deviation_m": pending.rehearsal.max_pose_deviation_m,
            "completed": pending.rehearsal.completed,
            "log_ref": pending.rehearsal.log_ref,
        },
        "decision": None
        if pending.decision is None
        else {
            "verdict": pending.decision.verdict,
            "actor": pending.decision.actor,
            "override": pending.decision.override,
            "time_ms": pending.decision.time_ms,
        },
        "deployed_tick": pending.deployed_tick,
    }


def _frame_doc(row) -> dict:
    return {
        "tick": row.tick,
        "ts_r_ms": row.ts_r_ms,
        "ts_v_ms": row.ts_v_ms,
        "pr": dict(zip(("x", "y", "z", "roll", "pitch", "yaw"), row.pr.as_tuple())),
        "pv": dict(zip(("x", "y", "z", "roll", "pitch", "yaw"), row.pv.as_tuple())),
        "dev_pos_m": row.dev_pos_m,
        "dev_ts_ms": row.dev_ts_ms,
        "clearance_min_m": row.clearance_min_m,
        "incidents": list(row.incident_kinds),
    }


class ServiceRuntime:
    """Owns the engine thread and the ordered stream-document buffer."""

    def __init__(self, config, speed: float = 0.0):
        self.config = config
        self.speed = speed  # simulated ms per wall ms; 0 runs flat out
        self.stop_event = threading.Event()
        self.engine = ScenarioEngine(config, interactive=True, stop_event=self.stop_event)
        self.engine.on_row = self._on_row
        self.engine.on_pending = self._on_pending
        self.engine.on_terminal = self._on_terminal
        self._lock = threading.Lock()
        self._docs: list = []
        self._window_incidents: list = []
        self._latest_row = None
        self._terminal = None
        self._started = False
        self._thread = None
        self._batch_rows = max(1, int(round(STREAM_WINDOW_MS / self.engine.tick_ms)))
        self._wall_start = None

    # -- engine listeners (engine thread) -----------------------------------

    def _on_row(self, row) -> None:
        with self._lock:
            self._latest_row = row
            if row.incident_kinds:
                self._window_incidents.append(
                    {"tick": row.tick, "kinds": list(row.incident_kinds)}
                )
            if row.tick % self._batch_rows == 0 or row.incident_kinds:
                self._docs.append(
                    {
                        "v": 1,
                        "type": "batch",
                        "tick": row.tick,
                        "frame": _frame_doc(row),
                        "incidents": self._window_incidents,
                    }
                )
                self._window_incidents = []

    def _on_pending(self, pending) -> None:
        with self._lock:
            self._docs.append({"v": 1, "type": "pending", "plan": _plan_doc(pending)})

    def _on_terminal(self, state) -> None:
        with self._lock:
            self._terminal = state
            self._docs.append({"v": 1, "type": "terminal", "state": state})

    # -- lifecycle -----------------------------------------------------------

    def _pacer(self, tick_count: int) -> None:
        if self.speed <= 0.0:
            return
        target_wall = self._wall_start + (tick_count * self.engine.tick_ms) / (
            1000.0 * self.speed
        )
        delay = target_wall - time.monotonic()
        if delay > 0:
            self.stop_event.wait(delay)

    def start_run(self) -> None:
        if self._started:
            return
        self._started = True
        self._wall_start = time.monotonic()
        self._thread = threading.Thread(
            target=self.engine.run, kwargs={"pacer": self._pacer}, daemon=True
        )
        self._thread.start()

    def shutdown(self) -> None:
        self.stop_event.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    # -- read surface ---------------------------------------------------------

    @property
    def state(self) -> str:
        with self._lock:
            if self._terminal is not None:
                return self._terminal
        if not self._started:
            return "idle"
        if self.engine.blocked:
            return "blocked"
        return "running"

    def state_doc(self) -> dict:
        with self._lock:
            row = self._latest_row
        return {
            "v": 1,
            "scenario": self.config.name,
            "terminal_state": self.state,
            "tick": row.tick if row is not None else None,
            "frame": _frame_doc(row) if row is not None else None,
        }

    def hello_doc(self) -> dict:
        goal = self.config.goal
        return {
            "v": 1,
            "type": "hello",
            "scenario": self.config.name,
            "tick_ms": self.engine.tick_ms,
            "bounds": {
                "delta_q_m": self.config.bounds.delta_q_m,
                "delta_alpha_ms": self.config.bounds.delta_alpha_ms,
                "delta_b_m": self.config.bounds.delta_b_m,
            },
            "goal": dict(
                zip(("x", "y", "z", "roll", "pitch", "yaw"), goal.target.as_tuple())
            ),
            "obstacles": [
                {
                    "cx": o.center_x,
                    "cy": o.center_y,
                    "sx": o.size_x,
                    "sy": o.size_y,
                    "h": o.height,
                }
                for o in self.config.obstacles
            ],
        }

    def metrics_doc(self) -> dict:
        rows = self.engine.log.rows[:]
        if not rows:
            return {"v": 1, "terminal_state": self.state, "metrics": None}
        from twinsync.controlblock import RunLog

        snap = RunLog(
            tick_ms=self.engine.tick_ms,
            rows=rows,
            config_fingerprint=self.config.fingerprint,
            terminal_state=self._terminal,
        )
        return {"v": 1, "terminal_state": self.state, "metrics": metrics_report(snap).to_dict()}

    def docs_since(self, cursor: int):
        with self._lock:
            return self._docs[cursor:], len(self._docs)


def create_app(runtime: ServiceRuntime) -> FastAPI:
    app = FastAPI(title="twinsync", version="1")
    app.state.runtime = runtime
    # The operator console is served separately; auth is out of scope.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/api/state")
    def get_state():
        return runtime.state_doc()

    @app.get("/api/metrics")
    def get_metrics():
        return runtime.metrics_doc()

    @app.get("/api/pending")
    def get_pending():
        plans = [_plan_doc(p) for p in runtime.engine.gate.pending_plans()]
        return {"v": 1, "pending": plans}

    @app.post("/api/pending/{plan_id}/decision")
    async def post_decision(plan_id: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        if not isinstance(body, dict):
            return JSONResponse({"error": "body must be an object"}, status_code=400)
        verdict = body.get("verdict")
        actor = body.get("actor")
        if verdict not in ("approve", "reject") or not isinstance(actor, str) or not actor:
            return JSONResponse(
                {"error": "body needs verdict approve|reject and a non-empty actor"},
                status_code=400,
            )
        engine = runtime.engine
        sim_time_ms = engine.tick_count * engine.tick_ms
        try:
            pending = engine.gate.decide(plan_id, verdict, actor, sim_time_ms)
        except PlanNotFoundError:
            return JSONResponse({"error": f"unknown plan {plan_id}"}, status_code=404)
        except DecisionConflictError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except StateTransitionError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        runtime._on_pending(pending)
        return {"v": 1, "plan": _plan_doc(pending)}

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        await ws.send_json(runtime.hello_doc())
        cursor = 0
        try:
            while True:
                docs, cursor = runtime.docs_since(cursor)
                for doc in docs:
                    await ws.send_json(doc)
                await asyncio.sleep(0.02)
        except WebSocketDisconnect:
            return

    return app
