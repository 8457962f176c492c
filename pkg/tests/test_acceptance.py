"""Acceptance suite: one test per criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import json
import math
import socket
import threading
import time

import numpy as np
import pytest

from conftest import bundled_scenario, make_config, scenario_doc
from test_controlblock import offline_flag_oracle
from test_kinematics import fk_matrix_oracle
from twinsync.controlblock import (
    INCIDENT_OBSTACLE,
    INCIDENT_POSE,
    INCIDENT_TIMING,
    TERMINAL_COMPLETED,
    RunLog,
    ScenarioEngine,
    metrics_report,
    run_scenario,
)
from twinsync.facade.config import parse_scenario
from twinsync.kinematics import forward_kinematics, geometric_jacobian, panda_chain, solve_ik
from twinsync.robotsim import PHYSICAL
from twinsync.trajectory import min_clearance
from twinsync.twinlink import Channel, ChannelConfig

PASS = "ACCEPTANCE PASS"


def _criterion(name: str, detail: str):
    print(f"{PASS} {name}: {detail}")


class TestAcceptance:
    def test_free_motion_mae(self):
        """Gain mismatch 8 vs 10, zero-latency channels: translational MAE < 5 cm."""
        cfg = parse_scenario(bundled_scenario("free_motion.json"))
        assert cfg.physical.gain == 8.0 and cfg.virtual.gain == 10.0
        assert all(c.latency_mean_ms == 0.0 for c in cfg.channels.values())
        t0 = time.monotonic()
        log = run_scenario(cfg)
        wall = time.monotonic() - t0
        assert log.terminal_state == TERMINAL_COMPLETED
        rep = metrics_report(log)
        for axis, value in (("x", rep.mae_x), ("y", rep.mae_y), ("z", rep.mae_z)):
            assert value < 0.05, f"MAE_{axis} = {value}"
        assert wall < 10.0, f"runtime {wall:.2f}s"
        _criterion(
            "free-motion-mae",
            f"MAE x/y/z = {rep.mae_x:.4g}/{rep.mae_y:.4g}/{rep.mae_z:.4g} m "
            f"< 0.05, runtime {wall:.2f}s < 10s",
        )

    def test_actuation_delta(self):
        """16 ms injected physical actuation latency recovered as 16 +- 1 tick."""
        cfg = parse_scenario(bundled_scenario("actuation_latency.json"))
        assert cfg.physical.actuation_latency_ms == 16.0
        log = run_scenario(cfg)
        assert log.terminal_state == TERMINAL_COMPLETED
        rep = metrics_report(log)
        tick = log.tick_ms
        assert rep.actuation_delta_ms is not None
        assert abs(rep.actuation_delta_ms - 16.0) <= tick, rep.actuation_delta_ms
        _criterion(
            "actuation-delta",
            f"measured {rep.actuation_delta_ms} ms vs injected 16 ms (+-{tick} ms)",
        )

    def test_obstacle_sweeps(self):
        """Fixed-height grid and variable-height replications: clearance and MAE pattern."""
        cases = []
        for cx in (0.40, 0.45, 0.50):
            for cy in (-0.2, 0.0, 0.2):
                cases.append(("grid", {"cx": cx, "cy": cy, "sx": 0.2, "sy": 0.2, "h": 0.4}))
        for h in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6):
            cases.append(("height", {"cx": 0.5, "cy": 0.0, "sx": 0.2, "sy": 0.2, "h": h}))
        worst_y = 0.0
        for label, obs_doc in cases:
            cfg = make_config(hitl_mode="auto-approve", obstacles=[obs_doc])
            engine = ScenarioEngine(cfg)
            log = engine.run()
            assert log.terminal_state == TERMINAL_COMPLETED, (label, obs_doc)
            rep = metrics_report(log)
            plan_clear = min_clearance(engine.plan, cfg.obstacles[0])
            assert plan_clear >= cfg.bounds.delta_b_m, (label, obs_doc, plan_clear)
            assert rep.mae_y > max(rep.mae_x, rep.mae_z), (label, obs_doc, rep)
            assert rep.mae_y <= 0.12, (label, obs_doc, rep.mae_y)
            worst_y = max(worst_y, rep.mae_y)
        _criterion(
            "obstacle-sweeps",
            f"{len(cases)} cases: min_clearance >= delta_b, MAE_y dominant, "
            f"max MAE_y {worst_y:.4g} <= 0.12 m",
        )

    def test_monitor_oracle_equivalence(self, tmp_path):
        """20 randomized scenarios: online incident ticks == offline CSV recomputation."""
        rng = np.random.default_rng(2024)
        checked_flags = 0
        for case in range(20):
            async_ch = lambda: {
                "latency_ms": float(rng.uniform(0, 6)),
                "jitter_ms": 0.0,
                "drop_prob": float(rng.uniform(0, 0.25)),
                "mode": "asynchronous",
            }
            channels = {name: async_ch() for name in
                        ("cmd_physical", "cmd_virtual", "state_physical", "state_virtual")}
            for name in ("state_physical", "state_virtual"):
                lat = channels[name]["latency_ms"]
                channels[name]["jitter_ms"] = float(rng.uniform(0, lat))
            doc = scenario_doc(
                name=f"random-{case}",
                seed=int(rng.integers(0, 2**31 - 1)),
                physical={
                    "gain": float(rng.uniform(6, 14)),
                    "clock_offset_ms": float(rng.uniform(-4, 4)),
                },
                virtual={
                    "gain": float(rng.uniform(6, 14)),
                    "clock_offset_ms": float(rng.uniform(-4, 4)),
                },
                goal={
                    "target": {"x": 0.45, "y": 0.05, "z": 0.3},
                    "max_step_m": 0.01,
                },
                bounds={
                    "delta_q_m": float(rng.uniform(0.002, 0.02)),
                    "delta_alpha_ms": float(rng.uniform(1.0, 6.0)),
                    "delta_b_m": float(rng.uniform(0.03, 0.08)),
                },
                channels=channels,
                max_ticks=2500,
            )
            doc["initial_joints"] = [-0.338037, 0.347438, -0.400936, -1.986118,
                                     -0.047334, 2.27161, 0.79]
            doc["goal"]["target"].update(
                {"roll": 2.993759, "pitch": -0.090516, "yaw": -1.471808}
            )
            if case % 2 == 0:
                doc["obstacles"] = [
                    {
                        "cx": 0.45,
                        "cy": float(rng.uniform(-0.1, 0.0)),
                        "sx": 0.15,
                        "sy": 0.15,
                        "h": float(rng.uniform(0.0, 0.5)),
                    }
                ]
            cfg = parse_scenario(doc)
            log = run_scenario(cfg)
            path = tmp_path / f"random-{case}.csv"
            log.write_csv(path)
            parsed = RunLog.from_csv(path)
            oracle = offline_flag_oracle(parsed.rows, cfg.bounds, cfg.obstacles)
            for kind in (INCIDENT_POSE, INCIDENT_TIMING, INCIDENT_OBSTACLE):
                online = {r.tick for r in parsed.rows if kind in r.incident_kinds}
                assert online == oracle[kind], (case, kind)
                checked_flags += len(online)
        _criterion(
            "monitor-oracle-equivalence",
            f"20 randomized scenarios, {checked_flags} flagged ticks, exact set equality",
        )

    def test_kinematics_suite(self):
        """FK vs matrix oracle <= 1e-9; Jacobian vs FD <= 1e-5; IK round trip <= 1e-4 x1000."""
        panda = panda_chain()
        rng = np.random.default_rng(99)
        worst_fk = 0.0
        for q in [np.zeros(7)] + [
            rng.uniform(panda.joint_limits[:, 0], panda.joint_limits[:, 1])
            for _ in range(100)
        ]:
            pose = forward_kinematics(panda, q)
            T = fk_matrix_oracle(panda, q)
            worst_fk = max(worst_fk, float(np.max(np.abs(pose.position() - T[:3, 3]))))
        assert worst_fk <= 1e-9

        worst_jac = 0.0
        h = 1e-6
        for _ in range(100):
            q = rng.uniform(panda.joint_limits[:, 0], panda.joint_limits[:, 1])
            J = geometric_jacobian(panda, q)
            for i in range(7):
                qp, qm = q.copy(), q.copy()
                qp[i] += h
                qm[i] -= h
                fd = (
                    forward_kinematics(panda, qp).position()
                    - forward_kinematics(panda, qm).position()
                ) / (2 * h)
                worst_jac = max(worst_jac, float(np.max(np.abs(J[0:3, i] - fd))))
        assert worst_jac <= 1e-5

        home = np.array([0.0, -0.3, 0.0, -2.2, 0.0, 2.0, 0.79])
        worst_ik = 0.0
        for _ in range(1000):
            q_true = rng.uniform(panda.joint_limits[:, 0], panda.joint_limits[:, 1])
            target = forward_kinematics(panda, q_true)
            q = solve_ik(panda, target, home, tol=1e-4, max_iter=300)
            worst_ik = max(worst_ik, forward_kinematics(panda, q).distance_to(target))
        assert worst_ik <= 1e-4
        _criterion(
            "kinematics-suite",
            f"FK {worst_fk:.2e} <= 1e-9 m; Jacobian {worst_jac:.2e} <= 1e-5; "
            f"IK 1000/1000 residual {worst_ik:.2e} <= 1e-4 m",
        )

    def test_determinism_bit_identical_csv(self, tmp_path):
        """Equal seeds: bit-identical CSV logs, including jittery channels."""
        import io

        docs = [
            bundled_scenario("free_motion.json"),
            scenario_doc(
                name="jittery",
                channels={
                    "cmd_physical": {"latency_ms": 5.0, "jitter_ms": 3.0,
                                      "drop_prob": 0.1, "mode": "asynchronous"},
                    "state_physical": {"latency_ms": 4.0, "jitter_ms": 2.0,
                                        "drop_prob": 0.05, "mode": "asynchronous"},
                },
                obstacles=[{"cx": 0.5, "cy": 0.0, "sx": 0.2, "sy": 0.2, "h": 0.4}],
                max_ticks=4000,
            ),
        ]
        total = 0
        for doc in docs:
            blobs = []
            for _ in range(2):
                buf = io.StringIO()
                run_scenario(parse_scenario(doc)).write_csv_file(buf)
                blobs.append(buf.getvalue())
            assert blobs[0] == blobs[1], doc.get("name")
            total += len(blobs[0])
        _criterion(
            "determinism", f"2 scenarios x 2 runs, bit-identical CSV ({total} bytes compared)"
        )

    def test_hitl_safety_gate(self):
        """Gate audit: zero physical commands between anomaly and approval;
        reject keeps the run blocked; CLI decide approve resumes to completion."""
        # Part 1: audit over the auto-approved pipeline (event order).
        cfg = make_config(
            hitl_mode="auto-approve",
            obstacles=[{"cx": 0.5, "cy": 0.0, "sx": 0.2, "sy": 0.2, "h": 0.4}],
        )
        log = ScenarioEngine(cfg).run()
        kinds = [e.kind for e in log.events]
        raise_idx = kinds.index("pending-raised")
        deploy_idx = kinds.index("plan-deployed")
        applied_in_window = [
            e
            for e in log.events[raise_idx:deploy_idx]
            if e.kind == "command-applied" and e.detail["twin"] == PHYSICAL
        ]
        assert applied_in_window == []

        # Part 2: reject keeps the run blocked (interactive service runtime).
        from fastapi.testclient import TestClient

        from twinsync.facade.service import ServiceRuntime, create_app

        runtime = ServiceRuntime(
            make_config(
                hitl_mode="gate",
                obstacles=[{"cx": 0.5, "cy": 0.0, "sx": 0.2, "sy": 0.2, "h": 0.4}],
            ),
            speed=0.0,
        )
        runtime.start_run()
        try:
            client = TestClient(create_app(runtime))
            deadline = time.monotonic() + 30
            while time.monotonic() < deadline:
                if client.get("/api/state").json()["terminal_state"] == "blocked":
                    break
                time.sleep(0.02)
            plan_id = client.get("/api/pending").json()["pending"][0]["id"]
            client.post(
                f"/api/pending/{plan_id}/decision",
                json={"verdict": "reject", "actor": "operator-a"},
            )
            time.sleep(0.3)
            assert client.get("/api/state").json()["terminal_state"] == "blocked"
        finally:
            runtime.shutdown()

        # Part 3: CLI decide approve over HTTP resumes and completes.
        import uvicorn
        from click.testing import CliRunner

        from twinsync.facade.cli import main as cli_main

        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sock.close()
        runtime = ServiceRuntime(
            make_config(
                hitl_mode="gate",
                obstacles=[{"cx": 0.5, "cy": 0.0, "sx": 0.2, "sy": 0.2, "h": 0.4}],
            ),
            speed=0.0,
        )
        app = create_app(runtime)
        server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
        )
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        try:
            while not server.started:
                time.sleep(0.02)
            runtime.start_run()
            import httpx

            base = f"http://127.0.0.1:{port}"
            deadline = time.monotonic() + 30
            while time.monotonic() < deadline:
                if httpx.get(base + "/api/state").json()["terminal_state"] == "blocked":
                    break
                time.sleep(0.02)
            plan_id = httpx.get(base + "/api/pending").json()["pending"][0]["id"]
            result = CliRunner().invoke(
                cli_main,
                ["decide", plan_id, "approve", "--actor", "operator-b", "--url", base],
            )
            assert result.exit_code == 0, result.output
            deadline = time.monotonic() + 30
            final = None
            while time.monotonic() < deadline:
                final = httpx.get(base + "/api/state").json()["terminal_state"]
                if final == "completed":
                    break
                time.sleep(0.05)
            assert final == "completed"
        finally:
            server.should_exit = True
            runtime.shutdown()
            thread.join(timeout=5)
        _criterion(
            "hitl-safety-gate",
            "zero physical commands in anomaly->approval window; reject stays blocked; "
            "CLI approve resumed to completion",
        )

    def test_channel_statistics(self):
        """drop_prob 0.1 over 10000 sends: within 3 sigma of the binomial mean."""
        channel = Channel(ChannelConfig(drop_prob=0.1, seed=20240601))
        n, p = 10_000, 0.1
        for i in range(n):
            channel.send(i, float(i))
        mean = n * p
        sigma = math.sqrt(n * p * (1 - p))
        deviation = abs(channel.dropped_count - mean)
        assert deviation <= 3 * sigma
        _criterion(
            "channel-statistics",
            f"dropped {channel.dropped_count} vs mean {mean:.0f}, "
            f"|dev| {deviation:.0f} <= 3 sigma ({3 * sigma:.0f})",
        )
