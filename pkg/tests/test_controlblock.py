import math

import numpy as np
import pytest

from conftest import make_config, scenario_doc
from twinsync.controlblock import (
    INCIDENT_OBSTACLE,
    INCIDENT_POSE,
    INCIDENT_TIMEOUT,
    INCIDENT_TIMING,
    TERMINAL_BLOCKED,
    TERMINAL_COMPLETED,
    LogRow,
    RunLog,
    ScenarioEngine,
    actuation_delta,
    check_obstacle,
    check_pose_deviation,
    check_timing,
    mae,
    metrics_report,
    run_scenario,
)
from twinsync.errors import UndefinedMetricError
from twinsync.kinematics import Pose, wrap_angle
from twinsync.trajectory import Obstacle


class TestChecks:
    def test_identical_poses_no_incident(self):
        p = Pose(0.1, 0.2, 0.3)
        assert check_pose_deviation(p, p, 0.01) is None

    def test_pose_boundary_inclusive(self):
        inc = check_pose_deviation(Pose(0, 0, 0), Pose(0.05, 0, 0), 0.05)
        assert inc is not None and inc.kind == INCIDENT_POSE
        assert inc.measured == pytest.approx(0.05)

    def test_timing_equal_none(self):
        assert check_timing(100.0, 100.0, 2.0) is None

    def test_timing_absolute_and_inclusive(self):
        assert check_timing(100.0, 103.0, 2.0).measured == 3.0
        assert check_timing(103.0, 100.0, 2.0) is not None
        assert check_timing(100.0, 102.0, 2.0) is not None

    def test_obstacle_far_none(self):
        obs = Obstacle(0.5, 0.0, 0.2, 0.2, 0.4)
        p = Pose(0.5, 0.0, 1.4)
        assert check_obstacle(p, p, obs, 0.05) is None

    def test_obstacle_boundary_inclusive(self):
        obs = Obstacle(0.5, 0.0, 0.2, 0.2, 0.4)
        near = Pose(0.5, 0.0, 0.45)  # exactly delta_b above the top
        far = Pose(0.5, 0.0, 1.0)
        inc = check_obstacle(near, far, obs, 0.05)
        assert inc is not None and inc.kind == INCIDENT_OBSTACLE


def synthetic_log(rows):
    return RunLog(tick_ms=1.0, rows=rows)


def make_row(tick, pr, pv, ts_r=None, ts_v=None, kinds=()):
    return LogRow(
        tick=tick,
        ts_r_ms=float(tick) if ts_r is None else ts_r,
        ts_v_ms=float(tick) if ts_v is None else ts_v,
        pr=pr,
        pv=pv,
        dev_pos_m=pr.distance_to(pv),
        dev_ts_ms=abs((float(tick) if ts_r is None else ts_r) - (float(tick) if ts_v is None else ts_v)),
        clearance_min_m=None,
        incident_kinds=tuple(kinds),
    )


class TestMae:
    def test_identical_traces_zero(self):
        rows = [make_row(t, Pose(0.1, 0.2, 0.3), Pose(0.1, 0.2, 0.3)) for t in range(50)]
        log = synthetic_log(rows)
        for axis in ("x", "y", "z", "roll", "pitch", "yaw"):
            assert mae(log, axis) == 0.0

    def test_constant_offset(self):
        rows = [make_row(t, Pose(1.0, 0, 0), Pose(0.9, 0, 0)) for t in range(100)]
        assert mae(synthetic_log(rows), "x") == pytest.approx(0.1, abs=1e-15)

    def test_rotational_uses_wrapped_difference(self):
        rows = [make_row(t, Pose(0, 0, 0, yaw=3.1), Pose(0, 0, 0, yaw=-3.1)) for t in range(10)]
        # Unwrapped difference would be 6.2; the short way is ~0.083.
        assert mae(synthetic_log(rows), "yaw") == pytest.approx(
            abs(wrap_angle(6.2)), abs=1e-12
        )

    def test_random_trace_vs_recomputation_oracle(self):
        rng = np.random.default_rng(17)
        rows = []
        for t in range(1000):
            pr = Pose(*rng.uniform(-1, 1, 3), *rng.uniform(-3, 3, 3))
            pv = Pose(*rng.uniform(-1, 1, 3), *rng.uniform(-3, 3, 3))
            rows.append(make_row(t, pr, pv))
        log = synthetic_log(rows)
        # Independent vectorized recomputation.
        xr = np.array([r.pr.x for r in rows])
        xv = np.array([r.pv.x for r in rows])
        assert abs(mae(log, "x") - float(np.mean(np.abs(xr - xv)))) <= 1e-12
        yr = np.array([r.pr.yaw for r in rows])
        yv = np.array([r.pv.yaw for r in rows])
        dif = np.abs(np.arctan2(np.sin(yr - yv), np.cos(yr - yv)))
        assert abs(mae(log, "yaw") - float(np.mean(dif))) <= 1e-12

    def test_empty_log_undefined(self):
        with pytest.raises(UndefinedMetricError):
            mae(synthetic_log([]), "x")


def step_rows(onset_r, onset_v, n=60):
    """Twins stationary until their onset ticks, then drifting."""
    rows = []
    for t in range(n):
        xr = 0.0 if t < onset_r else 0.001 * (t - onset_r + 1)
        xv = 0.0 if t < onset_v else 0.001 * (t - onset_v + 1)
        rows.append(make_row(t, Pose(xr, 0, 0), Pose(xv, 0, 0)))
    return synthetic_log(rows)


class TestActuationDelta:
    def test_equal_latencies_zero(self):
        assert actuation_delta(step_rows(10, 10)) == 0.0

    def test_sixteen_ms_injection(self):
        assert actuation_delta(step_rows(26, 10)) == 16.0

    def test_20_vs_4(self):
        assert actuation_delta(step_rows(30, 14)) == 16.0

    def test_no_motion_undefined(self):
        rows = [make_row(t, Pose(0, 0, 0), Pose(0, 0, 0)) for t in range(10)]
        with pytest.raises(UndefinedMetricError):
            actuation_delta(synthetic_log(rows))


class TestRunScenario:
    def test_matched_twins_reach_goal_no_incidents(self):
        cfg = make_config(physical={"gain": 10.0}, virtual={"gain": 10.0})
        log = run_scenario(cfg)
        assert log.terminal_state == TERMINAL_COMPLETED
        rep = metrics_report(log)
        assert sum(rep.incident_counts.values()) == 0
        goal = Pose(0.45, 0.4, 0.3)
        last = log.rows[-1]
        assert last.pr.distance_to(goal) <= 1e-3
        assert last.pv.distance_to(goal) <= 1e-3

    def test_gain_mismatch_completes_with_deviation_trace(self):
        cfg = make_config()
        log = run_scenario(cfg)
        assert log.terminal_state == TERMINAL_COMPLETED
        rep = metrics_report(log)
        assert rep.incident_counts[INCIDENT_POSE] == 0
        assert max(r.dev_pos_m for r in log.rows) > 0.0

    def test_severed_command_channel_blocks_with_timeout(self):
        cfg = make_config(
            hitl_mode="gate", channels={"cmd_physical": {"drop_prob": 1.0}}
        )
        log = run_scenario(cfg)
        assert log.terminal_state == TERMINAL_BLOCKED
        assert metrics_report(log).incident_counts[INCIDENT_TIMEOUT] >= 1

    def test_clock_offset_fires_timing_every_tick(self):
        cfg = make_config(
            physical={"gain": 10.0, "clock_offset_ms": 3.0},
            virtual={"gain": 10.0},
            bounds={"delta_q_m": 0.15, "delta_alpha_ms": 2.0, "delta_b_m": 0.05},
        )
        log = run_scenario(cfg)
        assert all(INCIDENT_TIMING in r.incident_kinds for r in log.rows)

    def test_goal_at_start_completes_immediately(self):
        from conftest import SWEEP_ORIENT

        cfg = make_config(
            goal={"target": dict(x=0.45, y=-0.4, z=0.3, **SWEEP_ORIENT), "max_step_m": 0.01}
        )
        log = run_scenario(cfg)
        assert log.terminal_state == TERMINAL_COMPLETED
        assert len(log.rows) <= 2

    def test_watchdog_terminal_state(self):
        cfg = make_config(max_ticks=50)
        log = run_scenario(cfg)
        assert log.terminal_state == "watchdog-timeout"
        assert len(log.rows) == 51  # rows 0..max_ticks inclusive

    def test_rows_strictly_ordered_one_per_tick(self):
        log = run_scenario(make_config(max_ticks=300))
        assert [r.tick for r in log.rows] == list(range(len(log.rows)))

    def test_determinism_same_seed_same_rows(self):
        cfg = make_config(
            channels={
                "state_physical": {"latency_ms": 4.0, "jitter_ms": 2.0, "mode": "asynchronous"},
                "cmd_physical": {"latency_ms": 2.0, "jitter_ms": 1.0, "mode": "asynchronous"},
            }
        )
        log1 = run_scenario(cfg)
        log2 = run_scenario(cfg)
        assert log1.rows == log2.rows

    def test_loop_safety_no_commands_while_blocked(self):
        cfg = make_config(
            hitl_mode="gate",
            obstacles=[{"cx": 0.5, "cy": 0.0, "sx": 0.2, "sy": 0.2, "h": 0.4}],
        )
        log = run_scenario(cfg)
        assert log.terminal_state == TERMINAL_BLOCKED
        raise_tick = log.events_of("pending-raised")[0].tick
        sends = [e for e in log.events_of("command-sent") if e.tick >= raise_tick]
        assert sends == []


class TestCsvRoundTrip:
    def test_round_trip_preserves_rows_bitwise(self, tmp_path):
        cfg = make_config(
            physical={"gain": 8.0, "clock_offset_ms": 1.5},
            bounds={"delta_q_m": 0.002, "delta_alpha_ms": 1.0, "delta_b_m": 0.05},
            max_ticks=400,
        )
        log = run_scenario(cfg)
        path = tmp_path / "trace.csv"
        log.write_csv(path)
        back = RunLog.from_csv(path)
        assert back.tick_ms == log.tick_ms
        assert back.rows == log.rows

    def test_metrics_pure_function_of_log(self, tmp_path):
        cfg = make_config(max_ticks=800)
        log = run_scenario(cfg)
        path = tmp_path / "trace.csv"
        log.write_csv(path)
        rep_live = metrics_report(log)
        rep_csv = metrics_report(RunLog.from_csv(path))
        assert rep_live.numeric_fields() == rep_csv.numeric_fields()

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope,columns\n1,2\n")
        with pytest.raises(Exception):
            RunLog.from_csv(path)


def offline_flag_oracle(rows, bounds, obstacles):
    """Independent numpy recomputation of the three value-based flags."""
    flags = {INCIDENT_POSE: set(), INCIDENT_TIMING: set(), INCIDENT_OBSTACLE: set()}
    for row in rows:
        dp = np.linalg.norm(np.array([row.pr.x - row.pv.x, row.pr.y - row.pv.y, row.pr.z - row.pv.z]))
        if dp >= bounds.delta_q_m:
            flags[INCIDENT_POSE].add(row.tick)
        if abs(row.ts_r_ms - row.ts_v_ms) >= bounds.delta_alpha_ms:
            flags[INCIDENT_TIMING].add(row.tick)
        if obstacles:
            best = math.inf
            for o in obstacles:
                for p in (row.pr, row.pv):
                    dx = max(abs(p.x - o.center_x) - o.size_x / 2, 0.0)
                    dy = max(abs(p.y - o.center_y) - o.size_y / 2, 0.0)
                    dz = max(p.z - o.height, 0.0, -p.z)
                    best = min(best, float(np.sqrt(dx * dx + dy * dy + dz * dz)))
            if best <= bounds.delta_b_m:
                flags[INCIDENT_OBSTACLE].add(row.tick)
    return flags


class TestMonitorOracle:
    def test_online_flags_equal_offline_recomputation(self, tmp_path):
        cfg = make_config(
            physical={"gain": 8.0, "clock_offset_ms": 2.5},
            virtual={"gain": 10.0},
            bounds={"delta_q_m": 0.0015, "delta_alpha_ms": 2.0, "delta_b_m": 0.05},
            obstacles=[{"cx": 0.5, "cy": 0.0, "sx": 0.2, "sy": 0.2, "h": 0.4}],
        )
        log = run_scenario(cfg)
        path = tmp_path / "trace.csv"
        log.write_csv(path)
        parsed = RunLog.from_csv(path)
        oracle = offline_flag_oracle(parsed.rows, cfg.bounds, cfg.obstacles)
        for kind in (INCIDENT_POSE, INCIDENT_TIMING, INCIDENT_OBSTACLE):
            online = {r.tick for r in parsed.rows if kind in r.incident_kinds}
            assert online == oracle[kind], f"flag mismatch for {kind}"
        # Incident objects agree with row flags too.
        for kind in (INCIDENT_POSE, INCIDENT_TIMING, INCIDENT_OBSTACLE):
            from_objects = {i.tick for i in log.incidents if i.kind == kind}
            assert from_objects == oracle[kind]
