"""twinsync: deterministic digital-twin synchronization engine.

Runs a simulated physical/virtual robot-arm pair under a bidirectional
control loop, monitors pose/timestamp/obstacle-clearance bounds, gates
anomaly recovery through human approval, and exports replayable CSV traces.
"""

__version__ = "0.1.0"
