"""Deterministic blimp-in-tunnel simulator with constrained-link
teleoperation: tunnel geometry, blimp dynamics, wall-based navigation state
estimation, PID tunnel following with fail-safe modes, 8-bin situational
awareness telemetry over a lossy low-rate link, and an experiment harness."""

from .control import Mode, ModeParams, ModeValue, PidGains, PidState
from .harness import (DetectorModel, Metrics, ScenarioConfig, batch_report,
                      compute_metrics, config_from_dict, load_config,
                      run_scenario, simulate_detections)
from .perception import NavState, WallLine, classify_walls, estimate_state, extract_lines
from .sensors import AltitudeReading, RangeScan, altimeter, depth_scan
from .telemetry import (Command, LinkState, SituationalFrame, encode_awareness,
                        link_budget_ok, serialize_frame, transmit)
from .vehicle import Actuation, BlimpState, DynamicsParams, sample_airflow, step
from .world import (AirflowZone, ArtifactPlacement, Obstacle, Segment, TunnelMap,
                    build_l_track, build_s_track, build_straight, load_map, save_map)

__version__ = "0.1.0"
