"""Loosely coupled INS-GPS filter on R^3 x SO(3) x R^3, with an optional GPS bias state."""
from .evaluate import EvalReport, RunErrors, aggregate, evaluate, nees_band, run_errors, truth_states, write_report
from .filter import (
    FilterTrace, gps_measurement, gps_noise_cov, initial_belief, ins_manifold, ins_process, process_noise_cov,
    run_filter,
)
from .montecarlo import MonteCarloConfig, run_monte_carlo, run_one, thread_cap
from .sim import NoiseConfig, SimLog, read_simlog, simulate_sensors, write_simlog
from .trajectory import GRAVITY, TrajectoryConfig, Truth, generate_trajectory

__all__ = [
    "EvalReport", "RunErrors", "aggregate", "evaluate", "nees_band", "run_errors", "truth_states", "write_report",
    "FilterTrace", "gps_measurement", "gps_noise_cov", "initial_belief", "ins_manifold", "ins_process",
    "process_noise_cov", "run_filter", "MonteCarloConfig", "run_monte_carlo", "run_one", "thread_cap",
    "NoiseConfig", "SimLog", "read_simlog", "simulate_sensors", "write_simlog", "GRAVITY", "TrajectoryConfig",
    "Truth", "generate_trajectory",
]
