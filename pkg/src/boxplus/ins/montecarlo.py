"""Monte Carlo driver for the INS-GPS filter."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..stats import ManifoldGaussian, sample
from .evaluate import EvalReport, RunErrors, aggregate, run_errors, truth_states
from .filter import initial_belief, ins_manifold, run_filter
from .sim import NoiseConfig, simulate_sensors
from .trajectory import TrajectoryConfig, generate_trajectory

__all__ = ["MonteCarloConfig", "run_one", "run_monte_carlo", "thread_cap"]


@dataclass(frozen=True)
class MonteCarloConfig:
    runs: int = 25
    seed: int = 0
    trajectory: TrajectoryConfig = TrajectoryConfig()
    noise: NoiseConfig = NoiseConfig()
    perturb_initial: bool = True


def thread_cap():
    """Worker count from ``MF_THREADS`` (default 1, serial)."""
    try:
        return max(1, int(os.environ.get("MF_THREADS", "1")))
    except ValueError:
        return 1


def _initial(cfg, rng, perturb):
    """Initial belief; its mean is the true start state moved by a draw from the prior.

    The bias block is left at zero because the true bias itself is drawn from
    the prior, which already makes the initial bias error match it.
    """
    belief = initial_belief(cfg)
    if not perturb:
        return belief
    m = belief.manifold
    cov = belief.cov.copy()
    if cfg.colored:
        s = m.tangent_slice("bias")
        cov[s, :] = 0.0
        cov[:, s] = 0.0
    mean = sample(ManifoldGaussian(m, m.identity(), cov), rng)
    return type(belief)(m, mean, belief.cov)


def run_one(truth, noise, seed, perturb_initial=True):
    """Simulate sensors, run the filter and return its error record."""
    sensor_seq, init_seq = np.random.SeedSequence(seed).spawn(2)
    log = simulate_sensors(truth, noise, seed, rng=np.random.default_rng(sensor_seq))
    belief = _initial(noise, np.random.default_rng(init_seq), perturb_initial)
    trace = run_filter(log, noise, belief)
    return run_errors(trace, truth_states(log, noise.colored))


def _job(args):
    return run_one(*args)


def run_monte_carlo(cfg=None, threads=None, progress=None) -> EvalReport:
    """Run ``cfg.runs`` seeded filter runs (seeds ``seed .. seed+runs-1``) and aggregate."""
    cfg = cfg or MonteCarloConfig()
    truth = generate_trajectory(cfg.trajectory)
    jobs = [(truth, cfg.noise, cfg.seed + i, cfg.perturb_initial) for i in range(cfg.runs)]
    threads = thread_cap() if threads is None else threads
    results: list[RunErrors] = []
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_job, jobs))
    else:
        for i, job in enumerate(jobs):
            results.append(_job(job))
            if progress:
                progress(i + 1, len(jobs))
    return aggregate(truth.t, results, ins_manifold(cfg.noise.colored))
