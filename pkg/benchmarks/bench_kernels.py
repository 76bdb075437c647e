"""Compare the numba kernels with the numpy fallback.

Kernel timings call both implementations in-process.  The end-to-end rows
run a short INS filter and a small pose graph in child processes, once with
``BOXPLUS_DISABLE_NUMBA=1`` and once without, so the whole library picks up
the selected backend.

    python3 benchmarks/bench_kernels.py [--batch 4096] [--repeat 20]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from boxplus._kernels import numpy_impl
from boxplus.ins import ins_manifold

try:
    from boxplus._kernels import numba_impl
except ImportError:  # numba missing
    numba_impl = None

END_TO_END = r"""
import json, time
import numpy as np
from boxplus._kernels import BACKEND
from boxplus.ins import NoiseConfig, TrajectoryConfig, generate_trajectory, simulate_sensors, run_filter
from boxplus.posegraph import GraphConfig, generate_sphere_graph, optimize_graph

cfg = NoiseConfig()
truth = generate_trajectory(TrajectoryConfig(duration=%(duration)s))
log = simulate_sensors(truth, cfg, 0)
run_filter(log, cfg)  # warm-up (JIT compile)
t0 = time.perf_counter(); run_filter(log, cfg); ins = time.perf_counter() - t0

_, g = generate_sphere_graph(%(poses)d, 0.01, seed=0)
optimize_graph(g, GraphConfig(max_iter=1))
t0 = time.perf_counter(); optimize_graph(g, GraphConfig()); pg = time.perf_counter() - t0
print(json.dumps({"backend": BACKEND, "ins": ins, "posegraph": pg}))
"""


def kernel_cases(batch, rng):
    q = rng.standard_normal((batch, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    p = rng.standard_normal((batch, 4))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    d = rng.uniform(-1, 1, (batch, 3))
    v = rng.standard_normal((batch, 3))
    m = numpy_impl.so3_exp(d)
    ins = ins_manifold(True)
    x = ins.random(rng, batch)
    y = ins.random(rng, batch)
    dd = 0.1 * rng.standard_normal((batch, ins.dof))
    fused = ins._fused
    return {
        "quat_mul": lambda k: k.quat_mul(q, p),
        "quat_boxplus": lambda k: k.quat_boxplus(q, d),
        "quat_boxminus": lambda k: k.quat_boxminus(q, p),
        "quat_rotate": lambda k: k.quat_rotate(q, v),
        "so3_exp": lambda k: k.so3_exp(d),
        "so3_log": lambda k: k.so3_log(m),
        f"compound_boxplus (INS, {ins.dof} dof)": lambda k: k.compound_boxplus(x, dd, *fused),
        f"compound_boxminus (INS, {ins.dof} dof)": lambda k: k.compound_boxminus(y, x, *fused),
    }


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def end_to_end(duration, poses):
    code = END_TO_END % {"duration": duration, "poses": poses}
    rows = []
    for disable in ("1", ""):
        env = dict(os.environ, BOXPLUS_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--duration", type=float, default=20.0, help="INS run length in seconds")
    ap.add_argument("--poses", type=int, default=100)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    cases = kernel_cases(args.batch, rng)
    print(f"kernels, batch {args.batch}, best of {args.repeat} (ms)")
    print(f"{'kernel':34s} {'numpy':>9s} {'numba':>9s} {'speedup':>8s}")
    for name, fn in cases.items():
        t_np = best(lambda: fn(numpy_impl), args.repeat) * 1e3
        if numba_impl is None:
            print(f"{name:34s} {t_np:9.3f} {'n/a':>9s}")
            continue
        fn(numba_impl)  # compile
        t_nb = best(lambda: fn(numba_impl), args.repeat) * 1e3
        print(f"{name:34s} {t_np:9.3f} {t_nb:9.3f} {t_np / t_nb:7.1f}x")

    if args.skip_end_to_end:
        return 0
    rows = end_to_end(args.duration, args.poses)
    print()
    print(f"end to end (s): INS filter {args.duration:g} s at 100 Hz, LM on {args.poses}-pose sphere graph")
    print(f"{'backend':10s} {'ins':>9s} {'posegraph':>10s}")
    for r in rows:
        print(f"{r['backend']:10s} {r['ins']:9.3f} {r['posegraph']:10.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
