"""Timing comparison of the three ways to run one replication.

* jitted kernel (default path)
* the same kernel source interpreted (TETRASDS_DISABLE_NUMBA=1 fallback)
* the object-level reference engine

The interpreted measurement runs in a subprocess so the import-time numba
switch is exercised exactly the way a numba-less install would hit it.

    python benchmarks/bench_engines.py [--scale small|full]
"""

import argparse
import dataclasses
import os
import subprocess
import sys
import time

from tetrasds.config import ScenarioConfig
from tetrasds.engine import run_reference
from tetrasds.kernel import USING_NUMBA, run_kernel
from tetrasds.scenario import build_scenario

SMALL = dict(n_responders=5, n_background=30, length_multiframes=100, warmup_multiframes=5, replications=2)
FULL = dict(n_responders=10, n_background=400, length_multiframes=1000, warmup_multiframes=50, replications=2)

_CHILD_SNIPPET = """
import dataclasses, time
from tetrasds.config import ScenarioConfig
from tetrasds.kernel import run_kernel, USING_NUMBA
from tetrasds.scenario import build_scenario
assert not USING_NUMBA
cfg = dataclasses.replace(ScenarioConfig(), **{overrides})
sc = build_scenario(cfg, 0)
t0 = time.perf_counter()
run_kernel(sc)
print(time.perf_counter() - t0)
"""


def time_call(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", choices=("small", "full"), default="small")
    args = parser.parse_args(argv)
    overrides = SMALL if args.scale == "small" else FULL

    cfg = dataclasses.replace(ScenarioConfig(), **overrides)
    sc = build_scenario(cfg, 0)
    print(f"scenario: {cfg.n_responders} responders, {cfg.n_background} background, "
          f"{cfg.length_multiframes} multiframes, {sc.n_messages} messages")

    if USING_NUMBA:
        run_kernel(sc)  # compile outside the timing
        jit_t = time_call(lambda: run_kernel(sc))
        print(f"kernel (numba)        {jit_t * 1e3:10.2f} ms")
    else:
        jit_t = None
        print("kernel (numba)        unavailable in this process")

    env = dict(os.environ, TETRASDS_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", _CHILD_SNIPPET.format(overrides=overrides)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    interp_t = float(out.stdout.strip().splitlines()[-1])
    print(f"kernel (interpreted)  {interp_t * 1e3:10.2f} ms" + (
        f"   ({interp_t / jit_t:7.1f}x slower)" if jit_t else ""))

    if args.scale == "small":
        ref_t = time_call(lambda: run_reference(sc), repeat=1)
        print(f"reference engine      {ref_t * 1e3:10.2f} ms" + (
            f"   ({ref_t / jit_t:7.1f}x slower)" if jit_t else ""))
    else:
        print("reference engine      skipped at full scale")
    return 0


if __name__ == "__main__":
    sys.exit(main())
