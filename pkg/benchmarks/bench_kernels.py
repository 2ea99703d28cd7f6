"""Compare the numba kernels against the interpreted fallback.

Each backend runs in its own interpreter (the switch is read at import
time), once with the default environment and once with
WSL_DISABLE_NUMBA=1. Timings exclude the first call, so JIT compilation
is not counted.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from wannier_stark import SystemParams, integrate, _accel, _kernels
from wannier_stark.threshold import critical_width_numeric, make_flux_sample

repeat = int(sys.argv[1])
p = SystemParams(2.0, 1.0)
fs = make_flux_sample(p, 1e-2, y_unstable=1e-3)
y = fs.state.as_vector()
out = np.empty(12)

def rhs_loop():
    for _ in range(20000):
        _kernels.rhs(y, 2.0, 1.0, out)

def trajectory():
    integrate(fs.state, p)

def width():
    critical_width_numeric(p, 1e-2, rel_tol=1e-3)

res = {"backend": _accel.backend()}
for name, fn, n in [("rhs x20000", rhs_loop, repeat), ("trajectory", trajectory, repeat),
                    ("critical width", width, 1)]:
    fn()  # warm-up / compile
    ts = []
    for _ in range(n):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    res[name] = min(ts)
print(json.dumps(res))
"""


def run_backend(disable, repeat):
    env = dict(os.environ)
    env.pop("WSL_DISABLE_NUMBA", None)
    if disable:
        env["WSL_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write raw timings here")
    args = ap.parse_args(argv)

    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    print(f"{'kernel':<16}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:<16}{fast[key]:>11.4f}s{slow[key]:>11.4f}s{slow[key] / fast[key]:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"accelerated": fast, "fallback": slow}, fh, indent=2)


if __name__ == "__main__":
    main()
