"""Compare the numba and pure-Python backends.

Each backend runs in its own interpreter because the choice is fixed at import
time by ``REVGEOM_PURE_PYTHON``.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, math, time
import numpy as np
from revgeom import _jit
from revgeom.distances import dist
from revgeom.geodesics import GeodesicState, SurfacePoint as P, integrate_geodesic
from revgeom.profiles import load_surface

model = load_surface("ellipsoid:1,2")
repeat = int(REPEAT)
rng = np.random.default_rng(7)
start = GeodesicState.at(model, 1.0, 0.0, 0.7)
pairs = [(P(*rng.uniform((0.2, 0), (2.8, 2 * math.pi))), P(*rng.uniform((0.2, 0), (2.8, 2 * math.pi))))
         for _ in range(5)]

def clock(fn):
    fn()  # warm-up, includes JIT compilation
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best

out = {"backend": _jit.backend_name(),
       "geodesic (T=10)": clock(lambda: integrate_geodesic(model, start, 10.0, jacobi=True)),
       "distance x5": clock(lambda: [dist(model, x, y) for x, y in pairs])}
print(json.dumps(out))
"""


def run(pure, repeat):
    env = dict(os.environ)
    if pure:
        env["REVGEOM_PURE_PYTHON"] = "1"
    else:
        env.pop("REVGEOM_PURE_PYTHON", None)
    code = WORKLOAD.replace("REPEAT", str(repeat))
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    print(f"{'workload':<18}{fast['backend']:>12}{slow['backend']:>14}{'speedup':>10}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:<18}{fast[key]:>11.4f}s{slow[key]:>13.4f}s{slow[key] / fast[key]:>9.1f}x")


if __name__ == "__main__":
    main()
