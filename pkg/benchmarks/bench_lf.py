"""Benchmark the compiled glottal-cycle kernels against the fallback.

Runs the same workload (parameter solving plus cycle synthesis across a
grid of period lengths and shape parameters) in this process with the
active backend, then re-runs it in a subprocess with
GLOTFIT_PURE_PYTHON=1, and prints both timings. Use --inner to scale the
workload.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workload(inner: int) -> dict:
    from glotfit import KERNEL_BACKEND, LFParams, generate_cycle

    fs = 16000.0
    rng = np.random.default_rng(0)
    combos = []
    for _ in range(inner):
        n0 = int(rng.integers(54, 201))
        te = float(rng.uniform(0.3, 0.9))
        tp = te * float(rng.uniform(0.65, 0.8))
        ta = float(rng.uniform(0.03, 0.08))
        combos.append((n0, tp, te, ta))

    t0 = time.perf_counter()
    acc = 0.0
    for n0, tp, te, ta in combos:
        p = LFParams(t0_s=n0 / fs, tp=tp, te=te, ta=ta, ee=1.0)
        acc += float(np.sum(np.abs(generate_cycle(p, fs).samples)))
    elapsed = time.perf_counter() - t0
    return {"backend": KERNEL_BACKEND, "seconds": elapsed,
            "cycles": len(combos), "checksum": acc}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--inner", type=int, default=2000,
                    help="number of solve+synthesize cycles per backend")
    ap.add_argument("--emit-json", action="store_true",
                    help="print one JSON result line and exit (worker mode)")
    args = ap.parse_args()

    res = workload(args.inner)
    if args.emit_json:
        print(json.dumps(res))
        return 0

    print(f"{res['backend']:>8}: {res['seconds']:.3f} s "
          f"for {res['cycles']} cycles "
          f"({1e6 * res['seconds'] / res['cycles']:.1f} us/cycle)")

    if res["backend"] == "python":
        print("compiled backend unavailable; nothing to compare")
        return 0

    env = dict(os.environ, GLOTFIT_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__),
         "--inner", str(args.inner), "--emit-json"],
        capture_output=True, text=True, env=env, check=True)
    other = json.loads(out.stdout.strip().splitlines()[-1])
    print(f"{other['backend']:>8}: {other['seconds']:.3f} s "
          f"for {other['cycles']} cycles "
          f"({1e6 * other['seconds'] / other['cycles']:.1f} us/cycle)")

    if abs(other["checksum"] - res["checksum"]) > 1e-6 * (1 + abs(res["checksum"])):
        print("warning: backend checksums differ "
              f"({res['checksum']!r} vs {other['checksum']!r})")
    print(f"speedup: {other['seconds'] / res['seconds']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
