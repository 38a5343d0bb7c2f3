#!/usr/bin/env python3
"""Benchmark the compiled blip-integrator kernel against the pure-Python
fallback on full descent integrations and verify they agree bit-for-bit.

Usage: python benchmarks/bench_kernels.py [n_descents]
"""

import sys
import time

import numpy as np

from airtwin.kernels import available_backends
from airtwin.perf import load_model
from airtwin.units import knots_to_ms

try:
    from importlib.resources import files

    MODEL = files("airtwin.fixtures") / "models" / "b738like_descent.json"
except Exception:  # pragma: no cover
    MODEL = "src/airtwin/fixtures/models/b738like_descent.json"


def build(backend_cls, pm, weights):
    return backend_cls(
        pm.fl_grid, pm.force_curve(weights).values, pm.opposing_force,
        knots_to_ms(1.0) * pm.cas_curve(weights).values, pm.mass,
        pm.esf_coefficient("cas"), pm.esf_coefficient("mach"),
        288.15, 101325.0, 0.0065, 11000.0, 287.05287, 1.4, 9.80665,
    )


def full_descent(integ, top=360.0, bottom=240.0, mach=0.78, transition=290.0):
    fl, regime, t = top, 1, 0
    trace = []
    while t < 4000:
        out = integ.run(fl, -1, regime, mach, 0.0, 0.0, 0.0, bottom, transition,
                        0.0, 0.0, 0.0, 6.0, 6)
        fl, regime = out[0], out[2]
        t += 6
        trace.append(fl)
        if out[3]:
            break
    return trace


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 500
    pm = load_model(str(MODEL))
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    rng = np.random.default_rng(0)
    sampler = pm.weights.sampling_matrix()
    weight_draws = [pm.weights.mean + sampler @ rng.standard_normal(pm.weights.dim)
                    for _ in range(n)]

    timings = {}
    traces = {}
    for name, cls in backends.items():
        t0 = time.perf_counter()
        out = []
        for w in weight_draws:
            integ = build(cls, pm, w)
            out.append(full_descent(integ))
        timings[name] = time.perf_counter() - t0
        traces[name] = out
        blips = sum(len(tr) for tr in out)
        print(f"{name:5s}: {timings[name]:7.3f} s for {n} descents "
              f"({blips} blips, {blips / timings[name]:,.0f} blips/s)")
    if len(traces) == 2:
        identical = traces["pure"] == traces["fast"]
        print(f"bitwise identical traces: {identical}")
        print(f"speedup: {timings['pure'] / timings['fast']:.1f}x")
        if not identical:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
