#!/usr/bin/env python3
"""Compare the numba and pure-numpy convolution backends.

The backend is frozen at import time, so this script re-executes itself in
a subprocess per backend (TACTIFAB_PURE_NUMPY=1 selects the numpy path)
and prints a table of per-kernel times plus a full training-step
comparison, including a numerical agreement check.

Usage: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np

SHAPES = [
    # (label, batch, in_ch, side, out_ch, stride, pad)
    ("stage1 conv 8ch 96px", 4, 8, 96, 8, 1, 1),
    ("stage2 down 8->16 96px", 4, 8, 96, 16, 2, 1),
    ("stage2 conv 16ch 48px", 4, 16, 48, 16, 1, 1),
]


def time_call(fn, repeats=30):
    fn()  # warm (first call may JIT-compile)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def measure():
    import tactifab.layers as layers
    from tactifab._accel import BACKEND
    from tactifab.classifier import init_model, loss_and_gradients

    rng = np.random.default_rng(0)
    rows = {}
    for label, batch, ci, side, co, stride, pad in SHAPES:
        x = rng.random((batch, ci, side, side))
        w = rng.standard_normal((co, ci, 3, 3)) * 0.2
        b = np.zeros(co)
        out, cache = layers.conv2d_forward(x, w, b, stride, pad)
        dout = rng.random(out.shape)
        rows[label + " fwd"] = time_call(
            lambda: layers.conv2d_forward(x, w, b, stride, pad))
        rows[label + " bwd"] = time_call(
            lambda: layers.conv2d_backward(dout, cache))

    model = init_model(0)
    batch = [(rng.random((1, 96, 96)), i % 2) for i in range(4)]
    rows["full training step (batch 4, 96px)"] = time_call(
        lambda: loss_and_gradients(model, batch), repeats=15)

    loss, grads = loss_and_gradients(model, batch)
    digest = {k: float(np.abs(v).sum()) for k, v in sorted(grads.items())}
    return {"backend": BACKEND, "rows": rows,
            "loss": loss, "grad_digest": digest}


def run_child(pure_numpy: bool) -> dict:
    env = dict(os.environ)
    env["TACTIFAB_PURE_NUMPY"] = "1" if pure_numpy else "0"
    proc = subprocess.run(
        [sys.executable, __file__, "--child"],
        capture_output=True, text=True, env=env, check=True,
    )
    return json.loads(proc.stdout.splitlines()[-1])


def main():
    if "--child" in sys.argv:
        print(json.dumps(measure()))
        return

    results = [run_child(pure_numpy=False), run_child(pure_numpy=True)]
    a, b = results
    print(f"{'kernel':<40} {a['backend']:>10} {b['backend']:>10} {'speedup':>9}")
    print("-" * 73)
    for label in a["rows"]:
        ta, tb = a["rows"][label], b["rows"][label]
        print(f"{label:<40} {ta * 1000:>8.2f}ms {tb * 1000:>8.2f}ms "
              f"{tb / ta:>8.2f}x")
    print()
    loss_delta = abs(a["loss"] - b["loss"])
    worst = max(
        abs(a["grad_digest"][k] - b["grad_digest"][k])
        / max(1e-12, abs(b["grad_digest"][k]))
        for k in a["grad_digest"]
    )
    print(f"agreement: loss delta {loss_delta:.3e}, "
          f"worst gradient-digest relative delta {worst:.3e}")


if __name__ == "__main__":
    main()
