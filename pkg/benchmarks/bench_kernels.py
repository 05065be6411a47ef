"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--train-steps 300]

Prints per-kernel timings for both backends, checks that their outputs agree,
and times a short end-to-end training run under each backend in a subprocess
(the backend is chosen once, at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from adversarial_au.kernels import RELU, SIGMOID, compiled_backend, python_backend

TRAIN_SNIPPET = """
import time
from dataclasses import replace
from adversarial_au.config import ExperimentConfig, run_experiment
exp = ExperimentConfig()
exp = replace(exp, train=replace(exp.train, K={steps}, eval_every={steps}))
t0 = time.perf_counter()
r = run_experiment(exp)
print(time.perf_counter() - t0, repr(r.report.avg_f1))
"""


def kernel_cases(rng):
    # batch 64 through the default classifier and discriminator shapes
    for n_in, n_out, act in ((16, 64, RELU), (64, 64, RELU), (64, 8, SIGMOID), (8, 32, RELU)):
        x = rng.normal(size=(64, n_in))
        w = rng.normal(size=(n_in, n_out))
        b = rng.normal(size=n_out)
        g = rng.normal(size=(64, n_out))
        yield f"{n_in}x{n_out}", x, w, b, g, act


def bench_kernels(repeat, number):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'python us':>12}{'compiled us':>14}{'speedup':>10}  max |diff|")
    for label, x, w, b, g, act in kernel_cases(rng):
        for name, call in (
            ("forward", lambda k: k.dense_forward(x, w, b, act)),
            ("backward", lambda k: k.dense_backward(x, x @ w + b, w, g, act)),
        ):
            t_py = min(timeit.repeat(lambda: call(python_backend), number=number, repeat=repeat))
            t_c = min(timeit.repeat(lambda: call(compiled_backend), number=number, repeat=repeat))
            diff = max(float(np.max(np.abs(a - c)))
                       for a, c in zip(call(python_backend), call(compiled_backend)))
            print(f"{name + ' ' + label:<22}{1e6 * t_py / number:>12.2f}"
                  f"{1e6 * t_c / number:>14.2f}{t_py / t_c:>10.2f}  {diff:.1e}")


def bench_training(steps):
    print(f"\nend-to-end training, K={steps}, default experiment")
    for backend in ("python", "compiled"):
        env = dict(os.environ, ADVERSARIAL_AU_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET.format(steps=steps)],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  {backend:<9} {float(out[0]):7.2f} s   avg_f1 {out[1]}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    ap.add_argument("--train-steps", type=int, default=300)
    args = ap.parse_args()
    if compiled_backend is None:
        sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    bench_kernels(args.repeat, args.number)
    if args.train_steps > 0:
        bench_training(args.train_steps)


if __name__ == "__main__":
    main()
