"""Microbenchmark: compiled kernels against the pure-numpy fallback.

Times matched calls on both backends, checks they agree, and prints the
per-kernel speedup. Run with --end-to-end to also time a short training
loop under each backend in a subprocess (selection happens at import, so
a fresh interpreter is the only honest way to compare full runs).

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --repeats 9 --end-to-end
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from fisherscope._kernels import _numpy_impl

try:
    from fisherscope._kernels import _cykernels
except ImportError:
    _cykernels = None


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def agreement(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))


def cases(rng, rows, cols):
    x = rng.normal(size=(rows, cols))
    g = rng.normal(size=(rows, cols))
    gamma = rng.normal(1.0, 0.1, size=cols)
    logits = rng.normal(size=(rows, cols))
    probs = _numpy_impl.softmax_rows(logits)
    yield "relu_fwd", lambda k: k.relu_fwd(x)
    yield "relu_bwd", lambda k: k.relu_bwd(x, g)
    yield "gelu_fwd", lambda k: k.gelu_fwd(x)
    yield "gelu_bwd", lambda k: k.gelu_bwd(x, g)
    yield "softmax_rows", lambda k: k.softmax_rows(logits)
    yield "softmax_rows_bwd", lambda k: k.softmax_rows_bwd(probs, g)
    yield "logsumexp_rows", lambda k: k.logsumexp_rows(logits)
    yield "layernorm_fwd", lambda k: k.layernorm_rows_fwd(x, gamma, gamma, 1e-5)

    _, mean, rstd = _numpy_impl.layernorm_rows_fwd(x, gamma, gamma, 1e-5)
    yield "layernorm_bwd", lambda k: k.layernorm_rows_bwd(x, gamma, mean, rstd, g)


def run_micro(rows, cols, repeats):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'python':>10} {'cython':>10} {'speedup':>8}   max |diff|")
    for name, call in cases(rng, rows, cols):
        t_py = best_of(lambda: call(_numpy_impl), repeats)
        t_cy = best_of(lambda: call(_cykernels), repeats)
        gap = agreement(call(_numpy_impl), call(_cykernels))
        print(f"{name:<18} {t_py * 1e3:>9.3f}ms {t_cy * 1e3:>9.3f}ms "
              f"{t_py / t_cy:>7.2f}x   {gap:.2e}")


END_TO_END = """
import time
import numpy as np
from fisherscope import ModelConfig, build_model
from fisherscope._kernels import active_backend
from fisherscope.datasets import split, synthetic_parity
from fisherscope.regularize import DropoutPlan
from fisherscope.training import TrainConfig, train

data = synthetic_parity(1250, seed=900)
model = build_model(ModelConfig(kind="mlp", depth=3, width=64, output_dim=2,
                                input_dim=10), init_seed=0)
tr, dev = split(data, restart_seed=0)
t0 = time.perf_counter()
_, rec = train(model, DropoutPlan.none(), tr, dev, TrainConfig(epochs=10),
               restart_seed=0, global_seed=0)
print(f"  {active_backend():<7} {time.perf_counter() - t0:6.2f}s  "
      f"final loss {rec.train_losses[-1]:.6f}")
"""


def run_end_to_end():
    print("\ntraining loop, 10 epochs (fresh interpreter per backend):", flush=True)
    for backend in ("python", "cython"):
        env = dict(os.environ, FISHERSCOPE_KERNELS=backend)
        subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=4096)
    ap.add_argument("--cols", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if _cykernels is None:
        print("compiled extension not available; nothing to compare", file=sys.stderr)
        return 1
    run_micro(args.rows, args.cols, args.repeats)
    if args.end_to_end:
        run_end_to_end()
    return 0


if __name__ == "__main__":
    sys.exit(main())
