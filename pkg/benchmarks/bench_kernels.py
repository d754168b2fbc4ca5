"""Compiled kernels versus the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--levels 3]

Times batched B-spline evaluation, dense local accumulation and a full
mass/stiffness assembly with each backend, and checks that both backends
give the same numbers.
"""
import argparse
import timeit

import numpy as np

from splyne import _fallback, kernels
from splyne.assembly import assemble_pair
from splyne.harness import build_space, make_spec

try:
    from splyne import _kernels
except ImportError:
    _kernels = None


def _use(backend):
    kernels.eval_bsplines = backend.eval_bsplines
    kernels.accumulate_local = backend.accumulate_local


def _best(stmt, repeat, number=1):
    return min(timeit.repeat(stmt, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()

    backends = {"python": _fallback}
    if _kernels is not None:
        backends["cython"] = _kernels
    else:
        print("compiled extension not built; timing the fallback only")

    rng = np.random.default_rng(0)
    knots = np.sort(rng.uniform(0, 1, size=(2000, 5)), axis=1)
    x = rng.uniform(0, 1, 4)
    idx = np.sort(rng.choice(2000, 36, replace=False)).astype(np.intp)
    local = rng.standard_normal((36, 36))
    space = build_space("LRB", make_spec("central", args.levels))

    rows, results = [], {}
    for name, mod in backends.items():
        _use(mod)
        mat = np.zeros((2000, 2000))
        t_eval = _best(lambda: mod.eval_bsplines(knots, x, 1.0), args.repeat, 20)
        t_acc = _best(lambda: mod.accumulate_local(mat, idx, local), args.repeat, 200)
        t_asm = _best(lambda: assemble_pair(space, threads=1), max(1, args.repeat // 2))
        results[name] = assemble_pair(space, threads=1)[1].matrix
        rows.append((name, t_eval, t_acc, t_asm))
    _use(backends.get("cython", _fallback))

    print(f"{'backend':8s} {'eval 2000x4 (us)':>18s} {'accumulate 36x36 (us)':>22s} "
          f"{'assembly N=' + str(len(space)) + ' (s)':>22s}")
    for name, te, ta, tm in rows:
        print(f"{name:8s} {te * 1e6:18.1f} {ta * 1e6:22.2f} {tm:22.3f}")
    if len(rows) == 2:
        (_, e0, a0, m0), (_, e1, a1, m1) = rows
        print(f"{'speedup':8s} {e0 / e1:18.2f} {a0 / a1:22.2f} {m0 / m1:22.2f}")
        diff = np.abs(results["python"] - results["cython"]).max()
        print(f"max |stiffness difference| between backends: {diff:.2e}")


if __name__ == "__main__":
    main()
