"""Compare the numba and numpy kernel backends on realistic shapes.

    python benchmarks/bench_backends.py --rows 20000 --repeats 5 --csv backends.csv

Each kernel is called through ``emssl._kernels.IMPLS`` so both backends run in
the same process on the same inputs. Outputs are checked for agreement before
any timing is reported.
"""

import argparse
import os
import statistics
import time

import numpy as np

from emssl import _kernels
from emssl.kinematics import DEFAULT6
from emssl.neuralnet import init_mlp


def timed(fn, repeats):
    fn()  # warm-up, includes numba compilation
    raw = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        raw.append((time.perf_counter_ns() - t0) / 1e9)
    return statistics.median(raw)


def forward_with(impl, mlp, X):
    h = X
    last = len(mlp.weights) - 1
    for i, (W, b) in enumerate(zip(mlp.weights, mlp.biases)):
        h = impl["dense"](h, W, b, i < last)
    return h


def cases(rows, dims, seed):
    rng = np.random.default_rng(seed)
    axes, lengths = DEFAULT6.axis_codes, DEFAULT6.lengths_array
    Q = rng.uniform(DEFAULT6.lower, DEFAULT6.upper, size=(rows, DEFAULT6.n_joints))
    mlp = init_mlp(dims, seed)
    X = rng.uniform(size=(rows, 3))
    n_adam = mlp.n_params
    p, g, m = (rng.normal(size=n_adam) for _ in range(3))
    v = np.abs(rng.normal(size=n_adam))

    def adam(impl):
        pp, mm, vv = p.copy(), m.copy(), v.copy()
        impl["adam"](pp, g, mm, vv, 0.0015, 0.9, 0.999, 1e-8, 0.1, 0.001)
        return pp

    return {
        "fk_rows": lambda impl: impl["fk_rows"](axes, lengths, Q),
        "joint_jacobian": lambda impl: impl["frames"](axes, lengths, Q, True),
        "link_jacobian": lambda impl: impl["frames"](axes, lengths, Q, False),
        "forward": lambda impl: forward_with(impl, mlp, X),
        "adam": adam,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--dims", default="3,128,64,6", help="comma-separated layer sizes")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", help="also write results here")
    args = ap.parse_args()

    if "numba" not in _kernels.IMPLS:
        raise SystemExit("numba backend inactive (EMSSL_DISABLE_NUMBA set?); nothing to compare")
    dims = [int(d) for d in args.dims.split(",")]
    rows = []
    print(f"{'kernel':<16}{'numpy s':>10}{'numba s':>10}{'speedup':>9}  max |diff|")
    for name, fn in cases(args.rows, dims, args.seed).items():
        ref = fn(_kernels.IMPLS["numpy"])
        got = fn(_kernels.IMPLS["numba"])
        diff = float(np.max(np.abs(ref - got)))
        t_np = timed(lambda: fn(_kernels.IMPLS["numpy"]), args.repeats)
        t_nb = timed(lambda: fn(_kernels.IMPLS["numba"]), args.repeats)
        rows.append((name, t_np, t_nb, diff))
        print(f"{name:<16}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>8.1f}x  {diff:.1e}")
    print(f"rows={args.rows} dims={dims} cores={os.cpu_count()}")

    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("kernel,numpy_s,numba_s,max_abs_diff\n")
            for name, t_np, t_nb, diff in rows:
                fh.write(f"{name},{t_np:.6f},{t_nb:.6f},{diff:.3e}\n")


if __name__ == "__main__":
    main()
