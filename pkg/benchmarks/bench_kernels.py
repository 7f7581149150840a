"""Compare the compiled and numpy im2col/col2im kernels, and a full conv2d step.

    python benchmarks/bench_kernels.py --batch 40 --size 12
"""
import argparse
import timeit

import numpy as np

from relgrid.numerics import kernels


def bench(fn, repeat):
    times = timeit.repeat(fn, number=1, repeat=repeat)
    return min(times) * 1e3


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--batch", type=int, default=40)
    p.add_argument("--size", type=int, default=12)
    p.add_argument("--channels", type=int, default=12)
    p.add_argument("--kernel", type=int, default=2)
    p.add_argument("--repeat", type=int, default=50)
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    args = p.parse_args()

    if kernels.BACKEND != "compiled":
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
        return
    rng = np.random.default_rng(0)
    shape = (args.batch, args.size, args.size, args.channels)
    x = rng.standard_normal(shape).astype(args.dtype)
    k = args.kernel
    cols = kernels.im2col(x, k, k)
    assert np.array_equal(cols, kernels.im2col_py(x, k, k))
    assert np.allclose(kernels.col2im(cols, shape, k, k), kernels.col2im_py(cols, shape, k, k))

    rows = [
        ("im2col", lambda: kernels.im2col_py(x, k, k), lambda: kernels.im2col(x, k, k)),
        ("col2im", lambda: kernels.col2im_py(cols, shape, k, k), lambda: kernels.col2im(cols, shape, k, k)),
    ]
    print(f"input {shape} {args.dtype}, kernel {k}x{k}, best of {args.repeat}")
    print(f"{'kernel':<8} {'numpy ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, slow, fast in rows:
        a, b = bench(slow, args.repeat), bench(fast, args.repeat)
        print(f"{name:<8} {a:>10.3f} {b:>12.3f} {a / b:>7.2f}x")


if __name__ == "__main__":
    main()
