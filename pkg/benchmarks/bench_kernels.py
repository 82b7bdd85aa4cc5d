"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Also checks that both backends return identical results on the inputs used.
"""
import argparse
import random
import timeit

from gmpy2 import mpq

from mosaicverify import _kernels_py as pure

try:
    from mosaicverify import _kernels as fast
except ImportError:
    fast = None


def axpy_case(rng, n=40):
    dst = {k: mpq(rng.randint(-50, 50), rng.randint(1, 9)) for k in rng.sample(range(200), n)}
    src = {k: mpq(rng.randint(-50, 50), rng.randint(1, 9)) for k in rng.sample(range(200), n)}
    return dst, src, mpq(rng.randint(-9, 9), rng.randint(1, 9)), -1


def ipoly_case(rng, nvars=3, nterms=12):
    coefs, monos = [], []
    for _ in range(nterms):
        c = rng.uniform(-10, 10)
        coefs.append((c, c))
        monos.append([(rng.randrange(nvars), rng.randint(1, 3)) for _ in range(rng.randint(1, 3))])
    lo = [rng.uniform(-5, 0) for _ in range(nvars)]
    hi = [x + rng.uniform(0, 5) for x in lo]
    return coefs, monos, lo, hi


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args()
    rng = random.Random(7)
    axpy = [axpy_case(rng) for _ in range(50)]
    ipoly = [ipoly_case(rng) for _ in range(50)]

    def run_axpy(mod):
        for d, s, f, k in axpy:
            mod.row_axpy(dict(d), s, f, k)

    def run_ipoly(mod):
        for c, m, lo, hi in ipoly:
            mod.ipoly_eval(c, m, lo, hi)

    if fast is not None:
        for d, s, f, k in axpy:
            a, b = dict(d), dict(d)
            assert pure.row_axpy(a, s, f, k) == fast.row_axpy(b, s, f, k) and a == b
        for c, m, lo, hi in ipoly:
            assert pure.ipoly_eval(c, m, lo, hi) == fast.ipoly_eval(c, m, lo, hi)

    print("%-12s %12s %12s %8s" % ("kernel", "python (ms)", "cython (ms)", "speedup"))
    for name, fn in (("row_axpy", run_axpy), ("ipoly_eval", run_ipoly)):
        n = max(1, args.number // 50)
        tp = min(timeit.repeat(lambda: fn(pure), number=n, repeat=args.repeat)) / n * 1e3
        if fast is None:
            print("%-12s %12.3f %12s %8s" % (name, tp, "n/a", "-"))
            continue
        tf = min(timeit.repeat(lambda: fn(fast), number=n, repeat=args.repeat)) / n * 1e3
        print("%-12s %12.3f %12.3f %7.1fx" % (name, tp, tf, tp / tf))


if __name__ == "__main__":
    main()
