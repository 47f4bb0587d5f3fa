"""Time the compiled kernels against the numpy reference implementations.

Run from the repository root after installing:

    python benchmarks/bench_kernels.py

Prints one line per kernel and backend plus the speedup. Sizes mirror the
desk-scale simulation (n = 500, p = 5000).
"""

import time

import numpy as np

from fampca._kernels import BACKEND, _ref

if BACKEND != "cython":
    raise SystemExit(
        "compiled backend not active (FAMPCA_PURE_PYTHON set or build "
        "without the extension); nothing to compare"
    )

from fampca._kernels import _fast  # noqa: E402  (import guarded by the check)

N = 500
P = 5000
BLOCK = 20
RHO = 0.2
REPEAT = 5


def timeit(fn, *arrays):
    best = float("inf")
    out = None
    for _ in range(REPEAT):
        args = [a.copy() for a in arrays]
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_ar1(rng):
    z = rng.standard_normal((N, P))
    n_blocks = -(-P // BLOCK)
    signs = (rng.integers(0, 2, n_blocks) * 2 - 1).astype(np.float64)

    def run(mod, buf):
        mod.ar1_fill(buf, signs, RHO, BLOCK)
        return buf

    t_ref, out_ref = timeit(lambda b: run(_ref, b), z)
    t_fast, out_fast = timeit(lambda b: run(_fast, b), z)
    same = np.array_equal(out_ref, out_fast)
    report("ar1_fill", t_ref, t_fast, same)


def bench_transmit(rng):
    hap_a = rng.integers(0, 2, P).astype(np.int8)
    hap_b = rng.integers(0, 2, P).astype(np.int8)
    start = 1
    cross = (rng.random(P - 1) < 30 / (P - 1)).astype(np.uint8)

    t_ref, out_ref = timeit(lambda: _ref.transmit(hap_a, hap_b, start, cross))
    t_fast, out_fast = timeit(lambda: _fast.transmit(hap_a, hap_b, start, cross))
    same = np.array_equal(out_ref, out_fast)
    report("transmit", t_ref, t_fast, same)


def bench_loess(rng):
    m = 200
    xs = np.arange(1, m + 1, dtype=np.float64)
    ys = rng.standard_normal(m).cumsum()
    q = max(2, int(np.ceil(0.3 * m)))

    t_ref, out_ref = timeit(lambda: _ref.loess_fit(xs, ys, q))
    t_fast, out_fast = timeit(lambda: _fast.loess_fit(xs, ys, q))
    same = bool(np.max(np.abs(out_ref - out_fast)) < 1e-12)
    report("loess_fit", t_ref, t_fast, same)


def report(name, t_ref, t_fast, same):
    flag = "ok" if same else "MISMATCH"
    print(
        f"{name:10s} numpy {t_ref * 1e3:9.2f} ms   cython {t_fast * 1e3:9.2f} ms"
        f"   speedup {t_ref / t_fast:6.2f}x   agreement {flag}"
    )


def main():
    rng = np.random.default_rng(20260815)
    print(f"active backend: {BACKEND}")
    bench_ar1(rng)
    bench_transmit(rng)
    bench_loess(rng)


if __name__ == "__main__":
    main()
