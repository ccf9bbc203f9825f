"""Benchmark the modal RHS kernel: compiled extension vs numpy fallback.

The RHS evaluation is the hot loop (every integrator stage inside every
period-map application calls it), so this is the comparison that justifies
shipping the extension.  Run directly:

    python benchmarks/bench_rhs.py
"""

import time

import numpy as np

from bidomain import kernels
from bidomain.kernels import reference

try:
    from bidomain.kernels import _rhs as compiled
except ImportError:
    compiled = None


def bench(impl, psi, lam, wq, coeffs, alpha, beta, s_mod, repeats=2000):
    m = psi.shape[1]
    da, db = np.empty(m), np.empty(m)
    impl.modal_rhs(psi, lam, wq, coeffs, alpha, beta, s_mod, da, db)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        impl.modal_rhs(psi, lam, wq, coeffs, alpha, beta, s_mod, da, db)
    return (time.perf_counter() - t0) / repeats


def main():
    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'nodes':>7} {'modes':>6} {'numpy us':>10} {'compiled us':>12} {'speedup':>8}")
    for n, m in [(65, 9), (65, 17), (257, 33), (257, 65), (1024, 65), (1024, 129)]:
        psi = np.ascontiguousarray(rng.standard_normal((n, m)))
        lam = np.abs(rng.standard_normal(m))
        wq = np.full(n, 1.0 / n)
        coeffs = np.array([1.0, -1.1, 0.1, 1.0, 0.0, 0.0, -0.01, 0.01])
        alpha = rng.standard_normal(m)
        beta = rng.standard_normal(m)
        s_mod = rng.standard_normal(m)
        t_ref = bench(reference, psi, lam, wq, coeffs, alpha, beta, s_mod)
        if compiled is not None:
            t_cmp = bench(compiled, psi, lam, wq, coeffs, alpha, beta, s_mod)
            print(f"{n:>7} {m:>6} {t_ref * 1e6:>10.2f} {t_cmp * 1e6:>12.2f} "
                  f"{t_ref / t_cmp:>8.2f}x")
        else:
            print(f"{n:>7} {m:>6} {t_ref * 1e6:>10.2f} {'n/a':>12} {'n/a':>8}")


if __name__ == "__main__":
    main()
