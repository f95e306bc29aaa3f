"""Benchmark: compiled vs pure-Python exact walk enumeration.

The depth-first bond-exclusion counter is the package's one int64-safe hot
loop; it carries an optional numba path selected at import time (set
NOBLE_DISABLE_NUMBA=1 to force the pure-Python reference).  This script
times both on the same cases in a single process.
"""

import time

from noble import _enum_kernels
from noble.lattice import canon_key

CASES = [
    (2, 8, ()),
    (2, 9, (1,)),
    (3, 7, ()),
    (3, 8, (1, 1)),
    (4, 6, ()),
]


def run(fn, d, n, x, repeat=1):
    best = None
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(d, n, canon_key(x), True)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return out, best


def main():
    if not _enum_kernels.numba_enabled():
        print("numba path unavailable (disabled or not installed); nothing to compare")
        return
    kernel = _enum_kernels._NB_KERNEL
    import numpy as np

    def nb(d, n, cx, bond):
        tgt = np.zeros(d, dtype=np.int64)
        for i, c in enumerate(cx):
            tgt[i] = c
        return int(kernel(d, n, tgt, bond))

    # warm up the compiler outside the timing loop
    nb(2, 3, (1,), True)

    print(f"{'case':>18} {'count':>10} {'python':>10} {'numba':>10} {'speedup':>8}")
    for d, n, x in CASES:
        c1, t_py = run(_enum_kernels._count_walks_py, d, n, x)
        c2, t_nb = run(nb, d, n, x, repeat=3)
        assert c1 == c2, (d, n, x, c1, c2)
        print(
            f"d={d} n={n:2d} x={str(list(x)):>8} {c1:>10} "
            f"{t_py:>9.3f}s {t_nb:>9.3f}s {t_py / t_nb:>7.1f}x"
        )


if __name__ == "__main__":
    main()
