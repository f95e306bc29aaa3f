"""Exact-enumeration kernels for short self-avoiding / bond-self-avoiding walks.

The depth-first counters are the one hot loop in the package that fits
int64 arithmetic, so they carry an optional numba-compiled fast path.
Selection: the compiled path is used when numba imports cleanly and the
environment variable NOBLE_DISABLE_NUMBA is unset; the pure-Python path
is always available and is the reference implementation.

Counts stay exact in both paths: the caller guarantees (2d)^n < 2^62
before dispatching to the compiled kernel.
"""

from __future__ import annotations

import os

import numpy as np

_HAVE_NUMBA = False
if not os.environ.get("NOBLE_DISABLE_NUMBA"):
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is optional
        pass


def _count_walks_py(d, n, target, bond_mode):
    """Count n-step walks 0 -> target never reusing a bond (bond_mode) or
    vertex (not bond_mode).  Pure-Python reference path."""
    target = tuple(target) + (0,) * (d - len(target))
    pos = [0] * d
    path = [tuple(pos)]
    count = 0

    def step(depth):
        nonlocal count
        if depth == n:
            if tuple(pos) == target:
                count += 1
            return
        here = tuple(pos)
        for i in range(d):
            for s in (1, -1):
                pos[i] += s
                nxt = tuple(pos)
                if bond_mode:
                    bond = (here, nxt) if here < nxt else (nxt, here)
                    if bond not in used_bonds:
                        used_bonds.add(bond)
                        step(depth + 1)
                        used_bonds.remove(bond)
                else:
                    if nxt not in used_sites:
                        used_sites.add(nxt)
                        path.append(nxt)
                        step(depth + 1)
                        path.pop()
                        used_sites.remove(nxt)
                pos[i] -= s

    used_bonds = set()
    used_sites = {tuple(pos)}
    step(0)
    return count


def _make_numba_kernel():
    @njit(cache=True)
    def _count_walks_nb(d, n, target, bond_mode):  # pragma: no cover - jit
        # iterative DFS; path holds visited vertices, moves the step taken
        path = np.zeros((n + 1, d), dtype=np.int64)
        moves = np.full(n + 1, -1, dtype=np.int64)
        depth = 0
        count = 0
        while depth >= 0:
            moves[depth] += 1
            mv = moves[depth]
            if mv >= 2 * d:
                moves[depth] = -1
                depth -= 1
                continue
            if depth == n:
                ok = True
                for j in range(d):
                    if path[depth, j] != target[j]:
                        ok = False
                        break
                if ok:
                    count += 1
                moves[depth] = -1
                depth -= 1
                continue
            axis = mv // 2
            sgn = 1 if mv % 2 == 0 else -1
            for j in range(d):
                path[depth + 1, j] = path[depth, j]
            path[depth + 1, axis] += sgn
            # exclusion scan over the earlier path
            ok = True
            if bond_mode:
                for t in range(depth):
                    same_a = True
                    same_b = True
                    for j in range(d):
                        if path[t, j] != path[depth, j] or path[t + 1, j] != path[depth + 1, j]:
                            same_a = False
                        if path[t, j] != path[depth + 1, j] or path[t + 1, j] != path[depth, j]:
                            same_b = False
                        if not (same_a or same_b):
                            break
                    if same_a or same_b:
                        ok = False
                        break
            else:
                for t in range(depth + 1):
                    same = True
                    for j in range(d):
                        if path[t, j] != path[depth + 1, j]:
                            same = False
                            break
                    if same:
                        ok = False
                        break
            if ok:
                depth += 1
        return count

    return _count_walks_nb


_NB_KERNEL = _make_numba_kernel() if _HAVE_NUMBA else None


def numba_enabled():
    return _NB_KERNEL is not None


def count_constrained_walks(d, n, target, bond_mode):
    """Exact count of n-step walks 0 -> target with bond or vertex exclusion."""
    if _NB_KERNEL is not None and (2 * d) ** n < 2 ** 62:
        tgt = np.zeros(d, dtype=np.int64)
        for i, c in enumerate(target):
            tgt[i] = c
        return int(_NB_KERNEL(d, n, tgt, bond_mode))
    return _count_walks_py(d, n, target, bond_mode)
