"""Exact lattice walk counts: simple, non-backtracking, and self-avoiding.

Counts are exact arbitrary-size integers, computed per symmetry orbit so
that moderate n stays feasible in high dimension.  Nothing in this module
touches floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import _enum_kernels
from .lattice import LatticePoint, canon_key, neighbor_orbits

DEFAULT_ENUM_BUDGET = 10

KINDS = ("srw", "nbw", "bond-sa", "saw")


class EnumerationBudgetExceeded(ValueError):
    pass


@dataclass
class WalkCountTable:
    """Counts of one walk family keyed by (n, canonical point)."""

    d: int
    kind: str
    counts: dict = field(default_factory=dict)  # (n, canon) -> int
    n_done: int = -1

    def get(self, n, x):
        key = (n, canon_key(x))
        if key not in self.counts:
            raise KeyError(f"{self.kind} count for n={n}, x={key[1]} not tabulated")
        return self.counts[key]

    def total(self, n):
        """Sum over all endpoints, weighted by orbit sizes."""
        tot = 0
        for (m, cx), c in self.counts.items():
            if m == n and c:
                tot += c * LatticePoint(cx, self.d).orbit_size()
        return tot


def build_srw_table(d, n_max):
    """p_n(x) for n <= n_max via the neighbor-sum recursion on orbits."""
    tab = WalkCountTable(d, "srw")
    tab.counts[(0, ())] = 1
    prev = {(): 1}
    for n in range(1, n_max + 1):
        cur = {}
        # gather: p_n(y) = sum over neighbors of y of p_{n-1}
        support = set()
        for cx in prev:
            for ny in neighbor_orbits(cx, d):
                support.add(ny)
        for y in support:
            s = 0
            for nb, mult in neighbor_orbits(y, d).items():
                s += mult * prev.get(nb, 0)
            if s:
                cur[y] = s
        for y, c in cur.items():
            tab.counts[(n, y)] = c
        prev = cur
    tab.n_done = n_max
    return tab


def count_srw(d, n, x, table=None):
    """Number of n-step simple walks from the origin to x."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if table is None or table.n_done < n:
        table = build_srw_table(d, n)
    return table.counts.get((n, canon_key(x)), 0)


def count_srw_loop_formula(d, n=6):
    """Closed multinomial form for the number of 6-step loops at the origin."""
    if n != 6:
        raise ValueError("closed form implemented for n = 6")

    def multinomial(total, parts):
        out = math.factorial(total)
        for p in parts:
            out //= math.factorial(p)
        return out

    one_dim = d * multinomial(6, (3, 3))
    two_dim = d * (d - 1) * multinomial(6, (2, 2, 1, 1)) if d >= 2 else 0
    three_dim = (d * (d - 1) * (d - 2) // 6) * multinomial(6, (1,) * 6) if d >= 3 else 0
    return one_dim + two_dim + three_dim


def build_nbw_table(d, n_max):
    """b_n(x) for n <= n_max.

    Scalar recursion obtained by eliminating the directed counts:
        b_{n+1}(x) = sum_nb b_n(x +- e_i) - (2d-1) b_{n-1}(x)   (n >= 2)
    with b_2(x) = sum_nb b_1 - 2d delta_{x,0}.
    """
    tab = WalkCountTable(d, "nbw")
    tab.counts[(0, ())] = 1
    if n_max >= 1:
        for y, mult in neighbor_orbits((), d).items():
            tab.counts[(1, y)] = 1
    prev2 = {(): 1}
    prev1 = {(1,): 1}
    for n in range(2, n_max + 1):
        support = set()
        for cx in prev1:
            support.update(neighbor_orbits(cx, d))
        cur = {}
        for y in support:
            s = 0
            for nb, mult in neighbor_orbits(y, d).items():
                s += mult * prev1.get(nb, 0)
            if n == 2:
                s -= 2 * d * (1 if y == () else 0)
            else:
                s -= (2 * d - 1) * prev2.get(y, 0)
            if s:
                cur[y] = s
        for y, c in cur.items():
            tab.counts[(n, y)] = c
        prev2, prev1 = prev1, cur
    tab.n_done = n_max
    return tab


def count_nbw(d, n, x, table=None):
    """Number of n-step non-backtracking walks from the origin to x."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if table is None or table.n_done < n:
        table = build_nbw_table(d, n)
    return table.counts.get((n, canon_key(x)), 0)


def count_bond_sa(d, n, x, n_max=DEFAULT_ENUM_BUDGET):
    """Walks that never traverse the same bond twice, counted exactly."""
    if n > n_max:
        raise EnumerationBudgetExceeded(f"n={n} exceeds enumeration budget {n_max}")
    return _enum_kernels.count_constrained_walks(d, n, canon_key(x), bond_mode=True)


def count_saw(d, n, x, n_max=DEFAULT_ENUM_BUDGET):
    """Self-avoiding walks (no vertex revisited), counted exactly."""
    if n > n_max:
        raise EnumerationBudgetExceeded(f"n={n} exceeds enumeration budget {n_max}")
    return _enum_kernels.count_constrained_walks(d, n, canon_key(x), bond_mode=False)


def build_avoiding_table(d, n_max, kind="bond-sa", points=None):
    """Tabulate a_n / c_n on the canonical support, by direct enumeration."""
    if kind not in ("bond-sa", "saw"):
        raise ValueError(kind)
    counter = count_bond_sa if kind == "bond-sa" else count_saw
    tab = WalkCountTable(d, kind)
    if points is None:
        points = _l1_ball_canon(d, n_max)
    for n in range(n_max + 1):
        for cx in points:
            if sum(cx) > n or (sum(cx) - n) % 2:
                continue
            c = counter(d, n, cx, n_max=n_max)
            if c:
                tab.counts[(n, cx)] = c
    tab.n_done = n_max
    return tab


def _l1_ball_canon(d, r):
    """Canonical points with l1 norm <= r (partitions into <= d parts)."""
    out = []

    def rec(remaining, maxpart, acc):
        out.append(tuple(acc))
        if len(acc) == d:
            return
        for p in range(min(remaining, maxpart), 0, -1):
            rec(remaining - p, p, acc + [p])

    rec(r, r, [])
    return sorted(set(out), key=lambda t: (sum(t), t), reverse=False)


# -- cache file format ----------------------------------------------------

_MAGIC = "NOBLE-WALKS 1"


def save_walk_table(tab, path):
    with open(path, "w") as f:
        f.write(f"{_MAGIC} d={tab.d} kind={tab.kind} nmax={tab.n_done}\n")
        for (n, cx), c in sorted(tab.counts.items()):
            coords = ",".join(str(v) for v in cx)
            f.write(f"{n} [{coords}] {c}\n")


def load_walk_table(path):
    with open(path) as f:
        header = f.readline().strip()
        parts = header.split()
        if parts[:2] != _MAGIC.split():
            raise ValueError(f"not a walk-count cache: {header!r}")
        meta = dict(p.split("=") for p in parts[2:])
        tab = WalkCountTable(int(meta["d"]), meta["kind"])
        tab.n_done = int(meta["nmax"])
        for line in f:
            line = line.strip()
            if not line:
                continue
            nstr, coords, cnt = line.split(" ")
            cx = tuple(int(v) for v in coords[1:-1].split(",") if v != "")
            tab.counts[(int(nstr), cx)] = int(cnt)
    return tab
