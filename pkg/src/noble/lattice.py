"""Lattice points on Z^d and their symmetry orbits.

Everything downstream keys on the canonical orbit representative of a
point: coordinates sorted descending, all nonnegative.  The symmetry
group is coordinate permutations combined with sign flips, of order
2^d * d!.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass


def canonicalize(coords):
    """Unique orbit representative: absolute values, sorted descending."""
    return tuple(sorted((abs(c) for c in coords), reverse=True))


def canon_key(coords):
    """Canonical representative with trailing zeros stripped (table key)."""
    c = canonicalize(coords)
    n = len(c)
    while n and c[n - 1] == 0:
        n -= 1
    return c[:n]


def signed_permute(coords, perm, signs):
    """Apply the group element (perm, signs): result[j] = signs[j]*x[perm[j]]."""
    return tuple(signs[j] * coords[perm[j]] for j in range(len(coords)))


@dataclass(frozen=True)
class LatticePoint:
    """Point of Z^d; construction does not canonicalize."""

    coords: tuple
    d: int

    def __init__(self, coords, d=None):
        coords = tuple(int(c) for c in coords)
        if d is None:
            d = len(coords)
        if d < 2:
            raise ValueError("dimension must be >= 2")
        if len(coords) > d:
            raise ValueError("more coordinates than dimensions")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "d", d)

    def canonical(self):
        c = canonicalize(self.coords)
        while c and c[-1] == 0:
            c = c[:-1]
        return LatticePoint(c, self.d)

    def padded(self):
        return self.coords + (0,) * (self.d - len(self.coords))

    def norm1(self):
        return sum(abs(c) for c in self.coords)

    def norm2_sq(self):
        return sum(c * c for c in self.coords)

    def orbit_size(self):
        """Number of distinct points in the symmetry orbit."""
        full = self.padded()
        mults = Counter(abs(c) for c in full)
        nonzero = sum(m for v, m in mults.items() if v != 0)
        size = math.factorial(self.d)
        for m in mults.values():
            size //= math.factorial(m)
        return size * 2 ** nonzero


@dataclass(frozen=True)
class OrbitSignature:
    """Multiset of (|coordinate|, multiplicity) pairs; equal iff same orbit."""

    entries: tuple  # sorted ((value, multiplicity), ...), zeros included
    d: int

    @classmethod
    def of(cls, point):
        full = point.padded() if isinstance(point, LatticePoint) else tuple(point)
        mults = Counter(abs(c) for c in full)
        return cls(tuple(sorted(mults.items())), len(full) if not isinstance(point, LatticePoint) else point.d)


def neighbor_orbits(canon, d):
    """Group the 2d neighbors x +- e_i of a canonical point by orbit.

    Returns {canonical_neighbor: multiplicity}; multiplicities sum to 2d.
    """
    x = list(canon) + [0] * (d - len(canon))
    out = Counter()
    for i in range(d):
        for s in (1, -1):
            x[i] += s
            out[canon_key(x)] += 1
            x[i] -= s
    return dict(out)


def shifted_orbit_sum(canon, d, step=2):
    """Group x + step*e_iota over all 2d signed directions by orbit.

    Used for the direction sums appearing in the dispersion integrals.
    """
    return neighbor_orbits_step(canon, d, step)


def neighbor_orbits_step(canon, d, step):
    x = list(canon) + [0] * (d - len(canon))
    out = Counter()
    for i in range(d):
        for s in (step, -step):
            x[i] += s
            out[canon_key(x)] += 1
            x[i] -= s
    return dict(out)


def sorted_dominates(a, b):
    """True iff canonical a >= canonical b coordinatewise (zero padded).

    This is the order along which the walk integrals are non-increasing,
    so suprema over threshold sets are attained on minimal elements.
    """
    a = canonicalize(a)
    b = canonicalize(b)
    n = max(len(a), len(b))
    a = a + (0,) * (n - len(a))
    b = b + (0,) * (n - len(b))
    return all(ai >= bi for ai, bi in zip(a, b))


def orbit_assignments(canon, d):
    """Decompose the symmetrized double-point sum for a canonical x.

    Yields (canonical(x + p(x; perm, signs)), weight) pairs with weights
    summing to 1, grouping the 2^d d! group elements by the orbit of the
    result.  Enumeration is over placements of the nonzero entries of x,
    so the cost depends only on the number of nonzero coordinates.
    """
    from fractions import Fraction
    from itertools import product

    values = [c for c in canon if c != 0]
    k = len(values)
    if k > d:
        raise ValueError("point has more nonzero entries than dimensions")
    base = list(canon) + [0] * (d - len(canon))

    out = Counter()
    if k == 0:
        yield tuple(), Fraction(1)
        return

    # each nonzero source value is sent to one of the k nonzero target
    # positions (injectively) or to the zero region; signs enumerated for
    # every placed source.
    targets = list(range(k))  # indices into the nonzero positions of base

    def placements(i, used, acc):
        if i == k:
            yield tuple(acc)
            return
        for t in targets:
            if t not in used:
                yield from placements(i + 1, used | {t}, acc + [t])
        yield from placements(i + 1, used, acc + [None])  # zero region

    dfact = math.factorial(d)
    dkfact = math.factorial(d - k)
    for place in placements(0, frozenset(), []):
        z = sum(1 for t in place if t is None)
        if z > d - k:
            continue
        # ordered choice of distinct zero positions for the bucket
        falling = 1
        for j in range(z):
            falling *= (d - k - j)
        for signs in product((1, -1), repeat=k):
            coords = list(base)
            extra = []
            for i in range(k):
                t = place[i]
                if t is None:
                    extra.append(values[i])  # sign irrelevant to orbit
                else:
                    coords[t] = base[t] + signs[i] * values[i]
            weight = Fraction(dkfact * falling, dfact * 2 ** k)
            out[canon_key(list(coords) + extra)] += weight
    total = sum(out.values())
    if total != 1:
        raise AssertionError(f"orbit assignment weights sum to {total}, not 1")
    for key, w in sorted(out.items()):
        yield key, w
