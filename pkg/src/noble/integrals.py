"""Rigorous table of critical walk integrals and their derived bounds.

The table stores enclosures of

    base(n, l, x) = int D-hat^l C-hat^n Dsym_x dk/(2pi)^d      (name "I")

filled from the Bessel route at l = 0, exact walk-count rationals at
n = 0, and the first-order recursion in between.  The absolute-value
variants (K, T, T*, U), the symmetrized square L, and the dispersion
combinations (V and the weighted line J) are evaluated on demand from
table rows, each as the minimum over every applicable estimate, with the
winning estimate recorded for the report.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from mpmath import mp

from .bessel import DimensionTooLow, PrecisionNotReached
from .bounds import Bound, bound_max
from .green import GreenEvaluator
from .lattice import canon_key, neighbor_orbits_step, orbit_assignments
from .walks import build_srw_table

FORMAT_VERSION = 1


class MissingEntry(KeyError):
    pass


class UnsupportedSetKind(ValueError):
    pass


class UnsupportedOrbitShape(ValueError):
    pass


@dataclass(frozen=True)
class PointSetSpec:
    """Vertex set over which a supremum is taken.

    kinds: "points" (explicit list), "l1" (l1 norm > threshold),
    "l2" (Euclidean norm > threshold).
    """

    kind: str
    payload: tuple

    @classmethod
    def points(cls, pts):
        return cls("points", tuple(sorted(canon_key(p) for p in pts)))

    @classmethod
    def l1_threshold(cls, c):
        return cls("l1", (int(c),))

    @classmethod
    def l2_threshold_sq(cls, rsq):
        """Set {x : ||x||_2^2 > rsq}; integer threshold keeps it exact."""
        return cls("l2", (int(rsq),))

    def frontier(self):
        """Minimal member points; the supremum of any monotone table entry
        over the set is attained on them."""
        if self.kind == "points":
            return list(self.payload)
        if self.kind == "l1":
            c = self.payload[0]
            return _partitions(c + 1)
        if self.kind == "l2":
            rsq = self.payload[0]
            return _l2_frontier(rsq)
        raise UnsupportedSetKind(self.kind)

    def describe(self):
        if self.kind == "points":
            return "{" + ", ".join(str(list(p)) for p in self.payload) + "}"
        if self.kind == "l1":
            return f"{{|x|_1 > {self.payload[0]}}}"
        if self.kind == "l2":
            return f"{{|x|_2^2 > {self.payload[0]}}}"
        return self.kind


def _partitions(total):
    out = []

    def rec(rem, maxpart, acc):
        if rem == 0:
            out.append(tuple(acc))
            return
        for p in range(min(rem, maxpart), 0, -1):
            rec(rem - p, p, acc + [p])

    rec(total, total, [])
    return out


def _l2_frontier(rsq):
    """Minimal canonical points with squared norm > rsq."""
    maxpart = int(mp.floor(mp.sqrt(rsq))) + 1
    members = []
    # candidates: canonical points with parts <= maxpart and
    # norm^2 <= (sqrt(rsq)+1)^2 <= rsq + 2*maxpart; minimal points obey this.
    cap = rsq + 2 * maxpart

    def rec(maxp, acc, normsq):
        if acc:
            members.append((tuple(acc), normsq))
        for p in range(min(maxp, maxpart), 0, -1):
            if normsq + p * p <= cap:
                rec(p, acc + [p], normsq + p * p)

    rec(maxpart, [], 0)
    inside = [pt for pt, ns in members if ns > rsq]
    frontier = []
    for pt in inside:
        dominated = False
        for other in inside:
            if other != pt and _dominates(pt, other):
                dominated = True
                break
        if not dominated:
            frontier.append(pt)
    return sorted(frontier)


def _dominates(a, b):
    n = max(len(a), len(b))
    a = a + (0,) * (n - len(a))
    b = b + (0,) * (n - len(b))
    return all(x >= y for x, y in zip(a, b))


@dataclass
class IntegralTable:
    d: int
    n_max: int
    l_max: int
    width_target: object
    entries: dict = field(default_factory=dict)  # ("I", n, l, cx) -> Bound
    provenance: dict = field(default_factory=dict)
    derived: dict = field(default_factory=dict)  # (name, n, l, cx) -> (Bound, prov)
    points: tuple = ()

    # -- access ----------------------------------------------------------
    def base(self, n, l, x):
        key = ("I", n, l, canon_key(x))
        try:
            return self.entries[key]
        except KeyError:
            raise MissingEntry(
                f"table(d={self.d}) lacks I(n={n}, l={l}, x={key[3]}); "
                "rebuild with a larger range or --compute-missing"
            ) from None

    def has_base(self, n, l, x):
        return ("I", n, l, canon_key(x)) in self.entries

    # -- symmetrized square L ---------------------------------------------
    def mixed_green(self, n, x):
        """L_n(x): orbit-grouped symmetrized value, from base row l = 0."""
        cx = canon_key(x)
        key = ("L", n, 0, cx)
        if key in self.derived:
            return self.derived[key][0]
        distinct = len(set(v for v in cx if v != 0))
        if distinct > 4:
            raise UnsupportedOrbitShape(
                f"{cx} has {distinct} distinct nonzero magnitudes (max 4)"
            )
        if n == 0:
            # base row n=0 is the point mass: L_0(x) = 1/|orbit(x)|
            from .lattice import LatticePoint

            val = Bound(1) / Bound(LatticePoint(cx, self.d).orbit_size())
        else:
            total = Bound(0)
            for pt, w in orbit_assignments(cx, self.d):
                total = total + Bound.from_rational(w.numerator, w.denominator) * self.base(n, 0, pt)
            val = total
        self.derived[key] = (val, "orbit-sum")
        return val

    # -- dispersion square V ------------------------------------------------
    def dispersion_square(self, n, l):
        """V_{n,l}: fourth-power sine kernel against D^l C^n."""
        key = ("V", n, l, ())
        if key in self.derived:
            return self.derived[key][0]
        d = self.d
        two_d_sq = Bound(2 * d) ** 2
        val = (
            self.base(n, l, ())
            - 2 * self.base(n, l, (2,))
            + Bound.from_rational(d - 1, d) * self.base(n, l, (2, 2))
            + Bound.from_rational(1, 2 * d) * self.base(n, l, ())
            + Bound.from_rational(1, 2 * d) * self.base(n, l, (4,))
        ) / two_d_sq
        val = val.clamp_nonnegative()
        self.derived[key] = (val, "five-term")
        return val

    # -- weighted line J ------------------------------------------------------
    def weighted_line(self, n, l, x):
        """J_{n,l}(x): the displacement-weighted line through x."""
        if self.d < 2 * (n + 3) + 1:
            raise DimensionTooLow(
                f"J(n={n}) needs d >= {2*(n+3)+1}, have d={self.d}"
            )
        cx = canon_key(x)
        key = ("J", n, l, cx)
        if key in self.derived:
            return self.derived[key][0]
        d = self.d
        shift_sum = Bound(0)
        for pt, mult in sorted(neighbor_orbits_step(cx, d, 2).items()):
            shift_sum = shift_sum + mult * self.base(n + 3, l, pt)
        val = (
            self.base(n + 2, l + 1, cx)
            - Bound.from_rational(1, d) * self.base(n + 3, l, cx)
            + Bound.from_rational(1, 2 * d * d) * shift_sum
        )
        val = val.clamp_nonnegative()
        self.derived[key] = (val, "dispersion-split")
        return val

    def weighted_line_lowdim(self, n, l, x):
        """Alternative upper bound valid already for d >= 2(n+2)+1.

        Numerically coarser; kept behind an explicit call for dimensions
        where the sharp version is unavailable.
        """
        if self.d < 2 * (n + 2) + 1:
            raise DimensionTooLow(f"even the coarse line bound needs d >= {2*(n+2)+1}")
        val = self.base(n + 2, l + 1, x) + Bound.from_rational(4, self.d) * self.abs_kernel(n + 2, l, x)
        return val.clamp_nonnegative()

    # -- absolute-kernel bounds K, T, T*, U ----------------------------------
    def abs_kernel(self, n, l, x):
        """K_{n,l}(x): all applicable estimates, minimum wins."""
        cx = canon_key(x)
        key = ("K", n, l, cx)
        if key in self.derived:
            return self.derived[key][0]
        cands = []
        if cx == ():
            if l % 2 == 0:
                cands.append((self.base(n, l, ()), "exact-even"))
            else:
                cands.append(
                    ((self.base(n, l - 1, ()) * self.base(n, l + 1, ())).sqrt(), "interp-odd")
                )
        if not (cx == () and l % 2 == 0):
            cands.append(
                ((self.base(n, 2 * l, ()) * self.mixed_green(n, cx)).sqrt(), "cauchy-schwarz")
            )
            if l == 0 and n >= 1:
                prev = self.abs_kernel(n - 1, 0, cx)
                split = (
                    prev
                    + (self.base(n - 1, 2, ()) * self.mixed_green(n - 1, cx)).sqrt()
                    + (self.base(n, 4, ()) * self.mixed_green(n, cx)).sqrt()
                )
                cands.append((split, "l0-split"))
            if l == 0 and n == 0:
                cands.append((self.mixed_green(0, cx).sqrt(), "l0-base"))
        val, prov = cands[0]
        for v, p in cands[1:]:
            if v.hi < val.hi:
                val, prov = v, p
        if cx == () and l % 2 == 0:
            pass  # exact value, keep two-sided
        else:
            val = Bound(0, val.hi)  # upper estimates only
        self.derived[key] = (val, prov)
        return val

    def curvature_kernel(self, n, l, x, cstar_scale=None):
        """T_{n,l}(x), or T*_{n,l}(x) when cstar_scale = 1/alpha_F lower."""
        cx = canon_key(x)
        tag = "T" if cstar_scale is None else "Tstar"
        scale = Bound(1) if cstar_scale is None else cstar_scale
        key = (tag, n, l, cx) if cstar_scale is None else None
        if key and key in self.derived:
            return self.derived[key][0]
        d = self.d
        alt1 = Bound.from_rational(4, d) * self.abs_kernel(n, l, cx)
        alt2 = Bound.from_rational(2, d) * self.abs_kernel(n + 1, l, cx)
        if alt1.hi <= alt2.hi:
            alt, prov = alt1, "dsin-flat"
        else:
            alt, prov = alt2, "dsin-chat"
        val = self.abs_kernel(n, l + 1, cx) + scale * alt
        val = Bound(0, val.hi)
        if key:
            self.derived[key] = (val, prov)
        return val

    def sine_kernel(self, n, l, x):
        """U_{n,l}(x): minimum of the sine-kernel estimates."""
        cx = canon_key(x)
        key = ("U", n, l, cx)
        if key in self.derived:
            return self.derived[key][0]
        d = self.d
        cands = [(Bound.from_rational(1, d) * self.abs_kernel(n, l, cx), "via-K")]
        try:
            cands.append(
                ((self.dispersion_square(n, 2 * l) * self.mixed_green(n, cx)).sqrt(), "cauchy-schwarz")
            )
        except MissingEntry:
            pass
        if cx == () and l % 2 == 0:
            exact = Bound.from_rational(1, 2 * d) * (self.base(n, l, ()) - self.base(n, l, (2,)))
            cands.append((exact, "exact-even"))
        val, prov = cands[0]
        for v, p in cands[1:]:
            if v.hi < val.hi:
                val, prov = v, p
        val = Bound(0, val.hi)
        self.derived[key] = (val, prov)
        return val

    # -- suprema ----------------------------------------------------------------
    def sup_over_set(self, kind, n, l, spec, **kw):
        """Supremum of a monotone entry over a point set spec.

        kind in {"I","K","T","Tstar","U","J","L"}; returns (Bound, argmax).
        """
        fns = {
            "I": lambda nn, ll, x: self.base(nn, ll, x),
            "K": self.abs_kernel,
            "T": self.curvature_kernel,
            "Tstar": lambda nn, ll, x: self.curvature_kernel(nn, ll, x, kw.get("cstar_scale")),
            "U": self.sine_kernel,
            "J": self.weighted_line,
            "L": lambda nn, ll, x: self.mixed_green(nn, x),
        }
        if kind not in fns:
            raise UnsupportedSetKind(f"no such entry kind {kind!r}")
        vals = []
        arg = None
        hi = None
        for pt in spec.frontier():
            v = fns[kind](n, l, pt)
            vals.append(v)
            if hi is None or v.hi > hi:
                hi, arg = v.hi, pt
        if not vals:
            raise UnsupportedSetKind(f"empty frontier for {spec}")
        return bound_max(vals), arg


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def transition(d, m, x, srw_table=None):
    """Exact one-row value p_m(x)/(2d)^m as a degenerate enclosure."""
    if m < 0:
        raise ValueError("m >= 0")
    if srw_table is None or srw_table.n_done < m:
        srw_table = build_srw_table(d, m)
    p = srw_table.counts.get((m, canon_key(x)), 0)
    return Bound.from_rational(p, (2 * d) ** m)


def bessel_green(d, n, x, width_target=None, evaluator=None):
    """Certified base value at l = 0 (the n-fold critical convolution)."""
    if n == 0:
        return Bound(1) if canon_key(x) == () else Bound(0)
    ev = evaluator or GreenEvaluator(d, n, width_target=width_target)
    return ev.convolution_integral(n, x)


def required_points(base_points, d):
    """Closure of a point list under the 2-step shifts and orbit sums.

    Shifts cover the direction sums of the weighted line; orbit sums cover
    the symmetrized squares entering the absolute-kernel estimates.
    """
    base = {canon_key(p) for p in base_points}
    base.update({(), (2,), (2, 2), (4,)})  # dispersion-square helper points
    out = set(base)
    for p in base:
        out.update(neighbor_orbits_step(p, d, 2))
        for q, _w in orbit_assignments(p, d):
            out.add(q)
    return sorted(out, key=lambda t: (sum(t), t))


def build_I_table(d, n_max, l_max, points, width_target=None, progress=None):
    """Fill the base rows and run the recursion; every entry is an enclosure."""
    if width_target is None:
        width_target = mp.mpf(10) ** -17
    tab = IntegralTable(d, n_max, l_max, mp.mpf(width_target))
    pts = sorted({canon_key(p) for p in points}, key=lambda t: (sum(t), t))
    tab.points = tuple(pts)
    srw = build_srw_table(d, l_max + 1)
    ev = GreenEvaluator(d, n_max, width_target=width_target)
    for cx in pts:
        # n = 0 row: exact transition rationals
        for m in range(l_max + 1):
            tab.entries[("I", 0, m, cx)] = transition(d, m, cx, srw)
            tab.provenance[("I", 0, m, cx)] = "transition"
        vals = ev.convolution_integrals(list(range(1, n_max + 1)), cx)
        for n, v in vals.items():
            tab.entries[("I", n, 0, cx)] = v
            tab.provenance[("I", n, 0, cx)] = "bessel"
        for n in range(1, n_max + 1):
            for l in range(1, l_max + 1):
                v = tab.entries[("I", n, l - 1, cx)] - tab.entries[("I", n - 1, l - 1, cx)]
                tab.entries[("I", n, l, cx)] = v
                tab.provenance[("I", n, l, cx)] = "recursion"
        if progress:
            progress(cx)
    return tab


def recursion_residuals(tab):
    """Max residual midpoint of base(n,m) - base(n,m-1) + base(n-1,m-1).

    Zero must lie in each residual interval; returns (ok, worst)."""
    worst = mp.mpf(0)
    ok = True
    for (name, n, l, cx), v in tab.entries.items():
        if name != "I" or n < 1 or l < 1:
            continue
        res = v - tab.entries[("I", n, l - 1, cx)] + tab.entries[("I", n - 1, l - 1, cx)]
        if not res.contains(0):
            ok = False
        worst = max(worst, abs(res.mid))
    return ok, worst


# ---------------------------------------------------------------------------
# cache file
# ---------------------------------------------------------------------------

_MAGIC = f"NOBLE-ITAB {FORMAT_VERSION}"


def save_table(tab, path):
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        f.write(
            f"{_MAGIC} d={tab.d} nmax={tab.n_max} lmax={tab.l_max} "
            f"width={mp.nstr(tab.width_target, 8)}\n"
        )
        for key in sorted(tab.entries):
            name, n, l, cx = key
            v = tab.entries[key]
            (s1, m1, e1, b1), (s2, m2, e2, b2) = v.serialize()
            coords = ",".join(str(c) for c in cx)
            prov = tab.provenance.get(key, "?")
            f.write(
                f"{name} {n} {l} [{coords}] {s1}:{m1}:{e1}:{b1} {s2}:{m2}:{e2}:{b2} {prov}\n"
            )
    os.replace(tmp, path)


def load_table(path, validate=True):
    with open(path) as f:
        header = f.readline().split()
        if header[:2] != _MAGIC.split():
            raise ValueError(f"not an integral cache: {' '.join(header[:2])!r}")
        meta = dict(p.split("=") for p in header[2:])
        tab = IntegralTable(
            int(meta["d"]), int(meta["nmax"]), int(meta["lmax"]), mp.mpf(meta["width"])
        )
        pts = set()
        for line in f:
            parts = line.split()
            if not parts:
                continue
            name, n, l, coords = parts[0], int(parts[1]), int(parts[2]), parts[3]
            cx = tuple(int(v) for v in coords[1:-1].split(",") if v != "")
            lo = tuple(int(v) for v in parts[4].split(":"))
            hi = tuple(int(v) for v in parts[5].split(":"))
            key = (name, n, l, cx)
            tab.entries[key] = Bound.deserialize((lo, hi))
            tab.provenance[key] = parts[6] if len(parts) > 6 else "?"
            pts.add(cx)
        tab.points = tuple(sorted(pts, key=lambda t: (sum(t), t)))
    if validate:
        ok, _worst = recursion_residuals(tab)
        if not ok:
            raise ValueError(f"cache {path} fails the recursion residual check")
    return tab
