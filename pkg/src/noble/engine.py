"""Bootstrap decision engine.

Evaluates the three improvement bounds from a set of rewrite-level
constants and the integral table, compares them against the chosen
thresholds, and renders the verdict.  Also houses the diagram bounds
driven by the bootstrap constants and the numerical verification of the
five-piece second-derivative decomposition on synthetic inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bessel import DimensionTooLow
from .bounds import Bound, as_bound, bound_max, bound_sum
from .integrals import PointSetSpec
from .lattice import canon_key


class DenominatorGate(ArithmeticError):
    pass


class GateViolation(ArithmeticError):
    pass


class UnsupportedN(ValueError):
    pass


class SyntheticPoleTooClose(ValueError):
    pass


@dataclass
class BootstrapConfig:
    d: int
    Gamma: tuple  # (Gamma1, Gamma2, Gamma3)
    c_mu: object
    index_set: list  # [(n, l, PointSetSpec, weight), ...]
    z_I_description: str = "critical non-backtracking fugacity"
    gamma_rule: str = "midpoint"  # or "computed"

    def __post_init__(self):
        self.Gamma = tuple(as_bound(g) for g in self.Gamma)
        self.c_mu = as_bound(self.c_mu)
        if not self.c_mu.lo > 1:
            raise ValueError("c_mu must exceed 1")
        for g in self.Gamma:
            if not g.lo > 0:
                raise ValueError("thresholds must be positive")
        norm = []
        for (n, l, spec, weight) in self.index_set:
            if n not in (0, 1, 2):
                raise UnsupportedN(f"n={n} not in {{0,1,2}}")
            if self.d < 2 * (n + 3) + 1:
                raise DimensionTooLow(
                    f"index (n={n}, l={l}) needs d >= {2*(n+3)+1}, have {self.d}"
                )
            w = as_bound(weight)
            if not w.lo > 0:
                raise ValueError("index weights must be positive")
            norm.append((n, l, spec, w))
        self.index_set = norm

    def gamma2_prime(self):
        d = self.d
        return Bound.from_rational(2 * d - 2, 2 * d - 1) * self.Gamma[1]


def percolation_index_set():
    """The d >= 11 percolation demo index set."""
    far = PointSetSpec.l2_threshold_sq(1)
    origin = PointSetSpec.points([()])
    return [
        (0, 0, far, 1),
        (1, 0, far, 1),
        (1, 1, far, 1),
        (1, 2, far, 1),
        (1, 3, far, 1),
        (1, 4, origin, 1),
    ]


@dataclass
class DerivedConstants:
    """Quantities shared by the improvement formulas."""

    gamma2_prime: Bound
    K_dF: Bound  # 1 / (alpha_F lower - one-sided displacement remainder)
    alpha_F_dev: Bound  # max |alpha_F - 1| over the window

    @classmethod
    def from_bounds(cls, rb, cfg):
        margin = rb.denominator_margin()
        if not margin.lo > 0:
            raise GateViolation("denominator margin not positive")
        dev = max(abs(rb.alpha_F.lo - 1), abs(rb.alpha_F.hi - 1))
        return cls(
            gamma2_prime=cfg.gamma2_prime(),
            K_dF=(1 / margin).clamp_nonnegative(),
            alpha_F_dev=Bound(0, dev),
        )


# ---------------------------------------------------------------------------
# candidate bounds for the three bootstrap functions
# ---------------------------------------------------------------------------

def improve_f1(rb, cfg, ledger=None):
    """Improved fugacity bound: max{beta_mu, c_mu}(1 + Pi) / (1 - 2d/(2d-1) Psi)."""
    d = cfg.d
    den = 1 - Bound.from_rational(2 * d, 2 * d - 1) * rb.psi_kappa_lower
    if not den.lo > 0:
        raise DenominatorGate(f"directed-sum denominator {den} not positive")
    beta_mu = ledger.beta_mu if ledger is not None else Bound(1)
    improved = beta_mu.max(cfg.c_mu) * (1 + rb.pi_iota_upper) / den
    initial = _f1_initial(cfg, ledger)
    return Bound(0, initial.max(improved).hi)


def _f1_initial(cfg, ledger):
    if ledger is not None and ledger.f1_initial is not None:
        return ledger.f1_initial
    if ledger is not None:
        d = cfg.d
        return (
            ((2 * d - 1) * ledger.mubar).max((2 * d - 1) * cfg.c_mu * ledger.mu)
        )
    return Bound(1)


def improve_f2(rb, cfg):
    """Improved amplitude bound for the normalized two-point function."""
    d = cfg.d
    margin = rb.denominator_margin()
    if not margin.lo > 0:
        raise DenominatorGate("denominator margin not positive")
    num = Bound(rb.c_phi.hi) + rb.alpha_phi_abs + rb.beta_R_Phi
    improved = Bound.from_rational(2 * d - 1, 2 * d - 2) * num / margin
    # the initial point is dominated by the comparison walk: value 1
    return Bound(0, improved.max(Bound(1)).hi)


def a_of_d(rb):
    """Amplitude of the infrared bound."""
    num = Bound(rb.c_phi.hi) + rb.alpha_phi_abs + rb.beta_R_Phi
    den = rb.numerator_margin().min(rb.denominator_margin())
    if not den.lo > 0:
        raise GateViolation("amplitude denominator not positive")
    return num / den


def f3_initial(table, cfg):
    """Initial weighted-diagram bound from the comparison-walk table."""
    d = cfg.d
    best = None
    details = []
    for (n, l, spec, weight) in cfg.index_set:
        sup, arg = table.sup_over_set("J", n, l, spec)
        val = sup / weight
        details.append(((n, l, spec.describe()), val, arg))
        best = val if best is None else best.max(val)
    pref = Bound.from_rational(2 * d - 2, 2 * d - 1)
    return pref * best, details


def f3_improve(table, rb, cfg, ledger=None):
    """Improved weighted-diagram bound; the most technical candidate.

    Sums the five decomposition pieces per index entry, each transcribed
    from its closed bound, evaluated at the frontier of the index set.
    """
    dc = DerivedConstants.from_bounds(rb, cfg)
    best = None
    details = []
    for (n, l, spec, weight) in cfg.index_set:
        total_sup = None
        for x in spec.frontier():
            tot = _f3_terms_at(table, rb, cfg, dc, n, l, x)
            total_sup = tot if total_sup is None else total_sup.max(tot)
        val = total_sup / weight
        details.append(((n, l, spec.describe()), val))
        best = val if best is None else best.max(val)
    return Bound(0, best.hi), details


def _f3_terms_at(table, rb, cfg, dc, n, l, x):
    cx = canon_key(x)
    d = cfg.d
    g2 = dc.gamma2_prime
    KdF = dc.K_dF
    c_hi = Bound(rb.c_phi.hi)
    a_abs = rb.alpha_phi_abs
    aF_lo = Bound(rb.alpha_F.lo)
    aF_hi = Bound(rb.alpha_F.hi)
    bRP = rb.beta_R_Phi
    bdRF = rb.beta_dR_F
    bdRP = rb.beta_dR_Phi
    J = table.weighted_line
    T = table.curvature_kernel
    U = table.sine_kernel
    K = table.abs_kernel
    cstar = 1 / aF_lo

    def shift_sum(nn, ll):
        from .lattice import neighbor_orbits_step

        tot = Bound(0)
        for pt, mult in sorted(neighbor_orbits_step(cx, d, 2).items()):
            tot = tot + mult * table.base(nn, ll, pt)
        return tot

    # dominant piece
    if n == 0:
        h1 = (
            c_hi * J(0, l, cx)
            + a_abs * J(0, l + 1, cx)
            + (a_abs / aF_lo) * table.base(1, l + 1, cx)
            + Bound.from_rational(1, 2 * d * d) * (a_abs / aF_lo ** 2) * shift_sum(2, l)
        )
    elif n == 1:
        h1 = (
            (1 / aF_lo) * c_hi ** 2 * J(1, l, cx)
            + c_hi * (1 / aF_lo) * a_abs * J(0, l, cx)
            + 2 * c_hi * (1 / aF_lo) * a_abs * J(1, l + 1, cx)
            + a_abs ** 2 * (1 / aF_lo) * J(0, l + 1, cx)
            + (1 / aF_lo) * a_abs ** 2 * J(1, l + 2, cx)
            + ((bRP + bdRF * g2) / aF_lo ** 2)
            * (c_hi * T(3, l, cx) + a_abs * T(3, l + 1, cx) + a_abs * T(2, l, cx))
        )
    elif n == 2:
        t1 = (
            (1 / aF_lo ** 2)
            * c_hi ** 2
            * (c_hi * J(2, l, cx) + a_abs * J(1, l, cx) + 3 * a_abs * J(2, l + 1, cx))
            + (1 / aF_lo ** 2) * a_abs ** 2 * c_hi * (2 * J(1, l + 1, cx) + 3 * J(2, l + 2, cx))
            + (1 / aF_lo ** 2) * a_abs ** 3 * (J(2, l + 3, cx) + J(1, l + 2, cx))
        )
        t2 = (
            ((bRP + bdRP * g2) / aF_lo ** 2)
            * (c_hi / aF_lo + g2)
            * (c_hi * T(4, l, cx) + a_abs * T(4, l + 1, cx) + a_abs * T(3, l, cx))
            + a_abs
            * ((bRP + bdRP * g2) / aF_lo ** 3)
            * (c_hi * T(4, l + 1, cx) + a_abs * T(4, l + 2, cx) + a_abs * T(3, l + 1, cx))
        )
        h1 = t1 + t2
    else:  # pragma: no cover - guarded in config
        raise UnsupportedN(str(n))

    ts = lambda nn, ll: table.curvature_kernel(nn, ll, cx, cstar_scale=cstar)
    h2 = (
        bdRF
        * KdF
        * g2 ** n
        * (
            (c_hi * ts(n + 2, l) + a_abs * ts(n + 2, l + 1)) * (1 / aF_lo + KdF)
            + a_abs * (1 / aF_lo) * ts(n + 1, l)
        )
        + aF_hi * bdRP * KdF ** 2 * ts(n + 2, l)
    )

    h3 = (
        2 * g2 ** (n + 1) * KdF ** 2 * (bdRF + aF_hi * dc.alpha_F_dev) * U(n + 3, l, cx)
        + 2
        * g2 ** n
        * KdF ** 2
        * a_abs
        * (bdRF / aF_lo + dc.alpha_F_dev)
        * U(n + 2, l, cx)
    )

    h4 = KdF * (bdRP * K(n, l, cx) + bdRF * g2 * K(n + 1, l, cx))

    h5 = (
        2 * KdF ** 2 * g2 ** (n + 1) * (2 * aF_hi * bdRF + bdRF ** 2) * U(n + 3, l, cx)
        + 2
        * KdF ** 2
        * g2 ** n
        * (aF_hi * bdRP + a_abs * bdRF + bdRF * bdRP)
        * U(n + 2, l, cx)
    )

    return Bound(0, (h1 + h2 + h3 + h4 + h5).hi)


# ---------------------------------------------------------------------------
# the decision
# ---------------------------------------------------------------------------

@dataclass
class Verdict:
    holds: bool
    gamma: tuple  # reported gamma triple (Bounds)
    candidates: tuple  # computed candidate bounds before the margin rule
    margins: tuple  # candidate.hi / Gamma
    failing: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def decide_P(candidates, cfg):
    """Assemble the verdict from candidate bounds on the three functions.

    Holds iff every candidate stays strictly below its threshold; the
    reported gamma uses the midpoint rule by default.
    """
    from mpmath import mp

    failing = []
    gammas = []
    margins = []
    for i, (cand, G) in enumerate(zip(candidates, cfg.Gamma), start=1):
        margins.append(cand.hi / G.lo)
        if not cand.hi < G.lo:
            failing.append(f"f{i}: candidate {mp.nstr(cand.hi, 10)} !< {mp.nstr(G.lo, 10)}")
            gammas.append(Bound(cand.hi))
        else:
            if cfg.gamma_rule == "midpoint":
                gammas.append(Bound((cand.hi + G.lo) / 2))
            else:
                gammas.append(Bound(cand.hi))
    return Verdict(
        holds=not failing,
        gamma=tuple(gammas),
        candidates=tuple(candidates),
        margins=tuple(margins),
        failing=failing,
    )


# ---------------------------------------------------------------------------
# diagram bounds driven by the bootstrap constants
# ---------------------------------------------------------------------------

def diagram_bounds(
    kind,
    m_vec,
    M,
    x,
    mubar,
    cfg,
    table,
    walk_table=None,
):
    """Numerical bound on a repulsive diagram with explicit short prefix.

    kind in {"bubble", "triangle", "square"}; m_vec are the per-line
    minimal step counts, M the prefix cutoff.  Falls back to the plain
    kernel path when no short-walk table is available.
    """
    d = cfg.d
    mubar = as_bound(mubar)
    cx = canon_key(x)
    lines = {"bubble": 2, "triangle": 3, "square": 4}.get(kind)
    if lines is None:
        raise ValueError(f"unknown diagram kind {kind!r}")
    if len(m_vec) != lines:
        raise ValueError(f"{kind} needs {lines} line entries")
    m_tot = sum(m_vec)
    if m_tot > M:
        raise ValueError("prefix cutoff must be >= total minimal length")
    g2 = cfg.gamma2_prime()
    g1 = Bound.from_rational(2 * d, 2 * d - 1) * cfg.Gamma[0]

    def tail_conv(j, steps):
        # (D*^steps * G*^j)(x) under the amplitude bound
        return g2 ** j * table.abs_kernel(j, steps, cx)

    if walk_table is None or walk_table.n_done < M - 1:
        # plain non-repulsive path
        return Bound(
            0,
            (g1 ** m_tot * g2 ** lines * table.abs_kernel(lines, m_tot, cx)).hi,
        )

    def a_count(i):
        c = walk_table.counts.get((i, cx), 0)
        return Bound(c)

    def prefix_coeff(i):
        r = i - m_tot
        if kind == "bubble":
            return Bound(r + 1)
        if kind == "triangle":
            return Bound((r + 1) * (r + 2)) / 2
        return Bound((r + 1) * (r + 2) * (r + 3)) / 6

    total = Bound(0)
    for i in range(m_tot, M):
        total = total + prefix_coeff(i) * a_count(i) * mubar ** i
    lead = (2 * d) ** M * mubar ** M
    r = M - m_tot
    # multiplicities of the cut-off terms: stars-and-bars counts of the
    # explicit prefix lengths still free when j lines stay unexpanded
    if kind == "bubble":
        tail_coeffs = [Bound(r), Bound(1)]
    elif kind == "triangle":
        tail_coeffs = [Bound(r * (r + 1)) / 2, Bound(r), Bound(1)]
    else:
        tail_coeffs = [
            Bound((r + 1) * (r + 2) * (r + 3)) / 6,
            Bound(r * (r + 1)) / 2,
            Bound(r),
            Bound(1),
        ]
    for j, coeff in enumerate(tail_coeffs, start=1):
        total = total + coeff * lead * tail_conv(j, M)
    return Bound(0, total.hi)


def weighted_ladder(h0_values, h1_cutoff, l, M, mubar, d):
    """Step-down bound for weighted one-line diagrams.

    h0_values: dict i -> Bound on the zero-line diagram at steps i;
    h1_cutoff: Bound at the cutoff M; returns the bound at step weight l.
    """
    mubar = as_bound(mubar)
    total = Bound(0)
    for i in range(l, M):
        total = total + (2 * d * mubar) ** (i - l) * as_bound(h0_values[i])
    total = total + (2 * d * mubar) ** (M - l) * as_bound(h1_cutoff)
    return total


# ---------------------------------------------------------------------------
# synthetic verification of the five-piece decomposition
# ---------------------------------------------------------------------------

class SyntheticRewrite:
    """Explicit rewrite data on a small lattice for the identity check.

    R_F and R_Phi are finite-support totally rotationally symmetric
    functions given as {canonical point: value} dicts.
    """

    def __init__(self, d, c_phi, alpha_phi, c_F, alpha_F, r_F, r_Phi):
        self.d = d
        self.c_phi = float(c_phi)
        self.alpha_phi = float(alpha_phi)
        self.c_F = float(c_F)
        self.alpha_F = float(alpha_F)
        self.r_F = {canon_key(k): float(v) for k, v in r_F.items()}
        self.r_Phi = {canon_key(k): float(v) for k, v in r_Phi.items()}

    def _hat(self, fn, k):
        tot = 0.0
        for pt, val in self._terms(fn):
            tot += val * math.cos(float(np.dot(pt, k)))
        return tot

    def _terms(self, fn):
        key = id(fn)
        cache = getattr(self, "_term_cache", None)
        if cache is None:
            cache = {}
            self._term_cache = cache
        if key not in cache:
            from itertools import permutations, product

            terms = []
            for cpt, val in fn.items():
                pts = set()
                full = tuple(cpt) + (0,) * (self.d - len(cpt))
                for perm in permutations(full):
                    for signs in product((1, -1), repeat=self.d):
                        pts.add(tuple(s * c for s, c in zip(signs, perm)))
                for pt in pts:
                    terms.append((np.array(pt, dtype=float), val))
            cache[key] = terms
        return cache[key]

    # analytic k-space pieces
    def dhat(self, k):
        return float(np.cos(k).mean())

    def dhat_sin(self, k):
        return float((np.sin(k) ** 2).sum()) / self.d ** 2

    def F_hat(self, k):
        return self.c_F + self.alpha_F * self.dhat(k) + self._hat(self.r_F, k)

    def Phi_hat(self, k):
        return self.c_phi + self.alpha_phi * self.dhat(k) + self._hat(self.r_Phi, k)

    def G_hat(self, k):
        return self.Phi_hat(k) / (1 - self.F_hat(k))

    def grad_hat(self, fn, k):
        out = np.zeros(self.d)
        for pt, val in self._terms(fn):
            out += -val * np.sin(float(np.dot(pt, k))) * pt
        return out

    def lap_hat(self, fn, k):
        tot = 0.0
        for pt, val in self._terms(fn):
            tot += -val * math.cos(float(np.dot(pt, k))) * float(np.dot(pt, pt))
        return tot


def decomposition_check(synth, k_samples, h=1e-3, rng=None):
    """Max |finite-difference Laplacian + sum of the five pieces| over samples.

    The Laplacian of G-hat is computed by Richardson-extrapolated central
    differences; the pieces analytically.  Returns (max_residual, details).
    """
    d = synth.d
    worst = 0.0
    for k in k_samples:
        k = np.asarray(k, dtype=float)
        one_minus_F = 1 - synth.F_hat(k)
        if abs(one_minus_F) < 0.05:
            raise SyntheticPoleTooClose(f"1 - F = {one_minus_F:.4g} at k={k}")
        # finite-difference Laplacian, fourth order via Richardson
        lap = 0.0
        for s in range(d):
            e = np.zeros(d)
            e[s] = 1.0
            def g(t):
                return synth.G_hat(k + t * e)
            d2_h = (g(h) - 2 * g(0.0) + g(-h)) / h ** 2
            d2_h2 = (g(h / 2) - 2 * g(0.0) + g(-h / 2)) / (h / 2) ** 2
            lap += (4 * d2_h2 - d2_h) / 3
        pieces = _decomposition_pieces(synth, k)
        resid = abs(lap + sum(pieces))
        worst = max(worst, resid)
    return worst


def _decomposition_pieces(synth, k):
    d = synth.d
    dh = synth.dhat(k)
    dsin = synth.dhat_sin(k)
    F = synth.F_hat(k)
    G = synth.G_hat(k)
    aF = synth.alpha_F
    aP = synth.alpha_phi
    cP = synth.c_phi
    one_minus_F = 1 - F
    F0 = synth.F_hat(np.zeros(d))
    cstar = 1.0 / (1 - F0 + aF * (1 - dh))
    rf0k = (synth._hat(synth.r_F, np.zeros(d)) - synth._hat(synth.r_F, k))
    E = rf0k * cstar / one_minus_F
    mstar = dh - 2 * dsin * cstar
    rphi_k = synth._hat(synth.r_Phi, k)

    h1 = (aF * (cP + aP * dh) * cstar + aP) * cstar * mstar
    h2 = (
        -(aF * (cP + aP * dh) * (cstar + 1 / one_minus_F) + aP) * E * mstar
        + aF * rphi_k / one_minus_F ** 2 * mstar
    )
    h3 = (
        2
        * dsin
        / one_minus_F
        * (aF * G + aP)
        * (E - (aF - 1) / one_minus_F)
    )
    lap_rp = synth.lap_hat(synth.r_Phi, k)
    lap_rf = synth.lap_hat(synth.r_F, k)
    h4 = -lap_rp / one_minus_F - lap_rf / one_minus_F * G
    grad_rf = synth.grad_hat(synth.r_F, k)
    grad_rp = synth.grad_hat(synth.r_Phi, k)
    grad_dh = -np.sin(k) / d
    grad_phi = aP * grad_dh + grad_rp
    h5 = (
        -2.0
        * float(np.dot(grad_rf, grad_rf) + 2 * aF * np.dot(grad_dh, grad_rf))
        / one_minus_F ** 2
        * G
        - 2.0
        / one_minus_F ** 2
        * float(aF * np.dot(grad_rp, grad_dh) + np.dot(grad_phi, grad_rf))
    )
    return [h1, h2, h3, h4, h5]
