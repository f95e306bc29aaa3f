"""Translation of coefficient-level bounds into rewrite-level bounds.

A `BetaLedger` carries the per-order coefficient bounds (five summable
families plus the split and remainder constants) together with the
fugacity enclosures.  The five steps below turn them into the constants
the bootstrap engine consumes: the constant/step-weight window of the
numerator, the step weight of the denominator, and the l1 / displacement
norms of both remainders, including the sharper parity-aware lower
variant.

All formulas are evaluated in interval arithmetic; infinite sums are a
finite prefix plus certified geometric tails supplied by the ledger.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .aggregation import geometric_sum
from .bounds import Bound, as_bound, bound_max, bound_sum
from .ledger import LedgerValidationError


class GateViolation(ArithmeticError):
    pass


class GeometricFactorNotContractive(GateViolation):
    pass


SEQUENCE_FAMILIES = ("xi", "xi_iota", "dxi", "dxi_iota_0", "dxi_iota_iota")

SPLIT_KEYS = (
    "xi_alpha0_10",
    "xi_alpha0_01",
    "xi_alpha_e1_10",
    "xi_alpha_e1_01",
    "xi_iota_alpha_I",
    "xi_iota_alpha_II",
    "sum_xi_iota_alpha_I",
    "sum_xi_iota_alpha_II",
    "sum_psi_alpha_I_10",
    "sum_psi_alpha_I_01",
    "sum_psi_alpha_II_10",
    "sum_psi_alpha_II_01",
    "sum_pi_alpha_lower",
    "sum_pi_alpha_upper",
    "sum_pi_lower_1",
    "psi_lower_0",
)

REMAINDER_KEYS = (
    "xi_R_0",
    "xi_R_1",
    "dxi_R_0",
    "dxi_R_1",
    "psi_R_I_0",
    "psi_R_I_1",
    "psi_R_II_0",
    "psi_R_II_1",
    "dpsi_R_I_0",
    "dpsi_R_I_1",
    "dpsi_R_II_0",
    "dpsi_R_II_1",
    "xi_iota_R_I",
    "xi_iota_R_II",
    "dxi_iota_R_I",
    "dxi_iota_R_II",
    "pi_R",
    "dpi_R",
)


class SeriesBounds:
    """A summable nonnegative sequence beta^[N], N >= 0.

    Backed either by an explicit list with a geometric tail ratio, or by a
    matrix-product bound (v^T B^N w) aggregated in closed form.
    """

    def __init__(self, values=None, tail_ratio=None, matrix=None):
        if (values is None) == (matrix is None):
            raise LedgerValidationError("series needs either values or a matrix")
        self.values = [as_bound(v) for v in values] if values is not None else None
        self.tail_ratio = as_bound(tail_ratio) if tail_ratio is not None else None
        self.matrix = matrix
        if self.values is not None:
            for v in self.values:
                if v.hi < 0:
                    raise LedgerValidationError("sequence entries must be >= 0")

    def entry(self, N):
        """beta^[N] for small N (exact list entry or matrix power)."""
        if self.values is not None:
            if N < len(self.values):
                return self.values[N]
            if self.tail_ratio is None:
                return Bound(0)
            last = len(self.values) - 1
            return Bound(0, (self.values[last] * self.tail_ratio ** (N - last)).hi)
        vec = list(self.matrix.w)
        for _ in range(N):
            vec = [
                bound_sum(self.matrix.B[i][j] * vec[j] for j in range(len(vec)))
                for i in range(len(vec))
            ]
        return bound_sum(vi * wi for vi, wi in zip(self.matrix.v, vec)).clamp_nonnegative()

    def total(self, parity="all"):
        if self.values is not None:
            from .aggregation import scalar_series_sum

            return scalar_series_sum(self.values, parity, self.tail_ratio)
        return geometric_sum(self.matrix, parity)

    def sum_from(self, start, parity="all"):
        """sum of beta^[N] over N >= start with matching parity."""
        if self.values is not None:
            out = Bound(0)
            for N in range(start, len(self.values)):
                if parity == "all" or (parity == "even") == (N % 2 == 0):
                    out = out + self.values[N]
            if self.tail_ratio is not None and self.values:
                r = self.tail_ratio
                if not r.hi < 1:
                    raise LedgerValidationError(f"tail ratio {r} not contractive")
                last = len(self.values) - 1
                n0 = max(start, last + 1)
                if parity != "all":
                    want_even = parity == "even"
                    if (n0 % 2 == 0) != want_even:
                        n0 += 1
                    tail = self.values[last] * r ** (n0 - last) / (1 - r * r)
                else:
                    tail = self.values[last] * r ** (n0 - last) / (1 - r)
                out = out + Bound(0, tail.hi)
            return out
        head = Bound(0)
        for N in range(start):
            if parity == "all" or (parity == "even") == (N % 2 == 0):
                head = head + self.entry(N)
        return (self.total(parity) - head).clamp_nonnegative()


@dataclass
class BetaLedger:
    d: int
    mu: Bound
    mubar: Bound
    sequences: dict
    splits: dict = field(default_factory=dict)
    remainders: dict = field(default_factory=dict)
    f1_initial: Bound = None
    beta_mu: Bound = None        # sup mubar/mu
    beta_mu_lower: Bound = None  # inf mu
    source: str = ""

    def __post_init__(self):
        self.mu = as_bound(self.mu)
        self.mubar = as_bound(self.mubar)
        if self.beta_mu is None:
            self.beta_mu = Bound(1).max(self.mubar / self.mu)
        else:
            self.beta_mu = as_bound(self.beta_mu)
        if self.beta_mu_lower is None:
            self.beta_mu_lower = Bound(self.mu.lo)
        for fam in SEQUENCE_FAMILIES:
            if fam not in self.sequences:
                raise LedgerValidationError(f"missing sequence family {fam!r}")
        for key in SPLIT_KEYS:
            self.splits.setdefault(key, Bound(0))
        for key in REMAINDER_KEYS:
            self.remainders.setdefault(key, Bound(0))
        if self.f1_initial is not None:
            self.f1_initial = as_bound(self.f1_initial)
        self.validate()

    def seq(self, fam):
        return self.sequences[fam]

    def split(self, key):
        return self.splits[key]

    def rem(self, key):
        return self.remainders[key]

    def validate(self):
        d = self.d
        if not (self.mu.lo > 0 and self.mu.hi < mp_half()):
            raise LedgerValidationError(f"mu={self.mu} must lie in (0, 1/2)")
        if not (self.mubar.lo > 0 and self.mubar.hi < mp_half()):
            raise LedgerValidationError(f"mubar={self.mubar} must lie in (0, 1/2)")
        # invertibility condition on the directed-coefficient sums
        gate = (2 * d - 1) * self.mubar / (1 - self.mu) * self.seq("xi_iota").total()
        if not gate.hi < 1:
            raise LedgerValidationError(
                f"invertibility gate (2d-1) mubar/(1-mu) * xi_iota_abs = {gate} >= 1"
            )


def mp_half():
    from mpmath import mp

    return mp.mpf(1) / 2


@dataclass
class RewriteBounds:
    """Bounds on the constant/step/remainder split of the rewrite."""

    c_phi: Bound
    alpha_F: Bound
    alpha_phi_abs: Bound
    pi_iota_upper: Bound = None
    psi_kappa_lower: Bound = None
    beta_R_F: Bound = None
    beta_R_Phi: Bound = None
    beta_dR_Phi: Bound = None
    beta_dR_F: Bound = None
    beta_dR_F_lower: Bound = None
    diagnostics: list = field(default_factory=list)

    def check_gates(self):
        failed = []
        if not (self.alpha_F.lo - self.beta_dR_F_lower.hi > 0):
            failed.append(
                "alpha_F lower minus the one-sided displacement remainder must be positive"
            )
        if not (self.c_phi.lo - self.alpha_phi_abs.hi - self.beta_R_Phi.hi > 0):
            failed.append(
                "c_phi lower minus |alpha_phi| minus the numerator remainder must be positive"
            )
        if failed:
            raise GateViolation("; ".join(failed))

    def denominator_margin(self):
        return Bound(self.alpha_F.lo) - self.beta_dR_F_lower

    def numerator_margin(self):
        return Bound(self.c_phi.lo) - self.alpha_phi_abs - self.beta_R_Phi


def _contraction(ledger):
    """w = 2d mubar/(1-mu) and q = w * xi_iota_abs; q must contract."""
    d, mu, mubar = ledger.d, ledger.mu, ledger.mubar
    w = 2 * d * mubar / (1 - mu)
    q = w * ledger.seq("xi_iota").total()
    if not q.hi < 1:
        raise GeometricFactorNotContractive(
            f"2d mubar xi_iota_abs / (1-mu) = {q} not < 1"
        )
    return w, q


def step1_simple_bounds(ledger):
    """Window for c_phi, range of alpha_F, |alpha_phi|, and the directed sums."""
    d, mu, mubar = ledger.d, ledger.mu, ledger.mubar
    s = ledger.split
    pref = 2 * d * mu / (1 - mu * mu)

    c_lo = 1 - s("xi_alpha0_10") - pref * s("xi_iota_alpha_I")
    c_hi = 1 + s("xi_alpha0_01") + pref * mu * s("xi_iota_alpha_II")
    c_phi = Bound(c_lo.lo, c_hi.hi)

    a_lo = pref * (
        1
        - s("sum_psi_alpha_I_10")
        - mu * s("sum_psi_alpha_II_01")
        - s("sum_pi_alpha_upper") / (1 - mu * mu)
    )
    a_hi = pref * (
        1
        + s("sum_psi_alpha_I_01")
        + mu * s("sum_psi_alpha_II_10")
        - s("sum_pi_alpha_lower") / (1 - mu * mu)
    )
    alpha_F = Bound(a_lo.lo, a_hi.hi)

    alpha_phi = bound_max(
        [
            2 * d * s("xi_alpha_e1_10") + pref * s("sum_xi_iota_alpha_I"),
            2 * d * s("xi_alpha_e1_01") + pref * mu * s("sum_xi_iota_alpha_II"),
        ]
    )
    alpha_phi = Bound(0, alpha_phi.hi)

    pi_upper = 2 * d * mubar * ledger.seq("xi_iota").total("even") - s("sum_pi_lower_1")
    psi_lower = ledger.beta_mu * ledger.seq("xi").total("odd") - s("psi_lower_0")

    return RewriteBounds(
        c_phi=c_phi,
        alpha_F=alpha_F,
        alpha_phi_abs=alpha_phi,
        pi_iota_upper=Bound(pi_upper.hi),
        psi_kappa_lower=Bound(psi_lower.hi),
    )


def step2_R_l1(ledger):
    """l1 norms of both remainder functions (upper Bounds)."""
    d, mu, mubar = ledger.d, ledger.mu, ledger.mubar
    r = ledger.rem
    bmu = ledger.beta_mu
    xi_abs = ledger.seq("xi").total()
    xii_abs = ledger.seq("xi_iota").total()
    w, q = _contraction(ledger)

    chain = (1 + bmu * xi_abs) / (1 - q)
    f_tail = (2 * d * mu / (1 - mu)) * chain * q ** 2
    phi_tail = (2 * d * mu * xii_abs / (1 - mu)) * chain * q

    beta_R_F = (
        f_tail
        + (2 * d * mu / (1 - mu * mu))
        * (
            r("psi_R_I_0") + r("psi_R_I_1")
            + mu * (r("psi_R_II_0") + r("psi_R_II_1"))
            + bmu * (1 + mu) * ledger.seq("xi").sum_from(2)
        )
        + (2 * d * mu / (1 - mu * mu) ** 2)
        * (r("pi_R") + 2 * d * mubar * ledger.seq("xi_iota").sum_from(1))
        + ((2 * d * mu) ** 2 * mubar / (1 - mu * mu) ** 2) * (2 + mu) * xii_abs
        + ((2 * d) ** 2 * mubar ** 2 / (1 - mu) ** 2) * xi_abs * xii_abs
    )

    beta_R_Phi = (
        r("xi_R_0") + r("xi_R_1") + ledger.seq("xi").sum_from(2)
        + phi_tail
        + (2 * d * mubar / (1 - mu)) * xi_abs * xii_abs
        + (2 * d * mu / (1 - mu * mu))
        * (
            r("xi_iota_R_I")
            + mu * r("xi_iota_R_II")
            + (1 + mu) * ledger.seq("xi_iota").sum_from(1)
        )
    )
    return Bound(0, beta_R_F.hi), Bound(0, beta_R_Phi.hi)


def _expansion_tail_terms(ledger):
    """Common matrix-expansion tail pieces of Steps 3-5 (n >= 2 and n >= 1).

    Returns dict with the three closed-form sums used with prefix n0:
      sum_{n>=n0} w^(n+1) xii^n                  -> key ("plain", n0)
      sum_{n>=2} (n-1) w^(n+1) xii^(n-1)         -> "linear"
      sum_{n>=2} w^(n+1) xii^(n-1)               -> "shift"
    """
    d, mu, mubar = ledger.d, ledger.mu, ledger.mubar
    w, q = _contraction(ledger)
    out = {}
    out[("plain", 1)] = w * q / (1 - q)
    out[("plain", 2)] = w * q ** 2 / (1 - q)
    out["linear"] = w * w * q / (1 - q) ** 2
    out["shift"] = w * w * q / (1 - q)
    # (n+1)-weighted variant used by the numerator: sum_{n>=1}(n+1) w^(n+1) xii^n
    out["affine"] = w * (q * (2 - q) / (1 - q) ** 2)
    return out


def step3_step4_weighted(ledger):
    """Displacement norms of both remainders (upper Bounds)."""
    d, mu, mubar = ledger.d, ledger.mu, ledger.mubar
    r = ledger.rem
    bmu = ledger.beta_mu
    mu_over_mubar = mu / mubar
    xi_abs = ledger.seq("xi").total()
    xii_abs = ledger.seq("xi_iota").total()
    dxi_abs = ledger.seq("dxi").total()
    dxii_i = ledger.seq("dxi_iota_iota").total()
    dxii_0 = ledger.seq("dxi_iota_0").total()
    tails = _expansion_tail_terms(ledger)
    disp_pair = dxii_i + mu * dxii_0

    # numerator: remainder displacement norm
    beta_dR_Phi = (
        r("dxi_R_0") + r("dxi_R_1") + ledger.seq("dxi").sum_from(2)
        + tails[("plain", 1)] * dxi_abs * xii_abs
        + (tails["affine"] / (1 + mu)) * (mu_over_mubar + xi_abs) * disp_pair
        + (2 * d * mubar / (1 - mu * mu))
        * ((1 + mu) * dxi_abs * xii_abs + xi_abs * disp_pair)
        + (2 * d * mu / (1 - mu * mu))
        * (
            r("dxi_iota_R_I")
            + mu * r("dxi_iota_R_II")
            + ledger.seq("dxi_iota_iota").sum_from(1)
            + mu * ledger.seq("dxi_iota_0").sum_from(1)
        )
    )

    # denominator: remainder displacement norm
    beta_dR_F = (
        tails[("plain", 2)] * dxi_abs
        + (tails["linear"] / (1 + mu)) * (mu_over_mubar + xi_abs) * disp_pair
        + (tails["shift"] / (1 + mu)) * (mu_over_mubar + xi_abs) * (disp_pair + xii_abs)
        + (2 * d * mu / (1 - mu * mu))
        * (
            r("dpsi_R_I_0") + r("dpsi_R_I_1") + r("dpsi_R_II_0") + r("dpsi_R_II_1")
            + bmu
            * (
                (1 + mu) * ledger.seq("dxi").sum_from(2)
                + ledger.seq("xi").sum_from(2)
            )
        )
        + (mu / (1 - mu * mu) ** 2)
        * (
            r("dpi_R")
            + (2 * d) ** 2
            * mubar
            * (ledger.seq("dxi_iota_iota").sum_from(1) + ledger.seq("xi_iota").sum_from(1))
        )
        + ((2 * d) ** 2 * mu ** 2 * mubar / (1 - mu * mu) ** 2)
        * (dxii_i + dxii_0 + xii_abs + mu * dxii_0)
        + ((2 * d) ** 2 * mubar ** 2 / (1 - mu) ** 2) * dxi_abs * xii_abs
        + ((2 * d) ** 2 * mubar ** 2 / ((1 - mu * mu) * (1 - mu)))
        * xi_abs
        * (disp_pair + xii_abs)
    )
    return Bound(0, beta_dR_Phi.hi), Bound(0, beta_dR_F.hi)


def step5_lower_RF(ledger):
    """Parity-aware one-sided displacement bound (tighter than step 4)."""
    d, mu, mubar = ledger.d, ledger.mu, ledger.mubar
    r = ledger.rem
    bmu = ledger.beta_mu
    mu_over_mubar = mu / mubar
    xi = ledger.seq("xi")
    xii = ledger.seq("xi_iota")
    dxi = ledger.seq("dxi")
    dxii_i = ledger.seq("dxi_iota_iota")
    dxii_0 = ledger.seq("dxi_iota_0")
    tails = _expansion_tail_terms(ledger)
    disp_pair = dxii_i.total() + mu * dxii_0.total()

    total = (
        tails[("plain", 2)] * dxi.total()
        + (tails["linear"] / (1 + mu)) * (mu_over_mubar + xi.total()) * disp_pair
        + (tails["shift"] / (1 + mu))
        * (mu_over_mubar + xi.total())
        * (disp_pair + xii.total())
        + (2 * d * mu / (1 - mu * mu))
        * (
            r("dpsi_R_I_1")
            + mu * r("dpsi_R_II_0")
            + bmu
            * (
                dxi.sum_from(3, "odd")
                + xi.sum_from(3, "odd")
                + mu * dxi.sum_from(2, "even")
            )
        )
        + (mu / (1 - mu * mu) ** 2)
        * (
            r("dpi_R")
            + (2 * d) ** 2 * mubar * (dxii_i.sum_from(2, "even") + xii.sum_from(2, "even"))
        )
        + ((2 * d * mu) ** 2 * mubar / (1 - mu * mu) ** 2)
        * (
            dxii_i.total("odd")
            + dxii_0.total("odd")
            + xii.total("odd")
            + mu * dxii_0.total("even")
        )
        + ((2 * d * mubar) ** 2 / (1 - mu * mu) ** 2)
        * (
            dxi.total("odd") * xii.total("odd") * (1 + mu * mu)
            + 2 * mu * dxi.total("even") * xii.total("even")
        )
        + ((2 * d * mubar) ** 2 / (1 - mu * mu) ** 2)
        * (
            xi.total("odd")
            * (
                dxii_i.total("odd")
                + xii.total("odd")
                + mu * dxii_0.total("even")
                + mu * xii.total("even")
                + mu * dxii_i.total("even")
                + mu * mu * dxii_0.total("odd")
            )
            + xi.total("even")
            * (
                dxii_i.total("even")
                + xii.total("even")
                + mu * dxii_0.total("odd")
                + mu * xii.total("odd")
                + mu * dxii_i.total("odd")
                + mu * mu * dxii_0.total("even")
            )
        )
    )
    return Bound(0, total.hi)


def translate(ledger):
    """Run all five steps and return gated RewriteBounds."""
    rb = step1_simple_bounds(ledger)
    rb.beta_R_F, rb.beta_R_Phi = step2_R_l1(ledger)
    rb.beta_dR_Phi, rb.beta_dR_F = step3_step4_weighted(ledger)
    rb.beta_dR_F_lower = step5_lower_RF(ledger)
    if rb.beta_dR_F_lower.hi > rb.beta_dR_F.hi:
        rb.diagnostics.append(
            "one-sided displacement bound exceeded the two-sided one; "
            "using the smaller of the two"
        )
        rb.beta_dR_F_lower = Bound(0, rb.beta_dR_F.hi)
    rb.check_gates()
    return rb
