"""Critical walk two-point functions in k-space and the base Green integrals.

`GreenEvaluator` produces certified enclosures of the n-fold critical
convolution integrals at lattice points (the base row of the integral
table); the closed k-space forms for the simple and non-backtracking
two-point functions live here as well.
"""

from __future__ import annotations

import math
from collections import Counter

from mpmath import iv, mp

from .bessel import (
    DimensionTooLow,
    FactorExpansion,
    PrecisionNotReached,
    U1,
)
from .bounds import Bound, as_bound
from .lattice import canon_key


class PoleOrBeyond(ArithmeticError):
    pass


class DenominatorContainsZero(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# k-space two-point functions
# ---------------------------------------------------------------------------

def step_transform(d, k):
    """D-hat(k) = (1/d) sum_i cos(k_i) as a Bound; k is a coordinate tuple."""
    total = iv.mpf(0)
    k = tuple(k) + (0,) * (d - len(k))
    for ki in k:
        total += iv.cos(ki._v if isinstance(ki, Bound) else iv.mpf(ki))
    return Bound._raw(total / d)


def srw_twopoint_k(d, z, k=None, dhat=None):
    """Generating-function value 1 / (1 - 2 d z D-hat(k)) below the pole."""
    z = as_bound(z)
    dh = step_transform(d, k) if dhat is None else as_bound(dhat)
    den = 1 - (2 * d) * z * dh
    if not den.strictly_positive():
        raise PoleOrBeyond(f"denominator {den} not positive")
    return 1 / den


def nbw_twopoint_k(d, z, k=None, dhat=None):
    """Non-backtracking two-point function (1-z^2)/(1+(2d-1)z^2-2dz D-hat)."""
    z = as_bound(z)
    dh = step_transform(d, k) if dhat is None else as_bound(dhat)
    den = 1 + (2 * d - 1) * z * z - (2 * d) * z * dh
    if not den.strictly_positive():
        raise PoleOrBeyond(f"denominator {den} not positive")
    return (1 - z * z) / den


def lambda_link(mu, psi, pi_row):
    """Fugacity translation between the general model and the NBW.

    Returns (lam, mu_back): lam = (1+psi) mu / (1 + pi - mu psi) and the
    inverse map applied to lam, which must contain mu again.
    """
    mu, psi, pi_row = as_bound(mu), as_bound(psi), as_bound(pi_row)
    den = 1 + pi_row - mu * psi
    if den.contains(0):
        raise DenominatorContainsZero(f"denominator {den}")
    lam = (1 + psi) * mu / den
    den2 = (1 + psi) / lam + psi
    if den2.contains(0):
        raise DenominatorContainsZero(f"denominator {den2}")
    mu_back = (1 + pi_row) / den2
    return lam, mu_back


def _ipow(v, e):
    """Integer power of an interval, negative exponents allowed."""
    if e >= 0:
        return v ** e
    return 1 / v ** (-e)


# ---------------------------------------------------------------------------
# Base Green integrals (the Bessel route)
# ---------------------------------------------------------------------------

class _TruncPoly:
    """Polynomial in y = 1/s with an error channel err * s^(-J), s >= s0."""

    __slots__ = ("c", "err")

    def __init__(self, coeffs, err):
        self.c = coeffs
        self.err = err  # nonnegative upper bound (ivmpf)


class GreenEvaluator:
    """Certified n-fold critical convolution values at canonical points.

    The integral is split at T = d*s0; the head integrates the positive
    product power series against truncated factorials, the tail uses the
    factor expansions.  Every truncation carries an explicit bound, so the
    result is a genuine enclosure.
    """

    def __init__(self, d, n_max, width_target=None):
        if d < 2:
            raise ValueError("d >= 2 required")
        if width_target is None:
            width_target = mp.mpf(10) ** -17
        self.d = d
        self.n_max = n_max
        if d < 2 * n_max + 1:
            raise DimensionTooLow(f"d={d} too low for n={n_max} (need d >= {2*n_max+1})")
        self.width_target = mp.mpf(width_target)
        digits = max(10, int(mp.ceil(-mp.log10(self.width_target))) + 1)
        self.digits = digits
        self.work_dps = digits + 14
        self.s0 = max(40, int(2.05 * (digits + 6)) + 1)
        self.J = max(24, int(1.2 * digits) + 10)
        self.T = d * self.s0
        self.trunc_deg = self.J + 8
        self._expansions = {}
        self._gammas = None
        self._pad = max(120, int(3.4 * math.sqrt(self.T * (digits + 12))) + 8)
        self._series_len = self.T + self._pad
        self._zero_power_cache = {}
        self._inv_s0 = 1 / iv.mpf(self.s0)

    # -- per-factor pieces -------------------------------------------------
    def _expansion(self, m):
        if m not in self._expansions:
            J = max(self.J, m + 6)
            self._expansions[m] = FactorExpansion(m, J, self.s0)
        return self._expansions[m]

    def _factor_series(self, m, length):
        """Ascending-series coefficients of I_m(t/d) in t, degrees < length.

        Plain positive mpf values at working precision; rounding is
        absorbed by a global inflation factor later.
        """
        inv2d = mp.mpf(1) / (2 * self.d)
        coeffs = [mp.mpf(0)] * length
        term = inv2d ** m / mp.factorial(m)
        k = 0
        idx = m
        while idx < length:
            coeffs[idx] = term
            k += 1
            idx += 2
            term = term * inv2d * inv2d / (k * (k + m))
        return coeffs

    @staticmethod
    def _polymul_pos(a, b, length):
        out = [mp.mpf(0)] * length
        for i, ai in enumerate(a):
            if not ai:
                continue
            top = length - i
            for j in range(min(len(b), top)):
                bj = b[j]
                if bj:
                    out[i + j] = out[i + j] + ai * bj
        return out

    def _zero_factor_power(self, power):
        """Cached series of I_0(t/d)^power (positive coefficients)."""
        if power in self._zero_power_cache:
            return self._zero_power_cache[power]
        length = self._series_len
        base = self._factor_series(0, length)
        result = None
        b = base
        e = power
        while e:
            if e & 1:
                result = b if result is None else self._polymul_pos(result, b, length)
            e >>= 1
            if e:
                b = self._polymul_pos(b, b, length)
        if result is None:
            result = [mp.mpf(1)] + [mp.mpf(0)] * (length - 1)
        self._zero_power_cache[power] = result
        return result

    def _product_series(self, mults):
        """Positive series coefficients of prod_m I_m(t/d)^mult, truncated."""
        length = self._series_len
        zero_mult = mults.get(0, 0)
        series = self._zero_factor_power(zero_mult) if zero_mult else None
        for m, mult in sorted(mults.items()):
            if m == 0:
                continue
            f = self._factor_series(m, length)
            for _ in range(mult):
                series = f if series is None else self._polymul_pos(series, f, length)
        if series is None:
            series = [mp.mpf(1)] + [mp.mpf(0)] * (length - 1)
        return series

    # -- incomplete gamma table ---------------------------------------------
    def _gamma_table(self):
        """Enclosures of int_0^T t^(a-1) e^-t dt for integer a.

        For a <= T the complement formula (a-1)!(1 - e^-T sum T^k/k!) has no
        damaging cancellation; for a > T it does, so the top value comes
        from the ascending series and the rest by the downward recursion
        gamma(a-1) = (gamma(a) + T^(a-1) e^-T)/(a-1), all positive.
        """
        if self._gammas is not None:
            return self._gammas
        T = iv.mpf(self.T)
        emT = iv.exp(-T)
        a_max = self.n_max + self._series_len + 2
        split = self.T  # integer
        gam = [None] * (a_max + 1)

        fact = iv.mpf(1)
        poisson = iv.mpf(1)  # T^k / k!
        partial = iv.mpf(1)  # sum_{k<a} T^k/k!
        for a in range(1, split + 1):
            g = fact * (1 - emT * partial)
            if g.a < 0:
                g = iv.mpf([0, max(0, g.b)])
            gam[a] = g
            fact *= a
            poisson = poisson * T / a
            partial += poisson

        # ascending series at the top index: x^a e^-x sum_k x^k / (a...(a+k))
        a = a_max
        term = 1 / iv.mpf(a)
        total = term
        k = 0
        while True:
            k += 1
            term = term * T / iv.mpf(a + k)
            total += term
            ratio = (T / iv.mpf(a + k + 1)).b
            if ratio < 0.5 and term.b < total.a * mp.mpf(10) ** (-iv.dps - 4):
                total += term * iv.mpf([0, 2 * ratio / (1 - ratio)])
                break
        tpow = T ** a * emT  # T^a e^-T
        gam[a_max] = tpow * total
        tpow = tpow / T  # now T^(a-1) e^-T
        for a in range(a_max, split + 1, -1):
            gam[a - 1] = (gam[a] + tpow) / (a - 1)
            tpow = tpow / T
        self._gammas = gam
        return gam

    # -- main entry ----------------------------------------------------------
    def convolution_integral(self, n, x):
        return self.convolution_integrals([n], x)[n]

    def convolution_integrals(self, n_list, x):
        """Enclosures of the n-fold critical convolution at canonical x.

        Returns {n: Bound}.  Requires d >= 2n+1 for every requested n.
        """
        for n in n_list:
            if n < 1:
                raise ValueError("n >= 1 required (n = 0 is the exact point mass)")
            if self.d < 2 * n + 1:
                raise DimensionTooLow(f"d={self.d} < {2*n+1} for n={n}")
        cx = canon_key(x)
        if cx and cx[0] > self.J - 8:
            raise PrecisionNotReached(f"coordinate {cx[0]} too large for order {self.J}")
        mults = Counter(cx)
        if self.d - len(cx):
            mults[0] = self.d - len(cx)

        with mp.workdps(self.work_dps):
            series = self._product_series(dict(mults))
            ops = self._series_len * (sum(mults.values()).bit_length() + 4)
            eta = mp.mpf(16 * ops) * mp.mpf(2) ** (-mp.prec)
            T = mp.mpf(self.T)
            partial_at_T = mp.mpf(0)
            for i in range(len(series) - 1, -1, -1):
                partial_at_T = partial_at_T * T + series[i]
        rel = iv.mpf([1 - eta, 1 + eta])

        gam = self._gamma_table()
        P = self._series_len - 1

        prod_at_s0 = iv.mpf(1)
        for m, mult in sorted(mults.items()):
            prod_at_s0 *= self._expansion(m).value_at(self.s0) ** mult
        prod_upper = (iv.exp(iv.mpf(self.T)) * prod_at_s0).b
        slack_hi = (iv.mpf(prod_upper) - iv.mpf(partial_at_T) * (1 - eta)).b
        slack = iv.mpf([0, max(0, slack_hi)])

        out = {}
        tail_polys = self._tail_product(dict(mults))
        ivT = iv.mpf(self.T)
        for n in n_list:
            head = iv.mpf(0)
            for i, ci in enumerate(series):
                if ci:
                    head += (iv.mpf(ci) * rel) * gam[n + i]
            rem = slack * gam[n + P + 1] / ivT ** (P + 1)
            head += iv.mpf([0, rem.b])
            tail = self._tail_integral(n, tail_polys)
            total = (head + tail) / iv.mpf(math.factorial(n - 1))
            b = Bound._raw(total)
            if b.width > self.width_target * 100:
                raise PrecisionNotReached(
                    f"width {mp.nstr(b.width, 5)} exceeds target at n={n}, x={cx}"
                )
            out[n] = b
        return out

    # -- tail ------------------------------------------------------------------
    def _tail_product(self, mults):
        """Product of the factor expansions: (_TruncPoly, exp-channel bound)."""
        s0 = iv.mpf(self.s0)
        total_exp = iv.mpf(0)
        poly = None
        for m, mult in sorted(mults.items()):
            exp_m = self._expansion(m)
            Jm = exp_m.J
            perr = exp_m.pow_err * _ipow(s0, self.J - Jm)
            f = _TruncPoly(list(exp_m.p), perr)
            total_exp += iv.mpf(mult) * exp_m.exp_err
            for _ in range(mult):
                poly = f if poly is None else self._poly_mul_trunc(poly, f)
        return poly, total_exp

    def _poly_norm(self, p):
        inv = self._inv_s0
        tot = iv.mpf(0)
        for k, c in enumerate(p.c):
            tot += abs(c) * inv ** k
        return tot + p.err * inv ** self.J

    def _poly_mul_trunc(self, a, b):
        Dt = self.trunc_deg
        inv = self._inv_s0
        out = [iv.mpf(0)] * (Dt + 1)
        dropped = iv.mpf(0)
        for i, ai in enumerate(a.c):
            for j, bj in enumerate(b.c):
                k = i + j
                term = ai * bj
                if k <= Dt:
                    out[k] += term
                else:
                    dropped += abs(term) * inv ** (k - self.J)
        na = self._poly_norm(a)
        nb = self._poly_norm(b)
        err = dropped + a.err * nb + b.err * na + a.err * b.err * inv ** self.J
        return _TruncPoly(out, err)

    def _tail_integral(self, n, tail_polys):
        """d^n * int_{s0}^inf s^{n-1} [factor product](s) ds, certified."""
        poly, total_exp = tail_polys
        d = self.d
        s0 = iv.mpf(self.s0)
        dn = iv.mpf(d) ** n
        halfd = iv.mpf(d) / 2
        inv_sqrt_s0d = 1 / iv.sqrt(s0 ** d)
        main = iv.mpf(0)
        for k, qk in enumerate(poly.c):
            # s0^(n - d/2 - k) split into integer power and sqrt part
            main += qk * _ipow(s0, n - k) * inv_sqrt_s0d / (halfd + k - n)
        main += (
            iv.mpf([-1, 1])
            * poly.err
            * _ipow(s0, n - self.J)
            * inv_sqrt_s0d
            / (halfd + self.J - n)
        )
        # exp channel: factor exp-type errors against the uniform
        # sqrt(pi/(8s)) bound on the remaining d-1 factors;
        # s0^q with q = n - 1 - (d-1)/2 <= 0.
        u1 = iv.mpf(U1.numerator) / iv.mpf(U1.denominator)
        unif = iv.sqrt(iv.pi / 8)
        s0_q = _ipow(s0, n - 1) / iv.sqrt(s0 ** (d - 1))
        exp_term = (
            total_exp
            * unif ** (d - 1)
            * s0_q
            * (2 / (u1 * u1))
            * iv.exp(-s0 * u1 * u1 / 2)
        )
        main += iv.mpf([-1, 1]) * exp_term
        return dn * main
