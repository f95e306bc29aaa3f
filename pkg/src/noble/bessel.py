"""Certified evaluation of the lattice Green's function integrals.

The base quantity is

    A(n, x) = (1/(n-1)!) * integral_0^inf t^(n-1) prod_mu F(t, d, |x_mu|) dt,

with F(t, d, m) = exp(-t/d) I_m(t/d) and I_m the modified Bessel function
of the first kind.  The product over coordinates equals the transition
density of the rate-1 continuous-time walk, so the integrand is positive
and the integral equals the n-fold critical two-point convolution at x.

Strategy: split at T = d*s0.
  * Head [0, T]: the ascending series of each Bessel factor has positive
    terms, so the truncated product series has exact nonnegative
    coefficients; term-by-term integration gives incomplete-gamma sums
    with an explicit remainder.
  * Tail [T, inf): each factor is expanded via u = 2 sin(theta/2), which
    turns exp(-s) I_m(s) into a Gaussian integral of
    T_m(1 - u^2/2) / sqrt(1 - u^2/4); the Taylor coefficients of that
    kernel are exact rationals and every truncation is bounded in closed
    form.  The product expansion then integrates to explicit powers.

All floating work is mpmath; positive accumulations run in plain mpf
(correct rounding to 1/2 ulp per operation) and are widened afterwards by
an explicit accumulated-rounding factor, everything else uses intervals.
"""

from __future__ import annotations

import math
from fractions import Fraction

from mpmath import iv, mp

from .bounds import Bound, bound_exp, bound_pi

U1 = Fraction(3, 2)  # integration split point in the u variable


class DimensionTooLow(ValueError):
    pass


class PrecisionNotReached(ArithmeticError):
    pass


def _double_factorial(k):
    out = 1
    for j in range(k, 0, -2):
        out *= j
    return out


def chebyshev_shift_coeffs(m):
    """Exact coefficients tau_i with T_m(1 - u^2/2) = sum_i tau_i u^(2i)."""
    a_prev = [Fraction(1)]
    a_cur = [Fraction(1), Fraction(-1)]
    if m == 0:
        a = a_prev
    elif m == 1:
        a = a_cur
    else:
        for _ in range(m - 1):
            nxt = [Fraction(0)] * (len(a_cur) + 1)
            for i, c in enumerate(a_cur):
                nxt[i] += 2 * c
                nxt[i + 1] -= 2 * c
            for i, c in enumerate(a_prev):
                nxt[i] -= c
            a_prev, a_cur = a_cur, nxt
        a = a_cur
    return [c / Fraction(2 ** i) for i, c in enumerate(a)]


def kernel_coeffs(m, J):
    """Exact Taylor coefficients a_j of T_m(1-u^2/2)/sqrt(1-u^2/4), j < J."""
    tau = chebyshev_shift_coeffs(m)
    b = [Fraction(math.comb(2 * j, j), 16 ** j) for j in range(J)]
    out = []
    for j in range(J):
        out.append(sum((tau[i] * b[j - i] for i in range(min(m, j) + 1)), Fraction(0)))
    return out


def chebyshev_abs_sum(m):
    """sum_i |tau_i| * (value used in remainder bounds) = T_m(3/2), exact."""
    # T_m(3/2) via the recurrence
    prev, cur = Fraction(1), Fraction(3, 2)
    if m == 0:
        return prev
    for _ in range(m - 1):
        prev, cur = cur, 3 * cur - prev
    return cur


class FactorExpansion:
    """Large-argument expansion of exp(-s) I_m(s), with certified errors.

    For s >= s0:
        exp(-s) I_m(s) in s^(-1/2) * P(1/s)  +-  [pow_err * s^(-J-1/2)
                                                  + exp_err * exp(-s u1^2/2)]
    where P has interval coefficients p[0..J-1].
    """

    def __init__(self, m, J, s0):
        if J <= m + 2:
            raise ValueError("expansion order must exceed the Bessel order")
        self.m = m
        self.J = J
        self.s0 = s0
        u1 = U1
        coeffs = kernel_coeffs(m, J)
        sqrt_pi_half = iv.sqrt(iv.pi / 2)
        self.p = []
        for j, aj in enumerate(coeffs):
            c = iv.mpf(aj.numerator) / iv.mpf(aj.denominator)
            self.p.append(c * _double_factorial(2 * j - 1) * sqrt_pi_half / iv.pi)

        # Taylor remainder of the kernel on [0, u1]:
        #   |rho(u)| <= rho_bar * u^(2J),
        #   rho_bar = T_m(3/2) * binom(2K,K)/16^K / (1 - u1^2/4),  K = J - m.
        K = J - m
        tm = chebyshev_abs_sum(m)
        rho_bar = tm * Fraction(math.comb(2 * K, K), 16 ** K) / (1 - u1 * u1 / 4)
        rb = iv.mpf(rho_bar.numerator) / iv.mpf(rho_bar.denominator)
        self.pow_err = rb * _double_factorial(2 * J - 1) * sqrt_pi_half / iv.pi

        # exp-type errors, folded into C * exp(-s u1^2 / 2):
        #  (a) cutting the u integral at u1:  (pi - theta1) / pi <= 1
        #  (b) extending the Gaussian moments to infinity:
        #      sum_j |a_j| delta_j(s) <= T_m(3/2) (1-u1^2/4)^(-1/2) u1^(-2J)
        #                                 * M_J(s),
        #      M_J(s) <= exp(-s u1^2/2) * sum_i C(2J,i) u1^(2J-i) i!/(s u1)^(i+1)
        #      (the polynomial evaluated at s0 upper-bounds it for s >= s0).
        u1v = iv.mpf(u1.numerator) / iv.mpf(u1.denominator)
        poly = iv.mpf(0)
        for i in range(2 * J + 1):
            poly += (
                iv.mpf(math.comb(2 * J, i))
                * u1v ** (2 * J - i)
                * iv.mpf(math.factorial(i))
                / (iv.mpf(s0) * u1v) ** (i + 1)
            )
        katsum = iv.mpf(tm.numerator) / iv.mpf(tm.denominator)
        momc = katsum / iv.sqrt(1 - u1v * u1v / 4) / u1v ** (2 * J) * poly
        self.exp_err = iv.mpf(1) + momc / iv.pi

    def value_at(self, s):
        """Enclosure of exp(-s) I_m(s) for interval/exact s >= s0."""
        sv = iv.mpf(s)
        y = 1 / sv
        acc = iv.mpf(0)
        for c in reversed(self.p):
            acc = acc * y + c
        main = acc / iv.sqrt(sv)
        u1 = iv.mpf(U1.numerator) / iv.mpf(U1.denominator)
        err = self.pow_err * sv ** (-self.J) / iv.sqrt(sv) + self.exp_err * iv.exp(
            -sv * u1 * u1 / 2
        )
        return main + iv.mpf([-1, 1]) * err


def besselie_series(m, s, rel_tol=None):
    """Enclosure of exp(-s) I_m(s) by the ascending series (any s >= 0).

    Positive terms; truncation bounded by a geometric tail once the term
    ratio drops below 1/2.
    """
    sv = iv.mpf(s)
    if sv.b == 0:
        return iv.mpf(1) if m == 0 else iv.mpf(0)
    half = sv / 2
    term = half ** m / iv.mpf(math.factorial(m))
    total = term
    k = 0
    hb2 = half * half
    while True:
        k += 1
        term = term * hb2 / (iv.mpf(k) * iv.mpf(k + m))
        total += term
        # ratio of successive terms at the upper endpoint
        ratio = (hb2 / (iv.mpf(k + 1) * iv.mpf(k + 1 + m))).b
        if ratio < 0.5 and term.b < total.a * mp.mpf(10) ** (-iv.dps - 3):
            tail = term * iv.mpf([0, 2 * ratio / (1 - ratio)])
            total += tail
            break
        if k > 10 ** 7:  # pragma: no cover
            raise PrecisionNotReached("bessel series did not settle")
    return total * iv.exp(-sv)


def besselie_upper_simple(s_lo):
    """Uniform upper bound for exp(-s) I_m(s), s >= s_lo: min(1, sqrt(pi/(8 s)))."""
    b = iv.sqrt(iv.pi / (8 * iv.mpf(s_lo)))
    one = iv.mpf(1)
    return iv.mpf([0, min(b.b, one.b)])
