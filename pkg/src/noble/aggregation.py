"""Summing per-order matrix-product bounds into series constants.

Coefficient bounds arrive as v^T B^N w (and displacement variants with an
inner C factor); the engine needs their sums over all / even / odd N.
Eigenvalues are reported from a float decomposition wrapped in rigorous
enclosures (similarity + Gershgorin); the sums themselves are evaluated
through interval matrix inverses, which equal the eigenvalue geometric
series whenever the latter is defined and stay sound even when the
eigenbasis is ill-conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from mpmath import mp

from .bounds import Bound, as_bound, bound_sum


class NotDiagonalizable(ArithmeticError):
    pass


class SpectralRadiusAtLeastOne(ArithmeticError):
    pass


class ComplexSpectrumBeyondTolerance(ArithmeticError):
    pass


class TailRatioNotContractive(ValueError):
    pass


@dataclass
class MatrixBoundSpec:
    """Nonnegative matrices B, C and vectors v, w, h of Bounds.

    Encodes sum_x coeff^[N] <= v^T B^N w and the displacement variant with
    weight (alpha N + beta) and the C insertion.
    """

    B: list
    v: list
    w: list
    C: list = None
    h: list = None
    weight_alpha: object = 1
    weight_beta: object = 2

    def __post_init__(self):
        n = len(self.v)
        self.B = [[as_bound(x) for x in row] for row in self.B]
        self.v = [as_bound(x) for x in self.v]
        self.w = [as_bound(x) for x in self.w]
        if self.C is not None:
            self.C = [[as_bound(x) for x in row] for row in self.C]
        if self.h is not None:
            self.h = [as_bound(x) for x in self.h]
        if any(len(row) != n for row in self.B) or len(self.B) != n:
            raise ValueError("B must be square and match v")
        for row in self.B:
            for x in row:
                if x.lo < 0:
                    raise ValueError("B must be entrywise nonnegative")

    @property
    def order(self):
        return len(self.v)


# -- rigorous spectral radius ------------------------------------------------

def spectral_radius_upper(B):
    """Collatz-Wielandt upper bound for a nonnegative interval matrix."""
    n = len(B)
    x = [mp.mpf(1)] * n
    # float power iteration for a good test vector
    M = np.array([[float(b.hi) for b in row] for row in B])
    vec = np.ones(n)
    for _ in range(200):
        nxt = M @ vec + 1e-300
        vec = nxt / nxt.max()
    x = [as_bound(mp.mpf(v) + mp.mpf(10) ** -12) for v in vec]
    ratios = []
    for i in range(n):
        num = bound_sum(B[i][j] * x[j] for j in range(n))
        ratios.append((num / x[i]).hi)
    return max(ratios)


def _interval_inverse(A):
    """Rigorous inverse of an interval matrix via approximate inverse.

    A = I - B etc.; returns entrywise Bounds.  Requires the verification
    residual ||I - Y A|| < 1.
    """
    n = len(A)
    Af = np.array([[float(x.mid) for x in row] for row in A])
    Y = np.linalg.inv(Af)
    Yb = [[as_bound(mp.mpf(Y[i, j])) for j in range(n)] for i in range(n)]
    # R = I - Y A in intervals
    R = []
    for i in range(n):
        row = []
        for j in range(n):
            s = bound_sum(Yb[i][k] * A[k][j] for k in range(n))
            row.append((Bound(1) if i == j else Bound(0)) - s)
        R.append(row)
    rho = max(sum(abs(x).hi for x in row) for row in R)
    if not rho < 1:
        raise SpectralRadiusAtLeastOne(
            f"inverse verification failed (residual norm {mp.nstr(rho, 5)} >= 1)"
        )
    # ||Y||_inf for the Neumann tail
    ynorm = max(sum(abs(x).hi for x in row) for row in Yb)
    tail = mp.mpf(rho) * ynorm / (1 - mp.mpf(rho))
    wide = Bound(-tail, tail)
    # inv(A) = (sum_k R^k) Y ; enclose by Y + [-(tail)..tail] entrywise after
    # one refinement step Y + R Y
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            corr = bound_sum(R[i][k] * Yb[k][j] for k in range(n))
            row.append(Yb[i][j] + corr + wide * mp.mpf(rho))
        out.append(row)
    return out


def _mat_vec(A, x):
    return [bound_sum(A[i][j] * x[j] for j in range(len(x))) for i in range(len(A))]


def _vec_dot(a, b):
    return bound_sum(ai * bi for ai, bi in zip(a, b))


def _mat_mul(A, B):
    n = len(A)
    m = len(B[0])
    k = len(B)
    return [
        [bound_sum(A[i][t] * B[t][j] for t in range(k)) for j in range(m)]
        for i in range(n)
    ]


def _identity(n):
    return [[Bound(1) if i == j else Bound(0) for j in range(n)] for i in range(n)]


def _mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def eigen_split(spec, tol=1e-8):
    """Float eigensystem of B with rigorous eigenvalue enclosures.

    Returns a dict with keys 'values' (list of complex eigenvalue
    enclosures as (re Bound, im Bound)), 'right'/'left' float matrices,
    'coeffs' (r_i, b_i float expansions of v and w), 'radius_upper'.
    """
    n = spec.order
    Bf = np.array([[float(x.mid) for x in row] for row in spec.B])
    lam, V = np.linalg.eig(Bf)
    condV = np.linalg.cond(V)
    if not np.isfinite(condV) or condV > 1e8:
        raise NotDiagonalizable(f"eigenbasis condition {condV:.3g}")
    # rigorous enclosure: eig(B) = eig(Lambda + V^-1 (B V - V Lambda));
    # Gershgorin discs of the perturbed diagonal matrix.
    Vb = [[as_bound(mp.mpf(V[i, j].real)) for j in range(n)] for i in range(n)]
    has_complex = np.abs(V.imag).max() > 0
    if has_complex:
        # fall back to radius-only rigor; per-eigenvalue discs from the
        # float residuals, inflated by the basis condition number
        resid = np.abs(Bf @ V - V @ np.diag(lam)).max()
        infl = float(condV) * float(resid) + float(np.abs(Bf).max()) * 1e-13
        values = [
            (Bound(mp.mpf(l.real)).widened(infl), Bound(mp.mpf(l.imag)).widened(infl))
            for l in lam
        ]
    else:
        Vinv = _interval_inverse(Vb)
        Lam = [[Bound(mp.mpf(lam[i].real)) if i == j else Bound(0) for j in range(n)] for i in range(n)]
        Resid = _mat_sub(_mat_mul([[as_bound(x) for x in row] for row in spec.B], Vb), _mat_mul(Vb, Lam))
        Cmat = _mat_mul(Vinv, Resid)
        values = []
        for i in range(n):
            center = Bound(mp.mpf(lam[i].real)) + Cmat[i][i]
            radius = sum(abs(Cmat[i][j]).hi for j in range(n) if j != i)
            values.append((center.widened(radius), Bound(0).widened(radius)))
    rad = spectral_radius_upper(spec.B)
    if not rad < 1:
        raise SpectralRadiusAtLeastOne(f"spectral radius upper bound {mp.nstr(rad, 6)}")
    for re, im in values:
        if abs(im).hi > max(tol, 1e2 * float(np.finfo(float).eps)) and abs(im).hi > 0.2:
            raise ComplexSpectrumBeyondTolerance(str(im))
    # expansion coefficients of v and w in the eigenbasis (float):
    # w = VR b, and v = VL^T r with VL = VR^-1, so r = VR^T v.
    VR = V
    VL = np.linalg.inv(VR)
    vf = np.array([float(x.mid) for x in spec.v])
    wf = np.array([float(x.mid) for x in spec.w])
    b_coeff = np.linalg.solve(VR, wf)
    r_coeff = VR.T @ vf
    resid = max(
        float(np.abs(Bf @ VR[:, i] - lam[i] * VR[:, i]).max()) for i in range(n)
    )
    return {
        "values": values,
        "right": VR,
        "left": VL,
        "r": r_coeff,
        "b": b_coeff,
        "residual": resid,
        "radius_upper": rad,
        "cond": condV,
    }


def geometric_sum(spec, parity="all", weighted=False):
    """Sum of v^T B^N w over N in the parity class, as a rigorous Bound.

    weighted=True instead sums (alpha N + beta) (h^T B^N w + v^T B^N h
    + sum_{M<N} v^T B^M C B^(N-1-M) w), the displacement form.
    """
    rad = spectral_radius_upper(spec.B)
    if not rad < 1:
        raise SpectralRadiusAtLeastOne(f"spectral radius upper bound {mp.nstr(rad, 6)}")
    n = spec.order
    I = _identity(n)
    Bm = spec.B
    ImB = _mat_sub(I, Bm)
    inv1 = _interval_inverse(ImB)  # sum B^N
    if not weighted:
        if parity == "all":
            S = inv1
        else:
            B2 = _mat_mul(Bm, Bm)
            inv2 = _interval_inverse(_mat_sub(I, B2))  # sum B^(2N)
            S = inv2 if parity == "even" else _mat_mul(Bm, inv2)
        return _vec_dot(spec.v, _mat_vec(S, spec.w)).clamp_nonnegative()

    if parity != "all":
        raise ValueError("weighted sums are only needed for parity='all'")
    if spec.h is None or spec.C is None:
        raise ValueError("weighted sum needs both h and C")
    alpha = as_bound(spec.weight_alpha)
    beta = as_bound(spec.weight_beta)
    # sum (aN+b) B^N = a B (I-B)^-2 + b (I-B)^-1
    inv1_sq = _mat_mul(inv1, inv1)
    SNw = [
        [alpha * _mat_mul(Bm, inv1_sq)[i][j] + beta * inv1[i][j] for j in range(n)]
        for i in range(n)
    ]
    t_h = _vec_dot(spec.h, _mat_vec(SNw, spec.w)) + _vec_dot(spec.v, _mat_vec(SNw, spec.h))
    # sum_N (aN+b) sum_{M=0}^{N-1} B^M C B^(N-1-M)
    #   = a (I-B)^-2 B C (I-B)^-1 + a (I-B)^-1 C B (I-B)^-2
    #     + (a+b) (I-B)^-1 C (I-B)^-1
    mid1 = _mat_mul(_mat_mul(inv1_sq, Bm), _mat_mul(spec.C, inv1))
    mid2 = _mat_mul(inv1, _mat_mul(spec.C, _mat_mul(Bm, inv1_sq)))
    mid3 = _mat_mul(inv1, _mat_mul(spec.C, inv1))
    total_mid = [
        [alpha * (mid1[i][j] + mid2[i][j]) + (alpha + beta) * mid3[i][j] for j in range(n)]
        for i in range(n)
    ]
    t_c = _vec_dot(spec.v, _mat_vec(total_mid, spec.w))
    return (t_h + t_c).clamp_nonnegative()


def truncated_sum(spec, K, parity="all", weighted=False):
    """Direct partial sum up to N = K plus a certified geometric tail.

    Independent of the closed forms; also the fallback when the eigenbasis
    is too ill-conditioned to be useful.  The tail uses a verified
    positive scaling vector x with B x <= rho x entrywise.
    """
    n = spec.order
    rho, xvec = _scaling_vector(spec.B)
    if not rho.hi < 1:
        raise SpectralRadiusAtLeastOne("contraction needed for the tail")
    alpha = as_bound(spec.weight_alpha)
    beta = as_bound(spec.weight_beta)
    total = Bound(0)
    BNw = list(spec.w)
    BNh = list(spec.h) if spec.h is not None else None
    prefix = [Bound(0)] * n  # sum_{M<N} B^M C B^(N-1-M) w
    for N in range(K + 1):
        if not weighted:
            if parity == "all" or (parity == "even") == (N % 2 == 0):
                total = total + _vec_dot(spec.v, BNw)
        else:
            hterm = _vec_dot(spec.h, BNw) + _vec_dot(spec.v, BNh)
            cterm = _vec_dot(spec.v, prefix)
            total = total + (alpha * N + beta) * (hterm + cterm)
        if weighted:
            prefix = [
                a + b
                for a, b in zip(_mat_vec(spec.B, prefix), _mat_vec(spec.C, BNw))
            ]
            BNh = _mat_vec(spec.B, BNh)
        BNw = _mat_vec(spec.B, BNw)
    # scale constants c with vec <= c * x entrywise (upper endpoints)
    def over(vec):
        return max((abs(v).hi / x.lo for v, x in zip(vec, xvec)))

    vx = _vec_dot([abs(v) for v in spec.v], xvec)
    cW = as_bound(over(BNw))  # B^(K+1) w <= cW x
    if not weighted:
        tail = cW * vx / (1 - rho)
        return total + Bound(0, tail.hi)
    hx = _vec_dot([abs(h) for h in spec.h], xvec)
    cH = as_bound(over(BNh))
    cP = as_bound(over(prefix))
    chat = as_bound(max((_vec_dot([abs(c) for c in row], xvec) / x.lo).hi
                        for row, x in zip(spec.C, xvec)))
    # For N > K (write N = K+1+j):
    #   h.B^N w <= cW hx rho^j ;  v.B^N h <= cH vx rho^j
    #   prefix_N <= [cP rho^j + j chat cW rho^(j-1)] x
    r = rho
    s1 = 1 / (1 - r)
    s2 = s1 * s1
    sum_jr = r * s2  # sum j rho^j
    w_lin = alpha * ((K + 1) * s1 + sum_jr) + beta * s1  # sum (aN+b) rho^j
    # sum (aN+b) j rho^(j-1) with N = K+1+j
    w_quad = (alpha * (K + 1) + beta) * s2 + alpha * (1 + r) * s2 * s1
    tail = w_lin * (cW * hx + cH * vx + cP * vx)
    tail = tail + w_quad * chat * cW * vx
    return total + Bound(0, tail.hi)


def _scaling_vector(B):
    """Positive x and rho with B x <= rho x entrywise (interval verified)."""
    n = len(B)
    M = np.array([[float(b.hi) for b in row] for row in B])
    vec = np.ones(n)
    for _ in range(200):
        nxt = M @ vec + 1e-300
        m = nxt.max()
        if m == 0:
            break
        vec = nxt / m
    xvec = [as_bound(mp.mpf(v) + mp.mpf(10) ** -12) for v in vec]
    ratios = []
    for i in range(n):
        num = bound_sum(B[i][j] * xvec[j] for j in range(n))
        ratios.append((num / xvec[i]).hi)
    return as_bound(max(ratios)), xvec


def scalar_series_sum(seq, parity="all", tail_ratio=None):
    """Finite scalar series with an optional certified geometric tail.

    seq: list of Bounds beta^[N], N = 0..len-1; tail_ratio r asserts
    beta^[N] <= beta^[last] r^(N-last) beyond the list.
    """
    seq = [as_bound(b) for b in seq]
    total = Bound(0)
    for N, b in enumerate(seq):
        if parity == "all" or (parity == "even") == (N % 2 == 0):
            total = total + b
    if tail_ratio is None or not seq:
        return total
    r = as_bound(tail_ratio)
    if not r.hi < 1:
        raise TailRatioNotContractive(f"tail ratio {r}")
    last = len(seq) - 1
    base = seq[last]
    if parity == "all":
        tail = base * r / (1 - r)
    else:
        # first tail index with the wanted parity
        want_even = parity == "even"
        j0 = 1 if ((last + 1) % 2 == 0) == want_even else 2
        tail = base * r ** j0 / (1 - r * r)
    return total + Bound(0, tail.hi)
