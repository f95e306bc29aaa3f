"""Acceptance suite: one test per shipping criterion, each printing a
pass/fail line with its measured quantities."""

import itertools
import math
import random
import time

import numpy as np
import pytest
from mpmath import mp, mpf

from noble.aggregation import MatrixBoundSpec, eigen_split
from noble.bounds import Bound, cosine_split_check
from noble.engine import SyntheticRewrite, decomposition_check
from noble.integrals import (
    build_I_table,
    load_table,
    recursion_residuals,
    save_table,
)
from noble.lattice import canon_key
from noble.verifier import (
    load_beta_ledger,
    load_config,
    run_verification,
)
from noble.walks import count_srw, count_srw_loop_formula

import test_rewrite as rewrite_oracles


def _report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


DEMO_POINTS_D11 = [
    (), (1,), (1, 1), (2,), (1, 1, 1), (2, 1), (3,),
    (1, 1, 1, 1), (2, 1, 1), (2, 2), (3, 1), (4,),
    (2, 2, 1), (3, 2), (2, 1, 1, 1), (1, 1, 1, 1, 1),
    (3, 1, 1), (2, 2, 2), (4, 1), (3, 3), (4, 2), (5,),
    (6,), (2, 2, 1, 1),
]


def test_criterion_1_matrix_spectrum():
    t0 = time.time()
    spec = MatrixBoundSpec(
        B=[
            ["0.0134202", "0.0112907", "0.0257405"],
            ["0.0127527", "0.0108018", "0.0338533"],
            ["0.028009", "0.0260537", "0.0401418"],
        ],
        v=[1, 1, 1],
        w=[1, 1, 1],
    )
    es = eigen_split(spec)
    lam = max((re for re, _ in es["values"]), key=lambda b: b.hi)
    total = sum(b.mid for row in spec.B for b in row)
    dt = time.time() - t0
    ok = (
        mpf("0.072") <= lam.lo
        and lam.hi <= mpf("0.074")
        and mpf("0.19") <= total <= mpf("0.21")
        and dt < 1.0
    )
    _report(
        "C1 printed-matrix spectrum",
        ok,
        f"largest eigenvalue in [{mp.nstr(lam.lo, 8)}, {mp.nstr(lam.hi, 8)}], "
        f"entry sum {mp.nstr(total, 4)}, {dt:.2f}s",
    )


def _brute_loops(d, n):
    moves = []
    for i in range(d):
        for s in (1, -1):
            e = [0] * d
            e[i] = s
            moves.append(tuple(e))
    count = 0
    for path in itertools.product(moves, repeat=n):
        pos = [0] * d
        for stp in path:
            pos = [p + s for p, s in zip(pos, stp)]
        if not any(pos):
            count += 1
    return count


def test_criterion_2_loop_counts():
    t0 = time.time()
    rec2, rec3 = count_srw(2, 6, ()), count_srw(3, 6, ())
    form2, form3 = count_srw_loop_formula(2), count_srw_loop_formula(3)
    brute2, brute3 = _brute_loops(2, 6), _brute_loops(3, 6)
    dt = time.time() - t0
    ok = (rec2 == form2 == brute2 == 400) and (rec3 == form3 == brute3 == 1860) and dt < 10
    _report(
        "C2 six-step loop counts",
        ok,
        f"d=2: {rec2}/{form2}/{brute2}, d=3: {rec3}/{form3}/{brute3}, {dt:.1f}s",
    )


def test_criterion_3_green_values():
    t0 = time.time()
    from noble.integrals import bessel_green

    b3 = bessel_green(3, 1, (), width_target=mpf(10) ** -8)
    oracle = mpf("1.5163860591519780181560121657")  # independent quadrature
    ok3 = b3.width <= mpf(10) ** -6 and b3.contains(oracle)
    tab = build_I_table(11, 4, 0, DEMO_POINTS_D11, width_target=mpf(10) ** -17)
    worst = mpf(0)
    for x in DEMO_POINTS_D11:
        for n in range(1, 5):
            worst = max(worst, tab.base(n, 0, x).width)
    dt = time.time() - t0
    ok = ok3 and worst <= mpf(10) ** -15 and dt < 600
    _report(
        "C3 green-value enclosures",
        ok,
        f"d=3 width {mp.nstr(b3.width, 3)} contains oracle={ok3}; "
        f"d=11 worst width over {len(DEMO_POINTS_D11)} points, n<=4: "
        f"{mp.nstr(worst, 3)}; {dt:.0f}s",
    )


def test_criterion_4_recursion_identity(table_d9, table_d11):
    results = []
    for tab, d in ((table_d9, 9), (table_d11, 11)):
        ok, worst = recursion_residuals(tab)
        cells = sum(
            1 for (nm, n, l, _x) in tab.entries if nm == "I" and n >= 1 and l >= 1
        )
        results.append((d, ok, worst, cells))
    allok = all(r[1] for r in results)
    _report(
        "C4 recursion identity",
        allok,
        "; ".join(
            f"d={d}: {cells} cells, residual midpoint max {mp.nstr(w, 3)}"
            for d, _o, w, cells in results
        ),
    )


def test_criterion_5_monotonicity(table_d9, table_d11):
    checked = 0
    violations = 0
    for tab in (table_d9, table_d11):
        pts = list(tab.points)
        pset = set(pts)
        for x in pts:
            for y in pts:
                if not x or not y:
                    continue
                n = max(len(x), len(y))
                z = tuple(
                    a + b
                    for a, b in zip(x + (0,) * (n - len(x)), y + (0,) * (n - len(y)))
                )
                if z not in pset:
                    continue
                for nn in (1, 2, 3):
                    for ll in (0, 1):
                        if tab.base(nn, ll, z).lo > tab.base(nn, ll, x).hi:
                            violations += 1
                        checked += 1
                try:
                    if tab.mixed_green(2, z).lo > tab.mixed_green(2, x).hi:
                        violations += 1
                    checked += 1
                except Exception:
                    pass
    ok = checked >= 200 and violations == 0
    _report("C5 monotonicity", ok, f"{checked} ordered pairs checked, {violations} violations")


NULL_D11 = """
[metadata]
d = 11
[mu]
mu = 1/(2*d-1)
mubar = 1/(2*d-1)
[sequences]
beta_xi[0] = 0
beta_xi_iota[0] = 0
beta_dxi[0] = 0
beta_dxi_iota_0[0] = 0
beta_dxi_iota_iota[0] = 0
"""

CONFIG_D11_TEMPLATE = """
[config]
d = 11
Gamma1 = {g1}
Gamma2 = 1.5
Gamma3 = {g3}
cmu = 1.002
precision = 16

[indices]
idx0 = index(0, 0, l2set(1), 1)
idx1 = index(1, 0, l2set(1), 1)
idx2 = index(1, 1, l2set(1), 1)
idx3 = index(1, 2, l2set(1), 1)
idx4 = index(1, 3, l2set(1), 1)
idx5 = index(1, 4, pointset(origin), 1)
"""


def test_criterion_6_null_model_end_to_end(table_d11):
    t0 = time.time()
    cmu = mpf("1.002")
    cfg = load_config(CONFIG_D11_TEMPLATE.format(g1=float(mpf("1.01") * cmu), g3=10))
    ledger, _ = load_beta_ledger(NULL_D11, cfg, table=table_d11)
    rep = run_verification(cfg, ledger, table_d11)
    f3_cand = rep.verdict.candidates[2]
    cfg2 = load_config(
        CONFIG_D11_TEMPLATE.format(g1=float(mpf("1.01") * cmu), g3=float(f3_cand.hi * mpf("1.5")))
    )
    ledger2, _ = load_beta_ledger(NULL_D11, cfg2, table=table_d11)
    rep2 = run_verification(cfg2, ledger2, table_d11)
    dt = time.time() - t0
    ok = (
        rep2.verdict.holds
        and rep2.verdict.candidates[1].contains(1)
        and rep2.amplitude.contains(1)
        and dt < 60
    )
    _report(
        "C6 null-model end to end",
        ok,
        f"holds={rep2.verdict.holds}, f2 candidate "
        f"[{mp.nstr(rep2.verdict.candidates[1].lo, 8)}, {mp.nstr(rep2.verdict.candidates[1].hi, 8)}] "
        f"contains 1, amplitude contains 1, {dt:.1f}s",
    )


def test_criterion_7_decomposition_identity():
    t0 = time.time()
    rng = random.Random(20240131)
    nprng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(100):
        rF = {}
        rP = {}
        for pt in [(1,), (1, 1), (2,), (2, 1), (2, 2), (1, 1, 1), (2, 1, 1), (2, 2, 2)]:
            rF[pt] = rng.uniform(-0.015, 0.015)
            rP[pt] = rng.uniform(-0.015, 0.015)
        syn = SyntheticRewrite(
            3,
            c_phi=1.0 + rng.uniform(-0.05, 0.05),
            alpha_phi=rng.uniform(-0.1, 0.1),
            c_F=rng.uniform(-0.05, 0.05),
            alpha_F=0.5 + rng.uniform(-0.1, 0.1),
            r_F=rF,
            r_Phi=rP,
        )
        ks = nprng.uniform(-np.pi, np.pi, size=(1, 3))
        worst = max(worst, decomposition_check(syn, ks, h=1e-3))
    dt = time.time() - t0
    ok = worst <= 1e-6 and dt < 60
    _report(
        "C7 five-piece decomposition",
        ok,
        f"max residual {worst:.3g} over 100 synthetics (support radius 2), {dt:.1f}s",
    )


def test_criterion_8_cosine_lemmas():
    rng = random.Random(424242)
    violations = 0
    for _ in range(10_000):
        J = rng.randint(1, 6)
        parts = [rng.uniform(-3 * math.pi, 3 * math.pi) for _ in range(J)]
        lhs, rhs_cross, rhs_fact = cosine_split_check(sum(parts), parts)
        if lhs > rhs_cross + 1e-9 or lhs > rhs_fact + 1e-9:
            violations += 1
    # second moment variant
    d = 3
    from itertools import permutations, product

    for _ in range(10_000 // 50):
        support = {}
        for _ in range(rng.randint(1, 3)):
            support[tuple(rng.randint(0, 2) for _ in range(d))] = rng.uniform(0, 1)
        g = {}
        for pt, val in support.items():
            for perm in permutations(pt):
                for signs in product((1, -1), repeat=d):
                    q = tuple(s * c for s, c in zip(signs, perm))
                    g[q] = g.get(q, 0.0)
        for pt, val in support.items():
            orbit = {tuple(s * c for s, c in zip(signs, perm))
                     for perm in permutations(pt) for signs in product((1, -1), repeat=d)}
            for q in orbit:
                g[q] += val
        for _ in range(50):
            k = [rng.uniform(-math.pi, math.pi) for _ in range(d)]
            lhs = sum(
                v * (1 - math.cos(sum(ki * xi for ki, xi in zip(k, x))))
                for x, v in g.items()
            )
            rhs = (1 - sum(math.cos(ki) for ki in k) / d) * sum(
                v * sum(c * c for c in x) for x, v in g.items()
            )
            if lhs > rhs + 1e-9:
                violations += 1
    _report("C8 cosine lemmas", violations == 0, f"2 x 10^4 samples, {violations} violations")


def test_criterion_9_transcription_oracles(table_d11):
    rng = random.Random(31337)
    worst_rel = 0.0
    for _trial in range(50):
        led, data = rewrite_oracles.random_ledger(rng)
        from noble.rewrite import (
            step1_simple_bounds,
            step2_R_l1,
            step3_step4_weighted,
            step5_lower_RF,
        )

        rb = step1_simple_bounds(led)
        o1 = rewrite_oracles.oracle_step1(data)
        assert abs(float(rb.c_phi.hi) - o1["c_hi"]) < 1e-9
        rf, rphi = step2_R_l1(led)
        orf, orphi = rewrite_oracles.oracle_step2(data)
        drphi, drf = step3_step4_weighted(led)
        odrphi, odrf = rewrite_oracles.oracle_steps34(data)
        dlow = step5_lower_RF(led)
        odlow = rewrite_oracles.oracle_step5(data)
        for impl, oracle in [
            (rf, orf), (rphi, orphi), (drphi, odrphi), (drf, odrf), (dlow, odlow)
        ]:
            assert impl.hi >= oracle - 1e-12
            assert float(impl.hi) <= oracle * 1.02 + 1e-12
            if oracle > 1e-12:
                worst_rel = max(worst_rel, abs(float(impl.hi) - oracle) / oracle)
    # dominant-piece term bounds on random synthetic rewrite constants
    worst_term = 0.0
    for _trial in range(50):
        rbf = _random_float_rb(rng)
        n, l = rng.choice([(0, 0), (0, 2), (1, 0), (1, 2)])
        x = rng.choice([(), (1, 1), (2,)])
        impl = _f3_terms_interval(table_d11, rbf, n, l, x)
        oracle = _f3_terms_float(table_d11, rbf, n, l, x)
        assert impl.hi >= oracle - 1e-12
        assert float(impl.hi) <= oracle * 1.001 + 1e-12
        worst_term = max(worst_term, abs(float(impl.hi) - oracle) / max(oracle, 1e-9))
    _report(
        "C9 transcription oracles",
        True,
        f"50 ledgers (five steps) worst rel gap {worst_rel:.2e}; "
        f"50 dominant-piece samples worst rel gap {worst_term:.2e}",
    )


def _random_float_rb(rng):
    return dict(
        c_lo=1 - rng.uniform(0, 0.05),
        c_hi=1 + rng.uniform(0, 0.05),
        a_lo=1.0 + rng.uniform(-0.05, 0.0),
        a_hi=1.0 + rng.uniform(0.0, 0.08),
        a_phi=rng.uniform(0, 0.08),
        rphi=rng.uniform(0, 0.05),
        drf=rng.uniform(0, 0.1),
        drphi=rng.uniform(0, 0.1),
        drf_low=rng.uniform(0, 0.05),
        g2=rng.uniform(1.0, 1.5),
    )


def _f3_terms_interval(table, rbf, n, l, x):
    from noble.engine import BootstrapConfig, DerivedConstants, _f3_terms_at
    from noble.integrals import PointSetSpec
    from noble.rewrite import RewriteBounds

    rb = RewriteBounds(
        c_phi=Bound(repr(rbf["c_lo"]), repr(rbf["c_hi"])),
        alpha_F=Bound(repr(rbf["a_lo"]), repr(rbf["a_hi"])),
        alpha_phi_abs=Bound(0, repr(rbf["a_phi"])),
        beta_R_F=Bound(0),
        beta_R_Phi=Bound(0, repr(rbf["rphi"])),
        beta_dR_F=Bound(0, repr(rbf["drf"])),
        beta_dR_Phi=Bound(0, repr(rbf["drphi"])),
        beta_dR_F_lower=Bound(0, repr(rbf["drf_low"])),
        pi_iota_upper=Bound(0),
        psi_kappa_lower=Bound(0),
    )
    d = table.d
    g2 = mpf(repr(rbf["g2"])) * (2 * d - 1) / (2 * d - 2)
    cfg = BootstrapConfig(
        d=d, Gamma=(2, repr(float(g2)), 5), c_mu="1.01",
        index_set=[(n, l, PointSetSpec.points([x]), 1)],
    )
    dc = DerivedConstants.from_bounds(rb, cfg)
    return _f3_terms_at(table, rb, cfg, dc, n, l, x)


def _f3_terms_float(table, rbf, n, l, x):
    """Direct float transcription of the five piece bounds."""
    d = table.d
    cx = canon_key(x)

    def J(nn, ll, pt=None):
        return float(table.weighted_line(nn, ll, cx if pt is None else pt).hi)

    def I(nn, ll, pt=None):
        return float(table.base(nn, ll, cx if pt is None else pt).hi)

    def T(nn, ll):
        return float(table.curvature_kernel(nn, ll, cx).hi)

    def Ts(nn, ll):
        return float(
            table.curvature_kernel(nn, ll, cx, cstar_scale=Bound(repr(1 / rbf["a_lo"]))).hi
        )

    def U(nn, ll):
        return float(table.sine_kernel(nn, ll, cx).hi)

    def K(nn, ll):
        return float(table.abs_kernel(nn, ll, cx).hi)

    c = rbf["c_hi"]
    a = rbf["a_phi"]
    aflo, afhi = rbf["a_lo"], rbf["a_hi"]
    g2 = rbf["g2"]  # the interval config is built so Gamma2' equals this
    rphi, drf, drphi = rbf["rphi"], rbf["drf"], rbf["drphi"]
    kdf = 1 / (aflo - rbf["drf_low"])
    dev = max(abs(aflo - 1), abs(afhi - 1))

    from noble.lattice import neighbor_orbits_step

    def shift(nn, ll):
        return sum(
            mult * I(nn, ll, pt) for pt, mult in neighbor_orbits_step(cx, d, 2).items()
        )

    if n == 0:
        h1 = c * J(0, l) + a * J(0, l + 1) + a / aflo * I(1, l + 1) \
            + a / (2 * d * d * aflo ** 2) * shift(2, l)
    elif n == 1:
        h1 = (
            c ** 2 / aflo * J(1, l)
            + c * a / aflo * J(0, l)
            + 2 * c * a / aflo * J(1, l + 1)
            + a ** 2 / aflo * J(0, l + 1)
            + a ** 2 / aflo * J(1, l + 2)
            + (rphi + drf * g2) / aflo ** 2 * (c * T(3, l) + a * T(3, l + 1) + a * T(2, l))
        )
    else:
        h1 = (
            c ** 2 / aflo ** 2 * (c * J(2, l) + a * J(1, l) + 3 * a * J(2, l + 1))
            + a ** 2 * c / aflo ** 2 * (2 * J(1, l + 1) + 3 * J(2, l + 2))
            + a ** 3 / aflo ** 2 * (J(2, l + 3) + J(1, l + 2))
            + (rphi + drphi * g2) / aflo ** 2 * (c / aflo + g2)
            * (c * T(4, l) + a * T(4, l + 1) + a * T(3, l))
            + a * (rphi + drphi * g2) / aflo ** 3
            * (c * T(4, l + 1) + a * T(4, l + 2) + a * T(3, l + 1))
        )
    h2 = drf * kdf * g2 ** n * (
        (c * Ts(n + 2, l) + a * Ts(n + 2, l + 1)) * (1 / aflo + kdf)
        + a / aflo * Ts(n + 1, l)
    ) + afhi * drphi * kdf ** 2 * Ts(n + 2, l)
    h3 = 2 * g2 ** (n + 1) * kdf ** 2 * (drf + afhi * dev) * U(n + 3, l) \
        + 2 * g2 ** n * kdf ** 2 * a * (drf / aflo + dev) * U(n + 2, l)
    h4 = kdf * (drphi * K(n, l) + drf * g2 * K(n + 1, l))
    h5 = 2 * kdf ** 2 * g2 ** (n + 1) * (2 * afhi * drf + drf ** 2) * U(n + 3, l) \
        + 2 * kdf ** 2 * g2 ** n * (afhi * drphi + a * drf + drf * drphi) * U(n + 2, l)
    return h1 + h2 + h3 + h4 + h5


def test_criterion_10_determinism_and_cache(table_d9, tmp_path):
    cfg_text = """
[config]
d = 9
Gamma1 = 1.05
Gamma2 = 1.4
Gamma3 = 3.0
cmu = 1.002
precision = 13

[indices]
idx0 = index(0, 0, l2set(1), 1)
idx1 = index(1, 0, l2set(1), 1)
"""
    led_text = NULL_D11.replace("d = 11", "d = 9")
    cfg = load_config(cfg_text)
    ledger, _ = load_beta_ledger(led_text, cfg, table=table_d9)
    r1 = run_verification(cfg, ledger, table_d9).render()
    ledger2, _ = load_beta_ledger(led_text, cfg, table=table_d9)
    r2 = run_verification(cfg, ledger2, table_d9).render()
    fn = str(tmp_path / "c10.itab")
    save_table(table_d9, fn)
    reloaded = load_table(fn, validate=True)
    ok_res, _w = recursion_residuals(reloaded)
    ok = r1 == r2 and ok_res and reloaded.entries == table_d9.entries
    _report(
        "C10 determinism and cache",
        ok,
        f"reports byte-identical={r1 == r2}, reload residual check={ok_res}",
    )
