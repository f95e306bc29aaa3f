import math
import random

import pytest
from mpmath import mp, mpf

from noble.bounds import (
    Bound,
    DivisionByIntervalContainingZero,
    bound_max,
    bound_min,
    cosine_split_check,
    interval_arith,
)


def test_add_exact():
    r = interval_arith(Bound(1), Bound(2), "+")
    assert r.lo == 3 and r.hi == 3


def test_mul_sign_analysis():
    r = interval_arith(Bound(0, 1), Bound(-1, 1), "*")
    assert r.lo == -1 and r.hi == 1


def test_div_endpoint_quotients():
    r = interval_arith(Bound(2, 3), Bound(1, 2), "/")
    assert r.lo == 1 and r.hi == 3


def test_div_by_zero_interval_rejected():
    with pytest.raises(DivisionByIntervalContainingZero):
        Bound(1) / Bound(-1, 1)


def test_pow_even_through_zero():
    r = interval_arith(Bound(-2, 1), 2, "^n")
    assert r.lo == 0 and r.hi == 4


def test_min_max():
    a, b = Bound(1, 3), Bound(2, 5)
    assert a.min(b).lo == 1 and a.min(b).hi == 3
    assert a.max(b).lo == 2 and a.max(b).hi == 5
    assert bound_max([a, b]).hi == 5
    assert bound_min([a, b]).lo == 1


def test_outward_rounding_on_decimal_input():
    b = Bound("0.1")
    assert b.lo <= mpf(1) / 10 <= b.hi


def test_containment_randomized():
    # for sampled members, every operation result stays inside the
    # interval-arithmetic enclosure
    rng = random.Random(1234)
    ops = {
        "+": lambda x, y: x + y,
        "-": lambda x, y: x - y,
        "*": lambda x, y: x * y,
        "/": lambda x, y: x / y,
    }
    checks = 0
    for _ in range(2500):
        alo = rng.uniform(-5, 5)
        ahi = alo + rng.uniform(0, 3)
        blo = rng.uniform(-5, 5)
        bhi = blo + rng.uniform(0, 3)
        A = Bound(repr(alo), repr(ahi))
        B = Bound(repr(blo), repr(bhi))
        a = rng.uniform(alo, ahi)
        b = rng.uniform(blo, bhi)
        for op, f in ops.items():
            if op == "/" and blo <= 0 <= bhi:
                continue
            enc = interval_arith(A, B, op)
            assert enc.contains(repr(f(a, b))), (op, a, b)
            checks += 1
    assert checks >= 8000


def test_serialize_roundtrip_bit_exact():
    b = Bound("0.1", "0.30000000001") * Bound("1e-7")
    again = Bound.deserialize(b.serialize())
    assert again == b


def test_widened():
    b = Bound(1, 2).widened("0.5")
    assert b.lo <= mpf("0.5") and b.hi >= mpf("2.5")


def test_intersect_and_hull():
    a, b = Bound(0, 2), Bound(1, 3)
    assert a.intersect(b).lo == 1 and a.intersect(b).hi == 2
    assert a.hull(b).lo == 0 and a.hull(b).hi == 3


# -- trigonometric splitting lemmas (oracle checks) ------------------------

def test_cosine_split_zero():
    lhs, rhs_cross, rhs_fact = cosine_split_check(0.0, [0.0, 0.0])
    assert lhs == 0 and rhs_cross >= 0 and rhs_fact >= 0


def test_cosine_split_half_pi_parts():
    lhs, rhs_cross, rhs_fact = cosine_split_check(math.pi, [math.pi / 2, math.pi / 2])
    assert abs(lhs - 2) < 1e-12
    assert rhs_fact == pytest.approx(4.0)
    assert lhs <= rhs_cross + 1e-12
    assert lhs <= rhs_fact + 1e-12


def test_cosine_split_randomized():
    rng = random.Random(99)
    for _ in range(10_000):
        J = rng.randint(1, 6)
        parts = [rng.uniform(-3 * math.pi, 3 * math.pi) for _ in range(J)]
        t = sum(parts)
        lhs, rhs_cross, rhs_fact = cosine_split_check(t, parts)
        assert lhs <= rhs_cross + 1e-9
        assert lhs <= rhs_fact + 1e-9


def test_symmetrized_second_moment_inequality():
    # sum_x g(x)[1 - cos(k.x)] <= [1 - D(k)] sum_x g(x) |x|^2 for
    # nonnegative symmetric g with finite support
    from itertools import permutations, product

    rng = random.Random(7)
    d = 3
    for _ in range(10_000 // 100):
        support = {}
        for _ in range(rng.randint(1, 4)):
            pt = tuple(rng.randint(0, 2) for _ in range(d))
            support[pt] = rng.uniform(0, 1)
        # symmetrize
        g = {}
        for pt, val in support.items():
            orbit = set()
            for perm in permutations(pt):
                for signs in product((1, -1), repeat=d):
                    orbit.add(tuple(s * c for s, c in zip(signs, perm)))
            for q in orbit:
                g[q] = g.get(q, 0.0) + val
        for _ in range(100):
            k = [rng.uniform(-math.pi, math.pi) for _ in range(d)]
            lhs = sum(
                val * (1 - math.cos(sum(ki * xi for ki, xi in zip(k, x))))
                for x, val in g.items()
            )
            dk = sum(math.cos(ki) for ki in k) / d
            rhs = (1 - dk) * sum(val * sum(c * c for c in x) for x, val in g.items())
            assert lhs <= rhs + 1e-9
