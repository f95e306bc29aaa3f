import itertools
import os
import tempfile

import pytest

from noble.lattice import canon_key
from noble.walks import (
    EnumerationBudgetExceeded,
    build_avoiding_table,
    build_nbw_table,
    build_srw_table,
    count_bond_sa,
    count_nbw,
    count_saw,
    count_srw,
    count_srw_loop_formula,
    load_walk_table,
    save_walk_table,
)
from noble import _enum_kernels


def _enumerate_simple(d, n, target):
    """All n-step walks by brute force (reference for the recursion)."""
    target = tuple(target) + (0,) * (d - len(target))
    count = 0
    moves = []
    for i in range(d):
        for s in (1, -1):
            e = [0] * d
            e[i] = s
            moves.append(tuple(e))
    for path in itertools.product(moves, repeat=n):
        pos = [0] * d
        for step in path:
            pos = [p + s for p, s in zip(pos, step)]
        if tuple(pos) == target:
            count += 1
    return count


def test_zero_step():
    assert count_srw(3, 0, ()) == 1
    assert count_srw(3, 0, (1,)) == 0


def test_six_step_loops():
    assert count_srw(2, 6, ()) == 400
    assert count_srw(3, 6, ()) == 1860


def test_two_step_loop_is_2d():
    assert count_srw(2, 2, ()) == 4


def test_loop_formula():
    assert count_srw_loop_formula(1) == 20
    assert count_srw_loop_formula(2) == 400
    assert count_srw_loop_formula(3) == 1860
    assert count_srw_loop_formula(3) == count_srw(3, 6, ())


def test_mass_conservation(srw_d2, srw_d3):
    for tab, d in ((srw_d2, 2), (srw_d3, 3)):
        for n in range(9):
            assert tab.total(n) == (2 * d) ** n
    tab4 = build_srw_table(4, 6)
    for n in range(7):
        assert tab4.total(n) == 8 ** n


def test_recursion_vs_enumeration():
    for d in (2, 3):
        for n in range(7):
            for x in [(), (1,), (1, 1), (2,), (2, 1)]:
                assert count_srw(d, n, x) == _enumerate_simple(d, n, x), (d, n, x)


def test_nbw_immediate_reversal_forbidden():
    for d in (2, 3, 5):
        assert count_nbw(d, 2, ()) == 0


def test_nbw_four_step_loops_d2():
    assert count_nbw(2, 4, ()) == 8


def test_nbw_one_step():
    assert count_nbw(3, 1, (1,)) == 1


def test_nbw_mass(nbw_d2):
    for n in range(1, 9):
        assert nbw_d2.total(n) == 4 * 3 ** (n - 1)


def test_nbw_below_srw(nbw_d2, srw_d2):
    for (n, cx), b in nbw_d2.counts.items():
        assert b <= srw_d2.counts.get((n, cx), 0)


def test_nbw_odd_loops_vanish(nbw_d2):
    for n in (1, 3, 5, 7):
        assert nbw_d2.counts.get((n, ()), 0) == 0


def _enumerate_avoiding(d, n, target, bond_mode):
    target = tuple(target) + (0,) * (d - len(target))
    moves = []
    for i in range(d):
        for s in (1, -1):
            e = [0] * d
            e[i] = s
            moves.append(tuple(e))
    count = 0
    for path in itertools.product(moves, repeat=n):
        pos = (0,) * d
        visited = {pos}
        bonds = set()
        ok = True
        for step in path:
            nxt = tuple(p + s for p, s in zip(pos, step))
            bond = (pos, nxt) if pos < nxt else (nxt, pos)
            if bond_mode and bond in bonds:
                ok = False
                break
            if not bond_mode and nxt in visited:
                ok = False
                break
            bonds.add(bond)
            visited.add(nxt)
            pos = nxt
        if ok and pos == target:
            count += 1
    return count


def test_avoiding_counts_match_brute_force():
    for d in (2, 3):
        for n in range(6):
            for x in [(), (1,), (1, 1), (2,), (2, 1)]:
                assert count_bond_sa(d, n, x) == _enumerate_avoiding(d, n, x, True)
                assert count_saw(d, n, x) == _enumerate_avoiding(d, n, x, False)


def test_avoiding_examples():
    assert count_bond_sa(2, 1, (1,)) == 1
    assert count_bond_sa(2, 2, ()) == 0  # the 2-loop reuses its bond
    a3 = count_bond_sa(2, 3, (1,))
    assert a3 <= count_srw(2, 3, (1,))


def test_ordering_saw_bondsa_srw():
    for n in range(6):
        for x in [(), (1,), (2,), (1, 1)]:
            c = count_saw(2, n, x)
            a = count_bond_sa(2, n, x)
            p = count_srw(2, n, x)
            assert c <= a <= p


def test_budget_guard():
    with pytest.raises(EnumerationBudgetExceeded):
        count_saw(2, 11, ())
    assert count_saw(2, 11, (), n_max=11) >= 0


def test_python_fallback_agrees_with_dispatch():
    for d in (2, 3):
        for n in range(5):
            for x in [(), (1,), (1, 1)]:
                ref = _enum_kernels._count_walks_py(d, n, canon_key(x), True)
                assert count_bond_sa(d, n, x) == ref
                ref = _enum_kernels._count_walks_py(d, n, canon_key(x), False)
                assert count_saw(d, n, x) == ref


def test_avoiding_table_build():
    tab = build_avoiding_table(2, 5, kind="bond-sa")
    assert tab.counts[(1, (1,))] == 1
    assert (2, ()) not in tab.counts


def test_cache_roundtrip(srw_d3):
    fn = os.path.join(tempfile.mkdtemp(), "walks.cache")
    save_walk_table(srw_d3, fn)
    again = load_walk_table(fn)
    assert again.counts == srw_d3.counts
    assert again.d == 3 and again.kind == "srw" and again.n_done == 8
