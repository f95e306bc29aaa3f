import pytest
from mpmath import mpf

from noble.bounds import Bound
from noble.ledger import (
    CycleDetected,
    Evaluator,
    LedgerSyntaxError,
    LedgerValidationError,
    UnknownSymbol,
    builtin_functions,
    parse_ledger,
)


def _eval(text, env=None, functions=None):
    doc = parse_ledger(text)
    ev = Evaluator(doc, env=env, functions=functions or builtin_functions())
    return ev.evaluate_all()


def test_simple_expression_with_env():
    vals = _eval("beta_xi[0] = 0.01 / d", env={"d": Bound(11)})
    assert vals["beta_xi[0]"].contains(mpf("0.01") / 11)
    assert vals["beta_xi[0]"].contains(mpf(1) / 1100)


def test_cycle_detected():
    with pytest.raises(CycleDetected) as err:
        _eval("x = y\ny = x")
    assert "x" in str(err.value) and "y" in str(err.value)


def test_unknown_symbol_reports_name():
    with pytest.raises(UnknownSymbol) as err:
        _eval("x = nope + 1")
    assert "nope" in str(err.value)


def test_syntax_error_position():
    with pytest.raises(LedgerSyntaxError) as err:
        _eval("x = 1 + * 2")
    assert err.value.line == 1


def test_duplicate_key_rejected():
    with pytest.raises(LedgerValidationError):
        _eval("x = 1\nx = 2")


def test_operator_precedence_and_power():
    vals = _eval("a = 2 + 3 * 4 ^ 2\nb = -2^2\nc = (2+3)*4")
    assert vals["a"].contains(50)
    assert vals["b"].contains(-4)
    assert vals["c"].contains(20)


def test_division_and_scientific():
    vals = _eval("a = 1/(2*10 - 1)\nb = 2.5e-3")
    assert vals["a"].contains(mpf(1) / 19)
    assert vals["b"].contains(mpf("0.0025"))


def test_interval_min_max_sqrt():
    vals = _eval("a = interval(1, 2)\nb = max(0.5, 3, 1)\nc = min(2, 1)\ns = sqrt(4)")
    assert vals["a"].lo <= 1 and vals["a"].hi >= 2
    assert vals["b"].contains(3)
    assert vals["c"].contains(1)
    assert vals["s"].contains(2)


def test_list_literals_are_tuples():
    vals = _eval("v = [1, 2, 3]\nm = [[1, 0], [0, 1]]")
    assert len(vals["v"]) == 3
    assert vals["m"][1][1].contains(1)


def test_order_independence():
    a = _eval("x = y + 1\ny = 2")
    b = _eval("y = 2\nx = y + 1")
    assert a["x"].contains(3) and b["x"].contains(3)
    assert a["x"].lo == b["x"].lo and a["x"].hi == b["x"].hi


def test_sections_and_comments():
    doc = parse_ledger("# top\n[mu]\nmu = 0.5 # trailing\n[splits]\nx = 1\n")
    assert doc.entries["mu"].section == "mu"
    assert doc.entries["x"].section == "splits"


def test_sequence_items_dense():
    doc = parse_ledger("a[0] = 1\na[1] = 2\nb = 3")
    assert doc.sequence_items("a") == ["a[0]", "a[1]"]
    assert doc.sequence_items("b") is None
    doc = parse_ledger("a[0] = 1\na[2] = 2")
    with pytest.raises(LedgerValidationError):
        doc.sequence_items("a")


def test_table_functions_resolve_against_cache(table_d9):
    fns = builtin_functions(table=table_d9)
    env = {"d": Bound(9), "mubar": Bound("0.05"), "origin": ()}
    vals = _eval(
        "bubble = 2*d*mubar^2 * I(2, 2, origin)\nedge = I(1, 0, [1])",
        env=env,
        functions=fns,
    )
    expected = 2 * 9 * Bound("0.05") ** 2 * table_d9.base(2, 2, ())
    assert vals["bubble"].overlaps(expected)
    assert vals["edge"].overlaps(table_d9.base(1, 0, (1,)))


def test_walk_count_functions():
    from noble.walks import build_srw_table

    fns = builtin_functions(walk_tables={"srw": build_srw_table(2, 6)})
    vals = _eval("loops = p(6, origin)", env={"origin": ()}, functions=fns)
    assert vals["loops"].contains(400)


def test_power_requires_integer_exponent():
    with pytest.raises(LedgerValidationError):
        _eval("x = 2 ^ 0.5")
