"""The shipped demo documents run end to end and hold."""

import os
import subprocess
import sys

from noble.verifier import load_beta_ledger, load_config, run_verification

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "noble", "data")


def _read(name):
    with open(os.path.join(DATA, name)) as f:
        return f.read()


def test_demo_config_parses():
    cfg = load_config(_read("demo_d11.config"))
    assert cfg.bootstrap.d == 11
    assert len(cfg.bootstrap.index_set) == 6


def test_null_ledger_holds(table_d11):
    cfg = load_config(_read("demo_d11.config"))
    ledger, _ = load_beta_ledger(_read("null_d11.ledger"), cfg, table=table_d11)
    rep = run_verification(cfg, ledger, table_d11)
    assert rep.verdict.holds
    assert rep.verdict.candidates[1].contains(1)


def test_demo_ledger_holds_with_finite_margins(table_d11):
    cfg = load_config(_read("demo_d11.config"))
    ledger, _ = load_beta_ledger(_read("demo_perc_d11.ledger"), cfg, table=table_d11)
    rep = run_verification(cfg, ledger, table_d11)
    assert rep.verdict.holds, rep.verdict.failing
    # gamma_2 candidate strictly inside the threshold
    assert rep.verdict.candidates[1].hi < cfg.bootstrap.Gamma[1].lo
    assert rep.amplitude.is_finite()
    assert all(0 < m < 1 for m in rep.verdict.margins)


def test_demo_ledger_uses_printed_matrix(table_d11):
    cfg = load_config(_read("demo_d11.config"))
    ledger, doc = load_beta_ledger(_read("demo_perc_d11.ledger"), cfg, table=table_d11)
    # the undirected family is matrix-backed and its order-0 entry is v.w
    ent = ledger.seq("xi").entry(0)
    assert ent.contains(0.3 * (0.03 + 0.03 + 0.04))
    assert "XiMat.B" in doc.entries


def test_numba_disable_flag():
    out = subprocess.run(
        [sys.executable, "-c",
         "from noble import _enum_kernels as k; print(k.numba_enabled())"],
        env={**os.environ, "NOBLE_DISABLE_NUMBA": "1"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "False"
