import itertools

import numpy as np
import pytest

from censornet.cli import cmd_oracle
from censornet.netgen import edge_probability
from censornet.oracle import (
    CHECKS,
    CheckResult,
    check_edge_probability,
    check_inclusion,
    check_ols,
    check_pivot,
    format_results,
    run_oracles,
)


@pytest.mark.parametrize(
    "check", [check_ols, check_edge_probability, check_pivot, check_inclusion]
)
def test_check_passes(check):
    result = check(np.random.default_rng(17))
    assert result.passed, result.detail
    assert type(result.passed) is bool


def test_check_edge_probability_per_pair(monkeypatch):
    "Alternating errors that cancel in the arc total still fail the check"
    sign = itertools.cycle([0.05, -0.05])

    def shifted(*args):
        return edge_probability(*args) + next(sign)

    monkeypatch.setattr("censornet.oracle.edge_probability", shifted)
    result = check_edge_probability(np.random.default_rng(17))
    assert result.passed is False
    assert "worst pair" in result.detail


def test_check_inclusion_detail():
    result = check_inclusion(np.random.default_rng(3), draws=20_000, k=2)
    assert result.passed
    assert "0.4" in result.detail


def test_run_oracles_deterministic():
    a = run_oracles(5)
    b = run_oracles(5)
    assert [r.name for r in a] == list(CHECKS)
    assert a == b


def test_format_results():
    table = format_results(
        [
            CheckResult(name="first", passed=True, detail="ok"),
            CheckResult(name="second", passed=False, detail="off by 4 SE"),
        ]
    )
    lines = table.splitlines()
    assert len(lines) == 3
    assert "pass" in lines[1]
    assert "FAIL" in lines[2]
    assert "off by 4 SE" in lines[2]


def test_cmd_oracle(capsys):
    assert cmd_oracle() == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    for name in CHECKS:
        assert name in out


def test_cmd_oracle_reports_failure(capsys, monkeypatch):
    monkeypatch.setattr(
        "censornet.cli.run_oracles",
        lambda: [CheckResult(name="broken", passed=False, detail="no")],
    )
    assert cmd_oracle() == 2
    assert "FAIL" in capsys.readouterr().out
