from __future__ import annotations

import sys

import pytest
from hypothesis import given, settings

from strsat.smt.evaluator import eval_on
from strsat.smt.nodes import negated
from strsat.smt.parser import parse_checker
from strsat.solver import (
    Equivalent,
    NotEquivalent,
    SatVerdict,
    SolverConfig,
    UnknownVerdict,
    UnsatVerdict,
    check,
    default_solver_config,
    prove_equivalent,
    solver_available,
)

from strategies import checker_exprs, candidate_strings


@pytest.fixture(scope="module")
def email_exprs(email):
    return [dr.smt for dr in email.requirements]


def test_solver_available_probe(minisolve_config):
    assert solver_available(minisolve_config) is True
    assert solver_available(SolverConfig(executable="/no/such/solver")) is False
    # a binary that is not a solver answers nothing parseable
    assert solver_available(SolverConfig(executable="/bin/cat")) is False


def test_email_conjunction_sat(minisolve_config, email_exprs):
    verdict = check(minisolve_config, email_exprs)
    assert isinstance(verdict, SatVerdict)
    assert verdict.model is not None
    assert all(eval_on(e, verdict.model) for e in email_exprs)


def test_email_unsat_case(minisolve_config, email_exprs):
    r1, r2, r3 = email_exprs
    verdict = check(minisolve_config, [r1, negated(r2), negated(r3)])
    assert isinstance(verdict, UnsatVerdict)


def test_fix_pins_the_model(minisolve_config, email_exprs):
    verdict = check(minisolve_config, [email_exprs[0]], fix="ab@cd.com")
    assert isinstance(verdict, SatVerdict)
    assert verdict.model == "ab@cd.com"
    verdict = check(minisolve_config, [email_exprs[0]], fix="ab@@cd.com")
    assert isinstance(verdict, UnsatVerdict)


def test_model_unescaping_round_trip(minisolve_config):
    tricky = 'a"b\\u{30}'
    expr = parse_checker("(> (str.len s) 0)")
    verdict = check(minisolve_config, [expr], fix=tricky)
    assert isinstance(verdict, SatVerdict)
    assert verdict.model == tricky


def test_empty_conjunction_is_sat(minisolve_config):
    assert isinstance(check(minisolve_config, []), SatVerdict)


def test_timeout_forces_unknown(email_exprs):
    # 1 ms is below interpreter startup, so the child is always killed
    config = SolverConfig(
        executable=sys.executable, args=("-m", "strsat.minisolve"), timeout=0.001
    )
    verdict = check(config, email_exprs)
    assert isinstance(verdict, UnknownVerdict)
    assert verdict.reason == "timeout"


def test_failed_scripts_retained_with_debug_flag(tmp_path):
    config = SolverConfig(
        executable=sys.executable,
        args=("-m", "strsat.minisolve"),
        timeout=0.001,
        keep_failed_scripts=True,
        scripts_dir=str(tmp_path),
    )
    check(config, [parse_checker("true")])
    assert list(tmp_path.glob("strsat_check_*.smt2"))


def test_scripts_cleaned_up_on_success(tmp_path, minisolve_config):
    config = SolverConfig(
        executable=minisolve_config.executable,
        args=minisolve_config.args,
        timeout=10.0,
        scripts_dir=str(tmp_path),
    )
    check(config, [parse_checker("true")])
    assert not list(tmp_path.glob("*.smt2"))


def test_process_error_reported():
    config = SolverConfig(executable="/no/such/solver", timeout=1.0)
    verdict = check(config, [])
    assert isinstance(verdict, UnknownVerdict)
    assert verdict.reason.startswith("process_error")


def test_prove_equivalent_double_negation(minisolve_config):
    a = parse_checker('(str.contains s "@")')
    b = parse_checker('(not (not (str.contains s "@")))')
    assert isinstance(prove_equivalent(minisolve_config, a, b), Equivalent)


def test_prove_equivalent_distinguishing_witness(minisolve_config):
    a = parse_checker('(str.contains s "@")')
    b = parse_checker("true")
    outcome = prove_equivalent(minisolve_config, a, b)
    assert isinstance(outcome, NotEquivalent)
    assert eval_on(a, outcome.witness) != eval_on(b, outcome.witness)


def test_prove_equivalent_renames_variables(minisolve_config):
    a = parse_checker('(str.prefixof "ab" s)')
    b = parse_checker('(str.in.re x (re.++ (str.to.re "ab") (re.* re.allchar)))')
    assert isinstance(prove_equivalent(minisolve_config, a, b), Equivalent)


def test_default_solver_config_resolves_something():
    config = default_solver_config(timeout=5.0)
    assert config is not None  # the bundled fallback always answers
    assert solver_available(config)


def test_default_solver_config_can_be_disabled(monkeypatch):
    monkeypatch.setenv("STRSAT_SOLVER", "none")
    assert default_solver_config() is None


@settings(max_examples=60, deadline=None)
@given(checker_exprs(depth=2), candidate_strings(4))
def test_fixed_sat_agrees_with_evaluator(minisolve_config, expr, w):
    # cross-validation of script emission vs the in-process evaluator:
    # a sat answer under (= s w) implies eval_on agrees
    verdict = check(minisolve_config, [expr], fix=w)
    if isinstance(verdict, SatVerdict):
        assert eval_on(expr, w) is True
    elif isinstance(verdict, UnsatVerdict):
        assert eval_on(expr, w) is False
