"""Checker-based verification loop.

Each iteration asks the gateway for an LVO, evaluates it against the
checker suite, and either returns a confirmed outcome, saves the scored
LVO and retries with level-appropriate feedback, or stops on a checker
unknown.  Budget exhaustion degrades to the best saved LVO.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Union

from strsat.checkgen import CheckerKind, GeneratedChecker, ScriptChecker
from strsat.core import (
    UNSAT_CLAIM_QUALITY,
    Budget,
    Claim,
    ContractViolation,
    FeedbackItem,
    LVO,
    MalformedClaim,
    RequirementSet,
    SatDataClaim,
    SatOutcome,
    Tendency,
    UnknownOutcome,
    UnsatClaim,
    UnsatOutcome,
    VerificationReport,
    best_saved_lvo,
    quality_of_sat,
)
from strsat.llm.gateway import Gateway
from strsat.llm.parsing import LvoParseError, parse_lvo
from strsat.llm.templates import PromptTemplate, load_template
from strsat.runner import ScriptRunnerClient
from strsat.smt.evaluator import eval_on
from strsat.smt.nodes import CheckerExpr, negated
from strsat.solver import SatVerdict, SolverConfig, UnsatVerdict, check

log = logging.getLogger(__name__)

FEEDBACK_HISTORY_LIMIT = 3


class CheckerMode(str, Enum):
    SCRIPT_ONLY = "script_only"
    SMT_ONLY = "smt_only"
    HYBRID = "hybrid"


class FeedbackLevel(str, Enum):
    V = "v"
    VF = "vf"
    VFE = "vfe"


@dataclass(frozen=True)
class CheckerSuite:
    """Per-requirement checkers of the kinds a mode needs.

    Hybrid validates witnesses with scripts and certifies UNSAT with the
    declarative conjunction; `dropped_unsound` lists requirement ids
    whose generated SMT checkers did not survive generation and are
    therefore missing from that conjunction (a visible degradation).
    """

    mode: CheckerMode
    smt: dict[str, CheckerExpr] = field(default_factory=dict)
    scripts: dict[str, ScriptChecker] = field(default_factory=dict)
    dropped_unsound: tuple[str, ...] = ()

    def validate_for(self, rs: RequirementSet) -> None:
        ids = rs.ids()
        if self.mode in (CheckerMode.SCRIPT_ONLY, CheckerMode.HYBRID):
            missing = [i for i in ids if i not in self.scripts]
            if missing:
                raise ContractViolation(f"{self.mode.value} mode lacks script checkers: {missing}")
        if self.mode in (CheckerMode.SMT_ONLY, CheckerMode.HYBRID):
            missing = [i for i in ids if i not in self.smt and i not in self.dropped_unsound]
            if missing:
                raise ContractViolation(f"{self.mode.value} mode lacks SMT checkers: {missing}")


def suite_from_generated(
    mode: CheckerMode,
    smt_checkers: list[GeneratedChecker] | None = None,
    script_checkers: list[GeneratedChecker] | None = None,
) -> CheckerSuite:
    """Assemble a suite from generator output, dropping unsound SMT
    checkers visibly rather than silently."""
    smt: dict[str, CheckerExpr] = {}
    dropped: list[str] = []
    for c in smt_checkers or []:
        if c.kind is not CheckerKind.SMT:
            raise ContractViolation(f"{c.requirement_id}: expected an SMT checker")
        if c.syntax_ok and c.expr is not None:
            smt[c.requirement_id] = c.expr
        else:
            dropped.append(c.requirement_id)
    scripts: dict[str, ScriptChecker] = {}
    for c in script_checkers or []:
        if c.kind is not CheckerKind.SCRIPT:
            raise ContractViolation(f"{c.requirement_id}: expected a script checker")
        if c.syntax_ok and c.script is not None:
            scripts[c.requirement_id] = c.script
    return CheckerSuite(mode=mode, smt=smt, scripts=scripts, dropped_unsound=tuple(dropped))


# -- correctness evaluation ------------------------------------------------


@dataclass(frozen=True)
class Correct:
    pass


@dataclass(frozen=True)
class Incorrect:
    verdicts: tuple[bool, ...] | None = None  # per-requirement satisfaction
    execution_errors: tuple[str, ...] = ()
    refutation_model: str | None = None  # solver model refuting an UNSAT claim


@dataclass(frozen=True)
class CheckerUnknown:
    reason: str


CorrectnessOutcome = Union[Correct, Incorrect, CheckerUnknown]


def _witness_verdicts(
    witness: str,
    rs: RequirementSet,
    suite: CheckerSuite,
    runner: ScriptRunnerClient | None,
) -> tuple[tuple[bool, ...], tuple[str, ...]]:
    """Polarity-adjusted satisfaction per requirement, plus execution errors."""
    use_scripts = suite.mode in (CheckerMode.SCRIPT_ONLY, CheckerMode.HYBRID)
    verdicts: list[bool] = []
    errors: list[str] = []
    for req in rs.requirements:
        if use_scripts:
            if runner is None:
                raise ContractViolation(f"{suite.mode.value} mode needs a script runner")
            checker = suite.scripts[req.id]
            compiled = runner.ensure_compiled(req.id, checker.source)
            result = runner.eval(req.id, witness) if compiled.ok else compiled
            if result.ok and result.verdict is not None:
                base = result.verdict
            else:
                base = False
                errors.append(req.id)
        else:
            expr = suite.smt.get(req.id)
            if expr is None:  # dropped-unsound checker: cannot confirm
                base = False
                errors.append(req.id)
            else:
                base = eval_on(expr, witness)
        verdicts.append((not base) if req.negated else base)
    return tuple(verdicts), tuple(errors)


def _unsat_conjunction(rs: RequirementSet, suite: CheckerSuite) -> list[CheckerExpr]:
    exprs = []
    for req in rs.requirements:
        if req.id in suite.dropped_unsound:
            continue
        expr = suite.smt[req.id]
        exprs.append(negated(expr) if req.negated else expr)
    return exprs


def evaluate_correctness(
    claim: Claim,
    suite: CheckerSuite,
    solver_config: SolverConfig | None,
    rs: RequirementSet,
    runner: ScriptRunnerClient | None = None,
) -> CorrectnessOutcome:
    """Dispatch per the claim kind: witnesses go to the mode's witness
    checkers; UNSAT claims go to the declarative conjunction (imperative
    checkers cannot certify unsatisfiability)."""
    if isinstance(claim, SatDataClaim):
        verdicts, errors = _witness_verdicts(claim.witness, rs, suite, runner)
        if all(verdicts):
            return Correct()
        return Incorrect(verdicts=verdicts, execution_errors=errors)
    if isinstance(claim, UnsatClaim):
        if suite.mode is CheckerMode.SCRIPT_ONLY:
            return CheckerUnknown("imperative checkers cannot certify unsatisfiability")
        if solver_config is None:
            return CheckerUnknown("no solver configured for unsatisfiability checking")
        verdict = check(solver_config, _unsat_conjunction(rs, suite))
        if isinstance(verdict, UnsatVerdict):
            return Correct()
        if isinstance(verdict, SatVerdict):
            # the model refutes the claim; recorded in the trace, never
            # surfaced as a witness (solver strings lack realism)
            return Incorrect(refutation_model=verdict.model)
        return CheckerUnknown(verdict.reason)
    raise ContractViolation("malformed claims are scored by the loop, not evaluated")


# -- feedback ---------------------------------------------------------------


def build_feedback(
    level: FeedbackLevel,
    saved: list[LVO],
    rs: RequirementSet,
    max_items: int = FEEDBACK_HISTORY_LIMIT,
) -> str:
    """Text for the update_feedback slot; V yields none (bare retry)."""
    if level is FeedbackLevel.V or not saved:
        return ""
    by_id = {r.id: r for r in rs.requirements}
    lines: list[str] = []
    for lvo in saved[-max_items:]:
        claim = lvo.claim
        if isinstance(claim, UnsatClaim):
            lines.append(
                f"- Attempt {lvo.iteration + 1}: you answered UNSAT, but the "
                "requirements are satisfiable."
            )
            continue
        if isinstance(claim, MalformedClaim):
            lines.append(
                f"- Attempt {lvo.iteration + 1}: your reply could not be parsed; "
                "answer in the requested format."
            )
            continue
        lines.append(
            f"- Attempt {lvo.iteration + 1}: the string {claim.witness!r} does not "
            "satisfy all requirements."
        )
        if level is FeedbackLevel.VFE:
            for item in lvo.feedback:
                for rid in item.violated_requirement_ids or ():
                    req = by_id.get(rid)
                    if req is not None:
                        side = "the negation of" if req.negated else ""
                        lines.append(f"    violated {side} [{rid}]: {req.text}".replace("  ", " "))
    return "\n".join(lines)


def _render_requirements(rs: RequirementSet) -> str:
    out = []
    for i, req in enumerate(rs.requirements):
        marker = " (must NOT hold)" if req.negated else ""
        out.append(f"{i + 1}. [{req.id}]{marker} {req.text}")
    return "\n".join(out)


def _score(claim: Claim, outcome: Incorrect, unsat_quality: Fraction) -> Fraction:
    if isinstance(claim, SatDataClaim):
        return quality_of_sat(claim.witness, outcome.verdicts or ())
    return unsat_quality


def _feedback_items(level: FeedbackLevel, claim: Claim, outcome: Incorrect, rs: RequirementSet) -> tuple[FeedbackItem, ...]:
    if level is FeedbackLevel.V:
        return ()
    counterexample = claim.witness if isinstance(claim, SatDataClaim) else "UNSAT"
    violated = None
    verdicts = None
    if level is FeedbackLevel.VFE:
        verdicts = outcome.verdicts
        if outcome.verdicts is not None:
            violated = tuple(
                req.id for req, ok in zip(rs.requirements, outcome.verdicts) if not ok
            )
        else:
            violated = ()
    return (
        FeedbackItem(
            counterexample=counterexample,
            violated_requirement_ids=violated,
            checker_verdicts=verdicts,
            execution_errors=outcome.execution_errors,
        ),
    )


def _claim_tendency(claim: Claim) -> Tendency:
    return Tendency.LIKELY_UNSAT if isinstance(claim, UnsatClaim) else Tendency.LIKELY_SAT


def verify(
    rs: RequirementSet,
    suite: CheckerSuite,
    gateway: Gateway,
    level: FeedbackLevel,
    budget: Budget,
    solver_config: SolverConfig | None = None,
    runner: ScriptRunnerClient | None = None,
    unsat_quality: Fraction = UNSAT_CLAIM_QUALITY,
    template: PromptTemplate | None = None,
) -> VerificationReport:
    suite.validate_for(rs)
    if template is None:
        template = load_template("lvo")
    notes: list[str] = []
    degraded = bool(suite.dropped_unsound)
    if degraded:
        notes.append(
            "unsat path degraded: no sound declarative checker for "
            + ", ".join(suite.dropped_unsound)
        )

    start = time.monotonic()
    trace: list[LVO] = []
    saved: list[LVO] = []
    calls = 0

    def report(outcome) -> VerificationReport:
        return VerificationReport(
            outcome=outcome,
            trace=tuple(trace),
            llm_calls_used=calls,
            wall_time=time.monotonic() - start,
            degraded=degraded,
            notes=tuple(notes),
        )

    iteration = 0
    while calls < budget.max_llm_calls:
        if (
            calls > 0
            and budget.max_wall_time is not None
            and time.monotonic() - start >= budget.max_wall_time
        ):
            notes.append("wall-time budget exhausted")
            break
        temperature = None
        if level is FeedbackLevel.V and iteration > 0:
            temperature = gateway.config.retry_temperature
        raw, _ = gateway.complete(
            template,
            {
                "requirements": _render_requirements(rs),
                "update_feedback": build_feedback(level, saved, rs),
            },
            iteration=iteration,
            temperature=temperature,
        )
        calls += 1
        try:
            claim: Claim = parse_lvo(raw)
        except LvoParseError as exc:
            lvo = LVO(
                claim=MalformedClaim(raw=raw),
                iteration=iteration,
                quality=Fraction(0),
                feedback=()
                if level is FeedbackLevel.V
                else (FeedbackItem(counterexample=str(exc)),),
                evaluation="malformed",
            )
            trace.append(lvo)
            saved.append(lvo)
            iteration += 1
            continue

        outcome = evaluate_correctness(claim, suite, solver_config, rs, runner)
        if isinstance(outcome, Correct):
            quality = Fraction(1) if isinstance(claim, SatDataClaim) else unsat_quality
            trace.append(LVO(claim=claim, iteration=iteration, quality=quality, evaluation="correct"))
            if isinstance(claim, SatDataClaim):
                return report(SatOutcome(witness=claim.witness))
            return report(UnsatOutcome())
        if isinstance(outcome, Incorrect):
            if outcome.refutation_model is not None:
                notes.append(
                    f"iteration {iteration}: solver refuted UNSAT claim with model "
                    f"{outcome.refutation_model!r}"
                )
            lvo = LVO(
                claim=claim,
                iteration=iteration,
                quality=_score(claim, outcome, unsat_quality),
                feedback=_feedback_items(level, claim, outcome, rs),
                evaluation="incorrect",
            )
            trace.append(lvo)
            saved.append(lvo)
            iteration += 1
            continue
        # CheckerUnknown stops the loop immediately: no feedback is initiated
        quality = unsat_quality if isinstance(claim, UnsatClaim) else None
        lvo = LVO(claim=claim, iteration=iteration, quality=quality, evaluation="checker_unknown")
        trace.append(lvo)
        notes.append(f"iteration {iteration}: checker unknown ({outcome.reason})")
        if saved:
            tendency, best = best_saved_lvo(saved)
        else:
            tendency, best = _claim_tendency(claim), lvo
        return report(UnknownOutcome(tendency=tendency, best=best))

    tendency, best = best_saved_lvo(saved)
    return report(UnknownOutcome(tendency=tendency, best=best))
