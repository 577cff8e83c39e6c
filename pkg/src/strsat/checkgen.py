"""Divide-and-conquer checker generation.

Requirements are split into batches, each batch is converted to checkers
through the gateway, and every checker is syntax-checked individually.
A batch with unsound members is re-prompted with feedback naming them,
up to the retry budget; survivors keep their first sound version, so a
later regeneration cannot un-sound them.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence, Union

from strsat.core import ContractViolation, Requirement, RequirementSet
from strsat.llm.gateway import Gateway
from strsat.llm.parsing import BatchParseError, parse_checker_batch, script_function_name
from strsat.llm.templates import PromptTemplate, load_template
from strsat.runner import ScriptRunnerClient
from strsat.smt.evaluator import eval_on
from strsat.smt.nodes import CheckerExpr, CheckerSyntaxError
from strsat.smt.parser import parse_checker
from strsat.solver import (
    Equivalent,
    NotEquivalent,
    SolverConfig,
    prove_equivalent,
)

log = logging.getLogger(__name__)

DEFAULT_RETRY_BUDGET = 2


class SplitStrategy(str, Enum):
    IND = "ind"
    BATCH = "batch"
    NOSPLIT = "nosplit"


class CheckerKind(str, Enum):
    SMT = "smt"
    SCRIPT = "script"


@dataclass(frozen=True)
class ScriptChecker:
    """One imperative checker: a single function from string to bool."""

    source: str
    function_name: str


@dataclass(frozen=True)
class LabeledSamples:
    requirement_id: str
    positives: tuple[str, ...]
    negatives: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.positives) != 5 or len(self.negatives) != 5:
            raise ContractViolation(
                f"samples for {self.requirement_id!r} must be exactly 5+5, got "
                f"{len(self.positives)}+{len(self.negatives)}"
            )


# -- semantic verdicts --------------------------------------------------


@dataclass(frozen=True)
class FailingSample:
    value: str
    expected: bool
    got: bool | None = None
    execution_error: str | None = None


@dataclass(frozen=True)
class TestedOk:
    kind = "tested_ok"


@dataclass(frozen=True)
class TestedFail:
    failing: tuple[FailingSample, ...]
    kind = "tested_fail"


@dataclass(frozen=True)
class FormallyEquivalent:
    kind = "formally_equivalent"


@dataclass(frozen=True)
class NotEquivalentToGroundTruth:
    witness: str
    kind = "not_equivalent"


@dataclass(frozen=True)
class SemanticUnknown:
    reason: str
    kind = "unknown"


SemanticVerdict = Union[
    TestedOk, TestedFail, FormallyEquivalent, NotEquivalentToGroundTruth, SemanticUnknown
]


@dataclass(frozen=True)
class GeneratedChecker:
    requirement_id: str
    kind: CheckerKind
    raw_text: str
    attempts: int
    syntax_ok: bool
    expr: CheckerExpr | None = None
    script: ScriptChecker | None = None
    error: str | None = None
    semantic_verdict: SemanticVerdict | None = None


@dataclass(frozen=True)
class Batch:
    requirements: tuple[Requirement, ...]


def split(rs: RequirementSet, strategy: SplitStrategy) -> list[Batch]:
    """Partition the set into batches, preserving input order."""
    if strategy is SplitStrategy.IND:
        return [Batch((r,)) for r in rs.requirements]
    if strategy is SplitStrategy.BATCH:
        positives = tuple(r for r in rs.requirements if not r.negated)
        negatives = tuple(r for r in rs.requirements if r.negated)
        return [Batch(b) for b in (positives, negatives) if b]
    return [Batch(rs.requirements)]


def _render_requirements(requirements: Sequence[Requirement]) -> str:
    return "\n".join(f"{i + 1}. [{r.id}] {r.text}" for i, r in enumerate(requirements))


def _syntax_check(
    text: str, kind: CheckerKind, requirement_id: str, runner: ScriptRunnerClient | None
) -> tuple[CheckerExpr | None, ScriptChecker | None, str | None]:
    """Returns (expr, script, error); error None means sound."""
    if kind is CheckerKind.SMT:
        try:
            return parse_checker(text), None, None
        except CheckerSyntaxError as exc:
            return None, None, exc.message
    if runner is None:
        raise ContractViolation(
            "script checker generation needs a script runner for syntax evaluation"
        )
    name = script_function_name(text)
    if name is None:
        return None, None, "no function definition found"
    result = runner.compile(requirement_id, text)
    if result.ok:
        return None, ScriptChecker(source=text, function_name=name), None
    detail = result.error_message or result.error_kind or "compile failed"
    return None, None, detail


def generate_checkers(
    rs: RequirementSet,
    strategy: SplitStrategy,
    kind: CheckerKind,
    gateway: Gateway,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
    runner: ScriptRunnerClient | None = None,
    template: PromptTemplate | None = None,
) -> list[GeneratedChecker]:
    """One checker per requirement, in input order.

    Uses at most (1 + retry_budget) gateway calls per batch; checkers
    still unsound after the budget come back flagged syntax_ok=False.
    """
    if template is None:
        template = load_template("checker_smt" if kind is CheckerKind.SMT else "checker_script")
    by_id: dict[str, GeneratedChecker] = {}
    for batch in split(rs, strategy):
        by_id.update(_generate_batch(batch, kind, gateway, retry_budget, runner, template))
    return [by_id[r.id] for r in rs.requirements]


def _generate_batch(
    batch: Batch,
    kind: CheckerKind,
    gateway: Gateway,
    retry_budget: int,
    runner: ScriptRunnerClient | None,
    template: PromptTemplate,
) -> dict[str, GeneratedChecker]:
    requirements = batch.requirements
    done: dict[str, GeneratedChecker] = {}
    feedback = ""
    attempts_made = 0
    for attempt in range(1 + retry_budget):
        attempts_made = attempt + 1
        raw, _ = gateway.complete(
            template,
            {
                "requirements": _render_requirements(requirements),
                "count": len(requirements),
                "update_feedback": feedback,
            },
            iteration=attempt,
        )
        try:
            texts = parse_checker_batch(raw, len(requirements), kind.value)
        except BatchParseError as exc:
            feedback = f"Your previous reply was unusable: {exc}. Reply in the requested format."
            log.info("batch parse failure on attempt %d: %s", attempt + 1, exc)
            continue
        problems: list[str] = []
        for req, text in zip(requirements, texts):
            if req.id in done and done[req.id].syntax_ok:
                continue
            expr, script, error = _syntax_check(text, kind, req.id, runner)
            done[req.id] = GeneratedChecker(
                requirement_id=req.id,
                kind=kind,
                raw_text=text,
                attempts=attempt + 1,
                syntax_ok=error is None,
                expr=expr,
                script=script,
                error=error,
            )
            if error is not None:
                problems.append(f"the checker for requirement [{req.id}] is unsound: {error}")
        if not problems:
            break
        feedback = "\n".join(problems)
    for req in requirements:
        if req.id not in done:
            # every attempt failed to parse as a batch; nothing per-checker to keep
            done[req.id] = GeneratedChecker(
                requirement_id=req.id,
                kind=kind,
                raw_text="",
                attempts=attempts_made,
                syntax_ok=False,
                error="no parseable checker batch within budget",
            )
    return done


def test_semantics(
    checker: GeneratedChecker,
    samples: LabeledSamples,
    runner: ScriptRunnerClient | None = None,
    time_limit_ms: int = 1000,
) -> SemanticVerdict:
    """Testing-based soundness: all 10 labeled samples must match."""
    if not checker.syntax_ok:
        raise ContractViolation("semantic testing needs a syntactically sound checker")
    failing: list[FailingSample] = []
    labeled = [(v, True) for v in samples.positives] + [(v, False) for v in samples.negatives]
    for value, expected in labeled:
        if checker.kind is CheckerKind.SMT:
            got: bool | None = eval_on(checker.expr, value)
            error = None
        else:
            if runner is None:
                raise ContractViolation("script semantic testing needs a script runner")
            compiled = runner.ensure_compiled(checker.requirement_id, checker.script.source)
            result = (
                runner.eval(checker.requirement_id, value, time_limit_ms)
                if compiled.ok
                else compiled
            )
            got = result.verdict if result.ok else None
            error = None if result.ok else (result.error_kind or "execution error")
        if got != expected:
            failing.append(
                FailingSample(value=value, expected=expected, got=got, execution_error=error)
            )
    return TestedOk() if not failing else TestedFail(tuple(failing))


def formal_accuracy_check(
    checker: GeneratedChecker, ground_truth: CheckerExpr, solver_config: SolverConfig
) -> SemanticVerdict:
    """Solver-proven equivalence with the ground-truth checker."""
    if checker.kind is not CheckerKind.SMT or not checker.syntax_ok:
        raise ContractViolation("formal accuracy applies to sound SMT checkers only")
    outcome = prove_equivalent(solver_config, checker.expr, ground_truth)
    if isinstance(outcome, Equivalent):
        return FormallyEquivalent()
    if isinstance(outcome, NotEquivalent):
        return NotEquivalentToGroundTruth(witness=outcome.witness)
    return SemanticUnknown(reason=outcome.reason)


def attach_semantic_verdict(
    checker: GeneratedChecker, verdict: SemanticVerdict
) -> GeneratedChecker:
    return replace(checker, semantic_verdict=verdict)


# -- persistence ---------------------------------------------------------


def requirements_fingerprint(
    rs: RequirementSet, kind: CheckerKind, strategy: SplitStrategy, backend_id: str
) -> str:
    payload = json.dumps(
        {
            "texts": [r.text for r in rs.requirements],
            "kind": kind.value,
            "split": strategy.value,
            "backend": backend_id,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def save_checkers(
    path: str, checkers: Sequence[GeneratedChecker], provenance: dict | None = None
) -> None:
    data = {
        "provenance": provenance or {},
        "checkers": [
            {
                "requirement_id": c.requirement_id,
                "kind": c.kind.value,
                "raw_text": c.raw_text,
                "syntax_ok": c.syntax_ok,
                "attempts": c.attempts,
                "error": c.error,
            }
            for c in checkers
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def load_checkers(path: str, runner: ScriptRunnerClient | None = None) -> list[GeneratedChecker]:
    """Rehydrate checkers from disk, re-running the syntax front ends."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    out: list[GeneratedChecker] = []
    for entry in data["checkers"]:
        kind = CheckerKind(entry["kind"])
        text = entry["raw_text"]
        expr = script = None
        error = entry.get("error")
        syntax_ok = False
        if text:
            if kind is CheckerKind.SCRIPT and runner is None:
                # keep the stored verdict; scripts cannot be re-checked without a runner
                name = script_function_name(text)
                syntax_ok = bool(entry.get("syntax_ok")) and name is not None
                script = ScriptChecker(text, name) if name else None
            else:
                expr, script, error = _syntax_check(text, kind, entry["requirement_id"], runner)
                syntax_ok = error is None
        out.append(
            GeneratedChecker(
                requirement_id=entry["requirement_id"],
                kind=kind,
                raw_text=text,
                attempts=entry.get("attempts", 1),
                syntax_ok=syntax_ok,
                expr=expr,
                script=script,
                error=error,
            )
        )
    return out
