"""Shared domain types: requirements, claims, LVOs, reports, budgets.

Everything here is an immutable value with no I/O; the other modules
build on these.  Quality ratios are stored as `fractions.Fraction` so
metric arithmetic stays exact end to end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Sequence, Union

#: The twelve built-in variable categories.  Any other (lowercase
#: snake-case) name is treated as a custom category.
CATEGORIES = (
    "email",
    "name",
    "password",
    "url",
    "date",
    "iban",
    "isbn",
    "arithmetic_expression",
    "palindrome",
    "parentheses_sequence",
    "dna_sequence",
    "file_path",
)

#: Default quality assigned to an UNSAT claim that a checker refuted.
#: A neutral midpoint: a half-satisfying witness neither dominates nor
#: is dominated by an unverified UNSAT claim.  Overridable per run.
UNSAT_CLAIM_QUALITY = Fraction(1, 2)


class ContractViolation(ValueError):
    """A caller broke a documented precondition."""


class Polarity(str, Enum):
    POSITIVE = "positive"
    NEGATED = "negated"


class Tendency(str, Enum):
    LIKELY_SAT = "likely_sat"
    LIKELY_UNSAT = "likely_unsat"


@dataclass(frozen=True)
class Requirement:
    """One natural-language requirement over a string variable.

    `polarity` records whether the containing set uses R or its negation;
    the text itself always states the positive form.
    """

    id: str
    category: str
    text: str
    polarity: Polarity = Polarity.POSITIVE

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ContractViolation(f"requirement {self.id!r} has empty text")

    @property
    def negated(self) -> bool:
        return self.polarity is Polarity.NEGATED


@dataclass(frozen=True)
class RequirementSet:
    """A conjunction of requirements; negated members contribute ¬R."""

    requirements: tuple[Requirement, ...]
    label: str | None = None  # "sat" / "unsat" ground truth, eval datasets only

    def __post_init__(self) -> None:
        if not self.requirements:
            raise ContractViolation("a requirement set needs at least one requirement")
        ids = [r.id for r in self.requirements]
        if len(set(ids)) != len(ids):
            raise ContractViolation(f"duplicate requirement ids: {ids}")
        if self.label is not None and self.label not in ("sat", "unsat"):
            raise ContractViolation(f"label must be 'sat' or 'unsat', got {self.label!r}")

    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.requirements)


# --- LVO claims -----------------------------------------------------------


@dataclass(frozen=True)
class UnsatClaim:
    kind = "unsat"


@dataclass(frozen=True)
class SatDataClaim:
    witness: str
    kind = "sat_data"


@dataclass(frozen=True)
class MalformedClaim:
    """An LLM answer that could not be parsed into either claim.

    Consumes a budget unit and is saved at quality zero so it can feed
    back as a counterexample.
    """

    raw: str
    kind = "malformed"


Claim = Union[UnsatClaim, SatDataClaim, MalformedClaim]


@dataclass(frozen=True)
class FeedbackItem:
    """One piece of evidence attached to a saved LVO.

    `counterexample` is the failed witness string, or the literal token
    "UNSAT" when the refuted claim was an unsatisfiability claim.
    `violated_requirement_ids` is populated only at feedback level VFE.
    """

    counterexample: str
    violated_requirement_ids: tuple[str, ...] | None = None
    checker_verdicts: tuple[bool, ...] | None = None
    execution_errors: tuple[str, ...] = ()


@dataclass(frozen=True)
class LVO:
    """An LLM-derived verification outcome plus its evaluation residue."""

    claim: Claim
    iteration: int
    quality: Fraction | None = None
    feedback: tuple[FeedbackItem, ...] = ()
    evaluation: str | None = None  # correct | incorrect | checker_unknown | malformed


# --- final outcomes -------------------------------------------------------


@dataclass(frozen=True)
class SatOutcome:
    witness: str
    kind = "sat"


@dataclass(frozen=True)
class UnsatOutcome:
    kind = "unsat"


@dataclass(frozen=True)
class UnknownOutcome:
    tendency: Tendency
    best: LVO
    kind = "unknown"


Outcome = Union[SatOutcome, UnsatOutcome, UnknownOutcome]


@dataclass(frozen=True)
class VerificationReport:
    outcome: Outcome
    trace: tuple[LVO, ...]
    llm_calls_used: int
    wall_time: float
    degraded: bool = False
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Budget:
    max_llm_calls: int
    max_wall_time: float | None = None
    solver_timeout: float = 5.0

    def __post_init__(self) -> None:
        if self.max_llm_calls <= 0:
            raise ContractViolation("max_llm_calls must be positive")
        if self.max_wall_time is not None and self.max_wall_time <= 0:
            raise ContractViolation("max_wall_time must be positive")
        if self.solver_timeout <= 0:
            raise ContractViolation("solver_timeout must be positive")


# --- operations -----------------------------------------------------------


def quality_of_sat(witness: str, verdicts: Sequence[bool]) -> Fraction:
    """Quality of a SAT+data claim: the ratio of requirements satisfied.

    `verdicts[i]` is the i-th requirement checker's (polarity-adjusted)
    verdict on `witness`.
    """
    if not verdicts:
        raise ContractViolation(
            f"cannot score witness {witness!r} against an empty verdict list"
        )
    return Fraction(sum(1 for v in verdicts if v), len(verdicts))


def best_saved_lvo(saved: Sequence[LVO]) -> tuple[Tendency, LVO]:
    """Pick the closest-to-sound LVO from the save store.

    Rule (1): strictly more saved UNSAT claims than SAT+data claims means
    the most recent UNSAT claim wins with a likely-UNSAT tendency.
    Rule (2): otherwise the SAT+data claim with the highest quality wins,
    ties broken by recency.  Malformed entries count on the SAT+data side
    (they are failed data-production attempts) but score quality 0.
    """
    if not saved:
        raise ContractViolation("no saved LVOs to choose from")
    unsat = [l for l in saved if isinstance(l.claim, UnsatClaim)]
    sat_side = [l for l in saved if not isinstance(l.claim, UnsatClaim)]
    if len(unsat) > len(sat_side):
        return Tendency.LIKELY_UNSAT, unsat[-1]
    # saved is non-empty and rule (1) failed, so sat_side cannot be empty
    best = max(
        enumerate(sat_side),
        key=lambda pair: (pair[1].quality if pair[1].quality is not None else Fraction(0), pair[0]),
    )[1]
    return Tendency.LIKELY_SAT, best


# --- canonical JSON -------------------------------------------------------
#
# Field names follow the domain types exactly; enums render as lowercase
# snake-case strings; rationals render as [numerator, denominator].


def _fraction_to_json(q: Fraction | None) -> list[int] | None:
    return None if q is None else [q.numerator, q.denominator]


def _fraction_from_json(v: Any) -> Fraction | None:
    return None if v is None else Fraction(v[0], v[1])


def requirement_to_json(r: Requirement) -> dict[str, Any]:
    return {
        "id": r.id,
        "category": r.category,
        "text": r.text,
        "polarity": r.polarity.value,
    }


def requirement_from_json(d: dict[str, Any]) -> Requirement:
    return Requirement(
        id=d["id"],
        category=d["category"],
        text=d["text"],
        polarity=Polarity(d.get("polarity", "positive")),
    )


def requirement_set_to_json(rs: RequirementSet) -> dict[str, Any]:
    out: dict[str, Any] = {
        "requirements": [requirement_to_json(r) for r in rs.requirements]
    }
    if rs.label is not None:
        out["label"] = rs.label
    return out


def requirement_set_from_json(d: dict[str, Any]) -> RequirementSet:
    return RequirementSet(
        requirements=tuple(requirement_from_json(r) for r in d["requirements"]),
        label=d.get("label"),
    )


def claim_to_json(c: Claim) -> dict[str, Any]:
    if isinstance(c, UnsatClaim):
        return {"kind": "unsat"}
    if isinstance(c, SatDataClaim):
        return {"kind": "sat_data", "witness": c.witness}
    return {"kind": "malformed", "raw": c.raw}


def claim_from_json(d: dict[str, Any]) -> Claim:
    kind = d["kind"]
    if kind == "unsat":
        return UnsatClaim()
    if kind == "sat_data":
        return SatDataClaim(witness=d["witness"])
    if kind == "malformed":
        return MalformedClaim(raw=d["raw"])
    raise ValueError(f"unknown claim kind {kind!r}")


def feedback_item_to_json(f: FeedbackItem) -> dict[str, Any]:
    out: dict[str, Any] = {"counterexample": f.counterexample}
    if f.violated_requirement_ids is not None:
        out["violated_requirement_ids"] = list(f.violated_requirement_ids)
    if f.checker_verdicts is not None:
        out["checker_verdicts"] = list(f.checker_verdicts)
    if f.execution_errors:
        out["execution_errors"] = list(f.execution_errors)
    return out


def feedback_item_from_json(d: dict[str, Any]) -> FeedbackItem:
    vri = d.get("violated_requirement_ids")
    cv = d.get("checker_verdicts")
    return FeedbackItem(
        counterexample=d["counterexample"],
        violated_requirement_ids=None if vri is None else tuple(vri),
        checker_verdicts=None if cv is None else tuple(cv),
        execution_errors=tuple(d.get("execution_errors", ())),
    )


def lvo_to_json(l: LVO) -> dict[str, Any]:
    return {
        "claim": claim_to_json(l.claim),
        "iteration": l.iteration,
        "quality": _fraction_to_json(l.quality),
        "feedback": [feedback_item_to_json(f) for f in l.feedback],
        "evaluation": l.evaluation,
    }


def lvo_from_json(d: dict[str, Any]) -> LVO:
    return LVO(
        claim=claim_from_json(d["claim"]),
        iteration=d["iteration"],
        quality=_fraction_from_json(d.get("quality")),
        feedback=tuple(feedback_item_from_json(f) for f in d.get("feedback", [])),
        evaluation=d.get("evaluation"),
    )


def outcome_to_json(o: Outcome) -> dict[str, Any]:
    if isinstance(o, SatOutcome):
        return {"kind": "sat", "witness": o.witness}
    if isinstance(o, UnsatOutcome):
        return {"kind": "unsat"}
    return {
        "kind": "unknown",
        "tendency": o.tendency.value,
        "best": lvo_to_json(o.best),
    }


def outcome_from_json(d: dict[str, Any]) -> Outcome:
    kind = d["kind"]
    if kind == "sat":
        return SatOutcome(witness=d["witness"])
    if kind == "unsat":
        return UnsatOutcome()
    if kind == "unknown":
        return UnknownOutcome(
            tendency=Tendency(d["tendency"]), best=lvo_from_json(d["best"])
        )
    raise ValueError(f"unknown outcome kind {kind!r}")


def report_to_json(r: VerificationReport) -> dict[str, Any]:
    return {
        "outcome": outcome_to_json(r.outcome),
        "trace": [lvo_to_json(l) for l in r.trace],
        "llm_calls_used": r.llm_calls_used,
        "wall_time": r.wall_time,
        "degraded": r.degraded,
        "notes": list(r.notes),
    }


def report_from_json(d: dict[str, Any]) -> VerificationReport:
    return VerificationReport(
        outcome=outcome_from_json(d["outcome"]),
        trace=tuple(lvo_from_json(l) for l in d.get("trace", [])),
        llm_calls_used=d["llm_calls_used"],
        wall_time=d["wall_time"],
        degraded=d.get("degraded", False),
        notes=tuple(d.get("notes", ())),
    )


def load_requirement_set(path: str) -> RequirementSet:
    with open(path, encoding="utf-8") as fh:
        return requirement_set_from_json(json.load(fh))


def dump_report(report: VerificationReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_json(report), fh, indent=2, ensure_ascii=False)
        fh.write("\n")
