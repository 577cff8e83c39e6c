"""Dataset construction, ground-truth labeling, approach matrix, metrics.

Derived requirement sets enumerate every polarity combination of a
category's base requirements (equivalence partitioning).  Metrics use
exact rational arithmetic and are reported per class; an empty
denominator renders as undefined, never as zero.
"""

from __future__ import annotations

import csv
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from strsat.checkgen import LabeledSamples, ScriptChecker
from strsat.core import (
    Budget,
    ContractViolation,
    MalformedClaim,
    Polarity,
    Requirement,
    RequirementSet,
    SatDataClaim,
    SatOutcome,
    Tendency,
    UnsatClaim,
    UnsatOutcome,
    VerificationReport,
)
from strsat.llm.gateway import Gateway
from strsat.llm.parsing import LvoParseError, parse_lvo
from strsat.llm.templates import load_template
from strsat.smt.evaluator import eval_on
from strsat.smt.nodes import CheckerExpr, negated
from strsat.smt.parser import parse_checker
from strsat.solver import SatVerdict, SolverConfig, UnsatVerdict, check
from strsat.verifier import CheckerMode, CheckerSuite, FeedbackLevel, verify

log = logging.getLogger(__name__)

DEFAULT_DERIVE_CAP = 6


class _NullGuard:
    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        return False


_NULL_GUARD = _NullGuard()


@dataclass(frozen=True)
class DatasetRequirement:
    requirement: Requirement  # positive base form
    smt: CheckerExpr
    smt_text: str
    script: ScriptChecker
    samples: LabeledSamples


@dataclass(frozen=True)
class Category:
    name: str
    alphabet: tuple[str, ...]
    requirements: tuple[DatasetRequirement, ...]
    source: str = "original"


@dataclass(frozen=True)
class LabeledSet:
    set_id: str
    category: str
    rs: RequirementSet  # label filled in


def load_category(path: str | Path) -> Category:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    requirements = []
    for entry in data["requirements"]:
        req = Requirement(
            id=entry["id"],
            category=data["category"],
            text=entry["text"],
            polarity=Polarity.POSITIVE,
        )
        smt_text = entry["ground_truth"]["smt"]
        script_src = entry["ground_truth"]["script"]
        name = script_src.split("(")[0].split()[-1]
        requirements.append(
            DatasetRequirement(
                requirement=req,
                smt=parse_checker(smt_text),
                smt_text=smt_text,
                script=ScriptChecker(source=script_src, function_name=name),
                samples=LabeledSamples(
                    requirement_id=entry["id"],
                    positives=tuple(entry["samples"]["pos"]),
                    negatives=tuple(entry["samples"]["neg"]),
                ),
            )
        )
    return Category(
        name=data["category"],
        alphabet=tuple(data["alphabet"]),
        requirements=tuple(requirements),
        source=data.get("source", "original"),
    )


def seed_dataset_dir() -> Path:
    return Path(str(resources.files("strsat").joinpath("data")))


def load_dataset(directory: str | Path | None = None) -> list[Category]:
    root = Path(directory) if directory is not None else seed_dataset_dir()
    categories = []
    for path in sorted(root.glob("*.json")):
        if path.name.endswith(".labels.json"):
            continue
        categories.append(load_category(path))
    if not categories:
        raise ContractViolation(f"no category files in {root}")
    return categories


# -- equivalence partitioning ----------------------------------------------


def derive_sets(
    base: Sequence[Requirement], cap: int = DEFAULT_DERIVE_CAP
) -> list[RequirementSet]:
    """All 2^n polarity assignments, in binary counting order (the last
    requirement flips fastest; 0 = positive)."""
    n = len(base)
    if n == 0:
        raise ContractViolation("cannot derive sets from zero requirements")
    if n > cap:
        raise ContractViolation(f"{n} base requirements exceed the cap of {cap}")
    out = []
    for mask in range(2**n):
        members = []
        for i, req in enumerate(base):
            bit = (mask >> (n - 1 - i)) & 1
            members.append(
                Requirement(
                    id=req.id,
                    category=req.category,
                    text=req.text,
                    polarity=Polarity.NEGATED if bit else Polarity.POSITIVE,
                )
            )
        out.append(RequirementSet(requirements=tuple(members)))
    return out


def polarity_bits(rs: RequirementSet) -> str:
    return "".join("1" if r.negated else "0" for r in rs.requirements)


def set_identifier(category: str, rs: RequirementSet) -> str:
    return f"{category}:{polarity_bits(rs)}"


def label_sets(
    category: Category,
    solver_config: SolverConfig,
    manual_labels: dict[str, str] | None = None,
    cap: int = DEFAULT_DERIVE_CAP,
) -> tuple[list[LabeledSet], list[str]]:
    """Label every derived set by the solver verdict on the ground-truth
    conjunction; unresolved unknowns are excluded with a warning unless a
    manual sidecar label overrides them."""
    manual_labels = manual_labels or {}
    gt = {dr.requirement.id: dr.smt for dr in category.requirements}
    labeled: list[LabeledSet] = []
    warnings: list[str] = []
    for rs in derive_sets([dr.requirement for dr in category.requirements], cap=cap):
        set_id = set_identifier(category.name, rs)
        exprs = [
            negated(gt[r.id]) if r.negated else gt[r.id] for r in rs.requirements
        ]
        verdict = check(solver_config, exprs)
        if isinstance(verdict, SatVerdict):
            label = "sat"
        elif isinstance(verdict, UnsatVerdict):
            label = "unsat"
        else:
            label = manual_labels.get(set_id)
            if label is None:
                warnings.append(
                    f"{set_id}: solver returned {verdict.reason}; excluded "
                    "(add a manual label to include it)"
                )
                continue
            warnings.append(f"{set_id}: solver unknown; using manual label {label}")
        labeled.append(
            LabeledSet(
                set_id=set_id,
                category=category.name,
                rs=RequirementSet(requirements=rs.requirements, label=label),
            )
        )
    return labeled, warnings


def load_manual_labels(directory: str | Path) -> dict[str, str]:
    """Sidecar files <category>.labels.json: {"set_id": "sat"|"unsat"}."""
    out: dict[str, str] = {}
    for path in Path(directory).glob("*.labels.json"):
        with open(path, encoding="utf-8") as fh:
            out.update(json.load(fh))
    return out


# -- approaches and records --------------------------------------------------


@dataclass(frozen=True)
class ApproachConfig:
    name: str
    mode: str  # "direct" | CheckerMode values
    level: FeedbackLevel | None = None
    provenance: str = "ground_truth"  # or "generated"
    budget: Budget = field(default_factory=lambda: Budget(max_llm_calls=5))
    checkers_dir: str | None = None  # generated-checker files per category

    def __post_init__(self) -> None:
        if self.mode == "direct":
            if self.level is not None:
                raise ContractViolation("the direct approach takes no feedback level")
        else:
            CheckerMode(self.mode)
            if self.level is None:
                raise ContractViolation(f"approach {self.name!r} needs a feedback level")


@dataclass(frozen=True)
class EvalRecord:
    set_id: str
    approach: str
    label: str
    predicted: str | None  # "sat" | "unsat" | None (no usable prediction)
    witness: str | None
    witness_valid: bool | None
    llm_calls: int
    wall_time: float
    raw_outcome: str  # sat | unsat | likely_sat | likely_unsat | none


@dataclass(frozen=True)
class Metrics:
    gsr: Fraction | None
    precision: Fraction | None
    recall: Fraction | None
    f1: Fraction | None
    syntax_accuracy: Fraction | None = None
    testing_accuracy: Fraction | None = None
    formal_accuracy: Fraction | None = None
    counts: dict[str, int] = field(default_factory=dict)


def _fmt(q: Fraction | None) -> str:
    return "n/a" if q is None else f"{float(q):.2f}"


def compute_metrics(records: Sequence[EvalRecord]) -> Metrics:
    d_sat = [r for r in records if r.label == "sat"]
    d_unsat = {r.set_id for r in records if r.label == "unsat"}
    s_unsat = {r.set_id for r in records if r.predicted == "unsat"}
    gsr = None
    if d_sat:
        good = sum(1 for r in d_sat if r.witness_valid)
        gsr = Fraction(good, len(d_sat))
    tp = len(d_unsat & s_unsat)
    precision = Fraction(tp, len(s_unsat)) if s_unsat else None
    recall = Fraction(tp, len(d_unsat)) if d_unsat else None
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics(
        gsr=gsr,
        precision=precision,
        recall=recall,
        f1=f1,
        counts={
            "sets": len(records),
            "d_sat": len(d_sat),
            "d_unsat": len(d_unsat),
            "predicted_unsat": len(s_unsat),
            "true_unsat": tp,
        },
    )


def generation_metrics(checkers: Sequence) -> Metrics:
    """Checker-generation quality over one generated list: the fraction
    that parse, that match ground truth on all 10 samples, and that are
    solver-proven equivalent (unproven, including solver unknowns, counts
    against formal accuracy)."""
    from strsat.checkgen import (
        FormallyEquivalent,
        NotEquivalentToGroundTruth,
        SemanticUnknown,
        TestedFail,
        TestedOk,
    )

    n = len(checkers)
    if n == 0:
        raise ContractViolation("no checkers to score")
    syntax = sum(1 for c in checkers if c.syntax_ok)
    tested = sum(1 for c in checkers if isinstance(c.semantic_verdict, TestedOk))
    formal = sum(1 for c in checkers if isinstance(c.semantic_verdict, FormallyEquivalent))
    has_tested = any(
        isinstance(c.semantic_verdict, (TestedOk, TestedFail)) for c in checkers
    )
    has_formal = any(
        isinstance(
            c.semantic_verdict,
            (FormallyEquivalent, NotEquivalentToGroundTruth, SemanticUnknown),
        )
        for c in checkers
    )
    return Metrics(
        gsr=None,
        precision=None,
        recall=None,
        f1=None,
        syntax_accuracy=Fraction(syntax, n),
        testing_accuracy=Fraction(tested, n) if has_tested else None,
        formal_accuracy=Fraction(formal, n) if has_formal else None,
        counts={"checkers": n, "syntax_ok": syntax, "tested_ok": tested, "proven": formal},
    )


def validate_witness(witness: str, labeled: LabeledSet, gt: dict[str, CheckerExpr]) -> bool:
    for req in labeled.rs.requirements:
        base = eval_on(gt[req.id], witness)
        if req.negated:
            base = not base
        if not base:
            return False
    return True


def _record_from_report(
    labeled: LabeledSet,
    approach: ApproachConfig,
    report: VerificationReport,
    gt: dict[str, CheckerExpr],
) -> EvalRecord:
    outcome = report.outcome
    witness = None
    if isinstance(outcome, SatOutcome):
        predicted, raw = "sat", "sat"
        witness = outcome.witness
    elif isinstance(outcome, UnsatOutcome):
        predicted, raw = "unsat", "unsat"
    else:
        # map the most likely outcomes directly
        raw = outcome.tendency.value
        predicted = "sat" if outcome.tendency is Tendency.LIKELY_SAT else "unsat"
        if isinstance(outcome.best.claim, SatDataClaim):
            witness = outcome.best.claim.witness
    witness_valid = None
    if labeled.rs.label == "sat":
        witness_valid = witness is not None and validate_witness(witness, labeled, gt)
    return EvalRecord(
        set_id=labeled.set_id,
        approach=approach.name,
        label=labeled.rs.label or "",
        predicted=predicted,
        witness=witness,
        witness_valid=witness_valid,
        llm_calls=report.llm_calls_used,
        wall_time=report.wall_time,
        raw_outcome=raw,
    )


def run_direct(
    labeled: LabeledSet, approach: ApproachConfig, gateway: Gateway, gt: dict[str, CheckerExpr]
) -> EvalRecord:
    """Single LLM call, no checkers, LVO returned as-is."""
    template = load_template("lvo")
    raw, _ = gateway.complete(
        template,
        {"requirements": _render_requirements(labeled.rs), "update_feedback": ""},
        iteration=0,
    )
    witness = None
    try:
        claim = parse_lvo(raw)
    except LvoParseError:
        claim = MalformedClaim(raw=raw)
    if isinstance(claim, SatDataClaim):
        predicted, raw_outcome = "sat", "sat"
        witness = claim.witness
    elif isinstance(claim, UnsatClaim):
        predicted, raw_outcome = "unsat", "unsat"
    else:
        predicted, raw_outcome = None, "none"
    witness_valid = None
    if labeled.rs.label == "sat":
        witness_valid = witness is not None and validate_witness(witness, labeled, gt)
    return EvalRecord(
        set_id=labeled.set_id,
        approach=approach.name,
        label=labeled.rs.label or "",
        predicted=predicted,
        witness=witness,
        witness_valid=witness_valid,
        llm_calls=1,
        wall_time=0.0,
        raw_outcome=raw_outcome,
    )


def _render_requirements(rs: RequirementSet) -> str:
    out = []
    for i, req in enumerate(rs.requirements):
        marker = " (must NOT hold)" if req.negated else ""
        out.append(f"{i + 1}. [{req.id}]{marker} {req.text}")
    return "\n".join(out)


def build_ground_truth_suite(mode: CheckerMode, category: Category) -> CheckerSuite:
    return CheckerSuite(
        mode=mode,
        smt={dr.requirement.id: dr.smt for dr in category.requirements},
        scripts={dr.requirement.id: dr.script for dr in category.requirements},
    )


def run_matrix(
    categories: Sequence[Category],
    approaches: Sequence[ApproachConfig],
    gateway_factory,
    solver_config: SolverConfig | None,
    outdir: str | Path,
    runner=None,
    manual_labels: dict[str, str] | None = None,
    suites: dict[tuple[str, str], CheckerSuite] | None = None,
    cap: int = DEFAULT_DERIVE_CAP,
    parallelism: int = 4,
) -> dict[str, Metrics]:
    """Execute every approach over every labeled set and persist records,
    per-approach metrics, and (when a ground-truth baseline pairs with a
    generated-checker approach) the m/m-hat ratio table.

    `gateway_factory(approach, labeled)` returns the Gateway for one cell,
    keeping mock iteration state per cell.  `suites` optionally overrides
    the checker suite for (approach.name, category.name) cells; otherwise
    ground-truth suites are built from the dataset.  Cells run with
    bounded parallelism; script-validating cells serialize on the single
    shared worker.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if solver_config is None:
        raise ContractViolation("run_matrix needs a solver for dataset labeling")

    labeled_all: list[tuple[Category, LabeledSet]] = []
    for category in categories:
        labeled, warnings = label_sets(category, solver_config, manual_labels, cap=cap)
        for w in warnings:
            log.warning("%s", w)
        labeled_all.extend((category, ls) for ls in labeled)

    runner_lock = threading.Lock()

    def run_cell(approach: ApproachConfig, category: Category, labeled: LabeledSet) -> EvalRecord:
        gt = {dr.requirement.id: dr.smt for dr in category.requirements}
        gateway = gateway_factory(approach, labeled)
        try:
            if approach.mode == "direct":
                return run_direct(labeled, approach, gateway, gt)
            mode = CheckerMode(approach.mode)
            suite = None
            if suites is not None:
                suite = suites.get((approach.name, category.name))
            if suite is None:
                suite = build_ground_truth_suite(mode, category)
            needs_runner = mode in (CheckerMode.SCRIPT_ONLY, CheckerMode.HYBRID)
            guard = runner_lock if needs_runner else _NULL_GUARD
            with guard:
                report = verify(
                    labeled.rs,
                    suite,
                    gateway,
                    approach.level or FeedbackLevel.VFE,
                    approach.budget,
                    solver_config=solver_config,
                    runner=runner,
                )
            return _record_from_report(labeled, approach, report, gt)
        except Exception as exc:  # noqa: BLE001 - one cell never aborts the matrix
            log.error("cell %s/%s failed: %s", approach.name, labeled.set_id, exc)
            return EvalRecord(
                set_id=labeled.set_id,
                approach=approach.name,
                label=labeled.rs.label or "",
                predicted=None,
                witness=None,
                witness_valid=False if labeled.rs.label == "sat" else None,
                llm_calls=0,
                wall_time=0.0,
                raw_outcome="error",
            )

    cells = [
        (approach, category, labeled)
        for approach in approaches
        for category, labeled in labeled_all
    ]
    results: dict[str, list[EvalRecord]] = {a.name: [] for a in approaches}
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        for (approach, _, _), record in zip(cells, pool.map(lambda c: run_cell(*c), cells)):
            results[approach.name].append(record)

    metrics: dict[str, Metrics] = {}
    for approach in approaches:
        records = results[approach.name]
        _write_records(outdir / f"records_{approach.name}.jsonl", records)
        m = compute_metrics(records)
        metrics[approach.name] = m
        _write_metrics(outdir / f"metrics_{approach.name}", approach.name, m)
    _write_ratios(outdir / "ratios.csv", approaches, metrics)
    return metrics


def _write_records(path: Path, records: Iterable[EvalRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "set_id": r.set_id,
                        "approach": r.approach,
                        "label": r.label,
                        "predicted": r.predicted,
                        "witness": r.witness,
                        "witness_valid": r.witness_valid,
                        "llm_calls": r.llm_calls,
                        "wall_time": r.wall_time,
                        "raw_outcome": r.raw_outcome,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def _metric_pairs(m: Metrics) -> list[tuple[str, Fraction | None]]:
    return [("gsr", m.gsr), ("precision", m.precision), ("recall", m.recall), ("f1", m.f1)]


def _write_metrics(stem: Path, name: str, m: Metrics) -> None:
    with open(stem.with_suffix(".csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["approach", "metric", "value", "exact"])
        for metric, value in _metric_pairs(m):
            writer.writerow(
                [name, metric, _fmt(value), "" if value is None else str(value)]
            )
    with open(stem.with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "approach": name,
                "metrics": {
                    metric: None if value is None else [value.numerator, value.denominator]
                    for metric, value in _metric_pairs(m)
                },
                "counts": m.counts,
            },
            fh,
            indent=2,
        )
        fh.write("\n")


def _write_ratios(
    path: Path, approaches: Sequence[ApproachConfig], metrics: dict[str, Metrics]
) -> None:
    """Ratio of each generated-checker approach to the ground-truth
    baseline with the same mode and level."""
    baselines = {
        (a.mode, a.level): a.name
        for a in approaches
        if a.provenance == "ground_truth" and a.mode != "direct"
    }
    rows = []
    for a in approaches:
        if a.provenance != "generated":
            continue
        baseline = baselines.get((a.mode, a.level))
        if baseline is None:
            continue
        for metric, value in _metric_pairs(metrics[a.name]):
            upper = dict(_metric_pairs(metrics[baseline]))[metric]
            if value is None or upper in (None, 0):
                ratio = None
            else:
                ratio = value / upper
            rows.append([a.name, baseline, metric, _fmt(value), _fmt(upper), _fmt(ratio)])
    if not rows:
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["approach", "baseline", "metric", "value", "upper_bound", "ratio"])
        writer.writerows(rows)
