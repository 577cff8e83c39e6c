"""Command-line interface: verify, gen-checkers, eval, check-string, selftest.

Exit codes for verify: 0 = SAT, 1 = UNSAT, 2 = UNKNOWN, >2 = operational
error (bad config, missing backends, unreadable input).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from strsat import __version__
from strsat.checkgen import (
    CheckerKind,
    SplitStrategy,
    generate_checkers,
    load_checkers,
    requirements_fingerprint,
    save_checkers,
)
from strsat.config import AppConfig, ConfigError, load_config
from strsat.core import (
    Budget,
    ContractViolation,
    SatOutcome,
    UnsatOutcome,
    load_requirement_set,
    dump_report,
)
from strsat.evaluation import (
    ApproachConfig,
    load_dataset,
    load_manual_labels,
    run_matrix,
    seed_dataset_dir,
)
from strsat.llm.gateway import Gateway, LlmConfig, MockScript
from strsat.runner import ScriptRunnerClient, runner_available
from strsat.smt.evaluator import eval_on
from strsat.solver import solver_available
from strsat.verifier import (
    CheckerMode,
    FeedbackLevel,
    suite_from_generated,
    verify,
)

log = logging.getLogger("strsat")

EXIT_SAT = 0
EXIT_UNSAT = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3
EXIT_INTERNAL = 4

_MODE_FLAGS = {
    "direct": "direct",
    "script": CheckerMode.SCRIPT_ONLY,
    "smt": CheckerMode.SMT_ONLY,
    "hybrid": CheckerMode.HYBRID,
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--mode", choices=sorted(_MODE_FLAGS), help="checker mode")
    parser.add_argument("--level", choices=["v", "vf", "vfe"], help="feedback level")
    parser.add_argument("--budget", type=int, help="verifier LLM-call budget")
    parser.add_argument("--split", choices=["ind", "batch", "nosplit"], help="batching strategy")
    parser.add_argument("--trace", action="store_true", help="print the iteration trace")
    parser.add_argument("--seed-mock", metavar="SCRIPT.json", help="use a scripted mock LLM")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strsat",
        description="Satisfiability checking of natural-language string requirements.",
    )
    parser.add_argument("--version", action="version", version=f"strsat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verify a requirement set")
    p.add_argument("requirements", help="RequirementSet JSON file")
    p.add_argument("--checkers", action="append", default=[], help="checker JSON file (repeatable)")
    p.add_argument("--out", help="report JSON path (default <input>.report.json)")
    p.add_argument("--no-cache", action="store_true", help="always regenerate checkers")
    _common_flags(p)

    p = sub.add_parser("gen-checkers", help="generate checkers for a requirement set")
    p.add_argument("requirements")
    p.add_argument("--kind", choices=["smt", "script"], required=True)
    p.add_argument("-o", "--out", required=True, help="output checker JSON")
    _common_flags(p)

    p = sub.add_parser("eval", help="run an approach matrix over a dataset")
    p.add_argument("dataset_dir", help="dataset directory, or 'seed' for the bundled one")
    p.add_argument("matrix", help="matrix JSON file")
    p.add_argument("-o", "--out", default="eval-out", help="output directory")
    p.add_argument("--approaches", help="comma-separated filter on approach names")
    _common_flags(p)

    p = sub.add_parser("check-string", help="evaluate checkers on one string")
    p.add_argument("requirements")
    p.add_argument("value", help="candidate string")
    p.add_argument("--checkers", action="append", default=[], help="checker JSON file")
    _common_flags(p)

    p = sub.add_parser("selftest", help="run built-in smoke checks")
    _common_flags(p)
    return parser


def _gateway_from_args(args, cfg: AppConfig) -> Gateway:
    if getattr(args, "seed_mock", None):
        return Gateway(LlmConfig(backend=MockScript.load(args.seed_mock)))
    if cfg.llm is not None:
        return Gateway(cfg.llm)
    raise CliError(
        "no LLM backend configured: pass --seed-mock SCRIPT.json or set [llm] in the config"
    )


def _mode_from_args(args, cfg: AppConfig):
    flag = args.mode or cfg.mode
    # config files use the long names, flags the short ones
    if flag in _MODE_FLAGS:
        return _MODE_FLAGS[flag]
    return CheckerMode(flag)


def _ground_truth_lookup():
    lookup = {}
    for category in load_dataset():
        for dr in category.requirements:
            lookup[dr.requirement.id] = dr
    return lookup


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    rs = load_requirement_set(args.requirements)
    mode = _mode_from_args(args, cfg)
    if mode == "direct":
        raise CliError("use --mode script/smt/hybrid for verification (direct is eval-only)")
    level = FeedbackLevel(args.level or cfg.level)
    budget = Budget(max_llm_calls=args.budget or cfg.verify_budget)
    gateway = _gateway_from_args(args, cfg)

    solver_config = cfg.resolve_solver()
    if solver_config is None and mode is CheckerMode.SMT_ONLY:
        raise CliError(
            "no SMT solver available; try --mode script (imperative checkers only)"
        )

    runner = None
    if mode in (CheckerMode.SCRIPT_ONLY, CheckerMode.HYBRID):
        if not runner_available(cfg.runner_command):
            raise CliError(
                "script runner unavailable (install the script-runner package or "
                "configure [runner] command); try --mode smt"
            )
        runner = ScriptRunnerClient(cfg.runner_command)

    try:
        suite = _assemble_suite(args, cfg, rs, mode, gateway, runner)
        report = verify(
            rs, suite, gateway, level, budget, solver_config=solver_config, runner=runner
        )
    finally:
        if runner is not None:
            runner.close()

    out_path = args.out or str(Path(args.requirements).with_suffix(".report.json"))
    dump_report(report, out_path)
    _print_report(report, out_path, args.trace)
    if isinstance(report.outcome, SatOutcome):
        return EXIT_SAT
    if isinstance(report.outcome, UnsatOutcome):
        return EXIT_UNSAT
    return EXIT_UNKNOWN


def _assemble_suite(args, cfg, rs, mode, gateway, runner):
    needed = []
    if mode in (CheckerMode.SMT_ONLY, CheckerMode.HYBRID):
        needed.append(CheckerKind.SMT)
    if mode in (CheckerMode.SCRIPT_ONLY, CheckerMode.HYBRID):
        needed.append(CheckerKind.SCRIPT)

    loaded = {}
    for path in args.checkers:
        checkers = load_checkers(path, runner=runner)
        for kind in set(c.kind for c in checkers):
            loaded[kind] = [c for c in checkers if c.kind is kind]

    strategy = SplitStrategy(args.split or "ind")
    backend_id = "mock" if isinstance(gateway.config.backend, MockScript) else "http"
    for kind in needed:
        if kind in loaded:
            continue
        cache_path = None
        if not args.no_cache:
            fingerprint = requirements_fingerprint(rs, kind, strategy, backend_id)
            cache_path = Path(args.requirements).with_suffix(
                f".checkers-{kind.value}-{fingerprint}.json"
            )
            if cache_path.exists():
                loaded[kind] = load_checkers(str(cache_path), runner=runner)
                log.info("loaded cached %s checkers from %s", kind.value, cache_path)
                continue
        checkers = generate_checkers(
            rs, strategy, kind, gateway, retry_budget=cfg.gen_budget, runner=runner
        )
        loaded[kind] = checkers
        if cache_path is not None:
            save_checkers(
                str(cache_path),
                checkers,
                provenance={"generator": backend_id, "split": strategy.value},
            )
    if CheckerKind.SCRIPT in needed:
        unsound = [c.requirement_id for c in loaded[CheckerKind.SCRIPT] if not c.syntax_ok]
        if unsound:
            raise CliError(
                f"no sound script checker for {unsound}: witnesses cannot be "
                "validated in this mode (check the LLM backend or checker file, "
                "or try --mode smt)"
            )
    if CheckerKind.SMT in needed:
        if all(not c.syntax_ok for c in loaded[CheckerKind.SMT]):
            raise CliError(
                "every generated SMT checker is unsound; nothing to verify "
                "against (check the LLM backend or checker file)"
            )
    return suite_from_generated(
        mode,
        smt_checkers=loaded.get(CheckerKind.SMT),
        script_checkers=loaded.get(CheckerKind.SCRIPT),
    )


def _print_report(report, out_path: str, trace: bool) -> None:
    outcome = report.outcome
    if isinstance(outcome, SatOutcome):
        print(f"SAT: witness {outcome.witness!r}")
    elif isinstance(outcome, UnsatOutcome):
        print("UNSAT")
    else:
        tendency = "~SAT" if outcome.tendency.value == "likely_sat" else "~UNSAT"
        quality = outcome.best.quality
        print(f"UNKNOWN ({tendency}), best saved LVO quality "
              f"{'-' if quality is None else quality}")
    print(f"llm_calls={report.llm_calls_used} wall_time={report.wall_time:.2f}s"
          + (" degraded" if report.degraded else ""))
    for note in report.notes:
        print(f"note: {note}")
    if trace:
        for lvo in report.trace:
            claim = lvo.claim
            label = getattr(claim, "witness", None) or getattr(claim, "raw", None) or "UNSAT"
            print(f"  iter {lvo.iteration}: {claim.kind} {label!r} -> {lvo.evaluation}"
                  f" (quality {lvo.quality if lvo.quality is not None else '-'})")
    print(f"report written to {out_path}")


def cmd_gen_checkers(args) -> int:
    cfg = load_config(args.config)
    rs = load_requirement_set(args.requirements)
    kind = CheckerKind(args.kind)
    strategy = SplitStrategy(args.split or "ind")
    gateway = _gateway_from_args(args, cfg)
    runner = None
    if kind is CheckerKind.SCRIPT:
        if not runner_available(cfg.runner_command):
            raise CliError("script checker generation needs the script runner")
        runner = ScriptRunnerClient(cfg.runner_command)
    try:
        checkers = generate_checkers(
            rs, strategy, kind, gateway, retry_budget=cfg.gen_budget, runner=runner
        )
    finally:
        if runner is not None:
            runner.close()
    save_checkers(
        args.out,
        checkers,
        provenance={
            "generator": "mock" if isinstance(gateway.config.backend, MockScript) else "http",
            "split": strategy.value,
            "kind": kind.value,
        },
    )
    unsound = 0
    print(f"{'requirement':<20} {'syntax':<8} attempts")
    for c in checkers:
        status = "ok" if c.syntax_ok else f"UNSOUND ({c.error})"
        unsound += 0 if c.syntax_ok else 1
        print(f"{c.requirement_id:<20} {status:<8} {c.attempts}")
    print(f"written to {args.out}; {unsound} unsound of {len(checkers)}")
    return EXIT_SAT if unsound == 0 else EXIT_UNSAT


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    with open(args.matrix, encoding="utf-8") as fh:
        matrix = json.load(fh)
    entries = matrix.get("approaches", [])
    if not entries:
        raise CliError("matrix file lists no approaches")
    if args.approaches:
        wanted = set(args.approaches.split(","))
        entries = [e for e in entries if e["name"] in wanted]
        if not entries:
            raise CliError(f"no matrix approaches match {sorted(wanted)}")

    solver_config = cfg.resolve_solver()
    if solver_config is None:
        raise CliError("eval needs a solver for dataset labeling; none available")

    dataset_dir = str(seed_dataset_dir()) if args.dataset_dir == "seed" else args.dataset_dir
    categories = load_dataset(dataset_dir)
    manual = load_manual_labels(dataset_dir)

    approaches = []
    gateways: dict[str, MockScript | None] = {}
    suites: dict[tuple[str, str], object] = {}
    for entry in entries:
        level = entry.get("level")
        checkers_ref = entry.get("checkers", "ground_truth")
        approach = ApproachConfig(
            name=entry["name"],
            mode=entry["mode"],
            level=None if level is None else FeedbackLevel(level),
            provenance="ground_truth" if checkers_ref == "ground_truth" else "generated",
            budget=Budget(max_llm_calls=int(entry.get("budget", cfg.verify_budget))),
            checkers_dir=None if checkers_ref == "ground_truth" else checkers_ref,
        )
        approaches.append(approach)
        mock_path = entry.get("mock") or getattr(args, "seed_mock", None)
        gateways[entry["name"]] = MockScript.load(mock_path) if mock_path else None
        if approach.checkers_dir is not None and approach.mode != "direct":
            for category in categories:
                suite = _load_generated_suite(
                    Path(approach.checkers_dir), category.name, CheckerMode(approach.mode)
                )
                if suite is not None:
                    suites[(approach.name, category.name)] = suite

    def gateway_factory(approach, labeled) -> Gateway:
        script = gateways[approach.name]
        if script is not None:
            return Gateway(LlmConfig(backend=script))
        if cfg.llm is not None:
            return Gateway(cfg.llm)
        raise CliError(
            f"approach {approach.name!r} has no mock and no [llm] config backend"
        )

    runner = None
    if any(a.mode in ("hybrid", "script_only") for a in approaches):
        if not runner_available(cfg.runner_command):
            raise CliError(
                "matrix includes script-validating approaches but the script "
                "runner is unavailable"
            )
        runner = ScriptRunnerClient(cfg.runner_command)

    try:
        metrics = run_matrix(
            categories,
            approaches,
            gateway_factory,
            solver_config,
            args.out,
            runner=runner,
            manual_labels=manual,
            suites=suites or None,
        )
    finally:
        if runner is not None:
            runner.close()
    print(f"{'approach':<24} {'GSR':>6} {'P':>6} {'R':>6} {'F1':>6}")
    for name, m in metrics.items():
        def f(v):
            return "n/a" if v is None else f"{float(v):.2f}"
        print(f"{name:<24} {f(m.gsr):>6} {f(m.precision):>6} {f(m.recall):>6} {f(m.f1):>6}")
    print(f"reports written to {args.out}/")
    return EXIT_SAT


def _load_generated_suite(directory: Path, category: str, mode: CheckerMode):
    """Suite from gen-checkers output files <category>_smt.json and
    <category>_script.json; None when the needed files are absent."""
    smt = script = None
    smt_path = directory / f"{category}_smt.json"
    script_path = directory / f"{category}_script.json"
    if mode in (CheckerMode.SMT_ONLY, CheckerMode.HYBRID):
        if not smt_path.exists():
            return None
        smt = load_checkers(str(smt_path))
    if mode in (CheckerMode.SCRIPT_ONLY, CheckerMode.HYBRID):
        if not script_path.exists():
            return None
        script = load_checkers(str(script_path))
    return suite_from_generated(mode, smt_checkers=smt, script_checkers=script)


def cmd_check_string(args) -> int:
    rs = load_requirement_set(args.requirements)
    exprs = {}
    if args.checkers:
        for path in args.checkers:
            for c in load_checkers(path):
                if c.kind is CheckerKind.SMT and c.syntax_ok:
                    exprs[c.requirement_id] = c.expr
    else:
        lookup = _ground_truth_lookup()
        for req in rs.requirements:
            if req.id in lookup:
                exprs[req.id] = lookup[req.id].smt
    missing = [r.id for r in rs.requirements if r.id not in exprs]
    if missing:
        raise CliError(
            f"no checker for requirement(s) {missing}; pass --checkers FILE "
            "(ids outside the bundled dataset need explicit checkers)"
        )
    value = args.value
    print(f"{'requirement':<20} {'polarity':<9} {'base':<6} satisfied")
    all_ok = True
    for req in rs.requirements:
        base = eval_on(exprs[req.id], value)
        ok = (not base) if req.negated else base
        all_ok &= ok
        print(f"{req.id:<20} {req.polarity.value:<9} {str(base).lower():<6} {str(ok).lower()}")
    print(f"conjunction: {'satisfied' if all_ok else 'violated'}")
    return EXIT_SAT if all_ok else EXIT_UNSAT


def cmd_selftest(args) -> int:
    from strsat.smt.parser import parse_checker
    from strsat.smt.printer import format_expr

    cfg = load_config(args.config)
    failures = 0

    def step(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        failures += 0 if ok else 1
        print(f"[{'ok' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))

    lookup = _ground_truth_lookup()
    r1 = lookup["email_r1"].smt
    step("parse/print round trip", parse_checker(format_expr(r1.root)).root == r1.root)
    step("eval true case", eval_on(r1, "ab@cd.com"))
    step("eval false case", not eval_on(r1, "ab@@cd.com"))
    from strsat.smt.evaluator import enumerate_sat

    step("bounded enumeration", enumerate_sat([r1], {"a", "@"}, 2) == "@")
    solver_config = cfg.resolve_solver()
    if solver_config is None:
        step("solver probe", True, "no solver available; degraded modes only")
    else:
        step("solver probe", solver_available(solver_config), solver_config.executable)
    runner_ok = runner_available(cfg.runner_command)
    step("script runner", True, "available" if runner_ok else "absent (smt/direct modes only)")
    return EXIT_SAT if failures == 0 else EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "verify": cmd_verify,
        "gen-checkers": cmd_gen_checkers,
        "eval": cmd_eval,
        "check-string": cmd_check_string,
        "selftest": cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort operational error
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
