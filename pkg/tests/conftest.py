from __future__ import annotations

import hashlib
import sys

import pytest

from strsat.core import Polarity, Requirement, RequirementSet
from strsat.evaluation import Category, load_dataset
from strsat.runner import RunnerResult
from strsat.solver import SolverConfig, default_solver_config


@pytest.fixture(scope="session")
def categories() -> list[Category]:
    return load_dataset()


@pytest.fixture(scope="session")
def email(categories) -> Category:
    return next(c for c in categories if c.name == "email")


@pytest.fixture(scope="session")
def solver_config() -> SolverConfig | None:
    return default_solver_config(timeout=5.0)


@pytest.fixture(scope="session")
def minisolve_config() -> SolverConfig:
    """The bundled fallback solver, pinned directly (tests of the solver
    client itself should not depend on what happens to be on PATH)."""
    return SolverConfig(
        executable=sys.executable, args=("-m", "strsat.minisolve"), timeout=10.0
    )


def require_solver(config: SolverConfig | None) -> SolverConfig:
    if config is None:
        pytest.skip("SKIPPED: no local solver binary available (set STRSAT_SOLVER)")
    return config


def polarity_set(category: Category, bits: str) -> RequirementSet:
    """Requirement set from a polarity bitstring ('1' = negated)."""
    assert len(bits) == len(category.requirements)
    members = []
    for bit, dr in zip(bits, category.requirements):
        base = dr.requirement
        members.append(
            Requirement(
                id=base.id,
                category=base.category,
                text=base.text,
                polarity=Polarity.NEGATED if bit == "1" else Polarity.POSITIVE,
            )
        )
    return RequirementSet(requirements=tuple(members))


class FakeRunner:
    """In-process stand-in for the script-runner client: executes checker
    functions directly so primary tests run with the worker absent."""

    def __init__(self):
        self.functions = {}
        self.sources = {}
        self.eval_calls = 0

    def compile(self, checker_id: str, source: str) -> RunnerResult:
        try:
            namespace: dict = {}
            exec(source, {"__builtins__": __builtins__}, namespace)  # noqa: S102 - test double
        except SyntaxError as exc:
            return RunnerResult(ok=False, error_kind="syntax_error", error_message=str(exc))
        functions = [v for v in namespace.values() if callable(v)]
        if len(functions) != 1:
            return RunnerResult(
                ok=False, error_kind="syntax_error", error_message="need exactly one function"
            )
        self.functions[checker_id] = functions[0]
        self.sources[checker_id] = source
        return RunnerResult(ok=True)

    def ensure_compiled(self, checker_id: str, source: str) -> RunnerResult:
        if self.sources.get(checker_id) == source:
            return RunnerResult(ok=True)
        return self.compile(checker_id, source)

    def eval(self, checker_id: str, candidate: str, time_limit_ms: int | None = None) -> RunnerResult:
        self.eval_calls += 1
        fn = self.functions.get(checker_id)
        if fn is None:
            return RunnerResult(ok=False, error_kind="protocol_error", error_message="not compiled")
        try:
            verdict = fn(candidate)
        except Exception as exc:  # noqa: BLE001
            return RunnerResult(ok=False, error_kind="runtime_error", error_message=str(exc))
        if not isinstance(verdict, bool):
            return RunnerResult(
                ok=False, error_kind="runtime_error", error_message="non-bool return"
            )
        return RunnerResult(ok=True, verdict=verdict)


class RandomVerdictRunner:
    """Deterministic pseudo-random verdicts keyed by (checker, candidate)."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def ensure_compiled(self, checker_id: str, source: str) -> RunnerResult:
        return RunnerResult(ok=True)

    def compile(self, checker_id: str, source: str) -> RunnerResult:
        return RunnerResult(ok=True)

    def eval(self, checker_id: str, candidate: str, time_limit_ms: int | None = None) -> RunnerResult:
        digest = hashlib.sha256(f"{self.seed}|{checker_id}|{candidate}".encode()).digest()
        return RunnerResult(ok=True, verdict=bool(digest[0] & 1))


@pytest.fixture
def fake_runner() -> FakeRunner:
    return FakeRunner()
