"""Application configuration: TOML file + environment overrides.

Flags override file values; secrets stay in environment variables named
by the config (never in the file itself).
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from strsat.llm.gateway import HttpBackend, LlmConfig, MockScript
from strsat.solver import SolverConfig, default_solver_config


class ConfigError(Exception):
    pass


@dataclass
class AppConfig:
    llm: LlmConfig | None = None
    solver: SolverConfig | None = None
    runner_command: list[str] = field(
        default_factory=lambda: [sys.executable, "-m", "script_runner"]
    )
    gen_budget: int = 2
    verify_budget: int = 5
    mode: str = "hybrid"
    level: str = "vfe"
    solver_timeout: float = 5.0

    def resolve_solver(self) -> SolverConfig | None:
        if self.solver is not None:
            return self.solver
        return default_solver_config(timeout=self.solver_timeout)


def _build_llm(section: dict, base: Path) -> LlmConfig:
    backend_kind = section.get("backend", "mock")
    temperature = float(section.get("temperature", 0.0))
    max_tokens = int(section.get("max_tokens", 1024))
    if backend_kind == "mock":
        script_path = section.get("mock_script")
        if not script_path:
            raise ConfigError("[llm] backend = \"mock\" needs mock_script = \"<file>\"")
        path = (base / script_path).resolve() if not os.path.isabs(script_path) else Path(script_path)
        if not path.exists():
            raise ConfigError(f"[llm] mock_script does not exist: {path}")
        backend: MockScript | HttpBackend = MockScript.load(str(path))
    elif backend_kind == "http":
        try:
            backend = HttpBackend(
                endpoint=section["endpoint"],
                model=section["model"],
                auth_env=section.get("auth_env", "LLM_API_KEY"),
            )
        except KeyError as exc:
            raise ConfigError(f"[llm] http backend needs {exc.args[0]}")
    else:
        raise ConfigError(f"unknown [llm] backend {backend_kind!r}")
    return LlmConfig(backend=backend, temperature=temperature, max_tokens=max_tokens)


def load_config(path: str | None) -> AppConfig:
    cfg = AppConfig()
    if path is None:
        return cfg
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(file, "rb") as fh:
        data = tomllib.load(fh)
    base = file.parent

    if "llm" in data:
        cfg.llm = _build_llm(data["llm"], base)
    if "solver" in data:
        s = data["solver"]
        if "executable" in s:
            cfg.solver = SolverConfig(
                executable=s["executable"],
                args=tuple(s.get("args", ())),
                timeout=float(s.get("timeout", 5.0)),
                logic=s.get("logic", "QF_SLIA"),
            )
        if "timeout" in s:
            cfg.solver_timeout = float(s["timeout"])
    if "runner" in data:
        command = data["runner"].get("command")
        if command:
            cfg.runner_command = command.split() if isinstance(command, str) else list(command)
    budgets = data.get("budgets", {})
    cfg.gen_budget = int(budgets.get("gen", cfg.gen_budget))
    cfg.verify_budget = int(budgets.get("verify", cfg.verify_budget))
    defaults = data.get("defaults", {})
    cfg.mode = defaults.get("mode", cfg.mode)
    cfg.level = defaults.get("level", cfg.level)
    if cfg.gen_budget <= 0 or cfg.verify_budget <= 0:
        raise ConfigError("budgets must be positive")
    return cfg
