"""Client for the imperative-checker worker process.

Speaks line-delimited JSON over the worker's stdin/stdout.  The worker
is long-lived; if it hangs past the grace deadline or dies, the client
kills it, respawns, and replays the compile registry, so a rogue checker
never poisons subsequent evaluations.
"""

from __future__ import annotations

import json
import logging
import select
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Sequence

log = logging.getLogger(__name__)

DEFAULT_TIME_LIMIT_MS = 1000


@dataclass(frozen=True)
class RunnerResult:
    ok: bool
    verdict: bool | None = None
    error_kind: str | None = None
    error_message: str | None = None
    error_line: int | None = None


class RunnerUnavailable(Exception):
    """The worker could not be spawned at all."""


class ScriptRunnerClient:
    def __init__(
        self,
        command: Sequence[str] | str,
        default_time_limit_ms: int = DEFAULT_TIME_LIMIT_MS,
    ):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.default_time_limit_ms = default_time_limit_ms
        self._proc: subprocess.Popen | None = None
        self._registry: dict[str, str] = {}
        # the worker is single-threaded: serialize requests per worker
        self._lock = threading.Lock()

    # -- lifecycle -----------------------------------------------------

    def _spawn(self) -> subprocess.Popen:
        try:
            return subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise RunnerUnavailable(f"cannot start script runner {self.command}: {exc}")

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = self._spawn()
            self._replay_registry()
        return self._proc

    def _replay_registry(self) -> None:
        for checker_id, source in self._registry.items():
            self._raw_request(
                {"op": "compile", "checker_id": checker_id, "source": source},
                deadline_s=5.0,
                allow_restart=False,
            )

    def _kill(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
                self._proc.wait(timeout=5)
            except Exception:
                pass
            self._proc = None

    def close(self) -> None:
        self._kill()

    def __enter__(self) -> "ScriptRunnerClient":
        self._ensure()
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- protocol ------------------------------------------------------

    def _raw_request(
        self, payload: dict, deadline_s: float, allow_restart: bool = True
    ) -> dict | None:
        proc = self._ensure() if allow_restart else self._proc
        if proc is None:
            return None
        try:
            proc.stdin.write(json.dumps(payload, ensure_ascii=False) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._kill()
            return None
        deadline = time.monotonic() + deadline_s
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self._kill()
                return None
            ready, _, _ = select.select([proc.stdout], [], [], remaining)
            if not ready:
                continue
            line = proc.stdout.readline()
            if not line:
                self._kill()
                return None
            line = line.strip()
            if not line:
                continue
            try:
                return json.loads(line)
            except json.JSONDecodeError:
                log.warning("discarding non-JSON runner output: %r", line[:120])

    def _request(self, payload: dict, deadline_s: float) -> RunnerResult:
        try:
            with self._lock:
                response = self._raw_request(payload, deadline_s)
        except RunnerUnavailable:
            raise
        if response is None:
            # hang or crash: worker was killed; next call respawns and replays
            return RunnerResult(
                ok=False, error_kind="timeout", error_message="worker unresponsive; restarted"
            )
        error = response.get("error") or {}
        return RunnerResult(
            ok=bool(response.get("ok")),
            verdict=response.get("verdict"),
            error_kind=error.get("kind"),
            error_message=error.get("message"),
            error_line=error.get("line"),
        )

    # -- operations ------------------------------------------------------

    def compile(self, checker_id: str, source: str) -> RunnerResult:
        result = self._request(
            {"op": "compile", "checker_id": checker_id, "source": source},
            deadline_s=10.0,
        )
        if result.ok:
            self._registry[checker_id] = source
        return result

    def ensure_compiled(self, checker_id: str, source: str) -> RunnerResult:
        """Compile only when the registered source differs; suites sharing
        requirement ids can then coexist on one worker."""
        if self._registry.get(checker_id) == source:
            return RunnerResult(ok=True)
        return self.compile(checker_id, source)

    def eval(
        self, checker_id: str, candidate: str, time_limit_ms: int | None = None
    ) -> RunnerResult:
        limit = time_limit_ms or self.default_time_limit_ms
        return self._request(
            {
                "op": "eval",
                "checker_id": checker_id,
                "candidate": candidate,
                "time_limit_ms": limit,
            },
            deadline_s=2 * limit / 1000 + 1.0,
        )


def runner_available(command: Sequence[str] | str) -> bool:
    """Probe the worker with a trivial compile; False on any failure."""
    try:
        with ScriptRunnerClient(command) as client:
            probe = client.compile("__probe__", "def probe(s: str) -> bool:\n    return True")
            return probe.ok
    except (RunnerUnavailable, OSError):
        return False
