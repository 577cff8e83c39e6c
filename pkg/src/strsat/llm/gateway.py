"""Uniform LLM interface: a deterministic scriptable mock and a
chat-completions HTTP backend behind one `complete` call.

Transport retries (network flakes) are capped at 3 and are not charged
to any semantic feedback budget; callers account their own calls from
the returned receipts.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from typing import Union

from strsat.llm.templates import PromptTemplate

log = logging.getLogger(__name__)

TRANSPORT_RETRIES = 3


class LlmError(Exception):
    pass


class MockRuleMiss(LlmError):
    """No mock rule matched and no default exists: the script is not total."""


@dataclass(frozen=True)
class CallReceipt:
    backend_id: str
    latency: float
    tokens: int | None = None


@dataclass(frozen=True)
class MockRule:
    """One scripted response; all specified conditions must match.

    `contains` matches the fully rendered prompt; `feedback_contains`
    matches only the rendered update_feedback slot.  Either may be a
    list, in which case every member must appear.
    """

    response: str
    kind: str | None = None
    iteration: int | None = None
    iteration_lt: int | None = None
    iteration_gte: int | None = None
    contains: str | tuple[str, ...] | None = None
    feedback_contains: str | tuple[str, ...] | None = None

    def matches(self, kind: str, iteration: int, prompt: str, feedback: str) -> bool:
        if self.kind is not None and self.kind != kind:
            return False
        if self.iteration is not None and self.iteration != iteration:
            return False
        if self.iteration_lt is not None and not iteration < self.iteration_lt:
            return False
        if self.iteration_gte is not None and not iteration >= self.iteration_gte:
            return False
        if not _contains_all(prompt, self.contains):
            return False
        if not _contains_all(feedback, self.feedback_contains):
            return False
        return True


def _contains_all(text: str, needles: str | tuple[str, ...] | None) -> bool:
    if needles is None:
        return True
    if isinstance(needles, str):
        needles = (needles,)
    return all(n in text for n in needles)


@dataclass(frozen=True)
class MockScript:
    """Ordered rules; the first match wins, then the default."""

    rules: tuple[MockRule, ...] = ()
    default: str | None = None

    def respond(self, kind: str, iteration: int, prompt: str, feedback: str) -> str:
        for rule in self.rules:
            if rule.matches(kind, iteration, prompt, feedback):
                return rule.response
        if self.default is not None:
            return self.default
        raise MockRuleMiss(
            f"no mock rule for kind={kind!r} iteration={iteration} and no default"
        )

    @classmethod
    def error_rate(cls, k: int, wrong: str, right: str, kind: str = "lvo") -> "MockScript":
        """Respond incorrectly until iteration k, then correctly."""
        return cls(
            rules=(MockRule(response=wrong, kind=kind, iteration_lt=k),),
            default=right,
        )

    @classmethod
    def from_json(cls, data: dict) -> "MockScript":
        rules = []
        for r in data.get("rules", []):
            rules.append(
                MockRule(
                    response=r["response"],
                    kind=r.get("kind"),
                    iteration=r.get("iteration"),
                    iteration_lt=r.get("iteration_lt"),
                    iteration_gte=r.get("iteration_gte"),
                    contains=_as_tuple(r.get("contains")),
                    feedback_contains=_as_tuple(r.get("feedback_contains")),
                )
            )
        return cls(rules=tuple(rules), default=data.get("default"))

    @classmethod
    def load(cls, path: str) -> "MockScript":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _as_tuple(v) -> str | tuple[str, ...] | None:
    if v is None or isinstance(v, str):
        return v
    return tuple(v)


@dataclass(frozen=True)
class HttpBackend:
    endpoint: str
    model: str
    auth_env: str = "LLM_API_KEY"


@dataclass
class LlmConfig:
    backend: Union[MockScript, HttpBackend]
    temperature: float = 0.0
    max_tokens: int = 1024
    retry_temperature: float = 0.1  # controlled variation for bare retries

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


class Gateway:
    """Shareable gateway; each call is independent and accounted."""

    def __init__(self, config: LlmConfig):
        self.config = config
        self.receipts: list[CallReceipt] = []

    @property
    def calls_made(self) -> int:
        return len(self.receipts)

    def complete(
        self,
        template: PromptTemplate,
        slots: dict[str, object],
        iteration: int = 0,
        temperature: float | None = None,
    ) -> tuple[str, CallReceipt]:
        system, user = template.render_messages(slots)
        started = time.monotonic()
        backend = self.config.backend
        if isinstance(backend, MockScript):
            text = backend.respond(
                kind=template.kind,
                iteration=iteration,
                prompt=system + "\n\n" + user,
                feedback=str(slots.get("update_feedback", "")),
            )
            receipt = CallReceipt("mock", time.monotonic() - started)
        else:
            text = self._http_complete(backend, system, user, temperature)
            receipt = CallReceipt(f"http:{backend.model}", time.monotonic() - started)
        self.receipts.append(receipt)
        return text, receipt

    def _http_complete(
        self, backend: HttpBackend, system: str, user: str, temperature: float | None
    ) -> str:
        import requests

        headers = {}
        token = os.environ.get(backend.auth_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        payload = {
            "model": backend.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.config.temperature if temperature is None else temperature,
            "max_tokens": self.config.max_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(TRANSPORT_RETRIES):
            try:
                resp = requests.post(
                    backend.endpoint, json=payload, headers=headers, timeout=120
                )
                if resp.status_code >= 500:
                    raise LlmError(f"server error {resp.status_code}")
                resp.raise_for_status()
                body = resp.json()
                return body["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - retried, then surfaced
                last_error = exc
                log.warning("LLM transport attempt %d failed: %s", attempt + 1, exc)
                time.sleep(0.5 * (2**attempt))
        raise LlmError(f"LLM request failed after {TRANSPORT_RETRIES} attempts: {last_error}")
