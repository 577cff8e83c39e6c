"""Structured extraction from raw model text.

The canonical answer format is a final `ANSWER:` line holding either the
token UNSAT or a JSON-quoted string; checker batches arrive as fenced
code blocks, one per requirement.
"""

from __future__ import annotations

import json
import re

from strsat.core import Claim, SatDataClaim, UnsatClaim

_ANSWER_LINE = re.compile(r"^\s*ANSWER\s*:\s*(.*)$", re.IGNORECASE | re.MULTILINE)
_FENCED = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_QUOTED = re.compile(r'"(?:[^"\\]|\\.)*"')
_UNSAT_TOKEN = re.compile(r"\bUNSAT\b", re.IGNORECASE)
_DEF_NAME = re.compile(r"^\s*def\s+([A-Za-z_]\w*)\s*\(", re.MULTILINE)


class LvoParseError(Exception):
    """Unusable model output; carries the raw text for feedback."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class BatchParseError(Exception):
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


def format_lvo_answer(claim: Claim) -> str:
    """Canonical answer line; parse_lvo(format_lvo_answer(c)) == c."""
    if isinstance(claim, UnsatClaim):
        return "ANSWER: UNSAT"
    if isinstance(claim, SatDataClaim):
        return f"ANSWER: {json.dumps(claim.witness, ensure_ascii=False)}"
    raise ValueError("malformed claims have no canonical answer format")


def parse_lvo(raw: str) -> Claim:
    """Extract the UNSAT token or the quoted witness from an answer field.

    Raises LvoParseError when no answer field exists, the field is
    ambiguous (both UNSAT and a quoted string), or the quote is broken.
    """
    if not raw.strip():
        raise LvoParseError("empty model output", raw)
    answers = _ANSWER_LINE.findall(raw)
    if answers:
        field = answers[-1].strip()
    else:
        blocks = _FENCED.findall(raw)
        if len(blocks) == 1:
            field = blocks[0].strip()
        else:
            raise LvoParseError("no ANSWER field in model output", raw)
    quoted = _QUOTED.search(field)
    is_unsat = _UNSAT_TOKEN.search(field) is not None
    if is_unsat and quoted:
        raise LvoParseError("ambiguous answer: both UNSAT and a string value", raw)
    if is_unsat:
        return UnsatClaim()
    if quoted:
        try:
            return SatDataClaim(witness=json.loads(quoted.group(0)))
        except json.JSONDecodeError as exc:
            raise LvoParseError(f"unreadable quoted witness: {exc}", raw)
    raise LvoParseError("answer field holds neither UNSAT nor a quoted string", raw)


def parse_checker_batch(raw: str, expected: int, kind: str) -> list[str]:
    """Extract exactly `expected` checker texts, in requirement order."""
    if expected < 1:
        raise ValueError("expected must be >= 1")
    blocks = [b.strip() for b in _FENCED.findall(raw)]
    if not blocks:
        raise BatchParseError("no fenced checker blocks in model output", raw)
    if len(blocks) != expected:
        raise BatchParseError(f"expected {expected} checker block(s), got {len(blocks)}", raw)
    if kind == "script":
        for i, block in enumerate(blocks):
            if not _DEF_NAME.search(block):
                raise BatchParseError(
                    f"checker block {i + 1} holds no function definition", raw
                )
    return blocks


def script_function_name(source: str) -> str | None:
    m = _DEF_NAME.search(source)
    return m.group(1) if m else None
