"""LLM gateway: templates, backends, structured-output parsing."""

from strsat.llm.gateway import (
    CallReceipt,
    Gateway,
    HttpBackend,
    LlmConfig,
    LlmError,
    MockRule,
    MockRuleMiss,
    MockScript,
)
from strsat.llm.parsing import (
    BatchParseError,
    LvoParseError,
    format_lvo_answer,
    parse_checker_batch,
    parse_lvo,
    script_function_name,
)
from strsat.llm.templates import PromptTemplate, TemplateError, load_template

__all__ = [
    "CallReceipt",
    "Gateway",
    "HttpBackend",
    "LlmConfig",
    "LlmError",
    "MockRule",
    "MockRuleMiss",
    "MockScript",
    "BatchParseError",
    "LvoParseError",
    "format_lvo_answer",
    "parse_checker_batch",
    "parse_lvo",
    "script_function_name",
    "PromptTemplate",
    "TemplateError",
    "load_template",
]
