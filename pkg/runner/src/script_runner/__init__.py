"""Sandboxed worker for imperative string-checker functions."""

from script_runner.worker import Registry, handle_line, main, serve

__all__ = ["Registry", "handle_line", "main", "serve"]
