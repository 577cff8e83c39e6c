"""Satisfiability checking of natural-language string requirements.

The pipeline generates per-requirement formal checkers (declarative SMT
string-theory expressions and imperative script functions) through a
pluggable LLM gateway, then runs a budget-bounded feedback loop that
validates LLM-proposed outcomes against those checkers.  It returns SAT
with a witness string, UNSAT, or a best-effort UNKNOWN when the budget
runs out.
"""

__version__ = "0.1.0"
