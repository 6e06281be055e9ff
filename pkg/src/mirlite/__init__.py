"""MIR-lite middle-end toolkit.

Pipeline: parse `.mirl` sources into a CFG-form crate, run the cleanup
passes, resolve trait-method calls into explicit derivations, restructure
control flow into a loop/branch AST, serialize to versioned JSON, and
optionally run the constant-time taint checker over the result.
"""

from . import ir
from .diagnostics import Diagnostic
from .frontend import ParseError, parse_crate
from .printer import pretty_print
from .validate import validate_crate

__all__ = [
    "Diagnostic",
    "ParseError",
    "ir",
    "parse_crate",
    "pretty_print",
    "validate_crate",
]

__version__ = "0.1.0"
