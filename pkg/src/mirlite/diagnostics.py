"""Diagnostics shared by the validator, the passes, and the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ir import Span


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[Span] = None
    function: Optional[str] = None

    def render(self, files: tuple = ()) -> str:
        loc = ""
        if self.span is not None:
            name = (
                files[self.span.file_id].name
                if 0 <= self.span.file_id < len(files)
                else f"file#{self.span.file_id}"
            )
            loc = f"{name}:{self.span.start_line}:{self.span.start_col}: "
        where = f" (in {self.function})" if self.function else ""
        return f"{loc}{self.code}: {self.message}{where}"
