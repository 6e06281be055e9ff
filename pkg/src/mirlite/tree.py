"""Reflection helpers over the frozen-dataclass IR tree.

The whole IR is built from frozen dataclasses, tuples, enums, and primitives,
so structural rewrites and scans can be written once against that shape.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Iterator, Optional


def transform(node, f: Callable[[object], Optional[object]]):
    """Rebuild a tree bottom-up; ``f`` may replace any dataclass node.

    ``f`` is called on each (already rebuilt) dataclass instance and returns
    either a replacement or None to keep it. Unchanged subtrees are shared.
    """
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        changed = False
        kwargs = {}
        for field in dataclasses.fields(node):
            old = getattr(node, field.name)
            new = transform(old, f)
            kwargs[field.name] = new
            changed = changed or new is not old
        rebuilt = dataclasses.replace(node, **kwargs) if changed else node
        replacement = f(rebuilt)
        return rebuilt if replacement is None else replacement
    if isinstance(node, tuple):
        items = [transform(item, f) for item in node]
        if all(a is b for a, b in zip(items, node)):
            return node
        return tuple(items)
    return node


def iter_nodes(node) -> Iterator[object]:
    """Yield every dataclass node in the tree, depth-first, parents first."""
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        yield node
        for field in dataclasses.fields(node):
            yield from iter_nodes(getattr(node, field.name))
    elif isinstance(node, tuple):
        for item in node:
            yield from iter_nodes(item)
