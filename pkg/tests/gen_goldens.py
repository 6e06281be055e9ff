"""Regenerate the committed golden files.

Run from the repository root:  python3 tests/gen_goldens.py
Each golden was reviewed once when first committed; regeneration is for
intentional format changes only.
"""

from __future__ import annotations

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from helpers import GOLDEN_DIR, corpus_paths, load_corpus  # noqa: E402

from mirlite import ir, pretty_print  # noqa: E402
from mirlite.cfg import restructure_crate  # noqa: E402
from mirlite.passes import run_pipeline  # noqa: E402
from mirlite.serialize import to_json  # noqa: E402
from mirlite.traits import resolve_calls  # noqa: E402

TEXT_SNAPSHOTS = ("while_shape", "diamond", "multi_exit", "factorial")


def build_llbc(path):
    crate = load_corpus(path)
    crate, diags = run_pipeline(crate)
    assert not diags, (path, diags)
    crate, diags = resolve_calls(crate)
    assert not diags, (path, diags)
    llbc, diags = restructure_crate(crate)
    assert not diags, (path, diags)
    return llbc


def main() -> None:
    GOLDEN_DIR.mkdir(exist_ok=True)
    (GOLDEN_DIR / "json").mkdir(exist_ok=True)
    for path in corpus_paths():
        llbc = build_llbc(path)
        data = to_json(llbc, "llbc")
        (GOLDEN_DIR / "json" / f"{path.stem}.llbc.json").write_bytes(data)
        if any(name in path.name for name in TEXT_SNAPSHOTS):
            stem = next(name for name in TEXT_SNAPSHOTS if name in path.name)
            (GOLDEN_DIR / f"{stem}.llbc.txt").write_text(pretty_print(llbc))
    empty = ir.TranslatedCrate("empty", ())
    (GOLDEN_DIR / "empty.llbc.json").write_bytes(to_json(empty, "llbc"))
    (GOLDEN_DIR / "empty.ullbc.json").write_bytes(to_json(empty, "ullbc"))
    print(f"goldens written under {GOLDEN_DIR}")


if __name__ == "__main__":
    main()
