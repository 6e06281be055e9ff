"""End-to-end driver: parse, clean up, resolve traits, restructure, serialize,
and optionally run the taint checker.

Exit codes: 0 clean, 1 diagnostics were emitted but output was produced,
2 fatal (bad usage, unreadable input, parse failure). Behavior depends only
on arguments, never on environment variables.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import ir
from .cfg import restructure_crate
from .diagnostics import Diagnostic
from .frontend import ParseError, parse_crate
from .interp import DEFAULT_FUEL, InterpError, interp_llbc, interp_ullbc, value_of_constant
from .passes import DEFAULT_PANIC_FNS, PASS_NAMES, PassConfig, run_pipeline
from .printer import pretty_print
from .serialize import to_json
from .taint import AnalysisConfig, analyze_crate, render_json, render_text
from .traits import resolve_calls
from .validate import validate_crate

LLBC_SUFFIX = ".llbc.json"
ULLBC_SUFFIX = ".ullbc.json"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charon-lite",
        description="Translate MIR-lite sources into (U)LLBC JSON crates.",
    )
    parser.add_argument("inputs", nargs="+", metavar="FILE.mirl")
    parser.add_argument("-o", "--output", help="output path (suffix appended if missing)")
    parser.add_argument("--ullbc", action="store_true", help="emit the CFG form instead of LLBC")
    parser.add_argument(
        "--no-pass",
        action="append",
        default=[],
        choices=PASS_NAMES,
        metavar="PASS",
        help=f"disable one pass ({', '.join(PASS_NAMES)}); repeatable",
    )
    parser.add_argument("--print", dest="print_ir", action="store_true",
                        help="pretty-print the final IR to stdout")
    parser.add_argument("--analyze", choices=["taint"], help="run an analysis on the LLBC result")
    parser.add_argument("--format", choices=["text", "json"], default="text",
                        help="analysis report format")
    parser.add_argument("--lenient", action="store_true",
                        help="tolerate unknown fields when reading JSON")
    parser.add_argument(
        "--panic-fn", action="append", default=[], metavar="PATH",
        help="extra function path treated as a panic entry point; repeatable",
    )
    parser.add_argument("--fuel", type=int, default=DEFAULT_FUEL,
                        help="step budget for interpreter-backed subcommands")
    return parser


def build_interp_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charon-lite interp",
        description="Run both oracle interpreters on one function.",
    )
    parser.add_argument("inputs", nargs="+", metavar="FILE.mirl")
    parser.add_argument("function", metavar="FN")
    parser.add_argument("args", nargs="*", metavar="ARG",
                        help="scalar arguments, e.g. 42:u32 or true")
    parser.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    parser.add_argument("--no-pass", action="append", default=[], choices=PASS_NAMES)
    parser.add_argument("--panic-fn", action="append", default=[])
    return parser


def _config(args) -> PassConfig:
    config = PassConfig(panic_fns=DEFAULT_PANIC_FNS + tuple(args.panic_fn))
    for name in args.no_pass:
        config = config.disable(name)
    return config


def _read_sources(paths: list[str]) -> list[tuple[str, str]]:
    sources = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as handle:
            sources.append((path, handle.read()))
    return sources


def _report_diags(diags: list[Diagnostic], files) -> None:
    for diag in diags:
        print(diag.render(files), file=sys.stderr)


def run(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "interp":
        return run_interp(argv[1:])
    args = build_parser().parse_args(argv)
    try:
        sources = _read_sources(args.inputs)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        crate = parse_crate(sources)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    diags = validate_crate(crate)
    crate, pipeline_diags = run_pipeline(crate, _config(args))
    diags += pipeline_diags
    crate, resolve_diags = resolve_calls(crate)
    diags += resolve_diags

    llbc_crate = None
    if not args.ullbc or args.analyze:
        llbc_crate, cfg_diags = restructure_crate(crate)
        diags += cfg_diags

    out_path = args.output or args.inputs[0].removesuffix(".mirl")
    suffix = ULLBC_SUFFIX if args.ullbc else LLBC_SUFFIX
    if not out_path.endswith(suffix):
        out_path += suffix
    final = crate if args.ullbc else llbc_crate
    assert final is not None
    try:
        data = to_json(final, "ullbc" if args.ullbc else "llbc")
        with open(out_path, "wb") as handle:
            handle.write(data)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.print_ir:
        sys.stdout.write(pretty_print(final))

    violations = 0
    if args.analyze == "taint":
        assert llbc_crate is not None
        report = analyze_crate(llbc_crate, AnalysisConfig())
        violations = len(report.violations)
        render = render_json if args.format == "json" else render_text
        sys.stdout.write(render(report, llbc_crate.files))

    _report_diags(diags, crate.files)
    return 1 if (diags or violations) else 0


def parse_scalar_arg(text: str) -> ir.ConstantValue:
    if text == "true":
        return ir.const_bool(True)
    if text == "false":
        return ir.const_bool(False)
    if ":" in text:
        value_text, kind_text = text.rsplit(":", 1)
        kind = ir.SCALAR_BY_NAME.get(kind_text.strip())
        if kind is None:
            raise ValueError(f"unknown scalar kind in {text!r}")
        return ir.const_int(int(value_text.strip(), 0), kind)
    raise ValueError(f"argument {text!r} needs a kind, e.g. 42:u32")


def run_interp(argv: list[str]) -> int:
    args = build_interp_parser().parse_args(argv)
    try:
        sources = _read_sources(args.inputs)
        crate = parse_crate(sources)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = _config(args)
    crate, _ = run_pipeline(crate, config)
    crate, _ = resolve_calls(crate)
    try:
        values = [parse_scalar_arg(a) for a in args.args]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    llbc_crate, cfg_diags = restructure_crate(crate)
    _report_diags(cfg_diags, crate.files)
    try:
        before = interp_ullbc(crate, args.function, values, args.fuel, config.panic_fns)
        print(f"cfg:        {before}")
    except InterpError as exc:
        print(f"cfg:        interpreter error: {exc}")
        before = None
    try:
        after = interp_llbc(llbc_crate, args.function, values, args.fuel, config.panic_fns)
        print(f"structured: {after}")
    except InterpError as exc:
        print(f"structured: interpreter error: {exc}")
        after = None
    if before is not None and after is not None:
        print(f"agree:      {before == after}")
    return 0


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
