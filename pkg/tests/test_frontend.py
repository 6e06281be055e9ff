"""Parsing, error reporting, and the parse-print-parse fixpoint."""

import random

import pytest

from helpers import corpus_paths, load_corpus, random_program, strip_spans
from mirlite import ParseError, ir, parse_crate, pretty_print, validate_crate


def test_minimal_generic_function():
    crate = parse_crate([("t.mirl", """
fn id<T>(x: T) -> T {
  bb0: {
    ret = use move x;
    return;
  }
}
""")])
    assert len(crate.fun_decls) == 1
    decl = crate.fun_decls[0]
    assert decl.meta.name_str == "id"
    assert decl.signature.generics.types == ("T",)
    assert isinstance(decl.body, ir.UllbcBody)
    assert len(decl.body.locals) == 2  # return slot + x
    assert decl.body.locals[0].name == "ret"


def test_unknown_block_is_reported_with_code():
    with pytest.raises(ParseError) as exc:
        parse_crate([("t.mirl", """
fn f() -> u32 {
  bb0: {
    goto bb9;
  }
}
""")])
    assert exc.value.code == "unknown-block"


def test_duplicate_name():
    with pytest.raises(ParseError) as exc:
        parse_crate([("t.mirl", "fn f() -> u32; fn f() -> u32;")])
    assert exc.value.code == "duplicate-name"


def test_unknown_name():
    with pytest.raises(ParseError) as exc:
        parse_crate([("t.mirl", """
fn f() -> u32 {
  bb0: {
    ret = call missing() -> bb1;
  }
  bb1: { return; }
}
""")])
    assert exc.value.code == "unknown-name"


def test_arity_error():
    with pytest.raises(ParseError) as exc:
        parse_crate([("t.mirl", """
type Pair<A, B> = struct { A, B }
fn f(x: Pair<u32>) -> u32 {
  bb0: { return; }
}
""")])
    assert exc.value.code == "arity"


def test_syntax_error_carries_expected_set():
    with pytest.raises(ParseError) as exc:
        parse_crate([("t.mirl", "fn f() -> u32 { bb0: { ret = ; } }")])
    assert exc.value.code == "syntax"
    assert exc.value.expected


def test_opaque_attribute_drops_body():
    crate = parse_crate([("t.mirl", """
#[charon::opaque]
fn mystery() -> u32;
""")])
    assert crate.fun_decls[0].body is None
    assert "charon::opaque" in crate.fun_decls[0].meta.attributes


def test_comments_attach_to_next_statement():
    crate = parse_crate([("t.mirl", """
fn f() -> u32 {
  bb0: {
    // the answer
    // really
    ret = use const 42: u32;
    return;
  }
}
""")])
    stmt = crate.fun_decls[0].body.blocks[0].statements[0]
    assert stmt.comments == ("the answer", "really")


def test_secret_param_attr_becomes_item_attr():
    crate = parse_crate([("t.mirl", """
fn f(#[secret] key: u32) -> u32 {
  bb0: { ret = use copy key; return; }
}
""")])
    assert "secret::key" in crate.fun_decls[0].meta.attributes


def test_empty_crate_prints_empty():
    crate = ir.TranslatedCrate("empty", ())
    assert pretty_print(crate) == ""


def test_pretty_print_deterministic():
    crate = load_corpus(corpus_paths()[0])
    assert pretty_print(crate) == pretty_print(crate)


def test_spans_lie_within_function_span():
    for path in corpus_paths():
        crate = load_corpus(path)
        for decl in crate.fun_decls:
            if not isinstance(decl.body, ir.UllbcBody):
                continue
            for block in decl.body.blocks:
                for stmt in block.statements:
                    assert decl.meta.span.covers(stmt.span), (path, decl.meta.name_str)
                assert decl.meta.span.covers(block.terminator.span)


@pytest.mark.parametrize("path", corpus_paths(), ids=lambda p: p.stem)
def test_corpus_round_trips(path):
    crate = load_corpus(path)
    text = pretty_print(crate)
    reparsed = parse_crate([(crate.files[0].name, text)])
    assert strip_spans(reparsed) == strip_spans(crate)


def test_generated_programs_round_trip():
    rng = random.Random(2024)
    for _ in range(30):
        crate = random_program(rng, with_patterns=True)
        assert validate_crate(crate) == []
        text = pretty_print(crate)
        reparsed = parse_crate([("<generated>", text)], crate_name="generated")
        assert strip_spans(reparsed) == strip_spans(crate)
        # fixpoint: printing the reparsed crate gives the same text
        assert pretty_print(reparsed) == text
