"""Dominators, loop discovery, restructuring, and twin-interpreter equivalence."""

import random

import pytest

from helpers import (
    GOLDEN_DIR,
    brute_idoms,
    brute_natural_loops,
    corpus_paths,
    entry_functions,
    load_corpus,
    random_args,
    random_cfg_program,
    strip_spans,
)
from mirlite import ir, parse_crate, pretty_print, validate_crate
from mirlite.cfg import (
    RestructureError,
    check_llbc_structure,
    compute_dominators,
    contains_goto,
    find_loops,
    restructure,
    restructure_crate,
)
from mirlite.interp import interp_llbc, interp_ullbc
from mirlite.passes import run_pipeline
from mirlite.traits import resolve_calls


def parse(text):
    return parse_crate([("t.mirl", text)])


def body_of(text):
    return parse(text).fun_decls[0].body


# ---------------------------------------------------------------------------
# dominators


def test_dominators_straight_line():
    body = body_of("""
fn f() -> u32 {
  bb0: { goto bb1; }
  bb1: { goto bb2; }
  bb2: { ret = use const 1: u32; return; }
}
""")
    idoms = compute_dominators(body)
    assert idoms[1] == 0
    assert idoms[2] == 1


def test_dominators_diamond():
    body = body_of("""
fn f(c: bool) -> u32 {
  bb0: { switch copy c { 0 -> bb2, otherwise -> bb1 }; }
  bb1: { goto bb3; }
  bb2: { goto bb3; }
  bb3: { ret = use const 1: u32; return; }
}
""")
    assert compute_dominators(body)[3] == 0


def test_dominators_match_brute_force():
    rng = random.Random(4040)
    for _ in range(60):
        crate = random_cfg_program(rng, max_blocks=12)
        from mirlite.passes import prune_unreachable

        body = prune_unreachable(crate.fun_decls[0].body)
        assert compute_dominators(body) == brute_idoms(body)


# ---------------------------------------------------------------------------
# loops


def test_self_loop():
    body = body_of("""
fn f(c: bool) -> u32 {
  bb0: { switch copy c { 0 -> bb1, otherwise -> bb0 }; }
  bb1: { ret = use const 1: u32; return; }
}
""")
    loops = find_loops(body, compute_dominators(body))
    assert [(l.header, set(l.blocks)) for l in loops] == [(0, {0})]


def test_nested_loops_by_inclusion():
    body = body_of("""
fn f(c: bool) -> u32 {
  bb0: { goto bb1; }
  bb1: { switch copy c { 0 -> bb4, otherwise -> bb2 }; }
  bb2: { switch copy c { 0 -> bb3, otherwise -> bb2 }; }
  bb3: { goto bb1; }
  bb4: { ret = use const 1: u32; return; }
}
""")
    loops = find_loops(body, compute_dominators(body))
    by_header = {l.header: l for l in loops}
    assert set(by_header) == {1, 2}
    assert by_header[2].blocks < by_header[1].blocks
    assert by_header[2].parent == 1


def test_loops_match_brute_force():
    rng = random.Random(4100)
    for _ in range(60):
        crate = random_cfg_program(rng, max_blocks=12)
        from mirlite.passes import prune_unreachable

        body = prune_unreachable(crate.fun_decls[0].body)
        idoms = compute_dominators(body)
        loops = {l.header: set(l.blocks) for l in find_loops(body, idoms)}
        assert loops == brute_natural_loops(body)


def test_irreducible_cfg_rejected():
    crate = parse("""
fn f(c: bool) -> u32 {
  bb0: { switch copy c { 0 -> bb1, otherwise -> bb2 }; }
  bb1: { goto bb2; }
  bb2: { goto bb1; }
}
""")
    with pytest.raises(RestructureError) as exc:
        restructure(crate.fun_decls[0].body, crate)
    assert exc.value.code == "irreducible-cfg"
    # whole-crate version degrades to an opaque body plus a diagnostic
    out, diags = restructure_crate(crate)
    assert out.fun_decls[0].body is None
    assert [d.code for d in diags] == ["irreducible-cfg"]


# ---------------------------------------------------------------------------
# restructuring shapes


def test_while_shape_matches_golden():
    crate = load_corpus([p for p in corpus_paths() if "while_shape" in p.name][0])
    crate, _ = run_pipeline(crate)
    llbc, diags = restructure_crate(crate)
    assert diags == []
    rendered = pretty_print(llbc)
    golden = (GOLDEN_DIR / "while_shape.llbc.txt").read_text()
    assert rendered == golden
    # and the top of the body is Loop { If { then: ...Continue, else: Break } }
    body = llbc.fun_decls[0].body
    loop_stmt = body.body.statements[0]
    assert isinstance(loop_stmt.kind, ir.SLoop)
    cond = loop_stmt.kind.body.statements[-1]
    assert isinstance(cond.kind, ir.SSwitch)
    sw = cond.kind.switch
    assert isinstance(sw, ir.SwIf)
    assert isinstance(sw.then_block.statements[-1].kind, ir.SContinue)
    assert sw.then_block.statements[-1].kind.depth == 0
    assert isinstance(sw.else_block.statements[-1].kind, ir.SBreak)
    assert sw.else_block.statements[-1].kind.depth == 0


def test_diamond_becomes_if_with_joined_tail():
    crate = load_corpus([p for p in corpus_paths() if "diamond" in p.name][0])
    crate, _ = run_pipeline(crate)
    llbc, _ = restructure_crate(crate)
    body = llbc.fun_decls[0].body
    kinds = [type(s.kind).__name__ for s in body.body.statements]
    assert kinds == ["SSwitch", "SAssign", "SReturn"]
    assert not any(isinstance(s.kind, ir.SLoop) for s in body.body.statements)


def test_restructure_deterministic():
    crate = load_corpus([p for p in corpus_paths() if "multi_exit" in p.name][0])
    crate, _ = run_pipeline(crate)
    a, _ = restructure_crate(crate)
    b, _ = restructure_crate(crate)
    assert a == b


def test_no_gotos_and_structure_valid_on_corpus():
    for path in corpus_paths():
        crate = load_corpus(path)
        crate, _ = run_pipeline(crate)
        crate, _ = resolve_calls(crate)
        llbc, diags = restructure_crate(crate)
        assert diags == [], path
        for decl in llbc.fun_decls:
            if isinstance(decl.body, ir.LlbcBody):
                assert not contains_goto(decl.body), (path, decl.meta.name_str)
                assert check_llbc_structure(decl.body) == [], (path, decl.meta.name_str)


def test_duplication_cap_bounds_output():
    rng = random.Random(4300)
    for _ in range(80):
        crate = random_cfg_program(rng)
        body = crate.fun_decls[0].body
        try:
            llbc = restructure(body, crate)
        except RestructureError as exc:
            assert exc.code in ("multi-exit-unsupported", "irreducible-cfg")
            continue
        # count emitted statements originating from blocks: the emitter
        # asserts <= 4x internally; spot-check the structural invariants too
        assert check_llbc_structure(llbc) == []


# ---------------------------------------------------------------------------
# golden snapshots of structured output


@pytest.mark.parametrize("name", ["while_shape", "diamond", "multi_exit", "factorial"])
def test_llbc_golden_snapshots(name):
    path = [p for p in corpus_paths() if name in p.name][0]
    crate = load_corpus(path)
    crate, _ = run_pipeline(crate)
    crate, _ = resolve_calls(crate)
    llbc, _ = restructure_crate(crate)
    rendered = pretty_print(llbc)
    golden = (GOLDEN_DIR / f"{name}.llbc.txt").read_text()
    assert rendered == golden


# ---------------------------------------------------------------------------
# twin interpreters


def test_interp_const_seven():
    crate = load_corpus([p for p in corpus_paths() if "const_seven" in p.name][0])
    crate, _ = run_pipeline(crate)
    out = interp_ullbc(crate, "seven", [])
    assert out.value == ("int", "u32", 7)
    llbc, _ = restructure_crate(crate)
    assert interp_llbc(llbc, "seven", []) == out


def test_interp_checked_overflow_panics():
    crate = load_corpus([p for p in corpus_paths() if "checked_add" in p.name][0])
    crate, _ = run_pipeline(crate)
    args = [ir.const_int(255, ir.ScalarKind.U8), ir.const_int(1, ir.ScalarKind.U8)]
    out = interp_ullbc(crate, "checked_add_u8", args)
    assert out == __import__("mirlite.interp", fromlist=["Aborted"]).Aborted(ir.AbortKind.PANIC)
    llbc, _ = restructure_crate(crate)
    assert interp_llbc(llbc, "checked_add_u8", args) == out


def test_interp_factorial_five():
    crate = load_corpus([p for p in corpus_paths() if "factorial" in p.name][0])
    crate, _ = run_pipeline(crate)
    llbc, _ = restructure_crate(crate)
    args = [ir.const_int(5, ir.ScalarKind.U32)]
    before = interp_ullbc(crate, "factorial", args)
    after = interp_llbc(llbc, "factorial", args)
    assert before == after
    assert before.value == ("int", "u32", 120)


def _twin_check(crate, llbc, rng, trials=20, fuel=300_000):
    for name in entry_functions(crate):
        sig = crate.fun_by_name(name).signature
        for _ in range(trials):
            args = random_args(sig, rng)
            before = interp_ullbc(crate, name, args, fuel)
            after = interp_llbc(llbc, name, args, fuel)
            assert before == after, (name, args, before, after)


@pytest.mark.parametrize("path", corpus_paths(), ids=lambda p: p.stem)
def test_twins_agree_on_corpus(path):
    crate = load_corpus(path)
    crate, _ = run_pipeline(crate)
    crate, _ = resolve_calls(crate)
    llbc, diags = restructure_crate(crate)
    assert diags == []
    _twin_check(crate, llbc, random.Random(99), trials=20)


def test_twins_agree_on_generated_programs():
    rng = random.Random(616)
    arg_rng = random.Random(617)
    count = 0
    while count < 200:
        crate = random_cfg_program(rng, max_blocks=12)
        crate, diags = run_pipeline(crate)
        assert diags == []
        llbc, diags = restructure_crate(crate)
        if diags:
            # The duplication cap occasionally trips; that robustness path is
            # covered by test_duplication_cap_bounds_output.
            assert all(d.code == "multi-exit-unsupported" for d in diags)
            continue
        count += 1
        _twin_check(crate, llbc, arg_rng, trials=10, fuel=100_000)
