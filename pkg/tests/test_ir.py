"""Substitution engine and crate validation."""

import random

import pytest

from helpers import corpus_paths, load_corpus, naive_substitute, random_ty
from mirlite import ir, validate_crate
from mirlite.cfg import restructure_crate
from mirlite.passes import run_pipeline
from mirlite.traits import resolve_calls

U32 = ir.TyScalar(ir.ScalarKind.U32)


def test_substitute_direct_lookup():
    args = ir.GenericArgs(types=(U32,))
    assert ir.substitute(ir.TyVar(0), args) == U32


def test_substitute_congruence():
    vec = ir.TyAdt(7, ir.GenericArgs(types=(ir.TyVar(0),)))
    out = ir.substitute(vec, ir.GenericArgs(types=(ir.BOOL,)))
    assert out == ir.TyAdt(7, ir.GenericArgs(types=(ir.BOOL,)))


def test_substitute_routes_clause_refs():
    assoc = ir.TyAssoc(ir.ClauseRef(1), "Item")
    args = ir.GenericArgs(
        types=(U32,), trait_refs=(ir.ClauseRef(9), ir.TraitImplRef(3, ir.EMPTY_ARGS))
    )
    assert ir.substitute(assoc, args) == ir.TyAssoc(ir.TraitImplRef(3, ir.EMPTY_ARGS), "Item")


def test_substitute_arity_error_names_binder():
    with pytest.raises(ir.ArityMismatch) as exc:
        ir.substitute(ir.TyVar(2), ir.GenericArgs(types=(U32,)))
    assert exc.value.expected == 3
    assert exc.value.actual == 1


def test_substitute_matches_naive_rewriter():
    rng = random.Random(1001)
    for _ in range(300):
        n_vars = rng.randint(1, 4)
        ty = random_ty(rng, n_vars)
        args = ir.GenericArgs(
            types=tuple(random_ty(rng, 0, depth=2) for _ in range(n_vars)),
            trait_refs=tuple(ir.TraitImplRef(i, ir.EMPTY_ARGS) for i in range(n_vars)),
        )
        assert ir.substitute(ty, args) == naive_substitute(ty, args)


def test_substitute_composes():
    rng = random.Random(1002)
    for _ in range(200):
        n_vars = rng.randint(1, 3)
        ty = random_ty(rng, n_vars)
        mid = ir.GenericArgs(
            types=tuple(random_ty(rng, 2, depth=2) for _ in range(n_vars)),
            trait_refs=tuple(ir.ClauseRef(i % 2) for i in range(n_vars)),
        )
        last = ir.GenericArgs(
            types=tuple(random_ty(rng, 0, depth=1) for _ in range(2)),
            trait_refs=(ir.TraitImplRef(0, ir.EMPTY_ARGS), ir.TraitImplRef(1, ir.EMPTY_ARGS)),
        )
        two_step = ir.substitute(ir.substitute(ty, mid), last)
        one_step = ir.substitute(ty, ir.compose(mid, last))
        assert two_step == one_step


def test_validate_empty_crate():
    crate = ir.TranslatedCrate("empty", ())
    assert validate_crate(crate) == []


def test_validate_reports_dangling_fun_id():
    span = ir.dummy_span()
    body = ir.UllbcBody(
        (ir.Local("ret", U32),),
        0,
        (
            ir.BasicBlock(
                (),
                ir.Terminator(
                    span,
                    ir.TCall(
                        ir.Call(
                            ir.FnOpRegular(ir.FnPtr(ir.FnFun(99))), (), ir.Place(0)
                        ),
                        target=0,
                    ),
                ),
            ),
        ),
    )
    crate = ir.TranslatedCrate(
        "bad",
        (ir.FileRecord("<t>"),),
        fun_decls=(
            ir.FunDecl(0, ir.ItemMeta(("f",), span), ir.FunSig(ir.GenericParams(), (), U32), body),
        ),
    )
    codes = {d.code for d in validate_crate(crate)}
    assert "unresolved-id" in codes


def test_validate_scalar_range():
    bad = ir.ConstantValue(ir.TyScalar(ir.ScalarKind.U8), ir.CScalar(300))
    span = ir.dummy_span()
    body = ir.UllbcBody(
        (ir.Local("ret", ir.TyScalar(ir.ScalarKind.U8)),),
        0,
        (
            ir.BasicBlock(
                (ir.Statement(span, ir.SAssign(ir.Place(0), ir.RvUse(ir.OpConst(bad)))),),
                ir.Terminator(span, ir.TReturn()),
            ),
        ),
    )
    crate = ir.TranslatedCrate(
        "bad",
        (ir.FileRecord("<t>"),),
        fun_decls=(
            ir.FunDecl(
                0, ir.ItemMeta(("f",), span),
                ir.FunSig(ir.GenericParams(), (), ir.TyScalar(ir.ScalarKind.U8)), body,
            ),
        ),
    )
    assert any(d.code == "scalar-range" for d in validate_crate(crate))


@pytest.mark.parametrize("path", corpus_paths(), ids=lambda p: p.stem)
def test_corpus_validates_clean_through_pipeline(path):
    crate = load_corpus(path)
    assert validate_crate(crate) == []
    crate, diags = run_pipeline(crate)
    assert diags == []
    assert validate_crate(crate) == []
    crate, diags = resolve_calls(crate)
    assert diags == []
    assert validate_crate(crate) == []
    crate, diags = restructure_crate(crate)
    assert diags == []
    assert validate_crate(crate) == []
