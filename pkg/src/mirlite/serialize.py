"""Versioned, byte-stable JSON encoding of crates.

Layout rules (documented bit-exactly in ``docs/schema.md``):

- structs encode as objects with keys in field declaration order;
- sum types encode as single-key objects ``{"Variant": payload}``, unit
  variants as the bare string ``"Variant"``;
- ID-indexed tables encode as arrays;
- integers that may exceed 53 bits (constant scalars, switch case values,
  enum discriminants) encode as decimal strings; ids and counts stay JSON
  numbers; no floating point appears anywhere;
- optional values encode as ``null`` or the payload; raw bytes as lowercase
  hex.

``from_json`` is strict: unknown or missing object keys are schema
violations (reported with their JSON path) unless lenient mode is on.
"""

from __future__ import annotations

import json
from typing import Callable, Optional

from . import ir

FORMAT_VERSION = "1"


class SerializeError(Exception):
    def __init__(self, code: str, message: str, path: str = "$"):
        super().__init__(f"{code} at {path}: {message}")
        self.code = code
        self.reason = message
        self.path = path


# ---------------------------------------------------------------------------
# Encoding


def _enc_span(s: ir.Span) -> dict:
    return {
        "file_id": s.file_id,
        "start_line": s.start_line,
        "start_col": s.start_col,
        "end_line": s.end_line,
        "end_col": s.end_col,
    }


def _enc_meta(m: ir.ItemMeta) -> dict:
    return {"name": list(m.name), "span": _enc_span(m.span), "attributes": list(m.attributes)}


def _enc_ty(t: ir.Ty):
    if isinstance(t, ir.TyScalar):
        return {"Scalar": t.kind.value}
    if isinstance(t, ir.TyBool):
        return "Bool"
    if isinstance(t, ir.TyAdt):
        return {"Adt": {"decl_id": t.decl_id, "args": _enc_args(t.args)}}
    if isinstance(t, ir.TyVar):
        return {"TypeVar": t.index}
    if isinstance(t, ir.TyRef):
        return {"Ref": {"region": t.region, "inner": _enc_ty(t.inner), "mutable": t.mutable}}
    if isinstance(t, ir.TyTuple):
        return {"Tuple": [_enc_ty(i) for i in t.items]}
    if isinstance(t, ir.TyAssoc):
        return {"AssocType": {"base": _enc_trait_ref(t.base), "item": t.item}}
    raise TypeError(f"not a type: {t!r}")


def _enc_trait_ref(r: ir.TraitRefKind):
    if isinstance(r, ir.TraitImplRef):
        return {"TraitImpl": {"impl_id": r.impl_id, "args": _enc_args(r.args)}}
    if isinstance(r, ir.ClauseRef):
        return {"Clause": r.clause_id}
    if isinstance(r, ir.ParentClauseRef):
        return {"ParentClause": {"base": _enc_trait_ref(r.base), "index": r.index}}
    if isinstance(r, ir.ItemClauseRef):
        return {"ItemClause": {"base": _enc_trait_ref(r.base), "item": r.item, "index": r.index}}
    if isinstance(r, ir.SelfRef):
        return "SelfRef"
    raise TypeError(f"not a trait ref: {r!r}")


def _enc_args(a: ir.GenericArgs) -> dict:
    return {
        "regions": list(a.regions),
        "types": [_enc_ty(t) for t in a.types],
        "const_generics": [_enc_const(c) for c in a.const_generics],
        "trait_refs": [_enc_trait_ref(r) for r in a.trait_refs],
    }


def _enc_clause(c: ir.TraitClause) -> dict:
    return {"clause_id": c.clause_id, "trait_decl_id": c.trait_decl_id, "args": _enc_args(c.args)}


def _enc_params(p: ir.GenericParams) -> dict:
    return {
        "regions": list(p.regions),
        "types": list(p.types),
        "const_generics": [{"name": c.name, "kind": c.kind.value} for c in p.const_generics],
        "trait_clauses": [_enc_clause(c) for c in p.trait_clauses],
        "regions_outlive": [[a, b] for a, b in p.regions_outlive],
        "types_outlive": [[_enc_ty(t), r] for t, r in p.types_outlive],
        "trait_type_constraints": [
            {"trait_ref": _enc_trait_ref(c.trait_ref), "item": c.item, "ty": _enc_ty(c.ty)}
            for c in p.trait_type_constraints
        ],
    }


def _enc_const(c: ir.ConstantValue) -> dict:
    kind = c.kind
    if isinstance(kind, ir.CScalar):
        body = {"Scalar": str(kind.value)}
    elif isinstance(kind, ir.CBool):
        body = {"Bool": kind.value}
    elif isinstance(kind, ir.CAdt):
        body = {
            "Adt": {
                "variant": kind.variant,
                "fields": [_enc_const(f) for f in kind.fields],
            }
        }
    elif isinstance(kind, ir.CRaw):
        body = {"Raw": kind.data.hex()}
    else:
        raise TypeError(f"not a constant kind: {kind!r}")
    return {"ty": _enc_ty(c.ty), "kind": body}


def _enc_place(p: ir.Place) -> dict:
    projs = []
    for proj in p.projections:
        if isinstance(proj, ir.ProjField):
            projs.append({"Field": proj.index})
        elif isinstance(proj, ir.ProjDowncast):
            projs.append({"Downcast": proj.variant})
        elif isinstance(proj, ir.ProjIndex):
            projs.append({"Index": _enc_operand(proj.offset)})
        else:
            projs.append("Deref")
    return {"local": p.local, "projections": projs}


def _enc_operand(o: ir.Operand):
    if isinstance(o, ir.OpMove):
        return {"Move": _enc_place(o.place)}
    if isinstance(o, ir.OpCopy):
        return {"Copy": _enc_place(o.place)}
    return {"Const": _enc_const(o.value)}


_BINOP_NAMES = {op: "".join(p.capitalize() for p in op.value.split("_")) for op in ir.BinOp}
_BINOP_BY_NAME = {v: k for k, v in _BINOP_NAMES.items()}
_UNOP_NAMES = {ir.UnOp.NEG: "Neg", ir.UnOp.NOT: "Not"}
_UNOP_BY_NAME = {v: k for k, v in _UNOP_NAMES.items()}


def _enc_rvalue(rv: ir.Rvalue):
    if isinstance(rv, ir.RvUse):
        return {"Use": _enc_operand(rv.operand)}
    if isinstance(rv, ir.RvBinOp):
        return {
            "BinOp": {
                "op": _BINOP_NAMES[rv.op],
                "lhs": _enc_operand(rv.lhs),
                "rhs": _enc_operand(rv.rhs),
            }
        }
    if isinstance(rv, ir.RvUnOp):
        return {"UnOp": {"op": _UNOP_NAMES[rv.op], "operand": _enc_operand(rv.operand)}}
    if isinstance(rv, ir.RvDiscriminant):
        return {"Discriminant": _enc_place(rv.place)}
    if isinstance(rv, ir.RvAggregate):
        return {
            "Aggregate": {
                "decl_id": rv.decl_id,
                "variant": rv.variant,
                "operands": [_enc_operand(o) for o in rv.operands],
            }
        }
    if isinstance(rv, ir.RvRef):
        return {"Ref": {"place": _enc_place(rv.place), "mutable": rv.mutable}}
    raise TypeError(f"not an rvalue: {rv!r}")


def _enc_fn_ptr(p: ir.FnPtr) -> dict:
    func = p.func
    if isinstance(func, ir.FnFun):
        kind = {"Fun": func.fun_decl_id}
    elif isinstance(func, ir.FnTraitMethod):
        kind = {
            "TraitMethod": {
                "trait_ref": _enc_trait_ref(func.trait_ref),
                "method": func.method,
            }
        }
    else:
        kind = {
            "UnresolvedTraitMethod": {
                "trait_decl_id": func.trait_decl_id,
                "method": func.method,
            }
        }
    return {"func": kind, "generics": _enc_args(p.generics)}


def _enc_call(c: ir.Call) -> dict:
    if isinstance(c.func, ir.FnOpRegular):
        func = {"Regular": _enc_fn_ptr(c.func.ptr)}
    else:
        func = {"Move": _enc_place(c.func.place)}
    return {
        "func": func,
        "args": [_enc_operand(a) for a in c.args],
        "dest": _enc_place(c.dest),
    }


def _enc_statement(s: ir.Statement) -> dict:
    return {
        "span": _enc_span(s.span),
        "kind": _enc_statement_kind(s.kind),
        "comments": list(s.comments),
        "attributes": list(s.attributes),
    }


def _enc_statement_kind(k: ir.StatementKind):
    if isinstance(k, ir.SAssign):
        return {"Assign": {"place": _enc_place(k.place), "rvalue": _enc_rvalue(k.rvalue)}}
    if isinstance(k, ir.SDrop):
        return {"Drop": _enc_place(k.place)}
    if isinstance(k, ir.SNop):
        return "Nop"
    if isinstance(k, ir.SCall):
        return {"Call": _enc_call(k.call)}
    if isinstance(k, ir.SAbort):
        return {"Abort": _abort_name(k.kind)}
    if isinstance(k, ir.SReturn):
        return "Return"
    if isinstance(k, ir.SBreak):
        return {"Break": k.depth}
    if isinstance(k, ir.SContinue):
        return {"Continue": k.depth}
    if isinstance(k, ir.SLoop):
        return {"Loop": _enc_block(k.body)}
    if isinstance(k, ir.SSwitch):
        return {"Switch": _enc_switch(k.switch)}
    raise TypeError(f"not a statement kind: {k!r}")


def _abort_name(k: ir.AbortKind) -> str:
    return "Panic" if k is ir.AbortKind.PANIC else "UndefinedBehavior"


def _enc_switch(sw: ir.Switch):
    if isinstance(sw, ir.SwIf):
        return {
            "If": {
                "condition": _enc_operand(sw.condition),
                "then_block": _enc_block(sw.then_block),
                "else_block": _enc_block(sw.else_block),
            }
        }
    if isinstance(sw, ir.SwInt):
        return {
            "SwitchInt": {
                "scrutinee": _enc_operand(sw.scrutinee),
                "arms": [[str(v), _enc_block(b)] for v, b in sw.arms],
                "otherwise": _enc_block(sw.otherwise),
            }
        }
    return {
        "Match": {
            "scrutinee": _enc_place(sw.scrutinee),
            "arms": [[v, _enc_block(b)] for v, b in sw.arms],
            "otherwise": _enc_block(sw.otherwise) if sw.otherwise is not None else None,
        }
    }


def _enc_block(b: ir.Block) -> dict:
    return {"span": _enc_span(b.span), "statements": [_enc_statement(s) for s in b.statements]}


def _enc_terminator(t: ir.Terminator) -> dict:
    return {
        "span": _enc_span(t.span),
        "kind": _enc_terminator_kind(t.kind),
        "comments": list(t.comments),
    }


def _enc_terminator_kind(k: ir.TerminatorKind):
    if isinstance(k, ir.TGoto):
        return {"Goto": k.target}
    if isinstance(k, ir.TSwitchInt):
        return {
            "SwitchInt": {
                "scrutinee": _enc_operand(k.scrutinee),
                "cases": [[str(v), b] for v, b in k.cases],
                "otherwise": k.otherwise,
            }
        }
    if isinstance(k, ir.TMatch):
        return {
            "Match": {
                "scrutinee": _enc_place(k.scrutinee),
                "arms": [[v, b] for v, b in k.arms],
                "otherwise": k.otherwise,
            }
        }
    if isinstance(k, ir.TAssert):
        return {
            "Assert": {
                "condition": _enc_operand(k.condition),
                "expected": k.expected,
                "target": k.target,
            }
        }
    if isinstance(k, ir.TCall):
        return {"Call": {"call": _enc_call(k.call), "target": k.target}}
    if isinstance(k, ir.TReturn):
        return "Return"
    if isinstance(k, ir.TAbort):
        return {"Abort": _abort_name(k.kind)}
    if isinstance(k, ir.TUnreachable):
        return "Unreachable"
    raise TypeError(f"not a terminator kind: {k!r}")


def _enc_body(b: Optional[ir.Body]):
    if b is None:
        return "Opaque"
    locals_ = [{"name": l.name, "ty": _enc_ty(l.ty)} for l in b.locals]
    if isinstance(b, ir.UllbcBody):
        return {
            "Ullbc": {
                "locals": locals_,
                "arg_count": b.arg_count,
                "blocks": [
                    {
                        "statements": [_enc_statement(s) for s in blk.statements],
                        "terminator": _enc_terminator(blk.terminator),
                    }
                    for blk in b.blocks
                ],
            }
        }
    return {"Llbc": {"locals": locals_, "arg_count": b.arg_count, "body": _enc_block(b.body)}}


def _enc_type_decl(d: ir.TypeDecl) -> dict:
    if isinstance(d.kind, ir.StructKind):
        kind = {"Struct": [_enc_ty(f) for f in d.kind.fields]}
    else:
        kind = {
            "Enum": [
                {
                    "name": v.name,
                    "fields": [_enc_ty(f) for f in v.fields],
                    "discriminant": str(v.discriminant),
                }
                for v in d.kind.variants
            ]
        }
    return {
        "decl_id": d.decl_id,
        "meta": _enc_meta(d.meta),
        "generics": _enc_params(d.generics),
        "kind": kind,
    }


def _enc_sig(s: ir.FunSig) -> dict:
    return {
        "generics": _enc_params(s.generics),
        "inputs": [_enc_ty(t) for t in s.inputs],
        "output": _enc_ty(s.output),
    }


def _enc_fun_decl(d: ir.FunDecl) -> dict:
    return {
        "decl_id": d.decl_id,
        "meta": _enc_meta(d.meta),
        "signature": _enc_sig(d.signature),
        "body": _enc_body(d.body),
    }


def _enc_trait_decl(d: ir.TraitDecl) -> dict:
    return {
        "decl_id": d.decl_id,
        "meta": _enc_meta(d.meta),
        "generics": _enc_params(d.generics),
        "parent_clauses": [_enc_clause(c) for c in d.parent_clauses],
        "assoc_types": [
            {"name": a.name, "bounds": [_enc_clause(c) for c in a.bounds]} for a in d.assoc_types
        ],
        "methods": [{"name": m.name, "signature": _enc_sig(m.signature)} for m in d.methods],
    }


def _enc_trait_impl(d: ir.TraitImpl) -> dict:
    return {
        "decl_id": d.decl_id,
        "meta": _enc_meta(d.meta),
        "generics": _enc_params(d.generics),
        "trait_decl_id": d.trait_decl_id,
        "trait_args": _enc_args(d.trait_args),
        "assoc_values": [[n, _enc_ty(t)] for n, t in d.assoc_values],
        "methods": [[n, f] for n, f in d.methods],
    }


_DECL_KIND_NAMES = {
    ir.DeclKind.TYPE: "Type",
    ir.DeclKind.FUN: "Fun",
    ir.DeclKind.TRAIT_DECL: "TraitDecl",
    ir.DeclKind.TRAIT_IMPL: "TraitImpl",
}
_DECL_KIND_BY_NAME = {v: k for k, v in _DECL_KIND_NAMES.items()}


def _enc_any_decl_id(d: ir.AnyDeclId) -> dict:
    return {_DECL_KIND_NAMES[d.kind]: d.index}


def _enc_decl_group(g: ir.DeclGroup):
    if isinstance(g, ir.GroupNonRecursive):
        return {"NonRecursive": _enc_any_decl_id(g.decl)}
    return {"Recursive": [_enc_any_decl_id(d) for d in g.decls]}


def to_json(crate: ir.TranslatedCrate, which: str) -> bytes:
    """Serialize a crate (`which` is "ullbc" or "llbc"); output is UTF-8 and
    byte-identical across runs. Bodies must match the requested kind."""
    if which not in ("ullbc", "llbc"):
        raise ValueError(f"kind must be ullbc or llbc, not {which!r}")
    want = ir.UllbcBody if which == "ullbc" else ir.LlbcBody
    for decl in crate.fun_decls:
        if decl.body is not None and not isinstance(decl.body, want):
            raise ValueError(
                f"{decl.meta.name_str}: body form {type(decl.body).__name__} "
                f"does not match kind {which!r}"
            )
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": which,
        "crate": {
            "crate_name": crate.crate_name,
            "files": [{"name": f.name} for f in crate.files],
            "type_decls": [_enc_type_decl(d) for d in crate.type_decls],
            "fun_decls": [_enc_fun_decl(d) for d in crate.fun_decls],
            "trait_decls": [_enc_trait_decl(d) for d in crate.trait_decls],
            "trait_impls": [_enc_trait_impl(d) for d in crate.trait_impls],
            "decl_groups": [_enc_decl_group(g) for g in crate.decl_groups],
        },
    }
    return (json.dumps(doc, indent=1) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Decoding


class _Dec:
    def __init__(self, lenient: bool):
        self.lenient = lenient

    def fail(self, path: str, message: str):
        raise SerializeError("schema-violation", message, path)

    def obj(self, value, path: str, keys: tuple[str, ...]) -> dict:
        if not isinstance(value, dict):
            self.fail(path, f"expected an object, got {type(value).__name__}")
        missing = [k for k in keys if k not in value]
        if missing:
            self.fail(path, f"missing keys {missing}")
        if not self.lenient:
            unknown = [k for k in value if k not in keys]
            if unknown:
                self.fail(path, f"unknown keys {unknown}")
        return value

    def variant(self, value, path: str, options: tuple[str, ...]) -> tuple[str, object]:
        if isinstance(value, str):
            if value not in options:
                self.fail(path, f"unknown variant {value!r}")
            return value, None
        if isinstance(value, dict) and len(value) == 1:
            (name, payload), = value.items()
            if name not in options:
                self.fail(path, f"unknown variant {name!r}")
            return name, payload
        self.fail(path, "expected a variant (string or single-key object)")
        raise AssertionError

    def array(self, value, path: str) -> list:
        if not isinstance(value, list):
            self.fail(path, f"expected an array, got {type(value).__name__}")
        return value

    def integer(self, value, path: str) -> int:
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(path, f"expected an integer, got {type(value).__name__}")
        return value

    def string(self, value, path: str) -> str:
        if not isinstance(value, str):
            self.fail(path, f"expected a string, got {type(value).__name__}")
        return value

    def boolean(self, value, path: str) -> bool:
        if not isinstance(value, bool):
            self.fail(path, f"expected a bool, got {type(value).__name__}")
        return value

    def int_string(self, value, path: str) -> int:
        text = self.string(value, path)
        try:
            return int(text, 10)
        except ValueError:
            self.fail(path, f"expected a decimal string, got {text!r}")
            raise AssertionError

    # -- nodes ---------------------------------------------------------------

    def span(self, v, path) -> ir.Span:
        o = self.obj(v, path, ("file_id", "start_line", "start_col", "end_line", "end_col"))
        return ir.Span(*(self.integer(o[k], f"{path}.{k}") for k in
                         ("file_id", "start_line", "start_col", "end_line", "end_col")))

    def meta(self, v, path) -> ir.ItemMeta:
        o = self.obj(v, path, ("name", "span", "attributes"))
        name = tuple(self.string(s, f"{path}.name[{i}]")
                     for i, s in enumerate(self.array(o["name"], f"{path}.name")))
        attrs = tuple(self.string(s, f"{path}.attributes[{i}]")
                      for i, s in enumerate(self.array(o["attributes"], f"{path}.attributes")))
        return ir.ItemMeta(name, self.span(o["span"], f"{path}.span"), attrs)

    def scalar_kind(self, v, path) -> ir.ScalarKind:
        text = self.string(v, path)
        if text not in ir.SCALAR_BY_NAME:
            self.fail(path, f"unknown scalar kind {text!r}")
        return ir.SCALAR_BY_NAME[text]

    def ty(self, v, path) -> ir.Ty:
        name, payload = self.variant(
            v, path, ("Scalar", "Bool", "Adt", "TypeVar", "Ref", "Tuple", "AssocType")
        )
        if name == "Scalar":
            return ir.TyScalar(self.scalar_kind(payload, path))
        if name == "Bool":
            return ir.BOOL
        if name == "Adt":
            o = self.obj(payload, path, ("decl_id", "args"))
            return ir.TyAdt(
                self.integer(o["decl_id"], f"{path}.decl_id"),
                self.args(o["args"], f"{path}.args"),
            )
        if name == "TypeVar":
            return ir.TyVar(self.integer(payload, path))
        if name == "Ref":
            o = self.obj(payload, path, ("region", "inner", "mutable"))
            return ir.TyRef(
                self.string(o["region"], f"{path}.region"),
                self.ty(o["inner"], f"{path}.inner"),
                self.boolean(o["mutable"], f"{path}.mutable"),
            )
        if name == "Tuple":
            items = self.array(payload, path)
            return ir.TyTuple(tuple(self.ty(t, f"{path}[{i}]") for i, t in enumerate(items)))
        o = self.obj(payload, path, ("base", "item"))
        return ir.TyAssoc(
            self.trait_ref(o["base"], f"{path}.base"), self.string(o["item"], f"{path}.item")
        )

    def trait_ref(self, v, path) -> ir.TraitRefKind:
        name, payload = self.variant(
            v, path, ("TraitImpl", "Clause", "ParentClause", "ItemClause", "SelfRef")
        )
        if name == "TraitImpl":
            o = self.obj(payload, path, ("impl_id", "args"))
            return ir.TraitImplRef(
                self.integer(o["impl_id"], f"{path}.impl_id"),
                self.args(o["args"], f"{path}.args"),
            )
        if name == "Clause":
            return ir.ClauseRef(self.integer(payload, path))
        if name == "ParentClause":
            o = self.obj(payload, path, ("base", "index"))
            return ir.ParentClauseRef(
                self.trait_ref(o["base"], f"{path}.base"),
                self.integer(o["index"], f"{path}.index"),
            )
        if name == "ItemClause":
            o = self.obj(payload, path, ("base", "item", "index"))
            return ir.ItemClauseRef(
                self.trait_ref(o["base"], f"{path}.base"),
                self.string(o["item"], f"{path}.item"),
                self.integer(o["index"], f"{path}.index"),
            )
        return ir.SelfRef()

    def args(self, v, path) -> ir.GenericArgs:
        o = self.obj(v, path, ("regions", "types", "const_generics", "trait_refs"))
        return ir.GenericArgs(
            regions=tuple(
                self.string(r, f"{path}.regions[{i}]")
                for i, r in enumerate(self.array(o["regions"], f"{path}.regions"))
            ),
            types=tuple(
                self.ty(t, f"{path}.types[{i}]")
                for i, t in enumerate(self.array(o["types"], f"{path}.types"))
            ),
            const_generics=tuple(
                self.const(c, f"{path}.const_generics[{i}]")
                for i, c in enumerate(self.array(o["const_generics"], f"{path}.const_generics"))
            ),
            trait_refs=tuple(
                self.trait_ref(r, f"{path}.trait_refs[{i}]")
                for i, r in enumerate(self.array(o["trait_refs"], f"{path}.trait_refs"))
            ),
        )

    def clause(self, v, path) -> ir.TraitClause:
        o = self.obj(v, path, ("clause_id", "trait_decl_id", "args"))
        return ir.TraitClause(
            self.integer(o["clause_id"], f"{path}.clause_id"),
            self.integer(o["trait_decl_id"], f"{path}.trait_decl_id"),
            self.args(o["args"], f"{path}.args"),
        )

    def params(self, v, path) -> ir.GenericParams:
        o = self.obj(
            v, path,
            ("regions", "types", "const_generics", "trait_clauses", "regions_outlive",
             "types_outlive", "trait_type_constraints"),
        )
        const_generics = []
        for i, c in enumerate(self.array(o["const_generics"], f"{path}.const_generics")):
            co = self.obj(c, f"{path}.const_generics[{i}]", ("name", "kind"))
            const_generics.append(
                ir.ConstGenericVar(
                    self.string(co["name"], f"{path}.const_generics[{i}].name"),
                    self.scalar_kind(co["kind"], f"{path}.const_generics[{i}].kind"),
                )
            )
        regions_outlive = []
        for i, pair in enumerate(self.array(o["regions_outlive"], f"{path}.regions_outlive")):
            arr = self.array(pair, f"{path}.regions_outlive[{i}]")
            if len(arr) != 2:
                self.fail(f"{path}.regions_outlive[{i}]", "expected a pair")
            regions_outlive.append(
                (self.string(arr[0], f"{path}.regions_outlive[{i}][0]"),
                 self.string(arr[1], f"{path}.regions_outlive[{i}][1]"))
            )
        types_outlive = []
        for i, pair in enumerate(self.array(o["types_outlive"], f"{path}.types_outlive")):
            arr = self.array(pair, f"{path}.types_outlive[{i}]")
            if len(arr) != 2:
                self.fail(f"{path}.types_outlive[{i}]", "expected a pair")
            types_outlive.append(
                (self.ty(arr[0], f"{path}.types_outlive[{i}][0]"),
                 self.string(arr[1], f"{path}.types_outlive[{i}][1]"))
            )
        constraints = []
        for i, c in enumerate(
            self.array(o["trait_type_constraints"], f"{path}.trait_type_constraints")
        ):
            co = self.obj(c, f"{path}.trait_type_constraints[{i}]", ("trait_ref", "item", "ty"))
            constraints.append(
                ir.TraitTypeConstraint(
                    self.trait_ref(co["trait_ref"], f"{path}.trait_type_constraints[{i}].trait_ref"),
                    self.string(co["item"], f"{path}.trait_type_constraints[{i}].item"),
                    self.ty(co["ty"], f"{path}.trait_type_constraints[{i}].ty"),
                )
            )
        return ir.GenericParams(
            regions=tuple(
                self.string(r, f"{path}.regions[{i}]")
                for i, r in enumerate(self.array(o["regions"], f"{path}.regions"))
            ),
            types=tuple(
                self.string(t, f"{path}.types[{i}]")
                for i, t in enumerate(self.array(o["types"], f"{path}.types"))
            ),
            const_generics=tuple(const_generics),
            trait_clauses=tuple(
                self.clause(c, f"{path}.trait_clauses[{i}]")
                for i, c in enumerate(self.array(o["trait_clauses"], f"{path}.trait_clauses"))
            ),
            regions_outlive=tuple(regions_outlive),
            types_outlive=tuple(types_outlive),
            trait_type_constraints=tuple(constraints),
        )

    def const(self, v, path) -> ir.ConstantValue:
        o = self.obj(v, path, ("ty", "kind"))
        ty = self.ty(o["ty"], f"{path}.ty")
        name, payload = self.variant(o["kind"], f"{path}.kind", ("Scalar", "Bool", "Adt", "Raw"))
        if name == "Scalar":
            return ir.ConstantValue(ty, ir.CScalar(self.int_string(payload, f"{path}.kind")))
        if name == "Bool":
            return ir.ConstantValue(ty, ir.CBool(self.boolean(payload, f"{path}.kind")))
        if name == "Adt":
            ao = self.obj(payload, f"{path}.kind", ("variant", "fields"))
            variant = None
            if ao["variant"] is not None:
                variant = self.integer(ao["variant"], f"{path}.kind.variant")
            fields = tuple(
                self.const(f, f"{path}.kind.fields[{i}]")
                for i, f in enumerate(self.array(ao["fields"], f"{path}.kind.fields"))
            )
            return ir.ConstantValue(ty, ir.CAdt(variant, fields))
        text = self.string(payload, f"{path}.kind")
        try:
            data = bytes.fromhex(text)
        except ValueError:
            self.fail(f"{path}.kind", f"bad hex payload {text!r}")
            raise AssertionError
        return ir.ConstantValue(ty, ir.CRaw(data))

    def place(self, v, path) -> ir.Place:
        o = self.obj(v, path, ("local", "projections"))
        projs: list[ir.Projection] = []
        for i, p in enumerate(self.array(o["projections"], f"{path}.projections")):
            ppath = f"{path}.projections[{i}]"
            name, payload = self.variant(p, ppath, ("Field", "Downcast", "Index", "Deref"))
            if name == "Field":
                projs.append(ir.ProjField(self.integer(payload, ppath)))
            elif name == "Downcast":
                projs.append(ir.ProjDowncast(self.integer(payload, ppath)))
            elif name == "Index":
                projs.append(ir.ProjIndex(self.operand(payload, ppath)))
            else:
                projs.append(ir.ProjDeref())
        return ir.Place(self.integer(o["local"], f"{path}.local"), tuple(projs))

    def operand(self, v, path) -> ir.Operand:
        name, payload = self.variant(v, path, ("Move", "Copy", "Const"))
        if name == "Move":
            return ir.OpMove(self.place(payload, path))
        if name == "Copy":
            return ir.OpCopy(self.place(payload, path))
        return ir.OpConst(self.const(payload, path))

    def rvalue(self, v, path) -> ir.Rvalue:
        name, payload = self.variant(
            v, path, ("Use", "BinOp", "UnOp", "Discriminant", "Aggregate", "Ref")
        )
        if name == "Use":
            return ir.RvUse(self.operand(payload, path))
        if name == "BinOp":
            o = self.obj(payload, path, ("op", "lhs", "rhs"))
            op_name = self.string(o["op"], f"{path}.op")
            if op_name not in _BINOP_BY_NAME:
                self.fail(f"{path}.op", f"unknown operator {op_name!r}")
            return ir.RvBinOp(
                _BINOP_BY_NAME[op_name],
                self.operand(o["lhs"], f"{path}.lhs"),
                self.operand(o["rhs"], f"{path}.rhs"),
            )
        if name == "UnOp":
            o = self.obj(payload, path, ("op", "operand"))
            op_name = self.string(o["op"], f"{path}.op")
            if op_name not in _UNOP_BY_NAME:
                self.fail(f"{path}.op", f"unknown operator {op_name!r}")
            return ir.RvUnOp(_UNOP_BY_NAME[op_name], self.operand(o["operand"], f"{path}.operand"))
        if name == "Discriminant":
            return ir.RvDiscriminant(self.place(payload, path))
        if name == "Aggregate":
            o = self.obj(payload, path, ("decl_id", "variant", "operands"))
            variant = None
            if o["variant"] is not None:
                variant = self.integer(o["variant"], f"{path}.variant")
            return ir.RvAggregate(
                self.integer(o["decl_id"], f"{path}.decl_id"),
                variant,
                tuple(
                    self.operand(op, f"{path}.operands[{i}]")
                    for i, op in enumerate(self.array(o["operands"], f"{path}.operands"))
                ),
            )
        o = self.obj(payload, path, ("place", "mutable"))
        return ir.RvRef(
            self.place(o["place"], f"{path}.place"),
            self.boolean(o["mutable"], f"{path}.mutable"),
        )

    def fn_ptr(self, v, path) -> ir.FnPtr:
        o = self.obj(v, path, ("func", "generics"))
        name, payload = self.variant(
            o["func"], f"{path}.func", ("Fun", "TraitMethod", "UnresolvedTraitMethod")
        )
        if name == "Fun":
            func: ir.FnPtrKind = ir.FnFun(self.integer(payload, f"{path}.func"))
        elif name == "TraitMethod":
            fo = self.obj(payload, f"{path}.func", ("trait_ref", "method"))
            func = ir.FnTraitMethod(
                self.trait_ref(fo["trait_ref"], f"{path}.func.trait_ref"),
                self.string(fo["method"], f"{path}.func.method"),
            )
        else:
            fo = self.obj(payload, f"{path}.func", ("trait_decl_id", "method"))
            func = ir.FnUnresolvedTraitMethod(
                self.integer(fo["trait_decl_id"], f"{path}.func.trait_decl_id"),
                self.string(fo["method"], f"{path}.func.method"),
            )
        return ir.FnPtr(func, self.args(o["generics"], f"{path}.generics"))

    def call(self, v, path) -> ir.Call:
        o = self.obj(v, path, ("func", "args", "dest"))
        name, payload = self.variant(o["func"], f"{path}.func", ("Regular", "Move"))
        if name == "Regular":
            func: ir.FnOperand = ir.FnOpRegular(self.fn_ptr(payload, f"{path}.func"))
        else:
            func = ir.FnOpMove(self.place(payload, f"{path}.func"))
        return ir.Call(
            func,
            tuple(
                self.operand(a, f"{path}.args[{i}]")
                for i, a in enumerate(self.array(o["args"], f"{path}.args"))
            ),
            self.place(o["dest"], f"{path}.dest"),
        )

    def statement(self, v, path) -> ir.Statement:
        o = self.obj(v, path, ("span", "kind", "comments", "attributes"))
        return ir.Statement(
            self.span(o["span"], f"{path}.span"),
            self.statement_kind(o["kind"], f"{path}.kind"),
            tuple(
                self.string(c, f"{path}.comments[{i}]")
                for i, c in enumerate(self.array(o["comments"], f"{path}.comments"))
            ),
            tuple(
                self.string(a, f"{path}.attributes[{i}]")
                for i, a in enumerate(self.array(o["attributes"], f"{path}.attributes"))
            ),
        )

    def statement_kind(self, v, path) -> ir.StatementKind:
        name, payload = self.variant(
            v, path,
            ("Assign", "Drop", "Nop", "Call", "Abort", "Return", "Break", "Continue",
             "Loop", "Switch"),
        )
        if name == "Assign":
            o = self.obj(payload, path, ("place", "rvalue"))
            return ir.SAssign(
                self.place(o["place"], f"{path}.place"),
                self.rvalue(o["rvalue"], f"{path}.rvalue"),
            )
        if name == "Drop":
            return ir.SDrop(self.place(payload, path))
        if name == "Nop":
            return ir.SNop()
        if name == "Call":
            return ir.SCall(self.call(payload, path))
        if name == "Abort":
            return ir.SAbort(self.abort_kind(payload, path))
        if name == "Return":
            return ir.SReturn()
        if name == "Break":
            return ir.SBreak(self.integer(payload, path))
        if name == "Continue":
            return ir.SContinue(self.integer(payload, path))
        if name == "Loop":
            return ir.SLoop(self.block(payload, path))
        return ir.SSwitch(self.switch(payload, path))

    def abort_kind(self, v, path) -> ir.AbortKind:
        text = self.string(v, path)
        if text == "Panic":
            return ir.AbortKind.PANIC
        if text == "UndefinedBehavior":
            return ir.AbortKind.UNDEFINED_BEHAVIOR
        self.fail(path, f"unknown abort kind {text!r}")
        raise AssertionError

    def switch(self, v, path) -> ir.Switch:
        name, payload = self.variant(v, path, ("If", "SwitchInt", "Match"))
        if name == "If":
            o = self.obj(payload, path, ("condition", "then_block", "else_block"))
            return ir.SwIf(
                self.operand(o["condition"], f"{path}.condition"),
                self.block(o["then_block"], f"{path}.then_block"),
                self.block(o["else_block"], f"{path}.else_block"),
            )
        if name == "SwitchInt":
            o = self.obj(payload, path, ("scrutinee", "arms", "otherwise"))
            arms = []
            for i, arm in enumerate(self.array(o["arms"], f"{path}.arms")):
                pair = self.array(arm, f"{path}.arms[{i}]")
                if len(pair) != 2:
                    self.fail(f"{path}.arms[{i}]", "expected a pair")
                arms.append(
                    (self.int_string(pair[0], f"{path}.arms[{i}][0]"),
                     self.block(pair[1], f"{path}.arms[{i}][1]"))
                )
            return ir.SwInt(
                self.operand(o["scrutinee"], f"{path}.scrutinee"),
                tuple(arms),
                self.block(o["otherwise"], f"{path}.otherwise"),
            )
        o = self.obj(payload, path, ("scrutinee", "arms", "otherwise"))
        arms = []
        for i, arm in enumerate(self.array(o["arms"], f"{path}.arms")):
            pair = self.array(arm, f"{path}.arms[{i}]")
            if len(pair) != 2:
                self.fail(f"{path}.arms[{i}]", "expected a pair")
            arms.append(
                (self.integer(pair[0], f"{path}.arms[{i}][0]"),
                 self.block(pair[1], f"{path}.arms[{i}][1]"))
            )
        otherwise = None
        if o["otherwise"] is not None:
            otherwise = self.block(o["otherwise"], f"{path}.otherwise")
        return ir.SwMatch(self.place(o["scrutinee"], f"{path}.scrutinee"), tuple(arms), otherwise)

    def block(self, v, path) -> ir.Block:
        o = self.obj(v, path, ("span", "statements"))
        return ir.Block(
            self.span(o["span"], f"{path}.span"),
            tuple(
                self.statement(s, f"{path}.statements[{i}]")
                for i, s in enumerate(self.array(o["statements"], f"{path}.statements"))
            ),
        )

    def terminator(self, v, path) -> ir.Terminator:
        o = self.obj(v, path, ("span", "kind", "comments"))
        return ir.Terminator(
            self.span(o["span"], f"{path}.span"),
            self.terminator_kind(o["kind"], f"{path}.kind"),
            tuple(
                self.string(c, f"{path}.comments[{i}]")
                for i, c in enumerate(self.array(o["comments"], f"{path}.comments"))
            ),
        )

    def terminator_kind(self, v, path) -> ir.TerminatorKind:
        name, payload = self.variant(
            v, path,
            ("Goto", "SwitchInt", "Match", "Assert", "Call", "Return", "Abort", "Unreachable"),
        )
        if name == "Goto":
            return ir.TGoto(self.integer(payload, path))
        if name == "SwitchInt":
            o = self.obj(payload, path, ("scrutinee", "cases", "otherwise"))
            cases = []
            for i, case in enumerate(self.array(o["cases"], f"{path}.cases")):
                pair = self.array(case, f"{path}.cases[{i}]")
                if len(pair) != 2:
                    self.fail(f"{path}.cases[{i}]", "expected a pair")
                cases.append(
                    (self.int_string(pair[0], f"{path}.cases[{i}][0]"),
                     self.integer(pair[1], f"{path}.cases[{i}][1]"))
                )
            return ir.TSwitchInt(
                self.operand(o["scrutinee"], f"{path}.scrutinee"),
                tuple(cases),
                self.integer(o["otherwise"], f"{path}.otherwise"),
            )
        if name == "Match":
            o = self.obj(payload, path, ("scrutinee", "arms", "otherwise"))
            arms = []
            for i, arm in enumerate(self.array(o["arms"], f"{path}.arms")):
                pair = self.array(arm, f"{path}.arms[{i}]")
                if len(pair) != 2:
                    self.fail(f"{path}.arms[{i}]", "expected a pair")
                arms.append(
                    (self.integer(pair[0], f"{path}.arms[{i}][0]"),
                     self.integer(pair[1], f"{path}.arms[{i}][1]"))
                )
            otherwise = None
            if o["otherwise"] is not None:
                otherwise = self.integer(o["otherwise"], f"{path}.otherwise")
            return ir.TMatch(
                self.place(o["scrutinee"], f"{path}.scrutinee"), tuple(arms), otherwise
            )
        if name == "Assert":
            o = self.obj(payload, path, ("condition", "expected", "target"))
            return ir.TAssert(
                self.operand(o["condition"], f"{path}.condition"),
                self.boolean(o["expected"], f"{path}.expected"),
                self.integer(o["target"], f"{path}.target"),
            )
        if name == "Call":
            o = self.obj(payload, path, ("call", "target"))
            return ir.TCall(
                self.call(o["call"], f"{path}.call"),
                self.integer(o["target"], f"{path}.target"),
            )
        if name == "Return":
            return ir.TReturn()
        if name == "Abort":
            return ir.TAbort(self.abort_kind(payload, path))
        return ir.TUnreachable()

    def body(self, v, path) -> Optional[ir.Body]:
        name, payload = self.variant(v, path, ("Opaque", "Ullbc", "Llbc"))
        if name == "Opaque":
            return None
        if name == "Ullbc":
            o = self.obj(payload, path, ("locals", "arg_count", "blocks"))
            blocks = []
            for i, b in enumerate(self.array(o["blocks"], f"{path}.blocks")):
                bo = self.obj(b, f"{path}.blocks[{i}]", ("statements", "terminator"))
                blocks.append(
                    ir.BasicBlock(
                        tuple(
                            self.statement(s, f"{path}.blocks[{i}].statements[{j}]")
                            for j, s in enumerate(
                                self.array(bo["statements"], f"{path}.blocks[{i}].statements")
                            )
                        ),
                        self.terminator(bo["terminator"], f"{path}.blocks[{i}].terminator"),
                    )
                )
            return ir.UllbcBody(
                self.locals(o["locals"], f"{path}.locals"),
                self.integer(o["arg_count"], f"{path}.arg_count"),
                tuple(blocks),
            )
        o = self.obj(payload, path, ("locals", "arg_count", "body"))
        return ir.LlbcBody(
            self.locals(o["locals"], f"{path}.locals"),
            self.integer(o["arg_count"], f"{path}.arg_count"),
            self.block(o["body"], f"{path}.body"),
        )

    def locals(self, v, path) -> tuple[ir.Local, ...]:
        out = []
        for i, l in enumerate(self.array(v, path)):
            o = self.obj(l, f"{path}[{i}]", ("name", "ty"))
            out.append(
                ir.Local(self.string(o["name"], f"{path}[{i}].name"),
                         self.ty(o["ty"], f"{path}[{i}].ty"))
            )
        return tuple(out)

    def type_decl(self, v, path) -> ir.TypeDecl:
        o = self.obj(v, path, ("decl_id", "meta", "generics", "kind"))
        name, payload = self.variant(o["kind"], f"{path}.kind", ("Struct", "Enum"))
        if name == "Struct":
            kind: ir.TypeDeclKind = ir.StructKind(
                tuple(
                    self.ty(f, f"{path}.kind[{i}]")
                    for i, f in enumerate(self.array(payload, f"{path}.kind"))
                )
            )
        else:
            variants = []
            for i, var in enumerate(self.array(payload, f"{path}.kind")):
                vo = self.obj(var, f"{path}.kind[{i}]", ("name", "fields", "discriminant"))
                variants.append(
                    ir.Variant(
                        self.string(vo["name"], f"{path}.kind[{i}].name"),
                        tuple(
                            self.ty(f, f"{path}.kind[{i}].fields[{j}]")
                            for j, f in enumerate(
                                self.array(vo["fields"], f"{path}.kind[{i}].fields")
                            )
                        ),
                        self.int_string(vo["discriminant"], f"{path}.kind[{i}].discriminant"),
                    )
                )
            kind = ir.EnumKind(tuple(variants))
        return ir.TypeDecl(
            self.integer(o["decl_id"], f"{path}.decl_id"),
            self.meta(o["meta"], f"{path}.meta"),
            self.params(o["generics"], f"{path}.generics"),
            kind,
        )

    def sig(self, v, path) -> ir.FunSig:
        o = self.obj(v, path, ("generics", "inputs", "output"))
        return ir.FunSig(
            self.params(o["generics"], f"{path}.generics"),
            tuple(
                self.ty(t, f"{path}.inputs[{i}]")
                for i, t in enumerate(self.array(o["inputs"], f"{path}.inputs"))
            ),
            self.ty(o["output"], f"{path}.output"),
        )

    def fun_decl(self, v, path) -> ir.FunDecl:
        o = self.obj(v, path, ("decl_id", "meta", "signature", "body"))
        return ir.FunDecl(
            self.integer(o["decl_id"], f"{path}.decl_id"),
            self.meta(o["meta"], f"{path}.meta"),
            self.sig(o["signature"], f"{path}.signature"),
            self.body(o["body"], f"{path}.body"),
        )

    def trait_decl(self, v, path) -> ir.TraitDecl:
        o = self.obj(
            v, path, ("decl_id", "meta", "generics", "parent_clauses", "assoc_types", "methods")
        )
        assoc_types = []
        for i, a in enumerate(self.array(o["assoc_types"], f"{path}.assoc_types")):
            ao = self.obj(a, f"{path}.assoc_types[{i}]", ("name", "bounds"))
            assoc_types.append(
                ir.AssocTypeDecl(
                    self.string(ao["name"], f"{path}.assoc_types[{i}].name"),
                    tuple(
                        self.clause(c, f"{path}.assoc_types[{i}].bounds[{j}]")
                        for j, c in enumerate(
                            self.array(ao["bounds"], f"{path}.assoc_types[{i}].bounds")
                        )
                    ),
                )
            )
        methods = []
        for i, m in enumerate(self.array(o["methods"], f"{path}.methods")):
            mo = self.obj(m, f"{path}.methods[{i}]", ("name", "signature"))
            methods.append(
                ir.TraitMethodDecl(
                    self.string(mo["name"], f"{path}.methods[{i}].name"),
                    self.sig(mo["signature"], f"{path}.methods[{i}].signature"),
                )
            )
        return ir.TraitDecl(
            self.integer(o["decl_id"], f"{path}.decl_id"),
            self.meta(o["meta"], f"{path}.meta"),
            self.params(o["generics"], f"{path}.generics"),
            tuple(
                self.clause(c, f"{path}.parent_clauses[{i}]")
                for i, c in enumerate(self.array(o["parent_clauses"], f"{path}.parent_clauses"))
            ),
            tuple(assoc_types),
            tuple(methods),
        )

    def trait_impl(self, v, path) -> ir.TraitImpl:
        o = self.obj(
            v, path,
            ("decl_id", "meta", "generics", "trait_decl_id", "trait_args", "assoc_values",
             "methods"),
        )
        assoc_values = []
        for i, a in enumerate(self.array(o["assoc_values"], f"{path}.assoc_values")):
            pair = self.array(a, f"{path}.assoc_values[{i}]")
            if len(pair) != 2:
                self.fail(f"{path}.assoc_values[{i}]", "expected a pair")
            assoc_values.append(
                (self.string(pair[0], f"{path}.assoc_values[{i}][0]"),
                 self.ty(pair[1], f"{path}.assoc_values[{i}][1]"))
            )
        methods = []
        for i, m in enumerate(self.array(o["methods"], f"{path}.methods")):
            pair = self.array(m, f"{path}.methods[{i}]")
            if len(pair) != 2:
                self.fail(f"{path}.methods[{i}]", "expected a pair")
            methods.append(
                (self.string(pair[0], f"{path}.methods[{i}][0]"),
                 self.integer(pair[1], f"{path}.methods[{i}][1]"))
            )
        return ir.TraitImpl(
            self.integer(o["decl_id"], f"{path}.decl_id"),
            self.meta(o["meta"], f"{path}.meta"),
            self.params(o["generics"], f"{path}.generics"),
            self.integer(o["trait_decl_id"], f"{path}.trait_decl_id"),
            self.args(o["trait_args"], f"{path}.trait_args"),
            tuple(assoc_values),
            tuple(methods),
        )

    def any_decl_id(self, v, path) -> ir.AnyDeclId:
        name, payload = self.variant(v, path, tuple(_DECL_KIND_BY_NAME))
        return ir.AnyDeclId(_DECL_KIND_BY_NAME[name], self.integer(payload, path))

    def decl_group(self, v, path) -> ir.DeclGroup:
        name, payload = self.variant(v, path, ("NonRecursive", "Recursive"))
        if name == "NonRecursive":
            return ir.GroupNonRecursive(self.any_decl_id(payload, path))
        return ir.GroupRecursive(
            tuple(
                self.any_decl_id(d, f"{path}[{i}]")
                for i, d in enumerate(self.array(payload, path))
            )
        )


def from_json(data: bytes, lenient: bool = False) -> tuple[ir.TranslatedCrate, str]:
    """Parse a serialized crate; returns (crate, kind).

    Raises SerializeError: `malformed-json`, `version-mismatch`, or
    `schema-violation` with the offending JSON path.
    """
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SerializeError("malformed-json", str(exc))
    dec = _Dec(lenient)
    top = dec.obj(doc, "$", ("format_version", "kind", "crate"))
    version = dec.string(top["format_version"], "$.format_version")
    if version != FORMAT_VERSION:
        raise SerializeError(
            "version-mismatch", f"format_version {version!r}, expected {FORMAT_VERSION!r}",
            "$.format_version",
        )
    kind = dec.string(top["kind"], "$.kind")
    if kind not in ("ullbc", "llbc"):
        raise SerializeError("schema-violation", f"unknown kind {kind!r}", "$.kind")
    c = dec.obj(
        top["crate"], "$.crate",
        ("crate_name", "files", "type_decls", "fun_decls", "trait_decls", "trait_impls",
         "decl_groups"),
    )
    files = []
    for i, f in enumerate(dec.array(c["files"], "$.crate.files")):
        fo = dec.obj(f, f"$.crate.files[{i}]", ("name",))
        files.append(ir.FileRecord(dec.string(fo["name"], f"$.crate.files[{i}].name")))
    crate = ir.TranslatedCrate(
        crate_name=dec.string(c["crate_name"], "$.crate.crate_name"),
        files=tuple(files),
        type_decls=tuple(
            dec.type_decl(d, f"$.crate.type_decls[{i}]")
            for i, d in enumerate(dec.array(c["type_decls"], "$.crate.type_decls"))
        ),
        fun_decls=tuple(
            dec.fun_decl(d, f"$.crate.fun_decls[{i}]")
            for i, d in enumerate(dec.array(c["fun_decls"], "$.crate.fun_decls"))
        ),
        trait_decls=tuple(
            dec.trait_decl(d, f"$.crate.trait_decls[{i}]")
            for i, d in enumerate(dec.array(c["trait_decls"], "$.crate.trait_decls"))
        ),
        trait_impls=tuple(
            dec.trait_impl(d, f"$.crate.trait_impls[{i}]")
            for i, d in enumerate(dec.array(c["trait_impls"], "$.crate.trait_impls"))
        ),
        decl_groups=tuple(
            dec.decl_group(g, f"$.crate.decl_groups[{i}]")
            for i, g in enumerate(dec.array(c["decl_groups"], "$.crate.decl_groups"))
        ),
    )
    want = ir.UllbcBody if kind == "ullbc" else ir.LlbcBody
    for i, decl in enumerate(crate.fun_decls):
        if decl.body is not None and not isinstance(decl.body, want):
            raise SerializeError(
                "schema-violation",
                f"body form {type(decl.body).__name__} does not match kind {kind!r}",
                f"$.crate.fun_decls[{i}].body",
            )
    return crate, kind
