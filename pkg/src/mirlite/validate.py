"""Structural well-formedness checks over a whole crate.

`validate_crate` returns a list of diagnostics; an empty list means every
invariant holds. It never raises: broken crates are described, not rejected,
so that robustness paths (opaque bodies, unresolved calls) keep flowing.
"""

from __future__ import annotations

from typing import Optional

from . import ir
from .diagnostics import Diagnostic


class _Validator:
    def __init__(self, crate: ir.TranslatedCrate):
        self.crate = crate
        self.diags: list[Diagnostic] = []
        self.function: Optional[str] = None

    def error(self, code: str, message: str, span: Optional[ir.Span] = None) -> None:
        self.diags.append(Diagnostic(code, message, span, self.function))

    # -- small lookups ------------------------------------------------------

    def type_decl(self, decl_id: int) -> Optional[ir.TypeDecl]:
        if 0 <= decl_id < len(self.crate.type_decls):
            return self.crate.type_decls[decl_id]
        return None

    def trait_decl(self, decl_id: int) -> Optional[ir.TraitDecl]:
        if 0 <= decl_id < len(self.crate.trait_decls):
            return self.crate.trait_decls[decl_id]
        return None

    # -- spans ---------------------------------------------------------------

    def check_span(self, span: ir.Span) -> None:
        if not (0 <= span.file_id < len(self.crate.files)):
            self.error("unresolved-id", f"span file id {span.file_id} not in file table", span)
        if (span.start_line, span.start_col) > (span.end_line, span.end_col):
            self.error("bad-span", "span start after end", span)

    # -- types ---------------------------------------------------------------

    def check_ty(self, ty: ir.Ty, params: ir.GenericParams, span: ir.Span, *, in_trait: bool):
        if isinstance(ty, (ir.TyScalar, ir.TyBool)):
            return
        if isinstance(ty, ir.TyVar):
            if ty.index >= len(params.types):
                self.error(
                    "unresolved-id",
                    f"type variable #{ty.index} out of range ({len(params.types)} declared)",
                    span,
                )
            return
        if isinstance(ty, ir.TyAdt):
            decl = self.type_decl(ty.decl_id)
            if decl is None:
                self.error("unresolved-id", f"type decl id {ty.decl_id} does not resolve", span)
                return
            self.check_args(ty.args, decl.generics, decl.meta.name_str, params, span, in_trait=in_trait)
            return
        if isinstance(ty, ir.TyRef):
            self.check_ty(ty.inner, params, span, in_trait=in_trait)
            return
        if isinstance(ty, ir.TyTuple):
            for item in ty.items:
                self.check_ty(item, params, span, in_trait=in_trait)
            return
        if isinstance(ty, ir.TyAssoc):
            self.check_trait_ref(ty.base, params, span, in_trait=in_trait)
            return
        self.error("bad-node", f"unknown type node {type(ty).__name__}", span)

    def check_args(
        self,
        args: ir.GenericArgs,
        target_params: ir.GenericParams,
        target_name: str,
        params: ir.GenericParams,
        span: ir.Span,
        *,
        in_trait: bool,
    ) -> None:
        try:
            ir.check_args_arity(target_name, target_params, args)
        except ir.ArityMismatch as exc:
            self.error("arity-mismatch", str(exc), span)
        for t in args.types:
            self.check_ty(t, params, span, in_trait=in_trait)
        for c in args.const_generics:
            self.check_constant(c, span)
        for r in args.trait_refs:
            self.check_trait_ref(r, params, span, in_trait=in_trait)

    def check_trait_ref(
        self, ref: ir.TraitRefKind, params: ir.GenericParams, span: ir.Span, *, in_trait: bool
    ) -> None:
        if isinstance(ref, ir.ClauseRef):
            if ref.clause_id >= len(params.trait_clauses):
                self.error(
                    "unresolved-id",
                    f"clause id {ref.clause_id} out of range "
                    f"({len(params.trait_clauses)} declared)",
                    span,
                )
            return
        if isinstance(ref, ir.TraitImplRef):
            if not (0 <= ref.impl_id < len(self.crate.trait_impls)):
                self.error("unresolved-id", f"trait impl id {ref.impl_id} does not resolve", span)
                return
            impl = self.crate.trait_impls[ref.impl_id]
            self.check_args(ref.args, impl.generics, impl.meta.name_str, params, span, in_trait=in_trait)
            return
        if isinstance(ref, ir.ParentClauseRef):
            self.check_trait_ref(ref.base, params, span, in_trait=in_trait)
            return
        if isinstance(ref, ir.ItemClauseRef):
            self.check_trait_ref(ref.base, params, span, in_trait=in_trait)
            return
        if isinstance(ref, ir.SelfRef):
            if not in_trait:
                self.error("bad-node", "Self trait reference outside a trait declaration", span)
            return
        self.error("bad-node", f"unknown trait ref node {type(ref).__name__}", span)

    def check_generic_params(self, params: ir.GenericParams, span: ir.Span, *, in_trait: bool):
        for i, clause in enumerate(params.trait_clauses):
            if clause.clause_id != i:
                self.error(
                    "bad-node",
                    f"clause ids must be dense: position {i} holds id {clause.clause_id}",
                    span,
                )
            decl = self.trait_decl(clause.trait_decl_id)
            if decl is None:
                self.error(
                    "unresolved-id",
                    f"trait decl id {clause.trait_decl_id} does not resolve",
                    span,
                )
                continue
            self.check_args(clause.args, decl.generics, decl.meta.name_str, params, span, in_trait=in_trait)
        for constraint in params.trait_type_constraints:
            self.check_trait_ref(constraint.trait_ref, params, span, in_trait=in_trait)
            self.check_ty(constraint.ty, params, span, in_trait=in_trait)
        for ty, _region in params.types_outlive:
            self.check_ty(ty, params, span, in_trait=in_trait)

    # -- constants -----------------------------------------------------------

    def check_constant(self, value: ir.ConstantValue, span: ir.Span) -> None:
        kind = value.kind
        if isinstance(kind, ir.CScalar):
            if isinstance(value.ty, ir.TyScalar):
                if not value.ty.kind.in_range(kind.value):
                    self.error(
                        "scalar-range",
                        f"{kind.value} does not fit {value.ty.kind.value}",
                        span,
                    )
            else:
                self.error("type-mismatch", "scalar constant with non-scalar type", span)
        elif isinstance(kind, ir.CBool):
            if not isinstance(value.ty, ir.TyBool):
                self.error("type-mismatch", "bool constant with non-bool type", span)
        elif isinstance(kind, ir.CAdt):
            self.check_adt_constant(value.ty, kind, span)
        elif isinstance(kind, ir.CRaw):
            pass  # legal until the decoding pass has run
        else:
            self.error("bad-node", f"unknown constant kind {type(kind).__name__}", span)

    def check_adt_constant(self, ty: ir.Ty, kind: ir.CAdt, span: ir.Span) -> None:
        if isinstance(ty, ir.TyTuple):
            if kind.variant is not None:
                self.error("type-mismatch", "tuple constant with a variant tag", span)
            if len(kind.fields) != len(ty.items):
                self.error(
                    "adt-const-arity",
                    f"tuple constant has {len(kind.fields)} fields, type has {len(ty.items)}",
                    span,
                )
            for f in kind.fields:
                self.check_constant(f, span)
            return
        if isinstance(ty, ir.TyAdt):
            decl = self.type_decl(ty.decl_id)
            if decl is None:
                return  # reported where the type itself is checked
            if isinstance(decl.kind, ir.StructKind):
                expected = len(decl.kind.fields)
                if kind.variant is not None:
                    self.error("type-mismatch", "struct constant with a variant tag", span)
            else:
                if kind.variant is None or not (0 <= kind.variant < len(decl.kind.variants)):
                    self.error("type-mismatch", "enum constant with a bad variant tag", span)
                    return
                expected = len(decl.kind.variants[kind.variant].fields)
            if len(kind.fields) != expected:
                self.error(
                    "adt-const-arity",
                    f"constant has {len(kind.fields)} fields, declaration expects {expected}",
                    span,
                )
            for f in kind.fields:
                self.check_constant(f, span)
            return
        self.error("type-mismatch", "aggregate constant with non-aggregate type", span)

    # -- place typing ---------------------------------------------------------

    def place_ty(
        self, place: ir.Place, body: ir.UllbcBody | ir.LlbcBody, span: ir.Span
    ) -> Optional[ir.Ty]:
        """Type a place against the locals table; None when it cannot be typed."""
        if not (0 <= place.local < len(body.locals)):
            self.error("unresolved-id", f"local #{place.local} does not resolve", span)
            return None
        ty: Optional[ir.Ty] = body.locals[place.local].ty
        for proj in place.projections:
            if ty is None:
                return None
            ty = self.apply_projection(ty, proj, span)
        return ty

    def apply_projection(
        self, ty: ir.Ty, proj: ir.Projection, span: ir.Span
    ) -> Optional[ir.Ty]:
        if isinstance(proj, ir.ProjDeref):
            if isinstance(ty, ir.TyRef):
                return ty.inner
            self.error("bad-projection", "deref of a non-reference", span)
            return None
        if isinstance(proj, ir.ProjField):
            if isinstance(ty, ir.TyTuple):
                if proj.index < len(ty.items):
                    return ty.items[proj.index]
                self.error("bad-projection", f"tuple field #{proj.index} out of range", span)
                return None
            if isinstance(ty, ir.TyAdt):
                decl = self.type_decl(ty.decl_id)
                if decl is None:
                    return None
                if isinstance(decl.kind, ir.StructKind):
                    fields = decl.kind.fields
                else:
                    self.error("bad-projection", "field access on an enum without downcast", span)
                    return None
                if proj.index >= len(fields):
                    self.error("bad-projection", f"field #{proj.index} out of range", span)
                    return None
                return ir.substitute(fields[proj.index], ty.args)
            if isinstance(ty, ir.TyVar):
                return None  # generic: cannot be checked further
            self.error("bad-projection", "field access on a non-aggregate", span)
            return None
        if isinstance(proj, ir.ProjDowncast):
            if isinstance(ty, ir.TyAdt):
                decl = self.type_decl(ty.decl_id)
                if decl is None:
                    return None
                if not isinstance(decl.kind, ir.EnumKind):
                    self.error("bad-projection", "downcast on a non-enum", span)
                    return None
                if not (0 <= proj.variant < len(decl.kind.variants)):
                    self.error("bad-projection", f"variant #{proj.variant} out of range", span)
                    return None
                variant = decl.kind.variants[proj.variant]
                return ir.TyTuple(tuple(ir.substitute(f, ty.args) for f in variant.fields))
            if isinstance(ty, ir.TyVar):
                return None
            self.error("bad-projection", "downcast on a non-enum", span)
            return None
        if isinstance(proj, ir.ProjIndex):
            off_ty = self.operand_ty_shallow(proj.offset)
            if off_ty is not None and not (
                isinstance(off_ty, ir.TyScalar) and not off_ty.kind.signed
            ):
                self.error("bad-projection", "index offset must have an unsigned scalar type", span)
            if isinstance(ty, ir.TyTuple):
                if not ty.items:
                    self.error("bad-projection", "index into an empty tuple", span)
                    return None
                first = ty.items[0]
                if any(item != first for item in ty.items):
                    self.error(
                        "bad-projection",
                        "index target tuple must have uniform element types",
                        span,
                    )
                return first
            if isinstance(ty, ir.TyVar):
                return None
            self.error("bad-projection", "index into a non-tuple", span)
            return None
        self.error("bad-node", f"unknown projection {type(proj).__name__}", span)
        return None

    def operand_ty_shallow(self, op: ir.Operand) -> Optional[ir.Ty]:
        """Type of an operand without re-walking its place (used for offsets)."""
        if isinstance(op, ir.OpConst):
            return op.value.ty
        if isinstance(op, (ir.OpMove, ir.OpCopy)) and self._body is not None:
            saved = list(self.diags)
            ty = self.place_ty(op.place, self._body, ir.dummy_span())
            self.diags = saved  # avoid double-reporting; the main walk covers it
            return ty
        return None

    # -- operands / rvalues ----------------------------------------------------

    def check_operand(self, op: ir.Operand, body, params, span) -> Optional[ir.Ty]:
        if isinstance(op, ir.OpConst):
            self.check_constant(op.value, span)
            return op.value.ty
        ty = self.place_ty(op.place, body, span)
        for proj in op.place.projections:
            if isinstance(proj, ir.ProjIndex):
                self.check_operand(proj.offset, body, params, span)
        return ty

    def check_rvalue(self, rv: ir.Rvalue, body, params, span) -> None:
        if isinstance(rv, ir.RvUse):
            self.check_operand(rv.operand, body, params, span)
        elif isinstance(rv, ir.RvBinOp):
            self.check_operand(rv.lhs, body, params, span)
            self.check_operand(rv.rhs, body, params, span)
        elif isinstance(rv, ir.RvUnOp):
            self.check_operand(rv.operand, body, params, span)
        elif isinstance(rv, ir.RvDiscriminant):
            ty = self.place_ty(rv.place, body, span)
            if ty is not None and not (
                isinstance(ty, ir.TyAdt)
                and (decl := self.type_decl(ty.decl_id)) is not None
                and isinstance(decl.kind, ir.EnumKind)
            ):
                if not isinstance(ty, ir.TyVar):
                    self.error("type-mismatch", "discriminant of a non-enum place", span)
        elif isinstance(rv, ir.RvAggregate):
            decl = self.type_decl(rv.decl_id)
            if decl is None:
                self.error("unresolved-id", f"type decl id {rv.decl_id} does not resolve", span)
            else:
                if isinstance(decl.kind, ir.StructKind):
                    expected = len(decl.kind.fields)
                    if rv.variant is not None:
                        self.error("type-mismatch", "struct aggregate with a variant", span)
                elif rv.variant is None or not (0 <= rv.variant < len(decl.kind.variants)):
                    self.error("type-mismatch", "enum aggregate needs a valid variant", span)
                    expected = len(rv.operands)
                else:
                    expected = len(decl.kind.variants[rv.variant].fields)
                if len(rv.operands) != expected:
                    self.error(
                        "arity-mismatch",
                        f"aggregate has {len(rv.operands)} operands, expected {expected}",
                        span,
                    )
            for op in rv.operands:
                self.check_operand(op, body, params, span)
        elif isinstance(rv, ir.RvRef):
            self.place_ty(rv.place, body, span)
        else:
            self.error("bad-node", f"unknown rvalue {type(rv).__name__}", span)

    def check_call(self, call: ir.Call, body, params, span) -> None:
        if isinstance(call.func, ir.FnOpMove):
            self.place_ty(call.func.place, body, span)
        else:
            ptr = call.func.ptr
            expected_inputs: Optional[int] = None
            if isinstance(ptr.func, ir.FnFun):
                if not (0 <= ptr.func.fun_decl_id < len(self.crate.fun_decls)):
                    self.error(
                        "unresolved-id",
                        f"fun decl id {ptr.func.fun_decl_id} does not resolve",
                        span,
                    )
                else:
                    callee = self.crate.fun_decls[ptr.func.fun_decl_id]
                    self.check_args(
                        ptr.generics,
                        callee.signature.generics,
                        callee.meta.name_str,
                        params,
                        span,
                        in_trait=False,
                    )
                    expected_inputs = len(callee.signature.inputs)
            elif isinstance(ptr.func, ir.FnTraitMethod):
                self.check_trait_ref(ptr.func.trait_ref, params, span, in_trait=False)
            elif isinstance(ptr.func, ir.FnUnresolvedTraitMethod):
                if self.trait_decl(ptr.func.trait_decl_id) is None:
                    self.error(
                        "unresolved-id",
                        f"trait decl id {ptr.func.trait_decl_id} does not resolve",
                        span,
                    )
            for t in ptr.generics.types:
                self.check_ty(t, params, span, in_trait=False)
            if expected_inputs is not None and expected_inputs != len(call.args):
                self.error(
                    "call-arity",
                    f"call passes {len(call.args)} arguments, callee takes {expected_inputs}",
                    span,
                )
        for op in call.args:
            self.check_operand(op, body, params, span)
        self.place_ty(call.dest, body, span)

    # -- bodies -----------------------------------------------------------------

    def check_ullbc_body(self, decl: ir.FunDecl, body: ir.UllbcBody) -> None:
        sig = decl.signature
        params = sig.generics
        span = decl.meta.span
        if len(body.locals) < 1 + body.arg_count:
            self.error("locals-shape", "body lacks return slot or argument slots", span)
            return
        if body.arg_count != len(sig.inputs):
            self.error("locals-shape", "argument slot count differs from signature", span)
        else:
            if body.locals[0].ty != sig.output:
                self.error("locals-shape", "return slot type differs from signature output", span)
            for i, input_ty in enumerate(sig.inputs):
                if body.locals[1 + i].ty != input_ty:
                    self.error("locals-shape", f"argument slot #{i} type differs", span)
        for local in body.locals:
            self.check_ty(local.ty, params, span, in_trait=False)
        if not body.blocks:
            self.error("entry-missing", "body has no basic blocks", span)
            return
        n = len(body.blocks)
        for bid, block in enumerate(body.blocks):
            for stmt in block.statements:
                self.check_span(stmt.span)
                if not isinstance(stmt.kind, ir.ULLBC_STATEMENT_KINDS):
                    self.error(
                        "bad-node",
                        f"{type(stmt.kind).__name__} is not a CFG statement",
                        stmt.span,
                    )
                    continue
                self.check_ullbc_statement(stmt, body, params)
            term = block.terminator
            self.check_span(term.span)
            self.check_terminator(term, body, params, n)

    def check_ullbc_statement(self, stmt: ir.Statement, body, params) -> None:
        kind = stmt.kind
        if isinstance(kind, ir.SAssign):
            self.place_ty(kind.place, body, stmt.span)
            self.check_rvalue(kind.rvalue, body, params, stmt.span)
        elif isinstance(kind, ir.SDrop):
            self.place_ty(kind.place, body, stmt.span)

    def check_terminator(self, term: ir.Terminator, body, params, n_blocks: int) -> None:
        kind = term.kind
        span = term.span

        def check_target(bid: int) -> None:
            if not (0 <= bid < n_blocks):
                self.error("unresolved-id", f"block bb{bid} does not resolve", span)

        if isinstance(kind, ir.TGoto):
            check_target(kind.target)
        elif isinstance(kind, ir.TSwitchInt):
            ty = self.check_operand(kind.scrutinee, body, params, span)
            if ty is not None and not isinstance(ty, (ir.TyScalar, ir.TyBool, ir.TyVar)):
                self.error("type-mismatch", "switch scrutinee must be scalar or bool", span)
            values = [v for v, _ in kind.cases]
            if len(set(values)) != len(values):
                self.error("dup-switch-case", "duplicate switch case values", span)
            for _, bid in kind.cases:
                check_target(bid)
            check_target(kind.otherwise)
        elif isinstance(kind, ir.TMatch):
            ty = self.place_ty(kind.scrutinee, body, span)
            if ty is not None and isinstance(ty, ir.TyAdt):
                decl = self.type_decl(ty.decl_id)
                if decl is not None and isinstance(decl.kind, ir.EnumKind):
                    for vid, _ in kind.arms:
                        if not (0 <= vid < len(decl.kind.variants)):
                            self.error("unresolved-id", f"variant #{vid} out of range", span)
                else:
                    self.error("type-mismatch", "match scrutinee must be an enum", span)
            for _, bid in kind.arms:
                check_target(bid)
            if kind.otherwise is not None:
                check_target(kind.otherwise)
        elif isinstance(kind, ir.TAssert):
            ty = self.check_operand(kind.condition, body, params, span)
            if ty is not None and not isinstance(ty, (ir.TyBool, ir.TyVar)):
                self.error("type-mismatch", "assert condition must be bool", span)
            check_target(kind.target)
        elif isinstance(kind, ir.TCall):
            self.check_call(kind.call, body, params, span)
            check_target(kind.target)
        elif isinstance(kind, (ir.TReturn, ir.TAbort, ir.TUnreachable)):
            pass
        else:
            self.error("bad-node", f"unknown terminator {type(kind).__name__}", span)

    def check_llbc_body(self, decl: ir.FunDecl, body: ir.LlbcBody) -> None:
        sig = decl.signature
        span = decl.meta.span
        if len(body.locals) < 1 + body.arg_count or body.arg_count != len(sig.inputs):
            self.error("locals-shape", "locals do not cover return slot and arguments", span)
        for local in body.locals:
            self.check_ty(local.ty, sig.generics, span, in_trait=False)
        self.check_block(body.body, body, sig.generics, loop_depth=0)

    def check_block(self, block: ir.Block, body, params, loop_depth: int) -> None:
        for stmt in block.statements:
            self.check_span(stmt.span)
            kind = stmt.kind
            if isinstance(kind, ir.SAssign):
                self.place_ty(kind.place, body, stmt.span)
                self.check_rvalue(kind.rvalue, body, params, stmt.span)
            elif isinstance(kind, ir.SDrop):
                self.place_ty(kind.place, body, stmt.span)
            elif isinstance(kind, ir.SCall):
                self.check_call(kind.call, body, params, stmt.span)
            elif isinstance(kind, (ir.SBreak, ir.SContinue)):
                depth = kind.depth
                if depth >= loop_depth:
                    self.error(
                        "break-depth",
                        f"{type(kind).__name__[1:].lower()} depth {depth} exceeds "
                        f"nesting {loop_depth}",
                        stmt.span,
                    )
            elif isinstance(kind, ir.SLoop):
                self.check_block(kind.body, body, params, loop_depth + 1)
            elif isinstance(kind, ir.SSwitch):
                sw = kind.switch
                if isinstance(sw, ir.SwIf):
                    self.check_operand(sw.condition, body, params, stmt.span)
                    self.check_block(sw.then_block, body, params, loop_depth)
                    self.check_block(sw.else_block, body, params, loop_depth)
                elif isinstance(sw, ir.SwInt):
                    self.check_operand(sw.scrutinee, body, params, stmt.span)
                    values = [v for v, _ in sw.arms]
                    if len(set(values)) != len(values):
                        self.error("dup-switch-case", "duplicate switch case values", stmt.span)
                    for _, blk in sw.arms:
                        self.check_block(blk, body, params, loop_depth)
                    self.check_block(sw.otherwise, body, params, loop_depth)
                elif isinstance(sw, ir.SwMatch):
                    self.place_ty(sw.scrutinee, body, stmt.span)
                    for _, blk in sw.arms:
                        self.check_block(blk, body, params, loop_depth)
                    if sw.otherwise is not None:
                        self.check_block(sw.otherwise, body, params, loop_depth)

    # -- declarations -------------------------------------------------------------

    def check_dense_ids(self) -> None:
        tables = [
            ("type", self.crate.type_decls),
            ("fun", self.crate.fun_decls),
            ("trait", self.crate.trait_decls),
            ("impl", self.crate.trait_impls),
        ]
        for label, table in tables:
            for i, decl in enumerate(table):
                if decl.decl_id != i:
                    self.error(
                        "bad-node",
                        f"{label} table position {i} holds id {decl.decl_id}",
                        decl.meta.span,
                    )

    def check_type_decl(self, decl: ir.TypeDecl) -> None:
        span = decl.meta.span
        self.check_span(span)
        self.check_generic_params(decl.generics, span, in_trait=False)
        if isinstance(decl.kind, ir.StructKind):
            for f in decl.kind.fields:
                self.check_ty(f, decl.generics, span, in_trait=False)
        else:
            discrs = [v.discriminant for v in decl.kind.variants]
            if len(set(discrs)) != len(discrs):
                self.error("duplicate-discriminant", "enum discriminants must be distinct", span)
            for v in decl.kind.variants:
                for f in v.fields:
                    self.check_ty(f, decl.generics, span, in_trait=False)

    def check_fun_decl(self, decl: ir.FunDecl) -> None:
        self.function = decl.meta.name_str
        span = decl.meta.span
        self.check_span(span)
        sig = decl.signature
        self.check_generic_params(sig.generics, span, in_trait=False)
        for t in sig.inputs:
            self.check_ty(t, sig.generics, span, in_trait=False)
        self.check_ty(sig.output, sig.generics, span, in_trait=False)
        body = decl.body
        self._body = body
        if isinstance(body, ir.UllbcBody):
            self.check_ullbc_body(decl, body)
        elif isinstance(body, ir.LlbcBody):
            self.check_llbc_body(decl, body)
        self._body = None
        self.function = None

    def check_trait_decl(self, decl: ir.TraitDecl) -> None:
        span = decl.meta.span
        self.check_span(span)
        if not decl.generics.types:
            self.error("bad-node", "trait lacks the implicit Self type parameter", span)
        if decl.generics.trait_clauses:
            self.error(
                "bad-node",
                "trait-level where clauses are not supported; use parent clauses",
                span,
            )
        self.check_generic_params(decl.generics, span, in_trait=True)
        for clause in decl.parent_clauses:
            tdecl = self.trait_decl(clause.trait_decl_id)
            if tdecl is None:
                self.error("unresolved-id", "parent clause trait does not resolve", span)
                continue
            self.check_args(clause.args, tdecl.generics, tdecl.meta.name_str, decl.generics, span, in_trait=True)
        for assoc in decl.assoc_types:
            for bound in assoc.bounds:
                tdecl = self.trait_decl(bound.trait_decl_id)
                if tdecl is None:
                    self.error("unresolved-id", "assoc type bound trait does not resolve", span)
                    continue
                self.check_args(bound.args, tdecl.generics, tdecl.meta.name_str, decl.generics, span, in_trait=True)
        method_env_types = len(decl.generics.types)
        for method in decl.methods:
            sig = method.signature
            merged = ir.GenericParams(
                regions=decl.generics.regions + sig.generics.regions,
                types=decl.generics.types + sig.generics.types,
                const_generics=decl.generics.const_generics + sig.generics.const_generics,
                trait_clauses=sig.generics.trait_clauses,
            )
            for t in sig.inputs:
                self.check_ty(t, merged, span, in_trait=True)
            self.check_ty(sig.output, merged, span, in_trait=True)
        del method_env_types

    def check_trait_impl(self, impl: ir.TraitImpl) -> None:
        span = impl.meta.span
        self.check_span(span)
        self.check_generic_params(impl.generics, span, in_trait=False)
        trait = self.trait_decl(impl.trait_decl_id)
        if trait is None:
            self.error("unresolved-id", "implemented trait does not resolve", span)
            return
        self.check_args(
            impl.trait_args, trait.generics, trait.meta.name_str, impl.generics, span, in_trait=False
        )
        declared_assocs = {a.name for a in trait.assoc_types}
        provided_assocs = {n for n, _ in impl.assoc_values}
        if declared_assocs != provided_assocs:
            self.error(
                "impl-items",
                f"impl assoc types {sorted(provided_assocs)} differ from trait's "
                f"{sorted(declared_assocs)}",
                span,
            )
        declared_methods = {m.name for m in trait.methods}
        provided_methods = {n for n, _ in impl.methods}
        if declared_methods != provided_methods:
            self.error(
                "impl-items",
                f"impl methods {sorted(provided_methods)} differ from trait's "
                f"{sorted(declared_methods)}",
                span,
            )
        for _, fun_id in impl.methods:
            if not (0 <= fun_id < len(self.crate.fun_decls)):
                self.error("unresolved-id", f"impl method fun id {fun_id} does not resolve", span)
        for _, ty in impl.assoc_values:
            self.check_ty(ty, impl.generics, span, in_trait=False)
        # Impl-side unification requires every type parameter to be
        # determined by the implemented-trait head.
        used: set[int] = set()

        def collect(ty: ir.Ty) -> None:
            if isinstance(ty, ir.TyVar):
                used.add(ty.index)
            elif isinstance(ty, ir.TyAdt):
                for t in ty.args.types:
                    collect(t)
            elif isinstance(ty, ir.TyRef):
                collect(ty.inner)
            elif isinstance(ty, ir.TyTuple):
                for t in ty.items:
                    collect(t)

        for t in impl.trait_args.types:
            collect(t)
        missing = set(range(len(impl.generics.types))) - used
        if missing:
            self.error(
                "impl-unconstrained-param",
                f"impl type parameters {sorted(missing)} do not appear in the trait head",
                span,
            )

    def check_decl_groups(self) -> None:
        groups = self.crate.decl_groups
        if not groups:
            return
        seen: dict[ir.AnyDeclId, int] = {}
        for gi, group in enumerate(groups):
            for member in ir.group_members(group):
                if member in seen:
                    self.error("decl-groups", f"{member} appears in two groups")
                seen[member] = gi
        expected = set(self.crate.all_decl_ids())
        missing = expected - set(seen)
        extra = set(seen) - expected
        for m in sorted(missing, key=ir.AnyDeclId.sort_key):
            self.error("decl-groups", f"{m} missing from declaration groups")
        for m in sorted(extra, key=ir.AnyDeclId.sort_key):
            self.error("decl-groups", f"{m} does not name a declaration")
        if missing or extra:
            return
        # Topological property: all dependencies resolve at the same index or
        # earlier; same index only inside a Recursive group.
        from .passes import decl_dependencies  # local import: passes depend on ir only

        for gi, group in enumerate(groups):
            members = set(ir.group_members(group))
            for member in ir.group_members(group):
                for dep in decl_dependencies(self.crate, member):
                    if dep not in seen:
                        continue  # dangling ids reported elsewhere
                    if seen[dep] > gi or (seen[dep] == gi and dep not in members):
                        self.error(
                            "decl-groups",
                            f"{member} depends on {dep} in a later group",
                        )

    def run(self) -> list[Diagnostic]:
        self._body = None
        self.check_dense_ids()
        for decl in self.crate.type_decls:
            self.check_type_decl(decl)
        for decl in self.crate.trait_decls:
            self.check_trait_decl(decl)
        for impl in self.crate.trait_impls:
            self.check_trait_impl(impl)
        for decl in self.crate.fun_decls:
            self.check_fun_decl(decl)
        self.check_decl_groups()
        return self.diags


def validate_crate(crate: ir.TranslatedCrate) -> list[Diagnostic]:
    """Check every structural invariant; empty result means the crate is sound."""
    return _Validator(crate).run()
