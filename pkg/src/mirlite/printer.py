"""Canonical text rendering of crates.

CFG-form crates render to valid MIR-lite: parsing the output reproduces the
crate structurally (spans aside). Structured bodies render to the same
surface syntax with `loop`/`if`/`switch`/`match`/`break`/`continue` blocks;
those are for humans and golden files, not for re-parsing.

Output is deterministic: declarations print in id order, types first, then
traits, impls, and functions.
"""

from __future__ import annotations

from typing import Optional

from . import ir


class _Printer:
    def __init__(self, crate: ir.TranslatedCrate):
        self.crate = crate
        self.lines: list[str] = []
        self.indent = 0

    def emit(self, text: str = "") -> None:
        self.lines.append("  " * self.indent + text if text else "")

    # -- names -------------------------------------------------------------------

    def type_name(self, decl_id: int) -> str:
        return self.crate.type_decls[decl_id].meta.name_str

    def variant_name(self, decl_id: int, variant: int) -> Optional[str]:
        decl = self.crate.type_decls[decl_id]
        if isinstance(decl.kind, ir.EnumKind) and 0 <= variant < len(decl.kind.variants):
            return decl.kind.variants[variant].name
        return None

    # -- types ---------------------------------------------------------------------

    def ty(self, t: ir.Ty, names: tuple[str, ...]) -> str:
        if isinstance(t, ir.TyScalar):
            return t.kind.value
        if isinstance(t, ir.TyBool):
            return "bool"
        if isinstance(t, ir.TyVar):
            return names[t.index] if t.index < len(names) else f"T{t.index}"
        if isinstance(t, ir.TyTuple):
            return "(" + ", ".join(self.ty(i, names) for i in t.items) + ")"
        if isinstance(t, ir.TyRef):
            mut = "mut " if t.mutable else ""
            return f"&{t.region} {mut}{self.ty(t.inner, names)}"
        if isinstance(t, ir.TyAdt):
            return self.type_name(t.decl_id) + self.args(t.args, names)
        if isinstance(t, ir.TyAssoc):
            if isinstance(t.base, ir.SelfRef):
                return f"Self::{t.item}"
            return "{" + self.trait_ref(t.base, names) + "}::" + t.item
        raise TypeError(f"not a type: {t!r}")

    def const_value(self, cv: ir.ConstantValue, names: tuple[str, ...]) -> str:
        kind = cv.kind
        if isinstance(kind, ir.CScalar):
            assert isinstance(cv.ty, ir.TyScalar)
            return f"{kind.value}: {cv.ty.kind.value}"
        if isinstance(kind, ir.CBool):
            return "true" if kind.value else "false"
        if isinstance(kind, ir.CRaw):
            return f"raw({kind.data.hex()}): {self.ty(cv.ty, names)}"
        assert isinstance(kind, ir.CAdt)
        if isinstance(cv.ty, ir.TyTuple) and not kind.fields and kind.variant is None:
            return "()"
        fields = "(" + ", ".join(self.const_value(f, names) for f in kind.fields) + ")"
        head = self.ty(cv.ty, names)
        if kind.variant is not None and isinstance(cv.ty, ir.TyAdt):
            vname = self.variant_name(cv.ty.decl_id, kind.variant)
            head += f"::{vname}"
        return head + fields

    def args(self, a: ir.GenericArgs, names: tuple[str, ...]) -> str:
        if a.is_empty():
            return ""
        parts = list(a.regions)
        parts += [self.ty(t, names) for t in a.types]
        parts += [self.const_value(c, names) for c in a.const_generics]
        body = ", ".join(parts)
        if a.trait_refs:
            refs = ", ".join(self.trait_ref(r, names) for r in a.trait_refs)
            body = f"{body}; {refs}" if body else f"; {refs}"
        return f"<{body}>"

    def trait_ref(self, ref: ir.TraitRefKind, names: tuple[str, ...]) -> str:
        if isinstance(ref, ir.TraitImplRef):
            return f"impl#{ref.impl_id}" + self.args(ref.args, names)
        if isinstance(ref, ir.ClauseRef):
            return f"clause#{ref.clause_id}"
        if isinstance(ref, ir.ParentClauseRef):
            return f"parent({self.trait_ref(ref.base, names)}, {ref.index})"
        if isinstance(ref, ir.ItemClauseRef):
            return f"item({self.trait_ref(ref.base, names)}, {ref.item}, {ref.index})"
        if isinstance(ref, ir.SelfRef):
            return "Self"
        raise TypeError(f"not a trait ref: {ref!r}")

    # -- generics --------------------------------------------------------------------

    def generic_params(self, params: ir.GenericParams, *, skip_self: bool = False) -> str:
        parts = list(params.regions)
        parts += list(params.types[1:] if skip_self else params.types)
        parts += [f"const {c.name}: {c.kind.value}" for c in params.const_generics]
        return f"<{', '.join(parts)}>" if parts else ""

    def where_clause(
        self, params: ir.GenericParams, names: tuple[str, ...]
    ) -> str:
        parts = []
        for clause in params.trait_clauses:
            trait = self.crate.trait_decls[clause.trait_decl_id]
            rest = ir.GenericArgs(
                regions=clause.args.regions,
                types=clause.args.types[1:],
                const_generics=clause.args.const_generics,
                trait_refs=clause.args.trait_refs,
            )
            parts.append(
                f"{self.ty(clause.args.types[0], names)}: {trait.meta.name_str}"
                + self.args(rest, names)
            )
        for c in params.trait_type_constraints:
            lhs = self.ty(ir.TyAssoc(c.trait_ref, c.item), names)
            parts.append(f"{lhs} = {self.ty(c.ty, names)}")
        for r1, r2 in params.regions_outlive:
            parts.append(f"{r1}: {r2}")
        for t, r in params.types_outlive:
            parts.append(f"{self.ty(t, names)}: {r}")
        return " where " + ", ".join(parts) if parts else ""

    # -- places / operands / rvalues -----------------------------------------------------

    def place(self, p: ir.Place, body: ir.Body, names: tuple[str, ...]) -> str:
        text = body.locals[p.local].name
        ty: Optional[ir.Ty] = body.locals[p.local].ty
        for proj in p.projections:
            if isinstance(proj, ir.ProjDeref):
                text = f"*{text}"
            else:
                if text.startswith("*"):
                    text = f"({text})"
                if isinstance(proj, ir.ProjField):
                    text += f".f{proj.index}"
                elif isinstance(proj, ir.ProjDowncast):
                    vname = None
                    if isinstance(ty, ir.TyAdt):
                        vname = self.variant_name(ty.decl_id, proj.variant)
                    text += f".as {vname if vname is not None else proj.variant}"
                elif isinstance(proj, ir.ProjIndex):
                    text += f"[{self.operand(proj.offset, body, names)}]"
            ty = self._proj_ty(ty, proj)
        return text

    def _proj_ty(self, ty: Optional[ir.Ty], proj: ir.Projection) -> Optional[ir.Ty]:
        if ty is None:
            return None
        if isinstance(proj, ir.ProjDeref):
            return ty.inner if isinstance(ty, ir.TyRef) else None
        if isinstance(proj, ir.ProjField):
            if isinstance(ty, ir.TyTuple) and proj.index < len(ty.items):
                return ty.items[proj.index]
            if isinstance(ty, ir.TyAdt):
                decl = self.crate.type_decls[ty.decl_id]
                if isinstance(decl.kind, ir.StructKind) and proj.index < len(decl.kind.fields):
                    return ir.substitute(decl.kind.fields[proj.index], ty.args)
            return None
        if isinstance(proj, ir.ProjDowncast):
            if isinstance(ty, ir.TyAdt):
                decl = self.crate.type_decls[ty.decl_id]
                if isinstance(decl.kind, ir.EnumKind) and proj.variant < len(decl.kind.variants):
                    variant = decl.kind.variants[proj.variant]
                    return ir.TyTuple(tuple(ir.substitute(f, ty.args) for f in variant.fields))
            return None
        if isinstance(proj, ir.ProjIndex):
            if isinstance(ty, ir.TyTuple) and ty.items:
                return ty.items[0]
            return None
        return None

    def operand(self, op: ir.Operand, body: ir.Body, names: tuple[str, ...]) -> str:
        if isinstance(op, ir.OpMove):
            return f"move {self.place(op.place, body, names)}"
        if isinstance(op, ir.OpCopy):
            return f"copy {self.place(op.place, body, names)}"
        return f"const {self.const_value(op.value, names)}"

    def rvalue(self, rv: ir.Rvalue, body: ir.Body, names: tuple[str, ...]) -> str:
        if isinstance(rv, ir.RvUse):
            return f"use {self.operand(rv.operand, body, names)}"
        if isinstance(rv, ir.RvBinOp):
            return (
                f"{rv.op.value}({self.operand(rv.lhs, body, names)}, "
                f"{self.operand(rv.rhs, body, names)})"
            )
        if isinstance(rv, ir.RvUnOp):
            return f"{rv.op.value}({self.operand(rv.operand, body, names)})"
        if isinstance(rv, ir.RvDiscriminant):
            return f"discriminant({self.place(rv.place, body, names)})"
        if isinstance(rv, ir.RvAggregate):
            decl = self.crate.type_decls[rv.decl_id]
            head = decl.meta.name_str
            # Aggregates do not record their instantiation; the declared
            # name plus variant is canonical.
            if rv.variant is not None:
                head += f"::{self.variant_name(rv.decl_id, rv.variant)}"
            ops = ", ".join(self.operand(o, body, names) for o in rv.operands)
            return f"agg {head}({ops})"
        if isinstance(rv, ir.RvRef):
            mut = "mut " if rv.mutable else ""
            return f"&{mut}{self.place(rv.place, body, names)}"
        raise TypeError(f"not an rvalue: {rv!r}")

    def callee(self, func: ir.FnOperand, body: ir.Body, names: tuple[str, ...]) -> str:
        if isinstance(func, ir.FnOpMove):
            return f"move {self.place(func.place, body, names)}"
        ptr = func.ptr
        gen = f"::{self.args(ptr.generics, names)}" if not ptr.generics.is_empty() else ""
        if isinstance(ptr.func, ir.FnFun):
            return self.crate.fun_decls[ptr.func.fun_decl_id].meta.name_str + gen
        if isinstance(ptr.func, ir.FnTraitMethod):
            return "{" + self.trait_ref(ptr.func.trait_ref, names) + "}::" + ptr.func.method + gen
        trait = self.crate.trait_decls[ptr.func.trait_decl_id]
        return f"{trait.meta.name_str}::{ptr.func.method}{gen}"

    # -- statements -----------------------------------------------------------------------

    def statement_prefix(self, stmt: ir.Statement) -> str:
        for comment in stmt.comments:
            self.emit(f"// {comment}")
        return "".join(f"#[{a}] " for a in stmt.attributes)

    def simple_statement(self, stmt: ir.Statement, body: ir.Body, names) -> Optional[str]:
        kind = stmt.kind
        if isinstance(kind, ir.SAssign):
            return f"{self.place(kind.place, body, names)} = {self.rvalue(kind.rvalue, body, names)};"
        if isinstance(kind, ir.SDrop):
            return f"drop {self.place(kind.place, body, names)};"
        if isinstance(kind, ir.SNop):
            return "nop;"
        if isinstance(kind, ir.SCall):
            call = kind.call
            args = ", ".join(self.operand(a, body, names) for a in call.args)
            return (
                f"{self.place(call.dest, body, names)} = "
                f"call {self.callee(call.func, body, names)}({args});"
            )
        if isinstance(kind, ir.SAbort):
            return f"abort {kind.kind.value};"
        if isinstance(kind, ir.SReturn):
            return "return;"
        if isinstance(kind, ir.SBreak):
            return f"break {kind.depth};"
        if isinstance(kind, ir.SContinue):
            return f"continue {kind.depth};"
        return None

    # -- CFG bodies ---------------------------------------------------------------------------

    def ullbc_body(self, body: ir.UllbcBody, names: tuple[str, ...]) -> None:
        self.emit("{")
        self.indent += 1
        for local in body.locals[1 + body.arg_count :]:
            self.emit(f"let {local.name}: {self.ty(local.ty, names)};")
        for bid, block in enumerate(body.blocks):
            self.emit(f"bb{bid}: {{")
            self.indent += 1
            for stmt in block.statements:
                prefix = self.statement_prefix(stmt)
                line = self.simple_statement(stmt, body, names)
                assert line is not None, "CFG bodies carry simple statements only"
                self.emit(prefix + line)
            self.terminator(block.terminator, body, names)
            self.indent -= 1
            self.emit("}")
        self.indent -= 1
        self.emit("}")

    def terminator(self, term: ir.Terminator, body: ir.UllbcBody, names) -> None:
        for comment in term.comments:
            self.emit(f"// {comment}")
        kind = term.kind
        if isinstance(kind, ir.TGoto):
            self.emit(f"goto bb{kind.target};")
        elif isinstance(kind, ir.TSwitchInt):
            cases = "".join(f"{v} -> bb{b}, " for v, b in kind.cases)
            self.emit(
                f"switch {self.operand(kind.scrutinee, body, names)} "
                f"{{ {cases}otherwise -> bb{kind.otherwise} }};"
            )
        elif isinstance(kind, ir.TMatch):
            scrutinee_ty = self._place_ty(kind.scrutinee, body)
            arms = []
            for vid, b in kind.arms:
                vname: object = vid
                if isinstance(scrutinee_ty, ir.TyAdt):
                    named = self.variant_name(scrutinee_ty.decl_id, vid)
                    vname = named if named is not None else vid
                arms.append(f"{vname} -> bb{b}")
            if kind.otherwise is not None:
                arms.append(f"otherwise -> bb{kind.otherwise}")
            self.emit(
                f"match {self.place(kind.scrutinee, body, names)} {{ {', '.join(arms)} }};"
            )
        elif isinstance(kind, ir.TAssert):
            expected = "true" if kind.expected else "false"
            self.emit(
                f"assert {self.operand(kind.condition, body, names)} == {expected} "
                f"-> bb{kind.target};"
            )
        elif isinstance(kind, ir.TCall):
            call = kind.call
            args = ", ".join(self.operand(a, body, names) for a in call.args)
            self.emit(
                f"{self.place(call.dest, body, names)} = "
                f"call {self.callee(call.func, body, names)}({args}) -> bb{kind.target};"
            )
        elif isinstance(kind, ir.TReturn):
            self.emit("return;")
        elif isinstance(kind, ir.TAbort):
            self.emit(f"abort {kind.kind.value};")
        elif isinstance(kind, ir.TUnreachable):
            self.emit("unreachable;")
        else:
            raise TypeError(f"not a terminator: {kind!r}")

    def _place_ty(self, place: ir.Place, body: ir.Body) -> Optional[ir.Ty]:
        ty: Optional[ir.Ty] = body.locals[place.local].ty
        for proj in place.projections:
            ty = self._proj_ty(ty, proj)
        return ty

    # -- structured bodies ------------------------------------------------------------------------

    def llbc_body(self, body: ir.LlbcBody, names: tuple[str, ...]) -> None:
        self.emit("{")
        self.indent += 1
        for local in body.locals[1 + body.arg_count :]:
            self.emit(f"let {local.name}: {self.ty(local.ty, names)};")
        self.block(body.body, body, names)
        self.indent -= 1
        self.emit("}")

    def block(self, block: ir.Block, body: ir.LlbcBody, names) -> None:
        self.emit("{")
        self.indent += 1
        for stmt in block.statements:
            self.structured_statement(stmt, body, names)
        self.indent -= 1
        self.emit("}")

    def inline_block(self, label: str, block: ir.Block, body, names) -> None:
        self.emit(label + " {")
        self.indent += 1
        for stmt in block.statements:
            self.structured_statement(stmt, body, names)
        self.indent -= 1

    def structured_statement(self, stmt: ir.Statement, body: ir.LlbcBody, names) -> None:
        prefix = self.statement_prefix(stmt)
        line = self.simple_statement(stmt, body, names)
        if line is not None:
            self.emit(prefix + line)
            return
        kind = stmt.kind
        if isinstance(kind, ir.SLoop):
            self.inline_block(prefix + "loop", kind.body, body, names)
            self.emit("}")
            return
        assert isinstance(kind, ir.SSwitch)
        sw = kind.switch
        if isinstance(sw, ir.SwIf):
            self.inline_block(
                prefix + f"if {self.operand(sw.condition, body, names)}",
                sw.then_block, body, names,
            )
            self.inline_block("} else", sw.else_block, body, names)
            self.emit("}")
        elif isinstance(sw, ir.SwInt):
            self.emit(prefix + f"switch {self.operand(sw.scrutinee, body, names)} {{")
            self.indent += 1
            for value, blk in sw.arms:
                self.inline_block(f"{value} ->", blk, body, names)
                self.emit("}")
            self.inline_block("otherwise ->", sw.otherwise, body, names)
            self.emit("}")
            self.indent -= 1
            self.emit("}")
        else:
            assert isinstance(sw, ir.SwMatch)
            scrutinee_ty = self._place_ty(sw.scrutinee, body)
            self.emit(prefix + f"match {self.place(sw.scrutinee, body, names)} {{")
            self.indent += 1
            for vid, blk in sw.arms:
                vname: object = vid
                if isinstance(scrutinee_ty, ir.TyAdt):
                    named = self.variant_name(scrutinee_ty.decl_id, vid)
                    vname = named if named is not None else vid
                self.inline_block(f"{vname} ->", blk, body, names)
                self.emit("}")
            if sw.otherwise is not None:
                self.inline_block("otherwise ->", sw.otherwise, body, names)
                self.emit("}")
            self.indent -= 1
            self.emit("}")

    # -- declarations --------------------------------------------------------------------------------

    def print_type_decl(self, decl: ir.TypeDecl) -> None:
        for attr in decl.meta.attributes:
            self.emit(f"#[{attr}]")
        names = decl.generics.types
        head = f"type {decl.meta.name_str}{self.generic_params(decl.generics)} = "
        if isinstance(decl.kind, ir.StructKind):
            fields = ", ".join(self.ty(f, names) for f in decl.kind.fields)
            self.emit(head + "struct { " + fields + " }")
        else:
            self.emit(head + "enum {")
            self.indent += 1
            for v in decl.kind.variants:
                fields = (
                    " { " + ", ".join(self.ty(f, names) for f in v.fields) + " }"
                    if v.fields
                    else ""
                )
                self.emit(f"{v.name}{fields} = {v.discriminant},")
            self.indent -= 1
            self.emit("}")
        self.emit()

    def print_trait_decl(self, decl: ir.TraitDecl) -> None:
        for attr in decl.meta.attributes:
            self.emit(f"#[{attr}]")
        names = decl.generics.types
        head = f"trait {decl.meta.name_str}{self.generic_params(decl.generics, skip_self=True)}"
        if decl.parent_clauses:
            parents = []
            for clause in decl.parent_clauses:
                trait = self.crate.trait_decls[clause.trait_decl_id]
                rest = ir.GenericArgs(
                    regions=clause.args.regions,
                    types=clause.args.types[1:],
                    const_generics=clause.args.const_generics,
                )
                parents.append(trait.meta.name_str + self.args(rest, names))
            head += ": " + " + ".join(parents)
        self.emit(head + " {")
        self.indent += 1
        for assoc in decl.assoc_types:
            bounds = []
            for bound in assoc.bounds:
                trait = self.crate.trait_decls[bound.trait_decl_id]
                rest = ir.GenericArgs(
                    regions=bound.args.regions,
                    types=bound.args.types[1:],
                    const_generics=bound.args.const_generics,
                )
                bounds.append(trait.meta.name_str + self.args(rest, names))
            suffix = ": " + " + ".join(bounds) if bounds else ""
            self.emit(f"type {assoc.name}{suffix};")
        for method in decl.methods:
            sig = method.signature
            merged_names = names + sig.generics.types
            params = ", ".join(
                f"x{i}: {self.ty(t, merged_names)}" for i, t in enumerate(sig.inputs)
            )
            self.emit(
                f"fn {method.name}{self.generic_params(sig.generics)}({params}) -> "
                f"{self.ty(sig.output, merged_names)}"
                f"{self.where_clause(sig.generics, merged_names)};"
            )
        self.indent -= 1
        self.emit("}")
        self.emit()

    def print_trait_impl(self, impl: ir.TraitImpl) -> None:
        for attr in impl.meta.attributes:
            self.emit(f"#[{attr}]")
        names = impl.generics.types
        trait = self.crate.trait_decls[impl.trait_decl_id]
        rest = ir.GenericArgs(
            regions=impl.trait_args.regions,
            types=impl.trait_args.types[1:],
            const_generics=impl.trait_args.const_generics,
        )
        self.emit(
            f"impl{self.generic_params(impl.generics)} {trait.meta.name_str}"
            f"{self.args(rest, names)} for {self.ty(impl.trait_args.types[0], names)}"
            f"{self.where_clause(impl.generics, names)} {{"
        )
        self.indent += 1
        for name, ty in impl.assoc_values:
            self.emit(f"type {name} = {self.ty(ty, names)};")
        for name, fun_id in impl.methods:
            self.emit(f"fn {name} = {self.crate.fun_decls[fun_id].meta.name_str};")
        self.indent -= 1
        self.emit("}")
        self.emit()

    def print_fun_decl(self, decl: ir.FunDecl) -> None:
        for attr in decl.meta.attributes:
            self.emit(f"#[{attr}]")
        sig = decl.signature
        names = sig.generics.types
        body = decl.body
        if body is not None:
            param_names = [local.name for local in body.locals[1 : 1 + body.arg_count]]
        else:
            param_names = [f"x{i}" for i in range(len(sig.inputs))]
        params = ", ".join(
            f"{n}: {self.ty(t, names)}" for n, t in zip(param_names, sig.inputs)
        )
        head = (
            f"fn {decl.meta.name_str}{self.generic_params(sig.generics)}({params}) -> "
            f"{self.ty(sig.output, names)}{self.where_clause(sig.generics, names)}"
        )
        if body is None:
            self.emit(head + ";")
        else:
            self.emit(head)
            if isinstance(body, ir.UllbcBody):
                self.ullbc_body(body, names)
            else:
                self.llbc_body(body, names)
        self.emit()

    def run(self) -> str:
        for decl in self.crate.type_decls:
            self.print_type_decl(decl)
        for decl in self.crate.trait_decls:
            self.print_trait_decl(decl)
        for impl in self.crate.trait_impls:
            self.print_trait_impl(impl)
        for decl in self.crate.fun_decls:
            self.print_fun_decl(decl)
        while self.lines and not self.lines[-1]:
            self.lines.pop()
        return "\n".join(self.lines) + ("\n" if self.lines else "")


def pretty_print(crate: ir.TranslatedCrate) -> str:
    """Render a crate as canonical MIR-lite text (empty crate gives empty text)."""
    return _Printer(crate).run()
