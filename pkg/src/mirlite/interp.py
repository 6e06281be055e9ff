"""Fuel-bounded interpreters for both body forms.

These are the semantic oracle for the cleanup passes and for control-flow
restructuring: a program is executed once over the CFG form and once over the
structured form, and the outcomes must agree exactly. Outcomes are program
results (`Returned`, `Aborted`, `OutOfFuel`); anything else raises
`InterpError` and indicates a broken test program, not program behavior.

Calls to functions in the configured panic set abort with a panic without
entering the callee, mirroring what the panic-unification pass makes
explicit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import ir, traits

DEFAULT_FUEL = 1_000_000

DEFAULT_PANIC_FNS = (
    "core::panicking::panic",
    "core::panicking::panic_fmt",
    "std::panic::begin_panic",
)


class InterpError(Exception):
    """Interpreter-level failure (corpus bug), never a program outcome."""

    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


# -- runtime values ----------------------------------------------------------


@dataclass(frozen=True)
class VInt:
    kind: ir.ScalarKind
    value: int


@dataclass(frozen=True)
class VBool:
    value: bool


class VAdt:
    """Aggregate value; fields are mutable in place (writes through paths)."""

    __slots__ = ("variant", "fields")

    def __init__(self, variant: Optional[int], fields: list):
        self.variant = variant
        self.fields = fields

    def __repr__(self):
        return f"VAdt({self.variant}, {self.fields})"


@dataclass(frozen=True)
class VRef:
    frame: int
    local: int
    path: tuple


class VMoved:
    __slots__ = ()

    def __repr__(self):
        return "VMoved"


MOVED = VMoved()

Value = Union[VInt, VBool, VAdt, VRef]


def freeze(value) -> tuple:
    """Immutable snapshot used for outcome comparison."""
    if isinstance(value, VInt):
        return ("int", value.kind.value, value.value)
    if isinstance(value, VBool):
        return ("bool", value.value)
    if isinstance(value, VAdt):
        return ("adt", value.variant, tuple(freeze(f) for f in value.fields))
    if isinstance(value, VRef):
        return ("ref", value.frame, value.local, value.path)
    if isinstance(value, VMoved):
        return ("moved",)
    raise InterpError("type-mismatch", f"cannot freeze {value!r}")


def copy_value(value):
    if isinstance(value, VAdt):
        return VAdt(value.variant, [copy_value(f) for f in value.fields])
    return value


def value_of_constant(cv: ir.ConstantValue) -> Value:
    kind = cv.kind
    if isinstance(kind, ir.CScalar):
        assert isinstance(cv.ty, ir.TyScalar)
        return VInt(cv.ty.kind, kind.value)
    if isinstance(kind, ir.CBool):
        return VBool(kind.value)
    if isinstance(kind, ir.CAdt):
        return VAdt(kind.variant, [value_of_constant(f) for f in kind.fields])
    raise InterpError("raw-constant", "cannot evaluate an undecoded constant")


# -- outcomes -----------------------------------------------------------------


@dataclass(frozen=True)
class Returned:
    value: tuple  # frozen


@dataclass(frozen=True)
class Aborted:
    kind: ir.AbortKind


@dataclass(frozen=True)
class OutOfFuel:
    pass


Outcome = Union[Returned, Aborted, OutOfFuel]


class _AbortSignal(Exception):
    def __init__(self, kind: ir.AbortKind):
        self.kind = kind


class _FuelSignal(Exception):
    pass


class _BreakSignal(Exception):
    def __init__(self, depth: int):
        self.depth = depth


class _ContinueSignal(Exception):
    def __init__(self, depth: int):
        self.depth = depth


class _ReturnSignal(Exception):
    pass


# -- frames --------------------------------------------------------------------


class Frame:
    __slots__ = ("decl", "slots", "types", "generics", "alive")

    def __init__(self, decl: ir.FunDecl, body: ir.Body, generics: ir.GenericArgs):
        self.decl = decl
        self.generics = generics
        if generics.types or generics.const_generics:
            self.types = [ir.substitute(l.ty, generics) for l in body.locals]
        else:
            self.types = [l.ty for l in body.locals]
        self.slots: list = [None] * len(body.locals)
        self.alive = True


class Interp:
    def __init__(
        self,
        crate: ir.TranslatedCrate,
        fuel: int = DEFAULT_FUEL,
        panic_fns: tuple[str, ...] = DEFAULT_PANIC_FNS,
    ):
        self.crate = crate
        self.fuel = fuel
        self.panic_fns = set(panic_fns)
        self.frames: list[Frame] = []

    # -- fuel -----------------------------------------------------------------

    def tick(self) -> None:
        if self.fuel <= 0:
            raise _FuelSignal()
        self.fuel -= 1

    # -- place access ------------------------------------------------------------

    def resolve_place(self, fidx: int, place: ir.Place) -> tuple[int, int, list]:
        frame = self.frames[fidx]
        cur = (fidx, place.local, [])
        for proj in place.projections:
            if isinstance(proj, ir.ProjDeref):
                value = self.fetch(*cur)
                if not isinstance(value, VRef):
                    raise InterpError("type-mismatch", "deref of a non-reference value")
                if not (0 <= value.frame < len(self.frames)) or not self.frames[value.frame].alive:
                    raise InterpError("type-mismatch", "reference into a dead frame")
                cur = (value.frame, value.local, list(value.path))
            elif isinstance(proj, ir.ProjField):
                cur[2].append(("f", proj.index))
            elif isinstance(proj, ir.ProjDowncast):
                cur[2].append(("d", proj.variant))
            else:
                off = self.eval_operand(fidx, proj.offset)
                if not isinstance(off, VInt) or off.kind.signed:
                    raise InterpError("type-mismatch", "index offset must be unsigned")
                cur[2].append(("i", off.value))
        del frame
        return cur

    def fetch(self, fidx: int, local: int, path: list):
        value = self.frames[fidx].slots[local]
        if value is None:
            raise InterpError("uninit-read", f"local #{local} read before init")
        for step in path:
            if isinstance(value, VMoved):
                raise InterpError("use-after-move")
            tag, arg = step
            if tag == "d":
                if not isinstance(value, VAdt) or value.variant != arg:
                    raise InterpError("type-mismatch", "downcast to the wrong variant")
                continue
            if not isinstance(value, VAdt):
                raise InterpError("type-mismatch", "projection into a non-aggregate")
            if tag == "i":
                if arg >= len(value.fields):
                    raise _AbortSignal(ir.AbortKind.PANIC)  # bounds check
                value = value.fields[arg]
            else:
                if arg >= len(value.fields):
                    raise InterpError("type-mismatch", f"field #{arg} out of range")
                value = value.fields[arg]
        if isinstance(value, VMoved):
            raise InterpError("use-after-move")
        return value

    def store(self, fidx: int, local: int, path: list, value) -> None:
        frame = self.frames[fidx]
        if not path:
            frame.slots[local] = value
            return
        container = frame.slots[local]
        if container is None:
            raise InterpError("uninit-read", "write through an uninitialized aggregate")
        *steps, last = path
        for step in steps:
            tag, arg = step
            if tag == "d":
                if not isinstance(container, VAdt) or container.variant != arg:
                    raise InterpError("type-mismatch", "downcast to the wrong variant")
                continue
            if not isinstance(container, VAdt):
                raise InterpError("type-mismatch", "projection into a non-aggregate")
            if tag == "i" and arg >= len(container.fields):
                raise _AbortSignal(ir.AbortKind.PANIC)
            container = container.fields[arg]
        tag, arg = last
        if tag == "d":
            raise InterpError("type-mismatch", "cannot write to a downcast directly")
        if not isinstance(container, VAdt):
            raise InterpError("type-mismatch", "projection into a non-aggregate")
        if arg >= len(container.fields):
            if tag == "i":
                raise _AbortSignal(ir.AbortKind.PANIC)
            raise InterpError("type-mismatch", f"field #{arg} out of range")
        container.fields[arg] = value

    def read_place(self, fidx: int, place: ir.Place, *, move: bool):
        loc = self.resolve_place(fidx, place)
        value = self.fetch(*loc)
        if move:
            self.store(loc[0], loc[1], loc[2], MOVED)
            return value
        return copy_value(value)

    def write_place(self, fidx: int, place: ir.Place, value) -> None:
        loc = self.resolve_place(fidx, place)
        self.store(loc[0], loc[1], loc[2], value)

    # -- static typing (for discriminants and bool switches) ----------------------

    def place_static_ty(self, fidx: int, place: ir.Place) -> Optional[ir.Ty]:
        frame = self.frames[fidx]
        ty: Optional[ir.Ty] = frame.types[place.local]
        for proj in place.projections:
            if ty is None:
                return None
            if isinstance(proj, ir.ProjDeref):
                ty = ty.inner if isinstance(ty, ir.TyRef) else None
            elif isinstance(proj, ir.ProjField):
                if isinstance(ty, ir.TyTuple) and proj.index < len(ty.items):
                    ty = ty.items[proj.index]
                elif isinstance(ty, ir.TyAdt):
                    decl = self.crate.type_decls[ty.decl_id]
                    if isinstance(decl.kind, ir.StructKind) and proj.index < len(decl.kind.fields):
                        ty = ir.substitute(decl.kind.fields[proj.index], ty.args)
                    else:
                        ty = None
                else:
                    ty = None
            elif isinstance(proj, ir.ProjDowncast):
                if isinstance(ty, ir.TyAdt):
                    decl = self.crate.type_decls[ty.decl_id]
                    if isinstance(decl.kind, ir.EnumKind) and proj.variant < len(decl.kind.variants):
                        variant = decl.kind.variants[proj.variant]
                        ty = ir.TyTuple(tuple(ir.substitute(f, ty.args) for f in variant.fields))
                    else:
                        ty = None
                else:
                    ty = None
            else:
                ty = ty.items[0] if isinstance(ty, ir.TyTuple) and ty.items else None
        return ty

    # -- operands and rvalues --------------------------------------------------------

    def eval_operand(self, fidx: int, op: ir.Operand):
        if isinstance(op, ir.OpConst):
            return value_of_constant(op.value)
        if isinstance(op, ir.OpCopy):
            return self.read_place(fidx, op.place, move=False)
        return self.read_place(fidx, op.place, move=True)

    def eval_rvalue(self, fidx: int, rv: ir.Rvalue):
        if isinstance(rv, ir.RvUse):
            return self.eval_operand(fidx, rv.operand)
        if isinstance(rv, ir.RvBinOp):
            lhs = self.eval_operand(fidx, rv.lhs)
            rhs = self.eval_operand(fidx, rv.rhs)
            return eval_binop(rv.op, lhs, rhs)
        if isinstance(rv, ir.RvUnOp):
            value = self.eval_operand(fidx, rv.operand)
            if rv.op is ir.UnOp.NOT:
                if not isinstance(value, VBool):
                    raise InterpError("type-mismatch", "not() expects bool")
                return VBool(not value.value)
            if not isinstance(value, VInt) or not value.kind.signed:
                raise InterpError("type-mismatch", "neg() expects a signed scalar")
            return VInt(value.kind, value.kind.wrap(-value.value))
        if isinstance(rv, ir.RvDiscriminant):
            value = self.fetch(*self.resolve_place(fidx, rv.place))
            if not isinstance(value, VAdt) or value.variant is None:
                raise InterpError("type-mismatch", "discriminant of a non-enum value")
            ty = self.place_static_ty(fidx, rv.place)
            if not isinstance(ty, ir.TyAdt):
                raise InterpError("type-mismatch", "cannot type discriminant place")
            decl = self.crate.type_decls[ty.decl_id]
            assert isinstance(decl.kind, ir.EnumKind)
            discr = decl.kind.variants[value.variant].discriminant
            return VInt(ir.ScalarKind.U32, discr)
        if isinstance(rv, ir.RvAggregate):
            fields = [self.eval_operand(fidx, op) for op in rv.operands]
            return VAdt(rv.variant, fields)
        if isinstance(rv, ir.RvRef):
            loc = self.resolve_place(fidx, rv.place)
            return VRef(loc[0], loc[1], tuple(loc[2]))
        raise InterpError("type-mismatch", f"cannot evaluate {type(rv).__name__}")

    # -- statements shared by both executors ---------------------------------------------

    def exec_simple(self, fidx: int, kind: ir.StatementKind) -> bool:
        """Execute a statement kind common to both forms; False if not simple."""
        if isinstance(kind, ir.SAssign):
            value = self.eval_rvalue(fidx, kind.rvalue)
            self.write_place(fidx, kind.place, value)
            return True
        if isinstance(kind, ir.SDrop):
            loc = self.resolve_place(fidx, kind.place)
            if not loc[2]:
                self.frames[loc[0]].slots[loc[1]] = None  # whole local: back to uninit
            else:
                self.store(loc[0], loc[1], loc[2], MOVED)
            return True
        if isinstance(kind, ir.SNop):
            return True
        return False

    # -- calls ----------------------------------------------------------------------------

    def concretize_args(self, fidx: int, args: ir.GenericArgs) -> ir.GenericArgs:
        frame = self.frames[fidx]
        if frame.generics.is_empty():
            return args
        types = tuple(ir.substitute(t, frame.generics) for t in args.types)
        refs = tuple(ir.substitute_trait_ref(r, frame.generics) for r in args.trait_refs)
        return ir.GenericArgs(args.regions, types, args.const_generics, refs)

    def resolve_runtime_ref(self, ref: ir.TraitRefKind) -> ir.TraitImplRef:
        """Reduce a concrete derivation to the impl that provides the instance."""
        try:
            return traits.resolve_ref_to_impl(ref, self.crate)
        except traits.ResolveError as exc:
            raise InterpError("unresolved-call", str(exc))

    def resolve_callee(self, fidx: int, ptr: ir.FnPtr) -> tuple[ir.FunDecl, ir.GenericArgs]:
        generics = self.concretize_args(fidx, ptr.generics)
        if isinstance(ptr.func, ir.FnFun):
            return self.crate.fun_decls[ptr.func.fun_decl_id], generics
        if isinstance(ptr.func, ir.FnTraitMethod):
            ref = ir.substitute_trait_ref(ptr.func.trait_ref, self.frames[fidx].generics)
            impl_ref = self.resolve_runtime_ref(ref)
            impl = self.crate.trait_impls[impl_ref.impl_id]
            fun_id = impl.method_fun(ptr.func.method)
            if fun_id is None:
                raise InterpError("unresolved-call", f"impl lacks method {ptr.func.method}")
            # Implementing functions declare the impl's generics followed by
            # the method's own.
            full = traits.concat_generic_args(impl_ref.args, generics)
            return self.crate.fun_decls[fun_id], full
        raise InterpError("unresolved-call", "call through an unresolved trait method")

    def do_call(self, fidx: int, call: ir.Call):
        if isinstance(call.func, ir.FnOpMove):
            raise InterpError("type-mismatch", "function values are not supported")
        ptr = call.func.ptr
        if isinstance(ptr.func, ir.FnFun):
            name = self.crate.fun_decls[ptr.func.fun_decl_id].meta.name_str
            if name in self.panic_fns:
                raise _AbortSignal(ir.AbortKind.PANIC)
        decl, generics = self.resolve_callee(fidx, ptr)
        if decl.meta.name_str in self.panic_fns:
            raise _AbortSignal(ir.AbortKind.PANIC)
        if decl.body is None:
            raise InterpError("opaque-call", f"{decl.meta.name_str} has no body")
        args = [self.eval_operand(fidx, op) for op in call.args]
        if len(args) != len(decl.signature.inputs):
            raise InterpError("type-mismatch", "argument count mismatch")
        value = self.run_frame(decl, decl.body, generics, args)
        self.write_place(fidx, call.dest, value)

    # -- executors ----------------------------------------------------------------------------

    def run_frame(self, decl: ir.FunDecl, body: ir.Body, generics: ir.GenericArgs, args: list):
        if len(decl.signature.generics.types) != len(generics.types):
            raise InterpError("type-mismatch", f"{decl.meta.name_str} instantiation arity")
        frame = Frame(decl, body, generics)
        for i, arg in enumerate(args):
            frame.slots[1 + i] = arg
        self.frames.append(frame)
        fidx = len(self.frames) - 1
        try:
            if isinstance(body, ir.UllbcBody):
                self.exec_cfg(fidx, body)
            else:
                assert isinstance(body, ir.LlbcBody)
                try:
                    self.exec_block(fidx, body.body)
                    raise InterpError("missing-return", "structured body fell through")
                except _ReturnSignal:
                    pass
            value = frame.slots[0]
            if value is None or isinstance(value, VMoved):
                raise InterpError("uninit-read", "return slot not initialized")
            return value
        finally:
            frame.alive = False
            self.frames.pop()

    def exec_cfg(self, fidx: int, body: ir.UllbcBody) -> None:
        pc = 0
        while True:
            block = body.blocks[pc]
            for stmt in block.statements:
                self.tick()
                if not self.exec_simple(fidx, stmt.kind):
                    raise InterpError("type-mismatch", "structured statement in a CFG body")
            self.tick()
            kind = block.terminator.kind
            if isinstance(kind, ir.TGoto):
                pc = kind.target
            elif isinstance(kind, ir.TSwitchInt):
                pc = self.switch_target(fidx, kind)
            elif isinstance(kind, ir.TMatch):
                value = self.fetch(*self.resolve_place(fidx, kind.scrutinee))
                if not isinstance(value, VAdt) or value.variant is None:
                    raise InterpError("type-mismatch", "match on a non-enum value")
                target = None
                for vid, bid in kind.arms:
                    if vid == value.variant:
                        target = bid
                        break
                if target is None:
                    target = kind.otherwise
                if target is None:
                    raise InterpError("type-mismatch", "match fell off every arm")
                pc = target
            elif isinstance(kind, ir.TAssert):
                cond = self.eval_operand(fidx, kind.condition)
                if not isinstance(cond, VBool):
                    raise InterpError("type-mismatch", "assert on a non-bool")
                if cond.value != kind.expected:
                    raise _AbortSignal(ir.AbortKind.PANIC)
                pc = kind.target
            elif isinstance(kind, ir.TCall):
                self.do_call(fidx, kind.call)
                pc = kind.target
            elif isinstance(kind, ir.TReturn):
                return
            elif isinstance(kind, ir.TAbort):
                raise _AbortSignal(kind.kind)
            elif isinstance(kind, ir.TUnreachable):
                raise _AbortSignal(ir.AbortKind.UNDEFINED_BEHAVIOR)
            else:
                raise InterpError("type-mismatch", f"bad terminator {type(kind).__name__}")

    def switch_target(self, fidx: int, kind: ir.TSwitchInt) -> int:
        value = self.eval_operand(fidx, kind.scrutinee)
        if isinstance(value, VBool):
            needle = 1 if value.value else 0
        elif isinstance(value, VInt):
            needle = value.value
        else:
            raise InterpError("type-mismatch", "switch on a non-scalar")
        for v, bid in kind.cases:
            if v == needle:
                return bid
        return kind.otherwise

    def exec_block(self, fidx: int, block: ir.Block) -> None:
        for stmt in block.statements:
            self.tick()
            kind = stmt.kind
            if self.exec_simple(fidx, kind):
                continue
            if isinstance(kind, ir.SCall):
                self.do_call(fidx, kind.call)
            elif isinstance(kind, ir.SReturn):
                raise _ReturnSignal()
            elif isinstance(kind, ir.SAbort):
                raise _AbortSignal(kind.kind)
            elif isinstance(kind, ir.SBreak):
                raise _BreakSignal(kind.depth)
            elif isinstance(kind, ir.SContinue):
                raise _ContinueSignal(kind.depth)
            elif isinstance(kind, ir.SLoop):
                self.exec_loop(fidx, kind.body)
            elif isinstance(kind, ir.SSwitch):
                self.exec_switch(fidx, kind.switch)
            else:
                raise InterpError("type-mismatch", f"bad statement {type(kind).__name__}")

    def exec_loop(self, fidx: int, body: ir.Block) -> None:
        while True:
            try:
                self.exec_block(fidx, body)
                raise InterpError("missing-return", "loop body fell through")
            except _ContinueSignal as sig:
                if sig.depth == 0:
                    continue
                raise _ContinueSignal(sig.depth - 1)
            except _BreakSignal as sig:
                if sig.depth == 0:
                    return
                raise _BreakSignal(sig.depth - 1)

    def exec_switch(self, fidx: int, sw: ir.Switch) -> None:
        if isinstance(sw, ir.SwIf):
            cond = self.eval_operand(fidx, sw.condition)
            if not isinstance(cond, VBool):
                raise InterpError("type-mismatch", "if on a non-bool")
            self.exec_block(fidx, sw.then_block if cond.value else sw.else_block)
            return
        if isinstance(sw, ir.SwInt):
            value = self.eval_operand(fidx, sw.scrutinee)
            if isinstance(value, VBool):
                needle = 1 if value.value else 0
            elif isinstance(value, VInt):
                needle = value.value
            else:
                raise InterpError("type-mismatch", "switch on a non-scalar")
            for v, blk in sw.arms:
                if v == needle:
                    self.exec_block(fidx, blk)
                    return
            self.exec_block(fidx, sw.otherwise)
            return
        assert isinstance(sw, ir.SwMatch)
        value = self.fetch(*self.resolve_place(fidx, sw.scrutinee))
        if not isinstance(value, VAdt) or value.variant is None:
            raise InterpError("type-mismatch", "match on a non-enum value")
        for vid, blk in sw.arms:
            if vid == value.variant:
                self.exec_block(fidx, blk)
                return
        if sw.otherwise is None:
            raise InterpError("type-mismatch", "match fell off every arm")
        self.exec_block(fidx, sw.otherwise)


# -- arithmetic --------------------------------------------------------------------


def eval_binop(op: ir.BinOp, lhs, rhs):
    if op in (ir.BinOp.EQ, ir.BinOp.NE) and isinstance(lhs, VBool) and isinstance(rhs, VBool):
        same = lhs.value == rhs.value
        return VBool(same if op is ir.BinOp.EQ else not same)
    if not isinstance(lhs, VInt) or not isinstance(rhs, VInt):
        raise InterpError("type-mismatch", f"{op.value} expects scalar operands")
    if op in ir.COMPARISON_OPS:
        if lhs.kind != rhs.kind:
            raise InterpError("type-mismatch", "comparison across scalar kinds")
        table = {
            ir.BinOp.EQ: lhs.value == rhs.value,
            ir.BinOp.NE: lhs.value != rhs.value,
            ir.BinOp.LT: lhs.value < rhs.value,
            ir.BinOp.LE: lhs.value <= rhs.value,
            ir.BinOp.GT: lhs.value > rhs.value,
            ir.BinOp.GE: lhs.value >= rhs.value,
        }
        return VBool(table[op])
    kind = lhs.kind
    if op in (ir.BinOp.SHL, ir.BinOp.SHR):
        if rhs.value < 0 or rhs.value >= kind.bits:
            raise _AbortSignal(ir.AbortKind.PANIC)
        if op is ir.BinOp.SHL:
            return VInt(kind, kind.wrap(lhs.value << rhs.value))
        return VInt(kind, kind.wrap(lhs.value >> rhs.value))
    if kind != rhs.kind:
        raise InterpError("type-mismatch", "arithmetic across scalar kinds")
    if op in (ir.BinOp.DIV, ir.BinOp.REM):
        if rhs.value == 0:
            raise _AbortSignal(ir.AbortKind.PANIC)
        if kind.signed and lhs.value == kind.min and rhs.value == -1:
            raise _AbortSignal(ir.AbortKind.PANIC)
        quotient = abs(lhs.value) // abs(rhs.value)
        if (lhs.value < 0) != (rhs.value < 0):
            quotient = -quotient
        if op is ir.BinOp.DIV:
            return VInt(kind, quotient)
        return VInt(kind, lhs.value - quotient * rhs.value)
    raw = {
        ir.BinOp.ADD: lhs.value + rhs.value,
        ir.BinOp.SUB: lhs.value - rhs.value,
        ir.BinOp.MUL: lhs.value * rhs.value,
        ir.BinOp.CHECKED_ADD: lhs.value + rhs.value,
        ir.BinOp.CHECKED_SUB: lhs.value - rhs.value,
        ir.BinOp.CHECKED_MUL: lhs.value * rhs.value,
        ir.BinOp.ADD_CHECKED: lhs.value + rhs.value,
        ir.BinOp.SUB_CHECKED: lhs.value - rhs.value,
        ir.BinOp.MUL_CHECKED: lhs.value * rhs.value,
    }[op]
    overflow = not kind.in_range(raw)
    wrapped = kind.wrap(raw)
    if op in ir.CHECKED_PAIR_OPS:  # tuple-returning pre-pass form
        return VAdt(None, [VInt(kind, wrapped), VBool(overflow)])
    if op in ir.TRAPPING_OPS:
        if overflow:
            raise _AbortSignal(ir.AbortKind.PANIC)
        return VInt(kind, wrapped)
    return VInt(kind, wrapped)


# -- entry points ---------------------------------------------------------------------


def _run(
    crate: ir.TranslatedCrate,
    fun: Union[str, int],
    args: list,
    fuel: int,
    panic_fns: tuple[str, ...],
    expected_form,
) -> Outcome:
    import sys

    # Interpreted calls recurse through several Python frames each; give
    # deeply recursive test programs headroom, then restore.
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20_000))
    try:
        return _run_inner(crate, fun, args, fuel, panic_fns, expected_form)
    finally:
        sys.setrecursionlimit(old_limit)


def _run_inner(
    crate: ir.TranslatedCrate,
    fun: Union[str, int],
    args: list,
    fuel: int,
    panic_fns: tuple[str, ...],
    expected_form,
) -> Outcome:
    decl = crate.fun_decls[fun] if isinstance(fun, int) else crate.fun_by_name(fun)
    if decl is None:
        raise InterpError("unresolved-call", f"no function named {fun}")
    if decl.body is None:
        raise InterpError("opaque-call", f"{decl.meta.name_str} has no body")
    if not isinstance(decl.body, expected_form):
        raise InterpError(
            "type-mismatch",
            f"{decl.meta.name_str} body is {type(decl.body).__name__}, "
            f"expected {expected_form.__name__}",
        )
    if decl.signature.generics.types or decl.signature.generics.const_generics:
        raise InterpError("type-mismatch", "entry function must be monomorphic")
    values = [value_of_constant(a) if isinstance(a, ir.ConstantValue) else a for a in args]
    machine = Interp(crate, fuel, panic_fns)
    try:
        result = machine.run_frame(decl, decl.body, ir.EMPTY_ARGS, values)
        return Returned(freeze(result))
    except _AbortSignal as sig:
        return Aborted(sig.kind)
    except _FuelSignal:
        return OutOfFuel()


def interp_ullbc(
    crate: ir.TranslatedCrate,
    fun: Union[str, int],
    args: list,
    fuel: int = DEFAULT_FUEL,
    panic_fns: tuple[str, ...] = DEFAULT_PANIC_FNS,
) -> Outcome:
    """Execute a CFG-form entry function; callees may be in either form."""
    return _run(crate, fun, args, fuel, panic_fns, ir.UllbcBody)


def interp_llbc(
    crate: ir.TranslatedCrate,
    fun: Union[str, int],
    args: list,
    fuel: int = DEFAULT_FUEL,
    panic_fns: tuple[str, ...] = DEFAULT_PANIC_FNS,
) -> Outcome:
    """Execute a structured-form entry function; callees may be in either form."""
    return _run(crate, fun, args, fuel, panic_fns, ir.LlbcBody)
