"""Core data model: crates, types, generics, constants, places, bodies.

Everything here is an immutable (frozen) dataclass built over tuples, so
values are hashable, structurally comparable, and safe to share across
threads. Transformations never mutate; they rebuild with ``dataclasses.replace``.

Conventions that the rest of the toolkit relies on:

- ID-indexed tables are plain tuples: index k holds the declaration with id k.
- Type variables are de Bruijn style indices into the *active binder*.  There
  are exactly two binder levels: declaration-level generics, and (for trait
  methods) method-level generics appended after the container's.  A method
  signature inside ``trait Trait<U>`` therefore numbers Self=0, U=1 and its
  own first parameter 2.  Instantiation always supplies the full concatenated
  argument list; :func:`split_generic_args` (traits module) undoes it.
- Regions are opaque names.  They are carried for fidelity, arity-checked,
  and otherwise inert: substitution leaves them alone and unification treats
  any two as equal.
- Const generic variables can be declared and instantiated with literal
  constants, but constants have no variable form, so they cannot be
  forwarded from one binder to another.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Union


# ---------------------------------------------------------------------------
# Spans and files


@dataclass(frozen=True)
class Span:
    """Half-open source region, 1-based lines and columns."""

    file_id: int
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def covers(self, other: "Span") -> bool:
        if self.file_id != other.file_id:
            return False
        lo = (self.start_line, self.start_col) <= (other.start_line, other.start_col)
        hi = (self.end_line, self.end_col) >= (other.end_line, other.end_col)
        return lo and hi


@dataclass(frozen=True)
class FileRecord:
    name: str


def dummy_span(file_id: int = 0) -> Span:
    return Span(file_id, 1, 1, 1, 1)


# ---------------------------------------------------------------------------
# Scalar kinds


class ScalarKind(enum.Enum):
    U8 = "u8"
    U16 = "u16"
    U32 = "u32"
    U64 = "u64"
    I8 = "i8"
    I16 = "i16"
    I32 = "i32"
    I64 = "i64"

    @property
    def bits(self) -> int:
        return int(self.value[1:])

    @property
    def signed(self) -> bool:
        return self.value[0] == "i"

    @property
    def size(self) -> int:
        return self.bits // 8

    @property
    def min(self) -> int:
        return -(1 << (self.bits - 1)) if self.signed else 0

    @property
    def max(self) -> int:
        return (1 << (self.bits - 1)) - 1 if self.signed else (1 << self.bits) - 1

    def in_range(self, value: int) -> bool:
        return self.min <= value <= self.max

    def wrap(self, value: int) -> int:
        """Reduce an arbitrary integer into this kind's range (two's complement)."""
        masked = value & ((1 << self.bits) - 1)
        if self.signed and masked > self.max:
            masked -= 1 << self.bits
        return masked


SCALAR_BY_NAME = {k.value: k for k in ScalarKind}


# ---------------------------------------------------------------------------
# Types

ERASED_REGION = "'_"


@dataclass(frozen=True)
class TyScalar:
    kind: ScalarKind


@dataclass(frozen=True)
class TyBool:
    pass


@dataclass(frozen=True)
class TyAdt:
    decl_id: int
    args: "GenericArgs"


@dataclass(frozen=True)
class TyVar:
    index: int


@dataclass(frozen=True)
class TyRef:
    region: str
    inner: "Ty"
    mutable: bool


@dataclass(frozen=True)
class TyTuple:
    items: tuple["Ty", ...]


@dataclass(frozen=True)
class TyAssoc:
    """An associated type projection, e.g. the Item of some Iterator instance."""

    base: "TraitRefKind"
    item: str


Ty = Union[TyScalar, TyBool, TyAdt, TyVar, TyRef, TyTuple, TyAssoc]

UNIT = TyTuple(())

BOOL = TyBool()


def scalar(name: str) -> TyScalar:
    return TyScalar(SCALAR_BY_NAME[name])


# ---------------------------------------------------------------------------
# Trait references (derivation trees)


@dataclass(frozen=True)
class TraitImplRef:
    """Obligation discharged by a top-level impl, with the impl's arguments."""

    impl_id: int
    args: "GenericArgs"


@dataclass(frozen=True)
class ClauseRef:
    """Obligation discharged by a local where-clause of the active binder."""

    clause_id: int


@dataclass(frozen=True)
class ParentClauseRef:
    """Obligation implied by a super-trait bound of the base derivation."""

    base: "TraitRefKind"
    index: int


@dataclass(frozen=True)
class ItemClauseRef:
    """Obligation implied by a bound on an associated type of the base."""

    base: "TraitRefKind"
    item: str
    index: int


@dataclass(frozen=True)
class SelfRef:
    """The trait's own obligation; only valid inside a trait declaration."""


Tr = None  # forward-reference placeholder (kept out of __all__)

TraitRefKind = Union[TraitImplRef, ClauseRef, ParentClauseRef, ItemClauseRef, SelfRef]


# ---------------------------------------------------------------------------
# Generics


@dataclass(frozen=True)
class ConstGenericVar:
    name: str
    kind: ScalarKind


@dataclass(frozen=True)
class TraitClause:
    clause_id: int
    trait_decl_id: int
    args: "GenericArgs"


@dataclass(frozen=True)
class TraitTypeConstraint:
    """An equality `<ref>::item = ty` recorded in a where-clause."""

    trait_ref: TraitRefKind
    item: str
    ty: Ty


@dataclass(frozen=True)
class GenericParams:
    regions: tuple[str, ...] = ()
    types: tuple[str, ...] = ()
    const_generics: tuple[ConstGenericVar, ...] = ()
    trait_clauses: tuple[TraitClause, ...] = ()
    regions_outlive: tuple[tuple[str, str], ...] = ()
    types_outlive: tuple[tuple[Ty, str], ...] = ()
    trait_type_constraints: tuple[TraitTypeConstraint, ...] = ()

    def is_empty(self) -> bool:
        return not (self.regions or self.types or self.const_generics or self.trait_clauses)

    def counts(self) -> tuple[int, int, int, int]:
        return (
            len(self.regions),
            len(self.types),
            len(self.const_generics),
            len(self.trait_clauses),
        )


@dataclass(frozen=True)
class GenericArgs:
    regions: tuple[str, ...] = ()
    types: tuple[Ty, ...] = ()
    const_generics: tuple["ConstantValue", ...] = ()
    trait_refs: tuple[TraitRefKind, ...] = ()

    def is_empty(self) -> bool:
        return not (self.regions or self.types or self.const_generics or self.trait_refs)


EMPTY_ARGS = GenericArgs()


# ---------------------------------------------------------------------------
# Constants


@dataclass(frozen=True)
class CScalar:
    value: int


@dataclass(frozen=True)
class CBool:
    value: bool


@dataclass(frozen=True)
class CAdt:
    variant: Optional[int]
    fields: tuple["ConstantValue", ...]


@dataclass(frozen=True)
class CRaw:
    """Undecoded little-endian bytes; eliminated by the constant decoding pass."""

    data: bytes


ConstKind = Union[CScalar, CBool, CAdt, CRaw]


@dataclass(frozen=True)
class ConstantValue:
    ty: Ty
    kind: ConstKind


def const_int(value: int, kind: ScalarKind) -> ConstantValue:
    return ConstantValue(TyScalar(kind), CScalar(value))


def const_bool(value: bool) -> ConstantValue:
    return ConstantValue(BOOL, CBool(value))


UNIT_CONST = ConstantValue(UNIT, CAdt(None, ()))


# ---------------------------------------------------------------------------
# Places, operands, rvalues


@dataclass(frozen=True)
class ProjField:
    index: int


@dataclass(frozen=True)
class ProjDowncast:
    variant: int


@dataclass(frozen=True)
class ProjIndex:
    offset: "Operand"


@dataclass(frozen=True)
class ProjDeref:
    pass


Projection = Union[ProjField, ProjDowncast, ProjIndex, ProjDeref]


@dataclass(frozen=True)
class Place:
    local: int
    projections: tuple[Projection, ...] = ()


@dataclass(frozen=True)
class OpMove:
    place: Place


@dataclass(frozen=True)
class OpCopy:
    place: Place


@dataclass(frozen=True)
class OpConst:
    value: ConstantValue


Operand = Union[OpMove, OpCopy, OpConst]


class BinOp(enum.Enum):
    # Plain arithmetic wraps; Div/Rem/Shl/Shr trap on the usual edge cases.
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    REM = "rem"
    SHL = "shl"
    SHR = "shr"
    EQ = "eq"
    NE = "ne"
    LT = "lt"
    LE = "le"
    GT = "gt"
    GE = "ge"
    # Pre-pass tuple-returning forms: (wrapped result, overflow flag).
    CHECKED_ADD = "checked_add"
    CHECKED_SUB = "checked_sub"
    CHECKED_MUL = "checked_mul"
    # Post-pass fused forms: trap on overflow.
    ADD_CHECKED = "add_checked"
    SUB_CHECKED = "sub_checked"
    MUL_CHECKED = "mul_checked"


CHECKED_PAIR_OPS = {
    BinOp.CHECKED_ADD: BinOp.ADD_CHECKED,
    BinOp.CHECKED_SUB: BinOp.SUB_CHECKED,
    BinOp.CHECKED_MUL: BinOp.MUL_CHECKED,
}

COMPARISON_OPS = {BinOp.EQ, BinOp.NE, BinOp.LT, BinOp.LE, BinOp.GT, BinOp.GE}

TRAPPING_OPS = {BinOp.ADD_CHECKED, BinOp.SUB_CHECKED, BinOp.MUL_CHECKED}


class UnOp(enum.Enum):
    NEG = "neg"
    NOT = "not"


@dataclass(frozen=True)
class RvUse:
    operand: Operand


@dataclass(frozen=True)
class RvBinOp:
    op: BinOp
    lhs: Operand
    rhs: Operand


@dataclass(frozen=True)
class RvUnOp:
    op: UnOp
    operand: Operand


@dataclass(frozen=True)
class RvDiscriminant:
    place: Place


@dataclass(frozen=True)
class RvAggregate:
    decl_id: int
    variant: Optional[int]
    operands: tuple[Operand, ...]


@dataclass(frozen=True)
class RvRef:
    place: Place
    mutable: bool


Rvalue = Union[RvUse, RvBinOp, RvUnOp, RvDiscriminant, RvAggregate, RvRef]


# ---------------------------------------------------------------------------
# Function pointers and calls


@dataclass(frozen=True)
class FnFun:
    fun_decl_id: int


@dataclass(frozen=True)
class FnTraitMethod:
    trait_ref: TraitRefKind
    method: str


@dataclass(frozen=True)
class FnUnresolvedTraitMethod:
    """A trait-method call site before (or after a failed) trait resolution.

    Carries the full, untruncated argument list in the enclosing FnPtr.
    """

    trait_decl_id: int
    method: str


FnPtrKind = Union[FnFun, FnTraitMethod, FnUnresolvedTraitMethod]


@dataclass(frozen=True)
class FnPtr:
    func: FnPtrKind
    generics: GenericArgs = EMPTY_ARGS


@dataclass(frozen=True)
class FnOpRegular:
    ptr: FnPtr


@dataclass(frozen=True)
class FnOpMove:
    place: Place


FnOperand = Union[FnOpRegular, FnOpMove]


@dataclass(frozen=True)
class Call:
    func: FnOperand
    args: tuple[Operand, ...]
    dest: Place


# ---------------------------------------------------------------------------
# ULLBC bodies (CFG form)


class AbortKind(enum.Enum):
    PANIC = "panic"
    UNDEFINED_BEHAVIOR = "ub"


@dataclass(frozen=True)
class SAssign:
    place: Place
    rvalue: Rvalue


@dataclass(frozen=True)
class SDrop:
    place: Place


@dataclass(frozen=True)
class SNop:
    pass


@dataclass(frozen=True)
class SCall:
    call: Call


@dataclass(frozen=True)
class SAbort:
    kind: AbortKind


@dataclass(frozen=True)
class SReturn:
    pass


@dataclass(frozen=True)
class SBreak:
    depth: int


@dataclass(frozen=True)
class SContinue:
    depth: int


@dataclass(frozen=True)
class SLoop:
    body: "Block"


@dataclass(frozen=True)
class SwIf:
    condition: Operand
    then_block: "Block"
    else_block: "Block"


@dataclass(frozen=True)
class SwInt:
    scrutinee: Operand
    arms: tuple[tuple[int, "Block"], ...]
    otherwise: "Block"


@dataclass(frozen=True)
class SwMatch:
    scrutinee: Place
    arms: tuple[tuple[int, "Block"], ...]
    otherwise: Optional["Block"]


Switch = Union[SwIf, SwInt, SwMatch]


@dataclass(frozen=True)
class SSwitch:
    switch: Switch


StatementKind = Union[
    SAssign, SDrop, SNop, SCall, SAbort, SReturn, SBreak, SContinue, SLoop, SSwitch
]

ULLBC_STATEMENT_KINDS = (SAssign, SDrop, SNop)


@dataclass(frozen=True)
class Statement:
    span: Span
    kind: StatementKind
    comments: tuple[str, ...] = ()
    attributes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Block:
    """A structured statement list (LLBC)."""

    span: Span
    statements: tuple[Statement, ...]


@dataclass(frozen=True)
class TGoto:
    target: int


@dataclass(frozen=True)
class TSwitchInt:
    scrutinee: Operand
    cases: tuple[tuple[int, int], ...]
    otherwise: int


@dataclass(frozen=True)
class TMatch:
    scrutinee: Place
    arms: tuple[tuple[int, int], ...]
    otherwise: Optional[int]


@dataclass(frozen=True)
class TAssert:
    condition: Operand
    expected: bool
    target: int


@dataclass(frozen=True)
class TCall:
    call: Call
    target: int


@dataclass(frozen=True)
class TReturn:
    pass


@dataclass(frozen=True)
class TAbort:
    kind: AbortKind


@dataclass(frozen=True)
class TUnreachable:
    pass


TerminatorKind = Union[
    TGoto, TSwitchInt, TMatch, TAssert, TCall, TReturn, TAbort, TUnreachable
]


@dataclass(frozen=True)
class Terminator:
    span: Span
    kind: TerminatorKind
    comments: tuple[str, ...] = ()


@dataclass(frozen=True)
class BasicBlock:
    statements: tuple[Statement, ...]
    terminator: Terminator


@dataclass(frozen=True)
class Local:
    name: str
    ty: Ty


@dataclass(frozen=True)
class UllbcBody:
    """CFG body: block 0 is the entry.

    ``locals[0]`` is the return slot, ``locals[1..=arg_count]`` the inputs.
    """

    locals: tuple[Local, ...]
    arg_count: int
    blocks: tuple[BasicBlock, ...]


@dataclass(frozen=True)
class LlbcBody:
    """Structured body produced by control-flow restructuring."""

    locals: tuple[Local, ...]
    arg_count: int
    body: Block


Body = Union[UllbcBody, LlbcBody]


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class ItemMeta:
    name: tuple[str, ...]
    span: Span
    attributes: tuple[str, ...] = ()

    @property
    def name_str(self) -> str:
        return "::".join(self.name)


@dataclass(frozen=True)
class Variant:
    name: str
    fields: tuple[Ty, ...]
    discriminant: int


@dataclass(frozen=True)
class StructKind:
    fields: tuple[Ty, ...]


@dataclass(frozen=True)
class EnumKind:
    variants: tuple[Variant, ...]

    def variant_by_discriminant(self, value: int) -> Optional[int]:
        for i, v in enumerate(self.variants):
            if v.discriminant == value:
                return i
        return None


TypeDeclKind = Union[StructKind, EnumKind]


@dataclass(frozen=True)
class TypeDecl:
    decl_id: int
    meta: ItemMeta
    generics: GenericParams
    kind: TypeDeclKind


@dataclass(frozen=True)
class FunSig:
    generics: GenericParams
    inputs: tuple[Ty, ...]
    output: Ty


@dataclass(frozen=True)
class FunDecl:
    decl_id: int
    meta: ItemMeta
    signature: FunSig
    body: Optional[Body]  # None encodes an opaque (missing) body


@dataclass(frozen=True)
class AssocTypeDecl:
    name: str
    bounds: tuple[TraitClause, ...]


@dataclass(frozen=True)
class TraitMethodDecl:
    name: str
    signature: FunSig  # generics are method-level; indices continue the trait's


@dataclass(frozen=True)
class TraitDecl:
    decl_id: int
    meta: ItemMeta
    generics: GenericParams  # types[0] is the implicit Self
    parent_clauses: tuple[TraitClause, ...]
    assoc_types: tuple[AssocTypeDecl, ...]
    methods: tuple[TraitMethodDecl, ...]

    def method(self, name: str) -> Optional[TraitMethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def assoc_type(self, name: str) -> Optional[AssocTypeDecl]:
        for a in self.assoc_types:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class TraitImpl:
    decl_id: int
    meta: ItemMeta
    generics: GenericParams
    trait_decl_id: int
    trait_args: GenericArgs  # includes the Self type at types[0]
    assoc_values: tuple[tuple[str, Ty], ...]
    methods: tuple[tuple[str, int], ...]  # (method name, fun decl id)

    def assoc_value(self, name: str) -> Optional[Ty]:
        for n, t in self.assoc_values:
            if n == name:
                return t
        return None

    def method_fun(self, name: str) -> Optional[int]:
        for n, f in self.methods:
            if n == name:
                return f
        return None


# ---------------------------------------------------------------------------
# Declaration groups


class DeclKind(enum.Enum):
    TYPE = "type"
    FUN = "fun"
    TRAIT_DECL = "trait_decl"
    TRAIT_IMPL = "trait_impl"


DECL_KIND_ORDER = {
    DeclKind.TYPE: 0,
    DeclKind.TRAIT_DECL: 1,
    DeclKind.TRAIT_IMPL: 2,
    DeclKind.FUN: 3,
}


@dataclass(frozen=True)
class AnyDeclId:
    kind: DeclKind
    index: int

    def sort_key(self) -> tuple[int, int]:
        return (DECL_KIND_ORDER[self.kind], self.index)


@dataclass(frozen=True)
class GroupNonRecursive:
    decl: AnyDeclId


@dataclass(frozen=True)
class GroupRecursive:
    decls: tuple[AnyDeclId, ...]


DeclGroup = Union[GroupNonRecursive, GroupRecursive]


def group_members(group: DeclGroup) -> tuple[AnyDeclId, ...]:
    if isinstance(group, GroupNonRecursive):
        return (group.decl,)
    return group.decls


# ---------------------------------------------------------------------------
# The crate


@dataclass(frozen=True)
class TranslatedCrate:
    crate_name: str
    files: tuple[FileRecord, ...]
    type_decls: tuple[TypeDecl, ...] = ()
    fun_decls: tuple[FunDecl, ...] = ()
    trait_decls: tuple[TraitDecl, ...] = ()
    trait_impls: tuple[TraitImpl, ...] = ()
    decl_groups: tuple[DeclGroup, ...] = ()

    def fun_by_name(self, name: str) -> Optional[FunDecl]:
        for f in self.fun_decls:
            if f.meta.name_str == name:
                return f
        return None

    def type_by_name(self, name: str) -> Optional[TypeDecl]:
        for t in self.type_decls:
            if t.meta.name_str == name:
                return t
        return None

    def trait_by_name(self, name: str) -> Optional[TraitDecl]:
        for t in self.trait_decls:
            if t.meta.name_str == name:
                return t
        return None

    def all_decl_ids(self) -> list[AnyDeclId]:
        out: list[AnyDeclId] = []
        out += [AnyDeclId(DeclKind.TYPE, d.decl_id) for d in self.type_decls]
        out += [AnyDeclId(DeclKind.TRAIT_DECL, d.decl_id) for d in self.trait_decls]
        out += [AnyDeclId(DeclKind.TRAIT_IMPL, d.decl_id) for d in self.trait_impls]
        out += [AnyDeclId(DeclKind.FUN, d.decl_id) for d in self.fun_decls]
        return out


# ---------------------------------------------------------------------------
# Substitution


class ArityMismatch(Exception):
    """Instantiation arity error; names the binder and the expected/actual counts."""

    def __init__(self, binder: str, expected: int, actual: int):
        super().__init__(f"{binder}: expected {expected} arguments, got {actual}")
        self.binder = binder
        self.expected = expected
        self.actual = actual


def substitute(ty: Ty, args: GenericArgs) -> Ty:
    """Replace every type variable by the corresponding entry of ``args``.

    Clause references inside associated-type bases are routed through
    ``args.trait_refs`` when those are supplied; with an empty trait_refs
    component they are left untouched (pre-resolution instantiation).
    Regions are opaque and pass through unchanged.
    """
    if isinstance(ty, (TyScalar, TyBool)):
        return ty
    if isinstance(ty, TyVar):
        if ty.index >= len(args.types):
            raise ArityMismatch("type variables", ty.index + 1, len(args.types))
        return args.types[ty.index]
    if isinstance(ty, TyAdt):
        return TyAdt(ty.decl_id, substitute_args(ty.args, args))
    if isinstance(ty, TyRef):
        return TyRef(ty.region, substitute(ty.inner, args), ty.mutable)
    if isinstance(ty, TyTuple):
        return TyTuple(tuple(substitute(t, args) for t in ty.items))
    if isinstance(ty, TyAssoc):
        return TyAssoc(substitute_trait_ref(ty.base, args), ty.item)
    raise TypeError(f"not a type: {ty!r}")


def substitute_args(target: GenericArgs, args: GenericArgs) -> GenericArgs:
    return GenericArgs(
        regions=target.regions,
        types=tuple(substitute(t, args) for t in target.types),
        const_generics=target.const_generics,
        trait_refs=tuple(substitute_trait_ref(r, args) for r in target.trait_refs),
    )


def substitute_trait_ref(ref: TraitRefKind, args: GenericArgs) -> TraitRefKind:
    if isinstance(ref, ClauseRef):
        if not args.trait_refs:
            return ref
        if ref.clause_id >= len(args.trait_refs):
            raise ArityMismatch("trait clauses", ref.clause_id + 1, len(args.trait_refs))
        return args.trait_refs[ref.clause_id]
    if isinstance(ref, TraitImplRef):
        return TraitImplRef(ref.impl_id, substitute_args(ref.args, args))
    if isinstance(ref, ParentClauseRef):
        return ParentClauseRef(substitute_trait_ref(ref.base, args), ref.index)
    if isinstance(ref, ItemClauseRef):
        return ItemClauseRef(substitute_trait_ref(ref.base, args), ref.item, ref.index)
    if isinstance(ref, SelfRef):
        return ref
    raise TypeError(f"not a trait ref: {ref!r}")


def replace_self_ref(ref: TraitRefKind, base: TraitRefKind) -> TraitRefKind:
    if isinstance(ref, SelfRef):
        return base
    if isinstance(ref, TraitImplRef):
        return TraitImplRef(ref.impl_id, replace_self_in_args(ref.args, base))
    if isinstance(ref, ParentClauseRef):
        return ParentClauseRef(replace_self_ref(ref.base, base), ref.index)
    if isinstance(ref, ItemClauseRef):
        return ItemClauseRef(replace_self_ref(ref.base, base), ref.item, ref.index)
    return ref


def replace_self_in_ty(ty: Ty, base: TraitRefKind) -> Ty:
    if isinstance(ty, TyAssoc):
        return TyAssoc(replace_self_ref(ty.base, base), ty.item)
    if isinstance(ty, TyAdt):
        return TyAdt(ty.decl_id, replace_self_in_args(ty.args, base))
    if isinstance(ty, TyRef):
        return TyRef(ty.region, replace_self_in_ty(ty.inner, base), ty.mutable)
    if isinstance(ty, TyTuple):
        return TyTuple(tuple(replace_self_in_ty(t, base) for t in ty.items))
    return ty


def replace_self_in_args(args: GenericArgs, base: TraitRefKind) -> GenericArgs:
    return GenericArgs(
        regions=args.regions,
        types=tuple(replace_self_in_ty(t, base) for t in args.types),
        const_generics=args.const_generics,
        trait_refs=tuple(replace_self_ref(r, base) for r in args.trait_refs),
    )


def compose(first: GenericArgs, second: GenericArgs) -> GenericArgs:
    """Arguments such that substituting by the result equals substituting by
    ``first`` then by ``second``."""
    return GenericArgs(
        regions=first.regions,
        types=tuple(substitute(t, second) for t in first.types),
        const_generics=first.const_generics,
        trait_refs=tuple(substitute_trait_ref(r, second) for r in first.trait_refs),
    )


def check_args_arity(
    binder_name: str, params: GenericParams, args: GenericArgs, *, require_refs: bool = False
) -> None:
    """Raise ArityMismatch unless ``args`` fits ``params``.

    trait_refs may be empty before trait resolution has run; pass
    ``require_refs=True`` to insist on the full complement.
    """
    if len(args.regions) != len(params.regions):
        raise ArityMismatch(f"{binder_name} regions", len(params.regions), len(args.regions))
    if len(args.types) != len(params.types):
        raise ArityMismatch(f"{binder_name} types", len(params.types), len(args.types))
    if len(args.const_generics) != len(params.const_generics):
        raise ArityMismatch(
            f"{binder_name} const generics",
            len(params.const_generics),
            len(args.const_generics),
        )
    n_refs = len(args.trait_refs)
    n_clauses = len(params.trait_clauses)
    if n_refs != n_clauses and (require_refs or n_refs != 0):
        raise ArityMismatch(f"{binder_name} trait refs", n_clauses, n_refs)


# ---------------------------------------------------------------------------
# Generic traversal helpers (used by validation, passes, serialization tests)


def operands_of_rvalue(rv: Rvalue) -> list[Operand]:
    if isinstance(rv, RvUse):
        return [rv.operand]
    if isinstance(rv, RvBinOp):
        return [rv.lhs, rv.rhs]
    if isinstance(rv, RvUnOp):
        return [rv.operand]
    if isinstance(rv, RvAggregate):
        return list(rv.operands)
    return []


def places_of_operand(op: Operand) -> list[Place]:
    if isinstance(op, (OpMove, OpCopy)):
        return [op.place]
    return []


def iter_constants_in_operand(op: Operand):
    if isinstance(op, OpConst):
        yield op.value
    for place in places_of_operand(op):
        for proj in place.projections:
            if isinstance(proj, ProjIndex):
                yield from iter_constants_in_operand(proj.offset)


__all__ = [name for name in dir() if not name.startswith("_")]
