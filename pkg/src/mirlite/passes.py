"""Cleanup passes over CFG bodies and the crate, behind a toggleable pipeline.

The pipeline order is fixed: panic unification, checked-arithmetic fusion,
match reconstruction, constant decoding, declaration grouping. Each pass is
idempotent and preserves interpreter semantics; configuration only switches
passes on or off. Per-body failures surface as diagnostics and leave the body
untouched, so one bad function never blocks the rest of the crate.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from typing import Optional

from . import ir, tree
from .diagnostics import Diagnostic

DEFAULT_PANIC_FNS = (
    "core::panicking::panic",
    "core::panicking::panic_fmt",
    "std::panic::begin_panic",
)

PASS_NAMES = ("panics", "checked-arith", "match-reconstruction", "constants", "decl-groups")


@dataclass(frozen=True)
class PassConfig:
    panics: bool = True
    checked_arith: bool = True
    match_reconstruction: bool = True
    constants: bool = True
    decl_groups: bool = True
    panic_fns: tuple[str, ...] = DEFAULT_PANIC_FNS

    @staticmethod
    def none() -> "PassConfig":
        return PassConfig(False, False, False, False, False)

    def disable(self, name: str) -> "PassConfig":
        key = {
            "panics": "panics",
            "checked-arith": "checked_arith",
            "match-reconstruction": "match_reconstruction",
            "constants": "constants",
            "decl-groups": "decl_groups",
        }[name]
        return replace(self, **{key: False})


# ---------------------------------------------------------------------------
# CFG helpers


def successors(term: ir.Terminator) -> list[int]:
    kind = term.kind
    if isinstance(kind, ir.TGoto):
        return [kind.target]
    if isinstance(kind, ir.TSwitchInt):
        return [b for _, b in kind.cases] + [kind.otherwise]
    if isinstance(kind, ir.TMatch):
        out = [b for _, b in kind.arms]
        if kind.otherwise is not None:
            out.append(kind.otherwise)
        return out
    if isinstance(kind, ir.TAssert):
        return [kind.target]
    if isinstance(kind, ir.TCall):
        return [kind.target]
    return []


def predecessors(body: ir.UllbcBody) -> dict[int, set[int]]:
    preds: dict[int, set[int]] = {i: set() for i in range(len(body.blocks))}
    for bid, block in enumerate(body.blocks):
        for succ in successors(block.terminator):
            preds[succ].add(bid)
    return preds


def reachable_blocks(body: ir.UllbcBody) -> set[int]:
    seen = {0}
    stack = [0]
    while stack:
        bid = stack.pop()
        for succ in successors(body.blocks[bid].terminator):
            if succ not in seen:
                seen.add(succ)
                stack.append(succ)
    return seen


def _retarget(term: ir.Terminator, mapping: dict[int, int]) -> ir.Terminator:
    kind = term.kind
    if isinstance(kind, ir.TGoto):
        new: ir.TerminatorKind = ir.TGoto(mapping[kind.target])
    elif isinstance(kind, ir.TSwitchInt):
        new = ir.TSwitchInt(
            kind.scrutinee,
            tuple((v, mapping[b]) for v, b in kind.cases),
            mapping[kind.otherwise],
        )
    elif isinstance(kind, ir.TMatch):
        new = ir.TMatch(
            kind.scrutinee,
            tuple((v, mapping[b]) for v, b in kind.arms),
            mapping[kind.otherwise] if kind.otherwise is not None else None,
        )
    elif isinstance(kind, ir.TAssert):
        new = replace(kind, target=mapping[kind.target])
    elif isinstance(kind, ir.TCall):
        new = replace(kind, target=mapping[kind.target])
    else:
        return term
    return replace(term, kind=new)


def prune_unreachable(body: ir.UllbcBody) -> ir.UllbcBody:
    """Drop blocks not reachable from the entry, renumbering densely."""
    keep = sorted(reachable_blocks(body))
    if len(keep) == len(body.blocks):
        return body
    mapping = {old: new for new, old in enumerate(keep)}
    blocks = tuple(
        replace(body.blocks[old], terminator=_retarget(body.blocks[old].terminator, mapping))
        for old in keep
    )
    return replace(body, blocks=blocks)


# ---------------------------------------------------------------------------
# Pass: panic unification


def unify_panics(
    body: ir.UllbcBody, crate: ir.TranslatedCrate, panic_fns: tuple[str, ...] = DEFAULT_PANIC_FNS
) -> ir.UllbcBody:
    """Rewrite calls to the configured panic entry points into a panic abort,
    and explicit unreachable terminators into an undefined-behavior abort;
    blocks this rewiring strands are pruned."""
    names = set(panic_fns)
    new_blocks = []
    changed = False
    for block in body.blocks:
        term = block.terminator
        kind = term.kind
        if isinstance(kind, ir.TCall) and isinstance(kind.call.func, ir.FnOpRegular):
            func = kind.call.func.ptr.func
            if (
                isinstance(func, ir.FnFun)
                and crate.fun_decls[func.fun_decl_id].meta.name_str in names
            ):
                term = replace(term, kind=ir.TAbort(ir.AbortKind.PANIC))
                changed = True
        elif isinstance(kind, ir.TUnreachable):
            term = replace(term, kind=ir.TAbort(ir.AbortKind.UNDEFINED_BEHAVIOR))
            changed = True
        new_blocks.append(replace(block, terminator=term))
    out = replace(body, blocks=tuple(new_blocks)) if changed else body
    return prune_unreachable(out)


# ---------------------------------------------------------------------------
# Pass: checked arithmetic fusion


def _local_use_count(body: ir.UllbcBody, local: int) -> int:
    count = 0
    for node in tree.iter_nodes(body.blocks):
        if isinstance(node, ir.Place) and node.local == local:
            count += 1
    return count


def _bare_local(place: ir.Place) -> Optional[int]:
    return place.local if not place.projections else None


def _operand_place(op: ir.Operand) -> Optional[ir.Place]:
    return op.place if isinstance(op, (ir.OpMove, ir.OpCopy)) else None


def fuse_checked_arith(body: ir.UllbcBody) -> ir.UllbcBody:
    """Fuse the three-instruction overflow-check idiom into one trapping op.

    The pattern is: a block ending in `t = checked_op(a, b)` with an
    `assert t.f1 == false -> bbK` terminator, where bbK starts with the only
    other use `x = use t.f0` and has no other predecessor. Partial matches
    are left alone.
    """
    while True:
        preds = predecessors(body)
        rewrite = None
        for bid, block in enumerate(body.blocks):
            if not block.statements:
                continue
            last = block.statements[-1]
            if not isinstance(last.kind, ir.SAssign):
                continue
            temp = _bare_local(last.kind.place)
            rv = last.kind.rvalue
            if temp is None or not isinstance(rv, ir.RvBinOp) or rv.op not in ir.CHECKED_PAIR_OPS:
                continue
            term = block.terminator
            if not isinstance(term.kind, ir.TAssert) or term.kind.expected is not False:
                continue
            cond_place = _operand_place(term.kind.condition)
            if cond_place is None or cond_place.local != temp:
                continue
            if cond_place.projections != (ir.ProjField(1),):
                continue
            target = term.kind.target
            if preds[target] != {bid} or target == bid:
                continue
            target_block = body.blocks[target]
            if not target_block.statements:
                continue
            use = target_block.statements[0]
            if not isinstance(use.kind, ir.SAssign) or not isinstance(use.kind.rvalue, ir.RvUse):
                continue
            use_place = _operand_place(use.kind.rvalue.operand)
            if (
                use_place is None
                or use_place.local != temp
                or use_place.projections != (ir.ProjField(0),)
            ):
                continue
            if use.kind.place.local == temp:
                continue
            if _local_use_count(body, temp) != 3:
                continue  # the temp escapes somewhere else
            rewrite = (bid, target, last, term, use, rv)
            break
        if rewrite is None:
            return body
        bid, target, last, term, use, rv = rewrite
        fused = ir.RvBinOp(ir.CHECKED_PAIR_OPS[rv.op], rv.lhs, rv.rhs)
        new_stmt = replace(last, kind=ir.SAssign(use.kind.place, fused))
        src = body.blocks[bid]
        new_src = ir.BasicBlock(
            src.statements[:-1] + (new_stmt,),
            replace(term, kind=ir.TGoto(target)),
        )
        tgt = body.blocks[target]
        new_tgt = ir.BasicBlock(tgt.statements[1:], tgt.terminator)
        blocks = list(body.blocks)
        blocks[bid] = new_src
        blocks[target] = new_tgt
        body = replace(body, blocks=tuple(blocks))


# ---------------------------------------------------------------------------
# Pass: match reconstruction


class _MatchAbort(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


def _static_place_ty(
    place: ir.Place, body: ir.UllbcBody, crate: ir.TranslatedCrate
) -> Optional[ir.Ty]:
    ty: Optional[ir.Ty] = body.locals[place.local].ty
    for proj in place.projections:
        if ty is None:
            return None
        if isinstance(proj, ir.ProjDeref):
            ty = ty.inner if isinstance(ty, ir.TyRef) else None
        elif isinstance(proj, ir.ProjField):
            if isinstance(ty, ir.TyTuple) and proj.index < len(ty.items):
                ty = ty.items[proj.index]
            elif isinstance(ty, ir.TyAdt):
                decl = crate.type_decls[ty.decl_id]
                if isinstance(decl.kind, ir.StructKind) and proj.index < len(decl.kind.fields):
                    ty = ir.substitute(decl.kind.fields[proj.index], ty.args)
                else:
                    ty = None
            else:
                ty = None
        elif isinstance(proj, ir.ProjDowncast):
            if isinstance(ty, ir.TyAdt):
                decl = crate.type_decls[ty.decl_id]
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


def reconstruct_matches(
    body: ir.UllbcBody, crate: ir.TranslatedCrate, fn_name: Optional[str] = None
) -> tuple[ir.UllbcBody, list[Diagnostic]]:
    """Turn discriminant-read-plus-integer-switch back into a variant match.

    A case value that matches no declared variant aborts the pass for this
    body (`bad-discriminant` diagnostic, body returned unchanged).
    """
    try:
        new_blocks = []
        changed = False
        for block in body.blocks:
            result = _match_one_block(block, body, crate, fn_name)
            if result is None:
                new_blocks.append(block)
            else:
                new_blocks.append(result)
                changed = True
        if not changed:
            return body, []
        # Dropping a dead otherwise edge can strand its target; prune so a
        # second pipeline run is a no-op.
        return prune_unreachable(replace(body, blocks=tuple(new_blocks))), []
    except _MatchAbort as exc:
        return body, [exc.diag]


def _match_one_block(
    block: ir.BasicBlock, body: ir.UllbcBody, crate: ir.TranslatedCrate, fn_name
) -> Optional[ir.BasicBlock]:
    if not block.statements:
        return None
    last = block.statements[-1]
    if not isinstance(last.kind, ir.SAssign) or not isinstance(last.kind.rvalue, ir.RvDiscriminant):
        return None
    temp = _bare_local(last.kind.place)
    if temp is None:
        return None
    term = block.terminator
    if not isinstance(term.kind, ir.TSwitchInt):
        return None
    scrut_place = _operand_place(term.kind.scrutinee)
    if scrut_place is None or scrut_place.local != temp or scrut_place.projections:
        return None
    enum_place = last.kind.rvalue.place
    ty = _static_place_ty(enum_place, body, crate)
    if not isinstance(ty, ir.TyAdt):
        return None
    decl = crate.type_decls[ty.decl_id]
    if not isinstance(decl.kind, ir.EnumKind):
        return None
    if _local_use_count(body, temp) != 2:
        return None  # discriminant temporary must be single-use
    arms = []
    covered = set()
    for value, target in term.kind.cases:
        variant = decl.kind.variant_by_discriminant(value)
        if variant is None:
            raise _MatchAbort(
                Diagnostic(
                    "bad-discriminant",
                    f"case value {value} matches no variant of {decl.meta.name_str}",
                    term.span,
                    fn_name,
                )
            )
        arms.append((variant, target))
        covered.add(variant)
    otherwise: Optional[int] = term.kind.otherwise
    if covered == set(range(len(decl.kind.variants))):
        otherwise = None
    new_term = replace(term, kind=ir.TMatch(enum_place, tuple(arms), otherwise))
    return ir.BasicBlock(block.statements[:-1], new_term)


# ---------------------------------------------------------------------------
# Pass: constant decoding (and its encoding oracle)


class DecodeError(Exception):
    pass


class EncodeError(Exception):
    pass


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError(
                f"payload too short: wanted {n} more bytes, "
                f"{len(self.data) - self.pos} left"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def done(self) -> bool:
        return self.pos == len(self.data)


def _decode_ty(ty: ir.Ty, reader: _Reader, crate: ir.TranslatedCrate) -> ir.ConstantValue:
    if isinstance(ty, ir.TyScalar):
        raw = reader.take(ty.kind.size)
        value = int.from_bytes(raw, "little", signed=ty.kind.signed)
        return ir.ConstantValue(ty, ir.CScalar(value))
    if isinstance(ty, ir.TyBool):
        byte = reader.take(1)[0]
        if byte not in (0, 1):
            raise DecodeError(f"bad bool byte 0x{byte:02x}")
        return ir.ConstantValue(ty, ir.CBool(byte == 1))
    if isinstance(ty, ir.TyTuple):
        fields = tuple(_decode_ty(item, reader, crate) for item in ty.items)
        return ir.ConstantValue(ty, ir.CAdt(None, fields))
    if isinstance(ty, ir.TyAdt):
        decl = crate.type_decls[ty.decl_id]
        if isinstance(decl.kind, ir.StructKind):
            fields = tuple(
                _decode_ty(ir.substitute(f, ty.args), reader, crate) for f in decl.kind.fields
            )
            return ir.ConstantValue(ty, ir.CAdt(None, fields))
        tag = reader.take(1)[0]
        if tag >= len(decl.kind.variants):
            raise DecodeError(f"variant tag {tag} out of range for {decl.meta.name_str}")
        variant = decl.kind.variants[tag]
        fields = tuple(
            _decode_ty(ir.substitute(f, ty.args), reader, crate) for f in variant.fields
        )
        return ir.ConstantValue(ty, ir.CAdt(tag, fields))
    raise DecodeError(f"cannot decode a constant of type {type(ty).__name__}")


def decode_constant(value: ir.ConstantValue, crate: ir.TranslatedCrate) -> ir.ConstantValue:
    """Decode one raw constant against its declared type (little-endian
    scalars, one-byte bools, unpadded field concatenation, one-byte variant
    index tags). Raises DecodeError on malformed payloads."""
    assert isinstance(value.kind, ir.CRaw)
    reader = _Reader(value.kind.data)
    out = _decode_ty(value.ty, reader, crate)
    if not reader.done():
        raise DecodeError(f"{len(value.kind.data) - reader.pos} trailing bytes")
    return out


def encode_constant(value: ir.ConstantValue, crate: ir.TranslatedCrate) -> bytes:
    """Inverse of decoding; defined for structured (non-raw) constants."""
    kind = value.kind
    if isinstance(kind, ir.CScalar):
        assert isinstance(value.ty, ir.TyScalar)
        sk = value.ty.kind
        if not sk.in_range(kind.value):
            raise EncodeError(f"{kind.value} does not fit {sk.value}")
        return kind.value.to_bytes(sk.size, "little", signed=sk.signed)
    if isinstance(kind, ir.CBool):
        return b"\x01" if kind.value else b"\x00"
    if isinstance(kind, ir.CAdt):
        out = b""
        if kind.variant is not None:
            if kind.variant > 0xFF:
                raise EncodeError("variant tag exceeds one byte")
            out += bytes([kind.variant])
        for f in kind.fields:
            out += encode_constant(f, crate)
        return out
    raise EncodeError("raw constants cannot be re-encoded")


def decode_constants(
    crate: ir.TranslatedCrate,
) -> tuple[ir.TranslatedCrate, list[Diagnostic]]:
    """Replace every raw constant in every body; failures leave the
    individual constant in place and produce a `decode-error` diagnostic."""
    diags: list[Diagnostic] = []

    def decode_in_statementlike(node, span: ir.Span, fn_name: str):
        def visit(n):
            if isinstance(n, ir.ConstantValue) and isinstance(n.kind, ir.CRaw):
                try:
                    return decode_constant(n, crate)
                except DecodeError as exc:
                    diags.append(Diagnostic("decode-error", str(exc), span, fn_name))
            return None

        return tree.transform(node, visit)

    new_funs = []
    for decl in crate.fun_decls:
        body = decl.body
        if not isinstance(body, ir.UllbcBody):
            new_funs.append(decl)
            continue
        new_blocks = []
        for block in body.blocks:
            stmts = tuple(
                decode_in_statementlike(s, s.span, decl.meta.name_str) for s in block.statements
            )
            term = decode_in_statementlike(
                block.terminator, block.terminator.span, decl.meta.name_str
            )
            new_blocks.append(ir.BasicBlock(stmts, term))
        new_funs.append(replace(decl, body=replace(body, blocks=tuple(new_blocks))))
    return replace(crate, fun_decls=tuple(new_funs)), diags


def count_raw_constants(crate: ir.TranslatedCrate) -> int:
    return sum(1 for n in tree.iter_nodes(crate) if isinstance(n, ir.CRaw))


# ---------------------------------------------------------------------------
# Pass: declaration groups


def decl_dependencies(crate: ir.TranslatedCrate, decl_id: ir.AnyDeclId) -> set[ir.AnyDeclId]:
    """Every declaration mentioned by a declaration's types, signature, or body."""
    table = {
        ir.DeclKind.TYPE: crate.type_decls,
        ir.DeclKind.FUN: crate.fun_decls,
        ir.DeclKind.TRAIT_DECL: crate.trait_decls,
        ir.DeclKind.TRAIT_IMPL: crate.trait_impls,
    }[decl_id.kind]
    if not (0 <= decl_id.index < len(table)):
        return set()
    decl = table[decl_id.index]
    deps: set[ir.AnyDeclId] = set()
    for node in tree.iter_nodes(decl):
        if isinstance(node, ir.TyAdt):
            deps.add(ir.AnyDeclId(ir.DeclKind.TYPE, node.decl_id))
        elif isinstance(node, ir.RvAggregate):
            deps.add(ir.AnyDeclId(ir.DeclKind.TYPE, node.decl_id))
        elif isinstance(node, ir.TraitClause):
            deps.add(ir.AnyDeclId(ir.DeclKind.TRAIT_DECL, node.trait_decl_id))
        elif isinstance(node, ir.TraitImplRef):
            deps.add(ir.AnyDeclId(ir.DeclKind.TRAIT_IMPL, node.impl_id))
        elif isinstance(node, ir.FnFun):
            deps.add(ir.AnyDeclId(ir.DeclKind.FUN, node.fun_decl_id))
        elif isinstance(node, ir.FnUnresolvedTraitMethod):
            deps.add(ir.AnyDeclId(ir.DeclKind.TRAIT_DECL, node.trait_decl_id))
    if isinstance(decl, ir.TraitImpl):
        deps.add(ir.AnyDeclId(ir.DeclKind.TRAIT_DECL, decl.trait_decl_id))
        for _name, fun_id in decl.methods:
            deps.add(ir.AnyDeclId(ir.DeclKind.FUN, fun_id))
    return deps


def compute_decl_groups(crate: ir.TranslatedCrate) -> ir.TranslatedCrate:
    """Group declarations into strongly connected components and order the
    groups so every dependency precedes its dependents; ties break on
    ascending (kind, id)."""
    nodes = crate.all_decl_ids()
    deps = {n: {d for d in decl_dependencies(crate, n) if d in set(nodes)} for n in nodes}
    sccs = _tarjan(nodes, deps)
    # Map node -> component, build the condensation, then a deterministic Kahn.
    comp_of: dict[ir.AnyDeclId, int] = {}
    for i, scc in enumerate(sccs):
        for n in scc:
            comp_of[n] = i
    comp_deps: list[set[int]] = [set() for _ in sccs]
    for n in nodes:
        for d in deps[n]:
            if comp_of[d] != comp_of[n]:
                comp_deps[comp_of[n]].add(comp_of[d])
    indegree = [0] * len(sccs)
    dependents: list[set[int]] = [set() for _ in sccs]
    for ci, ds in enumerate(comp_deps):
        indegree[ci] = len(ds)
        for d in ds:
            dependents[d].add(ci)
    keys = [min(n.sort_key() for n in scc) for scc in sccs]
    ready = [(keys[i], i) for i in range(len(sccs)) if indegree[i] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        _, ci = heapq.heappop(ready)
        order.append(ci)
        for dep in sorted(dependents[ci]):
            indegree[dep] -= 1
            if indegree[dep] == 0:
                heapq.heappush(ready, (keys[dep], dep))
    groups: list[ir.DeclGroup] = []
    for ci in order:
        members = sorted(sccs[ci], key=ir.AnyDeclId.sort_key)
        if len(members) == 1 and members[0] not in deps[members[0]]:
            groups.append(ir.GroupNonRecursive(members[0]))
        else:
            groups.append(ir.GroupRecursive(tuple(members)))
    return replace(crate, decl_groups=tuple(groups))


def _tarjan(nodes, deps) -> list[list]:
    index: dict = {}
    lowlink: dict = {}
    on_stack: set = set()
    stack: list = []
    sccs: list[list] = []
    counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(sorted(deps[root], key=ir.AnyDeclId.sort_key)))]
        index[root] = lowlink[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = lowlink[succ] = counter[0]
                    counter[0] += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(sorted(deps[succ], key=ir.AnyDeclId.sort_key))))
                    advanced = True
                    break
                if succ in on_stack:
                    lowlink[node] = min(lowlink[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                scc = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    scc.append(member)
                    if member == node:
                        break
                sccs.append(scc)
    return sccs


# ---------------------------------------------------------------------------
# Pipeline


def run_pipeline(
    crate: ir.TranslatedCrate, config: PassConfig = PassConfig()
) -> tuple[ir.TranslatedCrate, list[Diagnostic]]:
    """Run the enabled passes in their fixed order, aggregating diagnostics;
    never aborts the crate."""
    diags: list[Diagnostic] = []

    def map_bodies(f):
        nonlocal crate
        new_funs = []
        for decl in crate.fun_decls:
            if isinstance(decl.body, ir.UllbcBody):
                new_funs.append(replace(decl, body=f(decl)))
            else:
                new_funs.append(decl)
        crate = replace(crate, fun_decls=tuple(new_funs))

    if config.panics:
        map_bodies(lambda d: unify_panics(d.body, crate, config.panic_fns))
    if config.checked_arith:
        map_bodies(lambda d: fuse_checked_arith(d.body))
    if config.match_reconstruction:

        def run_match(decl):
            new_body, body_diags = reconstruct_matches(decl.body, crate, decl.meta.name_str)
            diags.extend(body_diags)
            return new_body

        map_bodies(run_match)
    if config.constants:
        crate, decode_diags = decode_constants(crate)
        diags.extend(decode_diags)
    if config.decl_groups:
        crate = compute_decl_groups(crate)
    return crate, diags
