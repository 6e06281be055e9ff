"""Control-flow restructuring: CFG bodies into loop/branch ASTs.

The algorithm is dominator-based. Natural loops become `Loop` nodes; a branch
rejoins at the immediate post-dominator of the branching block (computed on
the CFG augmented with a virtual exit); edges back to a loop header become
`Continue`, edges to the loop's selected exit become `Break`. Blocks shared
between paths without being a join are duplicated, at most four copies each;
past that the body is given up on (`multi-exit-unsupported`) and the caller
falls back to an opaque body. Irreducible graphs are rejected outright.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from . import ir
from .diagnostics import Diagnostic
from .passes import predecessors, prune_unreachable, reachable_blocks, successors

DUPLICATION_CAP = 4

EXIT = -1  # virtual exit node for post-dominance


class RestructureError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.reason = message


# ---------------------------------------------------------------------------
# Dominators


def _postorder(n_blocks: int, succ: dict[int, list[int]], entry: int) -> list[int]:
    seen = set()
    order: list[int] = []
    stack: list[tuple[int, int]] = [(entry, 0)]
    seen.add(entry)
    while stack:
        node, i = stack[-1]
        succs = succ[node]
        if i < len(succs):
            stack[-1] = (node, i + 1)
            nxt = succs[i]
            if nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, 0))
        else:
            stack.pop()
            order.append(node)
    return order


def _iterative_idoms(
    nodes: list[int], entry: int, succ: dict[int, list[int]], pred: dict[int, list[int]]
) -> dict[int, int]:
    """Cooper-Harvey-Kennedy style iteration over reverse postorder."""
    post = _postorder(len(nodes), succ, entry)
    number = {b: i for i, b in enumerate(post)}
    rpo = list(reversed(post))
    idom: dict[int, Optional[int]] = {b: None for b in post}
    idom[entry] = entry

    def intersect(a: int, b: int) -> int:
        while a != b:
            while number[a] < number[b]:
                a = idom[a]  # type: ignore[assignment]
            while number[b] < number[a]:
                b = idom[b]  # type: ignore[assignment]
        return a

    changed = True
    while changed:
        changed = False
        for b in rpo:
            if b == entry:
                continue
            candidates = [p for p in pred[b] if p in number and idom[p] is not None]
            if not candidates:
                continue
            new = candidates[0]
            for p in candidates[1:]:
                new = intersect(new, p)
            if idom[b] != new:
                idom[b] = new
                changed = True
    return {b: d for b, d in idom.items() if d is not None}


def compute_dominators(body: ir.UllbcBody) -> dict[int, int]:
    """Immediate dominators; the entry maps to itself.

    Expects every block to be reachable (prune first).
    """
    reachable = reachable_blocks(body)
    if len(reachable) != len(body.blocks):
        raise RestructureError("irreducible-cfg", "unreachable blocks present; prune first")
    succ = {b: successors(body.blocks[b].terminator) for b in range(len(body.blocks))}
    pred = {b: sorted(p) for b, p in predecessors(body).items()}
    return _iterative_idoms(list(range(len(body.blocks))), 0, succ, pred)


def dominates(idoms: dict[int, int], a: int, b: int) -> bool:
    while True:
        if a == b:
            return True
        parent = idoms[b]
        if parent == b:
            return False
        b = parent


def compute_postdominators(body: ir.UllbcBody) -> dict[int, Optional[int]]:
    """Immediate post-dominators over the CFG plus a virtual exit node.

    Blocks that cannot reach the exit (infinite loops) map to None; everyone
    else maps to a block id or EXIT.
    """
    n = len(body.blocks)
    succ: dict[int, list[int]] = {}
    for b in range(n):
        out = successors(body.blocks[b].terminator)
        succ[b] = out if out else [EXIT]
    succ[EXIT] = []
    pred: dict[int, list[int]] = {b: [] for b in list(range(n)) + [EXIT]}
    for b, out in succ.items():
        for s in out:
            pred[s].append(b)
    # Post-dominance is dominance on the reversed graph rooted at EXIT.
    idoms = _iterative_idoms(list(range(n)) + [EXIT], EXIT, pred, succ)
    out_map: dict[int, Optional[int]] = {}
    for b in range(n):
        out_map[b] = idoms.get(b) if idoms.get(b) != b else None
        if b not in idoms:
            out_map[b] = None
    return out_map


def _postdom_chain(ipostdoms: dict[int, Optional[int]], b: int) -> list[int]:
    chain = [b]
    cur: Optional[int] = b
    seen = {b}
    while True:
        cur = ipostdoms.get(cur)
        if cur is None or cur == EXIT or cur in seen:
            break
        chain.append(cur)
        seen.add(cur)
    return chain


def postdominates_strict(ipostdoms: dict[int, Optional[int]], a: int, b: int) -> bool:
    return a in _postdom_chain(ipostdoms, b)


# ---------------------------------------------------------------------------
# Natural loops


@dataclass
class Loop:
    header: int
    blocks: frozenset[int]
    parent: Optional[int] = None  # header of the enclosing loop, if any


def find_loops(body: ir.UllbcBody, idoms: dict[int, int]) -> list[Loop]:
    """Natural loops per dominating back edge, merged per header, parents
    before children. Raises `irreducible-cfg` when a loop body is entered
    around its header or a cycle has no dominating header."""
    n = len(body.blocks)
    succ = {b: successors(body.blocks[b].terminator) for b in range(n)}
    pred = predecessors(body)
    members: dict[int, set[int]] = {}
    for u in range(n):
        for h in succ[u]:
            if dominates(idoms, h, u):  # back edge u -> h
                body_set = members.setdefault(h, {h})
                stack = [u]
                while stack:
                    x = stack.pop()
                    if x in body_set:
                        continue
                    body_set.add(x)
                    stack.extend(pred[x])
    for h, blocks in members.items():
        for w in blocks:
            if w == h:
                continue
            for p in pred[w]:
                if p not in blocks:
                    raise RestructureError(
                        "irreducible-cfg",
                        f"bb{p} jumps into the loop at bb{h} around its header",
                    )
    _check_cycles_have_headers(n, succ, members)
    loops = [Loop(h, frozenset(blocks)) for h, blocks in members.items()]
    loops.sort(key=lambda l: (-len(l.blocks), l.header))
    for loop in loops:
        enclosing = [
            other
            for other in loops
            if other.header != loop.header and loop.blocks < other.blocks
        ]
        if enclosing:
            loop.parent = min(enclosing, key=lambda l: len(l.blocks)).header
    return loops


def _check_cycles_have_headers(n, succ, members) -> None:
    """Any cycle must live inside some natural loop; otherwise the graph is
    irreducible (a retreating edge without a dominating target)."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = [0]
    for root in range(n):
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for s in it:
                if s not in index:
                    index[s] = low[s] = counter[0]
                    counter[0] += 1
                    stack.append(s)
                    on_stack.add(s)
                    work.append((s, iter(succ[s])))
                    advanced = True
                    break
                if s in on_stack:
                    low[node] = min(low[node], index[s])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                scc = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    scc.append(member)
                    if member == node:
                        break
                sccs.append(scc)
    for scc in sccs:
        nontrivial = len(scc) > 1 or any(s in succ[s] for s in scc)
        if not nontrivial:
            continue
        scc_set = set(scc)
        if not any(h in scc_set and scc_set <= set(blocks) for h, blocks in members.items()):
            raise RestructureError(
                "irreducible-cfg", f"cycle {sorted(scc_set)} has no dominating header"
            )


# ---------------------------------------------------------------------------
# Restructuring


@dataclass
class _LoopCtx:
    header: int
    break_target: Optional[int]


@dataclass
class _JoinCtx:
    join: int


_Ctx = Union[_LoopCtx, _JoinCtx]


class _Bail(Exception):
    pass


class _Emitter:
    def __init__(self, body: ir.UllbcBody, crate: ir.TranslatedCrate):
        self.body = body
        self.crate = crate
        self.idoms = compute_dominators(body)
        self.ipostdoms = compute_postdominators(body)
        self.loops = {l.header: l for l in find_loops(body, self.idoms)}
        self.emit_count: dict[int, int] = {}

    # -- context ---------------------------------------------------------------

    @staticmethod
    def ctx_transfer(ctx: list[_Ctx], target: int) -> Optional[list[ir.StatementKind]]:
        depth = 0
        for entry in reversed(ctx):
            if isinstance(entry, _LoopCtx):
                if entry.header == target:
                    return [ir.SContinue(depth)]
                if entry.break_target == target:
                    return [ir.SBreak(depth)]
                depth += 1
            elif entry.join == target:
                return []
        return None

    @staticmethod
    def ctx_handles(ctx: list[_Ctx], target: int) -> bool:
        return _Emitter.ctx_transfer(ctx, target) is not None

    # -- emission ----------------------------------------------------------------

    def emit_from(self, target: int, ctx: list[_Ctx], span: ir.Span) -> list[ir.Statement]:
        transfer = self.ctx_transfer(ctx, target)
        if transfer is not None:
            return [ir.Statement(span, kind) for kind in transfer]
        return self.emit_block(target, ctx)

    def emit_block(self, bid: int, ctx: list[_Ctx]) -> list[ir.Statement]:
        self.emit_count[bid] = self.emit_count.get(bid, 0) + 1
        if self.emit_count[bid] > DUPLICATION_CAP:
            raise _Bail()
        loop = self.loops.get(bid)
        inside = any(isinstance(e, _LoopCtx) and e.header == bid for e in ctx)
        if loop is not None and not inside:
            return self.emit_loop(loop, ctx)
        return self.emit_linear(bid, ctx)

    def emit_loop(self, loop: Loop, ctx: list[_Ctx]) -> list[ir.Statement]:
        exits: list[int] = []
        for u in sorted(loop.blocks):
            for v in successors(self.body.blocks[u].terminator):
                if v not in loop.blocks and v not in exits:
                    exits.append(v)
        break_target = self.select_exit(exits)
        inner_ctx = ctx + [_LoopCtx(loop.header, break_target)]
        term_span = self.body.blocks[loop.header].terminator.span
        body_stmts = self.emit_linear(loop.header, inner_ctx)
        block_span = body_stmts[0].span if body_stmts else term_span
        out = [ir.Statement(term_span, ir.SLoop(ir.Block(block_span, tuple(body_stmts))))]
        if break_target is not None and not self.ctx_handles(ctx, break_target):
            out += self.emit_block(break_target, ctx)
        return out

    def select_exit(self, exits: list[int]) -> Optional[int]:
        if not exits:
            return None
        if len(exits) == 1:
            return exits[0]
        for candidate in exits:
            if all(
                other == candidate or postdominates_strict(self.ipostdoms, candidate, other)
                for other in exits
            ):
                return candidate
        # No common post-exit: first target in deterministic edge order; the
        # other exit paths get inlined (duplication fallback).
        return exits[0]

    def emit_linear(self, bid: int, ctx: list[_Ctx]) -> list[ir.Statement]:
        block = self.body.blocks[bid]
        stmts = list(block.statements)
        term = block.terminator
        kind = term.kind
        if isinstance(kind, ir.TGoto):
            stmts += self.emit_from(kind.target, ctx, term.span)
        elif isinstance(kind, ir.TReturn):
            stmts.append(ir.Statement(term.span, ir.SReturn(), term.comments))
        elif isinstance(kind, ir.TAbort):
            stmts.append(ir.Statement(term.span, ir.SAbort(kind.kind), term.comments))
        elif isinstance(kind, ir.TUnreachable):
            stmts.append(
                ir.Statement(term.span, ir.SAbort(ir.AbortKind.UNDEFINED_BEHAVIOR), term.comments)
            )
        elif isinstance(kind, ir.TCall):
            stmts.append(ir.Statement(term.span, ir.SCall(kind.call), term.comments))
            stmts += self.emit_from(kind.target, ctx, term.span)
        elif isinstance(kind, ir.TAssert):
            trap = ir.Block(term.span, (ir.Statement(term.span, ir.SAbort(ir.AbortKind.PANIC)),))
            empty = ir.Block(term.span, ())
            then_block, else_block = (empty, trap) if kind.expected else (trap, empty)
            switch = ir.SwIf(kind.condition, then_block, else_block)
            stmts.append(ir.Statement(term.span, ir.SSwitch(switch), term.comments))
            stmts += self.emit_from(kind.target, ctx, term.span)
        elif isinstance(kind, (ir.TSwitchInt, ir.TMatch)):
            stmts += self.emit_branch(bid, term, ctx)
        else:
            raise RestructureError("irreducible-cfg", f"unknown terminator {type(kind).__name__}")
        return stmts

    def emit_branch(self, bid: int, term: ir.Terminator, ctx: list[_Ctx]) -> list[ir.Statement]:
        kind = term.kind
        join = self.ipostdoms.get(bid)
        has_join = join is not None and join != EXIT and not self.ctx_handles(ctx, join)
        arm_ctx = ctx + [_JoinCtx(join)] if has_join else ctx

        def arm(target: int) -> ir.Block:
            stmts = self.emit_from(target, arm_ctx, term.span)
            span = stmts[0].span if stmts else term.span
            return ir.Block(span, tuple(stmts))

        if isinstance(kind, ir.TSwitchInt):
            if not kind.cases:
                # Degenerate switch: a plain jump.
                return self.emit_from(kind.otherwise, ctx, term.span)
            if self.scrutinee_is_bool(kind.scrutinee):
                switch = self.bool_switch(kind, arm)
            else:
                arms = tuple((v, arm(t)) for v, t in kind.cases)
                switch = ir.SwInt(kind.scrutinee, arms, arm(kind.otherwise))
        else:
            assert isinstance(kind, ir.TMatch)
            arms = tuple((v, arm(t)) for v, t in kind.arms)
            otherwise = arm(kind.otherwise) if kind.otherwise is not None else None
            switch = ir.SwMatch(kind.scrutinee, arms, otherwise)
        out = [ir.Statement(term.span, ir.SSwitch(switch), term.comments)]
        if has_join:
            out += self.emit_from(join, ctx, term.span)
        return out

    def bool_switch(self, kind: ir.TSwitchInt, arm) -> ir.SwIf:
        by_value = dict(kind.cases)
        then_target = by_value.get(1, kind.otherwise)
        else_target = by_value.get(0, kind.otherwise)
        return ir.SwIf(kind.scrutinee, arm(then_target), arm(else_target))

    def scrutinee_is_bool(self, op: ir.Operand) -> bool:
        if isinstance(op, ir.OpConst):
            return isinstance(op.value.ty, ir.TyBool)
        ty: Optional[ir.Ty] = self.body.locals[op.place.local].ty
        for proj in op.place.projections:
            if ty is None:
                return False
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
        return isinstance(ty, ir.TyBool)

    def run(self) -> ir.LlbcBody:
        entry_span = self.body.blocks[0].terminator.span
        stmts = self.emit_block(0, [])
        assert sum(self.emit_count.values()) <= DUPLICATION_CAP * len(self.body.blocks)
        span = stmts[0].span if stmts else entry_span
        return ir.LlbcBody(
            self.body.locals, self.body.arg_count, ir.Block(span, tuple(stmts))
        )


def restructure(body: ir.UllbcBody, crate: ir.TranslatedCrate) -> ir.LlbcBody:
    """Rebuild structured control flow for one body.

    Raises RestructureError: `irreducible-cfg` for loops entered around their
    header, `multi-exit-unsupported` when block duplication exceeds the cap.
    """
    pruned = prune_unreachable(body)
    emitter = _Emitter(pruned, crate)
    try:
        return emitter.run()
    except _Bail:
        raise RestructureError(
            "multi-exit-unsupported",
            f"block duplication exceeded {DUPLICATION_CAP} copies",
        )


def restructure_crate(
    crate: ir.TranslatedCrate,
) -> tuple[ir.TranslatedCrate, list[Diagnostic]]:
    """Restructure every CFG body; failures fall back to an opaque body with
    a diagnostic so the rest of the crate still goes through."""
    diags: list[Diagnostic] = []
    new_funs = []
    for decl in crate.fun_decls:
        if not isinstance(decl.body, ir.UllbcBody):
            new_funs.append(decl)
            continue
        try:
            new_funs.append(replace(decl, body=restructure(decl.body, crate)))
        except RestructureError as exc:
            diags.append(Diagnostic(exc.code, exc.reason, decl.meta.span, decl.meta.name_str))
            new_funs.append(replace(decl, body=None))
    return replace(crate, fun_decls=tuple(new_funs)), diags


# ---------------------------------------------------------------------------
# Structural validation of the result


def check_llbc_structure(body: ir.LlbcBody) -> list[str]:
    """Break/Continue depth discipline plus terminality: every path through
    the body must end in Return, Abort, Break, Continue, or a loop that never
    breaks out."""
    problems: list[str] = []

    def block_terminates(block: ir.Block, depth: int) -> bool:
        terminated = False
        for stmt in block.statements:
            if terminated:
                problems.append("statement after a terminal statement")
            kind = stmt.kind
            if isinstance(kind, (ir.SReturn, ir.SAbort)):
                terminated = True
            elif isinstance(kind, (ir.SBreak, ir.SContinue)):
                if kind.depth >= depth:
                    problems.append(
                        f"{type(kind).__name__[1:].lower()}({kind.depth}) at nesting {depth}"
                    )
                terminated = True
            elif isinstance(kind, ir.SLoop):
                inner_terminates = block_terminates(kind.body, depth + 1)
                if not inner_terminates:
                    problems.append("loop body can fall through")
                if not _loop_breaks_out(kind.body, 0):
                    terminated = True  # infinite loop: nothing runs after
            elif isinstance(kind, ir.SSwitch):
                sw = kind.switch
                arms = _switch_blocks(sw)
                if all(block_terminates(a, depth) for a in arms) and _switch_total(sw):
                    terminated = True
        return terminated

    def _loop_breaks_out(block: ir.Block, level: int) -> bool:
        for stmt in block.statements:
            kind = stmt.kind
            if isinstance(kind, ir.SBreak) and kind.depth == level:
                return True
            if isinstance(kind, ir.SLoop) and _loop_breaks_out(kind.body, level + 1):
                return True
            if isinstance(kind, ir.SSwitch):
                for sub in _switch_blocks(kind.switch):
                    if _loop_breaks_out(sub, level):
                        return True
        return False

    def _switch_blocks(sw: ir.Switch) -> list[ir.Block]:
        if isinstance(sw, ir.SwIf):
            return [sw.then_block, sw.else_block]
        if isinstance(sw, ir.SwInt):
            return [b for _, b in sw.arms] + [sw.otherwise]
        return [b for _, b in sw.arms] + ([sw.otherwise] if sw.otherwise is not None else [])

    def _switch_total(sw: ir.Switch) -> bool:
        # A match without otherwise still covers every declared variant by
        # construction; treat arm-total switches as covering.
        return True

    if not block_terminates(body.body, 0):
        problems.append("body can fall through without returning")
    return problems


def contains_goto(body: ir.LlbcBody) -> bool:
    """Structured bodies never carry CFG terminators; cheap sanity check."""
    from . import tree

    return any(
        isinstance(n, (ir.TGoto, ir.TSwitchInt, ir.TMatch, ir.TAssert, ir.TCall))
        for n in tree.iter_nodes(body)
    )
