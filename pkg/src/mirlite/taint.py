"""Constant-time taint checker over structured bodies.

A flow-, field-, and context-sensitive forward analysis. Sensitivity roots
are parameters carrying a ``secret::<param>`` attribute; taint propagates
through assignments with field precision up to depth four (deeper structure
collapses to the join of its children, which never loses secrecy). Sinks:

- ``branch``: any if/switch/match scrutinee carrying a secret;
- ``index``: any place-projection index offset carrying a secret;
- ``div``: a variable-latency operator (``div``/``rem`` by default,
  configurable) with a secret operand.

A ``declassify`` attribute on a statement resets its destination to public
after the assignment. There is no alias analysis: references are tracked as
single known targets where syntactically evident, and anything murkier
degrades to joining conservatively. Calls are summarized per (function,
argument-taint vector); recursion iterates those summaries to a fixpoint
over the finite lattice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import ir, traits
from .diagnostics import Diagnostic

FIELD_DEPTH = 4

SECRET_ATTR = "secret"
DECLASSIFY_ATTR = "declassify"


class AnalysisError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.reason = message


# ---------------------------------------------------------------------------
# Taint trees


@dataclass(frozen=True)
class Tree:
    """Sparse taint tree: `leaf` covers everything not refined by `children`."""

    leaf: bool = False
    children: tuple[tuple[int, "Tree"], ...] = ()

    def child(self, index: int) -> "Tree":
        for i, t in self.children:
            if i == index:
                return t
        return Tree(self.leaf)

    def with_child(self, index: int, sub: "Tree") -> "Tree":
        items = dict(self.children)
        items[index] = sub
        return Tree(self.leaf, tuple(sorted(items.items())))


PUBLIC = Tree(False)
SECRET = Tree(True)


def collapse(t: Tree) -> bool:
    return t.leaf or any(collapse(c) for _, c in t.children)


def join(a: Tree, b: Tree) -> Tree:
    leaf = a.leaf or b.leaf
    keys = sorted({i for i, _ in a.children} | {i for i, _ in b.children})
    children = tuple((i, join(a.child(i), b.child(i))) for i in keys)
    children = tuple((i, c) for i, c in children if c != Tree(leaf))
    return Tree(leaf, children)


def truncate(t: Tree, depth: int = FIELD_DEPTH) -> Tree:
    if depth <= 0:
        return Tree(collapse(t))
    children = tuple((i, truncate(c, depth - 1)) for i, c in t.children)
    children = tuple((i, c) for i, c in children if c != Tree(t.leaf))
    return Tree(t.leaf, children)


def read_any_child(t: Tree) -> Tree:
    """Read at an unknown index: the join over every possible element."""
    out = Tree(t.leaf)
    for _, c in t.children:
        out = join(out, c)
    return out


def tree_read(t: Tree, path: tuple) -> Tree:
    for step in path:
        tag, arg = step
        if tag == "f":
            t = t.child(arg)
        elif tag == "i":
            t = read_any_child(t)
        # downcasts are transparent
    return t


def tree_write(t: Tree, path: tuple, value: Tree) -> Tree:
    if not path:
        return value
    tag, arg = path[0]
    if tag == "f":
        return t.with_child(arg, tree_write(t.child(arg), path[1:], value))
    if tag == "i":
        # Unknown element: weak update over the whole level.
        return join(t, Tree(collapse(tree_write(PUBLIC, path[1:], value))))
    return tree_write(t, path[1:], value)


# ---------------------------------------------------------------------------
# Analysis state


UNKNOWN_REF = "?"


@dataclass
class State:
    locals: dict[int, Tree] = field(default_factory=dict)
    refs: dict[int, object] = field(default_factory=dict)  # local -> (local, path) | "?"

    def tree(self, local: int) -> Tree:
        return self.locals.get(local, PUBLIC)

    def set_tree(self, local: int, t: Tree) -> None:
        t = truncate(t)
        if t == PUBLIC:
            self.locals.pop(local, None)
        else:
            self.locals[local] = t

    def copy(self) -> "State":
        return State(dict(self.locals), dict(self.refs))

    def snapshot(self) -> tuple:
        return (
            tuple(sorted(self.locals.items(), key=lambda kv: kv[0])),
            tuple(sorted(self.refs.items(), key=lambda kv: kv[0])),
        )


def join_states(a: Optional[State], b: Optional[State]) -> Optional[State]:
    if a is None:
        return b.copy() if b is not None else None
    if b is None:
        return a.copy()
    out = State()
    for local in set(a.locals) | set(b.locals):
        out.set_tree(local, join(a.tree(local), b.tree(local)))
    for local in set(a.refs) | set(b.refs):
        ra, rb = a.refs.get(local), b.refs.get(local)
        out.refs[local] = ra if ra == rb else UNKNOWN_REF
    return out


@dataclass
class FlowResult:
    fallthrough: Optional[State]
    returns: Optional[State] = None
    breaks: dict[int, State] = field(default_factory=dict)
    continues: dict[int, State] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Violations and reports


@dataclass(frozen=True)
class Violation:
    kind: str
    span: ir.Span
    function: str
    message: str

    def sort_key(self):
        s = self.span
        return (s.file_id, s.start_line, s.start_col, self.kind, self.function, self.message)


@dataclass
class FnReport:
    function: str
    secret_params: tuple[str, ...]
    output_secret: bool


@dataclass
class Report:
    violations: list[Violation]
    functions: list[FnReport]


@dataclass(frozen=True)
class AnalysisConfig:
    variable_latency: tuple[ir.BinOp, ...] = (ir.BinOp.DIV, ir.BinOp.REM)
    opaque_mode: str = "taint"  # or "error"


@dataclass(frozen=True)
class Summary:
    output: Tree
    param_trees: tuple[Tree, ...]  # post-state of each parameter (for by-ref effects)


BOTTOM_SUMMARY = Summary(PUBLIC, ())


# ---------------------------------------------------------------------------
# The analyzer


class Analyzer:
    def __init__(self, crate: ir.TranslatedCrate, config: AnalysisConfig = AnalysisConfig()):
        self.crate = crate
        self.config = config
        self.violations: set[Violation] = set()
        self.summaries: dict[tuple, Summary] = {}

    # -- function-level -------------------------------------------------------

    def secret_params(self, decl: ir.FunDecl) -> set[int]:
        body = decl.body
        assert isinstance(body, ir.LlbcBody)
        names = {local.name: i for i, local in enumerate(body.locals[: 1 + body.arg_count])}
        out = set()
        for attr in decl.meta.attributes:
            parts = attr.split("::")
            if len(parts) == 2 and parts[0] == SECRET_ATTR and parts[1] in names:
                out.add(names[parts[1]])
        return out

    def summarize(self, fun_id: int, inputs: tuple[Tree, ...], stack: frozenset) -> Summary:
        decl = self.crate.fun_decls[fun_id]
        body = decl.body
        if not isinstance(body, ir.LlbcBody):
            if self.config.opaque_mode == "error":
                raise AnalysisError("missing-body", f"{decl.meta.name_str} has no body")
            everything = Tree(any(collapse(t) for t in inputs))
            return Summary(everything, tuple(everything for _ in inputs))
        key = (fun_id, inputs)
        if key in stack:
            return self.summaries.get(key, BOTTOM_SUMMARY)
        stack = stack | {key}
        while True:
            previous = self.summaries.get(key, BOTTOM_SUMMARY)
            self.summaries[key] = previous
            computed = self._analyze_fn(decl, body, inputs, stack)
            joined = Summary(
                join(previous.output, computed.output),
                tuple(
                    join(a, b)
                    for a, b in zip(
                        previous.param_trees or computed.param_trees, computed.param_trees
                    )
                )
                if previous.param_trees
                else computed.param_trees,
            )
            if joined == previous:
                return joined
            self.summaries[key] = joined

    def _analyze_fn(
        self, decl: ir.FunDecl, body: ir.LlbcBody, inputs: tuple[Tree, ...], stack: frozenset
    ) -> Summary:
        state = State()
        secret = self.secret_params(decl)
        for i in range(body.arg_count):
            tree = inputs[i] if i < len(inputs) else PUBLIC
            if (1 + i) in secret:
                tree = join(tree, SECRET)
            state.set_tree(1 + i, tree)
        ctx = _FnCtx(self, decl, body, stack)
        result = ctx.analyze_block(state, body.body)
        final = result.returns
        if final is None:
            final = State()  # function never returns normally
        output = final.tree(0)
        params = tuple(final.tree(1 + i) for i in range(body.arg_count))
        return Summary(truncate(output), tuple(truncate(t) for t in params))

    # -- entry ------------------------------------------------------------------

    def analyze(self) -> Report:
        reports = []
        for decl in self.crate.fun_decls:
            body = decl.body
            if not isinstance(body, ir.LlbcBody):
                continue
            inputs = tuple(PUBLIC for _ in range(body.arg_count))
            summary = self.summarize(decl.decl_id, inputs, frozenset())
            secret = self.secret_params(decl)
            reports.append(
                FnReport(
                    decl.meta.name_str,
                    tuple(body.locals[i].name for i in sorted(secret)),
                    collapse(summary.output),
                )
            )
        violations = sorted(self.violations, key=Violation.sort_key)
        return Report(violations, reports)


class _FnCtx:
    """Per-function walk: state transformer plus sink checks."""

    def __init__(self, analyzer: Analyzer, decl: ir.FunDecl, body: ir.LlbcBody, stack: frozenset):
        self.analyzer = analyzer
        self.crate = analyzer.crate
        self.config = analyzer.config
        self.decl = decl
        self.body = body
        self.stack = stack
        self.fn_name = decl.meta.name_str

    def violation(self, kind: str, span: ir.Span, message: str) -> None:
        self.analyzer.violations.add(Violation(kind, span, self.fn_name, message))

    # -- places ------------------------------------------------------------------

    def resolve(self, state: State, place: ir.Place, span: ir.Span):
        """Resolve to (local, path) following known reference targets; checks
        index offsets for sink violations along the way. Returns None when
        the target is unknown (a write must then taint everything)."""
        local = place.local
        path: list = []
        for proj in place.projections:
            if isinstance(proj, ir.ProjDeref):
                if path:
                    return None  # reference reached through structure: untracked
                target = state.refs.get(local)
                if isinstance(target, tuple):
                    local, base_path = target
                    path = list(base_path)
                # No (or unknown) points-to entry: the reference layer is
                # transparent, so the local's own tree stands for the referent.
            elif isinstance(proj, ir.ProjField):
                path.append(("f", proj.index))
            elif isinstance(proj, ir.ProjDowncast):
                path.append(("d", proj.variant))
            else:
                offset_tree = self.operand_tree(state, proj.offset, span)
                if collapse(offset_tree):
                    self.violation("index", span, "index offset depends on a secret")
                path.append(("i", 0))
        return local, tuple(path)

    def place_tree(self, state: State, place: ir.Place, span: ir.Span) -> Tree:
        loc = self.resolve(state, place, span)
        if loc is None:
            return Tree(True) if any(collapse(t) for t in state.locals.values()) else PUBLIC
        local, path = loc
        return tree_read(state.tree(local), path)

    def write(self, state: State, place: ir.Place, tree: Tree, span: ir.Span) -> None:
        loc = self.resolve(state, place, span)
        if loc is None:
            # Unknown referent: spray the join over every local.
            spill = Tree(collapse(tree))
            for local in range(len(self.body.locals)):
                state.set_tree(local, join(state.tree(local), spill))
            return
        local, path = loc
        state.set_tree(local, tree_write(state.tree(local), path, tree))

    def operand_tree(self, state: State, op: ir.Operand, span: ir.Span) -> Tree:
        if isinstance(op, ir.OpConst):
            return PUBLIC
        return self.place_tree(state, op.place, span)

    # -- rvalues --------------------------------------------------------------------

    def rvalue_tree(self, state: State, rv: ir.Rvalue, span: ir.Span) -> Tree:
        if isinstance(rv, ir.RvUse):
            return self.operand_tree(state, rv.operand, span)
        if isinstance(rv, ir.RvBinOp):
            lhs = self.operand_tree(state, rv.lhs, span)
            rhs = self.operand_tree(state, rv.rhs, span)
            secret = collapse(lhs) or collapse(rhs)
            if rv.op in self.config.variable_latency and secret:
                self.violation(
                    "div", span, f"variable-latency {rv.op.value} on a secret operand"
                )
            if rv.op in ir.CHECKED_PAIR_OPS:
                leafed = Tree(secret)
                return Tree(False, ((0, leafed), (1, leafed))) if secret else PUBLIC
            return Tree(secret)
        if isinstance(rv, ir.RvUnOp):
            return Tree(collapse(self.operand_tree(state, rv.operand, span)))
        if isinstance(rv, ir.RvDiscriminant):
            return Tree(collapse(self.place_tree(state, rv.place, span)))
        if isinstance(rv, ir.RvAggregate):
            out = PUBLIC
            for i, op in enumerate(rv.operands):
                sub = self.operand_tree(state, op, span)
                if sub != PUBLIC:
                    out = out.with_child(i, sub)
            return out
        if isinstance(rv, ir.RvRef):
            return PUBLIC  # the pointer itself; the referent stays where it is
        raise AnalysisError("bad-node", f"cannot taint {type(rv).__name__}")

    # -- statements --------------------------------------------------------------------

    def analyze_block(self, state: Optional[State], block: ir.Block) -> FlowResult:
        result = FlowResult(fallthrough=state.copy() if state is not None else None)
        for stmt in block.statements:
            if result.fallthrough is None:
                break
            self.analyze_statement(result, stmt)
        return result

    def analyze_statement(self, result: FlowResult, stmt: ir.Statement) -> None:
        state = result.fallthrough
        assert state is not None
        kind = stmt.kind
        span = stmt.span
        if isinstance(kind, ir.SAssign):
            tree = self.rvalue_tree(state, kind.rvalue, span)
            self.write(state, kind.place, tree, span)
            self.track_refs(state, kind.place, kind.rvalue, span)
            if DECLASSIFY_ATTR in stmt.attributes:
                self.write(state, kind.place, PUBLIC, span)
        elif isinstance(kind, ir.SDrop):
            loc = self.resolve(state, kind.place, span)
            if loc is not None and not loc[1]:
                state.set_tree(loc[0], PUBLIC)
                state.refs.pop(loc[0], None)
        elif isinstance(kind, ir.SNop):
            pass
        elif isinstance(kind, ir.SCall):
            self.analyze_call(state, kind.call, span)
            if DECLASSIFY_ATTR in stmt.attributes:
                self.write(state, kind.call.dest, PUBLIC, span)
        elif isinstance(kind, ir.SReturn):
            result.returns = join_states(result.returns, state)
            result.fallthrough = None
        elif isinstance(kind, ir.SAbort):
            result.fallthrough = None
        elif isinstance(kind, ir.SBreak):
            result.breaks[kind.depth] = _join_opt(result.breaks.get(kind.depth), state)
            result.fallthrough = None
        elif isinstance(kind, ir.SContinue):
            result.continues[kind.depth] = _join_opt(result.continues.get(kind.depth), state)
            result.fallthrough = None
        elif isinstance(kind, ir.SLoop):
            self.analyze_loop(result, kind.body)
        elif isinstance(kind, ir.SSwitch):
            self.analyze_switch(result, kind.switch, span)
        else:
            raise AnalysisError("bad-node", f"unexpected statement {type(kind).__name__}")

    def track_refs(self, state: State, place: ir.Place, rv: ir.Rvalue, span: ir.Span) -> None:
        if place.projections:
            return
        if isinstance(rv, ir.RvRef):
            loc = self.resolve(state, rv.place, span)
            state.refs[place.local] = loc if loc is not None else UNKNOWN_REF
        elif isinstance(rv, ir.RvUse) and isinstance(rv.operand, (ir.OpMove, ir.OpCopy)):
            src = rv.operand.place
            if not src.projections and src.local in state.refs:
                state.refs[place.local] = state.refs[src.local]
        else:
            state.refs.pop(place.local, None)

    def analyze_loop(self, result: FlowResult, body: ir.Block) -> None:
        entry = result.fallthrough
        assert entry is not None
        while True:
            inner = self.analyze_block(entry, body)
            result.returns = join_states(result.returns, inner.returns)
            for depth, st in inner.breaks.items():
                if depth > 0:
                    result.breaks[depth - 1] = _join_opt(result.breaks.get(depth - 1), st)
            for depth, st in inner.continues.items():
                if depth > 0:
                    result.continues[depth - 1] = _join_opt(result.continues.get(depth - 1), st)
            back = inner.continues.get(0)
            next_entry = join_states(entry, back)
            assert next_entry is not None
            if next_entry.snapshot() == entry.snapshot():
                exit_state = inner.breaks.get(0)
                result.fallthrough = exit_state.copy() if exit_state is not None else None
                return
            entry = next_entry

    def analyze_switch(self, result: FlowResult, sw: ir.Switch, span: ir.Span) -> None:
        state = result.fallthrough
        assert state is not None
        if isinstance(sw, ir.SwIf):
            scrutinee = self.operand_tree(state, sw.condition, span)
            blocks = [sw.then_block, sw.else_block]
        elif isinstance(sw, ir.SwInt):
            scrutinee = self.operand_tree(state, sw.scrutinee, span)
            blocks = [b for _, b in sw.arms] + [sw.otherwise]
        else:
            scrutinee = self.place_tree(state, sw.scrutinee, span)
            blocks = [b for _, b in sw.arms] + (
                [sw.otherwise] if sw.otherwise is not None else []
            )
        if collapse(scrutinee):
            self.violation("branch", span, "branch condition depends on a secret")
        merged: Optional[State] = None
        for block in blocks:
            inner = self.analyze_block(state, block)
            result.returns = join_states(result.returns, inner.returns)
            for depth, st in inner.breaks.items():
                result.breaks[depth] = _join_opt(result.breaks.get(depth), st)
            for depth, st in inner.continues.items():
                result.continues[depth] = _join_opt(result.continues.get(depth), st)
            merged = join_states(merged, inner.fallthrough)
        result.fallthrough = merged

    # -- calls -------------------------------------------------------------------------

    def callee_fun_id(self, func: ir.FnOperand) -> Optional[int]:
        if not isinstance(func, ir.FnOpRegular):
            return None
        ptr = func.ptr
        if isinstance(ptr.func, ir.FnFun):
            return ptr.func.fun_decl_id
        if isinstance(ptr.func, ir.FnTraitMethod):
            try:
                impl_ref = traits.resolve_ref_to_impl(ptr.func.trait_ref, self.crate)
            except traits.ResolveError:
                return None
            return self.crate.trait_impls[impl_ref.impl_id].method_fun(ptr.func.method)
        return None

    def analyze_call(self, state: State, call: ir.Call, span: ir.Span) -> None:
        arg_trees = []
        ref_targets: list[Optional[tuple]] = []
        for op in call.args:
            if isinstance(op, (ir.OpMove, ir.OpCopy)) and not op.place.projections:
                local = op.place.local
                target = state.refs.get(local)
                if isinstance(target, tuple):
                    ref_targets.append(target)
                    arg_trees.append(tree_read(state.tree(target[0]), target[1]))
                    continue
                if target == UNKNOWN_REF or isinstance(
                    self.body.locals[local].ty, ir.TyRef
                ):
                    ref_targets.append((local, ()))
                    arg_trees.append(state.tree(local))
                    continue
            ref_targets.append(None)
            arg_trees.append(self.operand_tree(state, op, span))
        fun_id = self.callee_fun_id(call.func)
        inputs = tuple(truncate(t) for t in arg_trees)
        if fun_id is None:
            if self.config.opaque_mode == "error":
                raise AnalysisError("missing-body", "call target has no analyzable body")
            spill = Tree(any(collapse(t) for t in inputs))
            summary = Summary(spill, tuple(spill for _ in inputs))
        else:
            summary = self.analyzer.summarize(fun_id, inputs, self.stack)
        for target, out_tree in zip(ref_targets, summary.param_trees or [PUBLIC] * len(inputs)):
            if target is not None:
                local, path = target
                state.set_tree(local, tree_write(state.tree(local), path, out_tree))
        self.write(state, call.dest, summary.output, span)


def _join_opt(a: Optional[State], b: State) -> State:
    out = join_states(a, b)
    assert out is not None
    return out


# ---------------------------------------------------------------------------
# Entry point and report rendering


def analyze_crate(crate: ir.TranslatedCrate, config: AnalysisConfig = AnalysisConfig()) -> Report:
    """Run the checker over every structured body in the crate."""
    return Analyzer(crate, config).analyze()


def render_text(report: Report, files: tuple[ir.FileRecord, ...]) -> str:
    lines = []
    for v in report.violations:
        d = Diagnostic(v.kind, v.message, v.span, v.function)
        lines.append("violation: " + d.render(files))
    lines.append(f"{len(report.violations)} violation(s)")
    for fn in report.functions:
        secret = ", ".join(fn.secret_params) if fn.secret_params else "-"
        out = "secret" if fn.output_secret else "public"
        lines.append(f"fn {fn.function}: secret params [{secret}], output {out}")
    return "\n".join(lines) + "\n"


def render_json(report: Report, files: tuple[ir.FileRecord, ...]) -> str:
    def span_obj(s: ir.Span):
        name = files[s.file_id].name if 0 <= s.file_id < len(files) else f"file#{s.file_id}"
        return {
            "file": name,
            "start_line": s.start_line,
            "start_col": s.start_col,
            "end_line": s.end_line,
            "end_col": s.end_col,
        }

    doc = {
        "violations": [
            {
                "kind": v.kind,
                "span": span_obj(v.span),
                "function": v.function,
                "message": v.message,
            }
            for v in report.violations
        ],
        "functions": [
            {
                "function": f.function,
                "secret_params": list(f.secret_params),
                "output_secret": f.output_secret,
            }
            for f in report.functions
        ],
    }
    return json.dumps(doc, indent=1) + "\n"
