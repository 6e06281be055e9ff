"""Shared test machinery: corpus loading, random program generation, and the
independent oracles the property tests check against.

The oracles here are deliberately written from scratch (path enumeration,
reachability fixpoints, exhaustive derivation search) so they share no code
with the implementations they check.
"""

from __future__ import annotations

import glob
import itertools
import pathlib
import random
from dataclasses import replace

from mirlite import ir, parse_crate
from mirlite.passes import successors

TESTS_DIR = pathlib.Path(__file__).resolve().parent
CORPUS_DIR = TESTS_DIR / "corpus"
TAINT_DIR = CORPUS_DIR / "taint"
GOLDEN_DIR = TESTS_DIR / "golden"


def corpus_paths(include_taint: bool = True) -> list[pathlib.Path]:
    paths = sorted(CORPUS_DIR.glob("*.mirl"))
    if include_taint:
        paths += sorted(TAINT_DIR.glob("*.mirl"))
    return paths


def load_corpus(path: pathlib.Path) -> ir.TranslatedCrate:
    return parse_crate([(str(path.relative_to(TESTS_DIR)), path.read_text())])


def strip_spans(node):
    from mirlite.tree import transform

    zero = ir.Span(0, 0, 0, 0, 0)
    return transform(node, lambda n: zero if isinstance(n, ir.Span) else None)


def entry_functions(crate: ir.TranslatedCrate) -> list[str]:
    """Monomorphic functions with scalar/bool parameters: twin-test entries."""
    out = []
    for decl in crate.fun_decls:
        if decl.body is None:
            continue
        sig = decl.signature
        if sig.generics.types or sig.generics.const_generics:
            continue
        if all(isinstance(t, (ir.TyScalar, ir.TyBool)) for t in sig.inputs):
            out.append(decl.meta.name_str)
    return out


def random_args(sig: ir.FunSig, rng: random.Random) -> list[ir.ConstantValue]:
    vals = []
    for t in sig.inputs:
        if isinstance(t, ir.TyBool):
            vals.append(ir.const_bool(rng.random() < 0.5))
        else:
            assert isinstance(t, ir.TyScalar)
            k = t.kind
            roll = rng.random()
            if roll < 0.5:
                v = rng.randint(0, 10)
            elif roll < 0.8:
                v = rng.randint(k.min, k.max)
            else:
                v = rng.choice([k.min, k.max, 0, 1])
            vals.append(ir.const_int(v, k))
    return vals


# ---------------------------------------------------------------------------
# Random structured program generation (flattened to a reducible CFG)

SP = ir.dummy_span()


class ProgramBuilder:
    """Builds one function as a CFG by lowering randomly generated
    structured shapes, so the result is reducible by construction."""

    def __init__(self, rng: random.Random, n_locals: int = 4, with_patterns: bool = False):
        self.rng = rng
        self.with_patterns = with_patterns
        kind = ir.ScalarKind.U16
        self.kind = kind
        self.locals = [ir.Local("ret", ir.TyScalar(kind)), ir.Local("p0", ir.TyScalar(kind))]
        self.locals += [ir.Local(f"v{i}", ir.TyScalar(kind)) for i in range(n_locals)]
        self.flag = len(self.locals)
        self.locals.append(ir.Local("flag", ir.BOOL))
        self.pair = len(self.locals)
        self.locals.append(ir.Local("pw", ir.TyTuple((ir.TyScalar(kind), ir.BOOL))))
        self.enum_local = len(self.locals)
        self.locals.append(ir.Local("ev", ir.TyAdt(0, ir.EMPTY_ARGS)))
        self.disc = len(self.locals)
        self.locals.append(ir.Local("dv", ir.TyScalar(ir.ScalarKind.U32)))
        self.blocks: list = []

    # -- small pieces -----------------------------------------------------------

    def new_block(self) -> int:
        self.blocks.append(None)
        return len(self.blocks) - 1

    def set_block(self, bid: int, stmts: list, term: ir.TerminatorKind) -> None:
        self.blocks[bid] = ir.BasicBlock(
            tuple(ir.Statement(SP, s) for s in stmts), ir.Terminator(SP, term)
        )

    def rand_local(self) -> int:
        return self.rng.randrange(1, 2 + 4)  # p0 or v0..v3

    def rand_operand(self) -> ir.Operand:
        if self.rng.random() < 0.5:
            return ir.OpCopy(ir.Place(self.rand_local()))
        return ir.OpConst(ir.const_int(self.rng.randint(0, 300), self.kind))

    def rand_assign(self) -> ir.StatementKind:
        op = self.rng.choice(
            [ir.BinOp.ADD, ir.BinOp.SUB, ir.BinOp.MUL, ir.BinOp.DIV, ir.BinOp.REM,
             ir.BinOp.SHL, ir.BinOp.SHR]
        )
        rhs = self.rand_operand()
        if op in (ir.BinOp.DIV, ir.BinOp.REM):
            rhs = ir.OpConst(ir.const_int(self.rng.randint(1, 9), self.kind))
        if op in (ir.BinOp.SHL, ir.BinOp.SHR):
            rhs = ir.OpConst(ir.const_int(self.rng.randint(0, 15), self.kind))
        return ir.SAssign(
            ir.Place(self.rand_local()), ir.RvBinOp(op, self.rand_operand(), rhs)
        )

    # -- structured shapes ---------------------------------------------------------

    def emit_seq(self, bid: int, depth: int, cont: int) -> None:
        """Fill block `bid` with a random shape that continues at `cont`."""
        stmts = [self.rand_assign() for _ in range(self.rng.randint(0, 3))]
        shapes = ["plain", "if", "loop", "early_return", "unreachable", "switch"]
        weights = [3, 2, 1.2, 0.6, 0.4, 1.2]
        if self.with_patterns:
            shapes += ["checked", "enum"]
            weights += [2.5, 2.5]
        shape = "plain" if depth <= 0 else self.rng.choices(shapes, weights)[0]
        if shape == "plain":
            self.set_block(bid, stmts, ir.TGoto(cont))
        elif shape == "if":
            then_b, else_b = self.new_block(), self.new_block()
            cmp_op = self.rng.choice([ir.BinOp.LT, ir.BinOp.EQ, ir.BinOp.GE])
            stmts.append(
                ir.SAssign(
                    ir.Place(self.flag),
                    ir.RvBinOp(cmp_op, self.rand_operand(), self.rand_operand()),
                )
            )
            self.set_block(
                bid, stmts,
                ir.TSwitchInt(ir.OpCopy(ir.Place(self.flag)), ((0, else_b),), then_b),
            )
            self.emit_seq(then_b, depth - 1, cont)
            self.emit_seq(else_b, depth - 1, cont)
        elif shape == "loop":
            # bounded loop: v = 0; while v < K { body; v += 1 }
            counter = self.rand_local()
            header, body_b = self.new_block(), self.new_block()
            bound = self.rng.randint(0, 5)
            stmts.append(ir.SAssign(ir.Place(counter), ir.RvUse(
                ir.OpConst(ir.const_int(0, self.kind)))))
            self.set_block(bid, stmts, ir.TGoto(header))
            self.set_block(
                header,
                [ir.SAssign(
                    ir.Place(self.flag),
                    ir.RvBinOp(ir.BinOp.LT, ir.OpCopy(ir.Place(counter)),
                               ir.OpConst(ir.const_int(bound, self.kind))),
                )],
                ir.TSwitchInt(ir.OpCopy(ir.Place(self.flag)), ((0, cont),), body_b),
            )
            tail = self.new_block()
            self.emit_seq(body_b, depth - 1, tail)
            self.set_block(
                tail,
                [ir.SAssign(
                    ir.Place(counter),
                    ir.RvBinOp(ir.BinOp.ADD, ir.OpCopy(ir.Place(counter)),
                               ir.OpConst(ir.const_int(1, self.kind))),
                )],
                ir.TGoto(header),
            )
        elif shape == "early_return":
            stmts.append(ir.SAssign(ir.Place(0), ir.RvUse(self.rand_operand())))
            self.set_block(bid, stmts, ir.TReturn())
        elif shape == "unreachable":
            # dead end; panic-unification fodder
            self.set_block(bid, stmts, ir.TUnreachable())
        elif shape == "switch":
            # integer switch with a shared target
            t1, t2 = self.new_block(), self.new_block()
            self.set_block(
                bid, stmts,
                ir.TSwitchInt(
                    ir.OpCopy(ir.Place(self.rand_local())),
                    ((0, t1), (1, t2), (2, t1)),
                    cont,
                ),
            )
            self.emit_seq(t1, depth - 1, cont)
            self.emit_seq(t2, depth - 1, cont)
        elif shape == "checked":
            # checked-arithmetic pattern across two blocks
            target = self.new_block()
            op = self.rng.choice(
                [ir.BinOp.CHECKED_ADD, ir.BinOp.CHECKED_SUB, ir.BinOp.CHECKED_MUL]
            )
            stmts.append(
                ir.SAssign(ir.Place(self.pair),
                           ir.RvBinOp(op, self.rand_operand(), self.rand_operand()))
            )
            self.set_block(
                bid, stmts,
                ir.TAssert(
                    ir.OpCopy(ir.Place(self.pair, (ir.ProjField(1),))), False, target
                ),
            )
            rest = self.new_block()
            self.set_block(
                target,
                [ir.SAssign(
                    ir.Place(self.rand_local()),
                    ir.RvUse(ir.OpCopy(ir.Place(self.pair, (ir.ProjField(0),)))),
                )],
                ir.TGoto(rest),
            )
            self.emit_seq(rest, depth - 1, cont)
        else:
            # discriminant-switch pattern over the three-variant test enum
            variant = self.rng.randrange(3)
            fields = (self.rand_operand(),) if variant == 1 else ()
            arm0, arm1 = self.new_block(), self.new_block()
            stmts.append(ir.SAssign(ir.Place(self.enum_local),
                                    ir.RvAggregate(0, variant, fields)))
            stmts.append(ir.SAssign(ir.Place(self.disc),
                                    ir.RvDiscriminant(ir.Place(self.enum_local))))
            cases = [(0, arm0), (5, arm1)]
            self.rng.shuffle(cases)
            self.set_block(
                bid, stmts,
                ir.TSwitchInt(ir.OpCopy(ir.Place(self.disc)), tuple(cases), cont),
            )
            self.emit_seq(arm0, depth - 1, cont)
            self.emit_seq(arm1, depth - 1, cont)

    def build(self) -> ir.UllbcBody:
        entry = self.new_block()
        first = self.new_block()
        finish = self.new_block()
        init = [
            ir.SAssign(
                ir.Place(2 + i),
                ir.RvUse(ir.OpConst(ir.const_int(3 * i + 1, self.kind))),
            )
            for i in range(4)
        ]
        self.set_block(entry, init, ir.TGoto(first))
        self.emit_seq(first, self.rng.randint(1, 3), finish)
        self.set_block(
            finish,
            [ir.SAssign(ir.Place(0), ir.RvUse(ir.OpCopy(ir.Place(1))))],
            ir.TReturn(),
        )
        return ir.UllbcBody(tuple(self.locals), 1, tuple(self.blocks))


TEST_ENUM = ir.TypeDecl(
    0,
    ir.ItemMeta(("GenEnum",), SP),
    ir.GenericParams(),
    ir.EnumKind(
        (
            ir.Variant("A", (), 0),
            ir.Variant("B", (ir.TyScalar(ir.ScalarKind.U16),), 5),
            ir.Variant("C", (), 9),
        )
    ),
)


def random_program(rng: random.Random, with_patterns: bool = False) -> ir.TranslatedCrate:
    """One-function crate over integer locals with a reducible CFG."""
    body = ProgramBuilder(rng, with_patterns=with_patterns).build()
    sig = ir.FunSig(ir.GenericParams(), (ir.TyScalar(ir.ScalarKind.U16),),
                    ir.TyScalar(ir.ScalarKind.U16))
    fun = ir.FunDecl(0, ir.ItemMeta(("main",), SP), sig, body)
    return ir.TranslatedCrate(
        crate_name="generated",
        files=(ir.FileRecord("<generated>"),),
        type_decls=(TEST_ENUM,),
        fun_decls=(fun,),
    )


def random_cfg_program(rng: random.Random, max_blocks: int = 12) -> ir.TranslatedCrate:
    """Like random_program but capped at `max_blocks` blocks."""
    for _ in range(40):
        crate = random_program(rng)
        if len(crate.fun_decls[0].body.blocks) <= max_blocks:
            return crate
    return replace(
        crate, fun_decls=(replace(crate.fun_decls[0], body=_tiny_body()),)
    )


def _tiny_body() -> ir.UllbcBody:
    kind = ir.ScalarKind.U16
    return ir.UllbcBody(
        (ir.Local("ret", ir.TyScalar(kind)), ir.Local("p0", ir.TyScalar(kind))),
        1,
        (
            ir.BasicBlock(
                (ir.Statement(SP, ir.SAssign(ir.Place(0), ir.RvUse(ir.OpCopy(ir.Place(1))))),),
                ir.Terminator(SP, ir.TReturn()),
            ),
        ),
    )


# ---------------------------------------------------------------------------
# Brute-force CFG oracles


def cfg_successors(body: ir.UllbcBody) -> dict[int, list[int]]:
    return {b: successors(body.blocks[b].terminator) for b in range(len(body.blocks))}


def brute_dominator_sets(body: ir.UllbcBody) -> dict[int, set[int]]:
    """dom(b) = intersection of the node sets of all simple entry-to-b paths."""
    succ = cfg_successors(body)
    n = len(body.blocks)
    doms: dict[int, set[int]] = {}

    def paths_to(target: int):
        found: list[set[int]] = []
        stack = [(0, [0])]
        while stack:
            node, path = stack.pop()
            if node == target:
                found.append(set(path))
                continue
            for s in succ[node]:
                if s not in path:
                    stack.append((s, path + [s]))
        return found

    for b in range(n):
        all_paths = paths_to(b)
        if not all_paths:
            continue
        doms[b] = set.intersection(*all_paths)
    return doms


def brute_idoms(body: ir.UllbcBody) -> dict[int, int]:
    sets = brute_dominator_sets(body)
    idoms = {0: 0}
    for b, dom in sets.items():
        if b == 0:
            continue
        strict = dom - {b}
        # The immediate dominator is the strict dominator dominated by all others.
        idom = max(strict, key=lambda d: len(sets[d]))
        idoms[b] = idom
    return idoms


def brute_natural_loops(body: ir.UllbcBody) -> dict[int, set[int]]:
    """Loop membership via reachability fixpoints, per dominating back edge."""
    sets = brute_dominator_sets(body)
    succ = cfg_successors(body)
    loops: dict[int, set[int]] = {}
    for u in range(len(body.blocks)):
        for h in succ[u]:
            if h in sets.get(u, set()):
                members = loops.setdefault(h, {h})
                # Everything that reaches u without passing through h.
                frontier = {u}
                while frontier:
                    x = frontier.pop()
                    if x in members:
                        continue
                    members.add(x)
                    for p in range(len(body.blocks)):
                        if x in succ[p] and p != h:
                            frontier.add(p)
    return loops


def brute_sccs(nodes: list, deps: dict) -> list[frozenset]:
    """SCCs by pairwise mutual reachability over the transitive closure."""
    reach = {n: {n} | set(deps[n]) for n in nodes}
    changed = True
    while changed:
        changed = False
        for n in nodes:
            extra = set()
            for m in reach[n]:
                extra |= reach[m]
            if not extra <= reach[n]:
                reach[n] |= extra
                changed = True
    seen = set()
    out = []
    for n in nodes:
        if n in seen:
            continue
        scc = {m for m in nodes if m in reach[n] and n in reach[m]}
        seen |= scc
        out.append(frozenset(scc))
    return out


# ---------------------------------------------------------------------------
# Substitution oracle


def naive_substitute(ty: ir.Ty, args: ir.GenericArgs) -> ir.Ty:
    """Independent tree rewriter for the substitution property test."""
    def sub_ref(ref):
        if isinstance(ref, ir.ClauseRef):
            return args.trait_refs[ref.clause_id] if args.trait_refs else ref
        if isinstance(ref, ir.TraitImplRef):
            return ir.TraitImplRef(ref.impl_id, sub_args(ref.args))
        if isinstance(ref, ir.ParentClauseRef):
            return ir.ParentClauseRef(sub_ref(ref.base), ref.index)
        if isinstance(ref, ir.ItemClauseRef):
            return ir.ItemClauseRef(sub_ref(ref.base), ref.item, ref.index)
        return ref

    def sub_args(a):
        return ir.GenericArgs(
            a.regions,
            tuple(walk(t) for t in a.types),
            a.const_generics,
            tuple(sub_ref(r) for r in a.trait_refs),
        )

    def walk(t):
        if isinstance(t, ir.TyVar):
            return args.types[t.index]
        if isinstance(t, ir.TyAdt):
            return ir.TyAdt(t.decl_id, sub_args(t.args))
        if isinstance(t, ir.TyRef):
            return ir.TyRef(t.region, walk(t.inner), t.mutable)
        if isinstance(t, ir.TyTuple):
            return ir.TyTuple(tuple(walk(i) for i in t.items))
        if isinstance(t, ir.TyAssoc):
            return ir.TyAssoc(sub_ref(t.base), t.item)
        return t

    return walk(ty)


def random_ty(rng: random.Random, n_vars: int, depth: int = 3) -> ir.Ty:
    roll = rng.random()
    if depth <= 0 or roll < 0.35:
        choices: list[ir.Ty] = [ir.TyScalar(k) for k in ir.ScalarKind] + [ir.BOOL]
        if n_vars:
            choices += [ir.TyVar(rng.randrange(n_vars))] * 4
        return rng.choice(choices)
    if roll < 0.55:
        return ir.TyTuple(tuple(random_ty(rng, n_vars, depth - 1)
                                for _ in range(rng.randint(0, 3))))
    if roll < 0.75:
        return ir.TyRef("'a", random_ty(rng, n_vars, depth - 1), rng.random() < 0.5)
    if roll < 0.9:
        return ir.TyAdt(
            rng.randrange(3),
            ir.GenericArgs(types=tuple(random_ty(rng, n_vars, depth - 1)
                                       for _ in range(rng.randint(0, 2)))),
        )
    return ir.TyAssoc(ir.ClauseRef(rng.randrange(max(n_vars, 1))), "Item")


# ---------------------------------------------------------------------------
# Random (type, value) pairs for constant decode/encode


def constant_test_crate() -> ir.TranslatedCrate:
    pair = ir.TypeDecl(
        0, ir.ItemMeta(("CPair",), SP),
        ir.GenericParams(types=("A", "B")),
        ir.StructKind((ir.TyVar(0), ir.TyVar(1))),
    )
    opt = ir.TypeDecl(
        1, ir.ItemMeta(("COpt",), SP),
        ir.GenericParams(types=("T",)),
        ir.EnumKind((ir.Variant("None", (), 0), ir.Variant("Some", (ir.TyVar(0),), 1))),
    )
    color = ir.TypeDecl(
        2, ir.ItemMeta(("CColor",), SP),
        ir.GenericParams(),
        ir.EnumKind((
            ir.Variant("R", (), 0),
            ir.Variant("G", (ir.TyScalar(ir.ScalarKind.U8), ir.TyBool()), 7),
            ir.Variant("B", (ir.TyScalar(ir.ScalarKind.I32),), 2),
        )),
    )
    return ir.TranslatedCrate("consts", (ir.FileRecord("<consts>"),), (pair, opt, color))


def random_const_ty(rng: random.Random, depth: int) -> ir.Ty:
    roll = rng.random()
    if depth <= 0 or roll < 0.45:
        return rng.choice([ir.TyScalar(k) for k in ir.ScalarKind] + [ir.BOOL])
    if roll < 0.65:
        return ir.TyTuple(tuple(random_const_ty(rng, depth - 1)
                                for _ in range(rng.randint(0, 3))))
    if roll < 0.8:
        return ir.TyAdt(0, ir.GenericArgs(types=(
            random_const_ty(rng, depth - 1), random_const_ty(rng, depth - 1))))
    if roll < 0.92:
        return ir.TyAdt(1, ir.GenericArgs(types=(random_const_ty(rng, depth - 1),)))
    return ir.TyAdt(2, ir.EMPTY_ARGS)


def random_const_value(ty: ir.Ty, crate: ir.TranslatedCrate, rng: random.Random) -> ir.ConstantValue:
    if isinstance(ty, ir.TyScalar):
        return ir.const_int(rng.randint(ty.kind.min, ty.kind.max), ty.kind)
    if isinstance(ty, ir.TyBool):
        return ir.const_bool(rng.random() < 0.5)
    if isinstance(ty, ir.TyTuple):
        return ir.ConstantValue(
            ty, ir.CAdt(None, tuple(random_const_value(i, crate, rng) for i in ty.items))
        )
    assert isinstance(ty, ir.TyAdt)
    decl = crate.type_decls[ty.decl_id]
    if isinstance(decl.kind, ir.StructKind):
        fields = tuple(
            random_const_value(ir.substitute(f, ty.args), crate, rng)
            for f in decl.kind.fields
        )
        return ir.ConstantValue(ty, ir.CAdt(None, fields))
    variant = rng.randrange(len(decl.kind.variants))
    fields = tuple(
        random_const_value(ir.substitute(f, ty.args), crate, rng)
        for f in decl.kind.variants[variant].fields
    )
    return ir.ConstantValue(ty, ir.CAdt(variant, fields))


# ---------------------------------------------------------------------------
# Random trait environments and the exhaustive derivation oracle


BOX_DECL = ir.TypeDecl(
    0, ir.ItemMeta(("GenBox",), SP),
    ir.GenericParams(types=("T",)),
    ir.StructKind((ir.TyVar(0),)),
)


def _boxed(inner: ir.Ty) -> ir.Ty:
    return ir.TyAdt(0, ir.GenericArgs(types=(inner,)))


def random_trait_env(rng: random.Random, coherent: bool = True):
    """A random hierarchy of up to 6 traits and up to 6 impls (ground and
    generic over a wrapper type), one set of local clauses, and one goal.
    With ``coherent`` (the assumed domain), impls whose head overlaps an
    earlier impl of the same trait are dropped.
    Returns (params, crate, goal_trait, goal_args)."""
    n_traits = rng.randint(1, 6)
    traits = []
    for t in range(n_traits):
        parents = []
        for i, p in enumerate(rng.sample(range(t), min(t, rng.randint(0, 2)))):
            parents.append(
                ir.TraitClause(i, p, ir.GenericArgs(types=(ir.TyVar(0),)))
            )
        assoc = ()
        if t > 0 and rng.random() < 0.4:
            bound_trait = rng.randrange(t)
            assoc = (
                ir.AssocTypeDecl(
                    "Out",
                    (ir.TraitClause(
                        0, bound_trait,
                        ir.GenericArgs(types=(ir.TyAssoc(ir.SelfRef(), "Out"),)),
                    ),),
                ),
            )
        traits.append(
            ir.TraitDecl(
                t, ir.ItemMeta((f"Tr{t}",), SP),
                ir.GenericParams(types=("Self",)),
                tuple(parents), assoc, (),
            )
        )
    base_tys = [ir.TyScalar(ir.ScalarKind.U8), ir.TyScalar(ir.ScalarKind.U32), ir.BOOL]
    impls = []
    n_impls = rng.randint(0, 6)
    for i in range(n_impls):
        trait_id = rng.randrange(n_traits)
        assoc_values = ()
        if traits[trait_id].assoc_types:
            assoc_values = (("Out", rng.choice(base_tys)),)
        if rng.random() < 0.4:
            # Generic impl over the wrapper: Tr_k for GenBox<I>, maybe where I: Tr_j.
            clauses = []
            if rng.random() < 0.7:
                clauses.append(
                    ir.TraitClause(0, rng.randrange(n_traits),
                                   ir.GenericArgs(types=(ir.TyVar(0),)))
                )
            impls.append(
                ir.TraitImpl(
                    i, ir.ItemMeta((f"impl#{i}",), SP),
                    ir.GenericParams(types=("I",), trait_clauses=tuple(clauses)),
                    trait_id,
                    ir.GenericArgs(types=(_boxed(ir.TyVar(0)),)),
                    assoc_values, (),
                )
            )
        else:
            clauses = []
            if rng.random() < 0.3:
                clauses.append(
                    ir.TraitClause(0, rng.randrange(n_traits),
                                   ir.GenericArgs(types=(rng.choice(base_tys),)))
                )
            impls.append(
                ir.TraitImpl(
                    i, ir.ItemMeta((f"impl#{i}",), SP),
                    ir.GenericParams(trait_clauses=tuple(clauses)),
                    trait_id,
                    ir.GenericArgs(types=(rng.choice(base_tys),)),
                    assoc_values, (),
                )
            )
    if coherent:
        kept = []
        for impl in impls:
            overlap = False
            for other in kept:
                if other.trait_decl_id != impl.trait_decl_id:
                    continue
                if _heads_overlap(impl.trait_args.types[0], other.trait_args.types[0]):
                    overlap = True
                    break
            if not overlap:
                kept.append(impl)
        impls = [replace(im, decl_id=i) for i, im in enumerate(kept)]
    clauses = []
    for c in range(rng.randint(0, 3)):
        clauses.append(
            ir.TraitClause(c, rng.randrange(n_traits),
                           ir.GenericArgs(types=(ir.TyVar(0),)))
        )
    params = ir.GenericParams(types=("X",), trait_clauses=tuple(clauses))
    goal_trait = rng.randrange(n_traits)
    goal_pool = base_tys + [ir.TyVar(0)]
    goal_pool += [_boxed(t) for t in base_tys] + [_boxed(_boxed(rng.choice(base_tys)))]
    goal_ty = rng.choice(goal_pool)
    crate = ir.TranslatedCrate(
        "traits", (ir.FileRecord("<traits>"),),
        type_decls=(BOX_DECL,),
        trait_decls=tuple(traits), trait_impls=tuple(impls),
    )
    return params, crate, goal_trait, ir.GenericArgs(types=(goal_ty,))


def _heads_overlap(a: ir.Ty, b: ir.Ty) -> bool:
    """Can the two impl self-types describe a common ground type?"""
    if isinstance(a, ir.TyVar) or isinstance(b, ir.TyVar):
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, ir.TyAdt):
        return a.decl_id == b.decl_id and all(
            _heads_overlap(x, y) for x, y in zip(a.args.types, b.args.types)
        )
    return a == b


def ref_depth(ref: ir.TraitRefKind) -> int:
    """Tree depth of a derivation (a bare clause counts as depth 1)."""
    if isinstance(ref, ir.ClauseRef):
        return 1
    if isinstance(ref, (ir.ParentClauseRef, ir.ItemClauseRef)):
        return 1 + ref_depth(ref.base)
    if isinstance(ref, ir.TraitImplRef):
        subs = [ref_depth(r) for r in ref.args.trait_refs]
        return 1 + (max(subs) if subs else 0)
    return 1


def _oracle_match(pattern: ir.Ty, ground: ir.Ty, bind: dict) -> bool:
    if isinstance(pattern, ir.TyVar):
        if pattern.index in bind:
            return bind[pattern.index] == ground
        bind[pattern.index] = ground
        return True
    if type(pattern) is not type(ground):
        return False
    if isinstance(pattern, ir.TyScalar):
        return pattern.kind == ground.kind
    if isinstance(pattern, ir.TyBool):
        return True
    if isinstance(pattern, ir.TyAdt):
        return pattern.decl_id == ground.decl_id and all(
            _oracle_match(p, g, bind)
            for p, g in zip(pattern.args.types, ground.args.types)
        ) and len(pattern.args.types) == len(ground.args.types)
    if isinstance(pattern, ir.TyTuple):
        return len(pattern.items) == len(ground.items) and all(
            _oracle_match(p, g, bind) for p, g in zip(pattern.items, ground.items)
        )
    if isinstance(pattern, ir.TyRef):
        return pattern.mutable == ground.mutable and _oracle_match(
            pattern.inner, ground.inner, bind
        )
    return pattern == ground


def _oracle_subst(ty: ir.Ty, bind: dict) -> ir.Ty:
    if isinstance(ty, ir.TyVar):
        return bind[ty.index]
    if isinstance(ty, ir.TyAdt):
        return ir.TyAdt(
            ty.decl_id,
            ir.GenericArgs(types=tuple(_oracle_subst(t, bind) for t in ty.args.types)),
        )
    if isinstance(ty, ir.TyTuple):
        return ir.TyTuple(tuple(_oracle_subst(t, bind) for t in ty.items))
    if isinstance(ty, ir.TyRef):
        return ir.TyRef(ty.region, _oracle_subst(ty.inner, bind), ty.mutable)
    return ty


def _oracle_goal_key(trait_id: int, args: ir.GenericArgs):
    return (trait_id, args.types)


def _oracle_clause_goals(params, crate, max_depth: int):
    """All (path, goal) pairs reachable from the declared clauses in at most
    max_depth parent/item hops, duplicates included."""
    out = []
    frontier = [
        (ir.ClauseRef(c.clause_id), c.trait_decl_id, c.args, 0)
        for c in params.trait_clauses
    ]
    while frontier:
        path, trait_id, args, depth = frontier.pop(0)
        out.append((path, trait_id, args))
        if depth >= max_depth:
            continue
        trait = crate.trait_decls[trait_id]
        self_ty = args.types[0]
        for i, parent in enumerate(trait.parent_clauses):
            p_args = ir.GenericArgs(
                types=tuple(
                    _oracle_subst_selfless(t, self_ty, path) for t in parent.args.types
                )
            )
            frontier.append((ir.ParentClauseRef(path, i), parent.trait_decl_id, p_args, depth + 1))
        for assoc in trait.assoc_types:
            for i, bound in enumerate(assoc.bounds):
                b_args = ir.GenericArgs(
                    types=tuple(
                        _oracle_subst_selfless(t, self_ty, path) for t in bound.args.types
                    )
                )
                frontier.append(
                    (ir.ItemClauseRef(path, assoc.name, i), bound.trait_decl_id, b_args, depth + 1)
                )
    return out


def _oracle_subst_selfless(ty: ir.Ty, self_ty: ir.Ty, path) -> ir.Ty:
    if isinstance(ty, ir.TyVar) and ty.index == 0:
        return self_ty
    if isinstance(ty, ir.TyAssoc) and isinstance(ty.base, ir.SelfRef):
        return ir.TyAssoc(path, ty.item)
    return ty


def enumerate_derivations(params, crate, trait_id, args, depth: int) -> list[ir.TraitRefKind]:
    """Exhaustive search for every derivation of the goal, up to the given
    tree depth. Independent of the solver."""
    if depth <= 0:
        return []
    key = _oracle_goal_key(trait_id, args)
    results: list[ir.TraitRefKind] = []
    for path, t, a in _oracle_clause_goals(params, crate, depth):
        if _oracle_goal_key(t, a) == key and path not in results:
            results.append(path)
    for impl in crate.trait_impls:
        if impl.trait_decl_id != trait_id:
            continue
        bind: dict = {}
        if len(impl.trait_args.types) != len(args.types):
            continue
        if not all(
            _oracle_match(p, g, bind)
            for p, g in zip(impl.trait_args.types, args.types)
        ):
            continue
        if set(bind) != set(range(len(impl.generics.types))):
            continue
        sub_lists = []
        ok = True
        for clause in impl.generics.trait_clauses:
            goal_args = ir.GenericArgs(
                types=tuple(_oracle_subst(t, bind) for t in clause.args.types)
            )
            subs = enumerate_derivations(params, crate, clause.trait_decl_id, goal_args, depth - 1)
            if not subs:
                ok = False
                break
            sub_lists.append(subs)
        if not ok:
            continue
        impl_types = tuple(bind[i] for i in range(len(impl.generics.types)))
        for combo in itertools.product(*sub_lists):
            candidate = ir.TraitImplRef(
                impl.decl_id,
                ir.GenericArgs(
                    regions=tuple(ir.ERASED_REGION for _ in impl.generics.regions),
                    types=impl_types,
                    trait_refs=tuple(combo),
                ),
            )
            if candidate not in results:
                results.append(candidate)
    return results


# ---------------------------------------------------------------------------
# Taint sink enumeration (independent over-approximation)


def enumerate_sinks(crate: ir.TranslatedCrate, latency_ops=(ir.BinOp.DIV, ir.BinOp.REM)):
    """Every syntactic sink in every structured body, ignoring sensitivity."""
    from mirlite.tree import iter_nodes

    sinks = set()
    for decl in crate.fun_decls:
        if not isinstance(decl.body, ir.LlbcBody):
            continue

        def walk_block(block):
            for stmt in block.statements:
                kind = stmt.kind
                for node in iter_nodes(stmt):
                    if isinstance(node, ir.RvBinOp) and node.op in latency_ops:
                        sinks.add(("div", stmt.span, decl.meta.name_str))
                    if isinstance(node, ir.ProjIndex):
                        sinks.add(("index", stmt.span, decl.meta.name_str))
                if isinstance(kind, ir.SSwitch):
                    sinks.add(("branch", stmt.span, decl.meta.name_str))
                    sw = kind.switch
                    if isinstance(sw, ir.SwIf):
                        blocks = [sw.then_block, sw.else_block]
                    elif isinstance(sw, ir.SwInt):
                        blocks = [b for _, b in sw.arms] + [sw.otherwise]
                    else:
                        blocks = [b for _, b in sw.arms] + (
                            [sw.otherwise] if sw.otherwise is not None else []
                        )
                    for b in blocks:
                        walk_block(b)
                elif isinstance(kind, ir.SLoop):
                    walk_block(kind.body)

        walk_block(decl.body.body)
    return sinks
