"""Trait obligation solving: clause elaboration, instance resolution,
method-generics truncation, and associated-type normalization.

The solver returns an explicit derivation (`ir.TraitRefKind`) for every
obligation it discharges: which impl was selected with which arguments, or
which local clause (possibly through parent-clause and associated-type-bound
hops) already provides the instance. `verify_derivation` replays a derivation
bottom-up and confirms it discharges the goal; tests lean on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import ir

CLAUSE_DEPTH_CAP = 32
RESOLVE_DEPTH_CAP = 64
NORMALIZE_CAP = 64


class ResolveError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.reason = message


@dataclass(frozen=True)
class Goal:
    trait_decl_id: int
    args: ir.GenericArgs

    def render(self, crate: ir.TranslatedCrate) -> str:
        return f"{crate.trait_decls[self.trait_decl_id].meta.name_str}{self.args!r}"


def goal_key(goal: Goal) -> tuple:
    """Hashable identity of a goal, ignoring regions and resolved refs."""
    return (goal.trait_decl_id, goal.args.types, goal.args.const_generics)


# ---------------------------------------------------------------------------
# Clause elaboration


def elaborate_implied_clauses(
    params: ir.GenericParams, crate: ir.TranslatedCrate
) -> tuple[list[tuple[ir.TraitRefKind, ir.TraitClause]], list[str]]:
    """Close the declared clauses under parent clauses and associated-type
    bounds.

    Returns (closure, diagnostics): the closure is an ordered list of
    (derivation path, instantiated clause) pairs, breadth-first from the
    declared clauses, deduplicated on (trait, args). The depth cap guards
    against unbounded hierarchies; hitting it truncates the closure and
    reports ``clause-depth-exceeded``.
    """
    closure: list[tuple[ir.TraitRefKind, ir.TraitClause]] = []
    diags: list[str] = []
    seen: set[tuple] = set()
    queue: list[tuple[ir.TraitRefKind, ir.TraitClause, int]] = []
    for clause in params.trait_clauses:
        queue.append((ir.ClauseRef(clause.clause_id), clause, 0))
    while queue:
        path, clause, depth = queue.pop(0)
        key = goal_key(Goal(clause.trait_decl_id, clause.args))
        if key in seen:
            continue
        seen.add(key)
        closure.append((path, clause))
        if depth >= CLAUSE_DEPTH_CAP:
            diags.append("clause-depth-exceeded")
            continue
        trait = crate.trait_decls[clause.trait_decl_id]
        inst = clause.args
        for i, parent in enumerate(trait.parent_clauses):
            new_path = ir.ParentClauseRef(path, i)
            new_args = _instantiate_trait_local(parent.args, inst, path)
            queue.append((new_path, ir.TraitClause(0, parent.trait_decl_id, new_args), depth + 1))
        for assoc in trait.assoc_types:
            for i, bound in enumerate(assoc.bounds):
                new_path = ir.ItemClauseRef(path, assoc.name, i)
                new_args = _instantiate_trait_local(bound.args, inst, path)
                queue.append(
                    (new_path, ir.TraitClause(0, bound.trait_decl_id, new_args), depth + 1)
                )
    return closure, diags


def _instantiate_trait_local(
    args: ir.GenericArgs, inst: ir.GenericArgs, self_path: ir.TraitRefKind
) -> ir.GenericArgs:
    """Instantiate clause arguments written inside a trait declaration:
    substitute the trait's generics and replace Self references by the
    derivation path that reached the trait."""
    return ir.replace_self_in_args(ir.substitute_args(args, inst), self_path)


# ---------------------------------------------------------------------------
# Unification (impl-side variables only; the goal side is rigid)


def unify_ty(pattern: ir.Ty, ground: ir.Ty, bindings: dict[int, ir.Ty]) -> bool:
    if isinstance(pattern, ir.TyVar):
        bound = bindings.get(pattern.index)
        if bound is None:
            bindings[pattern.index] = ground
            return True
        return bound == ground
    if isinstance(pattern, ir.TyScalar):
        return isinstance(ground, ir.TyScalar) and pattern.kind == ground.kind
    if isinstance(pattern, ir.TyBool):
        return isinstance(ground, ir.TyBool)
    if isinstance(pattern, ir.TyAdt):
        return (
            isinstance(ground, ir.TyAdt)
            and pattern.decl_id == ground.decl_id
            and unify_args(pattern.args, ground.args, bindings)
        )
    if isinstance(pattern, ir.TyRef):
        # Regions are opaque: mutability must agree, names need not.
        return (
            isinstance(ground, ir.TyRef)
            and pattern.mutable == ground.mutable
            and unify_ty(pattern.inner, ground.inner, bindings)
        )
    if isinstance(pattern, ir.TyTuple):
        return (
            isinstance(ground, ir.TyTuple)
            and len(pattern.items) == len(ground.items)
            and all(unify_ty(p, g, bindings) for p, g in zip(pattern.items, ground.items))
        )
    if isinstance(pattern, ir.TyAssoc):
        # Impl heads with associated types in them are matched syntactically.
        return pattern == ground
    raise TypeError(f"not a type: {pattern!r}")


def unify_args(pattern: ir.GenericArgs, ground: ir.GenericArgs, bindings: dict[int, ir.Ty]) -> bool:
    if len(pattern.types) != len(ground.types):
        return False
    if len(pattern.const_generics) != len(ground.const_generics):
        return False
    for p, g in zip(pattern.types, ground.types):
        if not unify_ty(p, g, bindings):
            return False
    for p, g in zip(pattern.const_generics, ground.const_generics):
        if p != g:  # const generics unify by literal equality only
            return False
    return True


# ---------------------------------------------------------------------------
# Resolution


class Resolver:
    """Per-binder resolution session: local clause closure plus crate impls."""

    def __init__(self, params: ir.GenericParams, crate: ir.TranslatedCrate):
        self.crate = crate
        self.params = params
        self.closure, self.closure_diags = elaborate_implied_clauses(params, crate)

    def resolve(self, trait_decl_id: int, args: ir.GenericArgs, depth: int = 0) -> ir.TraitRefKind:
        if depth > RESOLVE_DEPTH_CAP:
            raise ResolveError("no-instance", "resolution depth cap exceeded")
        goal = Goal(trait_decl_id, args)
        key = goal_key(goal)
        clause_hit: Optional[ir.TraitRefKind] = None
        for path, clause in self.closure:
            if goal_key(Goal(clause.trait_decl_id, clause.args)) == key:
                clause_hit = path
                break
        impl_hits: list[tuple[ir.TraitImpl, dict[int, ir.Ty]]] = []
        for impl in self.crate.trait_impls:
            if impl.trait_decl_id != trait_decl_id:
                continue
            bindings: dict[int, ir.Ty] = {}
            if unify_args(impl.trait_args, args, bindings):
                impl_hits.append((impl, bindings))
        if clause_hit is not None and impl_hits:
            names = [impl.meta.name_str for impl, _ in impl_hits]
            raise ResolveError(
                "ambiguous-instance",
                f"goal matches local clause {clause_hit!r} and impls {names}",
            )
        if clause_hit is not None:
            return clause_hit
        if len(impl_hits) > 1:
            names = [impl.meta.name_str for impl, _ in impl_hits]
            raise ResolveError("ambiguous-instance", f"goal matches impls {names}")
        if not impl_hits:
            raise ResolveError(
                "no-instance", f"no clause or impl discharges the obligation {key!r}"
            )
        impl, bindings = impl_hits[0]
        if set(bindings) != set(range(len(impl.generics.types))):
            raise ResolveError(
                "no-instance",
                f"impl {impl.meta.name_str} head does not determine all its parameters",
            )
        impl_types = tuple(bindings[i] for i in range(len(impl.generics.types)))
        partial = ir.GenericArgs(
            regions=tuple(ir.ERASED_REGION for _ in impl.generics.regions),
            types=impl_types,
            const_generics=(),
        )
        # Discharge the impl's own where clauses under the unified bindings.
        refs = []
        for clause in impl.generics.trait_clauses:
            sub_args = ir.substitute_args(clause.args, partial)
            refs.append(self.resolve(clause.trait_decl_id, sub_args, depth + 1))
        impl_args = ir.GenericArgs(
            regions=partial.regions,
            types=impl_types,
            const_generics=(),
            trait_refs=tuple(refs),
        )
        return ir.TraitImplRef(impl.decl_id, impl_args)


def resolve_trait_ref(
    params: ir.GenericParams,
    crate: ir.TranslatedCrate,
    trait_decl_id: int,
    args: ir.GenericArgs,
) -> ir.TraitRefKind:
    """Discharge one obligation; raises ResolveError (`no-instance`,
    `ambiguous-instance`) when the search fails."""
    return Resolver(params, crate).resolve(trait_decl_id, args)


# ---------------------------------------------------------------------------
# Derivation replay


def derivation_goal(
    ref: ir.TraitRefKind, params: ir.GenericParams, crate: ir.TranslatedCrate
) -> Goal:
    """Compute the obligation a derivation discharges (bottom-up replay).

    Raises ResolveError when the derivation is ill-formed.
    """
    if isinstance(ref, ir.ClauseRef):
        if ref.clause_id >= len(params.trait_clauses):
            raise ResolveError("bad-derivation", f"clause #{ref.clause_id} not declared")
        clause = params.trait_clauses[ref.clause_id]
        return Goal(clause.trait_decl_id, clause.args)
    if isinstance(ref, ir.TraitImplRef):
        impl = crate.trait_impls[ref.impl_id]
        ir.check_args_arity(impl.meta.name_str, impl.generics, ref.args, require_refs=True)
        # Every where clause of the impl must be discharged by the carried refs.
        for clause, sub in zip(impl.generics.trait_clauses, ref.args.trait_refs):
            expected = ir.substitute_args(clause.args, ref.args)
            actual = derivation_goal(sub, params, crate)
            if goal_key(Goal(clause.trait_decl_id, expected)) != goal_key(actual):
                raise ResolveError(
                    "bad-derivation",
                    f"impl obligation {clause!r} discharged with the wrong instance",
                )
        return Goal(impl.trait_decl_id, ir.substitute_args(impl.trait_args, ref.args))
    if isinstance(ref, ir.ParentClauseRef):
        base = derivation_goal(ref.base, params, crate)
        trait = crate.trait_decls[base.trait_decl_id]
        if ref.index >= len(trait.parent_clauses):
            raise ResolveError("bad-derivation", f"parent clause #{ref.index} not declared")
        parent = trait.parent_clauses[ref.index]
        return Goal(
            parent.trait_decl_id, _instantiate_trait_local(parent.args, base.args, ref.base)
        )
    if isinstance(ref, ir.ItemClauseRef):
        base = derivation_goal(ref.base, params, crate)
        trait = crate.trait_decls[base.trait_decl_id]
        assoc = trait.assoc_type(ref.item)
        if assoc is None or ref.index >= len(assoc.bounds):
            raise ResolveError("bad-derivation", f"item clause {ref.item}#{ref.index} not declared")
        bound = assoc.bounds[ref.index]
        return Goal(
            bound.trait_decl_id, _instantiate_trait_local(bound.args, base.args, ref.base)
        )
    raise ResolveError("bad-derivation", f"cannot replay {type(ref).__name__}")


def verify_derivation(
    ref: ir.TraitRefKind,
    goal_trait: int,
    goal_args: ir.GenericArgs,
    params: ir.GenericParams,
    crate: ir.TranslatedCrate,
) -> bool:
    """True iff replaying the derivation yields exactly the goal."""
    try:
        got = derivation_goal(ref, params, crate)
    except ResolveError:
        return False
    return goal_key(got) == goal_key(Goal(goal_trait, goal_args))


# ---------------------------------------------------------------------------
# Method generics truncation


def split_generic_args(
    full_args: ir.GenericArgs, container_params: ir.GenericParams
) -> tuple[ir.GenericArgs, ir.GenericArgs]:
    """Split a concatenated argument list into (container part, method part).

    Componentwise: the container takes its declared count from the front of
    each list, the remainder belongs to the method. Raises ResolveError
    (`truncation-underflow`) when the full list is too short.
    """
    nr, nt, nc, ncl = container_params.counts()
    if (
        len(full_args.regions) < nr
        or len(full_args.types) < nt
        or len(full_args.const_generics) < nc
        or (full_args.trait_refs and len(full_args.trait_refs) < ncl)
    ):
        raise ResolveError(
            "truncation-underflow",
            f"argument list {full_args!r} shorter than the container's parameters",
        )
    container = ir.GenericArgs(
        regions=full_args.regions[:nr],
        types=full_args.types[:nt],
        const_generics=full_args.const_generics[:nc],
        trait_refs=full_args.trait_refs[:ncl] if full_args.trait_refs else (),
    )
    method = ir.GenericArgs(
        regions=full_args.regions[nr:],
        types=full_args.types[nt:],
        const_generics=full_args.const_generics[nc:],
        trait_refs=full_args.trait_refs[ncl:] if full_args.trait_refs else (),
    )
    return container, method


def concat_generic_args(first: ir.GenericArgs, second: ir.GenericArgs) -> ir.GenericArgs:
    return ir.GenericArgs(
        regions=first.regions + second.regions,
        types=first.types + second.types,
        const_generics=first.const_generics + second.const_generics,
        trait_refs=first.trait_refs + second.trait_refs,
    )


# ---------------------------------------------------------------------------
# Associated type normalization


def normalize_assoc_types(
    ty: ir.Ty, params: ir.GenericParams, crate: ir.TranslatedCrate
) -> ir.Ty:
    """Rewrite associated types that are known to equal a concrete type,
    to fixpoint: declared equality constraints, and projections whose base
    resolves to an impl with a declared value.

    Raises ResolveError (`normalization-diverged`) past the rewrite cap.
    """
    for _ in range(NORMALIZE_CAP):
        new = _normalize_step(ty, params, crate)
        if new == ty:
            return ty
        ty = new
    raise ResolveError("normalization-diverged", f"no fixpoint after {NORMALIZE_CAP} rewrites")


def _normalize_step(ty: ir.Ty, params: ir.GenericParams, crate: ir.TranslatedCrate) -> ir.Ty:
    if isinstance(ty, ir.TyAssoc):
        base = _normalize_ref(ty.base, params, crate)
        if isinstance(base, ir.TraitImplRef):
            impl = crate.trait_impls[base.impl_id]
            value = impl.assoc_value(ty.item)
            if value is not None:
                return ir.substitute(value, base.args)
        for constraint in params.trait_type_constraints:
            if constraint.item == ty.item and constraint.trait_ref == base:
                return constraint.ty
        return ir.TyAssoc(base, ty.item)
    if isinstance(ty, ir.TyAdt):
        return ir.TyAdt(
            ty.decl_id,
            ir.GenericArgs(
                regions=ty.args.regions,
                types=tuple(_normalize_step(t, params, crate) for t in ty.args.types),
                const_generics=ty.args.const_generics,
                trait_refs=ty.args.trait_refs,
            ),
        )
    if isinstance(ty, ir.TyRef):
        return ir.TyRef(ty.region, _normalize_step(ty.inner, params, crate), ty.mutable)
    if isinstance(ty, ir.TyTuple):
        return ir.TyTuple(tuple(_normalize_step(t, params, crate) for t in ty.items))
    return ty


def _normalize_ref(
    ref: ir.TraitRefKind, params: ir.GenericParams, crate: ir.TranslatedCrate
) -> ir.TraitRefKind:
    if isinstance(ref, ir.TraitImplRef):
        return ir.TraitImplRef(
            ref.impl_id,
            ir.GenericArgs(
                regions=ref.args.regions,
                types=tuple(_normalize_step(t, params, crate) for t in ref.args.types),
                const_generics=ref.args.const_generics,
                trait_refs=ref.args.trait_refs,
            ),
        )
    if isinstance(ref, ir.ParentClauseRef):
        return ir.ParentClauseRef(_normalize_ref(ref.base, params, crate), ref.index)
    if isinstance(ref, ir.ItemClauseRef):
        return ir.ItemClauseRef(_normalize_ref(ref.base, params, crate), ref.item, ref.index)
    return ref


# ---------------------------------------------------------------------------
# Ground resolution of a derivation to its providing impl


def resolve_ref_to_impl(ref: ir.TraitRefKind, crate: ir.TranslatedCrate) -> ir.TraitImplRef:
    """Reduce a fully concrete derivation to the impl that provides the
    instance. Parent- and item-clause hops over an impl re-solve the implied
    obligation against the crate's impls (no local clauses in a ground
    context). Raises ResolveError when the chain bottoms out in a clause."""
    if isinstance(ref, ir.TraitImplRef):
        return ref
    if isinstance(ref, (ir.ParentClauseRef, ir.ItemClauseRef)):
        base = resolve_ref_to_impl(ref.base, crate)
        impl = crate.trait_impls[base.impl_id]
        trait = crate.trait_decls[impl.trait_decl_id]
        trait_args = ir.substitute_args(impl.trait_args, base.args)
        if isinstance(ref, ir.ParentClauseRef):
            if ref.index >= len(trait.parent_clauses):
                raise ResolveError("bad-derivation", f"parent clause #{ref.index} not declared")
            clause = trait.parent_clauses[ref.index]
        else:
            assoc = trait.assoc_type(ref.item)
            if assoc is None or ref.index >= len(assoc.bounds):
                raise ResolveError(
                    "bad-derivation", f"item clause {ref.item}#{ref.index} not declared"
                )
            clause = assoc.bounds[ref.index]
        goal_args = ir.replace_self_in_args(ir.substitute_args(clause.args, trait_args), base)
        empty = ir.GenericParams()
        goal_args = ir.GenericArgs(
            regions=goal_args.regions,
            types=tuple(normalize_assoc_types(t, empty, crate) for t in goal_args.types),
            const_generics=goal_args.const_generics,
            trait_refs=(),
        )
        solved = resolve_trait_ref(empty, crate, clause.trait_decl_id, goal_args)
        return resolve_ref_to_impl(solved, crate)
    raise ResolveError(
        "bad-derivation", f"{type(ref).__name__} does not resolve in a ground context"
    )


# ---------------------------------------------------------------------------
# Whole-crate call resolution


def resolve_calls(crate: ir.TranslatedCrate):
    """Resolve every call site: trait-method calls get an explicit derivation
    plus truncated method generics; plain calls get their clause obligations
    discharged into trait_refs.

    Failures leave the call in its unresolved form and produce diagnostics;
    the rest of the crate is still rewritten.
    """
    from dataclasses import replace

    from .diagnostics import Diagnostic

    diags: list[Diagnostic] = []
    new_funs = []
    for decl in crate.fun_decls:
        body = decl.body
        if not isinstance(body, ir.UllbcBody):
            new_funs.append(decl)
            continue
        resolver = Resolver(decl.signature.generics, crate)
        for d in resolver.closure_diags:
            diags.append(Diagnostic(d, "clause elaboration truncated", decl.meta.span,
                                    decl.meta.name_str))
        new_blocks = []
        for block in body.blocks:
            term = block.terminator
            if isinstance(term.kind, ir.TCall):
                call = term.kind.call
                new_func, call_diags = _resolve_fn_operand(
                    call.func, resolver, crate, term.span, decl.meta.name_str
                )
                diags.extend(call_diags)
                if new_func is not call.func:
                    call = replace(call, func=new_func)
                    term = replace(term, kind=replace(term.kind, call=call))
            new_blocks.append(replace(block, terminator=term))
        new_funs.append(replace(decl, body=replace(body, blocks=tuple(new_blocks))))
    return replace(crate, fun_decls=tuple(new_funs)), diags


def _resolve_fn_operand(func, resolver, crate, span, fn_name):
    from .diagnostics import Diagnostic

    if not isinstance(func, ir.FnOpRegular):
        return func, []
    ptr = func.ptr
    if isinstance(ptr.func, ir.FnUnresolvedTraitMethod):
        trait = crate.trait_decls[ptr.func.trait_decl_id]
        try:
            container_args, method_args = split_generic_args(ptr.generics, trait.generics)
            ref = resolver.resolve(trait.decl_id, container_args)
            method = trait.method(ptr.func.method)
            if method is not None:
                refs = []
                merged = concat_generic_args(container_args, method_args)
                for clause in method.signature.generics.trait_clauses:
                    goal_args = ir.substitute_args(clause.args, merged)
                    refs.append(resolver.resolve(clause.trait_decl_id, goal_args))
                method_args = replace_refs(method_args, tuple(refs))
            new_ptr = ir.FnPtr(ir.FnTraitMethod(ref, ptr.func.method), method_args)
            return ir.FnOpRegular(new_ptr), []
        except ResolveError as exc:
            return func, [Diagnostic(exc.code, exc.reason, span, fn_name)]
    if isinstance(ptr.func, ir.FnFun) and not ptr.generics.trait_refs:
        callee = crate.fun_decls[ptr.func.fun_decl_id]
        clauses = callee.signature.generics.trait_clauses
        if not clauses:
            return func, []
        try:
            refs = []
            for clause in clauses:
                goal_args = ir.substitute_args(clause.args, ptr.generics)
                refs.append(resolver.resolve(clause.trait_decl_id, goal_args))
            new_ptr = ir.FnPtr(ptr.func, replace_refs(ptr.generics, tuple(refs)))
            return ir.FnOpRegular(new_ptr), []
        except ResolveError as exc:
            return func, [Diagnostic(exc.code, exc.reason, span, fn_name)]
    return func, []


def replace_refs(args: ir.GenericArgs, refs: tuple[ir.TraitRefKind, ...]) -> ir.GenericArgs:
    return ir.GenericArgs(
        regions=args.regions,
        types=args.types,
        const_generics=args.const_generics,
        trait_refs=refs,
    )
