"""Predicate and policy synthesis from labeled transitions.

The two entry points mirror the layering of the search:

* L2 completes one predicate that still has blank expressions and blank
  parameters, by enumerating dimension-correct candidate expressions,
  substituting them into the blanks (lazily, smallest first), and handing
  each filled predicate to the parameter solver.

* L3 builds a whole policy: it splits the demonstrations into one binary
  classification sub-problem per observed (start action -> target action)
  transition, searches predicate skeletons of increasing size for each
  sub-problem, and assembles the solved guards into an if/elif chain over
  the domain's default action. With a sketch, only the holes are
  synthesized and all concrete structure is preserved verbatim.

Candidate streams are deterministic throughout: skeletons ascend by atom
count, expression fillings follow enumeration order, and the first success
wins. For the common skeleton shapes (one or two comparisons) the scan over
(expression, expression) pairs is vectorized over candidate signatures; the
bounds used are exact for half-line constraints, so the vectorized scan
accepts exactly the fills the sequential scan would, in the same order.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .dimensions import ScalarType, TypeEnv, check_expr
from .dsl import (
    ActionEq,
    And,
    Branch,
    Gt,
    HoleExpr,
    HoleParam,
    Lt,
    Or,
    Policy,
    Pred,
    collect_pred_holes,
)
from .enumeration import ERROR, Candidate, EnumConfig, enum_features
from .errors import UNSAT, EmptyCandidates, TypeCheckError, Unsat
from .interp import WorldState, eval_policy
from .paramsolve import (
    DEFAULT_CAPACITY,
    build_branch_system,
    build_system,
    solve,
    substitute_params,
)

__all__ = [
    "Demonstration",
    "SubProblem",
    "fill_expressions",
    "L2",
    "divide_problem",
    "enum_predicates",
    "L3",
    "make_policy",
]


@dataclass(frozen=True)
class Demonstration:
    """One labeled transition: in `world` (whose previous action is
    `start_action`) the demonstrator chose `next_action`."""

    start_action: str
    world: WorldState
    next_action: str


@dataclass(frozen=True)
class SubProblem:
    """The (start -> target) transition's binary classification task."""

    start: str
    target: str
    positives: tuple
    negatives: tuple


# --- Expression filling (L2) --------------------------------------------

def _subst_expr(e, mapping):
    from .dsl import BinaryOp, UnaryOp

    if isinstance(e, HoleExpr):
        return mapping.get(e.id, e)
    if isinstance(e, UnaryOp):
        return UnaryOp(e.op, _subst_expr(e.arg, mapping))
    if isinstance(e, BinaryOp):
        return BinaryOp(e.op, _subst_expr(e.left, mapping),
                        _subst_expr(e.right, mapping))
    return e


def _subst_pred(b, mapping, env):
    if isinstance(b, (Lt, Gt)):
        new_e = _subst_expr(b.expr, mapping)
        thr = b.threshold
        if isinstance(thr, HoleParam) and thr.dim is None and env is not None:
            try:
                t = check_expr(new_e, env)
            except TypeCheckError:
                t = None
            if isinstance(t, ScalarType):
                thr = HoleParam(thr.name, t.dim)
        return type(b)(new_e, thr)
    if isinstance(b, (And, Or)):
        return type(b)(_subst_pred(b.left, mapping, env),
                       _subst_pred(b.right, mapping, env))
    return b


def _hole_matches(hole: HoleExpr, cand: Candidate) -> bool:
    if hole.vtype is None:
        return isinstance(cand.vtype, ScalarType)
    return cand.vtype == hole.vtype


def fill_expressions(b: Pred, candidates, env: TypeEnv):
    """Lazily yield copies of `b` with every expression hole filled, in
    odometer order over the per-hole candidate lists (first hole slowest).
    Candidates are dimension-filtered against each hole's annotation before
    substitution; parameter holes stay open, inheriting the dimension of
    the expression they are compared against.

    Raises EmptyCandidates when some hole has no compatible candidate.
    """
    holes = collect_pred_holes(b)[1]
    if not holes:
        yield b
        return
    per_hole = []
    for hole in holes:
        matching = [c for c in candidates if _hole_matches(hole, c)]
        if not matching:
            raise EmptyCandidates(
                f"no candidate expression fits hole ?{hole.id}")
        per_hole.append(matching)
    for combo in itertools.product(*per_hole):
        mapping = {h.id: c.expr for h, c in zip(holes, combo)}
        yield _subst_pred(b, mapping, env)


def L2(depth, env: TypeEnv, pos, neg, b: Pred,
       tolerance=1e-9, capacity=DEFAULT_CAPACITY, stats=None):
    """Complete the expression and parameter holes of `b` so it is true on
    `pos` and false on `neg`; UNSAT when no filling at this depth works."""
    examples = list(pos) + list(neg)
    if collect_pred_holes(b)[2]:
        raise ValueError("L2 requires a predicate without predicate holes")
    candidates = enum_features(EnumConfig(depth, "full", tolerance),
                               env, None, examples)
    if stats is not None:
        stats["features"] = stats.get("features", 0) + len(candidates)
    try:
        fills = fill_expressions(b, candidates, env)
    except EmptyCandidates:
        return UNSAT
    for filled in fills:
        if stats is not None:
            stats["fills"] = stats.get("fills", 0) + 1
        sys = build_system(filled, pos, neg)
        result = solve(sys, capacity)
        if not isinstance(result, Unsat):
            return substitute_params(filled, result)
    return UNSAT


# --- Problem division (L3) ----------------------------------------------

def divide_problem(demos, domain):
    """One sub-problem per observed (start -> target) transition with
    target distinct from the domain's default action.

    Positives are the worlds of start->target demonstrations; negatives the
    worlds of same-start demonstrations to any other target (the default
    included). Order is deterministic: starts by first appearance, targets
    by descending positive count, then name.
    """
    by_start = {}
    for d in demos:
        by_start.setdefault(d.start_action, []).append(d)
    subs = []
    for start, group in by_start.items():
        counts = {}
        for d in group:
            counts[d.next_action] = counts.get(d.next_action, 0) + 1
        targets = [f for f in counts if f != domain.default_action]
        targets.sort(key=lambda f: (-counts[f], f))
        for f in targets:
            pos = tuple(d.world for d in group if d.next_action == f)
            neg = tuple(d.world for d in group if d.next_action != f)
            subs.append(SubProblem(start, f, pos, neg))
    return subs


# --- Predicate skeletons (L3) -------------------------------------------

_ATOM_RELS = (">", "<")


def _skeleton_templates(max_atoms):
    """Templates by size: size 1 is a bare comparison atom of either
    polarity; larger sizes combine smaller templates under And then Or,
    suppressing commutative twins (left ordinal <= right ordinal)."""
    sizes = {1: [("atom", rel) for rel in _ATOM_RELS]}
    ordinal = {}

    def note(t):
        ordinal[t] = len(ordinal)

    for t in sizes[1]:
        note(t)
    for n in range(2, max_atoms + 1):
        level = []
        for op in ("and", "or"):
            for i in range(1, n // 2 + 1):
                j = n - i
                for left in sizes[i]:
                    for right in sizes[j]:
                        if i == j and ordinal[left] > ordinal[right]:
                            continue
                        level.append((op, left, right))
        for t in level:
            note(t)
        sizes[n] = level
    return [t for n in range(1, max_atoms + 1) for t in sizes[n]]


def _instantiate(template, counter):
    kind = template[0]
    if kind == "atom":
        counter[0] += 1
        i = counter[0]
        atom_cls = Gt if template[1] == ">" else Lt
        return atom_cls(HoleExpr(f"e{i}", None), HoleParam(f"p{i}", None))
    cls = And if kind == "and" else Or
    left = _instantiate(template[1], counter)
    right = _instantiate(template[2], counter)
    return cls(left, right)


def enum_predicates(max_depth):
    """Lazy stream of predicate skeletons in increasing atom count, leaves
    being (?e > ?p) / (?e < ?p) atoms with fresh hole ids."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    for template in _skeleton_templates(max_depth):
        yield _instantiate(template, [0])


def _template_of(skeleton):
    """Recover the (rel ...) shape of a skeleton produced above."""
    if isinstance(skeleton, Gt):
        return ("atom", ">")
    if isinstance(skeleton, Lt):
        return ("atom", "<")
    op = "and" if isinstance(skeleton, And) else "or"
    return (op, _template_of(skeleton.left), _template_of(skeleton.right))


# --- Vectorized first-success search over skeleton fills ----------------

class _SigMatrix:
    """Scalar candidate signatures stacked as a matrix, error rows dropped
    (an erroring candidate can never satisfy a system that folds it)."""

    def __init__(self, candidates, n_pos):
        self.cands = []
        rows = []
        for c in candidates:
            if not isinstance(c.vtype, ScalarType):
                continue
            if any(o is ERROR for o in c.signature):
                continue
            self.cands.append(c)
            rows.append(c.signature)
        self.S = (np.asarray(rows, dtype=float) if rows
                  else np.empty((0, n_pos), dtype=float))
        self.P = self.S[:, :n_pos]
        self.N = self.S[:, n_pos:]

    def atom_bounds(self, rel):
        """Per candidate: the extreme threshold admitted by the positives,
        and which negatives/positives that extreme settles."""
        if rel == ">":
            # true on positives needs k < min(pos); at the extreme the
            # killed negatives are those strictly below it
            lim = self.P.min(axis=1) if self.P.shape[1] else np.full(len(self.cands), np.inf)
            kills = self.N < lim[:, None]
        else:
            lim = self.P.max(axis=1) if self.P.shape[1] else np.full(len(self.cands), -np.inf)
            kills = self.N > lim[:, None]
        return kills

    def atom_covers(self, rel):
        """Dual bounds for disjunctions: false on all negatives pins the
        threshold, which covers the positives beyond every negative."""
        if rel == ">":
            lim = self.N.max(axis=1) if self.N.shape[1] else np.full(len(self.cands), -np.inf)
            covers = self.P > lim[:, None]
        else:
            lim = self.N.min(axis=1) if self.N.shape[1] else np.full(len(self.cands), np.inf)
            covers = self.P < lim[:, None]
        return covers


def _first_feasible_single(sig: _SigMatrix, rel):
    kills = sig.atom_bounds(rel)
    feasible = kills.all(axis=1)
    idx = np.argmax(feasible) if feasible.any() else -1
    return int(idx) if idx >= 0 and feasible[idx] else None


def _first_feasible_pair(need_a, need_b):
    """First (a, b) in row-major order with need_a[a] | need_b[b] covering
    every column. Exact: the uncovered-count matrix is a 0/1 integer dot
    product."""
    if need_a.shape[0] == 0 or need_b.shape[0] == 0:
        return None
    miss_a = (~need_a).astype(np.float32)
    miss_b = (~need_b).astype(np.float32)
    M = miss_a @ miss_b.T
    hits = np.argwhere(M == 0.0)
    if len(hits) == 0:
        return None
    return int(hits[0][0]), int(hits[0][1])


def _solve_skeleton_fast(skeleton, sig: _SigMatrix, guard, pos, neg,
                         capacity, stats):
    """First-success fill of a 1- or 2-atom skeleton, vectorized. Returns
    the completed guard or None (exactly when the sequential scan over
    fill_expressions x solve would return UNSAT)."""
    template = _template_of(skeleton)
    if template[0] == "atom":
        idx = _first_feasible_single(sig, template[1])
        if idx is None:
            return None
        chosen = {1: sig.cands[idx]}
    else:
        rel_a, rel_b = template[1][1], template[2][1]
        if template[0] == "and":
            need_a = sig.atom_bounds(rel_a)
            need_b = sig.atom_bounds(rel_b)
        else:
            need_a = sig.atom_covers(rel_a)
            need_b = sig.atom_covers(rel_b)
        hit = _first_feasible_pair(need_a, need_b)
        if hit is None:
            return None
        chosen = {1: sig.cands[hit[0]], 2: sig.cands[hit[1]]}
    mapping = {f"e{i}": c.expr for i, c in chosen.items()}
    filled = _subst_pred(guard, mapping, None)
    # dimension of each parameter hole follows its chosen expression
    filled = _fill_param_dims(filled, {f"p{i}": c.vtype.dim
                                       for i, c in chosen.items()})
    sys = build_system(filled, pos, neg)
    result = solve(sys, capacity)
    if isinstance(result, Unsat):
        return None
    if stats is not None:
        stats["fills"] = stats.get("fills", 0) + 1
    return substitute_params(filled, result)


def _fill_param_dims(b, dims):
    if isinstance(b, (Lt, Gt)):
        thr = b.threshold
        if isinstance(thr, HoleParam) and thr.dim is None and thr.name in dims:
            return type(b)(b.expr, HoleParam(thr.name, dims[thr.name]))
        return b
    if isinstance(b, (And, Or)):
        return type(b)(_fill_param_dims(b.left, dims),
                       _fill_param_dims(b.right, dims))
    return b


def _atom_count(skeleton):
    if isinstance(skeleton, (Gt, Lt)):
        return 1
    return _atom_count(skeleton.left) + _atom_count(skeleton.right)


# --- Policy assembly (L3) -----------------------------------------------

def make_policy(subproblems, guards, domain) -> Policy:
    """Branches in sub-problem order, one solved guard each; the fallback
    is the domain's default action."""
    branches = tuple(Branch(g, sub.target)
                     for sub, g in zip(subproblems, guards))
    return Policy(branches, domain.default_action)


def _solve_subproblem(sub: SubProblem, env, max_depth, tolerance, capacity,
                      stats):
    examples = list(sub.positives) + list(sub.negatives)
    t0 = time.perf_counter()
    candidates = enum_features(EnumConfig(max_depth, "full", tolerance),
                               env, "scalar", examples)
    if stats is not None:
        stats["enum_seconds"] = stats.get("enum_seconds", 0.0) \
            + (time.perf_counter() - t0)
        stats["features"] = stats.get("features", 0) + len(candidates)
    sig = _SigMatrix(candidates, len(sub.positives))
    prefix = ActionEq("a_s", sub.start)
    t1 = time.perf_counter()
    try:
        for skeleton in enum_predicates(max_depth):
            if stats is not None:
                stats["skeletons"] = stats.get("skeletons", 0) + 1
            guard = And(prefix, skeleton)
            if _atom_count(skeleton) <= 2:
                # ActionEq folds to true on every same-start example, so the
                # vectorized scan over the skeleton alone is exact here.
                done = _solve_skeleton_fast(skeleton, sig, guard,
                                            sub.positives, sub.negatives,
                                            capacity, stats)
                if done is not None:
                    return done
                continue
            result = L2(max_depth, env, sub.positives, sub.negatives, guard,
                        tolerance, capacity, stats)
            if not isinstance(result, Unsat):
                return result
    finally:
        if stats is not None:
            stats["solve_seconds"] = stats.get("solve_seconds", 0.0) \
                + (time.perf_counter() - t1)
    return UNSAT


def _solve_sketch_branch(branch: Branch, labeled, env, max_depth, tolerance,
                         capacity, stats):
    param_holes, expr_holes, pred_holes = collect_pred_holes(branch.guard)
    if not (param_holes or expr_holes or pred_holes):
        return branch.guard

    examples = [w for w, _ in labeled]
    candidates = enum_features(EnumConfig(max_depth, "full", tolerance),
                               env, None, examples)
    if stats is not None:
        stats["features"] = stats.get("features", 0) + len(candidates)

    skeleton_lists = []
    for hole in pred_holes:
        opts = [_rename_skeleton(_instantiate(template, [0]), hole.id)
                for template in _skeleton_templates(max_depth)]
        skeleton_lists.append(opts)

    def guards_to_try():
        if not pred_holes:
            yield branch.guard
            return
        combos = sorted(
            itertools.product(*(range(len(l)) for l in skeleton_lists)),
            key=lambda ix: (sum(_atom_count(skeleton_lists[i][j])
                                for i, j in enumerate(ix)), ix))
        for ix in combos:
            fills = {pred_holes[i].id: skeleton_lists[i][j]
                     for i, j in enumerate(ix)}
            yield _subst_pred_holes(branch.guard, fills)

    for guard in guards_to_try():
        if stats is not None:
            stats["skeletons"] = stats.get("skeletons", 0) + 1
        try:
            fills = fill_expressions(guard, candidates, env)
        except EmptyCandidates:
            continue
        for filled in fills:
            if stats is not None:
                stats["fills"] = stats.get("fills", 0) + 1
            sys = build_branch_system(filled, labeled, branch.result)
            result = solve(sys, capacity)
            if not isinstance(result, Unsat):
                return substitute_params(filled, result)
    return UNSAT


def _rename_skeleton(skel, prefix):
    if isinstance(skel, (Gt, Lt)):
        e = skel.expr
        t = skel.threshold
        return type(skel)(HoleExpr(f"{prefix}_{e.id}", e.vtype),
                          HoleParam(f"{prefix}_{t.name}", t.dim))
    return type(skel)(_rename_skeleton(skel.left, prefix),
                      _rename_skeleton(skel.right, prefix))


def _subst_pred_holes(b, fills):
    from .dsl import HolePred

    if isinstance(b, HolePred):
        return fills.get(b.id, b)
    if isinstance(b, (And, Or)):
        return type(b)(_subst_pred_holes(b.left, fills),
                       _subst_pred_holes(b.right, fills))
    return b


def L3(max_depth, demos, domain, sketch: Policy | None = None,
       tolerance=1e-9, capacity=DEFAULT_CAPACITY, stats=None):
    """Synthesize a policy consistent with every demonstration, or UNSAT.

    Without a sketch the branch structure comes from divide_problem, each
    guard shaped a_s==start && <synthesized predicate>. With a sketch only
    its holes are filled and all concrete structure is preserved verbatim.
    """
    env = domain.type_env()
    if sketch is None:
        subs = divide_problem(demos, domain)
        guards = []
        for sub in subs:
            result = _solve_subproblem(sub, env, max_depth, tolerance,
                                       capacity, stats)
            if isinstance(result, Unsat):
                return Unsat(f"no predicate at depth {max_depth} separates "
                             f"{sub.start}->{sub.target}")
            guards.append(result)
        policy = make_policy(subs, guards, domain)
    else:
        labeled = [(d.world, d.next_action) for d in demos]
        branches = []
        for i, branch in enumerate(sketch.branches):
            result = _solve_sketch_branch(branch, labeled, env, max_depth,
                                          tolerance, capacity, stats)
            if isinstance(result, Unsat):
                return Unsat(f"branch {i + 1} (-> {branch.result}) has no "
                             f"completion at depth {max_depth}")
            branches.append(Branch(result, branch.result))
        policy = Policy(tuple(branches), sketch.fallback)
    for d in demos:
        if eval_policy(policy, d.world) != d.next_action:
            return Unsat("assembled policy is inconsistent with a "
                         "demonstration; the fixed structure cannot "
                         "express the labels")
    return policy
