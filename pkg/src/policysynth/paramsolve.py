"""Threshold-parameter solving: fill blank parameters of an
expression-complete predicate so it is true on every positive and false on
every negative example, and the minimal-adjustment repair variant.

After partial evaluation every atom is a half-line constraint on a single
parameter, so a complete decision procedure only has to sample one point
per cell of the arrangement induced by the observed constants: the
midpoints between consecutive distinct constants plus one point beyond each
extreme. Candidates deliberately avoid the constants themselves, so strict
versus non-strict comparison never bites; thresholds end up strictly
between observed values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsl import (
    And,
    Branch,
    Gt,
    HoleParam,
    Lt,
    Or,
    Param,
    Policy,
    Pred,
    collect_pred_holes,
)
from .errors import UNSAT, CapacityExceeded, EvalError, Unsat
from .interp import (
    RAnd,
    RAtom,
    RFalse,
    ROr,
    RTrue,
    eval_policy,
    eval_residual,
    partial_eval,
)

__all__ = [
    "ParamConstraintSystem",
    "build_system",
    "build_branch_system",
    "solve",
    "rank_assignment",
    "verify_assignment",
    "substitute_params",
    "policy_params",
    "repair",
    "apply_adjustments",
    "DEFAULT_CAPACITY",
]

DEFAULT_CAPACITY = 10_000_000


@dataclass
class ParamConstraintSystem:
    """Residuals that must hold (positives) or fail (negatives), over a
    shared parameter-hole set. `contradiction` records an example that can
    never be satisfied (literal-false positive, literal-true negative, or
    an evaluation fault), which makes the system UNSAT outright."""

    positives: list = field(default_factory=list)
    negatives: list = field(default_factory=list)
    holes: dict = field(default_factory=dict)  # name -> Dimension | None
    contradiction: str | None = None


def build_system(b: Pred, pos, neg) -> ParamConstraintSystem:
    """Partially evaluate `b` against each example and collect the residual
    constraints. `b` may contain parameter holes only."""
    sys = ParamConstraintSystem()
    for hole in collect_pred_holes(b)[0]:
        sys.holes[hole.name] = hole.dim
    for w in pos:
        try:
            r = partial_eval(b, w)
        except EvalError as ex:
            sys.contradiction = f"positive example failed to evaluate: {ex}"
            continue
        if isinstance(r, RFalse):
            sys.contradiction = "a positive example makes the predicate false"
        elif not isinstance(r, RTrue):
            sys.positives.append(r)
    for w in neg:
        try:
            r = partial_eval(b, w)
        except EvalError as ex:
            sys.contradiction = f"negative example failed to evaluate: {ex}"
            continue
        if isinstance(r, RTrue):
            sys.contradiction = "a negative example makes the predicate true"
        elif not isinstance(r, RFalse):
            sys.negatives.append(r)
    return sys


def build_branch_system(guard: Pred, labeled, result: str) -> ParamConstraintSystem:
    """Constraint system for one policy branch against labeled worlds.

    `labeled` is (world, label) pairs. The guard must hold on worlds labeled
    with the branch's own result and fail on the rest -- except that a
    same-label world on which the guard folds to literal false is skipped
    rather than contradicted: under first-match evaluation another branch
    with the same result (keyed to a different start action) handles it,
    and callers verify the assembled policy against every example.
    """
    sys = ParamConstraintSystem()
    for hole in collect_pred_holes(guard)[0]:
        sys.holes[hole.name] = hole.dim
    for w, label in labeled:
        try:
            r = partial_eval(guard, w)
        except EvalError as ex:
            sys.contradiction = f"example failed to evaluate: {ex}"
            continue
        if label == result:
            if isinstance(r, (RTrue, RFalse)):
                continue
            sys.positives.append(r)
        else:
            if isinstance(r, RTrue):
                sys.contradiction = (
                    f"guard unconditionally fires on a world labeled {label!r}")
            elif not isinstance(r, RFalse):
                sys.negatives.append(r)
    return sys


def _hole_constants(sys: ParamConstraintSystem):
    """Distinct comparison constants per hole, sorted ascending."""
    consts = {name: set() for name in sys.holes}
    for r in sys.positives + sys.negatives:
        _collect_atom_constants(r, consts)
    return {name: sorted(vals) for name, vals in consts.items()}


def _collect_atom_constants(r, consts):
    if isinstance(r, RAtom):
        consts.setdefault(r.hole, set()).add(r.value)
    elif isinstance(r, (RAnd, ROr)):
        _collect_atom_constants(r.left, consts)
        _collect_atom_constants(r.right, consts)


def candidate_values(constants, extras=()):
    """The exact candidate set for one hole: midpoints of consecutive
    distinct constants, plus one value below the minimum and one above the
    maximum (offset = max(1, range) * 0.5), plus any injected extras."""
    vals = set(extras)
    if constants:
        rng = constants[-1] - constants[0]
        off = max(1.0, rng) * 0.5
        vals.add(constants[0] - off)
        vals.add(constants[-1] + off)
        for a, b in zip(constants, constants[1:]):
            vals.add((a + b) / 2.0)
    if not vals:
        vals.add(0.0)
    return sorted(vals)


def _residual_grid(r, axes, names):
    """Truth of residual `r` over the candidate grid, as a broadcastable
    boolean array (or a plain bool for literals)."""
    if isinstance(r, RTrue):
        return True
    if isinstance(r, RFalse):
        return False
    if isinstance(r, RAtom):
        i = names.index(r.hole)
        cands = axes[i]
        vec = (r.value < cands) if r.rel == "<" else (r.value > cands)
        shape = [1] * len(axes)
        shape[i] = len(cands)
        return vec.reshape(shape)
    if isinstance(r, RAnd):
        return np.logical_and(_residual_grid(r.left, axes, names),
                              _residual_grid(r.right, axes, names))
    if isinstance(r, ROr):
        return np.logical_or(_residual_grid(r.left, axes, names),
                             _residual_grid(r.right, axes, names))
    raise TypeError(f"not a residual: {r!r}")


def _grid_search(sys, per_hole_candidates, score_grids, pick,
                 capacity=DEFAULT_CAPACITY):
    """Feasible-grid search shared by solve and repair.

    `score_grids` maps (names, axes) to a float array broadcastable over the
    grid; `pick` is "max" or "min". Returns the best assignment (first in
    row-major order among ties) or UNSAT.
    """
    names = sorted(sys.holes)
    axes = [np.asarray(per_hole_candidates[n], dtype=float) for n in names]
    size = 1
    for a in axes:
        size *= len(a)
    if size > capacity:
        raise CapacityExceeded(
            f"candidate product {size} exceeds capacity {capacity}")
    shape = tuple(len(a) for a in axes)
    feasible = np.ones(shape, dtype=bool)
    for r in sys.positives:
        feasible &= _residual_grid(r, axes, names)
    for r in sys.negatives:
        feasible &= np.logical_not(_residual_grid(r, axes, names))
    if not feasible.any():
        return UNSAT
    score = np.broadcast_to(score_grids(names, axes), shape)
    if pick == "max":
        masked = np.where(feasible, score, -np.inf)
        flat = int(np.argmax(masked))
    else:
        masked = np.where(feasible, score, np.inf)
        flat = int(np.argmin(masked))
    idx = np.unravel_index(flat, shape) if shape else ()
    return {n: float(axes[i][idx[i]]) for i, n in enumerate(names)}


def _margin_grid(sys):
    """min over atoms of |constant - value|, broadcast over the grid."""
    constants = _hole_constants(sys)

    def build(names, axes):
        grid = np.full((1,) * len(names) if names else (), np.inf)
        for i, n in enumerate(names):
            consts = np.asarray(constants[n], dtype=float)
            if len(consts) == 0:
                continue
            m = np.min(np.abs(axes[i][:, None] - consts[None, :]), axis=1)
            shape = [1] * len(names)
            shape[i] = len(axes[i])
            grid = np.minimum(grid, m.reshape(shape))
        return grid

    return build


def solve(sys: ParamConstraintSystem, capacity=DEFAULT_CAPACITY):
    """Complete decision procedure for the half-line constraint fragment.

    Returns the satisfying assignment that maximizes the minimum absolute
    margin over all atoms (ties: lexicographic hole name, then smaller
    value), or UNSAT. Raises CapacityExceeded when the candidate product
    exceeds `capacity`.
    """
    if sys.contradiction is not None:
        return Unsat(sys.contradiction)
    constants = _hole_constants(sys)
    cands = {n: candidate_values(constants[n]) for n in sys.holes}
    return _grid_search(sys, cands, _margin_grid(sys), "max", capacity)


def rank_assignment(sys: ParamConstraintSystem, candidates):
    """Best assignment among `candidates` (all presumed satisfying) by
    maximum minimum margin; ties broken by lexicographic hole name then
    smaller value."""
    constants = _hole_constants(sys)
    names = sorted(sys.holes)

    def margin(a):
        m = np.inf
        for n in names:
            for c in constants[n]:
                m = min(m, abs(c - a[n]))
        return m

    def key(a):
        return (-margin(a), tuple(a[n] for n in names))

    return min(candidates, key=key)


def verify_assignment(sys: ParamConstraintSystem, assignment) -> bool:
    """Direct evaluation check, independent of the grid search."""
    if sys.contradiction is not None:
        return False
    return (all(eval_residual(r, assignment) for r in sys.positives)
            and not any(eval_residual(r, assignment) for r in sys.negatives))


def substitute_params(b: Pred, assignment) -> Pred:
    """Replace parameter holes named in `assignment` with concrete values."""
    if isinstance(b, (Lt, Gt)):
        thr = b.threshold
        if isinstance(thr, HoleParam) and thr.name in assignment:
            thr = Param(assignment[thr.name], thr.dim, name=thr.name)
            return type(b)(b.expr, thr)
        return b
    if isinstance(b, (And, Or)):
        return type(b)(substitute_params(b.left, assignment),
                       substitute_params(b.right, assignment))
    return b


# --- Repair ------------------------------------------------------------

def policy_params(p: Policy):
    """Concrete thresholds of `p` in textual order, positionally renamed
    k1..kn: a list of (name, value, dimension)."""
    out = []

    def walk(b):
        if isinstance(b, (Lt, Gt)) and isinstance(b.threshold, Param):
            out.append((f"k{len(out) + 1}", b.threshold.value, b.threshold.dim))
        elif isinstance(b, (And, Or)):
            walk(b.left)
            walk(b.right)

    for branch in p.branches:
        walk(branch.guard)
    return out


def _hole_policy(p: Policy):
    """Replace every concrete threshold x with a hole solved in absolute
    (x + delta) space; returns the holed policy and {name: original}."""
    originals = {}

    def walk(b):
        if isinstance(b, (Lt, Gt)) and isinstance(b.threshold, Param):
            name = f"k{len(originals) + 1}"
            originals[name] = b.threshold.value
            return type(b)(b.expr, HoleParam(name, b.threshold.dim))
        if isinstance(b, (And, Or)):
            return type(b)(walk(b.left), walk(b.right))
        return b

    branches = tuple(Branch(walk(br.guard), br.result) for br in p.branches)
    return Policy(branches, p.fallback), originals


def repair(p: Policy, corrections, capacity=DEFAULT_CAPACITY):
    """Adjust the concrete thresholds of hole-free `p` so that it classifies
    every correction correctly, minimizing the total absolute adjustment.

    Every threshold x is replaced by a blank adjustment (solved as x+d with
    d = 0 always a candidate). Each branch is constrained exactly as
    synthesis constrains sub-problems: its guard must hold on corrections
    labeled with the branch's action and fail on all others. Returns
    {name: delta} over the positional parameter names of policy_params, or
    UNSAT when no adjustment vector suffices (the structure, not the
    parameters, is then wrong).
    """
    holed, originals = _hole_policy(p)
    labeled = [(c.world, c.next_action) for c in corrections]
    deltas = {}
    for branch in holed.branches:
        names = [h.name for h in collect_pred_holes(branch.guard)[0]]
        sys = build_branch_system(branch.guard, labeled, branch.result)
        if sys.contradiction is not None:
            return Unsat(f"branch -> {branch.result}: {sys.contradiction}")
        constants = _hole_constants(sys)
        cands = {n: candidate_values(constants[n], extras=(originals[n],))
                 for n in names}

        def cost(names_, axes):
            grid = np.zeros((1,) * len(names_) if names_ else ())
            for i, n in enumerate(names_):
                c = np.abs(axes[i] - originals[n])
                shape = [1] * len(names_)
                shape[i] = len(axes[i])
                grid = grid + c.reshape(shape)
            return grid

        result = _grid_search(sys, cands, cost, "min", capacity)
        if isinstance(result, Unsat):
            return Unsat(f"branch -> {branch.result}: no adjustment "
                         f"satisfies the corrections")
        for n in names:
            deltas[n] = result[n] - originals[n]
    repaired = apply_adjustments(p, deltas)
    for c in corrections:
        if eval_policy(repaired, c.world) != c.next_action:
            return Unsat("corrections demand an action no branch structure "
                         "can produce")
    return deltas


def apply_adjustments(p: Policy, deltas) -> Policy:
    """Rebuild `p` with each positional parameter shifted by its delta."""
    counter = [0]

    def walk(b):
        if isinstance(b, (Lt, Gt)) and isinstance(b.threshold, Param):
            counter[0] += 1
            name = f"k{counter[0]}"
            thr = b.threshold
            value = thr.value + deltas.get(name, 0.0)
            return type(b)(b.expr, Param(value, thr.dim, name=name))
        if isinstance(b, (And, Or)):
            return type(b)(walk(b.left), walk(b.right))
        return b

    branches = tuple(Branch(walk(br.guard), br.result) for br in p.branches)
    return Policy(branches, p.fallback)
