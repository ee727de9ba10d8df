"""Policy and expression evaluation against world states, and partial
evaluation of predicates into parameter-only residual formulas.

Everything here is a pure function over immutable inputs. Floating point is
binary64 throughout; folding a concrete comparison uses exact binary64
comparison. Division by zero raises DivisionByZero rather than producing a
silent zero, so downstream enumeration can mark the candidate instead of
corrupting its signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .dimensions import registered_operator
from .dsl import (
    ActionEq,
    And,
    BinaryOp,
    Const,
    FalseP,
    Gt,
    HoleExpr,
    HoleParam,
    HolePred,
    InputVar,
    Lt,
    Or,
    Param,
    Policy,
    Pred,
    TrueP,
    UnaryOp,
)
from .errors import EvalError

__all__ = [
    "WorldState",
    "eval_expr",
    "eval_pred",
    "eval_policy",
    "partial_eval",
    "RTrue", "RFalse", "RAtom", "RAnd", "ROr",
    "eval_residual",
    "residual_holes",
]


@dataclass(frozen=True)
class WorldState:
    """Named input bindings plus the action that was previously running.

    Bindings map input names to floats or planar (x, y) tuples and must
    conform to the active domain's input schema.
    """

    start_action: str
    bindings: Mapping[str, object]


def _op_fn(name, nargs):
    sig = registered_operator(name)
    if sig is None or sig.arity != nargs:
        raise EvalError(f"no operator {name}/{nargs}")
    return sig.fn


def eval_expr(e, w: WorldState):
    """Value of a hole-free expression at `w` (float or 2-tuple)."""
    if isinstance(e, InputVar):
        try:
            return w.bindings[e.name]
        except KeyError:
            raise EvalError(f"world has no binding for {e.name!r}") from None
    if isinstance(e, Const):
        return e.value
    if isinstance(e, UnaryOp):
        return _op_fn(e.op, 1)((eval_expr(e.arg, w),))
    if isinstance(e, BinaryOp):
        return _op_fn(e.op, 2)((eval_expr(e.left, w), eval_expr(e.right, w)))
    if isinstance(e, HoleExpr):
        raise EvalError(f"cannot evaluate expression hole ?{e.id}")
    raise EvalError(f"not an expression: {e!r}")


def _resolve_action(name, w):
    return w.start_action if name == "a_s" else name


def eval_pred(b: Pred, w: WorldState) -> bool:
    """Truth of a hole-free predicate at `w`. Conjunction and disjunction
    short-circuit left to right."""
    if isinstance(b, TrueP):
        return True
    if isinstance(b, FalseP):
        return False
    if isinstance(b, ActionEq):
        return _resolve_action(b.left, w) == _resolve_action(b.right, w)
    if isinstance(b, (Lt, Gt)):
        thr = b.threshold
        if not isinstance(thr, Param):
            raise EvalError(f"unfilled parameter hole ?{thr.name}")
        v = eval_expr(b.expr, w)
        return v < thr.value if isinstance(b, Lt) else v > thr.value
    if isinstance(b, And):
        return eval_pred(b.left, w) and eval_pred(b.right, w)
    if isinstance(b, Or):
        return eval_pred(b.left, w) or eval_pred(b.right, w)
    if isinstance(b, HolePred):
        raise EvalError(f"cannot evaluate predicate hole ?{b.id}")
    raise EvalError(f"not a predicate: {b!r}")


def eval_policy(p: Policy, w: WorldState) -> str:
    """Action chosen by `p` at `w`: the first branch whose guard holds,
    else the fallback. Guards are evaluated top to bottom, never reordered."""
    for branch in p.branches:
        if eval_pred(branch.guard, w):
            return branch.result
    return p.fallback


# --- Residual predicates ------------------------------------------------

class _Residual:
    __slots__ = ()


@dataclass(frozen=True)
class RTrue(_Residual):
    pass


@dataclass(frozen=True)
class RFalse(_Residual):
    pass


@dataclass(frozen=True)
class RAtom(_Residual):
    """`value rel ?hole` after folding the compared expression to a constant."""

    value: float
    rel: str  # "<" or ">"
    hole: str


@dataclass(frozen=True)
class RAnd(_Residual):
    left: _Residual
    right: _Residual


@dataclass(frozen=True)
class ROr(_Residual):
    left: _Residual
    right: _Residual


_R_TRUE = RTrue()
_R_FALSE = RFalse()


def partial_eval(b: Pred, w: WorldState) -> _Residual:
    """Fold all concrete subterms of `b` at `w`, leaving a boolean formula
    whose atoms reference only parameter holes.

    Expressions fold to constants, action tests and concrete comparisons
    fold to literals, and boolean simplification is applied with the same
    left-to-right short-circuiting as eval_pred. `b` must contain no
    expression or predicate holes.
    """
    if isinstance(b, TrueP):
        return _R_TRUE
    if isinstance(b, FalseP):
        return _R_FALSE
    if isinstance(b, ActionEq):
        eq = _resolve_action(b.left, w) == _resolve_action(b.right, w)
        return _R_TRUE if eq else _R_FALSE
    if isinstance(b, (Lt, Gt)):
        rel = "<" if isinstance(b, Lt) else ">"
        value = eval_expr(b.expr, w)
        thr = b.threshold
        if isinstance(thr, Param):
            ok = value < thr.value if rel == "<" else value > thr.value
            return _R_TRUE if ok else _R_FALSE
        return RAtom(value, rel, thr.name)
    if isinstance(b, And):
        left = partial_eval(b.left, w)
        if isinstance(left, RFalse):
            return _R_FALSE
        right = partial_eval(b.right, w)
        if isinstance(left, RTrue):
            return right
        if isinstance(right, RTrue):
            return left
        if isinstance(right, RFalse):
            return _R_FALSE
        return RAnd(left, right)
    if isinstance(b, Or):
        left = partial_eval(b.left, w)
        if isinstance(left, RTrue):
            return _R_TRUE
        right = partial_eval(b.right, w)
        if isinstance(left, RFalse):
            return right
        if isinstance(right, RFalse):
            return left
        if isinstance(right, RTrue):
            return _R_TRUE
        return ROr(left, right)
    if isinstance(b, HolePred):
        raise EvalError(f"cannot partially evaluate predicate hole ?{b.id}")
    raise EvalError(f"not a predicate: {b!r}")


def eval_residual(r: _Residual, assignment: Mapping[str, float]) -> bool:
    """Truth of a residual under a total parameter assignment."""
    if isinstance(r, RTrue):
        return True
    if isinstance(r, RFalse):
        return False
    if isinstance(r, RAtom):
        v = assignment[r.hole]
        return r.value < v if r.rel == "<" else r.value > v
    if isinstance(r, RAnd):
        return eval_residual(r.left, assignment) and eval_residual(r.right, assignment)
    if isinstance(r, ROr):
        return eval_residual(r.left, assignment) or eval_residual(r.right, assignment)
    raise EvalError(f"not a residual: {r!r}")


def residual_holes(r: _Residual):
    """Hole names referenced by `r`, in first-occurrence order."""
    out = []

    def walk(r):
        if isinstance(r, RAtom):
            if r.hole not in out:
                out.append(r.hole)
        elif isinstance(r, (RAnd, ROr)):
            walk(r.left)
            walk(r.right)

    walk(r)
    return out


def residual_atoms(r: _Residual):
    """All atoms of `r`, left to right."""
    out = []

    def walk(r):
        if isinstance(r, RAtom):
            out.append(r)
        elif isinstance(r, (RAnd, ROr)):
            walk(r.left)
            walk(r.right)

    walk(r)
    return out
