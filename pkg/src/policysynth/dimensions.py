"""Dimension algebra, the operator signature registry, and the dimensional
type checker for policy ASTs.

A Dimension is a vector of integer exponents over Length, Time, and Mass.
Values are booleans, dimensioned scalars, or planar (2-component) vectors
whose components share one dimension. Operator signatures pair a shape rule
(scalar/vector arity pattern) with a dimension rule, so the checker can
distinguish "wrong shape" from "incommensurable quantities".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

from .errors import (
    ComparisonDimensionMismatch,
    DivisionByZero,
    IncommensurableOperands,
    OperatorDomainError,
    UnknownAction,
    UnknownVariable,
)

__all__ = [
    "Dimension",
    "DIMENSIONLESS",
    "dim_add",
    "dim_sub",
    "ValueType",
    "BoolType",
    "ScalarType",
    "VectorType",
    "BOOL",
    "OpRule",
    "OpSignature",
    "builtin_signatures",
    "register_operator",
    "registered_operator",
    "TypeEnv",
    "check_expr",
    "check_policy",
]


@dataclass(frozen=True)
class Dimension:
    """Integer exponents (length, time, mass); (0,0,0) is dimensionless."""

    length: int = 0
    time: int = 0
    mass: int = 0

    def as_tuple(self):
        return (self.length, self.time, self.mass)

    @classmethod
    def of(cls, exponents):
        l, t, m = exponents
        return cls(int(l), int(t), int(m))

    def __add__(self, other):
        return Dimension(self.length + other.length, self.time + other.time,
                         self.mass + other.mass)

    def __sub__(self, other):
        return Dimension(self.length - other.length, self.time - other.time,
                         self.mass - other.mass)

    def __repr__(self):
        return f"[{self.length},{self.time},{self.mass}]"


DIMENSIONLESS = Dimension(0, 0, 0)


def dim_add(a: Dimension, b: Dimension) -> Dimension:
    """Componentwise sum, the dimension of a product of quantities."""
    return a + b


def dim_sub(a: Dimension, b: Dimension) -> Dimension:
    """Componentwise difference, the dimension of a quotient of quantities."""
    return a - b


class ValueType:
    """Base class for value types: bool, dimensioned scalar, planar vector."""

    __slots__ = ()


@dataclass(frozen=True)
class BoolType(ValueType):
    def __repr__(self):
        return "bool"


@dataclass(frozen=True)
class ScalarType(ValueType):
    dim: Dimension = DIMENSIONLESS

    def __repr__(self):
        return f"scalar{self.dim!r}"


@dataclass(frozen=True)
class VectorType(ValueType):
    dim: Dimension = DIMENSIONLESS

    def __repr__(self):
        return f"vector{self.dim!r}"


BOOL = BoolType()


def shape_of(t: ValueType) -> str:
    if isinstance(t, ScalarType):
        return "scalar"
    if isinstance(t, VectorType):
        return "vector"
    return "bool"


@dataclass(frozen=True)
class OpRule:
    """One admissible shape pattern of an operator plus its dimension rule.

    dims is one of:
      "pass" -- unary, result keeps the operand dimension
      "zero" -- all operands must be dimensionless; result dimensionless
      "same" -- operand dimensions must be equal; result shares them
      "add"  -- result dimension is the componentwise sum
      "sub"  -- result dimension is the componentwise difference
    """

    shapes: tuple[str, ...]
    result_shape: str
    dims: str

    def matches_shapes(self, types) -> bool:
        return tuple(shape_of(t) for t in types) == self.shapes

    def result(self, types) -> ValueType | None:
        """Result type if the dimension rule admits these operands."""
        if not self.matches_shapes(types):
            return None
        ds = [t.dim for t in types]
        if self.dims == "pass":
            out = ds[0]
        elif self.dims == "zero":
            if any(d != DIMENSIONLESS for d in ds):
                return None
            out = DIMENSIONLESS
        elif self.dims == "same":
            if any(d != ds[0] for d in ds[1:]):
                return None
            out = ds[0]
        elif self.dims == "add":
            out = ds[0] + ds[1]
        elif self.dims == "sub":
            out = ds[0] - ds[1]
        else:
            raise ValueError(f"unknown dimension rule {self.dims!r}")
        return ScalarType(out) if self.result_shape == "scalar" else VectorType(out)


@dataclass(frozen=True)
class OpSignature:
    """An operator: name, arity, typing rules, and its value-level evaluator.

    Rules are a total function over operand types: a non-matching operand
    tuple is an explicit rejection (apply returns None), never undefined.
    """

    name: str
    arity: int
    rules: tuple[OpRule, ...]
    fn: Callable
    infix: bool = False

    def apply(self, types) -> ValueType | None:
        if len(types) != self.arity or any(isinstance(t, BoolType) for t in types):
            return None
        for rule in self.rules:
            out = rule.result(types)
            if out is not None:
                return out
        return None

    def apply_shapes(self, shapes: tuple[str, ...]) -> str | None:
        """Shape-only typing (dimension tracking disabled)."""
        if len(shapes) != self.arity:
            return None
        for rule in self.rules:
            if rule.shapes == shapes:
                return rule.result_shape
        return None

    def rejects_by_dims_only(self, types) -> bool:
        """True when some rule matches the shapes but a "same" dimension
        constraint fails -- the incommensurable-operand case."""
        if len(types) != self.arity or any(isinstance(t, BoolType) for t in types):
            return False
        return any(r.matches_shapes(types) and r.dims == "same"
                   for r in self.rules)


def _div(a, b):
    if b == 0.0:
        raise DivisionByZero(f"division by zero: {a!r} / 0")
    return a / b


def _op_abs(args):
    return abs(args[0])


def _op_sin(args):
    return math.sin(args[0])


def _op_cos(args):
    return math.cos(args[0])


def _op_norm(args):
    v = args[0]
    return math.hypot(v[0], v[1])


def _op_add(args):
    a, b = args
    if isinstance(a, tuple):
        return (a[0] + b[0], a[1] + b[1])
    return a + b


def _op_sub(args):
    a, b = args
    if isinstance(a, tuple):
        return (a[0] - b[0], a[1] - b[1])
    return a - b


def _op_mul(args):
    a, b = args
    if isinstance(b, tuple):
        return (a * b[0], a * b[1])
    return a * b


def _op_div(args):
    a, b = args
    if isinstance(a, tuple):
        return (_div(a[0], b), _div(a[1], b))
    return _div(a, b)


def _op_dist(args):
    a, b = args
    return math.hypot(a[0] - b[0], a[1] - b[1])


_S = "scalar"
_V = "vector"

_BUILTINS = (
    OpSignature("abs", 1, (OpRule((_S,), _S, "pass"),), _op_abs),
    OpSignature("sin", 1, (OpRule((_S,), _S, "zero"),), _op_sin),
    OpSignature("cos", 1, (OpRule((_S,), _S, "zero"),), _op_cos),
    OpSignature("norm", 1, (OpRule((_V,), _S, "pass"),), _op_norm),
    OpSignature("+", 2, (OpRule((_S, _S), _S, "same"),
                         OpRule((_V, _V), _V, "same")), _op_add, infix=True),
    OpSignature("-", 2, (OpRule((_S, _S), _S, "same"),
                         OpRule((_V, _V), _V, "same")), _op_sub, infix=True),
    OpSignature("*", 2, (OpRule((_S, _S), _S, "add"),
                         OpRule((_S, _V), _V, "add")), _op_mul, infix=True),
    OpSignature("/", 2, (OpRule((_S, _S), _S, "sub"),
                         OpRule((_V, _S), _V, "sub")), _op_div, infix=True),
    OpSignature("dist", 2, (OpRule((_V, _V), _S, "same"),), _op_dist),
)

_REGISTRY: dict[str, OpSignature] = {sig.name: sig for sig in _BUILTINS}


def builtin_signatures() -> tuple[OpSignature, ...]:
    """The built-in operator set, in canonical registration order."""
    return _BUILTINS


def register_operator(sig: OpSignature) -> None:
    """Register an extra operator so domains may enable it by name."""
    _REGISTRY[sig.name] = sig


def registered_operator(name: str) -> OpSignature | None:
    return _REGISTRY.get(name)


@dataclass(frozen=True)
class TypeEnv:
    """Input schema, enabled operators (in registration order), actions,
    and the constant pool admitted into expression enumeration."""

    inputs: Mapping[str, ValueType]
    ops: tuple[OpSignature, ...]
    actions: frozenset[str]
    constants: tuple = ()  # (value, Dimension) pairs

    def op(self, name: str, arity: int) -> OpSignature | None:
        for sig in self.ops:
            if sig.name == name and sig.arity == arity:
                return sig
        return None


def check_expr(e, env: TypeEnv) -> ValueType:
    """Type and dimension of `e` under `env`.

    Raises UnknownVariable, OperatorDomainError, or IncommensurableOperands;
    each carries the path of child indices to the offending subterm.
    """
    from .dsl import BinaryOp, Const, HoleExpr, InputVar, UnaryOp

    def go(e, path):
        if isinstance(e, InputVar):
            t = env.inputs.get(e.name)
            if t is None:
                raise UnknownVariable(f"unknown input {e.name!r}", path)
            return t
        if isinstance(e, Const):
            return e.vtype
        if isinstance(e, HoleExpr):
            if e.vtype is None:
                raise OperatorDomainError(
                    f"expression hole ?{e.id} has no type annotation", path)
            return e.vtype
        if isinstance(e, UnaryOp):
            sig = env.op(e.op, 1)
            if sig is None:
                raise OperatorDomainError(f"operator {e.op!r} not enabled", path)
            t = go(e.arg, path + (0,))
            out = sig.apply((t,))
            if out is None:
                raise OperatorDomainError(
                    f"{e.op} does not accept {t!r}", path)
            return out
        if isinstance(e, BinaryOp):
            sig = env.op(e.op, 2)
            if sig is None:
                raise OperatorDomainError(f"operator {e.op!r} not enabled", path)
            ts = (go(e.left, path + (0,)), go(e.right, path + (1,)))
            out = sig.apply(ts)
            if out is None:
                if sig.rejects_by_dims_only(ts):
                    raise IncommensurableOperands(
                        f"{e.op} over incommensurable {ts[0]!r} and {ts[1]!r}",
                        path)
                raise OperatorDomainError(
                    f"{e.op} does not accept {ts[0]!r} and {ts[1]!r}", path)
            return out
        raise OperatorDomainError(f"not an expression: {e!r}", path)

    return go(e, ())


def _check_action(name, env, path):
    if name != "a_s" and name not in env.actions:
        raise UnknownAction(f"unknown action {name!r}")


def check_pred(b, env: TypeEnv, path=()) -> None:
    from .dsl import ActionEq, And, FalseP, Gt, HoleParam, HolePred, Lt, Or, TrueP

    if isinstance(b, (TrueP, FalseP, HolePred)):
        return
    if isinstance(b, ActionEq):
        _check_action(b.left, env, path)
        _check_action(b.right, env, path)
        return
    if isinstance(b, (Lt, Gt)):
        t = check_expr(b.expr, env)
        if not isinstance(t, ScalarType):
            raise OperatorDomainError(
                f"comparison requires a scalar, got {t!r}", path)
        tdim = b.threshold.dim
        # None marks an internal wildcard hole; its dimension follows the
        # expression once filled, so there is nothing to cross-check yet.
        if tdim is not None and tdim != t.dim:
            raise ComparisonDimensionMismatch(
                f"threshold {tdim!r} vs expression {t.dim!r}", path)
        return
    if isinstance(b, (And, Or)):
        check_pred(b.left, env, path + (0,))
        check_pred(b.right, env, path + (1,))
        return
    raise OperatorDomainError(f"not a predicate: {b!r}", path)


def check_policy(p, env: TypeEnv) -> None:
    """Check every guard, branch action, and threshold dimension in `p`.

    Returns None when the policy is well-typed; raises a TypeCheckError or
    UnknownAction otherwise.
    """
    for i, branch in enumerate(p.branches):
        check_pred(branch.guard, env, (i,))
        _check_action(branch.result, env, (i,))
    _check_action(p.fallback, env, (len(p.branches),))
