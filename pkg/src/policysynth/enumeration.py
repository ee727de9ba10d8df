"""Bottom-up, type- and dimension-directed expression enumeration with
signature-based equivalence pruning.

An expression's signature is its value vector over the example worlds; two
expressions that agree on every example (within tolerance, with aligned
error marks) are interchangeable for synthesis against those examples, so
only the first is retained. Pruning modes ablate the two filters:

    full            dimension rules + signature dedupe
    dimension-only  dimension rules, no dedupe
    signature-only  shape rules only, signature dedupe
    none            shape rules only, no dedupe

Depth is AST height; variables and constants have depth 1. Enumeration
order is deterministic: ascending depth, then operator registration order,
then operand order (row-major over earlier results).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dimensions import ScalarType, TypeEnv, ValueType, VectorType, shape_of
from .dsl import Const, InputVar
from .errors import EvalError

__all__ = [
    "ERROR",
    "EnumConfig",
    "MODES",
    "Candidate",
    "enum_features",
    "enum_count_report",
    "signatures_match",
]


class _ErrorMark:
    __slots__ = ()

    def __repr__(self):
        return "ERROR"


ERROR = _ErrorMark()

MODES = ("full", "dimension-only", "signature-only", "none")


@dataclass(frozen=True)
class EnumConfig:
    max_depth: int
    mode: str = "full"
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")

    @property
    def dims_on(self):
        return self.mode in ("full", "dimension-only")

    @property
    def sig_on(self):
        return self.mode in ("full", "signature-only")


@dataclass(frozen=True)
class Candidate:
    """An enumerated expression with its signature. vtype is None in the
    shape-only modes, where no sound dimension can be assigned."""

    expr: object
    vtype: ValueType | None
    signature: tuple


def _quantize(v: float, tol: float):
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    if tol <= 0.0:
        return v
    return round(v / tol)


def _sig_key(sig, tol):
    parts = []
    for o in sig:
        if o is ERROR:
            parts.append("E")
        elif isinstance(o, tuple):
            parts.append((_quantize(o[0], tol), _quantize(o[1], tol)))
        else:
            parts.append(_quantize(o, tol))
    return tuple(parts)


def signatures_match(a, b, tol):
    """Componentwise match within absolute tolerance, error marks aligned.
    Differing shapes never match."""
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if (x is ERROR) != (y is ERROR):
            return False
        if x is ERROR:
            continue
        if isinstance(x, tuple) != isinstance(y, tuple):
            return False
        if isinstance(x, tuple):
            if abs(x[0] - y[0]) > tol or abs(x[1] - y[1]) > tol:
                return False
        elif abs(x - y) > tol:
            return False
    return True


def _apply_outcomes(fn, child_outcomes):
    """Apply an operator's evaluator per example; errors propagate as marks."""
    out = []
    for args in zip(*child_outcomes):
        if any(a is ERROR for a in args):
            out.append(ERROR)
            continue
        try:
            out.append(fn(args))
        except (EvalError, ZeroDivisionError, OverflowError, ValueError):
            out.append(ERROR)
    return tuple(out)


@dataclass
class _Entry:
    expr: object
    height: int
    vtype: ValueType | None  # None in shape-only modes
    shape: str
    signature: tuple


def _matches_target(target, entry, dims_on):
    if target is None:
        return True
    if target == "scalar":
        return entry.shape == "scalar"
    if dims_on:
        return entry.vtype == target
    return entry.shape == shape_of(target)


def enum_features(cfg: EnumConfig, env: TypeEnv, target, examples):
    """Enumerate expressions up to cfg.max_depth whose type matches `target`
    (a concrete ValueType, the string "scalar" for any scalar, or None for
    everything), evaluated over `examples`.

    Returns an ordered list of Candidate. In signature-pruning modes only
    the first expression per distinct (type, signature) is retained; an
    erroring candidate is kept only when no retained twin has the same
    aligned error marks and values.
    """
    if cfg.sig_on and not examples:
        raise ValueError("signature pruning requires a nonempty example set")

    entries: list[_Entry] = []
    seen: dict = {}

    def admit(entry):
        if not cfg.sig_on:
            entries.append(entry)
            return
        typekey = entry.vtype if cfg.dims_on else entry.shape
        key = (typekey, _sig_key(entry.signature, cfg.tolerance))
        if key not in seen:
            seen[key] = entry
            entries.append(entry)

    for name, vt in env.inputs.items():
        sig = tuple(w.bindings[name] for w in examples)
        admit(_Entry(InputVar(name, vt), 1, vt if cfg.dims_on else None,
                     shape_of(vt), sig))
    for value, dim in env.constants:
        vt = ScalarType(dim)
        sig = tuple(float(value) for _ in examples)
        admit(_Entry(Const(float(value), vt), 1, vt if cfg.dims_on else None,
                     "scalar", sig))

    for height in range(2, cfg.max_depth + 1):
        prior = list(entries)
        for sig_op in env.ops:
            if sig_op.arity == 1:
                for a in prior:
                    if a.height != height - 1:
                        continue
                    new = _typed_apply(sig_op, (a,), cfg)
                    if new is not None:
                        admit(_Entry(new[0]((a.expr,)), height, new[1], new[2],
                                     _apply_outcomes(sig_op.fn, (a.signature,))))
            else:
                for a in prior:
                    for b in prior:
                        if max(a.height, b.height) != height - 1:
                            continue
                        new = _typed_apply(sig_op, (a, b), cfg)
                        if new is not None:
                            admit(_Entry(
                                new[0]((a.expr, b.expr)), height, new[1], new[2],
                                _apply_outcomes(sig_op.fn,
                                                (a.signature, b.signature))))

    return [Candidate(e.expr, e.vtype, e.signature)
            for e in entries if _matches_target(target, e, cfg.dims_on)]


def _typed_apply(sig_op, operands, cfg):
    """Type an operator application under the configured pruning mode.
    Returns (builder, vtype, shape) or None when rejected."""
    from .dsl import BinaryOp, UnaryOp

    if cfg.dims_on:
        types = tuple(o.vtype for o in operands)
        out = sig_op.apply(types)
        if out is None:
            return None
        vtype, shape = out, shape_of(out)
    else:
        shapes = tuple(o.shape for o in operands)
        shape = sig_op.apply_shapes(shapes)
        if shape is None:
            return None
        vtype = None
    if sig_op.arity == 1:
        return (lambda args: UnaryOp(sig_op.name, args[0])), vtype, shape
    return (lambda args: BinaryOp(sig_op.name, args[0], args[1])), vtype, shape


def enum_count_report(configs, env: TypeEnv, examples):
    """Scalar-feature counts per pruning configuration, as
    (mode, depth, count) rows in the given configuration order."""
    rows = []
    for cfg in configs:
        count = len(enum_features(cfg, env, "scalar", examples))
        rows.append((cfg.mode, cfg.max_depth, count))
    return rows
