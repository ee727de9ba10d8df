"""Loading, validating, and saving domain definitions, demonstration sets,
and policy files.

Formats: a domain is one JSON object; demonstrations are JSON Lines (one
record per line, UTF-8, LF); policies and sketches are DSL text exactly as
produced by print_policy. Validation is exhaustive -- anything that loads
passes the schema and type checks, and there are no partial loads.
Dimensions serialize as 3-integer arrays [l,t,m]. All loaders are
reentrant and all loaded artifacts immutable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .dimensions import (
    Dimension,
    ScalarType,
    TypeEnv,
    ValueType,
    VectorType,
    registered_operator,
)
from .dsl import Policy, parse_policy, print_policy
from .errors import DimensionMismatch, SchemaError, UnknownOperator
from .interp import WorldState
from .synth import Demonstration

__all__ = [
    "InputSpec",
    "DomainDef",
    "load_domain",
    "load_demos",
    "save_demos",
    "load_policy",
    "save_policy",
]


@dataclass(frozen=True)
class InputSpec:
    name: str
    kind: str  # "scalar" | "vector"
    dim: Dimension

    @property
    def vtype(self) -> ValueType:
        return ScalarType(self.dim) if self.kind == "scalar" \
            else VectorType(self.dim)


@dataclass(frozen=True)
class DomainDef:
    """Actions, default action, typed input schema, enabled operator set,
    and the optional constant pool for enumeration."""

    name: str
    actions: tuple[str, ...]
    default_action: str
    inputs: tuple[InputSpec, ...]
    operators: tuple[str, ...]
    constants: tuple = ()  # (value, Dimension) pairs

    def type_env(self) -> TypeEnv:
        ops = tuple(registered_operator(name) for name in self.operators)
        return TypeEnv(inputs={s.name: s.vtype for s in self.inputs},
                       ops=ops,
                       actions=frozenset(self.actions),
                       constants=self.constants)


def _require(obj, key, where):
    if key not in obj:
        raise SchemaError(f"missing field {key!r}", where)
    return obj[key]


def _string(v, where):
    if not isinstance(v, str) or not v:
        raise SchemaError("expected a nonempty string", where)
    return v


def _dimension(v, where):
    if not (isinstance(v, list) and len(v) == 3
            and all(isinstance(x, int) for x in v)):
        raise SchemaError("expected a dimension as 3 integers [l,t,m]", where)
    return Dimension(*v)


def load_domain(path) -> DomainDef:
    """Load and validate a domain definition file."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as ex:
            raise SchemaError(f"not valid JSON: {ex}", str(path)) from None
    if not isinstance(raw, dict):
        raise SchemaError("domain file must hold one JSON object", str(path))

    name = _string(_require(raw, "name", "name"), "name")
    actions_raw = _require(raw, "actions", "actions")
    if not isinstance(actions_raw, list) or not actions_raw:
        raise SchemaError("expected a nonempty list", "actions")
    actions = tuple(_string(a, f"actions[{i}]")
                    for i, a in enumerate(actions_raw))
    if len(set(actions)) != len(actions):
        raise SchemaError("duplicate action names", "actions")
    if "a_s" in actions:
        raise SchemaError("a_s is reserved for the current action", "actions")

    default = _string(_require(raw, "default_action", "default_action"),
                      "default_action")
    if default not in actions:
        raise SchemaError(f"default action {default!r} not in actions",
                          "default_action")

    inputs_raw = _require(raw, "inputs", "inputs")
    if not isinstance(inputs_raw, list):
        raise SchemaError("expected a list", "inputs")
    inputs = []
    seen = set()
    for i, spec in enumerate(inputs_raw):
        where = f"inputs[{i}]"
        if not isinstance(spec, dict):
            raise SchemaError("expected an object", where)
        iname = _string(_require(spec, "name", f"{where}.name"),
                        f"{where}.name")
        if iname == "a_s":
            raise SchemaError("a_s is reserved for the current action",
                              f"{where}.name")
        if iname in seen:
            raise SchemaError(f"duplicate input {iname!r}", f"{where}.name")
        seen.add(iname)
        kind = _string(_require(spec, "kind", f"{where}.kind"),
                       f"{where}.kind")
        if kind not in ("scalar", "vector"):
            raise SchemaError("kind must be 'scalar' or 'vector'",
                              f"{where}.kind")
        dim = _dimension(_require(spec, "dimension", f"{where}.dimension"),
                         f"{where}.dimension")
        inputs.append(InputSpec(iname, kind, dim))

    ops_raw = raw.get("operators", ["abs", "sin", "cos", "norm",
                                    "+", "-", "*", "/", "dist"])
    if not isinstance(ops_raw, list):
        raise SchemaError("expected a list", "operators")
    operators = []
    for i, op in enumerate(ops_raw):
        opname = _string(op, f"operators[{i}]")
        if registered_operator(opname) is None:
            raise UnknownOperator(
                f"operators[{i}]: no registered operator {opname!r}")
        operators.append(opname)

    constants = []
    for i, c in enumerate(raw.get("constants", [])):
        where = f"constants[{i}]"
        if not isinstance(c, dict):
            raise SchemaError("expected an object", where)
        value = _require(c, "value", f"{where}.value")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaError("expected a number", f"{where}.value")
        dim = _dimension(_require(c, "dimension", f"{where}.dimension"),
                         f"{where}.dimension")
        constants.append((float(value), dim))

    return DomainDef(name, actions, default, tuple(inputs), tuple(operators),
                     tuple(constants))


def _binding(value, spec: InputSpec, where):
    if spec.kind == "scalar":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise DimensionMismatch(
                f"input {spec.name!r} expects a scalar", where)
        return float(value)
    if not (isinstance(value, list) and len(value) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                    for x in value)):
        raise DimensionMismatch(
            f"input {spec.name!r} expects a 2-vector [x, y]", where)
    return (float(value[0]), float(value[1]))


def load_demos(path, domain: DomainDef):
    """Load a JSONL demonstration file, validating every record against the
    domain schema. Record order is preserved (signatures depend on it)."""
    demos = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"line {lineno}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as ex:
                raise SchemaError(f"not valid JSON: {ex}", where) from None
            if not isinstance(raw, dict):
                raise SchemaError("expected an object", where)
            start = _string(_require(raw, "start", where), where)
            nxt = _string(_require(raw, "next", where), where)
            for action in (start, nxt):
                if action not in domain.actions:
                    raise SchemaError(f"unknown action {action!r}", where)
            world_raw = _require(raw, "world", where)
            if not isinstance(world_raw, dict):
                raise SchemaError("world must be an object", where)
            bindings = {}
            for spec in domain.inputs:
                if spec.name not in world_raw:
                    raise SchemaError(f"world missing input {spec.name!r}",
                                      where)
                bindings[spec.name] = _binding(world_raw[spec.name], spec,
                                               where)
            extra = set(world_raw) - {s.name for s in domain.inputs}
            if extra:
                raise SchemaError(f"world has unknown inputs {sorted(extra)}",
                                  where)
            world = WorldState(start, bindings)
            demos.append(Demonstration(start, world, nxt))
    return demos


def save_demos(demos, path) -> None:
    """Write demonstrations as JSON Lines, byte-deterministically."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in demos:
            world = {}
            for name, value in d.world.bindings.items():
                world[name] = list(value) if isinstance(value, tuple) else value
            fh.write(json.dumps({"start": d.start_action,
                                 "next": d.next_action,
                                 "world": world}, sort_keys=True) + "\n")


def load_policy(path, domain: DomainDef) -> Policy:
    with open(path, encoding="utf-8") as fh:
        return parse_policy(fh.read(), domain)


def save_policy(p: Policy, path) -> None:
    """Write the canonical text of `p`; load_policy inverts this exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(print_policy(p))
