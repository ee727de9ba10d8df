"""Exception hierarchy and the UNSAT outcome shared across the package."""


class PolicyError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PolicyError):
    """Syntax error in policy text, with source position and expected tokens."""

    def __init__(self, message, line, col, expected=()):
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        super().__init__(f"{line}:{col}: {message}")


class UnknownAction(PolicyError):
    """An action name that is not declared in the active domain."""


class UnknownInput(PolicyError):
    """An input variable name that is not in the domain's input schema."""


class UnknownOperator(PolicyError):
    """A domain enables an operator with no registered signature."""


class TypeCheckError(PolicyError):
    """Base class for dimensional type errors. `path` locates the offending
    subterm as a tuple of child indices from the checked root."""

    def __init__(self, message, path=()):
        self.path = tuple(path)
        super().__init__(message)


class IncommensurableOperands(TypeCheckError):
    """Add/subtract/compare applied to quantities of different dimensions."""


class OperatorDomainError(TypeCheckError):
    """Operand shape or dimension outside the operator's domain."""


class UnknownVariable(TypeCheckError):
    """Expression references an input missing from the type environment."""


class ComparisonDimensionMismatch(TypeCheckError):
    """Threshold dimension differs from the compared expression's dimension."""


class EvalError(PolicyError):
    """Base class for runtime evaluation faults."""


class DivisionByZero(EvalError):
    """Scalar or vector division by an exactly-zero denominator."""


class SchemaError(PolicyError):
    """A domain or demonstration file violates its schema. `where` names the
    offending field path or line number."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(message if where is None else f"{where}: {message}")


class DimensionMismatch(SchemaError):
    """A demonstration binding's shape disagrees with the input schema."""


class CapacityExceeded(PolicyError):
    """The solver's candidate product exceeds its configured bound."""


class EmptyCandidates(PolicyError):
    """An expression hole has no dimension-compatible candidate."""


class Unsat:
    """No completion of the current structure is consistent with the examples.

    A defined outcome, not an error: falsy, optionally carrying a diagnostic.
    Check results with `isinstance(r, Unsat)` (or truthiness).
    """

    __slots__ = ("detail",)

    def __init__(self, detail=None):
        self.detail = detail

    def __bool__(self):
        return False

    def __repr__(self):
        return "UNSAT" if self.detail is None else f"UNSAT({self.detail})"


UNSAT = Unsat()
