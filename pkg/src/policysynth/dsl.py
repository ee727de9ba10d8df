"""AST, concrete-syntax parser, and pretty-printer for action selection
policies, predicates, expressions, and the three hole kinds.

Concrete syntax (one policy per file)::

    if (a_s==Kick || (dist(p_r, p_b) < 150 && norm(v_r - v_b) < 100)): Kick
    elif (norm(v_b) > 100): Inter
    else: Goto

Comparisons are strict `<`/`>` only. Vectors are planar literals `<x, y>`.
Holes are written `?name:[l,t,m]` for parameters and expressions (the
dimension annotation is mandatory in source; `V[l,t,m]` marks a vector-typed
expression hole) and `?pred` for predicate holes. Scalar constants may carry
a dimension annotation (`0.5:[1,-1,0]`) and default to dimensionless.

All AST values are immutable after construction and safe to share across
concurrent tasks; the parser is reentrant with no global state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .dimensions import (
    DIMENSIONLESS,
    Dimension,
    ScalarType,
    TypeEnv,
    ValueType,
    VectorType,
    check_expr,
)
from .errors import ParseError, TypeCheckError, UnknownAction, UnknownInput

__all__ = [
    "Expr", "InputVar", "Const", "UnaryOp", "BinaryOp", "HoleExpr",
    "Threshold", "Param", "HoleParam",
    "Pred", "TrueP", "FalseP", "ActionEq", "Lt", "Gt", "And", "Or", "HolePred",
    "Branch", "Policy",
    "parse_policy", "parse_pred", "print_policy", "print_pred", "print_expr",
    "collect_holes", "collect_pred_holes",
]


# --- AST ---------------------------------------------------------------

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class InputVar(Expr):
    name: str
    vtype: ValueType


@dataclass(frozen=True)
class Const(Expr):
    value: object  # float, or (float, float) for vectors
    vtype: ValueType


@dataclass(frozen=True)
class UnaryOp(Expr):
    op: str
    arg: Expr


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class HoleExpr(Expr):
    """Blank expression. vtype None means "any scalar", used by generated
    predicate skeletons; source-level holes always carry a type."""

    id: str
    vtype: ValueType | None


class Threshold:
    __slots__ = ()


@dataclass(frozen=True)
class Param(Threshold):
    """A concrete threshold. The name is bookkeeping for repair reports and
    does not participate in structural equality (printed text has no names)."""

    value: float
    dim: Dimension | None = None
    name: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class HoleParam(Threshold):
    """Blank parameter. dim None means "follows the compared expression",
    used by generated skeletons before expression holes are filled."""

    name: str
    dim: Dimension | None = None


class Pred:
    __slots__ = ()


@dataclass(frozen=True)
class TrueP(Pred):
    pass


@dataclass(frozen=True)
class FalseP(Pred):
    pass


@dataclass(frozen=True)
class ActionEq(Pred):
    left: str
    right: str


@dataclass(frozen=True)
class Lt(Pred):
    expr: Expr
    threshold: Threshold


@dataclass(frozen=True)
class Gt(Pred):
    expr: Expr
    threshold: Threshold


@dataclass(frozen=True)
class And(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Or(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class HolePred(Pred):
    id: str


@dataclass(frozen=True)
class Branch:
    guard: Pred
    result: str


@dataclass(frozen=True)
class Policy:
    branches: tuple[Branch, ...]
    fallback: str


# --- Lexer -------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
      (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<punct>==|&&|\|\||[()\[\]<>,:?+\-*/])
    | (?P<ws>\s+)
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num" | "ident" | "punct" | "eof"
    value: object
    line: int
    col: int


def _lex(text):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "num":
            tokens.append(_Tok("num", float(raw), line, col))
        elif kind == "ident":
            tokens.append(_Tok("ident", raw, line, col))
        elif kind == "punct":
            tokens.append(_Tok("punct", raw, line, col))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            col = len(raw) - raw.rindex("\n")
        else:
            col += len(raw)
        pos = m.end()
    tokens.append(_Tok("eof", None, line, col))
    return tokens


# --- Parser ------------------------------------------------------------

class _Parser:
    """Recursive descent over a token buffer, with save/restore backtracking
    to disambiguate `(pred)` from a parenthesized comparison expression."""

    def __init__(self, text, env: TypeEnv):
        self.toks = _lex(text)
        self.i = 0
        self.env = env
        self.expr_hole_ids = set()
        self.pred_holes = 0
        self.params = 0

    # Token plumbing

    def peek(self, ahead=0):
        j = min(self.i + ahead, len(self.toks) - 1)
        return self.toks[j]

    def next(self):
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at_punct(self, p, ahead=0):
        tok = self.peek(ahead)
        return tok.kind == "punct" and tok.value == p

    def expect_punct(self, p):
        tok = self.next()
        if tok.kind != "punct" or tok.value != p:
            raise ParseError(f"expected {p!r}, found {self._show(tok)}",
                             tok.line, tok.col, expected=(p,))
        return tok

    def expect_ident(self, what="identifier"):
        tok = self.next()
        if tok.kind != "ident":
            raise ParseError(f"expected {what}, found {self._show(tok)}",
                             tok.line, tok.col, expected=(what,))
        return tok

    def expect_keyword(self, kw):
        tok = self.next()
        if tok.kind != "ident" or tok.value != kw:
            raise ParseError(f"expected {kw!r}, found {self._show(tok)}",
                             tok.line, tok.col, expected=(kw,))
        return tok

    @staticmethod
    def _show(tok):
        return "end of input" if tok.kind == "eof" else repr(tok.value)

    # Grammar

    def policy(self):
        self.expect_keyword("if")
        branches = [self.branch()]
        while self.peek().kind == "ident" and self.peek().value == "elif":
            self.next()
            branches.append(self.branch())
        self.expect_keyword("else")
        self.expect_punct(":")
        fallback = self.action_name()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected trailing {self._show(tok)}",
                             tok.line, tok.col)
        return Policy(tuple(branches), fallback)

    def branch(self):
        self.expect_punct("(")
        guard = self.pred()
        self.expect_punct(")")
        self.expect_punct(":")
        return Branch(guard, self.action_name())

    def action_name(self):
        tok = self.expect_ident("action name")
        if tok.value not in self.env.actions:
            raise UnknownAction(
                f"{tok.line}:{tok.col}: unknown action {tok.value!r}")
        return tok.value

    def pred(self):
        left = self.and_pred()
        while self.at_punct("||"):
            self.next()
            left = Or(left, self.and_pred())
        return left

    def and_pred(self):
        left = self.pred_atom()
        while self.at_punct("&&"):
            self.next()
            left = And(left, self.pred_atom())
        return left

    def pred_atom(self):
        tok = self.peek()
        if tok.kind == "ident" and tok.value == "true":
            self.next()
            return TrueP()
        if tok.kind == "ident" and tok.value == "false":
            self.next()
            return FalseP()
        if self.at_punct("?") and self.peek(1).kind == "ident" \
                and self.peek(1).value == "pred" and not self.at_punct(":", 2):
            self.next()
            self.next()
            self.pred_holes += 1
            return HolePred(f"b{self.pred_holes}")
        if self.at_punct("("):
            saved = self.i
            try:
                self.next()
                inner = self.pred()
                self.expect_punct(")")
                return inner
            except ParseError:
                self.i = saved
        if tok.kind == "ident" and self.peek(1).kind == "punct" \
                and self.peek(1).value == "==":
            left = self.action_operand()
            self.expect_punct("==")
            right = self.action_operand()
            return ActionEq(left, right)
        return self.comparison()

    def action_operand(self):
        tok = self.expect_ident("action name")
        if tok.value != "a_s" and tok.value not in self.env.actions:
            raise UnknownAction(
                f"{tok.line}:{tok.col}: unknown action {tok.value!r}")
        return tok.value

    def comparison(self):
        e = self.expr()
        tok = self.next()
        if tok.kind != "punct" or tok.value not in ("<", ">"):
            raise ParseError(f"expected '<' or '>', found {self._show(tok)}",
                             tok.line, tok.col, expected=("<", ">"))
        thr = self.threshold(e)
        return Lt(e, thr) if tok.value == "<" else Gt(e, thr)

    def threshold(self, compared_expr):
        if self.at_punct("?"):
            self.next()
            name = self.expect_ident("parameter hole name").value
            self.expect_punct(":")
            vt = self.type_annotation()
            if isinstance(vt, VectorType):
                tok = self.peek()
                raise ParseError("a threshold hole must be scalar",
                                 tok.line, tok.col)
            return HoleParam(name, vt.dim)
        value = self.signed_number("threshold value")
        dim = None
        if self.at_punct(":") and self.at_punct("[", 1):
            self.next()
            dim = self.dims()
        if dim is None:
            dim = self._infer_dim(compared_expr)
        self.params += 1
        return Param(value, dim, name=f"k{self.params}")

    def _infer_dim(self, e):
        try:
            t = check_expr(e, self.env)
        except TypeCheckError:
            return DIMENSIONLESS
        return t.dim if isinstance(t, ScalarType) else DIMENSIONLESS

    def expr(self):
        left = self.mul_expr()
        while self.at_punct("+") or self.at_punct("-"):
            op = self.next().value
            left = BinaryOp(op, left, self.mul_expr())
        return left

    def mul_expr(self):
        left = self.primary()
        while self.at_punct("*") or self.at_punct("/"):
            op = self.next().value
            left = BinaryOp(op, left, self.primary())
        return left

    def primary(self):
        tok = self.peek()
        if tok.kind == "num" or (self.at_punct("-") and self.peek(1).kind == "num"):
            value = self.signed_number("number")
            dim = DIMENSIONLESS
            if self.at_punct(":") and self.at_punct("[", 1):
                self.next()
                dim = self.dims()
            return Const(value, ScalarType(dim))
        if self.at_punct("<"):
            return self.vector_literal()
        if self.at_punct("?"):
            return self.expr_hole()
        if self.at_punct("("):
            self.next()
            e = self.expr()
            self.expect_punct(")")
            return e
        if tok.kind == "ident":
            self.next()
            if self.at_punct("("):
                return self.op_call(tok)
            return self.input_var(tok)
        raise ParseError(f"expected an expression, found {self._show(tok)}",
                         tok.line, tok.col,
                         expected=("number", "identifier", "(", "<", "?"))

    def signed_number(self, what):
        neg = False
        if self.at_punct("-"):
            self.next()
            neg = True
        tok = self.next()
        if tok.kind != "num":
            raise ParseError(f"expected {what}, found {self._show(tok)}",
                             tok.line, tok.col, expected=("number",))
        return -tok.value if neg else tok.value

    def vector_literal(self):
        self.expect_punct("<")
        x = self.signed_number("vector component")
        self.expect_punct(",")
        y = self.signed_number("vector component")
        self.expect_punct(">")
        dim = DIMENSIONLESS
        if self.at_punct(":") and self.at_punct("[", 1):
            self.next()
            dim = self.dims()
        return Const((x, y), VectorType(dim))

    def expr_hole(self):
        start = self.peek()
        self.expect_punct("?")
        name = self.expect_ident("expression hole name").value
        self.expect_punct(":")
        vt = self.type_annotation()
        if name in self.expr_hole_ids:
            raise ParseError(f"duplicate expression hole ?{name}",
                             start.line, start.col)
        self.expr_hole_ids.add(name)
        return HoleExpr(name, vt)

    def type_annotation(self):
        """`[l,t,m]` for a scalar, `V[l,t,m]` for a vector."""
        if self.peek().kind == "ident" and self.peek().value == "V":
            self.next()
            return VectorType(self.dims())
        return ScalarType(self.dims())

    def dims(self):
        self.expect_punct("[")
        exps = [self.signed_int()]
        for _ in range(2):
            self.expect_punct(",")
            exps.append(self.signed_int())
        self.expect_punct("]")
        return Dimension(*exps)

    def signed_int(self):
        v = self.signed_number("integer exponent")
        if v != int(v):
            tok = self.peek()
            raise ParseError("dimension exponents must be integers",
                             tok.line, tok.col)
        return int(v)

    def op_call(self, name_tok):
        name = name_tok.value
        self.expect_punct("(")
        args = [self.expr()]
        while self.at_punct(","):
            self.next()
            args.append(self.expr())
        self.expect_punct(")")
        sig = self.env.op(name, len(args))
        if sig is None:
            raise ParseError(
                f"unknown operator {name}/{len(args)}",
                name_tok.line, name_tok.col)
        if len(args) == 1:
            return UnaryOp(name, args[0])
        return BinaryOp(name, args[0], args[1])

    def input_var(self, tok):
        name = tok.value
        if name == "a_s":
            raise ParseError("a_s names the current action, not a value",
                             tok.line, tok.col)
        vt = self.env.inputs.get(name)
        if vt is None:
            raise UnknownInput(
                f"{tok.line}:{tok.col}: unknown input {name!r}")
        return InputVar(name, vt)


def _as_env(domain) -> TypeEnv:
    return domain.type_env() if hasattr(domain, "type_env") else domain


def parse_policy(text: str, domain) -> Policy:
    """Parse policy text against a domain (or a prebuilt TypeEnv).

    Holes are preserved; input variables are resolved to their declared
    types; bare thresholds take the dimension of the compared expression.
    Raises ParseError, UnknownAction, or UnknownInput.
    """
    return _Parser(text, _as_env(domain)).policy()


def parse_pred(text: str, domain) -> Pred:
    """Parse a single predicate (used by tests and the repl-style demos)."""
    p = _Parser(text, _as_env(domain))
    out = p.pred()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing {_Parser._show(tok)}",
                         tok.line, tok.col)
    return out


# --- Printer -----------------------------------------------------------

def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt_dims(dim: Dimension) -> str:
    return f"[{dim.length},{dim.time},{dim.mass}]"


def print_expr(e: Expr) -> str:
    return _print_expr(e, 0)


def _print_expr(e, prec):
    if isinstance(e, InputVar):
        return e.name
    if isinstance(e, Const):
        if isinstance(e.vtype, VectorType):
            body = f"<{_fmt_num(e.value[0])}, {_fmt_num(e.value[1])}>"
        else:
            body = _fmt_num(e.value)
        if e.vtype.dim != DIMENSIONLESS:
            body += ":" + _fmt_dims(e.vtype.dim)
        return body
    if isinstance(e, HoleExpr):
        if e.vtype is None:
            return f"?{e.id}"
        mark = "V" if isinstance(e.vtype, VectorType) else ""
        return f"?{e.id}:{mark}{_fmt_dims(e.vtype.dim)}"
    if isinstance(e, UnaryOp):
        return f"{e.op}({_print_expr(e.arg, 0)})"
    if isinstance(e, BinaryOp):
        if e.op in ("+", "-"):
            level = 1
        elif e.op in ("*", "/"):
            level = 2
        else:
            left = _print_expr(e.left, 0)
            right = _print_expr(e.right, 0)
            return f"{e.op}({left}, {right})"
        text = (f"{_print_expr(e.left, level)} {e.op} "
                f"{_print_expr(e.right, level + 1)}")
        return f"({text})" if level < prec else text
    raise TypeError(f"not an expression: {e!r}")


def _print_threshold(t: Threshold) -> str:
    if isinstance(t, Param):
        return _fmt_num(t.value)
    if t.dim is None:
        return f"?{t.name}"
    return f"?{t.name}:{_fmt_dims(t.dim)}"


def print_pred(b: Pred) -> str:
    return _print_pred(b, 0)


def _print_pred(b, prec):
    if isinstance(b, TrueP):
        return "true"
    if isinstance(b, FalseP):
        return "false"
    if isinstance(b, HolePred):
        return "?pred"
    if isinstance(b, ActionEq):
        return f"{b.left}=={b.right}"
    if isinstance(b, Lt):
        return f"{_print_expr(b.expr, 0)} < {_print_threshold(b.threshold)}"
    if isinstance(b, Gt):
        return f"{_print_expr(b.expr, 0)} > {_print_threshold(b.threshold)}"
    if isinstance(b, (And, Or)):
        level = 2 if isinstance(b, And) else 1
        sep = " && " if isinstance(b, And) else " || "
        text = _print_pred(b.left, level) + sep + _print_pred(b.right, level + 1)
        return f"({text})" if level < prec else text
    raise TypeError(f"not a predicate: {b!r}")


def print_policy(p: Policy) -> str:
    """Deterministic canonical text; parse_policy(print_policy(p)) == p."""
    lines = []
    for i, branch in enumerate(p.branches):
        kw = "if" if i == 0 else "elif"
        lines.append(f"{kw} ({_print_pred(branch.guard, 0)}): {branch.result}")
    lines.append(f"else: {p.fallback}")
    return "\n".join(lines) + "\n"


# --- Hole collection ---------------------------------------------------

def _walk_holes(b, param_holes, expr_holes, pred_holes, seen_params):
    def walk_expr(e):
        if isinstance(e, HoleExpr):
            expr_holes.append(e)
        elif isinstance(e, UnaryOp):
            walk_expr(e.arg)
        elif isinstance(e, BinaryOp):
            walk_expr(e.left)
            walk_expr(e.right)

    if isinstance(b, (Lt, Gt)):
        walk_expr(b.expr)
        if isinstance(b.threshold, HoleParam) \
                and b.threshold.name not in seen_params:
            seen_params.add(b.threshold.name)
            param_holes.append(b.threshold)
    elif isinstance(b, (And, Or)):
        _walk_holes(b.left, param_holes, expr_holes, pred_holes, seen_params)
        _walk_holes(b.right, param_holes, expr_holes, pred_holes, seen_params)
    elif isinstance(b, HolePred):
        pred_holes.append(b)


def collect_pred_holes(b: Pred):
    """Holes of one predicate, in textual order, as
    (parameter holes, expression holes, predicate holes)."""
    param_holes, expr_holes, pred_holes = [], [], []
    _walk_holes(b, param_holes, expr_holes, pred_holes, set())
    return param_holes, expr_holes, pred_holes


def collect_holes(p: Policy):
    """Holes of `p` in first-textual-occurrence order, as three lists:
    (parameter holes, expression holes, predicate holes). Repeated uses of
    one parameter hole name denote a single shared parameter and are
    reported once."""
    param_holes, expr_holes, pred_holes = [], [], []
    seen_params = set()
    for branch in p.branches:
        _walk_holes(branch.guard, param_holes, expr_holes, pred_holes,
                    seen_params)
    return param_holes, expr_holes, pred_holes
