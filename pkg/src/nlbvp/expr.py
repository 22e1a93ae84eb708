"""A small arithmetic expression language for coefficient fields.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Evaluation is vectorised over numpy arrays and refuses to produce NaN or inf:
any domain violation raises :class:`EvaluationError`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExpressionSyntaxError",
    "EvaluationError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Expression",
    "FUNCTIONS",
    "parse_expression",
    "to_source",
    "evaluate",
    "free_variables",
    "differentiate",
    "is_globally_lipschitz",
]

DEFAULT_VARIABLES = frozenset({"x", "y", "s"})


class ExpressionSyntaxError(ValueError):
    def __init__(self, message: str, position: int, source: str = ""):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.source = source


class EvaluationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expression"


Expression = Union[Num, Var, Neg, BinOp, Call]


def _checked(name, fn, ok):
    def apply(a):
        if not np.all(ok(a)):
            raise EvaluationError(f"{name} evaluated outside its domain")
        return fn(a)

    return apply


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "abs": np.abs,
    "sqrt": _checked("sqrt", np.sqrt, lambda a: a >= 0),
    "log": _checked("log", np.log, lambda a: a > 0),
}
CONSTANTS = {"pi": np.pi}

# ---------------------------------------------------------------- tokenizer

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(source: str):
    pos = 0
    tokens = []
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, variables):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0
        self.variables = variables

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, pos=None):
        raise ExpressionSyntaxError(message, self.tok[2] if pos is None else pos, self.source)

    def take(self, value=None):
        kind, text, pos = self.tok
        if value is not None and text != value:
            self.error(f"expected {value!r}" + (f", got {text!r}" if text else ", got end of input"))
        self.i += 1
        return kind, text, pos

    def parse(self):
        if self.tok[0] == "end":
            self.error("empty expression")
        node = self.expr()
        if self.tok[0] != "end":
            self.error(f"unexpected {self.tok[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.tok
        if kind == "num":
            self.take()
            return Num(float(text))
        if kind == "name":
            self.take()
            if self.tok[1] == "(":
                if text not in FUNCTIONS:
                    self.error(f"unknown function {text!r}", pos)
                self.take("(")
                arg = self.expr()
                if self.tok[1] == ",":
                    self.error(f"{text}() takes exactly one argument")
                self.take(")")
                return Call(text, arg)
            if text in FUNCTIONS:
                self.error(f"function {text!r} needs an argument", pos)
            if text in CONSTANTS:
                return Num(float(CONSTANTS[text]))
            if self.variables is not None and text not in self.variables:
                self.error(f"unknown identifier {text!r}", pos)
            return Var(text)
        if kind == "op" and text == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {text!r}")


def parse_expression(source: str, variables=DEFAULT_VARIABLES) -> Expression:
    """Parse ``source`` into an AST.

    ``variables`` restricts the admissible identifiers; pass ``None`` to accept any.
    Raises :class:`ExpressionSyntaxError` carrying a 0-based ``position``.
    """
    if not isinstance(source, str):
        raise TypeError(f"expression source must be str, got {type(source).__name__}")
    return _Parser(source, None if variables is None else frozenset(variables)).parse()


# ---------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(e: Expression) -> str:
    """Render an AST to text that parses back to the same tree."""
    return _show(e, 0)


def _show(e, ctx):
    if isinstance(e, Num):
        text = repr(float(e.value))
        if e.value < 0 or text in ("inf", "nan"):
            text = f"({text})"
        return text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({_show(e.arg, 0)})"
    if isinstance(e, Neg):
        text = "-" + _show(e.operand, 3)
        return f"({text})" if ctx > 3 else text
    p = _PREC[e.op]
    if e.op == "^":
        # base binds tighter than '^', exponent parses as unary
        text = f"{_show(e.left, 5)}^{_show(e.right, 3)}"
    else:
        # left-assoc: right operand needs strictly higher precedence
        text = f"{_show(e.left, p)} {e.op} {_show(e.right, p + 1)}"
    return f"({text})" if p < ctx else text


# ---------------------------------------------------------------- evaluation


def evaluate(e: Expression, env: dict):
    """Evaluate with variables bound in ``env`` (scalars or broadcastable arrays)."""
    with np.errstate(all="ignore"):
        out = _eval(e, env)
    return out


def _finite(value, what):
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"{what} produced a non-finite value")
    return value


def _eval(e, env):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvaluationError(f"variable {e.name!r} is unbound") from None
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, Call):
        return _finite(FUNCTIONS[e.func](np.asarray(_eval(e.arg, env), dtype=float)), e.func)
    a = np.asarray(_eval(e.left, env), dtype=float)
    b = np.asarray(_eval(e.right, env), dtype=float)
    if e.op == "+":
        return _finite(a + b, "addition")
    if e.op == "-":
        return _finite(a - b, "subtraction")
    if e.op == "*":
        return _finite(a * b, "multiplication")
    if e.op == "/":
        if np.any(b == 0):
            raise EvaluationError("division by zero")
        return _finite(a / b, "division")
    if np.any((a < 0) & (b != np.round(b))):
        raise EvaluationError("negative base raised to a non-integer power")
    if np.any((a == 0) & (b < 0)):
        raise EvaluationError("zero raised to a negative power")
    return _finite(np.power(a, b), "power")


# ---------------------------------------------------------------- analysis


def free_variables(e: Expression) -> frozenset:
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, (Neg,)):
        return free_variables(e.operand)
    if isinstance(e, Call):
        return free_variables(e.arg)
    return free_variables(e.left) | free_variables(e.right)


def _is_const(e):
    return not free_variables(e)


def _simplify_add(a, b):
    if a == Num(0.0):
        return b
    if b == Num(0.0):
        return a
    return BinOp("+", a, b)


def _simplify_mul(a, b):
    if a == Num(0.0) or b == Num(0.0):
        return Num(0.0)
    if a == Num(1.0):
        return b
    if b == Num(1.0):
        return a
    return BinOp("*", a, b)


_DERIV = {
    "sin": lambda u: Call("cos", u),
    "cos": lambda u: Neg(Call("sin", u)),
    "exp": lambda u: Call("exp", u),
    "sinh": lambda u: Call("cosh", u),
    "cosh": lambda u: Call("sinh", u),
    "tanh": lambda u: BinOp("-", Num(1.0), BinOp("^", Call("tanh", u), Num(2.0))),
    "sqrt": lambda u: BinOp("/", Num(0.5), Call("sqrt", u)),
    "log": lambda u: BinOp("/", Num(1.0), u),
    "abs": lambda u: BinOp("/", u, Call("abs", u)),
}


def differentiate(e: Expression, var: str) -> Expression:
    """Symbolic partial derivative (no simplification beyond 0/1 folding)."""
    if isinstance(e, Num):
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0 if e.name == var else 0.0)
    if var not in free_variables(e):
        return Num(0.0)
    if isinstance(e, Neg):
        return Neg(differentiate(e.operand, var))
    if isinstance(e, Call):
        return _simplify_mul(_DERIV[e.func](e.arg), differentiate(e.arg, var))
    a, b = e.left, e.right
    da, db = differentiate(a, var), differentiate(b, var)
    if e.op == "+":
        return _simplify_add(da, db)
    if e.op == "-":
        return BinOp("-", da, db) if db != Num(0.0) else da
    if e.op == "*":
        return _simplify_add(_simplify_mul(da, b), _simplify_mul(a, db))
    if e.op == "/":
        num = BinOp("-", _simplify_mul(da, b), _simplify_mul(a, db))
        return BinOp("/", num, BinOp("^", b, Num(2.0)))
    # power
    if var not in free_variables(b):
        # d(a^c) = c a^(c-1) a'
        lowered = BinOp("^", a, BinOp("-", b, Num(1.0)))
        return _simplify_mul(_simplify_mul(b, lowered), da)
    # general case a^b = exp(b log a)
    return _simplify_mul(e, differentiate(BinOp("*", b, Call("log", a)), var))


_LIPSCHITZ_FUNCS = {"sin", "cos", "tanh", "abs"}


def is_globally_lipschitz(e: Expression) -> bool:
    """Conservative structural test: affine combinations of globally Lipschitz pieces."""
    if _is_const(e) or isinstance(e, Var):
        return True
    if isinstance(e, Neg):
        return is_globally_lipschitz(e.operand)
    if isinstance(e, Call):
        return e.func in _LIPSCHITZ_FUNCS and is_globally_lipschitz(e.arg)
    if e.op in "+-":
        return is_globally_lipschitz(e.left) and is_globally_lipschitz(e.right)
    if e.op == "*":
        if _is_const(e.left):
            return is_globally_lipschitz(e.right)
        if _is_const(e.right):
            return is_globally_lipschitz(e.left)
        return False
    if e.op == "/":
        return _is_const(e.right) and is_globally_lipschitz(e.left)
    # '^' with a variable base is affine only for exponent 1
    return _is_const(e.right) and _eval(e.right, {}) == 1.0 and is_globally_lipschitz(e.left)
