"""Expression language for Lagrangians L(x, y, ca, cb).

``ca`` is the left-Caputo value of the unknown and ``cb`` the right-Caputo
value.  Grammar: identifiers ``[a-z]+``; decimal/scientific literals;
operators ``+ - * / ^`` with ``^`` right-associative and binding tighter than
unary minus; calls ``sin cos exp log sqrt abs`` and ``ml(alpha, arg)`` where
alpha must be a numeric literal.

Evaluation returns the value together with all four first partials, computed
in a single forward pass with a 4-component dual number.  Every component may
be a numpy array, so one pass evaluates an expression on a whole grid.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .mittag import DEFAULT_PARAMS, MLParams, ml_array, ml_deriv_array

VARIABLES = ("x", "y", "ca", "cb")
_UNARY_FUNCS = ("neg", "sin", "cos", "exp", "log", "sqrt", "abs")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = expected
        hint = f" (expected one of {', '.join(expected)})" if expected else ""
        super().__init__(f"syntax error at offset {offset}: {message}{hint}")


class UnknownIdentifierError(ValueError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class ExprDomainError(ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"domain error at offset {offset}: {message}")


@dataclass(frozen=True)
class Const:
    value: float
    offset: int = -1


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = -1


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"
    offset: int = -1


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    offset: int = -1


@dataclass(frozen=True)
class MLCall:
    alpha: float
    arg: "Node"
    offset: int = -1


@dataclass(frozen=True)
class Bound:
    """Precomputed values of an x-only subtree on a fixed grid (internal)."""

    values: object
    offset: int = -1


Node = Union[Const, Var, Unary, Binary, MLCall, Bound]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[a-z]+)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            if src[pos:].strip() == "":
                break
            bad = len(src) - len(src[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", bad)
        if m.lastgroup is None:
            break
        tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> tuple[str, str, int]:
        kind, val, off = self.peek()
        if val != text:
            raise ExprSyntaxError(f"got {val or 'end of input'!r}", off, (text,))
        return self.next()

    def parse(self) -> Node:
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"trailing input {val!r}", off, ("end of input",))
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op, off = self.next()
            rhs = self.term()
            node = Binary("add" if op == "+" else "sub", node, rhs, off)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, off = self.next()
            rhs = self.unary()
            node = Binary("mul" if op == "*" else "div", node, rhs, off)
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-":
            _, _, off = self.next()
            return Unary("neg", self.unary(), off)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            _, _, off = self.next()
            # right-associative; exponent may carry its own unary minus
            exponent = self.unary() if self.peek()[1] == "-" else self.power()
            return Binary("pow", base, exponent, off)
        return base

    def atom(self) -> Node:
        kind, val, off = self.peek()
        if val == "(":
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "num":
            self.next()
            return Const(float(val), off)
        if kind == "ident":
            self.next()
            if self.peek()[1] == "(":
                return self.call(val, off)
            if val not in VARIABLES:
                raise UnknownIdentifierError(val, off)
            return Var(val, off)
        raise ExprSyntaxError(
            f"got {val or 'end of input'!r}", off, ("number", "identifier", "(")
        )

    def call(self, name: str, off: int) -> Node:
        self.expect("(")
        if name == "ml":
            kind, val, aoff = self.peek()
            neg = False
            if val == "-":
                self.next()
                neg = True
                kind, val, aoff = self.peek()
            if kind != "num":
                raise ExprSyntaxError("ml order must be a numeric literal", aoff, ("number",))
            self.next()
            alpha = -float(val) if neg else float(val)
            if alpha <= 0:
                raise ExprSyntaxError("ml order must be positive", aoff)
            self.expect(",")
            arg = self.expr()
            self.expect(")")
            return MLCall(alpha, arg, off)
        if name in _UNARY_FUNCS and name != "neg":
            arg = self.expr()
            self.expect(")")
            return Unary(name, arg, off)
        raise UnknownIdentifierError(name, off)


def parse(src: str) -> Node:
    return _Parser(src).parse()


def used_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Bound):
        return {"x"}
    if isinstance(node, Unary):
        return used_variables(node.arg)
    if isinstance(node, Binary):
        return used_variables(node.left) | used_variables(node.right)
    if isinstance(node, MLCall):
        return used_variables(node.arg)
    return set()


def pretty(node: Node) -> str:
    """Fully parenthesized rendering; reparsing gives a structurally equal AST."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{pretty(node.arg)})"
        return f"{node.op}({pretty(node.arg)})"
    if isinstance(node, MLCall):
        return f"ml({node.alpha!r}, {pretty(node.arg)})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}[node.op]
    return f"({pretty(node.left)} {sym} {pretty(node.right)})"


def _strip_offsets(node: Node) -> Node:
    if isinstance(node, Const):
        return Const(node.value)
    if isinstance(node, Var):
        return Var(node.name)
    if isinstance(node, Unary):
        return Unary(node.op, _strip_offsets(node.arg))
    if isinstance(node, MLCall):
        return MLCall(node.alpha, _strip_offsets(node.arg))
    return Binary(node.op, _strip_offsets(node.left), _strip_offsets(node.right))


def same_structure(a: Node, b: Node) -> bool:
    return _strip_offsets(a) == _strip_offsets(b)


class Lagrangian:
    """Parsed integrand (x, y, ca, cb) -> value with exact first partials."""

    def __init__(self, ast: Node, source: str | None = None,
                 ml_params: MLParams = DEFAULT_PARAMS):
        self.ast = ast
        self.source = source if source is not None else pretty(ast)
        self.ml_params = ml_params
        self.variables = used_variables(ast)

    @classmethod
    def parse(cls, src: str, ml_params: MLParams = DEFAULT_PARAMS) -> "Lagrangian":
        return cls(parse(src), source=src, ml_params=ml_params)

    def __repr__(self) -> str:
        return f"Lagrangian({self.source!r})"

    def eval_with_partials(self, x, y, u, v):
        """(value, d/dx, d/dy, d/du, d/dv); scalars in, scalars out, arrays in,
        arrays out (one forward pass for a whole grid)."""
        scalar = np.isscalar(x) and np.isscalar(y) and np.isscalar(u) and np.isscalar(v)
        env = {
            "x": (np.asarray(x, dtype=float), 0),
            "y": (np.asarray(y, dtype=float), 1),
            "ca": (np.asarray(u, dtype=float), 2),
            "cb": (np.asarray(v, dtype=float), 3),
        }
        for name, (val, _) in env.items():
            if not np.isfinite(val).all():
                raise ValueError(f"non-finite input for {name}")
        val, grad = _eval(self.ast, env, self.ml_params)
        shape = np.broadcast_shapes(*(np.shape(v0) for v0, _ in env.values()))
        out_val = np.broadcast_to(np.asarray(val, dtype=float), shape)
        out_grad = [np.broadcast_to(np.asarray(g, dtype=float), shape) for g in grad]
        if scalar:
            return (float(out_val),) + tuple(float(g) for g in out_grad)
        return (out_val.copy(),) + tuple(g.copy() for g in out_grad)

    def eval_value(self, x, y, u, v):
        """Value only; cheaper inner loop for the solver."""
        env = {
            "x": np.asarray(x, dtype=float),
            "y": np.asarray(y, dtype=float),
            "ca": np.asarray(u, dtype=float),
            "cb": np.asarray(v, dtype=float),
        }
        return _eval_value(self.ast, env, self.ml_params)


_ZERO4 = (0.0, 0.0, 0.0, 0.0)


def _is_zero(g) -> bool:
    return isinstance(g, float) and g == 0.0


def _mulz(factor, g):
    # exact-zero tangents stay exactly zero, even against an inf/NaN factor
    if _is_zero(g) or _is_zero(factor):
        return 0.0
    with np.errstate(invalid="ignore"):
        return factor * g


def _addz(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return a + b


def _eval(node: Node, env, params: MLParams):
    """Forward pass returning (value, 4-tuple of partials)."""
    if isinstance(node, Const):
        return node.value, _ZERO4
    if isinstance(node, Bound):
        return node.values, _ZERO4
    if isinstance(node, Var):
        val, slot = env[node.name]
        grad = list(_ZERO4)
        grad[slot] = 1.0
        return val, tuple(grad)
    if isinstance(node, Unary):
        v, g = _eval(node.arg, env, params)
        if node.op == "neg":
            return -v, tuple(-gi for gi in g)
        if node.op == "sin":
            return np.sin(v), _scale(np.cos(v), g)
        if node.op == "cos":
            return np.cos(v), _scale(-np.sin(v), g)
        if node.op == "exp":
            ev = np.exp(v)
            return ev, _scale(ev, g)
        if node.op == "log":
            if np.any(np.asarray(v) <= 0):
                raise ExprDomainError("log of non-positive value", node.offset)
            return np.log(v), _scale(1.0 / v, g)
        if node.op == "sqrt":
            if np.any(np.asarray(v) < 0):
                raise ExprDomainError("sqrt of negative value", node.offset)
            sv = np.sqrt(v)
            if np.any(sv == 0) and any(np.any(gi != 0) for gi in g):
                raise ExprDomainError("sqrt derivative at zero", node.offset)
            return sv, _scale(0.5 / np.where(sv == 0, 1.0, sv), g)
        if node.op == "abs":
            return np.abs(v), _scale(np.sign(v), g)
        raise AssertionError(node.op)
    if isinstance(node, MLCall):
        v, g = _eval(node.arg, env, params)
        value, converged, _ = ml_array(node.alpha, np.asarray(v, dtype=float), params)
        if not converged:
            raise ExprDomainError("Mittag-Leffler series did not converge", node.offset)
        deriv = ml_deriv_array(node.alpha, np.asarray(v, dtype=float), params)
        return value, _scale(deriv, g)
    # Binary
    lv, lg = _eval(node.left, env, params)
    rv, rg = _eval(node.right, env, params)
    if node.op == "add":
        return lv + rv, tuple(_addz(a, b) for a, b in zip(lg, rg))
    if node.op == "sub":
        return lv - rv, tuple(_addz(a, _mulz(-1.0, b)) for a, b in zip(lg, rg))
    if node.op == "mul":
        return lv * rv, tuple(_addz(_mulz(rv, a), _mulz(lv, b)) for a, b in zip(lg, rg))
    if node.op == "div":
        if np.any(np.asarray(rv) == 0):
            raise ExprDomainError("division by zero", node.offset)
        return lv / rv, tuple(
            _addz(_mulz(1.0 / rv, a), _mulz(-lv / (rv * rv), b)) for a, b in zip(lg, rg)
        )
    if node.op == "pow":
        return _pow(node, lv, lg, rv, rg)
    raise AssertionError(node.op)


def _scale(factor, grad):
    return tuple(_mulz(factor, gi) for gi in grad)


def _pow(node: Binary, lv, lg, rv, rg):
    exp_constant = all(np.all(np.asarray(gi) == 0) for gi in rg)
    base = np.asarray(lv, dtype=float)
    expo = np.asarray(rv, dtype=float)
    if np.any((base == 0) & (expo < 0)):
        raise ExprDomainError("zero raised to a negative power", node.offset)
    if exp_constant:
        # allow negative bases when the exponent is an exact integer
        if np.any(base < 0) and not np.all(expo == np.round(expo)):
            raise ExprDomainError("negative base with non-integer exponent", node.offset)
        val = base**expo
        with np.errstate(divide="ignore", invalid="ignore"):
            dbase = np.where(expo == 0, 0.0, expo * base ** (expo - 1.0))
        # one-sided infinite slope (e.g. d/dx x^0.5 at 0) is carried as inf;
        # zero tangents short-circuit in _mulz, so other partials stay clean
        return val, _scale(dbase, lg)
    if np.any(base <= 0):
        raise ExprDomainError("variable exponent needs a positive base", node.offset)
    val = base**expo
    dbase = expo * base ** (expo - 1.0)
    dexp = val * np.log(base)
    return val, tuple(_addz(_mulz(dbase, a), _mulz(dexp, b)) for a, b in zip(lg, rg))


def _eval_value(node: Node, env, params: MLParams):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Bound):
        return node.values
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Unary):
        v = _eval_value(node.arg, env, params)
        if node.op == "neg":
            return -v
        if node.op == "log" and np.any(np.asarray(v) <= 0):
            raise ExprDomainError("log of non-positive value", node.offset)
        if node.op == "sqrt" and np.any(np.asarray(v) < 0):
            raise ExprDomainError("sqrt of negative value", node.offset)
        return getattr(np, node.op if node.op != "abs" else "abs")(v)
    if isinstance(node, MLCall):
        v = _eval_value(node.arg, env, params)
        value, converged, _ = ml_array(node.alpha, np.asarray(v, dtype=float), params)
        if not converged:
            raise ExprDomainError("Mittag-Leffler series did not converge", node.offset)
        return value
    lv = _eval_value(node.left, env, params)
    rv = _eval_value(node.right, env, params)
    if node.op == "add":
        return lv + rv
    if node.op == "sub":
        return lv - rv
    if node.op == "mul":
        return lv * rv
    if node.op == "div":
        if np.any(np.asarray(rv) == 0):
            raise ExprDomainError("division by zero", node.offset)
        return lv / rv
    base = np.asarray(lv, dtype=float)
    expo = np.asarray(rv, dtype=float)
    if np.any((base == 0) & (expo < 0)):
        raise ExprDomainError("zero raised to a negative power", node.offset)
    if np.any(base < 0) and not np.all(expo == np.round(expo)):
        raise ExprDomainError("negative base with non-integer exponent", node.offset)
    return base**expo


def fold_x(node: Node, x_values: np.ndarray, params: MLParams = DEFAULT_PARAMS) -> Node:
    """Replace maximal x-only subtrees by their precomputed grid values.

    Inner solver loops evaluate the same integrand at thousands of coefficient
    vectors on one fixed grid; the x-dependent factors (Mittag-Leffler terms in
    particular) never change across those evaluations.
    """
    deps = used_variables(node)
    if deps <= {"x"} and not isinstance(node, (Const, Var, Bound)):
        env = {"x": np.asarray(x_values, dtype=float), "y": 0.0, "ca": 0.0, "cb": 0.0}
        return Bound(np.asarray(_eval_value(node, env, params), dtype=float), node.offset)
    if isinstance(node, Unary):
        return Unary(node.op, fold_x(node.arg, x_values, params), node.offset)
    if isinstance(node, Binary):
        return Binary(node.op, fold_x(node.left, x_values, params),
                      fold_x(node.right, x_values, params), node.offset)
    if isinstance(node, MLCall):
        return MLCall(node.alpha, fold_x(node.arg, x_values, params), node.offset)
    return node
