"""Scalar coordinate expressions with exact first and second derivatives.

Grammar (EBNF); ``^`` and ``**`` are synonyms, exponents must fold to a constant::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = atom [ ("^" | "**") unary ] ;          (* right associative *)
    atom    = number | "pi" | variable | func "(" expr ")" | "(" expr ")" ;
    variable = "x" digit { digit } | coordinate-name ;
    func    = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt"
            | "sinh" | "cosh" | user-function ;

So ``-x1^2`` is ``-(x1^2)`` and ``2*-x1`` is ``2*(-x1)``.  Trig functions take
radians.  Constant subtrees are folded at parse time and nothing else is
simplified.

Two evaluators share the AST: :func:`eval_jet` is a direct recursive
interpreter over :class:`Jet2` numbers, and :func:`compile_jets` emits
straight-line Python for a batch of expressions that skips structurally zero
derivative entries.  The geometry engine uses the compiled path; the
interpreter is the reference it is tested against.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary", "Func", "Jet2",
    "parse", "to_source", "evaluate", "eval_jet", "compile_jets",
    "variables", "substitute", "shift_vars", "UNARY_OPS",
]


# ----------------------------------------------------------------------------
# AST
# ----------------------------------------------------------------------------

class Expr:
    """Base class of expression nodes.  Nodes are immutable and hashable."""

    def __add__(self, other):
        return _binary("add", self, _lift(other))

    def __radd__(self, other):
        return _binary("add", _lift(other), self)

    def __sub__(self, other):
        return _binary("sub", self, _lift(other))

    def __rsub__(self, other):
        return _binary("sub", _lift(other), self)

    def __mul__(self, other):
        return _binary("mul", self, _lift(other))

    def __rmul__(self, other):
        return _binary("mul", _lift(other), self)

    def __truediv__(self, other):
        return _binary("div", self, _lift(other))

    def __rtruediv__(self, other):
        return _binary("div", _lift(other), self)

    def __pow__(self, other):
        return _binary("pow", self, _lift(other))

    def __neg__(self):
        return _unary("neg", self)

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, eq=True)
class Var(Expr):
    index: int  # 1-based


@dataclass(frozen=True, eq=True)
class Unary(Expr):
    op: str
    arg: Expr


@dataclass(frozen=True, eq=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Func(Expr):
    """Application of a user-supplied univariate function.

    ``impl(u)`` must return ``(f(u), f'(u), f''(u))``.  Equality and hashing
    use the name only.
    """

    name: str
    arg: Expr
    impl: Callable[[float], tuple] = field(compare=False, repr=False)


def _lift(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, np.floating, np.integer)):
        return Const(float(v))
    raise TypeError(f"cannot use {type(v).__name__} in an expression")


# (f, f', f'') for the elementary functions, plus a domain guard.
def _tan3(u):
    t = math.tan(u)
    s = 1.0 + t * t
    return t, s, 2.0 * t * s


def _sqrt3(u):
    r = math.sqrt(u)
    return r, 0.5 / r, -0.25 / (r * u)


def _log3(u):
    return math.log(u), 1.0 / u, -1.0 / (u * u)


def _exp3(u):
    e = math.exp(u)
    return e, e, e


UNARY_OPS: dict[str, Callable[[float], tuple]] = {
    "sin": lambda u: (math.sin(u), math.cos(u), -math.sin(u)),
    "cos": lambda u: (math.cos(u), -math.sin(u), -math.cos(u)),
    "tan": _tan3,
    "exp": _exp3,
    "log": _log3,
    "sqrt": _sqrt3,
    "sinh": lambda u: (math.sinh(u), math.cosh(u), math.sinh(u)),
    "cosh": lambda u: (math.cosh(u), math.sinh(u), math.cosh(u)),
}

# Guard source text (for codegen) and message; None means total function.
_GUARDS = {
    "log": ("{u} > 0.0", "log of nonpositive argument"),
    "sqrt": ("{u} > 0.0", "sqrt of nonpositive argument"),
    "tan": ("abs(math.cos({u})) > 1e-15", "tan at a pole"),
}


def _check_unary(op: str, u: float, node: Expr):
    if op in ("log", "sqrt") and not u > 0.0:
        raise ExprDomainError(_GUARDS[op][1], to_source(node))
    if op == "tan" and not abs(math.cos(u)) > 1e-15:
        raise ExprDomainError("tan at a pole", to_source(node))


def _is_int(p: float) -> bool:
    return float(p).is_integer() and abs(p) < 2**31


def _pow_value(b: float, p: float, node: Expr) -> float:
    if _is_int(p):
        if b == 0.0 and p < 0:
            raise ExprDomainError("division by zero", to_source(node))
        return b ** int(p)
    if not b > 0.0:
        raise ExprDomainError("non-integer power of nonpositive base", to_source(node))
    return b ** p


def _fold_binary(op, a, b, node):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b == 0.0:
            raise ExprDomainError("division by zero", to_source(node))
        return a / b
    return _pow_value(a, b, node)


def _binary(op: str, left: Expr, right: Expr) -> Expr:
    node = Binary(op, left, right)
    if op == "pow" and not isinstance(right, Const):
        raise ExprSyntaxError("exponent must be a constant")
    if isinstance(left, Const) and isinstance(right, Const):
        return Const(_fold_binary(op, left.value, right.value, node))
    return node


def _unary(op: str, arg: Expr) -> Expr:
    node = Unary(op, arg)
    if isinstance(arg, Const):
        if op == "neg":
            return Const(-arg.value)
        _check_unary(op, arg.value, node)
        return Const(UNARY_OPS[op](arg.value)[0])
    return node


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


class _Parser:
    def __init__(self, source, n, names, functions):
        self.src = source
        self.n = n
        self.names = {name: i + 1 for i, name in enumerate(names or ())}
        self.functions = dict(functions or {})
        self.toks = self._tokenize(source)
        self.i = 0

    def _tokenize(self, s):
        toks, pos = [], 0
        while pos < len(s):
            if s[pos:].strip() == "":
                break
            m = _TOKEN.match(s, pos)
            if not m or m.end() == pos:
                bad = len(s) - len(s[pos:].lstrip())
                raise ExprSyntaxError("unexpected character", s, bad)
            kind = m.lastgroup
            text = m.group(kind)
            toks.append((kind, "^" if text == "**" else text, m.start(kind)))
            pos = m.end()
        toks.append(("end", "", len(s)))
        return toks

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        kind, val, pos = self.take()
        if val != text:
            raise ExprSyntaxError(f"expected {text!r}", self.src, pos)

    def parse(self):
        if self.peek()[0] == "end":
            raise ExprSyntaxError("empty expression", self.src, 0)
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", self.src, pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = _binary("add" if op == "+" else "sub", e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = _binary("mul" if op == "*" else "div", e, self.unary())
        return e

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("-", "+"):
            self.take()
            arg = self.unary()
            return _unary("neg", arg) if val == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            expo = self.unary()
            if not isinstance(expo, Const):
                raise ExprSyntaxError("exponent must be a constant", self.src, pos)
            return _binary("pow", base, expo)
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if self.peek()[1] == "(" and (val in UNARY_OPS or val in self.functions):
                self.take()
                arg = self.expr()
                self.expect(")")
                if val in UNARY_OPS:
                    return _unary(val, arg)
                impl = self.functions[val]
                if isinstance(arg, Const):
                    return Const(impl(arg.value)[0])
                return Func(val, arg, impl)
            if val in self.names:
                return Var(self.names[val])
            if val == "pi":
                return Const(math.pi)
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                k = int(m.group(1))
                if not 1 <= k <= self.n:
                    raise ExprSyntaxError(
                        f"variable index out of range (x{k}, dimension {self.n})",
                        self.src, pos)
                return Var(k)
            raise ExprSyntaxError(f"unknown identifier {val!r}", self.src, pos)
        if kind == "end":
            raise ExprSyntaxError("unexpected end of expression", self.src, pos)
        raise ExprSyntaxError(f"unexpected token {val!r}", self.src, pos)


def parse(source: str, n: int, names: Sequence[str] | None = None,
          functions: Mapping[str, Callable] | None = None) -> Expr:
    """Parse ``source`` into an expression over variables ``x1..xn``.

    ``names`` optionally gives coordinate names usable in place of ``xk``;
    ``functions`` maps extra univariate function names to ``impl(u) ->
    (f, f', f'')``.
    """
    if isinstance(source, (int, float)):
        return Const(float(source))
    return _Parser(str(source), n, names, functions).parse()


_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def to_source(e: Expr, names: Sequence[str] | None = None) -> str:
    """Print ``e`` so that ``parse(to_source(e), n) == e``."""
    if isinstance(e, Const):
        return repr(e.value) if e.value >= 0 else f"({e.value!r})"
    if isinstance(e, Var):
        return names[e.index - 1] if names else f"x{e.index}"
    if isinstance(e, Unary):
        inner = to_source(e.arg, names)
        return f"(-{inner})" if e.op == "neg" else f"{e.op}({inner})"
    if isinstance(e, Func):
        return f"{e.name}({to_source(e.arg, names)})"
    if isinstance(e, Binary):
        return (f"({to_source(e.left, names)} {_SYMBOL[e.op]} "
                f"{to_source(e.right, names)})")
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> set[int]:
    """Indices of the variables occurring in ``e``."""
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, (Unary, Func)):
        return variables(e.arg)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return set()


def substitute(e: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace ``Var(k)`` by ``mapping[k]`` (missing keys are kept)."""
    if isinstance(e, Var):
        return mapping.get(e.index, e)
    if isinstance(e, Unary):
        return _unary(e.op, substitute(e.arg, mapping))
    if isinstance(e, Func):
        arg = substitute(e.arg, mapping)
        return Const(e.impl(arg.value)[0]) if isinstance(arg, Const) else Func(e.name, arg, e.impl)
    if isinstance(e, Binary):
        return _binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    return e


def shift_vars(e: Expr, offset: int) -> Expr:
    """Renumber every variable ``xk`` to ``x(k+offset)``."""
    return substitute(e, {k: Var(k + offset) for k in variables(e)})


# ----------------------------------------------------------------------------
# Reference evaluator over second-order jets
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Jet2:
    """Value, gradient and (symmetric) Hessian of a scalar at a point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray

    @staticmethod
    def const(c, n):
        return Jet2(float(c), np.zeros(n), np.zeros((n, n)))

    @staticmethod
    def var(k, x):
        n = len(x)
        g = np.zeros(n)
        g[k - 1] = 1.0
        return Jet2(float(x[k - 1]), g, np.zeros((n, n)))

    def chain(self, f0, f1, f2):
        g = self.grad
        return Jet2(f0, f1 * g, f1 * self.hess + f2 * np.outer(g, g))

    def __add__(self, o):
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    def __sub__(self, o):
        return Jet2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __mul__(self, o):
        a, b = self.value, o.value
        cross = np.outer(self.grad, o.grad)
        return Jet2(a * b, a * o.grad + b * self.grad,
                    a * o.hess + b * self.hess + cross + cross.T)

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)


def eval_jet(e: Expr, x: Sequence[float]) -> Jet2:
    """Value, gradient and Hessian of ``e`` at ``x`` (interpreted)."""
    x = np.asarray(x, dtype=float)
    return _jet(e, x)


def _jet(e, x):
    n = len(x)
    if isinstance(e, Const):
        return Jet2.const(e.value, n)
    if isinstance(e, Var):
        if e.index > n:
            raise ExprDomainError("variable index out of range", to_source(e))
        return Jet2.var(e.index, x)
    if isinstance(e, Unary):
        u = _jet(e.arg, x)
        if e.op == "neg":
            return -u
        _check_unary(e.op, u.value, e)
        return u.chain(*UNARY_OPS[e.op](u.value))
    if isinstance(e, Func):
        u = _jet(e.arg, x)
        return u.chain(*e.impl(u.value))
    if isinstance(e, Binary):
        if e.op == "pow":
            u = _jet(e.left, x)
            p = e.right.value
            f0 = _pow_value(u.value, p, e)
            if _is_int(p):
                k = int(p)
                f1 = k * _pow_value(u.value, k - 1, e) if k != 0 else 0.0
                f2 = k * (k - 1) * _pow_value(u.value, k - 2, e) if k not in (0, 1) else 0.0
            else:
                f1 = p * u.value ** (p - 1)
                f2 = p * (p - 1) * u.value ** (p - 2)
            return u.chain(f0, f1, f2)
        a, b = _jet(e.left, x), _jet(e.right, x)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        if b.value == 0.0:
            raise ExprDomainError("division by zero", to_source(e))
        r = 1.0 / b.value
        return a * b.chain(r, -r * r, 2.0 * r ** 3)
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, x: Sequence[float]) -> float:
    """Plain value of ``e`` at ``x``."""
    return compile_jets([e], len(x), order=0)(np.asarray(x, float))[0][0]


# ----------------------------------------------------------------------------
# Compiled evaluator
# ----------------------------------------------------------------------------

class _Gen:
    """Emit straight-line code computing sparse jets of a batch of nodes."""

    def __init__(self, n, order):
        self.n = n
        self.order = order
        self.lines: list[str] = []
        self.memo: dict = {}
        self.ns: dict = {}
        self.k = 0

    def tmp(self, code):
        if re.fullmatch(r"[tx]\d+|-?[0-9.]+(e[-+]?\d+)?|\(-[0-9.]+(e[-+]?\d+)?\)", code):
            return code
        name = f"t{self.k}"
        self.k += 1
        self.lines.append(f"{name} = {code}")
        return name

    @staticmethod
    def mul(a, b):
        if a == "1.0":
            return b
        if b == "1.0":
            return a
        return f"{a}*{b}"

    def guard(self, cond, msg, node):
        key = f"_m{len(self.ns)}"
        self.ns[key] = to_source(node)
        self.lines.append(f"if not ({cond}): raise _Dom({msg!r}, {key})")

    def chain(self, u, f1, f2):
        _, gu, hu = u
        grad = {i: self.tmp(self.mul(f1, g)) for i, g in gu.items()} if self.order else {}
        hess = {}
        if self.order > 1:
            keys = set(hu)
            keys.update((i, j) for i in gu for j in gu if i <= j)
            for ij in sorted(keys):
                terms = []
                if ij in hu:
                    terms.append(self.mul(f1, hu[ij]))
                i, j = ij
                if i in gu and j in gu:
                    terms.append(f"{f2}*{gu[i]}*{gu[j]}")
                hess[ij] = self.tmp(" + ".join(terms))
        return grad, hess

    def node(self, e):
        if e in self.memo:
            return self.memo[e]
        out = self._node(e)
        self.memo[e] = out
        return out

    def _node(self, e):
        if isinstance(e, Const):
            # negative literals are parenthesised so "**" binds to them
            return (f"({e.value!r})" if e.value < 0 else repr(e.value)), {}, {}
        if isinstance(e, Var):
            if e.index > self.n:
                raise ExprDomainError("variable index out of range", to_source(e))
            return f"x{e.index}", {e.index: "1.0"}, {}
        if isinstance(e, Unary):
            u = self.node(e.arg)
            if e.op == "neg":
                return (self.tmp(f"-{u[0]}"),
                        {i: self.tmp(f"-{g}") for i, g in u[1].items()},
                        {ij: self.tmp(f"-{h}") for ij, h in u[2].items()})
            if e.op in _GUARDS:
                cond, msg = _GUARDS[e.op]
                self.guard(cond.format(u=u[0]), msg, e)
            key = f"_u{len(self.ns)}"
            self.ns[key] = UNARY_OPS[e.op]
            return self._apply3(key, u)
        if isinstance(e, Func):
            u = self.node(e.arg)
            key = f"_f{len(self.ns)}"
            self.ns[key] = e.impl
            return self._apply3(key, u)
        if isinstance(e, Binary):
            return self._binary(e)
        raise TypeError(f"not an expression node: {e!r}")

    def _apply3(self, fname, u):
        f0, f1, f2 = (f"t{self.k}", f"t{self.k + 1}", f"t{self.k + 2}")
        self.k += 3
        self.lines.append(f"{f0}, {f1}, {f2} = {fname}({u[0]})")
        grad, hess = self.chain(u, f1, f2)
        return f0, grad, hess

    def _binary(self, e):
        op = e.op
        a = self.node(e.left)
        if op == "pow":
            p = e.right.value
            if _is_int(p):
                k = int(p)
                if k < 0:
                    self.guard(f"{a[0]} != 0.0", "division by zero", e)
                f0 = self.tmp(f"{a[0]}**{k}")
                f1 = self.tmp(f"{k}*{a[0]}**{k - 1}") if k not in (0, 1) else ("1.0" if k == 1 else "0.0")
                f2 = self.tmp(f"{k * (k - 1)}*{a[0]}**{k - 2}") if k not in (0, 1, 2) else ("2.0" if k == 2 else "0.0")
            else:
                self.guard(f"{a[0]} > 0.0", "non-integer power of nonpositive base", e)
                f0 = self.tmp(f"{a[0]}**{p!r}")
                f1 = self.tmp(f"{p!r}*{a[0]}**{p - 1!r}")
                f2 = self.tmp(f"{p * (p - 1)!r}*{a[0]}**{p - 2!r}")
            if f1 == "0.0":
                return f0, {}, {}
            grad, hess = self.chain(a, f1, f2)
            return f0, grad, hess
        b = self.node(e.right)
        if op in ("add", "sub"):
            sign = "+" if op == "add" else "-"
            val = self.tmp(f"{a[0]} {sign} {b[0]}")
            return val, self._lin(a[1], b[1], sign), self._lin(a[2], b[2], sign)
        if op == "div":
            self.guard(f"{b[0]} != 0.0", "division by zero", e)
            r = self.tmp(f"1.0/{b[0]}")
            f1 = self.tmp(f"-{r}*{r}")
            f2 = self.tmp(f"2.0*{r}*{r}*{r}")
            grad, hess = self.chain(b, f1, f2)
            b = (r, grad, hess)
        return self._mul(a, b)

    def _lin(self, da, db, sign):
        out = {}
        for key in sorted(set(da) | set(db)):
            if key in da and key in db:
                out[key] = self.tmp(f"{da[key]} {sign} {db[key]}")
            elif key in da:
                out[key] = da[key]
            else:
                out[key] = db[key] if sign == "+" else self.tmp(f"-{db[key]}")
        return out

    def _mul(self, a, b):
        va, ga, ha = a
        vb, gb, hb = b
        val = self.tmp(self.mul(va, vb))
        grad, hess = {}, {}
        if self.order:
            for i in sorted(set(ga) | set(gb)):
                terms = []
                if i in gb:
                    terms.append(self.mul(va, gb[i]))
                if i in ga:
                    terms.append(self.mul(vb, ga[i]))
                grad[i] = self.tmp(" + ".join(terms))
        if self.order > 1:
            keys = set(ha) | set(hb)
            keys.update((min(i, j), max(i, j)) for i in ga for j in gb)
            for ij in sorted(keys):
                i, j = ij
                terms = []
                if ij in hb:
                    terms.append(self.mul(va, hb[ij]))
                if ij in ha:
                    terms.append(self.mul(vb, ha[ij]))
                if i in ga and j in gb:
                    terms.append(self.mul(ga[i], gb[j]))
                if j in ga and i in gb:
                    terms.append(self.mul(ga[j], gb[i]))
                hess[ij] = self.tmp(" + ".join(terms))
        return val, grad, hess


def compile_jets(exprs: Sequence[Expr], n: int, order: int = 2,
                 layout: Sequence[Sequence[int]] | None = None, size: int | None = None):
    """Compile a batch of expressions into ``f(x) -> (values, grads, hessians)``.

    ``values`` has shape ``(m,)``, ``grads`` ``(m, n)`` and ``hessians``
    ``(m, n, n)``; the derivative arrays are omitted (``None``) above the
    requested ``order``.  With ``layout`` the leading axis has length
    ``size`` and expression ``r`` is written to every slot in ``layout[r]``
    (used to fill a symmetric matrix directly).
    """
    gen = _Gen(n, order)
    outs = [gen.node(e) for e in exprs]
    if layout is None:
        layout = [[r] for r in range(len(exprs))]
        size = len(exprs)
    m = size
    body = [f"x{k + 1} = float(x[{k}])" for k in range(n)] + gen.lines
    body.append(f"V = _np.zeros({m})")
    for slots, o in zip(layout, outs):
        body.append(" = ".join(f"V[{q}]" for q in slots) + f" = {o[0]}")
    body.append("G = None")
    body.append("H = None")
    if order >= 1:
        body.append(f"G = _np.zeros(({m}, {n}))")
        for slots, (_, g, _) in zip(layout, outs):
            for i, code in g.items():
                body.append(" = ".join(f"G[{q}, {i - 1}]" for q in slots) + f" = {code}")
    if order >= 2:
        body.append(f"H = _np.zeros(({m}, {n}, {n}))")
        for slots, (_, _, h) in zip(layout, outs):
            for (i, j), code in h.items():
                targets = [f"H[{q}, {i - 1}, {j - 1}]" for q in slots]
                if i != j:
                    targets += [f"H[{q}, {j - 1}, {i - 1}]" for q in slots]
                body.append(" = ".join(targets) + f" = {code}")
    body.append("return V, G, H")
    src = "def _compiled(x):\n    " + "\n    ".join(body) + "\n"
    ns = dict(gen.ns)
    ns.update(_np=np, math=math, _Dom=ExprDomainError)
    try:
        exec(compile(src, "<pwlab.exprlang>", "exec"), ns)
    except RecursionError as exc:  # pragma: no cover - absurdly deep trees
        raise ExprSyntaxError("expression too deep to compile") from exc
    fn = ns["_compiled"]

    def run(x):
        try:
            return fn(x)
        except (OverflowError, ZeroDivisionError, ValueError) as exc:
            if isinstance(exc, ExprDomainError):
                raise
            raise ExprDomainError(str(exc)) from exc

    run.source = src
    return run
