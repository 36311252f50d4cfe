"""Exact rational functions over Q in named variables.

An :class:`Expr` is a canonical fraction ``num/den`` of two polynomials with
rational coefficients.  Canonical means: coprime, denominator monic under the
graded-lex order of its :class:`VarTable`.  Polynomial arithmetic and GCDs are
delegated to FLINT through ``python-flint``.
"""

import re
from fractions import Fraction

import flint

Rat = flint.fmpq

ROLES = ("jet", "derivative", "spectral", "auxiliary")


def rat(x):
    """Coerce ints, Fractions, fmpq and strings like ``"-3/2"`` to a Rat."""
    if isinstance(x, flint.fmpq):
        return x
    if isinstance(x, int):
        return flint.fmpq(x)
    if isinstance(x, Fraction):
        return flint.fmpq(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if not re.fullmatch(r"[+-]?\d+(/\d+)?", s):
            raise ValueError(f"not a rational literal: {x!r}")
        n, _, d = s.partition("/")
        if d and int(d) == 0:
            raise ZeroDivisionError(f"zero denominator in {x!r}")
        return flint.fmpq(int(n), int(d) if d else 1)
    if isinstance(x, flint.fmpz):
        return flint.fmpq(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Rat")


def rat_str(x):
    return str(rat(x))


class VarTable:
    """Ordered registry of variable names.

    Variables may be appended later; appending never changes the relative
    order of existing names, so canonical forms stay valid.
    """

    def __init__(self, names=(), role="auxiliary", aliases=None):
        self.names = []
        self.roles = {}
        self.aliases = dict(aliases or {})
        self._index = {}
        self._ctx = None
        for n in names:
            self.add(n, role)

    def add(self, name, role="auxiliary"):
        if name in self._index:
            return self._index[name]
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", name):
            raise ValueError(f"bad variable name {name!r}")
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        self._index[name] = len(self.names)
        self.names.append(name)
        self.roles[name] = role
        self._ctx = None
        return self._index[name]

    def __contains__(self, name):
        return name in self._index or name in self.aliases

    def __len__(self):
        return len(self.names)

    def resolve(self, name):
        name = self.aliases.get(name, name)
        if name not in self._index:
            raise KeyError(name)
        return name

    def index(self, name):
        return self._index[self.resolve(name)]

    @property
    def ctx(self):
        if self._ctx is None:
            names = tuple(self.names) if self.names else ("_",)
            self._ctx = flint.fmpq_mpoly_ctx.get(names, "deglex")
        return self._ctx

    def var(self, name):
        return Expr(self, self.ctx.gens()[self.index(name)])

    def vars(self, *names):
        return [self.var(n) for n in names]

    def const(self, c):
        return Expr(self, self.ctx.constant(rat(c)))

    def parse(self, text):
        return parse(text, self)


def _lift(poly, table):
    ctx = table.ctx
    if poly.context() is ctx:
        return poly
    return poly.project_to_context(ctx)


class Expr:
    """Immutable canonical rational function."""

    __slots__ = ("table", "num", "den")

    def __init__(self, table, num, den=None, canonical=False):
        self.table = table
        num = _lift(num, table)
        if den is None:
            self.num, self.den = num, table.ctx.constant(1)
            return
        den = _lift(den, table)
        if canonical:
            self.num, self.den = num, den
            return
        if den.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if num.is_zero():
            self.num, self.den = num, table.ctx.constant(1)
            return
        if den.is_constant():
            self.num, self.den = num / den.leading_coefficient(), table.ctx.constant(1)
            return
        g = num.gcd(den)
        if not g.is_one():
            num, den = num / g, den / g
        lc = den.leading_coefficient()
        if lc != 1:
            num, den = num / lc, den / lc
        self.num, self.den = num, den

    # -- construction helpers
    def _coerce(self, other):
        if isinstance(other, Expr):
            if other.table is not self.table:
                raise ValueError("Exprs from different variable tables")
            return other
        return Expr(self.table, self.table.ctx.constant(rat(other)))

    def _aligned(self):
        ctx = self.table.ctx
        if self.num.context() is ctx and self.den.context() is ctx:
            return self.num, self.den
        return _lift(self.num, self.table), _lift(self.den, self.table)

    @property
    def is_polynomial(self):
        return self.den.is_one()

    # -- arithmetic
    def __add__(self, other):
        o = self._coerce(other)
        n1, d1 = self._aligned()
        n2, d2 = o._aligned()
        if d1.is_one() and d2.is_one():
            return Expr(self.table, n1 + n2)
        if d1 == d2:
            return Expr(self.table, n1 + n2, d1)
        return Expr(self.table, n1 * d2 + n2 * d1, d1 * d2)

    __radd__ = __add__

    def __neg__(self):
        n, d = self._aligned()
        return Expr(self.table, -n, d, canonical=True)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        n1, d1 = self._aligned()
        n2, d2 = o._aligned()
        if d1.is_one() and d2.is_one():
            return Expr(self.table, n1 * n2)
        return Expr(self.table, n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        n1, d1 = self._aligned()
        n2, d2 = o._aligned()
        if n2.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        return Expr(self.table, n1 * d2, d1 * n2)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k):
        if not isinstance(k, int):
            raise TypeError("integer exponents only")
        n, d = self._aligned()
        if k >= 0:
            return Expr(self.table, n**k, d**k, canonical=True)
        if n.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        return Expr(self.table, d ** (-k), n ** (-k))

    def __eq__(self, other):
        if not isinstance(other, Expr):
            try:
                other = self._coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        if other.table is not self.table:
            return False
        n1, d1 = self._aligned()
        n2, d2 = other._aligned()
        return n1 == n2 and d1 == d2

    def __hash__(self):
        return hash(str(self))

    def __bool__(self):
        return not self.num.is_zero()

    # -- calculus and substitution
    def diff(self, name):
        i = self.table.index(name)
        n, d = self._aligned()
        dn = n.derivative(i)
        if d.is_one():
            return Expr(self.table, dn)
        return Expr(self.table, dn * d - n * d.derivative(i), d * d)

    def subs(self, bindings):
        """Simultaneous substitution ``{name: Expr | number}``."""
        table = self.table
        imgs = {}
        for k, v in bindings.items():
            imgs[table.index(k)] = v if isinstance(v, Expr) else table.const(v)
        n, d = self._aligned()
        if all(v.is_polynomial for v in imgs.values()):
            gens = list(table.ctx.gens())
            args = [imgs[i].num if i in imgs else gens[i] for i in range(len(gens))]
            num = n.compose(*args) if imgs else n
            den = d.compose(*args) if imgs else d
            if den.is_zero():
                raise ZeroDivisionError("denominator vanished")
            return Expr(table, num, den)
        num = _eval_poly(n, imgs, table)
        den = _eval_poly(d, imgs, table)
        if den.num.is_zero():
            raise ZeroDivisionError("denominator vanished")
        return num / den

    def evaluate(self, point):
        """Value at a point given as ``{name: Rat}`` covering all free variables."""
        vals = {self.table.index(k): rat(v) for k, v in point.items()}
        n, d = self._aligned()
        nv = _eval_num(n, vals)
        dv = _eval_num(d, vals)
        if dv == 0:
            raise ZeroDivisionError("denominator vanished at point")
        return nv / dv

    def to_table(self, table, rename=None):
        """Re-express over another table, matching variables by name."""
        rename = rename or {}
        missing = [v for v in self.free_vars() if rename.get(v, v) not in table]
        if missing:
            raise KeyError(f"variables {missing} not in target table")
        gens = table.ctx.gens()
        src = self.table.names
        args = []
        for name in src:
            tgt = rename.get(name, name)
            args.append(gens[table.index(tgt)] if tgt in table else table.ctx.constant(0))
        n, d = self._aligned()
        if not args:
            return Expr(table, table.ctx.constant(n.leading_coefficient() if not n.is_zero() else 0))
        return Expr(table, n.compose(*args, ctx=table.ctx), d.compose(*args, ctx=table.ctx))

    def free_vars(self):
        n, d = self._aligned()
        used = set()
        for p in (n, d):
            for m in p.monoms():
                used.update(i for i, e in enumerate(m) if e)
        return [self.table.names[i] for i in sorted(used)]

    def is_zero(self):
        return self.num.is_zero()

    def is_constant(self):
        return self.num.is_constant() and self.den.is_one()

    def constant_value(self):
        if not self.is_constant():
            raise ValueError("not a constant")
        return self.num.leading_coefficient() if not self.num.is_zero() else Rat(0)

    def numerator(self):
        return Expr(self.table, self._aligned()[0])

    def denominator(self):
        return Expr(self.table, self._aligned()[1])

    def __str__(self):
        n, d = self._aligned()
        names = self.table.names
        if d.is_one():
            return _poly_str(n, names)
        return f"({_poly_str(n, names)})/({_poly_str(d, names)})"

    def __repr__(self):
        return f"Expr({self})"


def is_zero(e):
    return e.is_zero()


def diff(e, name):
    return e.diff(name)


def subst(e, bindings):
    return e.subs(bindings)


def _eval_num(poly, vals):
    total = Rat(0)
    for mono, c in zip(poly.monoms(), poly.coeffs()):
        t = Rat(c)
        for i, k in enumerate(mono):
            if k:
                if i not in vals:
                    raise KeyError(f"no value for variable #{i}")
                t *= vals[i] ** k
        total += t
    return total


def _eval_poly(poly, imgs, table):
    gens = table.ctx.gens()
    out = table.const(0)
    for mono, c in zip(poly.monoms(), poly.coeffs()):
        t = table.const(c)
        plain = table.ctx.constant(1)
        for i, k in enumerate(mono):
            if not k:
                continue
            if i in imgs:
                t = t * imgs[i] ** int(k)
            else:
                plain = plain * gens[i] ** int(k)
        out = out + t * Expr(table, plain)
    return out


def _poly_str(poly, names):
    if poly.is_zero():
        return "0"
    parts = []
    for mono, c in zip(poly.monoms(), poly.coeffs()):
        factors = []
        for i, k in enumerate(mono):
            if k == 1:
                factors.append(names[i])
            elif k:
                factors.append(f"{names[i]}^{k}")
        neg = c < 0
        c = -c if neg else c
        if not factors:
            body = str(c)
        elif c == 1:
            body = "*".join(factors)
        else:
            body = str(c) + "*" + "*".join(factors)
        parts.append((neg, body))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for neg, body in parts[1:]:
        out += (" - " if neg else " + ") + body
    return out


# -- parser -----------------------------------------------------------------

class ParseError(ValueError):
    def __init__(self, msg, pos):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


def _tokenize(text):
    toks = []
    pos, n = 0, len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        ch = text[pos]
        if ch.isdigit():
            m = re.compile(r"\d+").match(text, pos)
            toks.append(("num", m.group(0), pos))
            pos = m.end()
        elif ch.isascii() and ch.isalpha():
            m = re.compile(r"[A-Za-z][A-Za-z0-9_]*").match(text, pos)
            toks.append(("id", m.group(0), pos))
            pos = m.end()
        elif ch in "+-*/^()":
            toks.append((ch, ch, pos))
            pos += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", pos)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text, table):
        self.toks = _tokenize(text)
        self.i = 0
        self.table = table

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        t = self.toks[self.i]
        if kind is not None and t[0] != kind:
            want = {"end": "end of input", "num": "an integer"}.get(kind, repr(kind))
            found = "end of input" if t[0] == "end" else repr(t[1])
            raise ParseError(f"expected {want}, found {found}", t[2])
        self.i += 1
        return t

    def expr(self):
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op, _, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by the zero polynomial", pos)
                e = e / rhs
        return e

    def unary(self):
        if self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            e = self.unary()
            return -e if op == "-" else e
        return self.power()

    def power(self):
        e = self.base()
        if self.peek()[0] == "^":
            self.take()
            sign = 1
            if self.peek()[0] in ("+", "-"):
                sign = -1 if self.take()[0] == "-" else 1
            _, digits, pos = self.take("num")
            k = sign * int(digits)
            if k < 0 and e.is_zero():
                raise ParseError("division by the zero polynomial", pos)
            e = e**k
        return e

    def base(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return self.table.const(int(val))
        if kind == "id":
            self.take()
            if val not in self.table:
                raise ParseError(f"unknown identifier {val!r}", pos)
            return self.table.var(val)
        if kind == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", pos)


def parse(text, table):
    """Parse ``text`` into a canonical Expr over ``table``."""
    p = _Parser(text, table)
    e = p.expr()
    p.take("end")
    return e


def to_str(e):
    return str(e)
