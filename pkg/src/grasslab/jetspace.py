"""Jets of two functions u, v of (x, y, t), total derivatives and reduction.

Two representations of functions on the jet space are provided.

* ``Expr`` over a :class:`JetContext` table: fully symbolic, used for the
  documented symbolic API (``total_derivative``, ``reduce_on_solution``,
  ``extract_coefficients``).
* :class:`FiberPoly`: a polynomial in the jets of order >= 2 whose
  coefficients are functions of the first-order jets ``(a, b, p, q)``.  The
  coefficients are either ``Expr`` (symbolic) or :class:`Germ` (truncated
  Taylor series at a rational point).  Total derivatives in ``t`` are taken
  on-solution directly, so no reduction step is needed.
"""

import itertools
from dataclasses import dataclass, field
from math import factorial

from .exprcore import Expr, Rat, VarTable, parse, rat

DIRS = ("x", "y", "t")
FIRST = {("u", (1, 0, 0)): "a", ("u", (0, 1, 0)): "b",
         ("v", (1, 0, 0)): "p", ("v", (0, 1, 0)): "q"}
FIRST_INV = {v: k for k, v in FIRST.items()}
BASE = ("a", "b", "p", "q")
IMPLICIT_VARS = ("u1", "u2", "u3", "v1", "v2", "v3")


class OrderOverflow(ValueError):
    pass


class SingularJacobian(ValueError):
    pass


def _dir(d):
    return DIRS.index(d) if isinstance(d, str) else int(d)


def jet_name(fn, idx):
    idx = tuple(idx)
    if (fn, idx) in FIRST:
        return FIRST[(fn, idx)]
    return fn + "_" + "x" * idx[0] + "y" * idx[1] + "t" * idx[2]


def parse_jet_name(name):
    """``'u_xyt'`` -> ``('u', (1, 1, 1))``; aliases ``a, b, p, q`` accepted."""
    if name in FIRST_INV:
        return FIRST_INV[name]
    if len(name) < 3 or name[0] not in "uv" or name[1] != "_":
        return None
    letters = name[2:]
    if any(c not in "xyt" for c in letters) or list(letters) != sorted(letters, key="xyt".index):
        return None
    return name[0], (letters.count("x"), letters.count("y"), letters.count("t"))


def canonical_jet_name(name):
    j = parse_jet_name(name)
    return None if j is None else jet_name(*j)


def multi_indices(order, n=3):
    """Multi-indices of the given total order, x-heavy first."""
    out = []
    for c in itertools.combinations_with_replacement(range(n), order):
        out.append(tuple(c.count(i) for i in range(n)))
    return out


def evol_table():
    aliases = {"u_x": "a", "u_y": "b", "v_x": "p", "v_y": "q"}
    return VarTable(BASE, role="jet", aliases=aliases)


def implicit_table():
    aliases = {"a": "u1", "b": "u2", "p": "v1", "q": "v2",
               "u_x": "u1", "u_y": "u2", "u_t": "u3",
               "v_x": "v1", "v_y": "v2", "v_t": "v3"}
    return VarTable(IMPLICIT_VARS, role="jet", aliases=aliases)


def deriv_symbol(fn, index):
    """Name of a partial derivative symbol: ``('f', 'ab') -> 'f_ab'``."""
    return fn + "_" + "".join(sorted(index, key=BASE.index))


@dataclass
class SystemEvol:
    """u_t = f(a, b, p, q), v_t = g(a, b, p, q)."""

    f: Expr
    g: Expr
    name: str = ""

    @classmethod
    def parse(cls, f, g, name=""):
        t = evol_table()
        return cls(parse(f, t), parse(g, t), name)

    @property
    def table(self):
        return self.f.table

    def to_implicit(self):
        t = implicit_table()
        ren = {"a": "u1", "b": "u2", "p": "v1", "q": "v2"}
        F = t.var("u3") - self.f.to_table(t, ren)
        G = t.var("v3") - self.g.to_table(t, ren)
        return SystemImplicit(F, G, self.name)


@dataclass
class SystemImplicit:
    """F(u1..u3, v1..v3) = 0, G(...) = 0.

    ``origin`` records ``(system, M)`` when the system was produced by the
    SL(5) action; points and germs are then pushed through the action rather
    than recomputed from the (large) transformed equations.
    """

    F: Expr
    G: Expr
    name: str = ""
    origin: tuple = field(default=None, repr=False)

    @classmethod
    def parse(cls, F, G, name=""):
        t = implicit_table()
        return cls(parse(F, t), parse(G, t), name)

    @property
    def table(self):
        return self.F.table


# -- symbolic jets ----------------------------------------------------------

class JetContext:
    """Registry of the jets of u, v up to ``max_order`` plus derivative symbols."""

    def __init__(self, max_order=4):
        self.max_order = max_order
        aliases = {"u_x": "a", "u_y": "b", "v_x": "p", "v_y": "q"}
        self.table = VarTable(aliases=aliases)
        self.jets = {}
        for order in range(1, max_order + 1):
            for fn in ("u", "v"):
                for idx in multi_indices(order):
                    name = jet_name(fn, idx)
                    self.table.add(name, "jet")
                    self.jets[name] = (fn, idx)

    def var(self, name):
        return self.table.var(canonical_jet_name(name) or name)

    def jet(self, fn, idx):
        return self.table.var(jet_name(fn, idx))

    def parse(self, text):
        return parse(text, self.table)

    def symbol(self, fn, index):
        name = deriv_symbol(fn, index)
        self.table.add(name, "derivative")
        return self.table.var(name)

    def lift(self, e):
        """Bring an Expr in (a, b, p, q) (or any subset of our names) into this context."""
        return e.to_table(self.table)

    def _targets(self, poly_vars, k):
        out = {}
        for name in poly_vars:
            if name in self.jets:
                fn, idx = self.jets[name]
                new = list(idx)
                new[k] += 1
                if sum(new) > self.max_order:
                    raise OrderOverflow(f"D_{DIRS[k]} {name} exceeds order {self.max_order}")
                out[name] = self.jet(fn, new)
            elif self.table.roles.get(name) == "derivative":
                fn, _, index = name.partition("_")
                tot = None
                for c in BASE:
                    fn_c, cidx = FIRST_INV[c]
                    cidx = list(cidx)
                    cidx[k] += 1
                    term = self.symbol(fn, index + c) * self.jet(fn_c, cidx)
                    tot = term if tot is None else tot + term
                out[name] = tot
        return out

    def total_derivative(self, e, direction):
        """Chain rule over jet variables and derivative symbols."""
        k = _dir(direction)
        targets = self._targets(e.free_vars(), k)
        if not targets:
            return e.table.const(0)
        n, d = e.numerator(), e.denominator()

        def dpoly(p):
            tot = e.table.const(0)
            for name, tgt in targets.items():
                dp = p.diff(name)
                if not dp.is_zero():
                    tot = tot + dp * tgt
            return tot

        dn = dpoly(n)
        if d.is_constant():
            return dn
        return (dn * d - n * dpoly(d)) / (d * d)


def total_derivative(e, direction, ctx):
    return ctx.total_derivative(e, direction)


class Rewriter:
    """Oriented jet rewriting: lead jet -> Expr, extended to all prolongations.

    A jet is reducible when its multi-index dominates a lead jet of the same
    function.  Its image is obtained by differentiating the image of a jet one
    order lower (x first, then y, then t) and reducing again, so jets are
    eliminated from the lowest order upwards.
    """

    def __init__(self, ctx, rules):
        self.ctx = ctx
        self.rules = {}
        for lead, rhs in rules.items():
            fn, idx = parse_jet_name(lead)
            self.rules[(fn, idx)] = ctx.lift(rhs) if rhs.table is not ctx.table else rhs
        self._memo = {}

    def _lead_for(self, fn, idx):
        for (lfn, lidx), rhs in self.rules.items():
            if lfn == fn and all(i >= j for i, j in zip(idx, lidx)):
                return lidx
        return None

    def reducible(self, name):
        j = self.ctx.jets.get(name)
        return j is not None and self._lead_for(*j) is not None

    def image(self, name):
        if name in self._memo:
            return self._memo[name]
        fn, idx = self.ctx.jets[name]
        lead = self._lead_for(fn, idx)
        if tuple(idx) == tuple(lead):
            out = self.reduce(self.rules[(fn, lead)])
        else:
            for k in range(3):
                if idx[k] > lead[k]:
                    lower = list(idx)
                    lower[k] -= 1
                    break
            prev = self.image(jet_name(fn, lower))
            out = self.reduce(self.ctx.total_derivative(prev, k))
        self._memo[name] = out
        return out

    def reduce(self, e):
        red = sorted((v for v in e.free_vars() if self.reducible(v)),
                     key=lambda v: sum(self.ctx.jets[v][1]))
        if not red:
            return e
        return e.subs({v: self.image(v) for v in red})


def on_solution_rules(sys, ctx):
    return {"u_t": ctx.lift(sys.f), "v_t": ctx.lift(sys.g)}


def reduce_on_solution(e, sys, ctx):
    """Eliminate every t-derivative using u_t = f, v_t = g and prolongations."""
    return Rewriter(ctx, on_solution_rules(sys, ctx)).reduce(e)


def jet_order(name):
    j = parse_jet_name(name)
    return 0 if j is None else sum(j[1])


def extract_coefficients(e, base_order):
    """Split ``e`` as a polynomial in jets of order > ``base_order``.

    Returns ``{monomial: coefficient}`` where a monomial is a tuple of
    ``(jet_name, power)`` pairs (``()`` for the constant part).
    """
    table = e.table
    names = table.names
    high = [i for i, n in enumerate(names) if jet_order(n) > base_order]
    hs = set(high)
    den = e.denominator()
    if any(table.index(v) in hs for v in den.free_vars()):
        raise ValueError("expression is not polynomial in the higher jets")
    num = e.num if e.num.context() is table.ctx else e.numerator().num
    groups = {}
    ctx = table.ctx
    for mono, c in zip(num.monoms(), num.coeffs()):
        key = tuple((names[i], int(mono[i])) for i in high if mono[i])
        low = [0 if i in hs else int(m) for i, m in enumerate(mono)]
        groups.setdefault(key, {})[tuple(low)] = c
    return {k: Expr(table, ctx.from_dict(v)) / den for k, v in groups.items()}


# -- implicit differentiation -------------------------------------------------

def split_direction(k):
    """Independent directions other than ``k`` (0-based), in increasing order."""
    return tuple(i for i in range(3) if i != k)


def evolutionary_names(k):
    """Map (a, b, p, q, f, g) to implicit variable names when solving along ``k``."""
    i, j = split_direction(k)
    return {"a": f"u{i + 1}", "b": f"u{j + 1}", "p": f"v{i + 1}", "q": f"v{j + 1}",
            "f": f"u{k + 1}", "g": f"v{k + 1}"}


class ImplicitJets:
    """Derivatives of the implicit solution (f, g) of F = G = 0.

    Exprs are over the implicit table and valid modulo F = G = 0.  Entries
    are computed lazily and memoized per multi-index.
    """

    def __init__(self, sys, direction=2):
        self.sys = sys
        self.names = evolutionary_names(direction)
        F, G = sys.F, sys.G
        fv, gv = self.names["f"], self.names["g"]
        J = [[F.diff(fv), F.diff(gv)], [G.diff(fv), G.diff(gv)]]
        det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
        if det.is_zero():
            raise SingularJacobian("singular Jacobian")
        self.det = det
        self._memo = {}
        for c in BASE:
            x = self.names[c]
            Fc, Gc = F.diff(x), G.diff(x)
            self._memo[("f", c)] = -(J[1][1] * Fc - J[0][1] * Gc) / det
            self._memo[("g", c)] = -(-J[1][0] * Fc + J[0][0] * Gc) / det

    def total(self, e, c):
        """Derivative along the solution surface: e_c + e_f f_c + e_g g_c."""
        x = self.names[c]
        return e.diff(x) + e.diff(self.names["f"]) * self.d("f", c) + \
            e.diff(self.names["g"]) * self.d("g", c)

    def d(self, fn, index):
        index = "".join(sorted(index, key=BASE.index))
        key = (fn, index)
        if key not in self._memo:
            if len(index) < 1:
                raise ValueError("empty derivative index")
            self._memo[key] = self.total(self.d(fn, index[:-1]), index[-1])
        return self._memo[key]

    def table(self, max_order=3):
        out = {}
        for order in range(1, max_order + 1):
            for idx in itertools.combinations_with_replacement(BASE, order):
                ix = "".join(idx)
                out[deriv_symbol("f", ix)] = self.d("f", ix)
                out[deriv_symbol("g", ix)] = self.d("g", ix)
        return out


def implicit_jets(sys, solve_for=("u3", "v3"), max_order=3):
    k = int(solve_for[0][1]) - 1
    return ImplicitJets(sys, k).table(max_order)


# -- truncated Taylor germs ---------------------------------------------------

_SHIFT = 8
_MASK = (1 << _SHIFT) - 1
INF = 1 << 20


def _unpack(key, n):
    return tuple((key >> (_SHIFT * i)) & _MASK for i in range(n))


def _pack(exps):
    key = 0
    for i, e in enumerate(exps):
        key |= e << (_SHIFT * i)
    return key


def _inv(c):
    if isinstance(c, Rat):
        return 1 / c
    if isinstance(c, Expr):
        return 1 / c
    if hasattr(c, "is_constant") and c.is_constant():
        lc = c.leading_coefficient() if not c.is_zero() else 0
        return 1 / Rat(lc)
    raise ZeroDivisionError("germ constant term is not invertible")


def _iszero(c):
    if isinstance(c, Expr):
        return c.is_zero()
    return c == 0


class Germ:
    """Truncated Taylor series at a point, valid through total degree ``order``.

    Monomials in the shift variables are packed into ints (8 bits per
    variable) so that multiplying monomials is integer addition.
    Coefficients live in any ring supporting +, -, * with Rats (Rat,
    fmpq_mpoly, Expr).
    """

    __slots__ = ("names", "order", "b")

    def __init__(self, names, order, buckets=None):
        self.names = names
        self.order = order
        self.b = buckets if buckets is not None else {}

    @classmethod
    def const(cls, names, c, order=INF):
        c = rat(c) if isinstance(c, (int, str)) else c
        return cls(names, order, {0: {0: c}} if not _iszero(c) else {})

    @classmethod
    def variable(cls, names, i, value, order=INF):
        g = cls.const(names, value, order)
        if order >= 1:
            g.b[1] = {1 << (_SHIFT * i): Rat(1)}
        return g

    @classmethod
    def from_derivatives(cls, names, order, derivs):
        """``derivs``: ``{exponent tuple: value of the partial derivative}``."""
        b = {}
        for exps, v in derivs.items():
            d = sum(exps)
            if d > order or _iszero(v):
                continue
            fac = 1
            for e in exps:
                fac *= factorial(e)
            b.setdefault(d, {})[_pack(exps)] = v * Rat(1, fac) if fac != 1 else v
        return cls(names, order, b)

    def _wrap(self, x):
        if isinstance(x, Germ):
            return x
        return Germ.const(self.names, x)

    def __add__(self, other):
        o = self._wrap(other)
        order = min(self.order, o.order)
        b = {}
        for src in (self.b, o.b):
            for d, terms in src.items():
                if d > order:
                    continue
                tgt = b.setdefault(d, {})
                for k, c in terms.items():
                    tgt[k] = tgt[k] + c if k in tgt else c
        return Germ(self.names, order, _prune(b))

    __radd__ = __add__

    def __neg__(self):
        return Germ(self.names, self.order,
                    {d: {k: -c for k, c in t.items()} for d, t in self.b.items()})

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        if not isinstance(other, Germ):
            if isinstance(other, int):
                other = Rat(other)
            if _iszero(other):
                return Germ(self.names, self.order, {})
            return Germ(self.names, self.order,
                        {d: {k: c * other for k, c in t.items()} for d, t in self.b.items()})
        order = min(self.order, other.order)
        b = {}
        for da, A in self.b.items():
            for db, B in other.b.items():
                d = da + db
                if d > order:
                    continue
                tgt = b.setdefault(d, {})
                for ka, ca in A.items():
                    for kb, cb in B.items():
                        k = ka + kb
                        v = ca * cb
                        tgt[k] = tgt[k] + v if k in tgt else v
        return Germ(self.names, order, _prune(b))

    __rmul__ = __mul__

    def constant_term(self):
        if self.order < 0:
            raise ValueError("germ carries no valid terms")
        return self.b.get(0, {}).get(0, Rat(0))

    def reciprocal(self):
        c0 = self.constant_term()
        if _iszero(c0):
            raise ZeroDivisionError("germ vanishes at the base point")
        inv0 = _inv(c0)
        h = (self - c0) * inv0
        out = Germ.const(self.names, Rat(1), self.order)
        term = Germ.const(self.names, Rat(1), self.order)
        for _ in range(min(self.order, 64)):
            term = -(term * h)
            if not term.b:
                break
            out = out + term
        return out * inv0

    def __truediv__(self, other):
        if isinstance(other, Germ):
            return self * other.reciprocal()
        return self * _inv(rat(other) if isinstance(other, int) else other)

    def __rtruediv__(self, other):
        return self._wrap(other) * self.reciprocal()

    def __pow__(self, k):
        if k < 0:
            return self.reciprocal() ** (-k)
        out = Germ.const(self.names, Rat(1), self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def diff(self, var):
        i = self.names.index(var) if isinstance(var, str) else var
        unit = 1 << (_SHIFT * i)
        b = {}
        for d, terms in self.b.items():
            if d == 0:
                continue
            for k, c in terms.items():
                e = (k >> (_SHIFT * i)) & _MASK
                if e:
                    b.setdefault(d - 1, {})[k - unit] = c * e
        return Germ(self.names, self.order - 1 if self.order < INF else INF, b)

    def derivative(self, exps):
        """Value of the partial derivative with the given exponent tuple."""
        d = sum(exps)
        if d > self.order:
            raise ValueError("derivative beyond germ order")
        c = self.b.get(d, {}).get(_pack(exps), Rat(0))
        fac = 1
        for e in exps:
            fac *= factorial(e)
        return c * fac

    def truncate(self, order):
        return Germ(self.names, min(order, self.order),
                    {d: dict(t) for d, t in self.b.items() if d <= order})

    def is_zero(self):
        return not self.b

    def map(self, fn):
        return Germ(self.names, self.order,
                    _prune({d: {k: fn(c) for k, c in t.items()} for d, t in self.b.items()}))

    def items(self):
        n = len(self.names)
        for d in sorted(self.b):
            for k, c in self.b[d].items():
                yield _unpack(k, n), c

    def __repr__(self):
        return f"Germ(order={self.order}, terms={sum(len(t) for t in self.b.values())})"


def _prune(b):
    out = {}
    for d, t in b.items():
        t2 = {k: c for k, c in t.items() if not _iszero(c)}
        if t2:
            out[d] = t2
    return out


def eval_poly_germs(poly, args, names, order):
    """Evaluate an fmpq_mpoly at germ arguments (one per generator)."""
    powers = {}

    def pw(i, k):
        if (i, k) not in powers:
            powers[(i, k)] = args[i] if k == 1 else pw(i, k - 1) * args[i]
        return powers[(i, k)]

    out = Germ(names, order, {})
    for mono, c in zip(poly.monoms(), poly.coeffs()):
        t = None
        for i, k in enumerate(mono):
            if k:
                t = pw(i, int(k)) if t is None else t * pw(i, int(k))
        if t is None:
            t = Germ.const(names, Rat(c), order)
        else:
            t = t * Rat(c)
        out = out + t
    return out


def eval_expr_germs(e, args, names, order):
    """Evaluate a rational Expr at germ arguments keyed by variable name."""
    tab = e.table
    full = []
    for nm in tab.names:
        full.append(args.get(nm, Germ.const(names, Rat(0), order)))
    num = eval_poly_germs(e.numerator().num, full, names, order)
    den = e.denominator()
    if den.is_constant():
        return num / den.constant_value()
    return num / eval_poly_germs(den.num, full, names, order)


def evol_germs(sys, point, order):
    """Taylor germs of f, g at ``point = {a, b, p, q: Rat}``."""
    args = {c: Germ.variable(BASE, i, rat(point[c]), order) for i, c in enumerate(BASE)}
    return (eval_expr_germs(sys.f, args, BASE, order),
            eval_expr_germs(sys.g, args, BASE, order))


# -- fiber polynomials --------------------------------------------------------

class FiberVars:
    """Index registry for the jets of order >= 2 in the x, y directions."""

    def __init__(self):
        self.keys = []
        self.index = {}

    def get(self, fn, i, j):
        key = (fn, i, j)
        if key not in self.index:
            self.index[key] = len(self.keys)
            self.keys.append(key)
        return self.index[key]

    def name(self, idx):
        fn, i, j = self.keys[idx]
        return jet_name(fn, (i, j, 0))


class FiberPoly:
    """Polynomial in fiber jets with coefficients in a base algebra.

    ``terms`` maps a sorted tuple of fiber-variable indices to a base
    coefficient (Germ or Expr).
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def base(c):
        return FiberPoly({(): c})

    def __add__(self, other):
        if not isinstance(other, FiberPoly):
            other = FiberPoly.base(other)
        t = dict(self.terms)
        for m, c in other.terms.items():
            t[m] = t[m] + c if m in t else c
        return FiberPoly(t)

    __radd__ = __add__

    def __neg__(self):
        return FiberPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, FiberPoly):
            other = FiberPoly.base(other)
        return self + (-other)

    def __rsub__(self, other):
        return FiberPoly.base(other) - self

    def __mul__(self, other):
        if not isinstance(other, FiberPoly):
            if isinstance(other, int) and other == 0:
                return FiberPoly()
            return FiberPoly({m: c * other for m, c in self.terms.items()})
        t = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(sorted(m1 + m2)) if m1 and m2 else (m1 or m2)
                v = c1 * c2
                t[m] = t[m] + v if m in t else v
        return FiberPoly(t)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, FiberPoly):
            if set(other.terms) - {()}:
                raise ValueError("division by a non-base fiber polynomial")
            other = other.terms.get((), None)
            if other is None:
                raise ZeroDivisionError("division by zero")
        inv = 1 / other
        return FiberPoly({m: c * inv for m, c in self.terms.items()})

    def __rtruediv__(self, other):
        return FiberPoly.base(other) / self

    def base_part(self):
        return self.terms.get((), None)

    def degree(self):
        return max((len(m) for m in self.terms), default=0)


class GermAlgebra:
    """On-solution differential algebra of FiberPolys over base functions.

    Base functions are Germs at a point (point mode) or Exprs in
    (a, b, p, q) (symbolic mode).  ``D(e, k)`` is the total derivative in
    direction k, with t-derivatives eliminated on-solution.
    """

    def __init__(self, f, g):
        self.f, self.g = f, g
        self.vars = FiberVars()
        self._dt = {}
        self._fd = {}
        one = self._one()
        self._first_jet = {}
        for c, (fn, idx) in FIRST_INV.items():
            self._first_jet[c] = (fn, idx[0], idx[1])
        self.dc = [{}, {}, {}]
        for c in BASE:
            fn, i, j = self._first_jet[c]
            self.dc[0][c] = FiberPoly({(self.vars.get(fn, i + 1, j),): one})
            self.dc[1][c] = FiberPoly({(self.vars.get(fn, i, j + 1),): one})
        for c in BASE:
            fn, i, j = self._first_jet[c]
            h = self.f if fn == "u" else self.g
            self.dc[2][c] = self.D_base(h, 0 if i else 1)

    def _one(self):
        s = self.f
        if isinstance(s, Germ):
            return Germ.const(s.names, Rat(1))
        return s.table.const(1)

    def one(self):
        return FiberPoly.base(self._one())

    def zero(self):
        return FiberPoly()

    def const(self, c):
        return FiberPoly.base(self._one() * rat(c))

    def base(self, h):
        return FiberPoly.base(h)

    wrap = base

    def fd(self, fn, c):
        key = (fn, c)
        if key not in self._fd:
            self._fd[key] = (self.f if fn == "f" else self.g).diff(c)
        return self._fd[key]

    def D_base(self, h, k):
        out = FiberPoly()
        for c in BASE:
            hc = h.diff(c)
            if not _iszero_base(hc):
                out = out + self.dc[k][c] * hc
        return out

    def D_var(self, v, k):
        fn, i, j = self.vars.keys[v]
        one = self._one()
        if k == 0:
            return FiberPoly({(self.vars.get(fn, i + 1, j),): one})
        if k == 1:
            return FiberPoly({(self.vars.get(fn, i, j + 1),): one})
        if v not in self._dt:
            if i > 0:
                lower, kk = (fn, i - 1, j), 0
            else:
                lower, kk = (fn, i, j - 1), 1
            lfn, li, lj = lower
            if li + lj == 1:
                prev = self.dc[2][FIRST[(lfn, (li, lj, 0))]]
            else:
                prev = self.D_var(self.vars.get(*lower), 2)
            self._dt[v] = self.D(prev, kk)
        return self._dt[v]

    def D(self, e, k):
        k = _dir(k)
        out = {}

        def acc(poly, mono_extra, scale):
            for m, c in poly.terms.items():
                mm = tuple(sorted(m + mono_extra)) if mono_extra else m
                v = c * scale if scale is not None else c
                out[mm] = out[mm] + v if mm in out else v

        for m, c in e.terms.items():
            dcoef = self.D_base(c, k)
            if dcoef.terms:
                acc(dcoef, m, None)
            for pos in range(len(m)):
                if pos and m[pos] == m[pos - 1]:
                    continue
                mult = m.count(m[pos])
                rest = m[:pos] + m[pos + 1:]
                dv = self.D_var(m[pos], k)
                acc(dv, rest, c * mult if mult != 1 else c)
        return FiberPoly(out)

    def coefficients(self, e):
        """``{monomial names: base coefficient}`` with zero terms removed."""
        out = {}
        for m, c in e.terms.items():
            if _iszero_base(c):
                continue
            out[tuple(self.vars.name(v) for v in m)] = c
        return out


def _iszero_base(c):
    if isinstance(c, (Rat, int)):
        return c == 0
    return c.is_zero()
