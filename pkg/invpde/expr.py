"""
Exact expressions in jet coordinates.

Expressions are plain sympy expressions over the symbols ``u``, ``x^i``,
``u_i``, ``u_ij`` (``i <= j``), ``u_ijk...`` and the radical ``w`` with
``w**2 = 1 + u_1**2 + ... + u_n**2``. The canonical form is computed over a
sparse polynomial ring with graded lexicographic order and rational
coefficients.
"""
import json
import logging
import math
import operator
import re
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, reduce
from itertools import combinations_with_replacement

import numpy as np
import sympy
from sympy.polys.domains import QQ
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, ring

from .exceptions import (
    NearSingular,
    ParseError,
    UnsupportedExpression,
    ZeroDenominator,
)

logger = logging.getLogger(__name__)

MAX_DIMENSION = 9
NEAR_SINGULAR_TOL = np.finfo(float).eps

_SYMBOL_RE = re.compile(r"^(?:(?P<u>u)|x\^(?P<x>[1-9])|u_(?P<jet>[1-9]+)|(?P<w>w))$")
_RATIONAL_RE = re.compile(r"^-?\d+(?:/\d+)?$")


class VarKind(Enum):
    U = "u"
    X = "x"
    DU = "du"
    D2U = "d2u"
    DKU = "dku"
    W = "w"


_INDEX_COUNT = {VarKind.U: 0, VarKind.X: 1, VarKind.DU: 1, VarKind.D2U: 2, VarKind.W: 0}


@dataclass(frozen=True)
class VarId:
    kind: VarKind
    indices: tuple = ()

    def __post_init__(self):
        kind = VarKind(self.kind)
        indices = tuple(int(i) for i in self.indices)
        expected = _INDEX_COUNT.get(kind)
        if expected is not None and len(indices) != expected:
            raise ValueError(f"{kind.value} takes {expected} indices, got {indices}")
        if kind is VarKind.DKU and len(indices) < 3:
            raise ValueError(f"dku needs at least 3 indices, got {indices}")
        if any(not 1 <= i <= MAX_DIMENSION for i in indices):
            raise ValueError(f"indices must lie in 1..{MAX_DIMENSION}, got {indices}")
        if kind not in (VarKind.U, VarKind.X, VarKind.W):
            indices = tuple(sorted(indices))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def jet(cls, indices=()):
        """The jet coordinate u_{i1..ik} for a multi-index of any length"""
        indices = tuple(indices)
        kind = {0: VarKind.U, 1: VarKind.DU, 2: VarKind.D2U}.get(len(indices), VarKind.DKU)
        return cls(kind, indices)

    @classmethod
    def from_symbol(cls, symbol):
        match = _SYMBOL_RE.match(str(symbol))
        if not match:
            raise UnsupportedExpression(f"{symbol} is not a jet coordinate")
        if match["u"]:
            return cls(VarKind.U)
        if match["w"]:
            return cls(VarKind.W)
        if match["x"]:
            return cls(VarKind.X, (int(match["x"]),))
        return cls.jet(int(c) for c in match["jet"])

    @property
    def order(self):
        """Jet order of a u-coordinate; None for x and w"""
        if self.kind in (VarKind.X, VarKind.W):
            return None
        return len(self.indices)

    @property
    def is_jet(self):
        return self.order is not None

    @property
    def name(self):
        if self.kind is VarKind.U:
            return "u"
        if self.kind is VarKind.W:
            return "w"
        if self.kind is VarKind.X:
            return f"x^{self.indices[0]}"
        return "u_" + "".join(str(i) for i in self.indices)

    @property
    def symbol(self):
        return sympy.Symbol(self.name)

    def __str__(self):
        return self.name


def x_symbol(i):
    return VarId(VarKind.X, (i,)).symbol


def jet_symbol(*indices):
    return VarId.jet(indices).symbol


U = jet_symbol()
W = VarId(VarKind.W).symbol


def as_symbol(key):
    if isinstance(key, VarId):
        return key.symbol
    if isinstance(key, sympy.Symbol):
        VarId.from_symbol(key)
        return key
    raise TypeError(f"cannot bind {key!r}")


def detg_expr(n):
    return 1 + sum(jet_symbol(i) ** 2 for i in range(1, n + 1))


def ordered_variables(n, order=2):
    """Ring variables in monomial order: u, x^1..x^n, u_1..u_n, u_11..u_nn, higher orders, w"""
    variables = [VarId(VarKind.U)]
    variables += [VarId(VarKind.X, (i,)) for i in range(1, n + 1)]
    for k in range(1, order + 1):
        variables += [VarId.jet(c) for c in combinations_with_replacement(range(1, n + 1), k)]
    variables.append(VarId(VarKind.W))
    return tuple(variables)


class JetRing:
    """
    Polynomial ring QQ[u, x, u_i, u_ij, ..., w] for a fixed dimension and order

    Every element handed out keeps the exponent of w below 2.
    """

    def __init__(self, n, order=2):
        if not 1 <= n <= MAX_DIMENSION:
            raise ValueError(f"dimension must lie in 1..{MAX_DIMENSION}, got {n}")
        self.n = n
        self.order = max(order, 2)
        self.variables = ordered_variables(n, self.order)
        self.symbols = tuple(v.symbol for v in self.variables)
        self.ring, *gens = ring(self.symbols, QQ, grlex)
        self.gens = tuple(gens)
        self._by_symbol = dict(zip(self.symbols, self.gens))
        self.w = self.gens[-1]
        self.detg = self.ring.one + sum((self.jet(i) ** 2 for i in range(1, n + 1)), self.ring.zero)
        self._detg_powers = [self.ring.one, self.detg]

    def __repr__(self):
        return f"JetRing(n={self.n}, order={self.order})"

    def gen(self, symbol):
        try:
            return self._by_symbol[symbol]
        except KeyError:
            raise UnsupportedExpression(f"{symbol} is not a coordinate of J^{self.order} in dimension {self.n}")

    def jet(self, *indices):
        return self.gen(jet_symbol(*indices))

    def x(self, i):
        return self.gen(x_symbol(i))

    def constant(self, value):
        return self.ring.ground_new(QQ.from_sympy(sympy.Rational(value)))

    def form(self, numer, denom=None):
        return RationalForm(self, numer, denom)

    def detg_pow(self, k):
        while len(self._detg_powers) <= k:
            self._detg_powers.append(self._detg_powers[-1] * self.detg)
        return self._detg_powers[k]

    def detg_power(self, poly):
        """k with poly == detg**k, or None"""
        if not poly:
            return None
        degree = max(sum(monom) for monom in poly)
        if degree % 2:
            return None
        k = degree // 2
        return k if poly == self.detg_pow(k) else None

    def reduce_radical(self, poly):
        if not poly or poly.degree(self.w) < 2:
            return poly
        buckets = defaultdict(dict)
        for monom, coeff in poly.items():
            k = monom[-1]
            buckets[k // 2][monom[:-1] + (k % 2,)] = coeff
        result = self.ring.zero
        for half, terms in buckets.items():
            result += self.ring.from_dict(terms) * self.detg_pow(half)
        return result

    def split_radical(self, poly):
        """(a, b) with poly == a + b*w, for poly reduced in w"""
        even, odd = {}, {}
        for monom, coeff in poly.items():
            if monom[-1]:
                odd[monom[:-1] + (0,)] = coeff
            else:
                even[monom] = coeff
        return self.ring.from_dict(even), self.ring.from_dict(odd)

    def canonical(self, numer, denom):
        if not denom:
            raise ZeroDenominator("division by an expression whose normal form is zero")
        numer = self.reduce_radical(numer)
        if denom == 1:
            return numer, self.ring.one
        denom = self.reduce_radical(denom)
        if not denom:
            raise ZeroDenominator("division by an expression whose normal form is zero")
        rational, radical = self.split_radical(denom)
        if radical:
            conjugate = rational - radical * self.w
            numer = self.reduce_radical(numer * conjugate)
            denom = self.reduce_radical(denom * conjugate)
        if not numer:
            return self.ring.zero, self.ring.one
        numer, denom = self._monic(numer, denom)
        if denom == 1:
            return numer, denom
        return self._cancel(numer, denom)

    def _monic(self, numer, denom):
        lc = denom.LC
        if lc != 1:
            numer, denom = numer.quo_ground(lc), denom.quo_ground(lc)
        return numer, denom

    def _cancel(self, numer, denom):
        k = self.detg_power(denom)
        if k is not None:
            while k:
                quotient, remainder = numer.div(self.detg)
                if remainder:
                    break
                numer, k = quotient, k - 1
            return numer, self.detg_pow(k)
        _, numer, denom = numer.cofactors(denom)
        return self._monic(numer, denom)

    def from_expr(self, e):
        if isinstance(e, RationalForm):
            e = e.to_expr()
        e = sympy.sympify(e)
        if e.has(sympy.zoo, sympy.nan):
            raise ZeroDenominator(f"{e} divides by zero")
        return self._convert(e)

    def _convert(self, e):
        if e.is_Rational:
            return self.form(self.constant(e))
        if e.is_Symbol:
            return self.form(self.gen(e))
        if e.is_Add:
            return reduce(operator.add, (self._convert(a) for a in e.args))
        if e.is_Mul:
            return reduce(operator.mul, (self._convert(a) for a in e.args))
        if e.is_Pow and e.exp.is_Integer:
            return self._convert(e.base) ** int(e.exp)
        raise UnsupportedExpression(f"cannot represent {e} over the rationals with the radical w")


def jet_ring(n, order=2):
    """The shared ring of a dimension; orders below 2 map to the order-2 ring"""
    return _jet_ring(int(n), max(int(order), 2))


@lru_cache(maxsize=None)
def _jet_ring(n, order):
    return JetRing(n, order)


class RationalForm:
    """Canonical pair (numerator, denominator) over a JetRing"""

    __slots__ = ("jets", "numer", "denom")

    def __init__(self, jets, numer, denom=None):
        self.jets = jets
        if denom is None:
            self.numer, self.denom = jets.reduce_radical(numer), jets.ring.one
        else:
            self.numer, self.denom = jets.canonical(numer, denom)

    def _coerce(self, other):
        if isinstance(other, RationalForm):
            if other.jets is not self.jets:
                raise ValueError(f"cannot combine forms over {self.jets} and {other.jets}")
            return other
        if isinstance(other, PolyElement):
            return RationalForm(self.jets, other)
        if isinstance(other, (int, sympy.Rational)):
            return RationalForm(self.jets, self.jets.constant(other))
        return None

    @property
    def is_zero(self):
        return not self.numer

    def radical_parts(self):
        return self.jets.split_radical(self.numer)

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.denom == other.denom:
            return RationalForm(self.jets, self.numer + other.numer, self.denom)
        return RationalForm(self.jets, self.numer * other.denom + other.numer * self.denom, self.denom * other.denom)

    __radd__ = __add__

    def __neg__(self):
        form = object.__new__(RationalForm)
        form.jets, form.numer, form.denom = self.jets, -self.numer, self.denom
        return form

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return RationalForm(self.jets, self.numer * other.numer, self.denom * other.denom)

    __rmul__ = __mul__

    def inverse(self):
        return RationalForm(self.jets, self.denom, self.numer)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k):
        k = int(k)
        if k < 0:
            return self.inverse() ** -k
        return RationalForm(self.jets, self.numer**k, self.denom**k)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self.numer == other.numer and self.denom == other.denom

    def __hash__(self):
        return hash((self.jets.n, self.numer, self.denom))

    def __repr__(self):
        return f"RationalForm({self.to_expr()})"

    def to_expr(self):
        numer = self.numer.as_expr()
        if self.denom == 1:
            return numer
        return sympy.Mul(numer, sympy.Pow(self.denom.as_expr(), -1))


def _variables(e):
    return [VarId.from_symbol(s) for s in e.free_symbols]


def expression_order(e):
    return max([2] + [len(v.indices) for v in _variables(e) if v.kind is VarKind.DKU])


def expression_dimension(e):
    return max([1] + [max(v.indices) for v in _variables(e) if v.indices])


def to_form(e, n):
    """The RationalForm of an expression over the smallest ring holding it"""
    if isinstance(e, RationalForm):
        return e
    e = sympy.sympify(e)
    return jet_ring(n, expression_order(e)).from_expr(e)


def normalize(e, n):
    """
    Canonical normal form of e in dimension n.

    >>> normalize(W**2, 2)
    u_1**2 + u_2**2 + 1
    """
    return to_form(e, n).to_expr()


def substitute(e, bindings, n=None):
    """
    Simultaneous substitution followed by normalize.

    The radical is tied to the first derivatives, so when they are rebound
    and w survives normalization it is rebound too; this needs the new
    det(g) to be a rational square unless w is bound explicitly. Since w
    depends on every first derivative, n is required whenever w occurs.
    """
    mapping = {as_symbol(k): sympy.sympify(v) for k, v in bindings.items()}
    e = sympy.sympify(e)
    if n is None:
        if W in e.free_symbols or W in mapping or any(W in v.free_symbols for v in mapping.values()):
            raise ValueError("substitute needs the dimension n when w occurs")
        n = max([expression_dimension(e)] + [expression_dimension(v) for v in mapping.values()] + [
            max(VarId.from_symbol(s).indices or (1,)) for s in mapping
        ])
    e = normalize(e, n)
    rebinds_du = any(VarId.from_symbol(s).kind is VarKind.DU for s in mapping)
    if rebinds_du and W in e.free_symbols and W not in mapping:
        root = sympy.sqrt(normalize(detg_expr(n).xreplace(mapping), n))
        if not root.is_Rational:
            raise UnsupportedExpression(f"w has no rational value after binding the first derivatives ({root})")
        mapping[W] = root
    return normalize(e.xreplace(mapping), n)


def jet_values(p):
    """Coordinates of a numeric 2-jet in ring order, w = +sqrt(det g) last"""
    du = [float(v) for v in p.du]
    values = [float(p.u), *(float(v) for v in p.x), *du]
    values += [float(p.d2u[i - 1][j - 1]) for i, j in combinations_with_replacement(range(1, p.n + 1), 2)]
    values.append(math.sqrt(1.0 + sum(v * v for v in du)))
    return tuple(values)


class NumericForm:
    def __init__(self, n, numer, denom=None):
        self.n = n
        self._numer = numer
        self._denom = denom

    def __call__(self, p):
        if p.n != self.n:
            raise ValueError(f"jet of dimension {p.n} given to an expression compiled for {self.n}")
        values = jet_values(p)
        numer = self._numer(*values)
        if self._denom is None:
            return float(numer)
        denom = self._denom(*values)
        if abs(denom) < NEAR_SINGULAR_TOL:
            raise NearSingular(f"denominator {denom!r} is below machine tolerance")
        return float(numer / denom)


@lru_cache(maxsize=1024)
def compile_numeric(e, n):
    jets = jet_ring(n)
    form = jets.from_expr(e)
    numer = sympy.lambdify(jets.symbols, form.numer.as_expr(), modules="math")
    denom = None
    if form.denom != 1:
        denom = sympy.lambdify(jets.symbols, form.denom.as_expr(), modules="math")
    logger.debug(f"compiled expression with {len(form.numer)} numerator terms for n={n}")
    return NumericForm(n, numer, denom)


def eval_numeric(e, p):
    if isinstance(e, RationalForm):
        e = e.to_expr()
    return compile_numeric(sympy.sympify(e), p.n)(p)


class Format(Enum):
    TEXT = "text"
    LATEX = "latex"
    JSON = "json"


def _rational_node(value):
    return {"c": str(sympy.Rational(value))}


def to_node(e):
    if e.is_Rational:
        return _rational_node(e)
    if e.is_Symbol:
        var = VarId.from_symbol(e)
        return {"v": {"kind": var.kind.value, "idx": list(var.indices)}}
    if e.is_Add:
        return {"op": "+", "args": [to_node(a) for a in e.args]}
    if e.is_Mul:
        return {"op": "*", "args": [to_node(a) for a in e.args]}
    if e.is_Pow and e.exp.is_Integer:
        return {"op": "^", "args": [to_node(e.base), _rational_node(e.exp)]}
    raise UnsupportedExpression(f"{e} has no JSON representation")


def emit(e, format="text"):
    """
    Render an expression as text, LaTeX or JSON.

    >>> emit(jet_symbol(1, 1) + jet_symbol(2, 2), "latex")
    'u_{11} + u_{22}'
    >>> emit(sympy.Rational(1, 2))
    '1/2'
    """
    format = Format(format)
    e = sympy.sympify(e)
    if format is Format.TEXT:
        return sympy.sstr(e)
    if format is Format.LATEX:
        return sympy.latex(e)
    return json.dumps(to_node(e))


def from_node(node, path="$"):
    if not isinstance(node, dict) or len(node) not in (1, 2):
        raise ParseError("expected an expression node", path)
    if "c" in node:
        value = node["c"]
        if not isinstance(value, str) or not _RATIONAL_RE.match(value):
            raise ParseError(f"invalid rational {value!r}", f"{path}.c")
        return sympy.Rational(value)
    if "v" in node:
        variable = node["v"]
        try:
            return VarId(VarKind(variable["kind"]), tuple(variable.get("idx", ()))).symbol
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"invalid variable {variable!r}: {e}", f"{path}.v")
    op, args = node.get("op"), node.get("args")
    if not isinstance(args, list) or not args:
        raise ParseError("operator node needs a non-empty args list", f"{path}.args")
    children = [from_node(arg, f"{path}.args[{k}]") for k, arg in enumerate(args)]
    if op == "+":
        return sympy.Add(*children)
    if op == "*":
        return sympy.Mul(*children)
    if op == "^":
        if len(children) != 2 or not children[1].is_Integer:
            raise ParseError("power needs a base and an integer exponent", f"{path}.args")
        return sympy.Pow(*children)
    raise ParseError(f"unknown operator {op!r}", f"{path}.op")


def parse(document):
    """Read an expression from the JSON schema produced by emit(e, "json")"""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", e.pos)
    return from_node(document)
