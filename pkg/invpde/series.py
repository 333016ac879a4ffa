"""
Degree-2 truncated Taylor arithmetic.

A Taylor2 holds c0 + c1.y + 1/2 y^T c2 y. Coefficients are either floats or
exact sympy Rationals kept in object arrays; the exact path is selected by
the dtype of the coefficient arrays.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .exceptions import BasepointMismatch, NonUnit, NotInvertible

logger = logging.getLogger(__name__)

DEFAULT_MAX_CONDITION = 1e12

_EXACT_TYPES = (int, Fraction, sympy.Rational)


def is_exact_value(value):
    return isinstance(value, _EXACT_TYPES) and not isinstance(value, bool)


def _as_array(values, exact):
    array = np.asarray(values, dtype=object if exact else float)
    if exact:
        array = np.vectorize(sympy.Rational, otypes=[object])(array) if array.size else array
    return array


def _exactness(*values):
    arrays = [np.asarray(v, dtype=object) for v in values]
    flat = [item for array in arrays for item in array.flat]
    return all(is_exact_value(item) for item in flat)


@dataclass(frozen=True, eq=False)
class Taylor2:
    c0: object
    c1: np.ndarray
    c2: np.ndarray

    def __post_init__(self):
        exact = _exactness(self.c0, self.c1, self.c2)
        c1 = _as_array(self.c1, exact)
        c2 = _as_array(self.c2, exact)
        n = c1.shape[0] if c1.ndim == 1 else -1
        if c2.shape != (n, n):
            raise ValueError(f"c2 must be {n}x{n}, got shape {c2.shape}")
        if exact:
            c0 = sympy.Rational(self.c0)
            if not (c2 == c2.T).all():
                c2 = (c2 + c2.T) / 2
        else:
            c0 = float(self.c0)
            c2 = (c2 + c2.T) / 2
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)

    @property
    def n(self):
        return self.c1.shape[0]

    @property
    def exact(self):
        return self.c1.dtype == object

    @classmethod
    def constant(cls, n, value=0):
        zero = sympy.Integer(0) if is_exact_value(value) else 0.0
        return cls(value, np.full(n, zero, dtype=object if is_exact_value(value) else float), np.full((n, n), zero))

    @classmethod
    def zeros(cls, n, exact=False):
        return cls.constant(n, sympy.Integer(0) if exact else 0.0)

    @classmethod
    def variable(cls, n, i, offset=0, exact=None):
        """The coordinate function offset + y_i (0-based i)"""
        if exact is None:
            exact = is_exact_value(offset)
        one, zero = (sympy.Integer(1), sympy.Integer(0)) if exact else (1.0, 0.0)
        c1 = np.full(n, zero, dtype=object if exact else float)
        c1[i] = one
        return cls(offset, c1, np.full((n, n), zero, dtype=object if exact else float))

    @classmethod
    def from_expr(cls, expr, symbols):
        """Taylor data of a sympy polynomial at the origin of the given symbols"""
        expr = sympy.sympify(expr)
        origin = {s: 0 for s in symbols}
        c0 = expr.xreplace(origin)
        c1 = [sympy.diff(expr, s).xreplace(origin) for s in symbols]
        c2 = [[sympy.diff(expr, a, b).xreplace(origin) for b in symbols] for a in symbols]
        return cls(c0, c1, c2)

    def as_expr(self, symbols):
        y = sympy.Matrix(symbols)
        c1 = sympy.Matrix(self.c1.tolist())
        c2 = sympy.Matrix(self.c2.tolist())
        return sympy.expand(sympy.sympify(self.c0) + (c1.T * y)[0, 0] + sympy.Rational(1, 2) * (y.T * c2 * y)[0, 0])

    def __call__(self, y):
        y = np.asarray(y)
        return self.c0 + self.c1 @ y + (y @ self.c2 @ y) / 2

    def _coerce(self, other):
        if isinstance(other, Taylor2):
            if other.n != self.n:
                raise ValueError(f"cannot combine series in {self.n} and {other.n} variables")
            return other
        if isinstance(other, (int, float, Fraction, sympy.Rational)):
            return Taylor2.constant(self.n, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return t2_arith(self, other, "add")

    __radd__ = __add__

    def __neg__(self):
        return Taylor2(-self.c0, -self.c1, -self.c2)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return t2_arith(self, -other, "add")

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, Fraction, sympy.Rational)):
            return Taylor2(self.c0 * other, self.c1 * other, self.c2 * other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return t2_arith(self, other, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return t2_div(self, other)

    def equals(self, other, tol=0):
        if self.n != other.n:
            return False
        if tol == 0:
            return bool(
                self.c0 == other.c0 and np.array_equal(self.c1, other.c1) and np.array_equal(self.c2, other.c2)
            )
        return bool(
            abs(float(self.c0) - float(other.c0)) <= tol
            and np.allclose(self.c1.astype(float), other.c1.astype(float), rtol=0, atol=tol)
            and np.allclose(self.c2.astype(float), other.c2.astype(float), rtol=0, atol=tol)
        )

    def __repr__(self):
        return f"Taylor2(c0={self.c0!r}, c1={self.c1.tolist()!r}, c2={self.c2.tolist()!r})"


def t2_arith(a, b, op):
    if a.n != b.n:
        raise ValueError(f"cannot combine series in {a.n} and {b.n} variables")
    if op == "add":
        return Taylor2(a.c0 + b.c0, a.c1 + b.c1, a.c2 + b.c2)
    if op == "mul":
        cross = np.outer(a.c1, b.c1)
        return Taylor2(
            a.c0 * b.c0,
            a.c0 * b.c1 + b.c0 * a.c1,
            a.c0 * b.c2 + b.c0 * a.c2 + cross + cross.T,
        )
    raise ValueError(f"unknown operation {op!r}")


def t2_div(a, b):
    if b.c0 == 0:
        raise NonUnit("the divisor vanishes at the basepoint")
    scale = sympy.Integer(1) / b.c0 if b.exact else 1.0 / b.c0
    r = (b - b.c0) * scale
    inverse = (1 - r + r * r) * scale
    return a * inverse


def t2_linear(matrix, components, offset=None):
    """Apply a constant matrix componentwise to a list of series, plus an optional constant vector"""
    matrix = np.asarray(matrix)
    result = []
    for row_index, row in enumerate(matrix):
        c0 = sum(coeff * c.c0 for coeff, c in zip(row, components))
        c1 = sum(coeff * c.c1 for coeff, c in zip(row, components))
        c2 = sum(coeff * c.c2 for coeff, c in zip(row, components))
        if offset is not None:
            c0 = c0 + offset[row_index]
        result.append(Taylor2(c0, c1, c2))
    return result


@dataclass(frozen=True, eq=False)
class Taylor2Map:
    components: tuple

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise ValueError("a map needs at least one component")
        if len({c.n for c in components}) != 1:
            raise ValueError("all components must share the same variables")
        object.__setattr__(self, "components", components)

    @classmethod
    def identity(cls, n, exact=True):
        return cls(tuple(Taylor2.variable(n, i, exact=exact) for i in range(n)))

    @property
    def n(self):
        return self.components[0].n

    @property
    def m(self):
        return len(self.components)

    @property
    def exact(self):
        return all(c.exact for c in self.components)

    def __len__(self):
        return self.m

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, index):
        return self.components[index]

    def linear_part(self):
        return np.array([c.c1 for c in self.components])

    def constant_part(self):
        return np.array([c.c0 for c in self.components], dtype=object if self.exact else float)

    def shift(self):
        """The same map with its constant terms removed"""
        return Taylor2Map(tuple(c - c.c0 for c in self.components))

    def equals(self, other, tol=0):
        return self.m == other.m and all(a.equals(b, tol) for a, b in zip(self, other))


def t2_compose(outer, inner):
    if outer.n != inner.m:
        raise ValueError(f"outer series takes {outer.n} variables, inner map has {inner.m} components")
    if any(c.c0 != 0 for c in inner):
        raise BasepointMismatch("inner map must vanish at the basepoint")
    jacobian = inner.linear_part()
    c2 = jacobian.T @ outer.c2 @ jacobian
    for k, component in enumerate(inner):
        c2 = c2 + outer.c1[k] * component.c2
    return Taylor2(outer.c0, jacobian.T @ outer.c1, c2)


def compose_map(outer, inner):
    return Taylor2Map(tuple(t2_compose(c, inner) for c in outer))


def _inverse_linear(linear, exact, max_condition):
    if exact:
        matrix = sympy.Matrix(linear.tolist())
        if matrix.det() == 0:
            raise NotInvertible("linear part is singular")
        return np.array(matrix.inv().tolist(), dtype=object)
    condition = np.linalg.cond(linear)
    if not np.isfinite(condition) or condition > max_condition:
        raise NotInvertible(f"linear part has condition number {condition:.3g}")
    return np.linalg.inv(linear)


def t2_invert_map(f, max_condition=DEFAULT_MAX_CONDITION):
    """
    Second-order inverse of a square map vanishing at the basepoint.

    With f = L y + 1/2 Q(y, y) the inverse is g = L^-1 z - 1/2 L^-1 Q(L^-1 z, L^-1 z).
    """
    if f.m != f.n:
        raise NotInvertible(f"map from {f.n} to {f.m} variables is not square")
    if any(c.c0 != 0 for c in f):
        raise BasepointMismatch("map must vanish at the basepoint")
    inverse = _inverse_linear(f.linear_part(), f.exact, max_condition)
    pulled = [inverse.T @ c.c2 @ inverse for c in f]
    components = []
    for k in range(f.n):
        c2 = -sum(inverse[k, j] * pulled[j] for j in range(f.n))
        components.append(Taylor2(0 * inverse[k, 0], inverse[k], c2))
    return Taylor2Map(tuple(components))
