"""
Jet-space bookkeeping: numeric 2-jets in an admissible chart, graph lifts,
truncated total derivatives, the contact system and the affine action on the
top-order fibre.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import sympy

from .exceptions import NonAdmissible, NotInvertible, NotSymmetric, OrderOverflow
from .expr import W, VarId, VarKind, expression_dimension, jet_symbol, normalize, x_symbol
from .series import Taylor2, t2_compose, t2_invert_map

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
DEFAULT_MAX_CONDITION = 1e8


def _readonly(values, shape):
    array = np.array(values, dtype=float)
    if array.shape != shape:
        raise ValueError(f"expected shape {shape}, got {array.shape}")
    if not np.isfinite(array).all():
        raise ValueError("jet coordinates must be finite")
    array.setflags(write=False)
    return array


def check_symmetric(matrix, tol=SYMMETRY_TOL):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=0, atol=tol):
        raise NotSymmetric(f"matrix is not symmetric to {tol}")
    return (matrix + matrix.T) / 2


@dataclass(frozen=True, eq=False)
class JetPoint2:
    n: int
    u: float
    x: np.ndarray
    du: np.ndarray
    d2u: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")
        u = float(self.u)
        if not np.isfinite(u):
            raise ValueError("jet coordinates must be finite")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "x", _readonly(self.x, (n,)))
        object.__setattr__(self, "du", _readonly(self.du, (n,)))
        d2u = _readonly(self.d2u, (n, n))
        object.__setattr__(self, "d2u", _readonly(check_symmetric(d2u), (n, n)))

    @classmethod
    def zero(cls, n):
        return cls(n, 0.0, np.zeros(n), np.zeros(n), np.zeros((n, n)))

    def __eq__(self, other):
        if not isinstance(other, JetPoint2):
            return NotImplemented
        return (
            self.n == other.n
            and self.u == other.u
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.du, other.du)
            and np.array_equal(self.d2u, other.d2u)
        )

    __hash__ = None

    def allclose(self, other, atol=1e-9):
        return (
            self.n == other.n
            and abs(self.u - other.u) <= atol
            and np.allclose(self.x, other.x, rtol=0, atol=atol)
            and np.allclose(self.du, other.du, rtol=0, atol=atol)
            and np.allclose(self.d2u, other.d2u, rtol=0, atol=atol)
        )

    @property
    def detg(self):
        return 1.0 + float(self.du @ self.du)

    def graph(self):
        """The quadratic Taylor graph y -> u + du.y + 1/2 y^T d2u y centred at x"""
        return Taylor2(self.u, self.du, self.d2u)

    def chart(self):
        """Coordinates (u, x^1 + y_1, ..., x^n + y_n) of the graph as series in y"""
        return [self.graph()] + [Taylor2.variable(self.n, k, offset=float(self.x[k])) for k in range(self.n)]


def lift_graph(f, x0):
    x0 = np.asarray(x0, dtype=float)
    return JetPoint2(
        f.n,
        float(f.c0),
        x0,
        np.asarray(f.c1, dtype=float),
        np.asarray(f.c2, dtype=float),
    )


def regraph(U, X, max_condition=DEFAULT_MAX_CONDITION):
    """
    Re-read a parametrized hypersurface y -> (U(y), X(y)) as a graph over X.

    Raises NonAdmissible when the tangent plane is vertical, i.e. the linear
    part of X is singular or too badly conditioned.
    """
    basepoint = X.constant_part().astype(float)
    try:
        inverse = t2_invert_map(X.shift(), max_condition)
    except NotInvertible as e:
        raise NonAdmissible(f"image tangent plane is vertical: {e}")
    graph = t2_compose(U - U.c0, inverse)
    return JetPoint2(U.n, float(U.c0), basepoint, graph.c1.astype(float), graph.c2.astype(float))


def orientation_sign(J, du):
    """
    Whether a point map with Jacobian J keeps the upward normal (1, -du) of a
    graph pointing upward: +1 if it does, -1 if the image graph is seen from
    below.
    """
    normal = np.concatenate(([1.0], -np.asarray(du, dtype=float)))
    image = np.linalg.solve(np.asarray(J, dtype=float).T, normal)
    return 1 if image[0] > 0 else -1


def fiber_translate(p, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (p.n, p.n):
        raise NotSymmetric(f"expected a {p.n}x{p.n} matrix, got shape {v.shape}")
    if not np.array_equal(v, v.T):
        raise NotSymmetric("fibre translations are symmetric matrices")
    return JetPoint2(p.n, p.u, p.x, p.du, p.d2u + v)


def _variable_order(var):
    if var.kind is VarKind.W:
        return 1
    return var.order


def total_derivative(e, i, order, n=None):
    """
    Truncated total derivative D_i of order `order`.

    The radical w depends on the first derivatives, so D_i w = u_j u_ij / w.
    """
    e = sympy.sympify(e)
    variables = [VarId.from_symbol(s) for s in e.free_symbols]
    if n is None:
        n = max(expression_dimension(e), i)
    if not 1 <= i <= n:
        raise ValueError(f"direction {i} outside 1..{n}")
    for var in variables:
        var_order = _variable_order(var)
        if var_order is not None and var_order >= order:
            raise OrderOverflow(f"{var} has order {var_order}, total derivative of order {order} needs < {order}")
    result = sympy.diff(e, x_symbol(i))
    for var in variables:
        if var.is_jet:
            result += jet_symbol(*var.indices, i) * sympy.diff(e, var.symbol)
        elif var.kind is VarKind.W:
            chain = sum(jet_symbol(j) * jet_symbol(j, i) for j in range(1, n + 1)) / W
            result += chain * sympy.diff(e, W)
    return normalize(result, n)


@dataclass(frozen=True)
class ContactForm:
    """
    A Pfaff form sum(coefficient * d(var)).

    level is 0 for du - u_i dx^i and (0, i) for du_i - u_ij dx^j.
    """

    level: object
    coefficients: dict

    def evaluate(self, tangent, n=None):
        """Contract with a tangent vector given as a map VarId -> component"""
        total = sympy.Integer(0)
        for var, coeff in self.coefficients.items():
            total += coeff * sympy.sympify(tangent.get(var, 0))
        if n is None:
            n = max([1] + [max(var.indices) for var in self.coefficients if var.indices])
        return normalize(total, n)

    def __str__(self):
        terms = [f"({coeff})d{var}" for var, coeff in self.coefficients.items()]
        return " + ".join(terms)


def contact_forms(n):
    forms = [
        ContactForm(
            0,
            {VarId.jet(()): sympy.Integer(1), **{VarId(VarKind.X, (j,)): -jet_symbol(j) for j in range(1, n + 1)}},
        )
    ]
    for i in range(1, n + 1):
        coefficients = {VarId.jet((i,)): sympy.Integer(1)}
        coefficients.update({VarId(VarKind.X, (j,)): -jet_symbol(i, j) for j in range(1, n + 1)})
        forms.append(ContactForm((0, i), coefficients))
    return forms


def lift_bindings(f, n):
    """Substitutions u -> f, u_i -> df/dx^i, u_ij -> d2f/dx^i dx^j for a polynomial f in x^1..x^n"""
    xs = [x_symbol(i) for i in range(1, n + 1)]
    bindings = {VarId.jet(()): f}
    for i in range(1, n + 1):
        bindings[VarId.jet((i,))] = sympy.diff(f, xs[i - 1])
        for j in range(i, n + 1):
            bindings[VarId.jet((i, j))] = sympy.diff(f, xs[i - 1], xs[j - 1])
    return bindings


def lift_tangent(f, j, n):
    """The image of d/dx^j under the second-order lift of the graph of f"""
    xs = [x_symbol(i) for i in range(1, n + 1)]
    tangent = {VarId(VarKind.X, (k,)): sympy.Integer(1 if k == j else 0) for k in range(1, n + 1)}
    tangent[VarId.jet(())] = sympy.diff(f, xs[j - 1])
    for i in range(1, n + 1):
        tangent[VarId.jet((i,))] = sympy.diff(f, xs[i - 1], xs[j - 1])
    return tangent


def graph_taylor(f, n):
    """Taylor2 data of a polynomial f in x^1..x^n at the origin"""
    return Taylor2.from_expr(f, [x_symbol(i) for i in range(1, n + 1)])
