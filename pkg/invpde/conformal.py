"""
Conformal (Moebius) geometry of graph hypersurfaces in the light-cone model.

Vectors of R^{1,n+2} are written in the ordered basis (p, e0, e1..en, q) with
p, q isotropic, <p, q> = 1 and e0..en orthonormal. A point (u, x) of the
affine chart is the null vector p + u e0 + x + s q with
s = -1/2 (u^2 + |x|^2).
"""
import logging
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.linalg
import sympy
from sympy.polys.domains import QQ

from .euclidean import (
    Family,
    GeneratedPDE,
    euclidean_trace_forms,
    newton_sigma,
    numeric_shape_operator,
    power_trace_forms,
    shape_numerator,
    trace,
)
from .exceptions import ChartBoundary, EmptyEquation, NoInvariants, NotHomogeneous, NotMoebius, NotOnCone, NotRotation
from .expr import RationalForm, eval_numeric, jet_ring
from .jet import DEFAULT_MAX_CONDITION, regraph
from .series import Taylor2, Taylor2Map, is_exact_value, t2_div, t2_linear

logger = logging.getLogger(__name__)

CONE_TOL = 1e-9
CHART_TOL = 1e-12
METRIC_TOL = 1e-9


def basis_labels(n):
    return ["p"] + [f"e{a}" for a in range(n + 1)] + ["q"]


def _coerce(values):
    """Exact object array of Rationals when every entry is exact, float array otherwise"""
    array = np.asarray(values, dtype=object)
    if array.size and all(is_exact_value(v) for v in array.flat):
        return np.vectorize(sympy.Rational, otypes=[object])(array)
    return array.astype(float)


def _is_exact(array):
    return array.dtype == object


def minkowski_metric(n):
    size = n + 3
    eta = np.zeros((size, size), dtype=int)
    eta[0, -1] = eta[-1, 0] = 1
    for a in range(1, size - 1):
        eta[a, a] = 1
    return eta


@dataclass(frozen=True, eq=False)
class MinkowskiVector:
    components: np.ndarray

    def __post_init__(self):
        components = _coerce(self.components)
        if components.ndim != 1 or components.shape[0] < 4:
            raise ValueError(f"expected n + 3 >= 4 components, got shape {components.shape}")
        object.__setattr__(self, "components", components)

    @classmethod
    def basis_vector(cls, n, label):
        components = np.zeros(n + 3, dtype=object)
        components[:] = sympy.Integer(0)
        components[basis_labels(n).index(label)] = sympy.Integer(1)
        return cls(components)

    @property
    def n(self):
        return self.components.shape[0] - 3

    @property
    def basis(self):
        return ",".join(basis_labels(self.n))

    @property
    def p(self):
        return self.components[0]

    @property
    def e0(self):
        return self.components[1]

    @property
    def x(self):
        return self.components[2:-1]

    @property
    def q(self):
        return self.components[-1]

    def inner(self, other):
        return inner(self, other)

    def __eq__(self, other):
        if not isinstance(other, MinkowskiVector):
            return NotImplemented
        return np.array_equal(self.components, other.components)

    __hash__ = None


def inner(v, w):
    a, b = v.components, w.components
    return a[0] * b[-1] + a[-1] * b[0] + a[1:-1] @ b[1:-1]


def embed(u, x):
    """The null vector p + u e0 + x + s(u, x) q"""
    coordinates = _coerce([u, *x])
    s = -(coordinates @ coordinates) / 2
    components = np.empty(coordinates.shape[0] + 2, dtype=coordinates.dtype)
    components[0] = sympy.Integer(1) if _is_exact(coordinates) else 1.0
    components[1:-1] = coordinates
    components[-1] = s
    return MinkowskiVector(components)


def project(v, tol=CONE_TOL):
    """(u, x) of the line through a null vector, normalized to lambda = 1"""
    components = v.components
    if _is_exact(components):
        if v.p == 0:
            raise ChartBoundary("vector has no p component")
        if inner(v, v) != 0:
            raise NotOnCone("vector is not null")
    else:
        scale = max(np.abs(components).max(), 1.0)
        if abs(v.p) <= tol * scale:
            raise ChartBoundary("vector has no p component")
        if abs(inner(v, v)) > tol * scale**2:
            raise NotOnCone(f"vector has squared norm {inner(v, v):.3g}")
    return v.e0 / v.p, v.x / v.p


class GeneratorTag(Enum):
    G_MINUS = "g_minus"
    ROTATION = "rotation"
    DILATION = "dilation"
    G_PLUS = "g_plus"
    A_E0 = "a_e0"


@dataclass(frozen=True, eq=False)
class GradedGenerator:
    """
    One factor of the local decomposition G^-1 . CO(E) . G^+1.

    value is a vector of E for g_minus/g_plus, a matrix of SO(E) for rotation,
    a positive scalar for dilation and a scalar for a_e0.
    """

    tag: GeneratorTag
    value: object
    n: int = None

    def __post_init__(self):
        tag = GeneratorTag(self.tag)
        object.__setattr__(self, "tag", tag)
        if tag in (GeneratorTag.G_MINUS, GeneratorTag.G_PLUS, GeneratorTag.ROTATION):
            value = _coerce(self.value)
            n = value.shape[0] - 1
            if self.n is not None and self.n != n:
                raise ValueError(f"{tag.value} parameter has dimension {n}, expected {self.n}")
            object.__setattr__(self, "value", value)
            object.__setattr__(self, "n", n)
        elif self.n is None:
            raise ValueError(f"{tag.value} needs the dimension n")
        if tag is GeneratorTag.DILATION and not self.value > 0:
            raise ValueError(f"dilation factor must be positive, got {self.value}")


def _eye(size, exact):
    return np.eye(size, dtype=object if exact else float)


def _half(value, exact):
    return value / 2 if not exact else value * sympy.Rational(1, 2)


def g_minus_matrix(xi):
    xi = _coerce(xi)
    exact = _is_exact(xi)
    matrix = _eye(xi.shape[0] + 2, exact)
    matrix[1:-1, 0] = -xi
    matrix[-1, 0] = -_half(xi @ xi, exact)
    matrix[-1, 1:-1] = xi
    return matrix


def g_plus_matrix(xi):
    xi = _coerce(xi)
    exact = _is_exact(xi)
    matrix = _eye(xi.shape[0] + 2, exact)
    matrix[0, 1:-1] = xi
    matrix[0, -1] = -_half(xi @ xi, exact)
    matrix[1:-1, -1] = -xi
    return matrix


def dilation_matrix(a, n):
    exact = is_exact_value(a)
    a = sympy.Rational(a) if exact else float(a)
    matrix = _eye(n + 3, exact)
    matrix[0, 0] = a
    matrix[-1, -1] = 1 / a
    return matrix


def check_rotation(B, tol=1e-12):
    B = _coerce(B)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise NotRotation(f"expected a square matrix, got shape {B.shape}")
    if _is_exact(B):
        product = B.T @ B
        if not np.array_equal(product, np.eye(B.shape[0], dtype=int)):
            raise NotRotation("B is not orthogonal")
        if sympy.Matrix(B.tolist()).det() != 1:
            raise NotRotation("B does not have determinant 1")
    else:
        if not np.allclose(B.T @ B, np.eye(B.shape[0]), rtol=0, atol=tol):
            raise NotRotation("B is not orthogonal")
        if abs(np.linalg.det(B) - 1.0) > tol:
            raise NotRotation("B does not have determinant 1")
    return B


def rotation_matrix(B):
    B = check_rotation(B)
    matrix = _eye(B.shape[0] + 2, _is_exact(B))
    matrix[1:-1, 1:-1] = B
    return matrix


def rotation_in_v(B):
    """Embed a rotation of V = span(e1..en) into SO(E) fixing e0"""
    B = _coerce(B)
    exact = _is_exact(B)
    embedded = _eye(B.shape[0] + 1, exact)
    embedded[1:, 1:] = B
    return embedded


def a_e0_matrix(t, n):
    """exp t(e0 ^ p): q -> q + t e0 - t^2/2 p, e0 -> e0 - t p"""
    exact = is_exact_value(t)
    xi = np.zeros(n + 1, dtype=object if exact else float)
    if exact:
        xi[:] = sympy.Integer(0)
        xi[0] = -sympy.Rational(t)
    else:
        xi[0] = -float(t)
    return g_plus_matrix(xi)


def build_element(gen):
    if gen.tag is GeneratorTag.G_MINUS:
        matrix = g_minus_matrix(gen.value)
    elif gen.tag is GeneratorTag.G_PLUS:
        matrix = g_plus_matrix(gen.value)
    elif gen.tag is GeneratorTag.ROTATION:
        matrix = rotation_matrix(gen.value)
    elif gen.tag is GeneratorTag.DILATION:
        matrix = dilation_matrix(gen.value, gen.n)
    else:
        matrix = a_e0_matrix(gen.value, gen.n)
    return MoebiusElement(matrix)


@dataclass(frozen=True, eq=False)
class MoebiusElement:
    matrix: np.ndarray

    def __post_init__(self):
        matrix = _coerce(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 4:
            raise NotMoebius(f"expected an (n+3)x(n+3) matrix, got shape {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def n(self):
        return self.matrix.shape[0] - 3

    @property
    def exact(self):
        return _is_exact(self.matrix)

    @classmethod
    def identity(cls, n):
        return cls(_eye(n + 3, True))

    @classmethod
    def from_matrix(cls, matrix, tol=METRIC_TOL):
        """A raw matrix, checked against the Minkowski form"""
        element = cls(matrix)
        element.validate(tol)
        return element

    @classmethod
    def from_word(cls, generators):
        generators = list(generators)
        if not generators:
            raise ValueError("a generator word needs at least one letter")
        element = build_element(generators[0])
        for gen in generators[1:]:
            element = element @ build_element(gen)
        return element

    def compose(self, other):
        """self after other"""
        if self.n != other.n:
            raise ValueError(f"cannot compose elements of dimension {self.n} and {other.n}")
        return MoebiusElement(self.matrix @ other.matrix)

    __matmul__ = compose

    def inverse(self):
        eta = minkowski_metric(self.n)
        return MoebiusElement(eta @ self.matrix.T @ eta)

    def metric_defect(self):
        eta = minkowski_metric(self.n)
        defect = self.matrix.T @ eta @ self.matrix - eta
        if self.exact:
            return 0.0 if all(v == 0 for v in defect.flat) else float(np.abs(defect.astype(float)).max())
        return float(np.abs(defect).max())

    def preserves_metric(self, tol=0.0):
        return self.metric_defect() <= tol

    def validate(self, tol=METRIC_TOL):
        defect = self.metric_defect()
        if defect > tol:
            raise NotMoebius(f"matrix moves the Minkowski form by {defect:.3g}")
        determinant = np.linalg.det(self.matrix.astype(float))
        if determinant < 0:
            warnings.warn(
                "Moebius matrix has determinant -1 and reverses orientation",
                UserWarning,
                stacklevel=2,
            )

    def apply(self, v):
        return MinkowskiVector(self.matrix @ v.components)


def random_element(n, rng, bound=0.3, rotation_scale=1.0):
    """g_minus(xi1) rotation(B) dilation(a) g_plus(xi2) a_e0(t) with bounded parameters"""

    def ball():
        direction = rng.normal(size=n + 1)
        return direction / np.linalg.norm(direction) * bound * rng.uniform()

    a = rng.uniform(-1.0, 1.0, size=(n + 1, n + 1))
    skew = a - a.T
    skew *= rotation_scale * rng.uniform() / np.linalg.norm(skew, 2)
    return MoebiusElement.from_word(
        [
            GradedGenerator(GeneratorTag.G_MINUS, ball()),
            GradedGenerator(GeneratorTag.ROTATION, scipy.linalg.expm(skew)),
            GradedGenerator(GeneratorTag.DILATION, float(np.exp(rng.uniform(-bound, bound))), n),
            GradedGenerator(GeneratorTag.G_PLUS, ball()),
            GradedGenerator(GeneratorTag.A_E0, float(rng.uniform(-bound, bound)), n),
        ]
    )


def _cone_lift(coordinates):
    """[1, u, x.., s] as series, from the (u, x) chart coordinates given as series"""
    s = sum(c * c for c in coordinates) * -0.5
    return [Taylor2.constant(coordinates[0].n, 1.0)] + list(coordinates) + [s]


def _chart_image(M, coordinates):
    image = t2_linear(M.matrix.astype(float), _cone_lift(coordinates))
    scale = image[0]
    if abs(scale.c0) <= CHART_TOL:
        logger.debug(f"lambda component {scale.c0!r} at the basepoint")
        raise ChartBoundary("image point lies on the boundary of the affine chart")
    return [t2_div(c, scale) for c in image[1:-1]]


def moebius_act(M, p, max_condition=DEFAULT_MAX_CONDITION):
    """Push a 2-jet through a Moebius element by re-graphing on the light cone"""
    if M.n != p.n:
        raise ValueError(f"element of dimension {M.n} applied to a jet of dimension {p.n}")
    U, *X = _chart_image(M, p.chart())
    return regraph(U, Taylor2Map(tuple(X)), max_condition)


def moebius_jacobian(M, u, x):
    """Jacobian of the induced point map (u, x) -> (u', x') of the affine chart"""
    size = len(x) + 1
    coordinates = [Taylor2.variable(size, k, offset=float(c)) for k, c in enumerate([u, *x])]
    return np.array([c.c1 for c in _chart_image(M, coordinates)], dtype=float)


@lru_cache(maxsize=None)
def traceless_numerator(n):
    """M - tr(M)/n I, so that the traceless shape operator is this over det(g) w"""
    jets = jet_ring(n)
    M = shape_numerator(n)
    mean = trace(M, jets.ring.zero).quo_ground(QQ(n))
    return tuple(tuple(M[i][j] - mean if i == j else M[i][j] for j in range(n)) for i in range(n))


def conformal_shape(n):
    jets = jet_ring(n)
    M = traceless_numerator(n)
    scale = jets.detg * jets.w
    return sympy.Matrix(n, n, lambda i, j: jets.form(M[i][j], scale).to_expr())


@lru_cache(maxsize=None)
def conformal_trace_forms(n):
    if n < 2:
        raise NoInvariants("the traceless part of a 1x1 shape operator is zero")
    jets = jet_ring(n)
    return power_trace_forms(traceless_numerator(n), jets.detg * jets.w, n, jets, start=2)


def conformal_traces(n):
    return [form.to_expr() for form in conformal_trace_forms(n)]


def conformal_sigmas(n):
    """
    sigma°_h = (-1)^(h+1) e_h(A°) for h = 2..n, so sigma°_2 = tau°_2 / 2 and
    sigma°_3 = tau°_3 / 3 = det A° when n = 3.
    """
    forms = conformal_trace_forms(n)
    jets = jet_ring(n)
    elementary = newton_sigma([jets.form(jets.ring.zero), *forms], n)
    return [(e if h % 2 else -e).to_expr() for h, e in enumerate(elementary[1:], start=2)]


def mean_curvature_forms(n):
    """H = tau_1 / n together with the elementary symmetric functions sigma_1..sigma_n"""
    sigmas = newton_sigma(euclidean_trace_forms(n), n)
    return sigmas[0] * sympy.Rational(1, n), sigmas


def generate_conformal_pde(F, n):
    if F.family is not Family.CONFORMAL:
        raise ValueError(f"expected a conformal polynomial, got {F.family.value}")
    if F.n != n:
        raise ValueError(f"polynomial is over invariants of dimension {F.n}, dimension is {n}")
    if not F.is_homogeneous:
        raise NotHomogeneous(f"{F} is not weighted-homogeneous")
    if F.is_zero:
        raise EmptyEquation("F is the zero polynomial")
    value = F.evaluate(conformal_trace_forms(n))
    if not isinstance(value, RationalForm):
        value = jet_ring(n).form(jet_ring(n).constant(value))
    return GeneratedPDE.from_form(value, F)


def numeric_conformal_shape(p):
    A = numeric_shape_operator(p)
    return A - np.trace(A) / p.n * np.eye(p.n)


def conformal_invariants_at(p):
    taus = [eval_numeric(t, p) for t in conformal_traces(p.n)]
    result = {"tau": taus}
    if taus[0] > 0:
        result["ratio"] = [tau**2 / taus[0] ** h for h, tau in enumerate(taus, start=2)]
    return result
