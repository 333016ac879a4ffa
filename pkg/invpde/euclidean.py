"""
Euclidean invariants of graph hypersurfaces and the PDEs they generate.

The shape operator is A = g^-1 beta with g_ij = delta_ij + u_i u_j and
beta_ij = u_ij / w. Internally A is handled as M / (det(g) w) with the
polynomial matrix M = (det(g) I - u u^T) U, so every power trace is a single
polynomial over a power of det(g) w.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.linalg
import sympy

from .exceptions import EmptyEquation, InvPDEError, NoInvariants, NotHomogeneous, NotRotation
from .expr import (
    RationalForm,
    W,
    detg_expr,
    eval_numeric,
    expression_dimension,
    jet_ring,
    jet_symbol,
    normalize,
    substitute,
    to_form,
)
from .jet import DEFAULT_MAX_CONDITION, regraph
from .series import Taylor2Map, t2_linear

logger = logging.getLogger(__name__)

ROTATION_TOL = 1e-12


class Family(Enum):
    EUCLIDEAN = "euclidean"
    CONFORMAL = "conformal"


@dataclass(frozen=True, eq=False)
class EuclideanMotion:
    """The map (u, x) -> R (u, x) + t of R^{n+1}"""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        t = np.array(self.t, dtype=float)
        size = t.shape[0] if t.ndim == 1 else -1
        if R.shape != (size, size) or size < 2:
            raise NotRotation(f"rotation of shape {R.shape} does not match translation of shape {t.shape}")
        if not np.allclose(R.T @ R, np.eye(size), rtol=0, atol=ROTATION_TOL):
            raise NotRotation("R is not orthogonal")
        if abs(np.linalg.det(R) - 1.0) > ROTATION_TOL:
            raise NotRotation("R does not preserve orientation")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @property
    def n(self):
        return self.t.shape[0] - 1

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n + 1), np.zeros(n + 1))

    @classmethod
    def random(cls, n, rng, rotation_scale=1.0, translation_scale=1.0):
        """exp of a random skew matrix of operator norm <= rotation_scale, plus a bounded translation"""
        a = rng.uniform(-1.0, 1.0, size=(n + 1, n + 1))
        skew = a - a.T
        norm = np.linalg.norm(skew, 2)
        if norm > 0:
            skew *= rotation_scale * rng.uniform() / norm
        t = rng.uniform(-translation_scale, translation_scale, size=n + 1)
        return cls(scipy.linalg.expm(skew), t)

    def compose(self, other):
        """self after other"""
        return EuclideanMotion(self.R @ other.R, self.R @ other.t + self.t)

    __matmul__ = compose

    def inverse(self):
        return EuclideanMotion(self.R.T, -self.R.T @ self.t)

    def apply(self, point):
        return self.R @ np.asarray(point, dtype=float) + self.t


@dataclass(frozen=True)
class MetricData:
    g: sympy.Matrix
    ginv: sympy.Matrix
    detg: sympy.Expr
    beta: sympy.Matrix


def metric_data(n):
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    du = [jet_symbol(i) for i in range(1, n + 1)]
    detg = normalize(detg_expr(n), n)

    def entry(e):
        return normalize(e, n)

    g = sympy.Matrix(n, n, lambda i, j: entry(int(i == j) + du[i] * du[j]))
    ginv = sympy.Matrix(n, n, lambda i, j: entry((int(i == j) * detg - du[i] * du[j]) / detg))
    beta = sympy.Matrix(n, n, lambda i, j: entry(jet_symbol(i + 1, j + 1) / W))
    return MetricData(g, ginv, detg, beta)


def matrix_product(a, b, zero):
    size = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(size)), zero) for j in range(size)] for i in range(size)]


def trace(a, zero):
    return sum((a[i][i] for i in range(len(a))), zero)


@lru_cache(maxsize=None)
def shape_numerator(n):
    """M = (det(g) I - u u^T) U with A = M / (det(g) w)"""
    jets = jet_ring(n)
    zero = jets.ring.zero
    projector = [
        [(jets.detg if i == j else zero) - jets.jet(i) * jets.jet(j) for j in range(1, n + 1)] for i in range(1, n + 1)
    ]
    hessian = [[jets.jet(i, j) for j in range(1, n + 1)] for i in range(1, n + 1)]
    return tuple(tuple(row) for row in matrix_product(projector, hessian, zero))


def shape_operator(n):
    jets = jet_ring(n)
    M = shape_numerator(n)
    scale = jets.detg * jets.w
    return sympy.Matrix(n, n, lambda i, j: jets.form(M[i][j], scale).to_expr())


def power_trace_forms(matrix, scale, count, jets, start=1):
    """tr(X^m) / scale^m for m = start..count, with X = matrix / scale"""
    zero = jets.ring.zero
    forms = []
    power = matrix
    for m in range(1, count + 1):
        if m > 1:
            power = matrix_product(power, matrix, zero)
        if m >= start:
            forms.append(jets.form(trace(power, zero), scale**m))
    return tuple(forms)


@lru_cache(maxsize=None)
def euclidean_trace_forms(n):
    jets = jet_ring(n)
    return power_trace_forms(shape_numerator(n), jets.detg * jets.w, n, jets)


def power_traces(n):
    return [form.to_expr() for form in euclidean_trace_forms(n)]


def _scaled(value, k):
    if isinstance(value, (float, np.floating)):
        return value / k
    return value * sympy.Rational(1, k)


def newton_sigma(taus, n):
    """Elementary symmetric functions from power traces: k sigma_k = sum (-1)^(m-1) sigma_(k-m) tau_m"""
    taus = list(taus)
    if len(taus) != n:
        raise ValueError(f"expected {n} power traces, got {len(taus)}")
    symbolic = [t for t in taus if isinstance(t, sympy.Basic) and t.free_symbols]
    if symbolic:
        dimension = max(expression_dimension(t) for t in symbolic)
        forms = [to_form(t, dimension) for t in taus]
        return [form.to_expr() for form in newton_sigma(forms, n)]
    sigmas = [1]
    for k in range(1, n + 1):
        total = 0
        for m in range(1, k + 1):
            total = taus[m - 1] * sigmas[k - m] * (-1) ** (m - 1) + total
        sigmas.append(_scaled(total, k))
    return sigmas[1:]


@dataclass(frozen=True, eq=False)
class InvariantPoly:
    """
    Polynomial in the invariants t1..tn (Euclidean power traces) or c2..cn
    (conformal traceless power traces), keyed by exponent tuples.
    """

    family: Family
    n: int
    coefficients: dict

    def __post_init__(self):
        family = Family(self.family)
        n = int(self.n)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "n", n)
        if family is Family.CONFORMAL and n < 2:
            raise NoInvariants("the traceless part of a 1x1 shape operator is zero")
        size = len(self.weights)
        clean = {}
        for exponents, coeff in self.coefficients.items():
            exponents = tuple(int(e) for e in exponents)
            if len(exponents) != size or min(exponents, default=0) < 0:
                raise ValueError(f"exponents {exponents} do not fit the symbols {self.symbols}")
            clean[exponents] = clean.get(exponents, 0) + sympy.Rational(coeff)
        object.__setattr__(self, "coefficients", {k: v for k, v in clean.items() if v != 0})
        if family is Family.CONFORMAL and not self.is_homogeneous:
            raise NotHomogeneous(f"{self} mixes weighted degrees {sorted(self.degrees)}")

    @property
    def symbols(self):
        if self.family is Family.EUCLIDEAN:
            return tuple(f"t{m}" for m in range(1, self.n + 1))
        return tuple(f"c{h}" for h in range(2, self.n + 1))

    @property
    def weights(self):
        first = 1 if self.family is Family.EUCLIDEAN else 2
        return tuple(range(first, self.n + 1))

    def weighted_degree(self, exponents):
        return sum(e * w for e, w in zip(exponents, self.weights))

    @property
    def degrees(self):
        return {self.weighted_degree(exponents) for exponents in self.coefficients}

    @property
    def is_homogeneous(self):
        return len(self.degrees) <= 1

    @property
    def is_zero(self):
        return not self.coefficients

    def evaluate(self, values):
        total = 0
        for exponents, coeff in self.coefficients.items():
            term = coeff
            for value, e in zip(values, exponents):
                if e:
                    term = value**e * term
            total = term + total
        return total

    def as_expr(self):
        return self.evaluate([sympy.Symbol(s) for s in self.symbols])

    def __eq__(self, other):
        if not isinstance(other, InvariantPoly):
            return NotImplemented
        return (self.family, self.n, self.coefficients) == (other.family, other.n, other.coefficients)

    def __str__(self):
        if self.is_zero:
            return "0"
        terms = []
        for exponents, coeff in sorted(self.coefficients.items(), reverse=True):
            factors = [
                symbol if e == 1 else f"{symbol}^{e}" for symbol, e in zip(self.symbols, exponents) if e
            ]
            magnitude = abs(coeff)
            if magnitude != 1 or not factors:
                factors.insert(0, str(magnitude))
            sign = "-" if coeff < 0 else "+"
            terms.append((sign, "*".join(factors)))
        first_sign, first = terms[0]
        text = ("-" if first_sign == "-" else "") + first
        return text + "".join(f" {sign} {body}" for sign, body in terms[1:])


@dataclass(frozen=True, eq=False)
class GeneratedPDE:
    """
    The equation F = 0 written as numerator = 0, where
    F(invariants) = numerator / w**cleared_power.
    """

    family: Family
    n: int
    poly: InvariantPoly
    numerator: sympy.Expr
    cleared_power: int

    @classmethod
    def from_form(cls, form, poly):
        if form.is_zero:
            raise EmptyEquation(f"{poly} vanishes identically on jets of dimension {poly.n}")
        jets = form.jets
        k = jets.detg_power(form.denom)
        if k is None:
            raise InvPDEError(f"unexpected denominator {form.denom.as_expr()} for an invariant")
        rational, radical = form.radical_parts()
        if not rational and k:
            numerator, power = radical, 2 * k - 1
        else:
            numerator, power = form.numer, 2 * k
        logger.debug(f"generated {poly.family.value} equation for {poly}: cleared w^{power}")
        return cls(poly.family, poly.n, poly, numerator.as_expr(), power)

    def expression(self):
        """F itself in normal form"""
        return (to_form(self.numerator, self.n) / to_form(W, self.n) ** self.cleared_power).to_expr()

    def residual(self, p):
        return eval_numeric(self.numerator, p)

    def restrict(self, bindings):
        return substitute(self.numerator, bindings, self.n)


def generate_euclidean_pde(F, n):
    if F.family is not Family.EUCLIDEAN:
        raise ValueError(f"expected a euclidean polynomial, got {F.family.value}")
    if F.n != n:
        raise ValueError(f"polynomial is over {F.n} invariants, dimension is {n}")
    if F.is_zero:
        raise EmptyEquation("F is the zero polynomial")
    value = F.evaluate(euclidean_trace_forms(n))
    if not isinstance(value, RationalForm):
        value = jet_ring(n).form(jet_ring(n).constant(value))
    return GeneratedPDE.from_form(value, F)


def euclidean_act(m, p, max_condition=DEFAULT_MAX_CONDITION):
    """
    Push a 2-jet through a Euclidean motion by re-graphing its quadratic
    Taylor graph.
    """
    if m.n != p.n:
        raise ValueError(f"motion of R^{m.n + 1} applied to a jet of dimension {p.n}")
    image = t2_linear(m.R, p.chart(), offset=m.t)
    return regraph(image[0], Taylor2Map(tuple(image[1:])), max_condition)


def numeric_shape_operator(p):
    g = np.eye(p.n) + np.outer(p.du, p.du)
    beta = p.d2u / np.sqrt(p.detg)
    return np.linalg.solve(g, beta)


def numeric_power_traces(p):
    """tau_1..tau_n of a numeric jet as traces of powers of its shape operator"""
    A = numeric_shape_operator(p)
    return [float(np.trace(np.linalg.matrix_power(A, m))) for m in range(1, p.n + 1)]


def invariants_at(p):
    taus = numeric_power_traces(p)
    return {"tau": taus, "sigma": newton_sigma(taus, p.n)}
