import copy
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import reduce

import numpy as np

from .conformal import (
    GeneratorTag,
    GradedGenerator,
    build_element,
    conformal_traces,
    moebius_act,
    moebius_jacobian,
    random_element,
)
from .euclidean import EuclideanMotion, GeneratedPDE, euclidean_act, numeric_power_traces
from .exceptions import ChartBoundary, DegenerateSample, NoInvariants, NonAdmissible, OutOfDomain, SuiteConfigError
from .expr import compile_numeric, eval_numeric
from .jet import JetPoint2, orientation_sign
from .utils import get_thread_cap

logger = logging.getLogger(__name__)

DISCARDED = (NonAdmissible, ChartBoundary, DegenerateSample)


class SurfaceKind(Enum):
    PLANE = "plane"
    SPHERE = "sphere"
    CYLINDER = "cylinder"
    CATENOID = "catenoid"


@dataclass(frozen=True)
class SurfaceCatalogEntry:
    """
    Closed-form graph hypersurfaces with hand-differentiated 2-jets.

    Spheres and cylinders are the lower halves through the origin,
    u = r - sqrt(r^2 - |x|^2) and u = r - sqrt(r^2 - x1^2). The catenoid
    (n = 2 only) is the upper half u = a arccosh(|x| / a).
    """

    kind: SurfaceKind
    n: int
    parameter: float = 1.0

    def __post_init__(self):
        kind = SurfaceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        if kind is SurfaceKind.CYLINDER and self.n < 2:
            raise ValueError("a cylinder needs n >= 2")
        if kind is SurfaceKind.CATENOID and self.n != 2:
            raise ValueError("the catenoid is only available for n = 2")
        if not self.parameter > 0:
            raise ValueError(f"parameter must be positive, got {self.parameter}")

    @classmethod
    def plane(cls, n):
        return cls(SurfaceKind.PLANE, n)

    @classmethod
    def sphere(cls, n, r=1.0):
        return cls(SurfaceKind.SPHERE, n, r)

    @classmethod
    def cylinder(cls, n, r=1.0):
        return cls(SurfaceKind.CYLINDER, n, r)

    @classmethod
    def catenoid(cls, a=1.0):
        return cls(SurfaceKind.CATENOID, 2, a)

    @property
    def name(self):
        if self.kind is SurfaceKind.PLANE:
            return "plane"
        return f"{self.kind.value}({self.parameter:g})"

    def _radicand(self, x):
        r = self.parameter
        if self.kind is SurfaceKind.SPHERE:
            value = r * r - float(x @ x)
        else:
            value = r * r - float(x[0] ** 2)
        if value <= 0:
            raise OutOfDomain(f"{x.tolist()} is outside the graph domain of {self.name}")
        return value

    def _catenoid_radius(self, x):
        rho = float(np.linalg.norm(x))
        if rho <= self.parameter:
            raise OutOfDomain(f"{x.tolist()} is outside the graph domain of {self.name}")
        return rho

    def height(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is SurfaceKind.PLANE:
            return 0.0
        if self.kind is SurfaceKind.CATENOID:
            a = self.parameter
            return a * math.acosh(self._catenoid_radius(x) / a)
        return self.parameter - math.sqrt(self._radicand(x))

    def jet_at(self, x0):
        x = np.asarray(x0, dtype=float)
        n = self.n
        if self.kind is SurfaceKind.PLANE:
            return JetPoint2(n, 0.0, x, np.zeros(n), np.zeros((n, n)))
        if self.kind is SurfaceKind.SPHERE:
            s = math.sqrt(self._radicand(x))
            return JetPoint2(n, self.parameter - s, x, x / s, np.eye(n) / s + np.outer(x, x) / s**3)
        if self.kind is SurfaceKind.CYLINDER:
            s = math.sqrt(self._radicand(x))
            du = np.zeros(n)
            du[0] = x[0] / s
            d2u = np.zeros((n, n))
            d2u[0, 0] = self.parameter**2 / s**3
            return JetPoint2(n, self.parameter - s, x, du, d2u)
        a = self.parameter
        rho = self._catenoid_radius(x)
        root = math.sqrt(rho * rho - a * a)
        first = a / root
        second = -a * rho / root**3
        radial = np.outer(x, x) / rho**2
        d2u = second * radial + first / rho * (np.eye(2) - radial)
        return JetPoint2(2, a * math.acosh(rho / a), x, first * x / rho, d2u)

    def sample_points(self, count, seed=0):
        rng = np.random.default_rng(seed)
        n, r = self.n, self.parameter
        points = []
        for _ in range(count):
            if self.kind is SurfaceKind.PLANE:
                point = rng.uniform(-1.0, 1.0, size=n)
            elif self.kind is SurfaceKind.SPHERE:
                direction = rng.normal(size=n)
                point = direction / np.linalg.norm(direction) * 0.7 * r * rng.uniform() ** (1 / n)
            elif self.kind is SurfaceKind.CYLINDER:
                point = rng.uniform(-1.0, 1.0, size=n)
                point[0] = rng.uniform(-0.7 * r, 0.7 * r)
            else:
                rho = rng.uniform(1.2 * r, 3.0 * r)
                angle = rng.uniform(0.0, 2 * math.pi)
                point = np.array([rho * math.cos(angle), rho * math.sin(angle)])
            points.append(point)
        return points


def random_jet(n, rng, scale=1.0):
    if scale < 0:
        raise ValueError(f"scale must be non-negative, got {scale}")
    u = rng.uniform(-scale, scale)
    x = rng.uniform(-scale, scale, size=n)
    du = rng.uniform(-scale, scale, size=n)
    a = rng.uniform(-scale, scale, size=(n, n))
    return JetPoint2(n, u, x, du, (a + a.T) / 2)


def sample_jet(n, seed, scale=1.0):
    return random_jet(n, np.random.default_rng(seed), scale)


def fd_jet(surface, x0, h):
    """Second-order central differences of the surface height at x0"""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    x0 = np.asarray(x0, dtype=float)
    n = surface.n
    f = surface.height
    steps = np.eye(n) * h
    center = f(x0)
    du = np.zeros(n)
    d2u = np.zeros((n, n))
    for i in range(n):
        forward, backward = f(x0 + steps[i]), f(x0 - steps[i])
        du[i] = (forward - backward) / (2 * h)
        d2u[i, i] = (forward - 2 * center + backward) / h**2
        for j in range(i):
            mixed = (
                f(x0 + steps[i] + steps[j])
                - f(x0 + steps[i] - steps[j])
                - f(x0 - steps[i] + steps[j])
                + f(x0 - steps[i] - steps[j])
            ) / (4 * h**2)
            d2u[i, j] = d2u[j, i] = mixed
    return JetPoint2(n, center, x0, du, d2u)


def solution_residual(pde, surface, samples, seed=0):
    """Largest |pde| over closed-form jets at sampled points of the surface"""
    if samples < 1:
        raise ValueError("at least one sample is required")
    expression = pde.numerator if isinstance(pde, GeneratedPDE) else pde
    return max(abs(eval_numeric(expression, surface.jet_at(x))) for x in surface.sample_points(samples, seed))


@dataclass(frozen=True)
class TrialReport:
    suite: str
    trials: int
    failures: int
    max_abs_error: float
    max_rel_error: float
    seed: int
    discarded: int

    @property
    def passed(self):
        return self.failures == 0

    def merge(self, other):
        if (self.suite, self.seed) != (other.suite, other.seed):
            raise ValueError("only reports of the same suite and seed can be merged")
        return replace(
            self,
            trials=self.trials + other.trials,
            failures=self.failures + other.failures,
            max_abs_error=max(self.max_abs_error, other.max_abs_error),
            max_rel_error=max(self.max_rel_error, other.max_rel_error),
            discarded=self.discarded + other.discarded,
        )


class Suite(Enum):
    EUCLIDEAN = "euclidean"
    CONFORMAL = "conformal"
    TRANSLATION = "translation"
    METRIC = "metric"


class InvarianceSuite:
    """
    Randomized checks of the group actions and their invariants.

    Each suite has a default config; a config passed in is merged over it.

    Config options:
        - trials: default number of trials.
        - tol: default tolerance on the per-trial error measure.
        - max_attempts: samples drawn per trial before the trial counts as
            failed; NonAdmissible, ChartBoundary and degenerate samples are
            discarded and redrawn.
        - jet_scale: sampled jet coordinates lie in [-jet_scale, jet_scale].
        - rotation_scale: operator norm bound of the skew generator of random
            rotations.
        - translation_scale: bound of random Euclidean translations.
        - bound: bound of the Moebius parameters |xi|, |log a| and |t|.
        - max_condition: condition number above which a re-graphed image is
            treated as vertical.
        - tau_floor: smallest tau°_2 accepted before ratios are formed.

    Error measures: euclidean compares tau_m(p') with s^m tau_m(p), s the
    orientation sign, relative to 1 + |tau_m|; conformal compares the ratios
    tau°_h^2 / tau°_2^h, the scaling tau°_h(p') = (s c)^h tau°_h(p) with a
    single c, and c with the inverse conformal factor of the point map;
    translation and metric use absolute errors.
    """

    euclidean_config = {
        "trials": 1000,
        "tol": 1e-9,
        "max_attempts": 10,
        "jet_scale": 1.0,
        "rotation_scale": 1.0,
        "translation_scale": 1.0,
        "max_condition": 1e2,
    }

    conformal_config = {
        "trials": 500,
        "tol": 1e-7,
        "max_attempts": 10,
        "jet_scale": 0.5,
        "rotation_scale": 1.0,
        "bound": 0.3,
        "max_condition": 1e2,
        "tau_floor": 1e-3,
    }

    translation_config = {
        "trials": 200,
        "tol": 1e-10,
        "max_attempts": 10,
        "jet_scale": 1.0,
        "bound": 0.3,
        "max_condition": 1e2,
    }

    metric_config = {
        "trials": 500,
        "tol": 1e-12,
        "max_attempts": 1,
        "rotation_scale": 1.0,
        "bound": 0.3,
    }

    def __init__(self, suite, n, config=None):
        self.suite = Suite(suite)
        self.n = int(n)
        if self.n < 1:
            raise SuiteConfigError(f"dimension must be positive, got {n}")
        if self.suite is Suite.CONFORMAL and self.n < 2:
            raise NoInvariants("conformal invariants need n >= 2")

        self.config = copy.deepcopy(getattr(self, f"{self.suite.value}_config"))
        config = copy.deepcopy(config)
        if config:
            unknown = set(config) - set(self.config)
            if unknown:
                raise SuiteConfigError(f"unknown options for the {self.suite.value} suite: {sorted(unknown)}")
            self.config.update(config)
        if self.config["max_attempts"] < 1:
            raise SuiteConfigError("max_attempts must be at least 1")
        logger.info(f"Running the {self.suite.value} suite for n={self.n} with the following config:")
        logger.info(self.config)

        self.trial_methods = {
            Suite.EUCLIDEAN: self._euclidean_trial,
            Suite.CONFORMAL: self._conformal_trial,
            Suite.TRANSLATION: self._translation_trial,
            Suite.METRIC: self._metric_trial,
        }
        self._invariants = None

    def _prepare(self):
        if self.suite is Suite.EUCLIDEAN:
            self._invariants = numeric_power_traces
        elif self.suite is Suite.CONFORMAL:
            compiled = [compile_numeric(t, self.n) for t in conformal_traces(self.n)]
            self._invariants = lambda p: [invariant(p) for invariant in compiled]

    def _evaluate(self, p):
        return self._invariants(p)

    def run(self, trials=None, tol=None, seed=0):
        trials = self.config["trials"] if trials is None else trials
        tol = self.config["tol"] if tol is None else tol
        if trials < 1:
            raise ValueError("at least one trial is required")
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self._prepare()

        workers = min(get_thread_cap(), trials)
        with ThreadPoolExecutor(max_workers=workers) as executor:
            reports = list(executor.map(lambda index: self._run_trial(index, tol, seed), range(trials)))
        report = reduce(TrialReport.merge, reports)
        logger.info(
            f"{self.suite.value} suite finished: {report.failures} of {report.trials} trials failed, "
            f"{report.discarded} samples discarded, max relative error {report.max_rel_error:.3g}"
        )
        return report

    def _run_trial(self, index, tol, seed):
        trial = self.trial_methods[self.suite]
        discarded = 0
        for attempt in range(self.config["max_attempts"]):
            rng = np.random.default_rng([seed, index, attempt])
            try:
                errors = trial(rng)
            except DISCARDED as e:
                discarded += 1
                logger.debug(f"trial {index} attempt {attempt} discarded: {e}")
                continue
            max_abs = max(error for error, _ in errors)
            max_rel = max(relative for _, relative in errors)
            return TrialReport(self.suite.value, 1, int(max_rel > tol), max_abs, max_rel, seed, discarded)
        logger.warning(f"trial {index} discarded all {discarded} samples and counts as failed")
        return TrialReport(self.suite.value, 1, 1, 0.0, 0.0, seed, discarded)

    def _euclidean_trial(self, rng):
        config = self.config
        p = random_jet(self.n, rng, config["jet_scale"])
        motion = EuclideanMotion.random(self.n, rng, config["rotation_scale"], config["translation_scale"])
        image = euclidean_act(motion, p, config["max_condition"])
        sign = orientation_sign(motion.R, p.du)
        errors = []
        for m, (before, after) in enumerate(zip(self._evaluate(p), self._evaluate(image)), start=1):
            expected = sign**m * before
            error = abs(after - expected)
            errors.append((error, error / (1 + abs(expected))))
        return errors

    def _conformal_trial(self, rng):
        config = self.config
        p = random_jet(self.n, rng, config["jet_scale"])
        element = random_element(self.n, rng, config["bound"], config["rotation_scale"])
        before = self._evaluate(p)
        if before[0] < config["tau_floor"]:
            raise DegenerateSample(f"tau°_2 = {before[0]:.3g} is below the floor")
        image = moebius_act(element, p, config["max_condition"])
        after = self._evaluate(image)
        if after[0] <= 0:
            raise DegenerateSample(f"tau°_2 = {after[0]:.3g} at the image")

        jacobian = moebius_jacobian(element, p.u, p.x)
        sign = orientation_sign(jacobian, p.du)
        factor = math.sqrt(after[0] / before[0])
        conformal_factor = abs(np.linalg.det(jacobian)) ** (1 / (self.n + 1))

        errors = []
        for h, (tau, tau_image) in enumerate(zip(before, after), start=2):
            ratio = tau**2 / before[0] ** h
            error = abs(tau_image**2 / after[0] ** h - ratio)
            errors.append((error, error / (1 + abs(ratio))))
            expected = (sign * factor) ** h * tau
            error = abs(tau_image - expected)
            errors.append((error, error / (1 + abs(expected))))
        error = abs(factor - 1 / conformal_factor)
        errors.append((error, error / (1 + factor)))
        return errors

    def _translation_trial(self, rng):
        config = self.config
        n = self.n
        scale = config["jet_scale"]
        a = rng.uniform(-scale, scale, size=(n, n))
        p = JetPoint2(n, 0.0, np.zeros(n), np.zeros(n), (a + a.T) / 2)

        t = float(rng.uniform(-config["bound"], config["bound"]))
        translated = moebius_act(build_element(GradedGenerator(GeneratorTag.A_E0, t, n)), p, config["max_condition"])
        expected = p.d2u - t * np.eye(n)
        error = max(
            float(np.abs(translated.d2u - expected).max()),
            abs(translated.u),
            float(np.abs(translated.x).max()),
            float(np.abs(translated.du).max()),
        )

        xi = np.zeros(n + 1)
        direction = rng.normal(size=n)
        xi[1:] = direction / np.linalg.norm(direction) * config["bound"] * rng.uniform()
        fixed = moebius_act(build_element(GradedGenerator(GeneratorTag.G_PLUS, xi)), p, config["max_condition"])
        kernel_error = float(np.abs(fixed.d2u - p.d2u).max())
        return [(error, error), (kernel_error, kernel_error)]

    def _metric_trial(self, rng):
        element = random_element(self.n, rng, self.config["bound"], self.config["rotation_scale"])
        defect = element.metric_defect()
        return [(defect, defect)]


def run_invariance_suite(group, n, trials=None, tol=None, seed=0, config=None):
    return InvarianceSuite(group, n, config).run(trials, tol, seed)
