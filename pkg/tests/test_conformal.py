import numpy as np
import sympy
from django.test import SimpleTestCase
from factory import random as factory_random

from invpde.conformal import (
    GeneratorTag,
    GradedGenerator,
    MinkowskiVector,
    MoebiusElement,
    a_e0_matrix,
    build_element,
    conformal_invariants_at,
    conformal_shape,
    conformal_sigmas,
    conformal_trace_forms,
    conformal_traces,
    embed,
    generate_conformal_pde,
    inner,
    mean_curvature_forms,
    minkowski_metric,
    moebius_act,
    moebius_jacobian,
    numeric_conformal_shape,
    project,
    random_element,
    rotation_in_v,
)
from invpde.euclidean import Family, InvariantPoly
from invpde.exceptions import (
    ChartBoundary,
    EmptyEquation,
    NoInvariants,
    NonAdmissible,
    NotHomogeneous,
    NotMoebius,
    NotOnCone,
    NotRotation,
)
from invpde.expr import jet_symbol, normalize, substitute
from invpde.jet import JetPoint2

from .factories import FiberJetFactory, JetPointFactory, RationalGeneratorFactory, rational

R = sympy.Rational
u_1, u_2 = jet_symbol(1), jet_symbol(2)
u_11, u_12, u_22 = jet_symbol(1, 1), jet_symbol(1, 2), jet_symbol(2, 2)

FLAT = {u_1: 0, u_2: 0}
PYTHAGOREAN = [[R(3, 5), R(-4, 5)], [R(4, 5), R(3, 5)]]


def conformal_poly(n, coefficients):
    return InvariantPoly(Family.CONFORMAL, n, coefficients)


def generator(tag, value, n=None):
    return build_element(GradedGenerator(tag, value, n))


class TestMinkowskiModel(SimpleTestCase):
    def test_metric(self):
        p, q, e0 = (MinkowskiVector.basis_vector(2, label) for label in ("p", "q", "e0"))
        self.assertEqual(inner(p, p), 0)
        self.assertEqual(inner(p, q), 1)
        self.assertEqual(inner(e0, e0), 1)
        self.assertEqual(minkowski_metric(1).tolist(), [[0, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 0]])

    def test_embed(self):
        self.assertEqual(embed(0, [0, 0]), MinkowskiVector.basis_vector(2, "p"))
        self.assertEqual(embed(1, [0, 0]).components.tolist(), [1, 1, 0, 0, R(-1, 2)])
        self.assertEqual(embed(1, [0, 0]).basis, "p,e0,e1,e2,q")

    def test_embedded_points_are_null(self):
        factory_random.reseed_random("test_conformal")
        for _ in range(50):
            v = embed(rational(), [rational(), rational(), rational()])
            self.assertEqual(v.inner(v), 0)
        v = embed(0.3, [0.1, -2.5])
        self.assertAlmostEqual(v.inner(v), 0.0, delta=1e-12)

    def test_project(self):
        u, x = project(MinkowskiVector([2, 2, 0, 0, -1]))
        self.assertEqual((u, list(x)), (1, [0, 0]))

    def test_project_round_trip(self):
        factory_random.reseed_random("test_conformal")
        for _ in range(50):
            u, x = rational(), [rational(), rational()]
            projected_u, projected_x = project(embed(u, x))
            self.assertEqual((projected_u, list(projected_x)), (u, x))

    def test_project_errors(self):
        with self.assertRaises(ChartBoundary):
            project(MinkowskiVector.basis_vector(2, "q"))
        with self.assertRaises(NotOnCone):
            project(MinkowskiVector([1, 1, 0, 0, 0]))
        with self.assertRaises(ChartBoundary):
            project(MinkowskiVector([1e-14, 1.0, 0.0, 0.0, 0.0]))

    def test_short_vector(self):
        with self.assertRaises(ValueError):
            MinkowskiVector([1, 0, 0])


class TestBuildElement(SimpleTestCase):
    def setUp(self):
        factory_random.reseed_random("test_conformal")

    def test_a_e0_action_on_basis(self):
        t = R(1, 3)
        M = MoebiusElement(a_e0_matrix(t, 2))
        image = {
            label: M.apply(MinkowskiVector.basis_vector(2, label)).components.tolist()
            for label in ("p", "e0", "e1", "q")
        }
        self.assertEqual(image["q"], [R(-1, 18), R(1, 3), 0, 0, 1])
        self.assertEqual(image["e0"], [-t, 1, 0, 0, 0])
        self.assertEqual(image["p"], [1, 0, 0, 0, 0])
        self.assertEqual(image["e1"], [0, 0, 1, 0, 0])

    def test_vector_group_law(self):
        xi = [R(1, 2), R(-3, 4), 2]
        product = generator(GeneratorTag.G_MINUS, xi) @ generator(GeneratorTag.G_MINUS, [-v for v in xi])
        self.assertTrue(np.array_equal(product.matrix, np.eye(5, dtype=int)))

    def test_rational_words_preserve_the_metric(self):
        for _ in range(20):
            word = RationalGeneratorFactory.create_batch(4, dimension=2)
            word.append(GradedGenerator(GeneratorTag.ROTATION, rotation_in_v(PYTHAGOREAN)))
            M = MoebiusElement.from_word(word)
            self.assertTrue(M.exact)
            self.assertEqual(M.metric_defect(), 0.0)

    def test_random_elements_preserve_the_metric(self):
        rng = np.random.default_rng(12)
        for n in (1, 2, 3):
            for _ in range(20):
                self.assertTrue(random_element(n, rng).preserves_metric(tol=1e-12))

    def test_not_rotation(self):
        with self.assertRaises(NotRotation):
            generator(GeneratorTag.ROTATION, np.diag([1.0, 2.0, 1.0]))
        with self.assertRaises(NotRotation):
            generator(GeneratorTag.ROTATION, np.diag([1, 1, -1]))

    def test_invalid_generators(self):
        with self.assertRaises(ValueError):
            GradedGenerator(GeneratorTag.DILATION, 0, 2)
        with self.assertRaises(ValueError):
            GradedGenerator(GeneratorTag.A_E0, R(1, 2))
        with self.assertRaises(ValueError):
            GradedGenerator(GeneratorTag.G_PLUS, [0, 0], 2)
        with self.assertRaises(ValueError):
            MoebiusElement.from_word([])

    def test_not_moebius(self):
        with self.assertRaises(NotMoebius):
            MoebiusElement.from_matrix(2 * np.eye(5))
        with self.assertRaises(NotMoebius):
            MoebiusElement(np.eye(3))

    def test_reflection_warns(self):
        matrix = np.eye(5, dtype=int)
        matrix[2, 2] = -1
        with self.assertWarns(UserWarning):
            MoebiusElement.from_matrix(matrix)

    def test_inverse(self):
        M = random_element(2, np.random.default_rng(13))
        np.testing.assert_allclose((M @ M.inverse()).matrix, np.eye(5), atol=1e-12)
        exact = MoebiusElement.from_word(RationalGeneratorFactory.create_batch(4, dimension=3))
        self.assertTrue(np.array_equal((exact.inverse() @ exact).matrix, np.eye(6, dtype=int)))


class TestMoebiusAct(SimpleTestCase):
    def setUp(self):
        factory_random.reseed_random("test_conformal")

    def test_identity(self):
        p = JetPointFactory(n=2, scale=0.5)
        self.assertTrue(moebius_act(MoebiusElement.identity(2), p).allclose(p, atol=1e-12))

    def test_a_e0_on_the_fiducial_sphere(self):
        for t in (R(1, 3), R(-1, 4), 0.2):
            image = moebius_act(generator(GeneratorTag.A_E0, t, 2), JetPoint2.zero(2))
            self.assertTrue(image.allclose(JetPoint2(2, 0.0, [0, 0], [0, 0], -float(t) * np.eye(2)), atol=1e-12))

    def test_a_e0_translates_the_fibre(self):
        for _ in range(50):
            p = FiberJetFactory(n=3)
            t = float(factory_random.randgen.uniform(-0.3, 0.3))
            image = moebius_act(generator(GeneratorTag.A_E0, t, 3), p)
            np.testing.assert_allclose(image.d2u, p.d2u - t * np.eye(3), atol=1e-10)
            np.testing.assert_allclose(image.du, np.zeros(3), atol=1e-12)

    def test_g_plus_acts_trivially_on_the_fibre(self):
        for _ in range(50):
            p = FiberJetFactory(n=2)
            xi = [0.0, *factory_random.randgen.sample([-0.3, -0.1, 0.2, 0.25], 2)]
            image = moebius_act(generator(GeneratorTag.G_PLUS, xi), p)
            np.testing.assert_allclose(image.d2u, p.d2u, atol=1e-10)

    def test_rotation(self):
        B = np.array(PYTHAGOREAN, dtype=float)
        p = JetPoint2(2, 0.0, [0, 0], [0, 0], [[1.0, 0.5], [0.5, -2.0]])
        image = moebius_act(generator(GeneratorTag.ROTATION, rotation_in_v(PYTHAGOREAN)), p)
        np.testing.assert_allclose(image.d2u, B @ p.d2u @ B.T, atol=1e-12)
        image = moebius_act(generator(GeneratorTag.ROTATION, rotation_in_v(B.T)), p)
        np.testing.assert_allclose(image.d2u, B.T @ p.d2u @ B, atol=1e-12)

    def test_chart_boundary(self):
        with self.assertRaises(ChartBoundary):
            moebius_act(generator(GeneratorTag.G_PLUS, [-2, 0, 0]), JetPoint2(2, 1.0, [0, 0], [0, 0], np.zeros((2, 2))))

    def test_vertical_tangent(self):
        quarter_turn = [[0, -1], [1, 0]]
        with self.assertRaises(NonAdmissible):
            moebius_act(generator(GeneratorTag.ROTATION, quarter_turn), JetPoint2.zero(1))

    def test_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            moebius_act(MoebiusElement.identity(3), JetPoint2.zero(2))

    def test_jacobian_of_identity(self):
        np.testing.assert_allclose(moebius_jacobian(MoebiusElement.identity(2), 0.3, [0.1, -0.2]), np.eye(3))

    def test_group_action(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            p = JetPointFactory(n=2, scale=0.3)
            m1, m2 = (random_element(2, rng, bound=0.2, rotation_scale=0.3) for _ in range(2))
            two_steps = moebius_act(m2, moebius_act(m1, p))
            self.assertTrue(two_steps.allclose(moebius_act(m2 @ m1, p), atol=1e-8))


class TestConformalShape(SimpleTestCase):
    def test_umbilic(self):
        bindings = {**FLAT, u_11: R(3, 2), u_12: 0, u_22: R(3, 2)}
        self.assertEqual(conformal_shape(2).applyfunc(lambda e: substitute(e, bindings, 2)), sympy.zeros(2, 2))

    def test_already_traceless(self):
        bindings = {**FLAT, u_11: 1, u_12: 0, u_22: -1}
        self.assertEqual(conformal_shape(2).applyfunc(lambda e: substitute(e, bindings, 2)), sympy.diag(1, -1))

    def test_traceless(self):
        for n in (2, 3):
            A = conformal_shape(n)
            self.assertEqual(normalize(A.trace(), n), 0)

    def test_traces_at_flat_gauge(self):
        expected = normalize(R(1, 2) * (u_11 - u_22) ** 2 + 2 * u_12**2, 2)
        self.assertEqual(substitute(conformal_traces(2)[0], FLAT, 2), expected)

    def test_no_invariants_on_curves(self):
        with self.assertRaises(NoInvariants):
            conformal_traces(1)

    def test_gauss_minus_mean_squared(self):
        H, sigmas = mean_curvature_forms(2)
        self.assertEqual(conformal_trace_forms(2)[0] * R(-1, 2), sigmas[1] - H * H)

    def test_symmetric_functions_in_three_dimensions(self):
        H, (_, sigma_2, K) = mean_curvature_forms(3)
        sigma_2_traceless, sigma_3_traceless = conformal_sigmas(3)
        self.assertEqual(sigma_2_traceless, (3 * H * H - sigma_2).to_expr())
        self.assertEqual(sigma_3_traceless, (2 * H**3 - H * sigma_2 + K).to_expr())

    def test_numeric_cross_check(self):
        factory_random.reseed_random("test_conformal")
        for n in (2, 3):
            for _ in range(20):
                p = JetPointFactory(n=n)
                A = numeric_conformal_shape(p)
                expected = [np.trace(np.linalg.matrix_power(A, h)) for h in range(2, n + 1)]
                np.testing.assert_allclose(conformal_invariants_at(p)["tau"], expected, rtol=1e-9, atol=1e-9)


class TestGenerateConformalPDE(SimpleTestCase):
    def test_umbilic_system(self):
        pde = generate_conformal_pde(conformal_poly(2, {(1,): 1}), 2)
        self.assertEqual(pde.cleared_power, 6)
        expected = normalize(2 * ((u_11 - u_22) / 2) ** 2 + 2 * u_12**2, 2)
        self.assertEqual(pde.restrict(FLAT), expected)

    def test_zero_set_is_the_umbilic_locus(self):
        pde = generate_conformal_pde(conformal_poly(2, {(1,): 1}), 2)
        self.assertEqual(pde.restrict({**FLAT, u_11: R(3, 2), u_12: 0, u_22: R(3, 2)}), 0)
        self.assertGreater(pde.restrict({**FLAT, u_11: R(3, 2), u_12: R(1, 4), u_22: R(3, 2)}), 0)
        self.assertGreater(pde.restrict({**FLAT, u_11: 1, u_12: 0, u_22: R(3, 2)}), 0)

    def test_three_dimensional_equations(self):
        umbilic = JetPoint2(3, 0.0, np.zeros(3), np.zeros(3), 2 * np.eye(3))
        generic = JetPoint2(3, 0.0, np.zeros(3), np.zeros(3), np.diag([1.0, 2.0, 4.0]))
        for coefficients in ({(0, 1): 1}, {(1, 0): 1}, {(0, 2): 1, (3, 0): 1}):
            pde = generate_conformal_pde(conformal_poly(3, coefficients), 3)
            self.assertAlmostEqual(pde.residual(umbilic), 0.0, delta=1e-9)
            self.assertNotAlmostEqual(pde.residual(generic), 0.0)

    def test_not_homogeneous(self):
        with self.assertRaises(NotHomogeneous):
            conformal_poly(2, {(1,): 1, (0,): 1})

    def test_empty_equation(self):
        with self.assertRaises(EmptyEquation):
            generate_conformal_pde(conformal_poly(2, {}), 2)

    def test_family_check(self):
        with self.assertRaises(ValueError):
            generate_conformal_pde(InvariantPoly(Family.EUCLIDEAN, 2, {(1, 0): 1}), 2)

    def test_umbilic_zero_set_is_invariant(self):
        pde = generate_conformal_pde(conformal_poly(2, {(1,): 1}), 2)
        p = JetPoint2(2, 0.0, [0.0, 0.0], [0.0, 0.0], 0.5 * np.eye(2))
        self.assertLessEqual(abs(pde.residual(p)), 1e-12)
        rng = np.random.default_rng(15)
        for _ in range(20):
            image = moebius_act(random_element(2, rng, bound=0.2, rotation_scale=0.3), p)
            self.assertLessEqual(abs(pde.residual(image)), 1e-8)

    def test_weight_zero_ratios_are_invariant(self):
        factory_random.reseed_random("test_conformal")
        rng = np.random.default_rng(16)
        for _ in range(20):
            p = JetPointFactory(n=3, scale=0.5)
            before = conformal_invariants_at(p)
            after = conformal_invariants_at(moebius_act(random_element(3, rng, bound=0.2, rotation_scale=0.3), p))
            np.testing.assert_allclose(after["ratio"], before["ratio"], rtol=1e-7, atol=1e-9)
