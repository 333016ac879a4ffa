import json
from io import StringIO
from unittest.mock import patch

import sympy
from django.test import SimpleTestCase

from invpde.cli import USAGE, main, parse_poly, tokenize
from invpde.euclidean import Family, InvariantPoly
from invpde.exceptions import NotHomogeneous, ParseError
from invpde.harness import TrialReport

R = sympy.Rational


class TestParsePoly(SimpleTestCase):
    def test_single_symbol(self):
        self.assertEqual(parse_poly("t1", "euclidean", 2), InvariantPoly(Family.EUCLIDEAN, 2, {(1, 0): 1}))

    def test_monge_ampere(self):
        poly = parse_poly("1/2*t1^2 - 1/2*t2", "euclidean", 2)
        self.assertEqual(poly.coefficients, {(2, 0): R(1, 2), (0, 1): R(-1, 2)})
        self.assertEqual(str(poly), "1/2*t1^2 - 1/2*t2")

    def test_dimension_is_inferred(self):
        self.assertEqual(parse_poly("t3", "euclidean").n, 3)
        self.assertEqual(parse_poly("c2^3 - 6*c3^2", "conformal").n, 3)
        self.assertEqual(parse_poly("3", "conformal").n, 2)

    def test_products_and_repeats(self):
        self.assertEqual(parse_poly("2*t1*t1 + t1^2", "euclidean", 2).coefficients, {(2, 0): 3})
        self.assertTrue(parse_poly("-t1 + t1", "euclidean", 1).is_zero)

    def test_conformal_must_be_homogeneous(self):
        with self.assertRaises(NotHomogeneous):
            parse_poly("c2 + c3", "conformal")

    def test_syntax_errors(self):
        cases = [
            ("t1 +", 4),
            ("t1 t2", 3),
            ("t1 & t2", 3),
            ("t0", 0),
            ("x1", 0),
            ("t1^1/2", 3),
            ("1/0*t1", 0),
            ("", 0),
        ]
        for spec, position in cases:
            with self.assertRaises(ParseError) as cm:
                parse_poly(spec, "euclidean", 2)
            self.assertEqual(cm.exception.position, position, spec)

    def test_unknown_conformal_symbol(self):
        with self.assertRaisesMessage(ParseError, "c2, c3, ..."):
            parse_poly("c1", "conformal", 3)

    def test_symbol_beyond_dimension(self):
        with self.assertRaisesMessage(ParseError, "t3 exceeds n = 2"):
            parse_poly("t1 + t3", "euclidean", 2)

    def test_tokenize(self):
        self.assertEqual([t.kind for t in tokenize(" 1/2 * t1^2")], ["number", "op", "symbol", "op", "number"])


@patch("sys.stderr", new_callable=StringIO)
@patch("sys.stdout", new_callable=StringIO)
class TestMain(SimpleTestCase):
    def test_usage(self, stdout, stderr):
        self.assertEqual(main([]), 2)
        self.assertEqual(main(["solve"]), 2)
        self.assertEqual(stderr.getvalue(), USAGE * 2)

    def test_generate(self, stdout, stderr):
        self.assertEqual(main(["generate", "--group", "euclidean", "-n", "2", "--poly", "t1"]), 0)
        equation, comment = stdout.getvalue().splitlines()
        self.assertTrue(equation.endswith(" = 0"))
        self.assertTrue(comment.startswith("# cleared factor"))

    def test_bad_flags(self, stdout, stderr):
        self.assertEqual(main(["generate", "--group", "affine", "-n", "2", "--poly", "t1"]), 2)
        self.assertEqual(main(["verify", "--suite", "metric", "-n", "2", "--trials", "0"]), 2)
        self.assertIn("invalid choice", stderr.getvalue())

    def test_invalid_polynomial(self, stdout, stderr):
        self.assertEqual(main(["generate", "--group", "conformal", "-n", "3", "--poly", "c2 + c3"]), 2)
        self.assertIn("NotHomogeneous", stderr.getvalue())

    def test_verify(self, stdout, stderr):
        self.assertEqual(main(["verify", "--suite", "metric", "-n", "2", "--trials", "5", "--seed", "4"]), 0)
        report = json.loads(stdout.getvalue())
        self.assertEqual((report["suite"], report["trials"], report["failures"], report["seed"]), ("metric", 5, 0, 4))

    def test_verify_failure(self, stdout, stderr):
        failed = TrialReport("euclidean", 10, 2, 1e-3, 1e-3, 0, 0)
        with patch("invpde.management.commands.verify.InvarianceSuite") as suite:
            suite.return_value.run.return_value = failed
            self.assertEqual(main(["verify", "--suite", "euclidean", "-n", "2"]), 1)
        suite.assert_called_once_with("euclidean", 2)
        suite.return_value.run.assert_called_once_with(None, None, 0)
        self.assertIn("2 of 10 trials failed", stderr.getvalue())
