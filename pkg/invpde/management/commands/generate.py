import json

import sympy
from django.core.management.base import BaseCommand, CommandError

from invpde.cli import parse_poly
from invpde.conformal import generate_conformal_pde
from invpde.euclidean import Family, generate_euclidean_pde
from invpde.exceptions import InvPDEError
from invpde.expr import MAX_DIMENSION, W, emit, jet_symbol, to_node
from invpde.utils import configure_logging

GENERATORS = {
    Family.EUCLIDEAN: generate_euclidean_pde,
    Family.CONFORMAL: generate_conformal_pde,
}


def collect_second_order(numerator, n):
    """Group the numerator by the second derivatives u_ij"""
    hessian = [jet_symbol(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
    return sympy.collect(sympy.expand(numerator), hessian)


class Command(BaseCommand):
    help = "Generate the invariant second-order PDE F(invariants) = 0 with its denominator cleared"
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument(
            "--group",
            dest="group",
            required=True,
            choices=[family.value for family in Family],
            help="Transformation group the equation is invariant under",
        )
        parser.add_argument("-n", dest="n", type=int, required=True, help="Number of independent variables")
        parser.add_argument(
            "--poly",
            dest="poly",
            required=True,
            help='Polynomial in t1..tn (euclidean) or c2..cn (conformal), e.g. "1/2*t1^2 - 1/2*t2"',
        )
        parser.add_argument(
            "--format",
            dest="format",
            default="text",
            choices=["text", "latex", "json"],
            help="Output format",
        )

    def handle(self, *args, **options):
        configure_logging(options["verbosity"])
        family = Family(options["group"])
        n = options["n"]
        if not 1 <= n <= MAX_DIMENSION:
            raise CommandError(f"n must be between 1 and {MAX_DIMENSION}", returncode=2)

        try:
            poly = parse_poly(options["poly"], family, n)
            pde = GENERATORS[family](poly, n)
        except (InvPDEError, ValueError) as e:
            raise CommandError(f"{type(e).__name__}: {e}", returncode=2)

        output_format = options["format"]
        if output_format == "json":
            document = {
                "group": family.value,
                "n": n,
                "poly": str(poly),
                "numerator": to_node(pde.numerator),
                "cleared_power": pde.cleared_power,
            }
            self.stdout.write(json.dumps(document))
            return

        numerator = emit(collect_second_order(pde.numerator, n), output_format)
        factor = emit(W**pde.cleared_power, output_format)
        detg = emit(sympy.Add(1, *(jet_symbol(i) ** 2 for i in range(1, n + 1))), output_format)
        self.stdout.write(f"{numerator} = 0")
        comment = "%" if output_format == "latex" else "#"
        self.stdout.write(f"{comment} cleared factor {factor}, w^2 = {detg}")
