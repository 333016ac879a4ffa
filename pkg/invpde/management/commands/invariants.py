import json

from django.core.management.base import BaseCommand, CommandError

from invpde.conformal import conformal_invariants_at, moebius_act
from invpde.euclidean import Family, euclidean_act, invariants_at
from invpde.exceptions import ChartBoundary, InvPDEError, NonAdmissible
from invpde.serializers import EuclideanMotionSerializer, JetSerializer, MoebiusElementSerializer
from invpde.utils import configure_logging

INVARIANTS = {
    Family.EUCLIDEAN: invariants_at,
    Family.CONFORMAL: conformal_invariants_at,
}

ACTIONS = {
    Family.EUCLIDEAN: (EuclideanMotionSerializer, euclidean_act),
    Family.CONFORMAL: (MoebiusElementSerializer, moebius_act),
}


class Command(BaseCommand):
    help = "Evaluate the differential invariants of a 2-jet, optionally also at its image under a group element"
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument(
            "--group",
            dest="group",
            required=True,
            choices=[family.value for family in Family],
            help="Transformation group whose invariants are evaluated",
        )
        parser.add_argument("-n", dest="n", type=int, required=True, help="Number of independent variables")
        parser.add_argument(
            "--jet",
            dest="jet",
            required=True,
            metavar="FILE",
            help='JSON file with {"n", "u", "x", "du", "d2u"}',
        )
        parser.add_argument(
            "--element",
            dest="element",
            metavar="FILE",
            help="JSON file with a Euclidean motion {R, t} or a Moebius element {n, matrix | word}",
        )

    def _load(self, path):
        try:
            with open(path) as f:
                return json.load(f)
        except (OSError, ValueError) as e:
            raise CommandError(f"Cannot read {path}: {e}", returncode=2)

    def _validated(self, serializer):
        if not serializer.is_valid():
            raise CommandError(f"Invalid input: {json.dumps(serializer.errors)}", returncode=2)
        return serializer.save()

    def _invariants(self, family, p):
        try:
            return INVARIANTS[family](p)
        except InvPDEError as e:
            raise CommandError(f"{type(e).__name__}: {e}", returncode=2)

    def handle(self, *args, **options):
        configure_logging(options["verbosity"])
        family = Family(options["group"])
        n = options["n"]

        p = self._validated(JetSerializer(data=self._load(options["jet"])))
        if p.n != n:
            raise CommandError(f"Jet has dimension {p.n}, expected {n}", returncode=2)
        result = {"group": family.value, "n": n, "invariants": self._invariants(family, p)}

        if options["element"]:
            serializer_class, act = ACTIONS[family]
            data = self._load(options["element"])
            element = self._validated(serializer_class(data=data))
            if element.n != n:
                raise CommandError(f"Element acts in dimension {element.n}, expected {n}", returncode=2)
            try:
                image = act(element, p)
            except (NonAdmissible, ChartBoundary) as e:
                raise CommandError(f"{type(e).__name__}: {e}", returncode=1)
            result["image"] = {
                "jet": JetSerializer(image).data,
                "invariants": self._invariants(family, image),
            }

        self.stdout.write(json.dumps(result, default=float))
