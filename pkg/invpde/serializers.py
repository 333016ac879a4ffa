import numpy as np
from rest_framework import serializers

from .conformal import GeneratorTag, GradedGenerator, MinkowskiVector, MoebiusElement, basis_labels
from .euclidean import EuclideanMotion
from .exceptions import InvPDEError, NotSymmetric
from .expr import MAX_DIMENSION
from .jet import JetPoint2, check_symmetric


def _matrix_field(**kwargs):
    return serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), **kwargs)


def _vector_field(**kwargs):
    return serializers.ListField(child=serializers.FloatField(), **kwargs)


def _check_finite(values, name):
    if not np.isfinite(np.asarray(values, dtype=float)).all():
        raise serializers.ValidationError({name: "Entries must be finite."})


class JetSerializer(serializers.Serializer):
    n = serializers.IntegerField(min_value=1, max_value=MAX_DIMENSION)
    u = serializers.FloatField()
    x = _vector_field()
    du = _vector_field()
    d2u = _matrix_field()

    def validate(self, attrs):
        n = attrs["n"]
        for name in ("x", "du"):
            if len(attrs[name]) != n:
                raise serializers.ValidationError({name: f"Expected {n} entries."})
        if len(attrs["d2u"]) != n or any(len(row) != n for row in attrs["d2u"]):
            raise serializers.ValidationError({"d2u": f"Expected a {n}x{n} matrix."})
        for name in ("u", "x", "du", "d2u"):
            _check_finite(attrs[name], name)
        try:
            attrs["d2u"] = check_symmetric(attrs["d2u"])
        except NotSymmetric as e:
            raise serializers.ValidationError({"d2u": str(e)})
        return attrs

    def create(self, validated_data):
        return JetPoint2(**validated_data)


class TrialReportSerializer(serializers.Serializer):
    suite = serializers.CharField()
    trials = serializers.IntegerField()
    failures = serializers.IntegerField()
    max_abs_error = serializers.FloatField()
    max_rel_error = serializers.FloatField()
    seed = serializers.IntegerField()
    discarded = serializers.IntegerField()


class MinkowskiVectorSerializer(serializers.Serializer):
    basis = serializers.CharField()
    v = _vector_field(source="components", min_length=4)

    def validate(self, attrs):
        expected = ",".join(basis_labels(len(attrs["components"]) - 3))
        if attrs["basis"].replace(" ", "") != expected:
            raise serializers.ValidationError({"basis": f"Expected {expected}."})
        return attrs

    def create(self, validated_data):
        return MinkowskiVector(validated_data["components"])


class EuclideanMotionSerializer(serializers.Serializer):
    R = _matrix_field()
    t = _vector_field()

    def validate(self, attrs):
        try:
            attrs["motion"] = EuclideanMotion(attrs["R"], attrs["t"])
        except (InvPDEError, ValueError) as e:
            raise serializers.ValidationError(str(e))
        return attrs

    def create(self, validated_data):
        return validated_data["motion"]


class GeneratorSerializer(serializers.Serializer):
    parameters = {
        GeneratorTag.G_MINUS.value: "xi",
        GeneratorTag.G_PLUS.value: "xi",
        GeneratorTag.ROTATION.value: "B",
        GeneratorTag.DILATION.value: "a",
        GeneratorTag.A_E0.value: "t",
    }

    tag = serializers.ChoiceField(choices=[tag.value for tag in GeneratorTag])
    xi = _vector_field(required=False)
    B = _matrix_field(required=False)
    a = serializers.FloatField(required=False)
    t = serializers.FloatField(required=False)

    def validate(self, attrs):
        name = self.parameters[attrs["tag"]]
        if name not in attrs:
            raise serializers.ValidationError({name: f"Required for {attrs['tag']}."})
        return attrs

    @classmethod
    def to_generator(cls, attrs, n):
        return GradedGenerator(GeneratorTag(attrs["tag"]), attrs[cls.parameters[attrs["tag"]]], n)


class MoebiusElementSerializer(serializers.Serializer):
    """A Moebius element given either as a raw matrix or as a word of graded generators"""

    n = serializers.IntegerField(min_value=1, max_value=MAX_DIMENSION)
    matrix = _matrix_field(required=False)
    word = GeneratorSerializer(many=True, required=False)

    def validate(self, attrs):
        if ("matrix" in attrs) == ("word" in attrs):
            raise serializers.ValidationError("Give exactly one of matrix and word.")
        n = attrs["n"]
        try:
            if "matrix" in attrs:
                element = MoebiusElement.from_matrix(attrs["matrix"])
            else:
                element = MoebiusElement.from_word(GeneratorSerializer.to_generator(item, n) for item in attrs["word"])
        except (InvPDEError, ValueError) as e:
            raise serializers.ValidationError(str(e))
        if element.n != n:
            raise serializers.ValidationError(f"Element acts in dimension {element.n}, expected {n}.")
        attrs["element"] = element
        return attrs

    def create(self, validated_data):
        return validated_data["element"]
