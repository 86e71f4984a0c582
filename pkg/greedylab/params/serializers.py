from rest_framework import serializers

from spaces.serializers import IndexField, RealField, SparseVectorSerializer, canonical_json

from .models import Budget, EstimateKind, ParameterEstimate, Witness


class IndexSetField(serializers.ListField):
    """Index set written as a sorted list."""

    child = IndexField()

    def to_representation(self, data):
        return sorted(data)

    def to_internal_value(self, data):
        return frozenset(super().to_internal_value(data))


class VectorField(serializers.Field):
    """Optional sparse vector; ``null`` when absent."""

    def to_representation(self, value):
        return SparseVectorSerializer(value).data

    def to_internal_value(self, data):
        serializer = SparseVectorSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer.save()


class WitnessSerializer(serializers.Serializer):
    x = VectorField()
    A = IndexSetField(source="a_set", required=False)
    B = IndexSetField(source="b_set", required=False)
    y = VectorField(required=False, allow_null=True)
    z = VectorField(required=False, allow_null=True)
    ratio = RealField()

    def create(self, validated_data):
        return Witness(**validated_data)


class BudgetSerializer(serializers.Serializer):
    candidates = serializers.IntegerField(min_value=0)
    pool_size = serializers.IntegerField(min_value=1)
    max_sets = serializers.IntegerField(min_value=1)
    solver_iterations = serializers.IntegerField(min_value=1)
    random_starts = serializers.IntegerField(min_value=0)
    seed = serializers.IntegerField(min_value=0)

    def create(self, validated_data):
        return Budget(**validated_data)


class ParameterEstimateSerializer(serializers.Serializer):
    """Estimate record consumed by the report pipeline."""

    kind = serializers.ChoiceField(choices=EstimateKind.choices)
    m = serializers.IntegerField(min_value=0)
    t = RealField()
    value = RealField(source="lower_bound")
    witnesses = WitnessSerializer(many=True)
    seed = serializers.IntegerField(source="budget.seed", read_only=True)
    budget = BudgetSerializer()
    pool = serializers.ListField(child=IndexField())
    spec_hash = serializers.CharField(allow_blank=True)
    evaluated = serializers.IntegerField(min_value=0)
    skipped = serializers.IntegerField(min_value=0)
    converged = serializers.BooleanField()
    notes = serializers.ListField(child=serializers.CharField(), required=False)

    def create(self, validated_data):
        data = dict(validated_data)
        data["witnesses"] = tuple(Witness(**item) for item in data["witnesses"])
        data["budget"] = Budget(**data["budget"])
        data["pool"] = tuple(data["pool"])
        data["notes"] = tuple(data.get("notes", ()))
        return ParameterEstimate(**data)


def witness_key(witness):
    """Canonical JSON of a witness; breaks ties between equal ratios."""
    return canonical_json(WitnessSerializer(witness).data)
