from rest_framework import serializers

from spaces.models import Enclosure
from spaces.serializers import (
    EnclosureSerializer,
    IndexField,
    NormSpecSerializer,
    RealField,
    SparseVectorSerializer,
    WeightSerializer,
    spec_hash,
)

from .models import Inequality, IntervalFamily, Relation


class InequalitySerializer(serializers.Serializer):
    name = serializers.CharField()
    lhs = RealField()
    relation = serializers.ChoiceField(choices=Relation.choices)
    rhs = RealField()
    holds = serializers.BooleanField()
    note = serializers.CharField(allow_blank=True, default="")

    def create(self, validated_data):
        return Inequality(**validated_data)


class IntervalSerializer(serializers.ListField):
    child = IndexField()

    def __init__(self, **kwargs):
        super().__init__(min_length=2, max_length=2, **kwargs)


class IntervalFamilySerializer(serializers.Serializer):
    intervals = serializers.ListField(child=IntervalSerializer())
    sums = EnclosureSerializer(many=True)
    targets = serializers.ListField(child=RealField(), required=False, default=list)

    def create(self, validated_data):
        return IntervalFamily(
            intervals=tuple(tuple(pair) for pair in validated_data["intervals"]),
            sums=tuple(Enclosure(**item) for item in validated_data["sums"]),
            targets=tuple(validated_data.get("targets", ())),
        )


class SpacePresetSerializer(serializers.Serializer):
    """Read-only record of a preset and its construction metadata."""

    name = serializers.CharField()
    spec = NormSpecSerializer()
    weight = WeightSerializer()
    spec_hash = serializers.SerializerMethodField()
    metadata = serializers.DictField()

    def get_spec_hash(self, preset):
        return spec_hash(preset.spec)


class IntervalWitnessSerializer(serializers.Serializer):
    m = serializers.IntegerField()
    interval = IntervalSerializer()
    split = serializers.IntegerField()
    selected = IntervalSerializer()
    total = EnclosureSerializer()
    head = EnclosureSerializer()
    tail = EnclosureSerializer()
    explicit = serializers.BooleanField()
    holds = serializers.BooleanField()
    certificates = InequalitySerializer(many=True)
    projection_ratio = RealField(allow_null=True, required=False)


class RearrangedWitnessSerializer(serializers.Serializer):
    m = serializers.IntegerField()
    achieved_bound = RealField()
    holds = serializers.BooleanField()
    certificates = InequalitySerializer(many=True)
    vector = SparseVectorSerializer(required=False)


class SuiteResultSerializer(serializers.Serializer):
    name = serializers.CharField()
    checked = serializers.IntegerField()
    worst_ratio = RealField()
    holds = serializers.BooleanField()
    violations = serializers.JSONField()
