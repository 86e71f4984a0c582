from django.conf import settings
from rest_framework import serializers
from rest_framework.settings import api_settings

from constructions.models import PresetName, SpacePreset
from constructions.presets import ONE, load_preset
from params.estimators import SCORERS
from params.models import Budget
from params.serializers import IndexSetField, VectorField
from spaces.exceptions import ConfigError, GreedyLabError
from spaces.serializers import NormSpecSerializer, RealField, WeightSerializer, spec_hash

from .models import ExperimentConfig, TableName, TableRequest

INLINE_SPACE = "inline"
MAX_SEED = 2**64 - 1


def first_error(errors, pointer=""):
    """``(pointer, message)`` of the first leaf in a DRF error tree."""
    if isinstance(errors, dict):
        key = next(iter(errors))
        if key == api_settings.NON_FIELD_ERRORS_KEY:
            return first_error(errors[key], pointer)
        return first_error(errors[key], f"{pointer}/{key}" if pointer else str(key))
    if isinstance(errors, list):
        for position, item in enumerate(errors):
            if isinstance(item, str):
                return pointer, str(item)
            if item:
                return first_error(item, f"{pointer}/{position}")
    return pointer, str(errors)


def _message(exc):
    return str(exc.args[0]) if exc.args else str(exc)


class SpaceEvalParams(serializers.Serializer):
    vectors = serializers.ListField(child=VectorField(), required=False)


class GreedySetsParams(serializers.Serializer):
    vector = VectorField(required=False)
    m = serializers.ListField(child=serializers.IntegerField(min_value=0), default=[1, 2, 3])
    t = RealField(default=1.0)


class ChebParams(serializers.Serializer):
    vector = VectorField(required=False)
    sets = serializers.ListField(child=IndexSetField(), required=False)


class SigmaParams(serializers.Serializer):
    vector = VectorField(required=False)
    m = serializers.ListField(child=serializers.IntegerField(min_value=0), default=[1, 2, 3])


class ParamParams(serializers.Serializer):
    kinds = serializers.ListField(
        child=serializers.ChoiceField(choices=[str(kind) for kind in SCORERS]),
        default=["g_bar", "L", "L_a"],
    )
    m = serializers.ListField(child=serializers.IntegerField(min_value=1), default=[1, 2, 3])
    t = RealField(default=1.0)


class DemocracyProfileParams(serializers.Serializer):
    democratic = serializers.BooleanField(default=False)
    measures = serializers.ListField(child=RealField(), required=False)


class Lemma71Params(serializers.Serializer):
    exhaustive_n = serializers.IntegerField(min_value=1, max_value=20, default=12)
    random_count = serializers.IntegerField(min_value=0, default=10_000)
    random_max = serializers.IntegerField(min_value=1, default=100_000)
    max_size = serializers.IntegerField(min_value=1, default=1000)


class SignedPoolParams(serializers.Serializer):
    n = serializers.IntegerField(min_value=1, max_value=10, default=8)


class SignedSetParams(serializers.Serializer):
    pool = serializers.IntegerField(min_value=1, max_value=64, default=20)
    max_size = serializers.IntegerField(min_value=1, default=8)
    random_count = serializers.IntegerField(min_value=0, default=1000)
    random_max = serializers.IntegerField(min_value=1, default=10_000)


class ConditionalityParams(serializers.Serializer):
    ms = serializers.ListField(child=serializers.IntegerField(min_value=1), default=[100, 10_000, 1_000_000])


class QuasiGreedyParams(serializers.Serializer):
    count = serializers.IntegerField(min_value=0, default=10_000)
    m_max = serializers.IntegerField(min_value=1, default=8)


class IntervalParams(serializers.Serializer):
    ms = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False)


class Lemma75Params(SignedPoolParams):
    space = serializers.CharField(required=False)
    random_count = serializers.IntegerField(min_value=0, default=200)


class Lemma77Params(SignedPoolParams):
    left = serializers.CharField(default=PresetName.XP)
    right = serializers.CharField(default=PresetName.EX72)


class BoundsParams(serializers.Serializer):
    formulas = serializers.DictField(child=serializers.DictField(child=RealField()), required=False)


class XpExactnessParams(SignedSetParams):
    pool = serializers.IntegerField(min_value=1, max_value=64, default=10)
    max_size = serializers.IntegerField(min_value=1, default=10)
    ps = serializers.ListField(child=RealField(), default=[2.0, 3.0])
    weights = serializers.ListField(child=serializers.DictField(), required=False)

    def validate_weights(self, value):
        loaded = []
        for position, data in enumerate(value):
            serializer = WeightSerializer(data=data)
            if not serializer.is_valid():
                raise serializers.ValidationError({position: serializer.errors})
            loaded.append(serializer.save())
        return loaded


class GreedyOracleParams(serializers.Serializer):
    count = serializers.IntegerField(min_value=1, default=1000)
    max_support = serializers.IntegerField(min_value=1, max_value=12, default=12)
    ts = serializers.ListField(child=RealField(), default=[0.3, 0.5, 1.0])


class ChebOracleParams(serializers.Serializer):
    count = serializers.IntegerField(min_value=0, default=500)
    dimension = serializers.IntegerField(min_value=1, max_value=12, default=6)
    large_count = serializers.IntegerField(min_value=0, default=10_000)
    large_iterations = serializers.IntegerField(min_value=1, default=50)


TABLE_PARAMS = {
    TableName.SPACE_EVAL: SpaceEvalParams,
    TableName.GREEDY_SETS: GreedySetsParams,
    TableName.CHEB: ChebParams,
    TableName.SIGMA: SigmaParams,
    TableName.PARAM: ParamParams,
    TableName.DEMOCRACY_PROFILE: DemocracyProfileParams,
    TableName.LEMMA71: Lemma71Params,
    TableName.EX72_SANDWICH: SignedSetParams,
    TableName.EX72_CONDITIONALITY: ConditionalityParams,
    TableName.EX72_QG: QuasiGreedyParams,
    TableName.EX74_CERTIFICATES: IntervalParams,
    TableName.EX76_CERTIFICATES: IntervalParams,
    TableName.LEMMA75: Lemma75Params,
    TableName.LEMMA77: Lemma77Params,
    TableName.BOUNDS: BoundsParams,
    TableName.XP_EXACTNESS: XpExactnessParams,
    TableName.GREEDY_ORACLE: GreedyOracleParams,
    TableName.CHEB_ORACLE: ChebOracleParams,
}


class TableRequestSerializer(serializers.Serializer):
    table = serializers.ChoiceField(choices=TableName.choices)
    params = serializers.DictField(required=False, default=dict)

    def validate(self, data):
        serializer = TABLE_PARAMS[data["table"]](data=data["params"])
        if not serializer.is_valid():
            raise serializers.ValidationError({"params": serializer.errors})
        data["params"] = dict(serializer.validated_data)
        return data

    def create(self, validated_data):
        return TableRequest(**validated_data)


class OutputField(serializers.Field):
    """A table name, or ``{"table": name, "params": {...}}``."""

    default_error_messages = {"invalid": "Expected a table name or an object with a table key."}

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = {"table": data}
        if not isinstance(data, dict):
            self.fail("invalid")
        serializer = TableRequestSerializer(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer.save()

    def to_representation(self, request):
        return {"table": request.table}


class BudgetField(serializers.Field):
    """A profile name, or a profile name with single fields overridden."""

    default_error_messages = {"invalid": "Expected a profile name or an object."}
    overridable = ("candidates", "pool_size", "max_sets", "solver_iterations", "random_starts")

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = {"profile": data}
        if not isinstance(data, dict):
            self.fail("invalid")
        data = dict(data)
        profile = data.pop("profile", "default")
        if profile not in settings.GREEDYLAB_BUDGET_PROFILES:
            raise serializers.ValidationError({"profile": f"Unknown budget profile {profile!r}."})
        overrides = {}
        for key, value in data.items():
            if key not in self.overridable:
                raise serializers.ValidationError({key: "Unknown budget field."})
            minimum = 1 if key in ("pool_size", "max_sets", "solver_iterations") else 0
            field = serializers.IntegerField(min_value=minimum)
            try:
                overrides[key] = field.run_validation(value)
            except serializers.ValidationError as exc:
                raise serializers.ValidationError({key: exc.detail})
        return {"profile": profile, **overrides}

    def to_representation(self, value):
        return value


class ExperimentConfigSerializer(serializers.Serializer):
    """Experiment document: a space, its weight, a seed, a budget and the tables to produce."""

    space = serializers.JSONField(default=PresetName.EX72)
    weight = serializers.DictField(required=False, allow_null=True)
    p = RealField(default=2.0)
    intervals = serializers.IntegerField(min_value=1, default=3)
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, default=0)
    budget = BudgetField(default={"profile": "default"})
    outputs = serializers.ListField(child=OutputField(), min_length=1)

    def validate_weight(self, value):
        if value is None:
            return None
        serializer = WeightSerializer(data=value)
        if not serializer.is_valid():
            raise serializers.ValidationError(serializer.errors)
        return serializer.save()

    def validate_space(self, value):
        if isinstance(value, str):
            return value
        if not isinstance(value, dict):
            raise serializers.ValidationError("Expected a preset name or a NormSpec document.")
        serializer = NormSpecSerializer(data=value)
        if not serializer.is_valid():
            raise serializers.ValidationError(serializer.errors)
        return serializer.save()

    def validate(self, data):
        weight = data.get("weight")
        space = data["space"]
        try:
            if isinstance(space, str):
                data["preset"] = load_preset(space, data["p"], weight, data["intervals"])
            else:
                weight = weight or ONE
                data["preset"] = SpacePreset(INLINE_SPACE, space, weight, {"spec_hash": spec_hash(space), "weight": weight.label})
                data["space"] = INLINE_SPACE
        except GreedyLabError as exc:
            raise serializers.ValidationError({"space": _message(exc)})
        budget = dict(data["budget"])
        try:
            data["budget"] = Budget.profile(budget.pop("profile"), seed=data["seed"], **budget)
        except ConfigError as exc:
            raise serializers.ValidationError({"budget": _message(exc)})
        return data

    def create(self, validated_data):
        return ExperimentConfig(
            space=validated_data["space"],
            preset=validated_data["preset"],
            seed=validated_data["seed"],
            budget=validated_data["budget"],
            outputs=tuple(validated_data["outputs"]),
            p=validated_data["p"],
            intervals=validated_data["intervals"],
            document=self.initial_data,
        )


def load_config(document):
    """Validate a config document; failures become ``ConfigError`` with a field pointer."""
    if not isinstance(document, dict):
        raise ConfigError("the config must be a JSON object")
    serializer = ExperimentConfigSerializer(data=document)
    if not serializer.is_valid():
        pointer, message = first_error(serializer.errors)
        raise ConfigError(message, pointer=pointer)
    return serializer.save()
