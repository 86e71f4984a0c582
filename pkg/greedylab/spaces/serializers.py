import hashlib
import json
import math

from rest_framework import serializers

from .exceptions import DomainError
from .models import (
    CoefficientKind,
    CoefficientRule,
    Enclosure,
    SparseVector,
    TailRule,
    Weight,
    WeightKind,
)
from .norms import (
    DirectSumInterleave,
    IntervalFunctional,
    MaxOf,
    NodeKind,
    PrefixFunctional,
    Reindexed,
    SchauderMajorant,
    SupNorm,
    WeightedLp,
)

SPEC_VERSION = 1


class RealField(serializers.Field):
    """Finite real written as the shortest round-trip decimal string."""

    default_error_messages = {"invalid": "A finite real number is required."}

    def to_representation(self, value):
        return repr(float(value))

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail("invalid")
        try:
            value = float(data)
        except (TypeError, ValueError):
            self.fail("invalid")
        if not math.isfinite(value):
            self.fail("invalid")
        return value


class IndexField(serializers.IntegerField):
    """Basis index; JSON integers keep all 127 bits."""

    def __init__(self, **kwargs):
        kwargs.setdefault("min_value", 1)
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        if isinstance(data, bool) or not isinstance(data, (int, str)):
            self.fail("invalid")
        try:
            value = int(data)
        except ValueError:
            self.fail("invalid")
        if value < 1:
            self.fail("min_value", min_value=1)
        return value


class WeightSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=WeightKind.choices)
    value = RealField(required=False)
    values = serializers.ListField(child=RealField(), required=False)
    tail = serializers.ChoiceField(choices=TailRule.choices, required=False)
    left = serializers.DictField(required=False)
    right = serializers.DictField(required=False)

    def validate(self, data):
        kind = data["kind"]
        if kind == WeightKind.COMBINED:
            for side in ("left", "right"):
                if side not in data:
                    raise serializers.ValidationError({side: "Combined weight needs both components."})
                nested = WeightSerializer(data=data[side])
                if not nested.is_valid():
                    raise serializers.ValidationError({side: nested.errors})
                data[side] = nested.save()
        try:
            if kind == WeightKind.CONSTANT:
                data["weight"] = Weight.constant(data.get("value", 1.0))
            elif kind == WeightKind.FORMULA_W1:
                data["weight"] = Weight.formula_w1()
            elif kind == WeightKind.EXPLICIT:
                data["weight"] = Weight.explicit(data.get("values", ()), data.get("tail", TailRule.REPEAT))
            else:
                data["weight"] = Weight.combined(data["left"], data["right"])
        except DomainError as exc:
            raise serializers.ValidationError(str(exc))
        return data

    def create(self, validated_data):
        return validated_data["weight"]

    def to_representation(self, weight):
        out = {"kind": str(weight.kind)}
        if weight.kind == WeightKind.CONSTANT:
            out["value"] = repr(weight.value)
        elif weight.kind == WeightKind.EXPLICIT:
            out["values"] = [repr(v) for v in weight.values]
            out["tail"] = str(weight.tail)
        elif weight.kind == WeightKind.COMBINED:
            out["left"] = self.to_representation(weight.left)
            out["right"] = self.to_representation(weight.right)
        return out


class CoefficientRuleSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=CoefficientKind.choices, default=CoefficientKind.POWER)
    alpha = RealField(required=False, default=0.75)
    table = serializers.ListField(
        child=serializers.ListField(min_length=2, max_length=2), required=False, default=list
    )

    def validate(self, data):
        if data["kind"] == CoefficientKind.POWER:
            return {"rule": CoefficientRule.power(data["alpha"])}
        table = {}
        for pos, (n, c) in enumerate(data["table"]):
            index, coefficient = IndexField(), RealField()
            try:
                table[index.run_validation(n)] = coefficient.run_validation(c)
            except serializers.ValidationError as exc:
                raise serializers.ValidationError({"table": {pos: exc.detail}})
        return {"rule": CoefficientRule.tabulated(table, data["alpha"])}

    def create(self, validated_data):
        return validated_data["rule"]

    def to_representation(self, rule):
        out = {"kind": str(rule.kind), "alpha": repr(rule.alpha)}
        if rule.kind == CoefficientKind.TABULATED:
            out["table"] = [[n, repr(c)] for n, c in rule.table]
        return out


def _load(serializer_class, data, pointer):
    serializer = serializer_class(data=data)
    if not serializer.is_valid():
        raise serializers.ValidationError({pointer: serializer.errors})
    return serializer.save()


def _expect(data, key, pointer):
    if key not in data:
        raise serializers.ValidationError({f"{pointer}/{key}": "This field is required."})
    return data[key]


def node_from_json(data, pointer="norm"):
    """Rebuild a norm node from its tagged JSON tree."""
    if not isinstance(data, dict):
        raise serializers.ValidationError({pointer: "Expected a JSON object."})
    node = data.get("node")
    if node not in NodeKind.values:
        raise serializers.ValidationError({f"{pointer}/node": f"Unknown node {node!r}."})
    try:
        if node == NodeKind.WEIGHTED_LP:
            p = RealField().run_validation(_expect(data, "p", pointer))
            weight = _load(WeightSerializer, _expect(data, "weight", pointer), f"{pointer}/weight")
            return WeightedLp(p, weight)
        if node == NodeKind.SUP:
            return SupNorm()
        if node == NodeKind.PREFIX:
            return PrefixFunctional(_load(CoefficientRuleSerializer, data.get("coefficients", {}), f"{pointer}/coefficients"))
        if node == NodeKind.INTERVAL:
            intervals = tuple(
                (IndexField().run_validation(lo), IndexField().run_validation(hi))
                for lo, hi in _expect(data, "intervals", pointer)
            )
            rule = _load(CoefficientRuleSerializer, data.get("coefficients", {}), f"{pointer}/coefficients")
            return IntervalFunctional(intervals, rule)
        if node == NodeKind.MAX_OF:
            children = _expect(data, "children", pointer)
            return MaxOf(tuple(node_from_json(child, f"{pointer}/children/{pos}") for pos, child in enumerate(children)))
        if node == NodeKind.DIRECT_SUM:
            return DirectSumInterleave(
                node_from_json(_expect(data, "left", pointer), f"{pointer}/left"),
                node_from_json(_expect(data, "right", pointer), f"{pointer}/right"),
            )
        if node == NodeKind.SCHAUDER:
            return SchauderMajorant(node_from_json(_expect(data, "inner", pointer), f"{pointer}/inner"))
        mapping = tuple(
            (IndexField().run_validation(n), IndexField().run_validation(m))
            for n, m in _expect(data, "mapping", pointer)
        )
        return Reindexed(node_from_json(_expect(data, "inner", pointer), f"{pointer}/inner"), mapping)
    except DomainError as exc:
        raise serializers.ValidationError({pointer: str(exc)})
    except (TypeError, ValueError) as exc:
        raise serializers.ValidationError({pointer: f"Malformed node: {exc}"})


def node_to_json(spec):
    node = {"node": str(spec.kind)}
    if isinstance(spec, WeightedLp):
        node.update(p=repr(spec.p), weight=WeightSerializer(spec.weight).data)
    elif isinstance(spec, PrefixFunctional):
        node["coefficients"] = CoefficientRuleSerializer(spec.rule).data
    elif isinstance(spec, IntervalFunctional):
        node["intervals"] = [[lo, hi] for lo, hi in spec.intervals]
        node["coefficients"] = CoefficientRuleSerializer(spec.rule).data
    elif isinstance(spec, MaxOf):
        node["children"] = [node_to_json(child) for child in spec.children]
    elif isinstance(spec, DirectSumInterleave):
        node.update(left=node_to_json(spec.left), right=node_to_json(spec.right))
    elif isinstance(spec, SchauderMajorant):
        node["inner"] = node_to_json(spec.inner)
    elif isinstance(spec, Reindexed):
        node.update(inner=node_to_json(spec.inner), mapping=[[n, m] for n, m in spec.mapping])
    return node


class NormSpecSerializer(serializers.Serializer):
    """Versioned document ``{"spec_version": 1, "norm": {...}}``."""

    spec_version = serializers.IntegerField()
    norm = serializers.DictField()

    def validate_spec_version(self, value):
        if value != SPEC_VERSION:
            raise serializers.ValidationError(f"Unsupported spec_version {value}; expected {SPEC_VERSION}.")
        return value

    def validate(self, data):
        data["spec"] = node_from_json(data["norm"])
        return data

    def create(self, validated_data):
        return validated_data["spec"]

    def to_representation(self, spec):
        return {"spec_version": SPEC_VERSION, "norm": node_to_json(spec)}


def canonical_json(document):
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def spec_hash(spec):
    """sha256 of the canonical JSON form of a norm."""
    return hashlib.sha256(canonical_json(NormSpecSerializer(spec).data).encode()).hexdigest()


class SparseVectorSerializer(serializers.Serializer):
    indices = serializers.ListField(child=IndexField())
    values = serializers.ListField(child=RealField())

    def validate(self, data):
        if len(data["indices"]) != len(data["values"]):
            raise serializers.ValidationError("indices and values differ in length.")
        if len(set(data["indices"])) != len(data["indices"]):
            raise serializers.ValidationError({"indices": "Indices must be distinct."})
        try:
            data["vector"] = SparseVector.from_pairs(data["indices"], data["values"])
        except DomainError as exc:
            raise serializers.ValidationError(str(exc))
        return data

    def create(self, validated_data):
        return validated_data["vector"]

    def to_representation(self, vector):
        return {"indices": list(vector.indices), "values": [repr(v) for v in vector.values]}


class EnclosureSerializer(serializers.Serializer):
    lo = RealField()
    hi = RealField()
    exact = serializers.BooleanField(default=False)

    def create(self, validated_data):
        return Enclosure(**validated_data)
