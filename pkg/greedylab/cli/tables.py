"""Report tables.

Every table turns one validated request into formatted rows.  Cells are
written exactly as the underlying operations return them: reals with 17
significant digits, sets and vectors as canonical JSON.  A row whose
operation raises is kept as an ``error`` row and the table goes on.
"""
import contextlib
import hashlib
import logging
from dataclasses import dataclass, replace

import numpy as np

from constructions.presets import (
    ONE,
    W1,
    build_intervals_74,
    example76_certificates,
    failure_bound,
    load_preset,
)
from constructions.serializers import IntervalWitnessSerializer, RearrangedWitnessSerializer, SuiteResultSerializer
from constructions.verify import (
    QG_CONSTANT,
    example72_conditionality,
    example72_qg_suite,
    example72_sandwich_suite,
    example74_ratio_trend,
    lemma71_suite,
    lemma75_suite,
    lemma77_democracy_sandwich,
    xp_exactness_suite,
)
from greedy.approximation import projection_error, sigma_m_search, sigma_tilde_m
from greedy.chebyshev import chebyshev_best
from greedy.oracles import chebyshev_oracle_suite
from greedy.selection import brute_force_greedy_sets, enumerate_greedy_sets, natural_greedy_set
from params.bounds import FORMULAS, bound_calculator, formula_tags
from params.candidates import random_decay
from params.democracy import democracy_profile
from params.estimators import estimate_parameter, is_self_certified
from params.serializers import ParameterEstimateSerializer
from spaces.exceptions import ContractError, GreedyLabError
from spaces.models import SparseVector
from spaces.norms import norm_eval
from spaces.serializers import canonical_json

from .models import RowStatus, TableName, TableResult
from .serializers import load_config

logger = logging.getLogger(__name__)

ROW_COLUMNS = ("status", "message")
SUITE_COLUMNS = ("suite", "checked", "worst_ratio", "worst_case", "violations", "holds")

DEFAULT_VECTOR = SparseVector.from_dense((1.0, -0.5, 0.5, 0.25, -0.125))
DEFAULT_BOUND_INPUTS = {
    "C": 1, "C1": 1, "C2": 1, "C3": 1, "K": 1, "M": 1, "s": 1, "t": 1,
    "lam": 1, "lam_p": 1, "lam_pp": 1, "kappa": 1, "inf_w_inv": 1,
    "w_A": 1, "sup_w": 1, "r": 1, "p_m": 1,
    "L": 1, "L_m": 1, "L_2m": 1, "L_m1": 1, "L_2": 1, "L_4": 1,
}
PARITY_FREE_M = 2
ODD_M = 3

TABLES = {}


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple
    build: object


def table(name, *columns):
    def register(build):
        TABLES[str(name)] = Table(str(name), tuple(columns) + ROW_COLUMNS, build)
        return build

    return register


def table_seed(seed, name):
    """First 8 bytes of ``sha256("<seed>|<table>")``, big-endian."""
    digest = hashlib.sha256(f"{seed}|{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def format_real(value):
    return format(float(value), ".17g")


def jsonable(value):
    if isinstance(value, SparseVector):
        return {"indices": list(value.indices), "values": [format_real(v) for v in value.values]}
    if isinstance(value, (set, frozenset)):
        return sorted(jsonable(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(key): jsonable(v) for key, v in value.items()}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format_real(value)
    return str(value)


def format_cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_real(value)
    if isinstance(value, str):
        return str(value)
    return canonical_json(jsonable(value))


class TableWriter:
    """Appends formatted rows, estimates and certificates to a ``TableResult``."""

    def __init__(self, result):
        self.result = result

    def _append(self, cells, status, message=""):
        row = {key: format_cell(value) for key, value in cells.items()}
        row.update(status=str(status), message=message)
        self.result.rows.append(row)
        if status != RowStatus.OK:
            self.result.failures.append(
                {"table": self.result.table, "row": len(self.result.rows), "status": str(status), "message": message}
            )

    def add(self, passed=True, **cells):
        self._append(cells, RowStatus.OK if passed else RowStatus.FAILED)

    def error(self, cells, exc):
        logger.error(f"Table {self.result.table} failed at {cells}: {exc}", exc_info=True)
        self._append(cells, RowStatus.ERROR, str(exc))

    @contextlib.contextmanager
    def guard(self, **cells):
        try:
            yield
        except GreedyLabError as exc:
            self.error(cells, exc)

    def estimate(self, estimate):
        self.result.estimates.append(dict(ParameterEstimateSerializer(estimate).data))

    def certificate(self, kind, data):
        self.result.certificates.append({"table": self.result.table, "kind": kind, **data})

    def suite(self, suite, **cells):
        self.certificate("suite", dict(SuiteResultSerializer(suite).data))
        self.add(
            passed=suite.holds,
            **cells,
            suite=suite.name,
            checked=suite.checked,
            worst_ratio=suite.worst_ratio,
            worst_case=suite.worst_case,
            violations=len(suite.violations),
            holds=suite.holds,
        )


def _budget(config, seed):
    return replace(config.budget, seed=seed)


def default_vectors():
    return [
        SparseVector.indicator({1}),
        SparseVector.indicator({2}),
        SparseVector.indicator({1, 2}),
        SparseVector.indicator(range(1, 5)),
        SparseVector.from_dense((1.0, -1.0)),
        DEFAULT_VECTOR,
    ]


@table(TableName.SPACE_EVAL, "vector", "support_size", "norm")
def space_eval(config, params, seed, out):
    for x in params.get("vectors") or default_vectors():
        with out.guard(vector=x, support_size=len(x)):
            out.add(vector=x, support_size=len(x), norm=norm_eval(config.preset.spec, x))


@table(TableName.GREEDY_SETS, "m", "t", "greedy_set", "natural")
def greedy_sets(config, params, seed, out):
    x = params.get("vector") or DEFAULT_VECTOR
    t = params["t"]
    for m in params["m"]:
        with out.guard(m=m, t=t):
            natural = natural_greedy_set(x, m)
            for index_set in enumerate_greedy_sets(x, m, t, cap=config.budget.max_sets):
                out.add(m=m, t=t, greedy_set=index_set, natural=index_set == natural)


@table(TableName.CHEB, "set", "error", "gap", "lower_error", "projection_error", "method", "converged")
def cheb(config, params, seed, out):
    spec = config.preset.spec
    x = params.get("vector") or DEFAULT_VECTOR
    sets = params.get("sets") or [natural_greedy_set(x, m) for m in range(1, min(3, len(x)) + 1)]
    options = _budget(config, seed).solver_options
    for index_set in sets:
        with out.guard(set=index_set):
            result = chebyshev_best(spec, x, index_set, options)
            bound = projection_error(spec, x, index_set)
            out.add(
                passed=result.error <= bound,
                set=index_set,
                error=result.error,
                gap=result.gap,
                lower_error=result.lower_error,
                projection_error=bound,
                method=result.method,
                converged=result.converged,
            )


@table(TableName.SIGMA, "m", "sigma", "support", "status", "nodes", "sigma_tilde", "pool_size")
def sigma(config, params, seed, out):
    spec = config.preset.spec
    x = params.get("vector") or DEFAULT_VECTOR
    budget = _budget(config, seed)
    pool = tuple(sorted(x.support | set(budget.pool)))
    for m in params["m"]:
        with out.guard(m=m, pool_size=len(pool)):
            search = sigma_m_search(spec, x, m, pool, budget.solver_options)
            out.add(
                m=m,
                sigma=search.value,
                support=search.support,
                status=search.status,
                nodes=search.nodes,
                sigma_tilde=sigma_tilde_m(spec, x, m),
                pool_size=len(pool),
            )


@table(TableName.PARAM, "kind", "m", "t", "lower_bound", "evaluated", "skipped", "converged", "self_certified")
def param(config, params, seed, out):
    spec = config.preset.spec
    budget = _budget(config, seed)
    t = params["t"]
    for kind in params["kinds"]:
        for m in params["m"]:
            with out.guard(kind=kind, m=m, t=t):
                estimate = estimate_parameter(spec, kind, m, t, budget)
                certified = is_self_certified(spec, estimate)
                out.estimate(estimate)
                out.add(
                    passed=certified,
                    kind=kind,
                    m=m,
                    t=t,
                    lower_bound=estimate.lower_bound,
                    evaluated=estimate.evaluated,
                    skipped=estimate.skipped,
                    converged=estimate.converged,
                    self_certified=certified,
                )


@table(TableName.DEMOCRACY_PROFILE, "W", "min_norm", "max_norm", "ratio")
def democracy(config, params, seed, out):
    with out.guard():
        points = democracy_profile(
            config.preset.spec,
            config.preset.weight,
            measures=params.get("measures"),
            budget=_budget(config, seed),
            democratic=params["democratic"],
        )
        for point in points:
            out.add(W=point.measure, min_norm=point.lower, max_norm=point.upper, ratio=point.ratio)


@table(TableName.LEMMA71, *SUITE_COLUMNS)
def lemma71(config, params, seed, out):
    with out.guard(suite=TableName.LEMMA71):
        out.suite(lemma71_suite(params["exhaustive_n"], params["random_count"], params["random_max"], seed, params["max_size"]))


@table(TableName.EX72_SANDWICH, *SUITE_COLUMNS)
def ex72_sandwich(config, params, seed, out):
    with out.guard(suite=TableName.EX72_SANDWICH):
        out.suite(
            example72_sandwich_suite(
                params["pool"], params["max_size"], params["random_count"], params["random_max"], seed
            )
        )


@table(TableName.EX72_CONDITIONALITY, "m", "y_norm", "z_norm", "ratio", "increasing")
def ex72_conditionality(config, params, seed, out):
    with out.guard():
        points = example72_conditionality(params["ms"])
        for k, point in enumerate(points):
            increasing = k == 0 or point.ratio > points[k - 1].ratio
            out.add(
                passed=increasing,
                m=point.m,
                y_norm=point.y_norm,
                z_norm=point.z_norm,
                ratio=point.ratio,
                increasing=increasing,
            )


@table(TableName.EX72_QG, "m", "lower_bound", "evaluated", "bound", "holds")
def ex72_qg(config, params, seed, out):
    budget = config.budget
    with out.guard():
        suite = example72_qg_suite(params["count"], params["m_max"], seed, budget.pool_size)
        for estimate in suite.details:
            holds = estimate.lower_bound <= QG_CONSTANT + 1e-9
            out.estimate(estimate)
            out.add(
                passed=holds,
                m=estimate.m,
                lower_bound=estimate.lower_bound,
                evaluated=estimate.evaluated,
                bound=QG_CONSTANT,
                holds=holds,
            )


def _certificate_rows(out, inequalities, passed=True, **cells):
    for item in inequalities:
        out.add(
            passed=passed and item.holds,
            **cells,
            certificate=item.name,
            lhs=item.lhs,
            relation=item.relation,
            rhs=item.rhs,
            holds=item.holds,
        )


@table(
    TableName.EX74_CERTIFICATES,
    "m", "lo", "hi", "split", "explicit", "projection_ratio", "certificate", "lhs", "relation", "rhs", "holds",
)
def ex74_certificates(config, params, seed, out):
    with out.guard():
        family = build_intervals_74(config.intervals)
        suite = example74_ratio_trend(family)
        wanted = set(params.get("ms") or range(1, family.count + 1))
        previous = None
        for witness in suite.details:
            bound = failure_bound(witness.total)
            if witness.m in wanted:
                lo, hi = witness.interval
                cells = dict(
                    m=witness.m,
                    lo=lo,
                    hi=hi,
                    split=witness.split,
                    explicit=witness.explicit,
                    projection_ratio=witness.projection_ratio,
                )
                out.certificate("ex74", dict(IntervalWitnessSerializer(witness).data))
                _certificate_rows(out, witness.certificates, **cells)
                if previous is not None:
                    holds = ("trend", witness.m) not in suite.violations
                    out.add(
                        passed=holds,
                        **cells,
                        certificate="failure_bound_trend",
                        lhs=bound,
                        relation="<=",
                        rhs=previous,
                        holds=holds,
                    )
            previous = bound


@table(TableName.EX76_CERTIFICATES, "m", "achieved_bound", "certificate", "lhs", "relation", "rhs", "holds")
def ex76_certificates(config, params, seed, out):
    with out.guard():
        family = build_intervals_74(config.intervals)
        ms = params.get("ms") or [m for m in range(1, family.count + 1) if family.explicit(m)]
        for m in ms:
            with out.guard(m=m):
                witness = example76_certificates(family, m)
                data = dict(RearrangedWitnessSerializer(witness).data)
                data.pop("vector", None)
                out.certificate("ex76", data)
                _certificate_rows(out, witness.certificates, m=m, achieved_bound=witness.achieved_bound)


@table(TableName.LEMMA75, "space", *SUITE_COLUMNS)
def lemma75(config, params, seed, out):
    name = params.get("space")
    with out.guard(space=name or config.preset.name):
        preset = load_preset(name, config.p, None, config.intervals) if name else config.preset
        out.suite(lemma75_suite(preset, params["n"], params["random_count"], seed), space=preset.name)


@table(TableName.LEMMA77, "left", "right", *SUITE_COLUMNS)
def lemma77(config, params, seed, out):
    with out.guard(left=params["left"], right=params["right"]):
        left = load_preset(params["left"], config.p, None, config.intervals)
        right = load_preset(params["right"], config.p, None, config.intervals)
        suite = lemma77_democracy_sandwich(left, right, n=params["n"])
        out.suite(suite, left=left.name, right=right.name)


def default_bound_inputs(tag):
    """Canonical inputs of one formula: every constant 1, ``m`` of the parity the formula needs."""
    m = ODD_M if tag.endswith("_iii") else PARITY_FREE_M
    names = FORMULAS[tag].inputs if tag in FORMULAS else ("m", "s", "L_2", "L_4")
    return {name: (m if name == "m" else DEFAULT_BOUND_INPUTS[name]) for name in names}


@table(TableName.BOUNDS, "formula", "inputs", "value")
def bounds(config, params, seed, out):
    formulas = params.get("formulas") or {tag: {} for tag in formula_tags()}
    for tag, given in formulas.items():
        with out.guard(formula=tag, inputs=given):
            if tag not in FORMULAS and tag != "cor612_pm":
                raise ContractError(f"unknown bound formula '{tag}'")
            inputs = {**default_bound_inputs(tag), **given}
            out.add(formula=tag, inputs=inputs, value=bound_calculator(tag, inputs))


@table(TableName.XP_EXACTNESS, "p", "weight", *SUITE_COLUMNS)
def xp_exactness(config, params, seed, out):
    for p in params["ps"]:
        for w in params.get("weights") or [ONE, W1]:
            with out.guard(p=p, weight=w.label):
                suite = xp_exactness_suite(
                    p, w, params["pool"], params["max_size"], params["random_count"], params["random_max"], seed
                )
                out.suite(suite, p=p, weight=w.label)


@table(TableName.GREEDY_ORACLE, "t", "vectors", "cases", "mismatches", "holds")
def greedy_oracle(config, params, seed, out):
    rng = np.random.default_rng(seed)
    largest = params["max_support"]
    pool = tuple(range(1, 2 * largest + 1))
    vectors = [random_decay(rng, pool, int(rng.integers(1, largest + 1))) for _ in range(params["count"])]
    for t in params["ts"]:
        with out.guard(t=t):
            cases = mismatches = 0
            for x in vectors:
                for m in range(1, len(x) + 1):
                    cases += 1
                    if enumerate_greedy_sets(x, m, t) != brute_force_greedy_sets(x, m, t):
                        mismatches += 1
            if mismatches:
                logger.warning(f"Greedy-set enumeration disagrees with brute force in {mismatches} cases at t={t}")
            out.add(passed=not mismatches, t=t, vectors=len(vectors), cases=cases, mismatches=mismatches, holds=not mismatches)


@table(TableName.CHEB_ORACLE, *SUITE_COLUMNS)
def cheb_oracle(config, params, seed, out):
    with out.guard(suite=TableName.CHEB_ORACLE):
        out.suite(
            chebyshev_oracle_suite(
                params["count"], params["dimension"], params["large_count"], params["large_iterations"], seed
            )
        )


def run_request(config, request):
    """Build one table; errors outside any row become a single error row."""
    entry = TABLES[str(request.table)]
    seed = table_seed(config.seed, entry.name)
    result = TableResult(entry.name, list(entry.columns))
    out = TableWriter(result)
    logger.info(f"Table {entry.name} on {config.preset.name} with seed {seed}")
    try:
        entry.build(config, request.params, seed, out)
    except GreedyLabError as exc:
        out.error({}, exc)
    if result.failures:
        logger.warning(f"Table {entry.name}: {len(result.failures)} rows failed")
    return result


def execute_table(config_json, table_name, position=None):
    """Validate ``config_json`` and build one requested table as a JSON-safe dict.

    ``position`` picks among repeated requests of the same table; the first
    one is used when omitted.
    """
    config = load_config(config_json)
    candidates = [
        (index, request) for index, request in enumerate(config.outputs) if str(request.table) == table_name
    ]
    if position is not None:
        candidates = [item for item in candidates if item[0] == position]
    if not candidates:
        raise ContractError(f"table '{table_name}' is not requested by the config")
    return run_request(config, candidates[0][1]).as_dict()
