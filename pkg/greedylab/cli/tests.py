import csv
import hashlib
import io
import json
import tempfile
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings, strategies as st

from spaces.exceptions import ConfigError

from .models import TableName, TableResult
from .reports import file_stems, run
from .serializers import load_config
from .tables import TABLES, execute_table, format_cell, table_seed
from .tasks import run_table_task

SMOKE = {"space": "ex72", "budget": "smoke", "seed": 7}


def smoke_config(*outputs, **extra):
    return load_config({**SMOKE, "outputs": list(outputs), **extra})


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class ConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = load_config({"outputs": ["bounds"]})
        self.assertEqual(config.space, "ex72")
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.budget.candidates, 200)
        self.assertEqual(config.outputs[0].table, TableName.BOUNDS)

    def test_budget_profile_with_override(self):
        config = load_config({"budget": {"profile": "smoke", "candidates": 3}, "seed": 5, "outputs": ["bounds"]})
        self.assertEqual(config.budget.candidates, 3)
        self.assertEqual(config.budget.pool_size, 8)
        self.assertEqual(config.budget.seed, 5)

    def test_suite_defaults(self):
        tables = ["ex72_qg", "greedy_oracle", "cheb_oracle", "ex72_sandwich", "xp_exactness"]
        config = load_config({"outputs": tables})
        params = {str(request.table): request.params for request in config.outputs}
        self.assertEqual((params["ex72_qg"]["count"], params["ex72_qg"]["m_max"]), (10_000, 8))
        self.assertEqual((params["greedy_oracle"]["count"], params["greedy_oracle"]["max_support"]), (1000, 12))
        self.assertEqual((params["cheb_oracle"]["count"], params["cheb_oracle"]["large_count"]), (500, 10_000))
        self.assertEqual((params["ex72_sandwich"]["pool"], params["ex72_sandwich"]["max_size"]), (20, 8))
        self.assertEqual((params["xp_exactness"]["pool"], params["xp_exactness"]["max_size"]), (10, 10))
        for name in ("ex72_sandwich", "xp_exactness"):
            self.assertEqual((params[name]["random_count"], params[name]["random_max"]), (1000, 10_000))

    def test_pointers(self):
        cases = [
            ({"outputs": ["nope"]}, "outputs/0/table"),
            ({"outputs": ["bounds"], "budget": "huge"}, "budget/profile"),
            ({"outputs": ["bounds"], "budget": {"candidates": -1}}, "budget/candidates"),
            ({"outputs": ["bounds"], "space": "nope"}, "space"),
            ({"outputs": ["bounds"], "seed": -1}, "seed"),
            ({"outputs": []}, "outputs"),
            ({"outputs": [{"table": "lemma71", "params": {"exhaustive_n": 0}}]}, "outputs/0/params/exhaustive_n"),
        ]
        for document, pointer in cases:
            with self.subTest(pointer=pointer), self.assertRaises(ConfigError) as caught:
                load_config(document)
            self.assertEqual(caught.exception.pointer, pointer)

    def test_unknown_preset_message(self):
        with self.assertRaises(ConfigError) as caught:
            load_config({"outputs": ["bounds"], "space": "ex99"})
        self.assertIn("ex99", str(caught.exception))
        self.assertTrue(str(caught.exception).startswith("space: "))

    def test_not_an_object(self):
        with self.assertRaises(ConfigError):
            load_config(["bounds"])

    def test_inline_space(self):
        config = load_config({"space": {"spec_version": 1, "norm": {"node": "sup"}}, "outputs": ["space_eval"]})
        self.assertEqual(config.space, "inline")
        self.assertEqual(config.preset.weight.value, 1.0)

    def test_inline_space_pointer(self):
        with self.assertRaises(ConfigError) as caught:
            load_config({"space": {"spec_version": 1, "norm": {"node": "cube"}}, "outputs": ["space_eval"]})
        self.assertTrue(caught.exception.pointer.startswith("space"))

    def test_corollary_preset_with_constant_weight_is_rejected(self):
        with self.assertRaises(ConfigError) as caught:
            load_config({"space": "cor78:almost_greedy", "weight": {"kind": "constant"}, "outputs": ["bounds"]})
        self.assertEqual(caught.exception.pointer, "space")


class FormattingTests(SimpleTestCase):
    def test_cells(self):
        self.assertEqual(format_cell(None), "")
        self.assertEqual(format_cell(True), "true")
        self.assertEqual(format_cell(3), "3")
        self.assertEqual(format_cell(9.0), "9")
        self.assertEqual(format_cell(0.1), "0.10000000000000001")
        self.assertEqual(format_cell(frozenset({3, 1})), "[1,3]")
        self.assertEqual(format_cell("ok"), "ok")

    @given(st.floats(allow_nan=False, allow_infinity=False))
    @settings(max_examples=200, deadline=None)
    def test_reals_round_trip(self, value):
        self.assertEqual(float(format_cell(value)), value)

    def test_table_seed(self):
        expected = int.from_bytes(hashlib.sha256(b"7|lemma71").digest()[:8], "big")
        self.assertEqual(table_seed(7, "lemma71"), expected)
        self.assertNotEqual(table_seed(7, "lemma71"), table_seed(7, "lemma75"))

    def test_file_stems(self):
        results = [TableResult("bounds", []), TableResult("lemma71", []), TableResult("bounds", [])]
        self.assertEqual(file_stems(results), ["bounds", "lemma71", "bounds-2"])


class TableTests(SimpleTestCase):
    def test_registry_covers_every_table(self):
        self.assertEqual(set(TABLES), set(TableName.values))
        for entry in TABLES.values():
            self.assertEqual(entry.columns[-2:], ("status", "message"))

    def test_bounds_at_the_canonical_point(self):
        result = execute_table({"outputs": ["bounds"]}, "bounds")
        values = {row["formula"]: row["value"] for row in result["rows"]}
        self.assertEqual(values["thm314_i"], "9")
        self.assertEqual(values["thm53_K"], "2")
        self.assertEqual(values["prop39_C1"], "12")
        self.assertEqual(values["remark37"], "2")
        self.assertEqual(result["failures"], [])

    def test_democracy_profile_columns(self):
        bundle = run(smoke_config("democracy_profile"))
        result = bundle.tables[0]
        self.assertEqual(result.columns[:4], ["W", "min_norm", "max_norm", "ratio"])
        self.assertTrue(result.rows)
        for row in result.rows:
            if row["ratio"]:
                self.assertEqual(float(row["ratio"]), float(row["max_norm"]) / float(row["min_norm"]))
        self.assertTrue(bundle.passed)

    def test_lemma71_small(self):
        params = {"exhaustive_n": 8, "random_count": 50, "random_max": 1000}
        bundle = run(smoke_config({"table": "lemma71", "params": params}))
        (row,) = bundle.tables[0].rows
        self.assertEqual(row["holds"], "true")
        self.assertEqual(row["checked"], str(255 + 50))
        self.assertLessEqual(float(row["worst_ratio"]), 1.0)

    def test_conditionality_increases(self):
        bundle = run(smoke_config({"table": "ex72_conditionality", "params": {"ms": [10, 100, 1000]}}))
        rows = bundle.tables[0].rows
        self.assertEqual([row["m"] for row in rows], ["10", "100", "1000"])
        self.assertTrue(all(row["increasing"] == "true" for row in rows))

    def test_greedy_oracle_agrees(self):
        params = {"count": 20, "max_support": 6, "ts": [0.5, 1.0]}
        bundle = run(smoke_config({"table": "greedy_oracle", "params": params}))
        rows = bundle.tables[0].rows
        self.assertEqual(len(rows), 2)
        self.assertTrue(all(row["mismatches"] == "0" for row in rows))

    def test_sandwich_over_twenty_indices(self):
        params = {"pool": 20, "max_size": 2, "random_count": 30}
        (row,) = run(smoke_config({"table": "ex72_sandwich", "params": params})).tables[0].rows
        self.assertEqual(row["holds"], "true")
        self.assertEqual(row["checked"], str(20 + 380 + 30))

    @override_settings(GREEDYLAB_SIGNED_CAP=100)
    def test_sandwich_over_the_cap_is_an_error_row(self):
        bundle = run(smoke_config({"table": "ex72_sandwich", "params": {"pool": 20, "max_size": 3}}))
        (row,) = bundle.tables[0].rows
        self.assertEqual(row["status"], "error")
        self.assertFalse(bundle.passed)

    def test_cheb_oracle_small(self):
        params = {"count": 18, "dimension": 4, "large_count": 18, "large_iterations": 10}
        bundle = run(smoke_config({"table": "cheb_oracle", "params": params}))
        (row,) = bundle.tables[0].rows
        self.assertEqual(row["suite"], "cheb_oracle")
        self.assertEqual(row["holds"], "true")
        self.assertEqual(row["checked"], "36")
        self.assertTrue(bundle.passed)

    def test_ex74_projection_ratio_column(self):
        result = run(smoke_config("ex74_certificates")).tables[0]
        self.assertIn("projection_ratio", result.columns)
        ratios = [row for row in result.rows if row["certificate"] == "qg_failure_ratio"]
        self.assertTrue(ratios)
        for row in ratios:
            with self.subTest(m=row["m"]):
                if row["explicit"] == "true":
                    self.assertAlmostEqual(float(row["projection_ratio"]), 1 / float(row["lhs"]), places=12)
                else:
                    self.assertEqual(row["projection_ratio"], "")

    def test_greedy_sets_of_a_tie(self):
        vector = {"indices": [1, 2, 3], "values": ["1", "-1", "0.5"]}
        bundle = run(smoke_config({"table": "greedy_sets", "params": {"vector": vector, "m": [1]}}))
        sets = [row["greedy_set"] for row in bundle.tables[0].rows]
        self.assertEqual(sets, ["[1]", "[2]"])

    def test_failing_row_is_recorded(self):
        bundle = run(smoke_config({"table": "greedy_sets", "params": {"m": [1, 25]}}))
        rows = bundle.tables[0].rows
        self.assertEqual(rows[-1]["status"], "error")
        self.assertIn("cap", rows[-1]["message"])
        self.assertTrue(all(row["status"] == "ok" for row in rows[:-1]))
        self.assertFalse(bundle.passed)
        self.assertEqual(bundle.summary["failures"][0]["status"], "error")

    def test_space_eval_on_xp(self):
        vector = {"indices": [1, 2, 3, 4], "values": ["1", "1", "-1", "1"]}
        config = load_config({"space": "xp", "outputs": [{"table": "space_eval", "params": {"vectors": [vector]}}]})
        (row,) = run(config).tables[0].rows
        self.assertEqual(row["norm"], "2")

    def test_task_runs_eagerly(self):
        result = run_table_task.delay({"outputs": ["bounds"]}, "bounds").get()
        self.assertEqual(result["table"], "bounds")
        self.assertTrue(result["rows"])


class CommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def write_config(self, document, name="config.json"):
        path = self.root / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)

    def call(self, *args):
        out = io.StringIO()
        call_command(*args, stdout=out)
        return out.getvalue()

    def test_bounds_one_shot(self):
        rows = read_rows(self.call("bounds", "--formula", "thm314_i"))
        self.assertEqual(rows[0]["value"], "9")

    def test_bounds_with_inputs(self):
        rows = read_rows(self.call("bounds", "--formula", "remark37", "--input", "C=2"))
        self.assertEqual(rows[0]["value"], "8")

    def test_space_eval(self):
        text = self.call("space", "eval", "--space", "xp", "--vector", '{"indices": [5], "values": ["-3"]}')
        self.assertEqual(read_rows(text)[0]["norm"], "3")

    def test_report_is_deterministic(self):
        document = {
            **SMOKE,
            "outputs": [
                "bounds",
                {"table": "lemma71", "params": {"exhaustive_n": 6, "random_count": 20, "random_max": 500}},
                {"table": "param", "params": {"kinds": ["g_bar"], "m": [1]}},
                "democracy_profile",
            ],
        }
        path = self.write_config(document)
        first, second = self.root / "first", self.root / "second"
        self.call("report", "--config", path, "--out", str(first))
        self.call("report", "--config", path, "--out", str(second))

        self.assertEqual((first / "summary.json").read_bytes(), (second / "summary.json").read_bytes())
        self.assertEqual((first / "manifest.json").read_bytes(), (second / "manifest.json").read_bytes())
        manifest = json.loads((first / "manifest.json").read_text(encoding="utf-8"))
        self.assertEqual(set(manifest["tables"]), {"bounds", "lemma71", "param", "democracy_profile"})
        for stem, entry in manifest["tables"].items():
            data = (first / f"{stem}.csv").read_bytes()
            self.assertEqual(hashlib.sha256(data).hexdigest(), entry["sha256"])
        summary = json.loads((first / "summary.json").read_text(encoding="utf-8"))
        self.assertEqual(summary["seed"], 7)
        self.assertEqual(len(summary["estimates"]), 1)
        self.assertTrue(summary["passed"])

    def test_parallel_report_matches_serial(self):
        outputs = [
            "bounds",
            {"table": "ex72_sandwich", "params": {"pool": 8, "max_size": 4, "random_count": 50}},
            {"table": "xp_exactness", "params": {"pool": 6, "max_size": 6, "random_count": 50}},
        ]
        path = self.write_config({**SMOKE, "outputs": outputs})
        serial, parallel = self.root / "serial", self.root / "parallel"
        self.call("report", "--config", path, "--out", str(serial))
        self.call("report", "--config", path, "--out", str(parallel), "--jobs", "2")
        self.assertEqual((serial / "summary.json").read_bytes(), (parallel / "summary.json").read_bytes())

    def test_seed_flag_overrides_config(self):
        path = self.write_config({**SMOKE, "outputs": ["bounds"]})
        self.call("report", "--config", path, "--seed", "99", "--out", str(self.root / "out"))
        summary = json.loads((self.root / "out" / "summary.json").read_text(encoding="utf-8"))
        self.assertEqual(summary["seed"], 99)

    def test_config_errors_exit_with_two(self):
        bad = self.write_config({"outputs": ["nope"]})
        broken = self.root / "broken.json"
        broken.write_text("{", encoding="utf-8")
        for args in (
            ("report", "--config", bad),
            ("report", "--config", str(broken)),
            ("report", "--config", str(self.root / "missing.json")),
            ("report", "--budget", "huge"),
            ("bounds", "--input", "C=2"),
        ):
            with self.subTest(args=args), self.assertRaises(CommandError) as caught:
                self.call(*args)
            self.assertEqual(caught.exception.returncode, 2)

    def test_failed_checks_exit_with_one(self):
        with self.assertRaises(CommandError) as caught:
            self.call("greedy", "sets", "--m", "25")
        self.assertEqual(caught.exception.returncode, 1)

    def test_example_verify_single_check(self):
        text = self.call("example", "verify", "lemma71")
        (row,) = read_rows(text)
        self.assertEqual(row["holds"], "true")
        self.assertEqual(row["checked"], str(2**12 - 1 + 10_000))
