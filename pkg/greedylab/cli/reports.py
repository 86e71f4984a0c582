"""Report runs: tables in input order, written as CSV plus a manifest and a summary."""
import csv
import hashlib
import io
import json
import logging
from collections import Counter
from pathlib import Path

import billiard
from celery import group
from django.conf import settings

from constructions.serializers import SpacePresetSerializer

from .models import ReportBundle, TableResult
from .tables import execute_table, run_request
from .tasks import run_table_task

logger = logging.getLogger(__name__)


def _execute_packed(arguments):
    return execute_table(*arguments)


def run_tables(config, jobs=1):
    """Every requested table, merged in request order whatever the completion order."""
    requests = [(config.document, str(request.table), position) for position, request in enumerate(config.outputs)]
    if jobs <= 1 or len(requests) <= 1:
        return [run_request(config, request) for request in config.outputs]
    if settings.CELERY_TASK_ALWAYS_EAGER:
        with billiard.Pool(min(jobs, len(requests))) as workers:
            results = workers.map(_execute_packed, requests)
    else:
        results = group(run_table_task.s(*arguments) for arguments in requests).apply_async().get()
    return [TableResult.from_dict(result) for result in results]


def csv_text(result):
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=result.columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(result.rows)
    return buffer.getvalue()


def json_text(document):
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def file_stems(results):
    """``<table>``, then ``<table>-2``, ``<table>-3`` for repeated requests."""
    seen = Counter()
    stems = []
    for result in results:
        seen[result.table] += 1
        count = seen[result.table]
        stems.append(result.table if count == 1 else f"{result.table}-{count}")
    return stems


def build_bundle(config, results, out=None):
    texts = [csv_text(result) for result in results]
    stems = file_stems(results)
    manifest = {
        "seed": config.seed,
        "tables": {
            stem: {
                "table": result.table,
                "file": f"{stem}.csv",
                "columns": list(result.columns),
                "rows": len(result.rows),
                "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            }
            for stem, result, text in zip(stems, results, texts)
        },
    }
    preset = SpacePresetSerializer(config.preset).data
    summary = {
        "space": {"name": preset["name"], "spec_hash": preset["spec_hash"], "metadata": preset["metadata"]},
        "seed": config.seed,
        "budget": config.budget.as_dict(),
        "tables": [
            {"name": stem, "table": result.table, "rows": len(result.rows), "passed": result.passed}
            for stem, result in zip(stems, results)
        ],
        "estimates": [estimate for result in results for estimate in result.estimates],
        "certificates": [item for result in results for item in result.certificates],
        "failures": [failure for result in results for failure in result.failures],
        "passed": all(result.passed for result in results),
    }
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for stem, text in zip(stems, texts):
            (out / f"{stem}.csv").write_bytes(text.encode("utf-8"))
        (out / "manifest.json").write_bytes(json_text(manifest).encode("utf-8"))
        (out / "summary.json").write_bytes(json_text(summary).encode("utf-8"))
        logger.info(f"Wrote {len(results)} tables to {out}")
    return ReportBundle(out, tuple(results), manifest, summary)


def run(config, out=None, jobs=1):
    """Execute every table of ``config`` and, with ``out``, write the bundle there."""
    logger.info(f"Report on {config.preset.name}: {len(config.outputs)} tables, seed {config.seed}, {jobs} jobs")
    return build_bundle(config, run_tables(config, jobs), out)
