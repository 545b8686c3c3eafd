"""
Artifact writing.

Files go to a staging directory next to the output directory and are moved
into place only after the whole run succeeded.
"""
import csv
import io
import json
import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path

import jsonschema
from django.template.loader import render_to_string

from core.exceptions import ConsistencyError, ParameterError
from core.utils import get_setting, stable_json

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
SCHEMA_PATH = Path(__file__).resolve().parent / "schemas" / "run_summary.schema.json"


def load_summary_schema():
    with Path(get_setting("WAVESTAB_SUMMARY_SCHEMA", SCHEMA_PATH)).open() as handle:
        return json.load(handle)


def validate_summary(payload):
    """Check a summary document against the shipped schema"""
    try:
        jsonschema.validate(instance=payload, schema=load_summary_schema())
    except jsonschema.ValidationError as e:
        logger.error(f"Run summary does not match its schema: {e.message}")
        raise ConsistencyError("run summary does not match its schema", field="/".join(map(str, e.path)),
                               reason=e.message)
    return payload


def csv_text(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def json_table_text(header, rows):
    return stable_json([dict(zip(header, row)) for row in rows])


class ArtifactWriter:
    """Collects files in a staging directory; `written` lists their names in order"""

    def __init__(self, staging, table_format="csv"):
        if table_format not in FORMATS:
            raise ParameterError("table format must be csv or json", format=table_format)
        self.staging = Path(staging)
        self.table_format = table_format
        self.written = []

    def _write(self, name, text):
        if name in self.written:
            raise ConsistencyError("artifact written twice", name=name)
        (self.staging / name).write_text(text, encoding="utf-8")
        self.written.append(name)
        return name

    def table(self, stem, header, rows):
        """stem.csv with a header row, or stem.json as a list of records"""
        rows = list(rows)
        if self.table_format == "csv":
            return self._write(f"{stem}.csv", csv_text(header, rows))
        return self._write(f"{stem}.json", json_table_text(header, rows))

    def json(self, name, payload):
        return self._write(name, stable_json(payload))

    def svg(self, name, template, context):
        return self._write(name, render_to_string(template, context))


def _commit(staging, out_dir, names):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in names:
        os.replace(staging / name, out_dir / name)


@contextmanager
def staged_output(out_dir, table_format="csv"):
    """
    Yield an ArtifactWriter; on success its files replace those in out_dir,
    on any error nothing in out_dir changes.
    """
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.staging-", dir=out_dir.parent))
    writer = ArtifactWriter(staging, table_format)
    try:
        yield writer
        _commit(staging, out_dir, writer.written)
        logger.info(f"Wrote {len(writer.written)} artifacts to {out_dir}")
    except Exception:
        logger.error(f"Run failed; discarded {len(writer.written)} staged artifacts for {out_dir}")
        raise
    finally:
        shutil.rmtree(staging, ignore_errors=True)
