# Output pipelines for experiment rows
#
# Rows from trim_ergodic.items are written as CSV, as a JSON document with a
# config header block, or into an SQLite database (see datasette/metadata.yaml
# for canned queries on it). Output is bit-stable for identical rows.

import csv
import io
import json
import logging
import sqlite3
from fractions import Fraction
from pathlib import Path

from trim_ergodic import settings
from trim_ergodic.exceptions import ConfigError, PersistenceError
from trim_ergodic.items import ROW_TYPES, column_names

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "sqlite")


def csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return repr(float(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def json_value(value):
    if isinstance(value, Fraction):
        return str(value)
    return value


def decode_value(value):
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError:
            return value
    return value


def db_value(value):
    if isinstance(value, Fraction):
        return str(value)
    return value


def render_csv(rows, row_type) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(column_names(row_type))
    for row in rows:
        writer.writerow([csv_value(v) for v in row.values()])
    return buffer.getvalue()


def render_json(rows, row_type, header: dict | None = None) -> str:
    document = {
        "config": header or {},
        "table": row_type.TABLE,
        "columns": column_names(row_type),
        "rows": [[json_value(v) for v in row.values()] for row in rows],
    }
    return json.dumps(document, indent=2) + "\n"


class DBClient:
    """SQLite store: one row in ``runs`` per persisted result set."""

    def __init__(self, db_path: str | Path = settings.SQLITE_DB_PATH):
        try:
            self.connection = sqlite3.connect(db_path)
        except sqlite3.Error as exc:
            raise PersistenceError(f"{db_path}: {exc}") from exc
        self.db_path = db_path

    def create_schema(self):
        with self.connection:
            self.connection.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                kind TEXT NOT NULL,
                config TEXT NOT NULL
            )""")
            for row_type in ROW_TYPES.values():
                columns = ",\n".join(f'"{name}" {sql_type}' for name, sql_type in row_type.COLUMNS)
                self.connection.execute(f"""
                CREATE TABLE IF NOT EXISTS {row_type.TABLE} (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER NOT NULL,
                    {columns},
                    FOREIGN KEY(run_id) REFERENCES runs(id)
                )""")

    def save_run(self, rows, row_type, header: dict | None = None) -> int:
        with self.connection:
            run_id = self.connection.execute(
                "INSERT INTO runs (kind, config) VALUES (?, ?) RETURNING id",
                (row_type.TABLE, json.dumps(header or {}, sort_keys=True)),
            ).fetchone()[0]
            self._save_rows(run_id, rows, row_type)
        logger.info("Saved %d %s for run %d", len(rows), row_type.TABLE, run_id)
        return run_id

    def _save_rows(self, run_id, rows, row_type):
        names = ", ".join(f'"{name}"' for name in column_names(row_type))
        marks = ", ".join("?" for _ in row_type.COLUMNS)
        self.connection.executemany(
            f"INSERT INTO {row_type.TABLE} (run_id, {names}) VALUES (?, {marks})",
            ([run_id, *(db_value(v) for v in row.values())] for row in rows),
        )

    def load_run(self, run_id: int, row_type) -> list:
        names = ", ".join(f'"{name}"' for name in column_names(row_type))
        result = self.connection.execute(
            f"SELECT {names} FROM {row_type.TABLE} WHERE run_id = ? ORDER BY id", (run_id,)
        ).fetchall()
        return [row_type(*(decode_value(v) for v in record)) for record in result]

    def close(self):
        self.connection.commit()
        self.connection.close()


def persist(rows, path: str | Path, format: str, row_type=None, header: dict | None = None) -> None:
    """Write rows to ``path`` as csv, json or sqlite.

    ``row_type`` is needed for an empty row list; ``header`` is the effective
    configuration echoed into JSON and SQLite output.
    """
    rows = list(rows)
    if row_type is None:
        if not rows:
            raise ValueError("an empty row list needs an explicit row_type")
        row_type = type(rows[0])
    if format not in FORMATS:
        raise ConfigError(f"unknown output format {format!r}, expected one of {FORMATS}")
    path = Path(path)
    try:
        match format:
            case "csv":
                path.write_text(render_csv(rows, row_type), encoding="utf-8")
            case "json":
                path.write_text(render_json(rows, row_type, header), encoding="utf-8")
            case "sqlite":
                client = DBClient(path)
                try:
                    client.create_schema()
                    client.save_run(rows, row_type, header)
                finally:
                    client.close()
    except (OSError, sqlite3.Error) as exc:
        raise PersistenceError(f"could not write {path}: {exc}") from exc
    logger.debug("wrote %d rows to %s (%s)", len(rows), path, format)


def load_json(path: str | Path):
    """Read a JSON result file back into (config header, rows)."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise PersistenceError(f"could not read {path}: {exc}") from exc
    row_type = ROW_TYPES[document["table"]]
    rows = [row_type(*(decode_value(v) for v in values)) for values in document["rows"]]
    return document["config"], rows
