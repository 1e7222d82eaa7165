"""JSON and CSV report writers.

JSON goes through ``orjson`` with sorted keys and a ``{meta, config, results}``
envelope; CSV goes through ``polars``. Files are written to a temporary sibling
and moved into place with ``os.replace``.
"""

import logging
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path

import orjson
import polars as pl

from polyvar import __version__
from polyvar.errors import NotFiniteError, ReportIoError

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "n",
    "body",
    "theta_hash",
    "e_x2",
    "var_x2",
    "lambda2",
    "variance_ratio",
    "ratio_se",
    "sigma",
    "thin_shell_ratio",
    "b2",
    "a_eta",
    "n3_var",
)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def build_envelope(results: dict, config: dict, seed: int, argv: list[str]) -> dict:
    """Wrap results with run metadata."""
    return {
        "meta": {
            "version": __version__,
            "seed": seed,
            "timestamp_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "argv": list(argv),
        },
        "config": config,
        "results": results,
    }


def ensure_finite(value, path: str = "results") -> None:
    """Raise :class:`NotFiniteError` on the first NaN or infinity inside ``value``."""
    if isinstance(value, float):
        if not math.isfinite(value):
            raise NotFiniteError(f"{path} is {value}")
    elif isinstance(value, dict):
        for key, item in value.items():
            ensure_finite(item, f"{path}.{key}")
    elif isinstance(value, list | tuple):
        for i, item in enumerate(value):
            ensure_finite(item, f"{path}[{i}]")
    elif hasattr(value, "dtype") and hasattr(value, "tolist"):
        ensure_finite(value.tolist(), path)


def render_json(envelope: dict) -> bytes:
    """Serialize an envelope, refusing non-finite numbers in ``results``."""
    ensure_finite(envelope.get("results", {}))
    return orjson.dumps(envelope, option=JSON_OPTIONS) + b"\n"


def render_csv(rows: list[dict], columns: tuple[str, ...] | list[str]) -> bytes:
    """Rows as CSV with a fixed header order; missing values become empty fields."""
    ensure_finite(rows, "rows")
    schema_rows = [{column: row.get(column) for column in columns} for row in rows]
    if schema_rows:
        frame = pl.DataFrame(schema_rows, infer_schema_length=None)
    else:
        frame = pl.DataFrame({column: [] for column in columns})
    return frame.select(list(columns)).write_csv(line_terminator="\n").encode()


def _write_atomic(payload: bytes, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def emit_report(
    envelope: dict,
    fmt: str,
    path: str | os.PathLike | None,
    *,
    rows: list[dict] | None = None,
    columns: tuple[str, ...] | list[str] = SWEEP_COLUMNS,
) -> None:
    """Write a report as JSON (the envelope) or CSV (``rows`` under ``columns``).

    ``path`` of ``None`` or ``"-"`` writes to standard output.

    Raises:
        NotFiniteError: a result value is NaN or infinite.
        ReportIoError: the destination cannot be written.
    """
    if fmt == "json":
        payload = render_json(envelope)
    elif fmt == "csv":
        payload = render_csv(rows if rows is not None else [], columns)
    else:
        raise ValueError(f"unknown report format {fmt!r}")

    if path is None or str(path) == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
        return
    destination = Path(path)
    try:
        _write_atomic(payload, destination)
    except OSError as e:
        raise ReportIoError(f"cannot write report to {destination}: {e}") from e
    logger.info(f"Wrote {fmt} report to {destination}")
