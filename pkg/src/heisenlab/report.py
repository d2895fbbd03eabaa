"""Report emission: report.json, metadata.json, summary.csv and curves/*.csv.

report.json is a pure function of the configuration: keys are sorted, floats
are written with 12 significant digits and run-dependent facts (timestamps,
versions, timings, cache statistics) go to metadata.json instead.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import re
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from heisenlab import __version__

SIG_DIGITS = 12


def to_jsonable(obj, digits: int | None = None):
    """Plain JSON types; non-finite floats become "inf", "-inf" or "nan".

    With `digits` set, finite floats are rounded to that many significant digits.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v, digits) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{digits}g}") if digits else x
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj, SIG_DIGITS), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._=-]+", "_", text).strip("_")


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, float):
        return f"{v:.{SIG_DIGITS}g}"
    return "" if v is None else v


SUMMARY_HEADER = ("family", "pipeline", "q", "order", "verdict", "expected", "match")


def write_outputs(out_dir, report: dict, summary: list, curves: dict, metadata: dict) -> dict:
    """Write every artifact; returns the paths written keyed by kind."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(report))
    (out / "metadata.json").write_text(dumps(metadata))
    write_csv(out / "summary.csv", SUMMARY_HEADER, summary)
    written = {"report": out / "report.json", "metadata": out / "metadata.json", "summary": out / "summary.csv",
               "curves": []}
    for name in sorted(curves):
        header, rows = curves[name]
        path = out / "curves" / f"{_slug(name)}.csv"
        write_csv(path, header, rows)
        written["curves"].append(path)
    return written


def run_metadata(command: str, started: datetime, elapsed: float, cache_stats: dict) -> dict:
    return {
        "command": command,
        "started": started.astimezone(timezone.utc).isoformat(timespec="seconds"),
        "elapsed_seconds": round(elapsed, 3),
        "heisenlab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
        "cache": cache_stats,
    }
