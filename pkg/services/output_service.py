# services/output_service.py

"""
Result files: <out>/<command>.csv and <out>/<command>_summary.json.

Floats are written with their shortest round-trip decimal and no timestamps
are recorded, so repeated runs with the same seed produce identical bytes.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence

import numpy as np

logger = logging.getLogger("output_service")


def plain(value: Any) -> Any:
    """numpy scalars and arrays, tuples and nested containers -> JSON-ready Python values"""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def _format(value: Any) -> str:
    value = plain(value)
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, rows: Sequence[Dict[str, Any]], fieldnames: List[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fieldnames = fieldnames or (list(rows[0].keys()) if rows else [])
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format(row.get(k)) for k in fieldnames})
    tmp.replace(path)
    return path


def write_summary(path: Path, payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(plain(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def write_outputs(out_dir: str, command: str, rows: Sequence[Dict[str, Any]], summary: Dict[str, Any],
                  fieldnames: List[str] = None) -> Dict[str, Path]:
    """Write both files of one run"""
    out = Path(out_dir)
    paths = {
        "csv": write_csv(out / f"{command}.csv", rows, fieldnames),
        "summary": write_summary(out / f"{command}_summary.json", summary),
    }
    logger.info(f"Wrote {len(rows)} rows to {paths['csv']}")
    return paths


def summary_line(command: str, summary: Dict[str, Any], keys: Sequence[str]) -> str:
    """One line for stdout, e.g. `phi value=0.75 stderr=0.0`"""
    parts = [f"{k}={_format(summary.get(k))}" for k in keys if k in summary]
    return " ".join([command] + parts)
