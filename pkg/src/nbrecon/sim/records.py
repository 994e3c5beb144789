"""CSV output and key = value experiment configuration files."""

from __future__ import annotations

import csv
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .engine import ExperimentSpec, StudyRow, SweepPoint, SweepResult, ThresholdResult

POINT_COLUMNS = ["snr_db", "rho", "fer", "ci_lo", "ci_hi", "beta", "frames", "iters_mean",
                 "errors", "undetected"]


def point_record(point: SweepPoint, **labels) -> dict:
    rec = dict(labels)
    values = asdict(point)
    rec.update({k: values[k] for k in POINT_COLUMNS})
    return rec


def to_records(result, **labels) -> list:
    """Flatten sweep results, study rows or threshold searches into CSV rows."""
    if isinstance(result, SweepResult):
        return [point_record(p, **labels) for p in result.points]
    if isinstance(result, ThresholdResult):
        if result.point is None:
            rec = dict(labels, status=result.status)
            rec.update({k: float("nan") for k in POINT_COLUMNS})
            return [rec]
        return [dict(point_record(result.point, **labels), status=result.status)]
    if isinstance(result, SweepPoint):
        return [point_record(result, **labels)]
    records = []
    for item in result:
        if isinstance(item, StudyRow):
            records.append(point_record(item.point, **{item.label: item.value}, **labels))
        elif isinstance(item, dict):
            records.append(dict(labels, **item))
        else:
            records.extend(to_records(item, **labels))
    return records


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def emit_csv(result, path, **labels) -> Path:
    """Write results as CSV with a header row; returns the path."""
    records = result if isinstance(result, list) and result and isinstance(result[0], dict) \
        else to_records(result, **labels)
    columns = []
    for rec in records:
        for key in rec:
            if key not in columns:
                columns.append(key)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for rec in records:
                writer.writerow([_fmt(rec.get(c, "")) for c in columns])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _parse_cell(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_csv(path) -> list:
    """Parse a CSV written by :func:`emit_csv` back into dicts of numbers."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            return [{k: _parse_cell(v) for k, v in row.items()} for row in csv.DictReader(fh)]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc


def parse_snr_grid(text: str) -> tuple:
    """``"8,9,10"`` or ``"start:stop:step"`` (inclusive stop) in dB."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("SNR step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


def _convert(name: str, text: str):
    default = ExperimentSpec.__dataclass_fields__[name].default
    if name == "snr_db":
        return parse_snr_grid(text)
    if name in ("rate", "workers"):
        if text.lower() in ("none", ""):
            return None
        return float(text) if name == "rate" else int(text)
    if name == "code_file":
        return None if text.lower() in ("none", "") else text
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def parse_config(text: str, source: str = "<config>") -> dict:
    """Read ``key = value`` lines (``#`` starts a comment) into spec overrides."""
    values = {}
    known = set(ExperimentSpec.field_names())
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ValueError(f"{source}:{lineno}: expected 'key = value'")
        if key not in known:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return values


def load_config(path) -> dict:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def spec_from(overrides: dict, base: ExperimentSpec | None = None) -> ExperimentSpec:
    base = base or ExperimentSpec()
    return base.replace(**overrides)
