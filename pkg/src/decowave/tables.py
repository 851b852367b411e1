"""Time-series tables: long-format CSV and schema-versioned JSON.

CSV files have the header ``t,site,axis,value`` with rows ordered by time,
then by record. Pre-projection samples taken at event times go to a sidecar
``<stem>.pre_event.csv`` with the same header. Floats are written with
``repr`` so that import(export(x)) == x exactly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DecowaveError
from .observables import Spectrum, TimeSeriesRecord

SERIES_SCHEMA = "decowave.timeseries"
SPECTRUM_SCHEMA = "decowave.spectrum"
SCHEMA_VERSION = 1
CSV_HEADER = ["t", "site", "axis", "value"]
FORMATS = ("csv", "json")


class TableIOError(DecowaveError, OSError):
    exit_code = 2


def _pre_event_path(path: Path) -> Path:
    return path.with_name(path.stem + ".pre_event.csv")


def _write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t, site, axis, value in rows:
            writer.writerow([repr(float(t)), site, axis, repr(float(value))])


def export_table(records, path, fmt: str | None = None) -> list[Path]:
    """Write records; returns the files written."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    if fmt not in FORMATS:
        raise TableIOError(f"{path}: unknown table format {fmt!r}")
    records = list(records)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            doc = {
                "schema": SERIES_SCHEMA,
                "version": SCHEMA_VERSION,
                "records": [
                    {
                        "site": r.site,
                        "axis": r.axis,
                        "times": [float(t) for t in r.times],
                        "values": [float(v) for v in r.values],
                        "pre_event": [[float(t), float(v)] for t, v in sorted(r.pre_event.items())],
                    }
                    for r in records
                ],
            }
            path.write_text(json.dumps(doc))
            return [path]
        rows = [(t, r.site, r.axis, v) for i, r in enumerate(records) for t, v in zip(r.times, r.values)]
        order = sorted(range(len(rows)), key=lambda k: rows[k][0])
        _write_rows(path, [rows[k] for k in order])
        written = [path]
        pre = [(t, r.site, r.axis, v) for r in records for t, v in sorted(r.pre_event.items())]
        if pre:
            pre.sort(key=lambda row: row[0])
            _write_rows(_pre_event_path(path), pre)
            written.append(_pre_event_path(path))
        return written
    except OSError as exc:
        raise TableIOError(f"{path}: {exc}") from exc


def _read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise TableIOError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for t, site, axis, value in reader:
            yield float(t), int(site), axis, float(value)


def import_table(path) -> list[TimeSeriesRecord]:
    path = Path(path)
    try:
        if path.suffix == ".json":
            doc = json.loads(path.read_text())
            if doc.get("schema") != SERIES_SCHEMA or doc.get("version") != SCHEMA_VERSION:
                raise TableIOError(f"{path}: not a {SERIES_SCHEMA} v{SCHEMA_VERSION} document")
            return [
                TimeSeriesRecord(r["site"], r["axis"], r["times"], r["values"], {t: v for t, v in r["pre_event"]})
                for r in doc["records"]
            ]
        series: dict[tuple, tuple[list, list]] = {}
        for t, site, axis, value in _read_rows(path):
            ts, vs = series.setdefault((site, axis), ([], []))
            ts.append(t)
            vs.append(value)
        pre: dict[tuple, dict] = {}
        if _pre_event_path(path).exists():
            for t, site, axis, value in _read_rows(_pre_event_path(path)):
                pre.setdefault((site, axis), {})[t] = value
        return [TimeSeriesRecord(k[0], k[1], ts, vs, pre.get(k, {})) for k, (ts, vs) in series.items()]
    except (OSError, ValueError, KeyError) as exc:
        raise TableIOError(f"{path}: {exc}") from exc


def export_spectrum(spectrum: Spectrum, path, fmt: str | None = None, meta: dict | None = None) -> Path:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            doc = {
                "schema": SPECTRUM_SCHEMA,
                "version": SCHEMA_VERSION,
                "window": spectrum.window,
                "detrend": spectrum.detrend,
                "dt": spectrum.dt,
                "n_samples": spectrum.n_samples,
                "dominant_frequency": spectrum.dominant_frequency(),
                "omegas": spectrum.omegas.tolist(),
                "magnitudes": spectrum.magnitudes.tolist(),
            }
            doc.update(meta or {})
            path.write_text(json.dumps(doc))
        elif fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["omega", "magnitude"])
                for w, m in zip(spectrum.omegas, spectrum.magnitudes):
                    writer.writerow([repr(float(w)), repr(float(m))])
        else:
            raise TableIOError(f"{path}: unknown spectrum format {fmt!r}")
    except OSError as exc:
        raise TableIOError(f"{path}: {exc}") from exc
    return path


def grid_view(records, axis: str = "z") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(times, sites, values[t, site]) for the magnetization records of one axis."""
    chosen = sorted((r for r in records if r.axis == axis), key=lambda r: r.site)
    if not chosen:
        raise TableIOError(f"no records with axis {axis!r}")
    times = chosen[0].times
    for r in chosen:
        if not np.array_equal(r.times, times):
            raise TableIOError("records do not share a time grid")
    return times, np.array([r.site for r in chosen]), np.column_stack([r.values for r in chosen])
