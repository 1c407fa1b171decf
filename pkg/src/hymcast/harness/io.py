"""CSV emitters and readers. All numbers use 10 significant digits and LF line endings."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

RUN_HEADER = ("sweep_point", "realization", "seed", "mode", "n_packets", "p_tx_dbm", "mask", "wall_time_s")
AGGREGATE_HEADER = ("sweep_point", "mode", "mean_n_packets", "mean_p_tx_dbm", "n_realizations")
HISTOGRAM_HEADER = ("bin_low", "bin_high", "intra_prob", "inter_prob")
PATTERN_HEADER = ("angle_deg", "magnitude")


def fmt(value) -> str:
    """Render one cell: integers verbatim, floats with ``%.10g``, ``None`` as empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.10g" % float(value)
    return str(value)


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_rows(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_runs(path, runs) -> Path:
    return write_rows(path, RUN_HEADER, (
        (r.sweep_point, r.realization, r.seed, r.mode, r.n_packets, r.p_tx_dbm, r.mask, float(r.wall_time_s))
        for r in runs
    ))


def write_aggregates(path, aggregates) -> Path:
    return write_rows(path, AGGREGATE_HEADER, (
        (a.sweep_point, a.mode, a.mean_n_packets, a.mean_p_tx_dbm, a.n_realizations) for a in aggregates
    ))


def write_points(path, points) -> Path:
    """Sweep-point index with the axis values it applies, as JSON text per row."""
    return write_rows(path, ("sweep_point", "assignment"), (
        (i, json.dumps({k: list(v) if isinstance(v, tuple) else v for k, v in p.items()}, sort_keys=True))
        for i, p in enumerate(points)
    ))


def write_histogram(path, hist) -> Path:
    return write_rows(path, HISTOGRAM_HEADER, hist.rows())


def write_pattern(path, pattern) -> Path:
    return write_rows(path, PATTERN_HEADER, ((float(a), float(m)) for a, m in np.asarray(pattern)))
