"""CSV export with a plain-text metadata sidecar.

Every table goes to ``<name>.csv`` with a header row, and ``<name>.meta.txt``
next to it records the config digest, seed, code version and backend. No
timestamps are written, so reruns produce byte-identical files.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

from . import __version__


class ExportError(OSError):
    pass


def _fmt(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return x


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def write_metadata(path, cfg=None, seed=None, extra=None) -> Path:
    path = Path(path)
    lines = [f"code_version = rispf {__version__}"]
    if cfg is not None:
        lines += [
            f"config_hash = {cfg.digest()}",
            f"seed = {cfg.seed if seed is None else seed}",
            f"mode = {cfg.mode}",
            f"n_trials = {cfg.n_trials}",
        ]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc.strerror or exc}") from None
    return path


def export(table, path, cfg, seed=None, extra=None) -> Path:
    """Write ``table`` (anything with ``header`` and ``rows``) plus its sidecar."""
    path = Path(path)
    if path.suffix != ".csv":
        path = path.with_suffix(".csv")
    write_csv(path, table.header, table.rows)
    write_metadata(path.with_suffix(".meta.txt"), cfg, seed, extra)
    return path


def export_trace(trace, path, cfg, seed=None) -> Path:
    path = Path(path)
    write_csv(path, trace.header(), trace.rows())
    write_metadata(path.with_suffix(".meta.txt"), cfg, seed, {"content": "per-slot trace"})
    return path
