"""CSV and JSON writers that stamp every file with the config hash and version.

Floats are written with ``repr``, the shortest string that reads back to
the same double, so identical runs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import numpy as np

from . import __version__
from .diagnostics import GriddedField, _jsonable


def _fmt(val):
    if isinstance(val, (float, np.floating)):
        return repr(float(val))
    if isinstance(val, (np.integer,)):
        return str(int(val))
    return str(val)


def header_lines(config_hash: str, extra: Dict[str, object] = None) -> List[str]:
    meta = {"kinfp_version": __version__, "config_hash": config_hash}
    meta.update(extra or {})
    return [f"# {k}: {v}" for k, v in meta.items()]


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], config_hash: str, extra=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for line in header_lines(config_hash, extra):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_field_csv(path, x, v, values, config_hash: str, t=None):
    """Long format ``x, v, f`` of a field at one time level."""
    X, V = np.meshgrid(x, v, indexing="ij")
    rows = zip(X.ravel(), V.ravel(), np.asarray(values).ravel())
    extra = {} if t is None else {"t": repr(float(t))}
    return write_csv(path, ("x", "v", "f"), rows, config_hash, extra)


def read_csv(path):
    """Header metadata and numeric columns of a file written by :func:`write_csv`."""
    meta = {}
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            else:
                body.append(line)
    reader = csv.reader(body)
    try:
        names = next(reader)
    except StopIteration:
        raise ValueError(f"{path} has no column header") from None
    cols = {n: [] for n in names}
    for row in reader:
        if len(row) != len(names):
            raise ValueError(f"{path}: row of length {len(row)} under {len(names)} columns")
        for n, val in zip(names, row):
            cols[n].append(float(val))
    return meta, {n: np.array(c) for n, c in cols.items()}


def read_field_csv(path) -> GriddedField:
    meta, cols = read_csv(path)
    missing = {"x", "v", "f"} - set(cols)
    if missing:
        raise ValueError(f"{path} lacks columns {sorted(missing)}")
    xs, vs = np.unique(cols["x"]), np.unique(cols["v"])
    if len(xs) * len(vs) != len(cols["f"]):
        raise ValueError(f"{path} is not a full tensor grid")
    values = np.full((len(xs), len(vs)), np.nan)
    values[np.searchsorted(xs, cols["x"]), np.searchsorted(vs, cols["v"])] = cols["f"]
    if np.isnan(values).any():
        raise ValueError(f"{path} is not a full tensor grid")
    return GriddedField(xs, vs, values)


def write_json(path, payload, config_hash: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"kinfp_version": __version__, "config_hash": config_hash}
    doc.update(_jsonable(payload))
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path
