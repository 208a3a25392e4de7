"""On-disk dataset format.

A dataset is a directory holding

* ``data.tsv``: header ``intervention<TAB>v1<TAB>...<TAB>vp``, then one row
  per sample: the regime index (0 = observational, k = intervention on node
  k) followed by p floats;
* ``meta.json``: ``p``, per-regime sample counts and optional provenance
  (``seed``, ``scenario``, ``truth``, ``sigmas``).

Floats are written in Python's shortest round-trip form, so a write/read
cycle reproduces every value exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import InterventionalDataset
from .errors import DatasetParseError

DATA_FILE = "data.tsv"
META_FILE = "meta.json"


def _data_path(path) -> Path:
    path = Path(path)
    return path / DATA_FILE if path.is_dir() else path


def write_dataset(dataset: InterventionalDataset, path, **meta) -> Path:
    """Write ``dataset`` into directory ``path`` (created if needed).

    Extra keyword arguments (``seed``, ``scenario``, ``truth``, ``sigmas``)
    are stored in ``meta.json`` when not ``None``.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    p = dataset.p
    with open(out / DATA_FILE, "w") as fh:
        fh.write("\t".join(["intervention"] + [f"v{j + 1}" for j in range(p)]) + "\n")
        for k, X in dataset:
            for row in X:
                fh.write(str(k) + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")
    info = {"p": p, "regime_counts": {str(k): n for k, n in dataset.sample_counts.items()}}
    info.update({key: value for key, value in meta.items() if value is not None})
    (out / META_FILE).write_text(json.dumps(info, indent=2) + "\n")
    return out


def read_meta(path) -> dict:
    path = Path(path)
    meta = (path if path.is_dir() else path.parent) / META_FILE
    return json.loads(meta.read_text()) if meta.exists() else {}


def read_dataset(path) -> InterventionalDataset:
    """Parse a dataset directory (or its ``data.tsv`` directly).

    Raises:
        DatasetParseError: malformed header, ragged row, bad regime index or
            non-numeric cell; the message names the offending line.
    """
    data_path = _data_path(path)
    with open(data_path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if not header or header[0] != "intervention":
            raise DatasetParseError("header must start with 'intervention'", 1)
        p = len(header) - 1
        if p < 1:
            raise DatasetParseError("header names no variables", 1)
        rows: dict[int, list[list[float]]] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cells = line.split("\t")
            if len(cells) != p + 1:
                raise DatasetParseError(f"expected {p + 1} fields, found {len(cells)}", lineno)
            try:
                k = int(cells[0])
            except ValueError:
                raise DatasetParseError(f"regime index {cells[0]!r} is not an integer", lineno) from None
            if not 0 <= k <= p:
                raise DatasetParseError(f"regime index {k} out of range 0..{p}", lineno)
            try:
                values = [float(c) for c in cells[1:]]
            except ValueError as exc:
                raise DatasetParseError(f"non-numeric cell: {exc}", lineno) from None
            if not all(np.isfinite(values)):
                raise DatasetParseError("non-finite value", lineno)
            rows.setdefault(k, []).append(values)
    if not rows:
        raise DatasetParseError("no regimes")
    return InterventionalDataset(p, {k: np.array(v) for k, v in rows.items()})
