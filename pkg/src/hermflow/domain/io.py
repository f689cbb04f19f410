"""Field container: a JSON header line followed by row-major little-endian data.

Layout of a ``.hfld`` file::

    {"format": "hermflow-field", "version": 1, "axes": [...], "pairing": [...],
     "reduced": [...], "dtype": "<c16", "shape": [...], "rank": r, "form": null}\\n
    <raw bytes, C order>

``shape`` is the full array shape (grid dimensions then trailing indices);
``rank`` and ``form`` describe the trailing indices and may be null.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from .grid import Axis, GridGeometry, ReducedAxis

MAGIC = "hermflow-field"


def geometry_header(g: GridGeometry) -> dict:
    return {
        "axes": [
            {"name": a.name, "length": a.length, "points": a.points, "rule": a.rule, "start": a.start}
            for a in g.axes
        ],
        "pairing": [list(p) for p in g.complex_pairing],
        "reduced": [{"name": r.name, "length": r.length} for r in g.reduced_axes],
    }


def geometry_from_header(h: dict) -> GridGeometry:
    axes = tuple(Axis(a["name"], a["length"], a["points"], a["rule"], a.get("start", 0.0)) for a in h["axes"])
    red = tuple(ReducedAxis(r["name"], r["length"]) for r in h.get("reduced", []))
    return GridGeometry(axes, tuple(tuple(p) for p in h["pairing"]), red)


def save_field(path: str | Path, data: np.ndarray, g: GridGeometry, rank: int | None = None, form=None) -> None:
    arr = np.ascontiguousarray(data)
    if arr.shape[: g.ndim] != g.shape:
        raise InvalidInputError(f"array shape {arr.shape} does not start with grid shape {g.shape}")
    arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
    header = {"format": MAGIC, "version": 1, **geometry_header(g),
              "dtype": arr.dtype.str, "shape": list(arr.shape), "rank": rank, "form": form}
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(arr.tobytes(order="C"))


def load_field(path: str | Path) -> tuple[np.ndarray, GridGeometry, dict]:
    path = Path(path)
    with path.open("rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: bad header") from exc
        if header.get("format") != MAGIC:
            raise InvalidInputError(f"{path}: not a hermflow field file")
        raw = fh.read()
    arr = np.frombuffer(raw, dtype=np.dtype(header["dtype"])).reshape(header["shape"]).copy()
    return arr, geometry_from_header(header), header
