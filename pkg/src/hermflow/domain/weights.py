"""Positive weight fields used in the sup-estimate hypotheses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidGeometryError, InvalidParameterError
from .grid import GridGeometry

DOUBLY_PERIODIC = "doubly-periodic"
SPATIALLY_PERIODIC = "spatially-periodic"
CUSTOM = "custom"


@dataclass(frozen=True)
class WeightField:
    values: np.ndarray
    kind: str
    delta: float


def doubly_periodic_profile(s: np.ndarray, delta: float) -> np.ndarray:
    """(1 + |w|^2)^(-delta-1) with |w| = e^s, evaluated stably for large |s|."""
    s = np.asarray(s, dtype=float)
    # log(1 + e^{2s}) computed without overflow
    return np.exp(-(delta + 1.0) * np.logaddexp(0.0, 2.0 * s))


def line_profile(t: np.ndarray, delta: float) -> np.ndarray:
    """e^{-delta|t|} for |t| >= 1, even quadratic cap matching value and slope inside."""
    t = np.asarray(t, dtype=float)
    ed = np.exp(-delta)
    cap = ed * (1.0 + 0.5 * delta) - 0.5 * delta * ed * t * t
    return np.where(np.abs(t) >= 1.0, np.exp(-delta * np.abs(t)), cap)


def weight_field(kind: str, delta: float, g: GridGeometry, values: np.ndarray | None = None) -> WeightField:
    if not (delta > 0):
        raise InvalidParameterError(f"weight exponent delta must be positive, got {delta}")
    if kind == DOUBLY_PERIODIC:
        vals = doubly_periodic_profile(g.mesh("s"), delta)
    elif kind == SPATIALLY_PERIODIC:
        name = "t" if g.has_axis("t") else "s"
        if not g.has_axis(name):
            raise InvalidGeometryError("spatially-periodic weight needs a 't' or 's' axis")
        vals = line_profile(g.mesh(name), delta)
    elif kind == CUSTOM:
        if values is None:
            raise InvalidParameterError("custom weight needs explicit values")
        vals = np.asarray(values, dtype=float)
        if vals.shape != g.shape:
            raise InvalidParameterError(f"custom weight shape {vals.shape} != grid {g.shape}")
        if not np.all(vals > 0):
            raise InvalidParameterError("custom weight must be strictly positive")
    else:
        raise InvalidParameterError(f"unknown weight kind {kind!r}")
    return WeightField(np.ascontiguousarray(vals, dtype=float), kind, float(delta))
