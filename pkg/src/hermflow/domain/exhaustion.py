"""Nested sublevel-set families exhausting a truncated grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidGeometryError, InvalidParameterError
from .grid import GridGeometry, boundary


@dataclass(frozen=True)
class ExhaustionFamily:
    rho: np.ndarray
    levels: tuple[float, ...]
    masks: tuple[np.ndarray, ...]
    boundaries: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.levels)


def exhaustion_family(g: GridGeometry, levels, rho: np.ndarray | None = None, tol: float = 1e-9) -> ExhaustionFamily:
    """Masks {rho <= a_i}; rho defaults to |s|.

    The top level must cover the whole grid (use max(rho)).
    """
    levels = tuple(float(a) for a in levels)
    if len(levels) < 1:
        raise InvalidParameterError("need at least one level")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidParameterError(f"levels must be strictly increasing, got {levels}")
    if rho is None:
        rho = np.abs(np.asarray(g.mesh("s")))
    rho = np.asarray(rho, dtype=float)
    if rho.shape != g.shape:
        raise InvalidGeometryError("rho must live on the grid")
    masks = tuple(rho <= a + tol for a in levels)
    if not masks[-1].all():
        raise InvalidGeometryError("the largest level must contain every site")
    bnds = tuple(boundary(m, g) for m in masks)
    for a, m, bd in zip(levels, masks, bnds):
        if not m.any() or not bd.any():
            raise InvalidGeometryError(f"level {a} has an empty mask or boundary")
    return ExhaustionFamily(rho, levels, masks, bnds)
