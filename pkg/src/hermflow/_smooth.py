"""Smooth cutoffs built from exp(-1/t)."""

from __future__ import annotations

import numpy as np


def _flat(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, monotone in between."""
    a = _flat(t)
    b = _flat(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def seam_partition(b: np.ndarray, period: float = 1.0) -> np.ndarray:
    """rho with support in (-period, period), rho(b) + rho(b - period) = 1 on [0, period]."""
    u = np.asarray(b, dtype=float) / period
    return np.where(u >= 0, 1.0 - smooth_step(u), smooth_step(1.0 + u)) * (np.abs(u) < 1)


def band_cutoff(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """0 below lo, 1 above hi, smooth monotone transition."""
    return smooth_step((np.asarray(x, dtype=float) - lo) / (hi - lo))
