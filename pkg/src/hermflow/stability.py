"""Slope comparisons and the monodromy obstruction for the rank-2 family."""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .bundle import MetricField
from .errors import HermflowError, InvalidInputError
from .functional import _interior_K, chern_weil_subdegree, degree

STABLE = "stable"
BOUNDARY = "semistable-boundary"
DESTABILIZED = "destabilized"


@dataclass(frozen=True)
class StabilityVerdict:
    sub_slope: float
    total_slope: float
    margin: float
    verdict: str
    source: str


def slope_compare(sub_deg: float, sub_rank: int, total_deg: float, total_rank: int, margin: float = 1e-6,
                  source: str = "chern-weil") -> StabilityVerdict:
    if not (0 < sub_rank < total_rank):
        raise InvalidInputError(f"need 0 < sub_rank < total_rank, got {sub_rank}, {total_rank}")
    mu_sub = sub_deg / sub_rank
    mu_tot = total_deg / total_rank
    gap = mu_tot - mu_sub
    if gap > margin:
        verdict = STABLE
    elif gap < -margin:
        verdict = DESTABILIZED
    else:
        verdict = BOUNDARY
    return StabilityVerdict(mu_sub, mu_tot, margin, verdict, source)


def monodromy_roots(a: complex, w):
    """Roots of T^2 - (w + 1/w) T + 1 - a^2, beta_1 being the one of larger modulus (~w near infinity)."""
    w_arr = np.asarray(w, dtype=complex)
    if np.any(w_arr == 0):
        raise InvalidInputError("monodromy roots need w != 0")
    q = w_arr + 1.0 / w_arr
    disc = np.sqrt(q * q - 4.0 * (1.0 - a * a))
    plus = q + disc
    minus = q - disc
    big = np.where(np.abs(plus) >= np.abs(minus), plus, minus) / 2.0
    beta1 = big
    beta2 = (1.0 - a * a) / beta1
    if np.ndim(w) == 0:
        return complex(beta1), complex(beta2)
    return beta1, beta2


@dataclass(frozen=True)
class Obstruction:
    multivalued: bool
    discriminant_roots: list
    min_root_separation: float


def eigen_subbundle_obstruction(a: complex, sep_tol: float = 1e-6) -> Obstruction:
    """Roots of w^4 + (4a^2 - 2) w^2 + 1; eigenvalues are multivalued iff all are simple."""
    a = complex(a)
    coeffs = [1.0, 0.0, 4.0 * a * a - 2.0, 0.0, 1.0]
    roots = [complex(r) for r in np.roots(coeffs)]
    roots.sort(key=lambda z: (round(z.real, 12), round(z.imag, 12)))
    sep = min(abs(x - y) for x, y in combinations(roots, 2))
    return Obstruction(bool(sep > sep_tol), roots, float(sep))


def chern_weil_stability_scan(H0: MetricField, candidates: list, mask=None, margin: float = 1e-6) -> list:
    """Verdict per projector candidate; failures are returned as error strings in place."""
    K = _interior_K(H0)
    total = degree(H0, mask)
    r = H0.rank
    out = []
    for pi in candidates:
        try:
            pi = np.asarray(pi)
            rank_v = int(round(float(np.real(np.trace(pi, axis1=-2, axis2=-1)).mean())))
            sub = chern_weil_subdegree(H0, pi, mask, K=K)
            out.append(slope_compare(sub, rank_v, total, r, margin))
        except HermflowError as exc:
            out.append(str(exc))
    return out


def principal_sqrt(z):
    return cmath.sqrt(z) if np.ndim(z) == 0 else np.sqrt(np.asarray(z, dtype=complex))
