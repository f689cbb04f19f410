"""Numeric verifiers for the weighted sup-estimate and its one-dimensional lemmas."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as spi
from scipy import sparse
from scipy.sparse import linalg as spla

from ..errors import InvalidInputError, NumericalError, ShapeError
from .grid import DIRICHLET, GridGeometry, integrate, laplacian
from .weights import WeightField, line_profile


def laplacian_matrix(g: GridGeometry) -> sparse.csr_matrix:
    """Sparse matrix of the compact -(1/2) Laplacian with wraparound on every axis.

    Rows belonging to Dirichlet end sites are meaningless; callers restrict.
    """
    n = int(np.prod(g.shape))
    idx = np.arange(n).reshape(g.shape)
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    for i, ax in enumerate(g.axes):
        c = 0.5 / ax.spacing**2
        for shift in (1, -1):
            nb = np.roll(idx, shift, axis=i).ravel()
            rows.append(idx.ravel())
            cols.append(nb)
            vals.append(np.full(n, -c))
        diag += 2.0 * c
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag)
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def dirichlet_ends(g: GridGeometry) -> np.ndarray:
    out = np.zeros(g.shape, dtype=bool)
    for i, ax in enumerate(g.axes):
        if ax.rule == DIRICHLET:
            sl = [slice(None)] * g.ndim
            sl[i] = 0
            out[tuple(sl)] = True
            sl[i] = -1
            out[tuple(sl)] = True
    return out


def poisson_solve(rhs: np.ndarray, g: GridGeometry, boundary_values: np.ndarray | None = None) -> np.ndarray:
    """Solve laplacian(f) = rhs away from Dirichlet ends, with f fixed on the ends.

    The grid must carry at least one Dirichlet axis (otherwise the problem is singular).
    """
    fixed = dirichlet_ends(g)
    if not fixed.any():
        raise InvalidInputError("poisson_solve needs a Dirichlet axis")
    bv = np.zeros(g.shape) if boundary_values is None else np.asarray(boundary_values, dtype=float)
    L = laplacian_matrix(g)
    free = ~fixed.ravel()
    A = L[free][:, free]
    b = np.asarray(rhs, dtype=float).ravel()[free] - L[free][:, ~free] @ bv.ravel()[~free]
    # A is symmetric positive definite (the laplacian is the positive one); direct solves fill in badly in 4D
    scale = max(float(np.abs(b).max(initial=0.0)), 1e-300)
    sol, info = spla.cg(A.tocsr(), b / scale, rtol=1e-13, atol=0.0, maxiter=20 * A.shape[0])
    if info != 0:
        raise NumericalError(f"poisson_solve: conjugate gradients did not converge (info={info})")
    sol = sol * scale
    out = bv.copy().ravel()
    out[free] = sol
    return out.reshape(g.shape)


@dataclass(frozen=True)
class SupEstimateReport:
    sup_f: float
    integral_f_phi: float
    fitted_C: float
    hypothesis_ok: bool
    max_violation: float


def sup_estimate_verify(f: np.ndarray, phi: WeightField, B: float, g: GridGeometry, rtol: float = 1e-8) -> SupEstimateReport:
    """Check laplacian(f) <= B*phi pointwise, then report sup f / (1 + int f phi)."""
    f = np.asarray(f, dtype=float)
    if f.shape != g.shape:
        raise ShapeError(f"field shape {f.shape} != grid {g.shape}")
    if np.any(f < 0):
        raise InvalidInputError("sup estimate needs f >= 0")
    lap = laplacian(f, g)
    excess = lap - B * phi.values
    ok_sites = np.isfinite(excess)
    scale = max(float(np.abs(lap[ok_sites]).max(initial=0.0)), B * float(phi.values.max()), 1e-300)
    viol = float(np.max(excess[ok_sites], initial=-np.inf))
    sup_f = float(f.max())
    ifp = float(integrate(f * phi.values, g))
    return SupEstimateReport(
        sup_f=sup_f,
        integral_f_phi=ifp,
        fitted_C=sup_f / (1.0 + ifp),
        hypothesis_ok=bool(viol <= rtol * scale),
        max_violation=max(viol, 0.0),
    )


# -- decay lemma on the complement of a ball ---------------------------------

def ahlfors_epsilon1(C0: float, R1: float, n: int) -> float:
    """Positive root of e^2 + (n-1) e / R1 - C0 = 0, the comparison rate of the proof."""
    b = (n - 1) / R1
    return 0.5 * (-b + math.sqrt(b * b + 4.0 * C0))


@dataclass(frozen=True)
class AhlforsReport:
    epsilon: float
    hypothesis_ok: bool
    max_violation: float
    fit_points: int


def radius_field(g: GridGeometry, center: tuple[float, ...] | None = None) -> np.ndarray:
    center = center or (0.0,) * g.ndim
    r2 = np.zeros(g.shape)
    for i, ax in enumerate(g.axes):
        r2 = r2 + (g.mesh(ax.name) - center[i]) ** 2
    return np.sqrt(r2)


def ahlfors_decay_check(gfield: np.ndarray, C0: float, g: GridGeometry, R: float,
                        center: tuple[float, ...] | None = None, rtol: float = 1e-9) -> AhlforsReport:
    """Fit the exponential decay rate of g on {r >= R}, after checking (-sum d^2) g <= -C0 g there.

    The lemma uses the full flat Laplacian, twice the domain's normalized one.
    """
    gf = np.asarray(gfield, dtype=float)
    if gf.shape != g.shape:
        raise ShapeError(f"field shape {gf.shape} != grid {g.shape}")
    if np.any(gf < 0):
        raise InvalidInputError("decay check needs g >= 0")
    r = radius_field(g, center)
    region = r >= R
    inner = region.copy()
    for i, ax in enumerate(g.axes):
        for sh in (1, -1):
            inner &= np.roll(region, sh, axis=i)
    inner &= ~dirichlet_ends(g)
    full_lap = 2.0 * laplacian(gf, g)
    excess = full_lap + C0 * gf
    scale = max(float(np.abs(gf[region]).max(initial=0.0)), 1e-300)
    viol = float(np.max(excess[inner], initial=-np.inf))
    ok = bool(viol <= rtol * scale * max(1.0, C0))
    if not np.any(gf[region] > 0):
        return AhlforsReport(math.inf, ok, max(viol, 0.0), 0)
    rmax = float(r[region].max())
    outer = region & (r >= 0.5 * (R + rmax)) & (gf > 0)
    x = r[outer]
    y = np.log(gf[outer])
    if x.size < 2 or np.ptp(x) == 0:
        return AhlforsReport(math.nan, ok, max(viol, 0.0), int(x.size))
    slope = np.polyfit(x, y, 1)[0]
    return AhlforsReport(float(-slope), ok, max(viol, 0.0), int(x.size))


# -- estimate on the real line ------------------------------------------------

def line_constants(delta: float) -> tuple[float, float]:
    """Constants (C0, C1) of sup g <= C0 B + C1 int phi g, following the comparison proof.

    C10 bounds |psi| on [-3, 3] with psi'' = phi, psi(0) = psi'(0) = 0.
    """
    ts = np.linspace(0.0, 3.0, 3001)
    inner = spi.cumulative_trapezoid(line_profile(ts, delta), ts, initial=0.0)
    psi = spi.cumulative_trapezoid(inner, ts, initial=0.0)
    C10 = float(psi.max())  # psi is even and nondecreasing on [0, 3]
    C0 = 4.0 * C10 + math.exp(-delta) / delta**2
    C1 = 0.5 * math.exp(2.0 * delta)
    return C0, C1


@dataclass(frozen=True)
class LineEstimateReport:
    sup_g: float
    integral_phi_g: float
    bound: float
    margin: float
    passed: bool
    hypothesis_ok: bool
    C0: float
    C1: float


def line_estimate_check(gvals: np.ndarray, t: np.ndarray, B: float, delta: float, rtol: float = 1e-8) -> LineEstimateReport:
    gvals = np.asarray(gvals, dtype=float)
    t = np.asarray(t, dtype=float)
    if gvals.shape != t.shape or gvals.ndim != 1:
        raise ShapeError("g and t must be matching 1D arrays")
    if np.any(gvals < 0):
        raise InvalidInputError("line estimate needs g >= 0")
    h = np.diff(t)
    if not np.allclose(h, h[0]):
        raise InvalidInputError("t must be uniformly spaced")
    phi = line_profile(t, delta)
    d2 = (gvals[2:] - 2.0 * gvals[1:-1] + gvals[:-2]) / h[0] ** 2
    excess = -d2 - B * phi[1:-1]
    scale = max(B * float(phi.max()), float(np.abs(d2).max(initial=0.0)), 1e-300)
    viol = float(excess.max(initial=-np.inf))
    C0, C1 = line_constants(delta)
    ipg = float(spi.trapezoid(phi * gvals, t))
    sup_g = float(gvals.max())
    bound = C0 * B + C1 * ipg
    return LineEstimateReport(
        sup_g=sup_g,
        integral_phi_g=ipg,
        bound=bound,
        margin=bound - sup_g,
        passed=bool(sup_g <= bound),
        hypothesis_ok=bool(viol <= rtol * scale),
        C0=C0,
        C1=C1,
    )


def manufactured_subsolution(phi: WeightField, B: float, g: GridGeometry) -> np.ndarray:
    """f = B u with laplacian(u) = phi and u = 0 on the Dirichlet ends; the laplacian is the positive one, so f >= 0."""
    if not (B > 0):
        raise InvalidInputError(f"B must be positive, got {B}")
    u = poisson_solve(phi.values, g)
    return B * np.maximum(u, 0.0)
