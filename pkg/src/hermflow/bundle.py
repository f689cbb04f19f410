"""Equivariant bundle data, metric fields, Chern curvature and spectral calculus.

Matrix fields are arrays of shape ``grid.shape + (r, r)``; the matrix of a metric
in the holomorphic frame is ``H[x]`` and an endomorphism acts on column vectors.

The discrete connection uses per-link logarithms: on the link from site i to
i+1 along an axis, ``l_i = log(H_i^{-1} H_{i+1})``, and the real-axis connection
component at i is ``(l_i + l_{i-1}) / (2h)``.  To second order this is
``H^{-1} dH``; its trace is exactly the centered difference of ``log det H``.
The contracted curvature ``K = i Lambda F`` is a fixed linear combination of
centered differences of these components.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain.grid import (
    DIRICHLET,
    STENCIL_RADIUS,
    TWISTED,
    FormField,
    GridGeometry,
    integrate,
    interior,
    lambda_contract,
)
from .errors import InvalidParameterError, PositivityError, ShapeError, SymmetryError

PAD = STENCIL_RADIUS


# -- small matrix helpers ---------------------------------------------------

def dagger(X: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(X, -1, -2))


def hermitian_part(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + dagger(X))


def trace(X: np.ndarray) -> np.ndarray:
    return np.trace(X, axis1=-2, axis2=-1)


def identity_field(shape: tuple[int, ...], r: int) -> np.ndarray:
    return np.broadcast_to(np.eye(r, dtype=complex), tuple(shape) + (r, r)).copy()


def trace_free(e: np.ndarray) -> np.ndarray:
    r = e.shape[-1]
    return e - (trace(e) / r)[..., None, None] * np.eye(r)


# -- bundle and metric containers ----------------------------------------------

@dataclass
class BundleSpec:
    """Rank and the transition matrix attached to the (single) twisted axis.

    ``transition`` has the grid shape with the twisted axis collapsed to length
    one, followed by ``(r, r)``.  Crossing the seam forward sends a metric ``H``
    to ``T^dagger H T`` and an endomorphism ``X`` to ``T^{-1} X T``.
    """

    geometry: GridGeometry
    rank: int
    transition: np.ndarray | None = None
    det_transition: np.ndarray | complex | None = None

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise InvalidParameterError("rank must be positive")
        g = self.geometry
        tw = g.twisted_axis
        if tw is None:
            self.transition = None
            return
        r = self.rank
        if self.transition is None:
            T = identity_field(tuple(1 if i == tw else n for i, n in enumerate(g.shape)), r)
        else:
            T = np.asarray(self.transition, dtype=complex)
            want = tuple(1 if i == tw else n for i, n in enumerate(g.shape)) + (r, r)
            try:
                T = np.broadcast_to(T, want).copy()
            except ValueError:
                raise ShapeError(f"transition shape {T.shape} not broadcastable to {want}") from None
        dets = np.linalg.det(T)
        if np.any(np.abs(dets) == 0) or not np.all(np.isfinite(T)):
            raise InvalidParameterError("transition matrix is singular somewhere")
        self.transition = T
        if self.det_transition is None:
            self.det_transition = dets

    def condition_numbers(self) -> np.ndarray:
        if self.transition is None:
            return np.ones(1)
        return np.linalg.cond(self.transition)


@dataclass
class MetricField:
    H: np.ndarray
    spec: BundleSpec

    def __post_init__(self) -> None:
        self.H = np.asarray(self.H, dtype=complex)
        g = self.spec.geometry
        want = g.shape + (self.spec.rank, self.spec.rank)
        if self.H.shape != want:
            raise ShapeError(f"metric shape {self.H.shape} != {want}")

    @property
    def geometry(self) -> GridGeometry:
        return self.spec.geometry

    @property
    def rank(self) -> int:
        return self.spec.rank

    def with_values(self, H: np.ndarray) -> "MetricField":
        return MetricField(H, self.spec)

    def validate(self, herm_tol: float = 1e-12) -> None:
        scale = float(np.abs(self.H).max())
        if float(np.abs(self.H - dagger(self.H)).max()) > herm_tol * max(scale, 1.0):
            raise SymmetryError("metric is not Hermitian")
        ev = np.linalg.eigvalsh(hermitian_part(self.H))
        if not np.all(ev[..., 0] > 0):
            bad = np.argwhere(~(ev[..., 0] > 0))
            raise PositivityError(f"metric not positive definite at {len(bad)} sites, first {tuple(bad[0])}")


# -- padding with the wrap rule ---------------------------------------------

def _seam_blocks(X: np.ndarray, g: GridGeometry, width: int):
    tw = g.twisted_axis
    first = np.take(X, range(width), axis=tw)
    last = np.take(X, range(g.shape[tw] - width, g.shape[tw]), axis=tw)
    return tw, first, last


def pad_metric(H: np.ndarray, spec: BundleSpec, width: int = PAD) -> np.ndarray:
    """Extend a metric across wrapping axes by ``width`` sites (Dirichlet axes untouched)."""
    g = spec.geometry
    out = H
    if g.twisted_axis is not None:
        tw, first, last = _seam_blocks(H, g, width)
        T = spec.transition
        Ti = np.linalg.inv(T)
        after = dagger(T) @ first @ T
        before = dagger(Ti) @ last @ Ti
        out = np.concatenate([before, H, after], axis=tw)
    return _wrap_plain(out, g, width, skip_twisted=True)


def pad_endo(X: np.ndarray, spec: BundleSpec, width: int = PAD) -> np.ndarray:
    g = spec.geometry
    out = X
    if g.twisted_axis is not None:
        tw, first, last = _seam_blocks(X, g, width)
        T = spec.transition
        Ti = np.linalg.inv(T)
        after = Ti @ first @ T
        before = T @ last @ Ti
        out = np.concatenate([before, X, after], axis=tw)
    return _wrap_plain(out, g, width, skip_twisted=True)


def pad_scalar(f: np.ndarray, g: GridGeometry, width: int = PAD) -> np.ndarray:
    return _wrap_plain(f, g, width, skip_twisted=False)


def _wrap_plain(X: np.ndarray, g: GridGeometry, width: int, skip_twisted: bool) -> np.ndarray:
    pads = []
    for ax in g.axes:
        if ax.wraps and not (skip_twisted and ax.rule == TWISTED):
            pads.append((width, width))
        else:
            pads.append((0, 0))
    pads += [(0, 0)] * (X.ndim - g.ndim)
    return np.pad(X, pads, mode="wrap")


def unpad(X: np.ndarray, g: GridGeometry, width: int = PAD) -> np.ndarray:
    sl = tuple(slice(width, -width) if ax.wraps else slice(None) for ax in g.axes)
    return X[sl]


# -- spectral pieces ------------------------------------------------------------

def _frame(H0: np.ndarray, X: np.ndarray, hermitian_target: bool):
    """Cholesky frame of H0 and X expressed in it.

    For hermitian_target, X is a metric and the returned matrix is L^-1 X L^-H;
    otherwise X is an endomorphism and it is L^H X L^-H.
    """
    L = np.linalg.cholesky(hermitian_part(H0))
    Li = np.linalg.inv(L)
    if hermitian_target:
        Xh = Li @ X @ dagger(Li)
    else:
        Xh = dagger(L) @ X @ dagger(Li)
    return L, Li, Xh


def _log_ratio(H0: np.ndarray, H: np.ndarray) -> np.ndarray:
    L, Li, Hh = _frame(H0, H, True)
    mu, V = np.linalg.eigh(hermitian_part(Hh))
    if not np.all(mu > 0):
        raise PositivityError("metric lost positivity")
    P = dagger(Li) @ V
    Pinv = dagger(V) @ dagger(L)
    return (P * np.log(mu)[..., None, :]) @ Pinv


def metric_log(H0: np.ndarray | MetricField, H: np.ndarray | MetricField) -> np.ndarray:
    """s with H = H0 exp(s); s is H0-self-adjoint with Tr s = log det(H0^-1 H)."""
    H0 = H0.H if isinstance(H0, MetricField) else np.asarray(H0)
    H = H.H if isinstance(H, MetricField) else np.asarray(H)
    try:
        return _log_ratio(H0, H)
    except np.linalg.LinAlgError as exc:
        raise PositivityError("metric not positive definite") from exc


def metric_exp(H0: np.ndarray, s: np.ndarray) -> np.ndarray:
    """H0 exp(s) for H0-self-adjoint s, symmetrized."""
    return hermitian_part(H0 @ functional_calculus(s, np.exp, H0))


def eigen_frame(b: np.ndarray, H0: np.ndarray, tol: float = 1e-8):
    """Real eigenvalues and change of basis P (b = P diag(lam) P^-1) for H0-self-adjoint b."""
    L, Li, Bh = _frame(H0, b, False)
    asym = np.abs(Bh - dagger(Bh)).max(initial=0.0)
    scale = max(float(np.abs(Bh).max(initial=0.0)), 1.0)
    if asym > tol * scale:
        raise SymmetryError(f"endomorphism not self-adjoint (defect {asym:.3g})")
    lam, V = np.linalg.eigh(hermitian_part(Bh))
    P = dagger(Li) @ V
    Pinv = dagger(V) @ dagger(L)
    return lam, P, Pinv


def functional_calculus(b: np.ndarray, f: Callable[[np.ndarray], np.ndarray], H0: np.ndarray | None = None) -> np.ndarray:
    b = np.asarray(b)
    if H0 is None:
        H0 = identity_field(b.shape[:-2], b.shape[-1])
    lam, P, Pinv = eigen_frame(b, H0)
    return (P * f(lam)[..., None, :]) @ Pinv


def endo_calculus(b: np.ndarray, Phi: Callable[[np.ndarray, np.ndarray], np.ndarray], target: np.ndarray,
                  H0: np.ndarray | None = None) -> np.ndarray:
    """Scale target's (i, j) entry in b's eigenbasis by Phi(lam_j, lam_i).

    Entry (i, j) is the coefficient of e_j^dual (x) e_i, so this is the rule
    Phi(b)(e_j^dual (x) e_i) = Phi(lam_j, lam_i) e_j^dual (x) e_i.
    """
    b = np.asarray(b)
    if H0 is None:
        H0 = identity_field(b.shape[:-2], b.shape[-1])
    lam, P, Pinv = eigen_frame(b, H0)
    t_hat = Pinv @ target @ P
    scale = Phi(lam[..., None, :], lam[..., :, None])
    return P @ (scale * t_hat) @ Pinv


def psi(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(e^d - d - 1) / d^2 with d = y - x, Taylor expanded for |d| < 1e-4."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    small = np.abs(d) < 1e-4
    ds = np.where(small, 1.0, d)
    exact = np.expm1(ds) - ds
    exact = exact / ds**2
    taylor = 0.5 + d / 6.0 + d * d / 24.0 + d**3 / 120.0
    return np.where(small, taylor, exact)


# -- norms ------------------------------------------------------------------------

def endo_norm_sq(e: np.ndarray, H: np.ndarray) -> np.ndarray:
    """|e|_h^2 = Tr(e e^{dagger_h}) with e^{dagger_h} = H^-1 e^dagger H."""
    Hi = np.linalg.inv(H)
    return np.real(trace(e @ Hi @ dagger(e) @ H))


def endo_norm(e: np.ndarray, H: np.ndarray | MetricField) -> np.ndarray:
    H = H.H if isinstance(H, MetricField) else H
    return np.sqrt(np.maximum(endo_norm_sq(e, H), 0.0))


@dataclass(frozen=True)
class MutualBounds:
    sup_s: float
    sup_b: float
    sup_binv: float


def mutual_boundedness(H0: np.ndarray | MetricField, H: np.ndarray | MetricField, mask: np.ndarray | None = None) -> MutualBounds:
    H0a = H0.H if isinstance(H0, MetricField) else H0
    Ha = H.H if isinstance(H, MetricField) else H
    _, _, Hh = _frame(H0a, Ha, True)
    mu = np.linalg.eigvalsh(hermitian_part(Hh))
    if mask is not None:
        mu = mu[np.asarray(mask, dtype=bool)]
    logs = np.log(mu)
    return MutualBounds(
        sup_s=float(np.sqrt((logs**2).sum(-1)).max()),
        sup_b=float(np.sqrt((mu**2).sum(-1)).max()),
        sup_binv=float(np.sqrt((mu**-2.0).sum(-1)).max()),
    )


# -- connection and curvature -----------------------------------------------------

def _axis_shift(X: np.ndarray, axis: int, k: int) -> np.ndarray:
    return np.roll(X, -k, axis=axis)


def _links(Hp: np.ndarray, g: GridGeometry) -> list[np.ndarray]:
    """log(H_x^-1 H_{x+e_i}) per axis on a padded metric array."""
    return [_log_ratio(Hp, _axis_shift(Hp, i, 1)) for i in range(g.ndim)]


def connection_forms(Hp: np.ndarray, g: GridGeometry, links: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """Real-axis connection components on a padded metric array (same shape)."""
    links = _links(Hp, g) if links is None else links
    out = []
    for i, ax in enumerate(g.axes):
        h = ax.spacing
        link = links[i]
        back = _axis_shift(link, i, -1)  # log(H_{x-1}^-1 H_x)
        A = (link + back) / (2.0 * h)
        if ax.rule == DIRICHLET:
            n = Hp.shape[i]
            for end, step in ((0, 1), (n - 1, -1)):
                H0 = np.take(Hp, [end], axis=i)
                H1 = np.take(Hp, [end + step], axis=i)
                H2 = np.take(Hp, [end + 2 * step], axis=i)
                one_sided = (4.0 * _log_ratio(H0, H1) - _log_ratio(H0, H2)) / (2.0 * h * step)
                idx = [slice(None)] * Hp.ndim
                idx[i] = slice(end, end + 1)
                A[tuple(idx)] = one_sided
        out.append(A)
    return out


def centered_diff(X: np.ndarray, g: GridGeometry, i: int) -> np.ndarray:
    """Centered difference on a padded array; one-sided second order on Dirichlet ends."""
    ax = g.axes[i]
    return np.gradient(X, ax.spacing, axis=i, edge_order=2)


def _compact_second(link: np.ndarray, A: np.ndarray, g: GridGeometry, i: int) -> np.ndarray:
    """D_i(A_i) as (link_x - link_{x-1}) / h^2, i.e. [log(H^-1 H_+) + log(H^-1 H_-)] / h^2.

    The three-point form keeps the linearized operator a weighted Laplacian even
    where the metric's eigenvalues vary fast; Dirichlet end sites fall back to
    the one-sided derivative of A.
    """
    ax = g.axes[i]
    out = (link - _axis_shift(link, i, -1)) / ax.spacing**2
    if ax.rule == DIRICHLET:
        edge = centered_diff(A, g, i)
        n = link.shape[i]
        idx = [slice(None)] * link.ndim
        for end in (0, n - 1):
            idx[i] = slice(end, end + 1)
            out[tuple(idx)] = edge[tuple(idx)]
    return out


def _connection_derivatives(Hp: np.ndarray, g: GridGeometry) -> tuple[list[np.ndarray], dict]:
    """A_q and a lazily filled table D_p(A_q), compact on the diagonal."""
    links = _links(Hp, g)
    A = connection_forms(Hp, g, links)
    table: dict = {}

    def D(p: int, q: int) -> np.ndarray:
        if (p, q) not in table:
            table[(p, q)] = _compact_second(links[p], A[p], g, p) if p == q else centered_diff(A[q], g, p)
        return table[(p, q)]

    return A, D


def _divergence(Hp: np.ndarray, g: GridGeometry) -> np.ndarray:
    W = g.contraction_weights()
    _, D = _connection_derivatives(Hp, g)
    K = np.zeros(Hp.shape, dtype=complex)
    for p in range(g.ndim):
        for q in range(g.ndim):
            if W[p, q] != 0:
                K = K + W[p, q] * D(p, q)
    return K


def _as_array(H) -> tuple[np.ndarray, BundleSpec]:
    if isinstance(H, MetricField):
        return H.H, H.spec
    raise ShapeError("expected a MetricField")


def contracted_curvature_raw(H: MetricField) -> np.ndarray:
    """K = i Lambda F(H) straight from the stencil (not symmetrized)."""
    Ha, spec = _as_array(H)
    g = spec.geometry
    Hp = pad_metric(Ha, spec)
    return unpad(_divergence(Hp, g), g)


def self_adjoint_part(K: np.ndarray, H: np.ndarray) -> np.ndarray:
    return 0.5 * (K + np.linalg.solve(H, dagger(K) @ H))


def i_lambda_f(H: MetricField, interior_only: bool = False) -> np.ndarray:
    """H-self-adjoint part of i Lambda F(H); the generator used by the flow.

    With interior_only the two frozen layers at Dirichlet ends may hold NaN.
    """
    from . import _kernels

    fast = _kernels.i_lambda_f_fast(H, interior_only)
    if fast is not None:
        return fast
    return self_adjoint_part(contracted_curvature_raw(H), H.H)


def curvature(H: MetricField) -> FormField:
    """Components F_{k lbar} of F(H) = dbar(H^-1 dH); stored as dz_k ^ dzbar_l coefficients."""
    Ha, spec = _as_array(H)
    g = spec.geometry
    try:
        Hp = pad_metric(Ha, spec)
        _, D = _connection_derivatives(Hp, g)
    except np.linalg.LinAlgError as exc:
        raise PositivityError("metric singular") from exc
    coeffs = g.derivative_coefficients()
    comps: dict[tuple[int, int], np.ndarray] = {}
    for k, (ck, _) in enumerate(coeffs):
        for l, (_, dl) in enumerate(coeffs):
            # dz_k ^ dzbar_l coefficient of dbar(A_k dz_k) is -dbar_l A_k
            val = -sum(d * c * D(p, q) for p, d in dl.items() for q, c in ck.items())
            comps[(k, l)] = unpad(val, g)
    return FormField(comps)


def lambda_F(H: MetricField) -> np.ndarray:
    return lambda_contract(curvature(H), H.geometry)


@dataclass(frozen=True)
class Residual:
    sup: float
    l2: float


def he_residual(H: MetricField, mask: np.ndarray | None = None, K: np.ndarray | None = None) -> Residual:
    """Sup and L2 norms of the trace-free part of i Lambda F over interior sites."""
    g = H.geometry
    if H.rank == 1:
        return Residual(0.0, 0.0)
    if K is None:
        K = i_lambda_f(H)
    Kp = trace_free(K)
    inner = interior(mask, g)
    nsq = endo_norm_sq(Kp, H.H)
    if not inner.any():
        return Residual(0.0, 0.0)
    return Residual(float(np.sqrt(nsq[inner].max())), float(np.sqrt(max(integrate(nsq, g, inner), 0.0))))


def det_field(H: MetricField | np.ndarray) -> np.ndarray:
    Ha = H.H if isinstance(H, MetricField) else H
    return np.real(np.linalg.det(Ha))
