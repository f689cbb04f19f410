"""Compiled rank-2 kernels for three-dimensional grids.

They reproduce the numpy reference in ``bundle`` on sites whose full stencil is
available (every site except the two frozen layers next to a Dirichlet end).
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .domain.grid import STENCIL_RADIUS


@nb.njit(cache=True, inline="always")
def _inv_herm2(h0, h1, h2, h3):
    # inverse of a Hermitian 2x2 matrix via its real determinant
    det = h0.real * h3.real - (h1.real * h1.real + h1.imag * h1.imag)
    inv = 1.0 / det
    return h3 * inv, -h1 * inv, -h2 * inv, h0 * inv


@nb.njit(cache=True, inline="always")
def _mul2(a0, a1, a2, a3, b0, b1, b2, b3):
    return (a0 * b0 + a1 * b2, a0 * b1 + a1 * b3, a2 * b0 + a3 * b2, a2 * b1 + a3 * b3)


@nb.njit(cache=True, inline="always")
def _log_ratio2(h0r, h1, h3r, g0r, g1, g3r, ldh, ldg):
    """log(H^-1 G) for 2x2 positive Hermitian H, G, written as a I + c X.

    Only the upper triangle and real diagonal of each matrix are read; ldh and
    ldg are log det H and log det G.
    """
    dh = h0r * h3r - (h1.real * h1.real + h1.imag * h1.imag)
    dg = g0r * g3r - (g1.real * g1.real + g1.imag * g1.imag)
    m0 = h3r * g0r - h1 * np.conj(g1)
    m1 = h3r * g1 - h1 * g3r
    m2 = -np.conj(h1) * g0r + h0r * np.conj(g1)
    m3 = -np.conj(h1) * g1 + h0r * g3r
    inv = 1.0 / dh
    tr = (m0.real + m3.real) * inv
    det = dg * inv
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        disc = 0.0
    r = np.sqrt(disc) / tr
    # q = atanh(r) / r; the series is exact to rounding below 0.05
    if r < 0.05:
        r2 = r * r
        q = 1.0 + r2 * (1.0 / 3.0 + r2 * (0.2 + r2 * (1.0 / 7.0 + r2 * (1.0 / 9.0 + r2 / 11.0))))
    else:
        q = 0.5 * np.log((1.0 + r) / (1.0 - r)) / r
    c = 2.0 * q / tr * inv
    a = 0.5 * (ldg - ldh) - q
    return a + c * m0, c * m1, c * m2, a + c * m3


@nb.njit(cache=True)
def _logdet(Hp, out):
    for i in range(Hp.shape[0]):
        for j in range(Hp.shape[1]):
            for k in range(Hp.shape[2]):
                h1 = Hp[i, j, k, 0, 1]
                out[i, j, k] = np.log(Hp[i, j, k, 0, 0].real * Hp[i, j, k, 1, 1].real - (h1.real * h1.real + h1.imag * h1.imag))


@nb.njit(cache=True)
def _links(Hp, ld, axis, scale, out):
    n0, n1, n2 = Hp.shape[0], Hp.shape[1], Hp.shape[2]
    e0 = 1 if axis == 0 else 0
    e1 = 1 if axis == 1 else 0
    e2 = 1 if axis == 2 else 0
    for i in range(n0 - e0):
        for j in range(n1 - e1):
            for k in range(n2 - e2):
                l0, l1, l2, l3 = _log_ratio2(
                    Hp[i, j, k, 0, 0].real, Hp[i, j, k, 0, 1], Hp[i, j, k, 1, 1].real,
                    Hp[i + e0, j + e1, k + e2, 0, 0].real, Hp[i + e0, j + e1, k + e2, 0, 1],
                    Hp[i + e0, j + e1, k + e2, 1, 1].real, ld[i, j, k], ld[i + e0, j + e1, k + e2],
                )
                out[i, j, k, 0, 0] = l0 * scale
                out[i, j, k, 0, 1] = l1 * scale
                out[i, j, k, 1, 0] = l2 * scale
                out[i, j, k, 1, 1] = l3 * scale


@nb.njit(cache=True)
def _connection(link, axis, out):
    n0, n1, n2 = link.shape[0], link.shape[1], link.shape[2]
    e0 = 1 if axis == 0 else 0
    e1 = 1 if axis == 1 else 0
    e2 = 1 if axis == 2 else 0
    for i in range(e0, n0):
        for j in range(e1, n1):
            for k in range(e2, n2):
                for a in range(2):
                    for b in range(2):
                        out[i, j, k, a, b] = 0.5 * (link[i, j, k, a, b] + link[i - e0, j - e1, k - e2, a, b])


@nb.njit(cache=True)
def _divergence(A0, A1, A2, L0, L1, L2, W, invh, Hp, lo, hi, out):
    """out[x] = H-self-adjoint part of sum_pq W[p,q] D_p(A_q).

    Diagonal terms use the compact (L_p[x] - L_p[x-e_p]) / h_p, mixed ones the
    centered (A_q[x+e_p] - A_q[x-e_p]) / 2h_p; L_p holds links divided by h_p.
    """
    for i in range(lo[0], hi[0]):
        for j in range(lo[1], hi[1]):
            for k in range(lo[2], hi[2]):
                k0 = 0j
                k1 = 0j
                k2 = 0j
                k3 = 0j
                for p in range(3):
                    ep0 = 1 if p == 0 else 0
                    ep1 = 1 if p == 1 else 0
                    ep2 = 1 if p == 2 else 0
                    for q in range(3):
                        w = W[p, q]
                        if w == 0:
                            continue
                        if p == q:
                            if p == 0:
                                L = L0
                            elif p == 1:
                                L = L1
                            else:
                                L = L2
                            f = w * invh[p]
                            k0 += f * (L[i, j, k, 0, 0] - L[i - ep0, j - ep1, k - ep2, 0, 0])
                            k1 += f * (L[i, j, k, 0, 1] - L[i - ep0, j - ep1, k - ep2, 0, 1])
                            k2 += f * (L[i, j, k, 1, 0] - L[i - ep0, j - ep1, k - ep2, 1, 0])
                            k3 += f * (L[i, j, k, 1, 1] - L[i - ep0, j - ep1, k - ep2, 1, 1])
                            continue
                        if q == 0:
                            A = A0
                        elif q == 1:
                            A = A1
                        else:
                            A = A2
                        f = 0.5 * w * invh[p]
                        k0 += f * (A[i + ep0, j + ep1, k + ep2, 0, 0] - A[i - ep0, j - ep1, k - ep2, 0, 0])
                        k1 += f * (A[i + ep0, j + ep1, k + ep2, 0, 1] - A[i - ep0, j - ep1, k - ep2, 0, 1])
                        k2 += f * (A[i + ep0, j + ep1, k + ep2, 1, 0] - A[i - ep0, j - ep1, k - ep2, 1, 0])
                        k3 += f * (A[i + ep0, j + ep1, k + ep2, 1, 1] - A[i - ep0, j - ep1, k - ep2, 1, 1])
                h0 = Hp[i, j, k, 0, 0]
                h1 = Hp[i, j, k, 0, 1]
                h2 = Hp[i, j, k, 1, 0]
                h3 = Hp[i, j, k, 1, 1]
                i0, i1, i2, i3 = _inv_herm2(h0, h1, h2, h3)
                m0, m1, m2, m3 = _mul2(np.conj(k0), np.conj(k2), np.conj(k1), np.conj(k3), h0, h1, h2, h3)
                s0, s1, s2, s3 = _mul2(i0, i1, i2, i3, m0, m1, m2, m3)
                oi = i - lo[0]
                oj = j - lo[1]
                ok = k - lo[2]
                out[oi, oj, ok, 0, 0] = 0.5 * (k0 + s0)
                out[oi, oj, ok, 0, 1] = 0.5 * (k1 + s1)
                out[oi, oj, ok, 1, 0] = 0.5 * (k2 + s2)
                out[oi, oj, ok, 1, 1] = 0.5 * (k3 + s3)


@nb.njit(cache=True)
def _pad3(H, pads, tw, T, Ti, out):
    """Wrap-extend H by pads[d] sites per axis; crossing the twisted seam applies T."""
    n = H.shape
    for i in range(out.shape[0]):
        for j in range(out.shape[1]):
            for k in range(out.shape[2]):
                idx = (i - pads[0], j - pads[1], k - pads[2])
                si = idx[0] % n[0]
                sj = idx[1] % n[1]
                sk = idx[2] % n[2]
                m = 0
                if tw >= 0:
                    m = (idx[tw] - (si, sj, sk)[tw]) // n[tw]
                h0 = H[si, sj, sk, 0, 0]
                h1 = H[si, sj, sk, 0, 1]
                h2 = H[si, sj, sk, 1, 0]
                h3 = H[si, sj, sk, 1, 1]
                if m != 0:
                    ti = 0 if tw == 0 else si
                    tj = 0 if tw == 1 else sj
                    tk = 0 if tw == 2 else sk
                    if m > 0:
                        a0 = T[ti, tj, tk, 0, 0]
                        a1 = T[ti, tj, tk, 0, 1]
                        a2 = T[ti, tj, tk, 1, 0]
                        a3 = T[ti, tj, tk, 1, 1]
                    else:
                        a0 = Ti[ti, tj, tk, 0, 0]
                        a1 = Ti[ti, tj, tk, 0, 1]
                        a2 = Ti[ti, tj, tk, 1, 0]
                        a3 = Ti[ti, tj, tk, 1, 1]
                    for _ in range(abs(m)):
                        r0, r1, r2, r3 = _mul2(h0, h1, h2, h3, a0, a1, a2, a3)
                        h0, h1, h2, h3 = _mul2(np.conj(a0), np.conj(a2), np.conj(a1), np.conj(a3), r0, r1, r2, r3)
                out[i, j, k, 0, 0] = h0
                out[i, j, k, 0, 1] = h1
                out[i, j, k, 1, 0] = h2
                out[i, j, k, 1, 1] = h3


@nb.njit(cache=True)
def exp_update(H, Kp, dt, mask, out):
    """out = sym(H exp(-dt Kp)) on masked sites (Kp trace-free, H-self-adjoint); copy elsewhere."""
    n0, n1, n2 = H.shape[0], H.shape[1], H.shape[2]
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                h0 = H[i, j, k, 0, 0]
                h1 = H[i, j, k, 0, 1]
                h2 = H[i, j, k, 1, 0]
                h3 = H[i, j, k, 1, 1]
                if not mask[i, j, k]:
                    out[i, j, k, 0, 0] = h0
                    out[i, j, k, 0, 1] = h1
                    out[i, j, k, 1, 0] = h2
                    out[i, j, k, 1, 1] = h3
                    continue
                y0 = -dt * Kp[i, j, k, 0, 0]
                y1 = -dt * Kp[i, j, k, 0, 1]
                y2 = -dt * Kp[i, j, k, 1, 0]
                y3 = -dt * Kp[i, j, k, 1, 1]
                # remove any residual trace so det is preserved exactly
                t = 0.5 * (y0 + y3)
                y0 -= t
                y3 -= t
                q2 = (-(y0 * y3 - y1 * y2)).real
                if q2 < 0.0:
                    q2 = 0.0
                q = np.sqrt(q2)
                ch = np.cosh(q)
                sh = np.sinh(q) / q if q > 1e-8 else 1.0 + q2 / 6.0
                e0 = ch + sh * y0
                e1 = sh * y1
                e2 = sh * y2
                e3 = ch + sh * y3
                r0, r1, r2, r3 = _mul2(h0, h1, h2, h3, e0, e1, e2, e3)
                out[i, j, k, 0, 0] = r0.real + 0j
                out[i, j, k, 0, 1] = 0.5 * (r1 + np.conj(r2))
                out[i, j, k, 1, 0] = 0.5 * (r2 + np.conj(r1))
                out[i, j, k, 1, 1] = r3.real + 0j


@nb.njit(cache=True)
def trace_free_norms(K, mask, out):
    """out = trace-free part of K on masked sites (zero elsewhere); returns max |out|^2.

    K is assumed H-self-adjoint, so |X|_h^2 = Tr(X X).
    """
    best = 0.0
    for i in range(K.shape[0]):
        for j in range(K.shape[1]):
            for k in range(K.shape[2]):
                if not mask[i, j, k]:
                    out[i, j, k, 0, 0] = 0.0
                    out[i, j, k, 0, 1] = 0.0
                    out[i, j, k, 1, 0] = 0.0
                    out[i, j, k, 1, 1] = 0.0
                    continue
                t = 0.5 * (K[i, j, k, 0, 0] + K[i, j, k, 1, 1])
                a = K[i, j, k, 0, 0] - t
                d = K[i, j, k, 1, 1] - t
                b = K[i, j, k, 0, 1]
                c = K[i, j, k, 1, 0]
                out[i, j, k, 0, 0] = a
                out[i, j, k, 0, 1] = b
                out[i, j, k, 1, 0] = c
                out[i, j, k, 1, 1] = d
                n2 = (a * a + 2.0 * b * c + d * d).real
                if n2 > best:
                    best = n2
    return best


def supports(H) -> bool:
    g = H.geometry
    return H.rank == 2 and g.ndim == 3


_WORK: dict = {}


def _workspace(shape):
    ws = _WORK.get(shape)
    if ws is None:
        ws = [np.zeros(shape, dtype=np.complex128) for _ in range(6)]
        _WORK.clear()
        _WORK[shape] = ws
    return ws


def pad_fast(H) -> np.ndarray:
    g = H.geometry
    pads = np.array([STENCIL_RADIUS if ax.wraps else 0 for ax in g.axes], dtype=np.int64)
    shape = tuple(n + 2 * p for n, p in zip(g.shape, pads)) + (2, 2)
    tw = g.twisted_axis
    if tw is None:
        T = np.broadcast_to(np.eye(2, dtype=complex), (1, 1, 1, 2, 2))
        tw = -1
        Ti = T
    else:
        T = H.spec.transition
        Ti = _inverse_cache(T)
    out = np.empty(shape, dtype=np.complex128)
    _pad3(np.ascontiguousarray(H.H), pads, tw, np.ascontiguousarray(T), np.ascontiguousarray(Ti), out)
    return out


_INV: dict = {}


def _inverse_cache(T: np.ndarray) -> np.ndarray:
    key = id(T)
    hit = _INV.get(key)
    if hit is not None and hit[0] is T:
        return hit[1]
    Ti = np.linalg.inv(T)
    _INV.clear()
    _INV[key] = (T, Ti)
    return Ti


def i_lambda_f_fast(H, interior_only: bool = False):
    """H-self-adjoint i Lambda F on sites with a full stencil; None when unsupported.

    Without interior_only the call declines whenever the grid has a Dirichlet
    axis, since end sites need the one-sided reference stencil.
    """
    if not supports(H):
        return None
    g = H.geometry
    has_dirichlet = any(not ax.wraps for ax in g.axes)
    if has_dirichlet and not interior_only:
        return None
    Hp = pad_fast(H)
    L0, L1, L2, A0, A1, A2 = _workspace(Hp.shape)
    Ls = (L0, L1, L2)
    A = (A0, A1, A2)
    ld = np.empty(Hp.shape[:3])
    _logdet(Hp, ld)
    for ax_i, ax in enumerate(g.axes):
        _links(Hp, ld, ax_i, 1.0 / ax.spacing, Ls[ax_i])
        _connection(Ls[ax_i], ax_i, A[ax_i])
    W = np.ascontiguousarray(g.contraction_weights())
    invh = np.array([1.0 / ax.spacing for ax in g.axes])
    lo = np.array([STENCIL_RADIUS] * 3, dtype=np.int64)
    hi = np.array([Hp.shape[d] - STENCIL_RADIUS for d in range(3)], dtype=np.int64)
    if not has_dirichlet:
        core = np.empty(g.shape + (2, 2), dtype=np.complex128)
        _divergence(A0, A1, A2, L0, L1, L2, W, invh, Hp, lo, hi, core)
        return core
    core = np.empty(tuple(hi - lo) + (2, 2), dtype=np.complex128)
    _divergence(A0, A1, A2, L0, L1, L2, W, invh, Hp, lo, hi, core)
    out = np.full(g.shape + (2, 2), np.nan + 0j)
    sl = tuple(slice(None) if ax.wraps else slice(STENCIL_RADIUS, -STENCIL_RADIUS) for ax in g.axes)
    out[sl] = core
    return out
