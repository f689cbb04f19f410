"""Flat monopole line bundles and the rank-2 doubly periodic family."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundle import (
    BundleSpec,
    MetricField,
    dagger,
    he_residual,
    hermitian_part,
    functional_calculus,
    metric_log,
)
from .domain.exhaustion import exhaustion_family
from .domain.grid import GridGeometry, axis_mask, build_monopole_domain, interior
from .errors import BranchError, ConstructionError, HermflowError, InvalidParameterError
from .flow import (
    FlowConfig,
    auto_dt,
    dirichlet_solve,
    exhaustion_solve,
    flow_diagnostics,
    sup_log_distance,
    uniqueness_probe,
)
from .functional import curvature_l2_invariant
from .stability import chern_weil_stability_scan, eigen_subbundle_obstruction
from ._smooth import seam_partition

BRANCH_BOUND = 0.5


def quintic_cutoff(x, lo: float, hi: float):
    """0 below lo, 1 above hi, C^2 at both ends."""
    t = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def branch_margin(a: complex, s) -> np.ndarray:
    """|4a^2 - 2| e^{-2|s|} + e^{-4|s|}; both end branches are safe where this is < 1/2."""
    s = np.abs(np.asarray(s, dtype=float))
    return abs(4.0 * a * a - 2.0) * np.exp(-2.0 * s) + np.exp(-4.0 * s)


@dataclass(frozen=True)
class Rank2ExampleParams:
    a: complex = 0.5
    c0: float = 0.0
    cinf: float = 0.0
    S: float = 3.0
    S1: float = 0.75
    S2: float = 1.75
    resolution: tuple = (32, 32, 32)
    torus_period: float = 1.0
    # None centres the fundamental domain of Im z on 0
    b_start: float | None = None

    def __post_init__(self) -> None:
        a = complex(self.a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "resolution", tuple(int(n) for n in self.resolution))
        if not eigen_subbundle_obstruction(a).multivalued:
            raise InvalidParameterError(
                f"a = {a} is not admissible: need a outside {{0, 1, -1}} (a^2 (a^2 - 1) != 0)")
        if not (0 < self.S1 < self.S2 < self.S):
            raise InvalidParameterError(f"need 0 < S1 < S2 < S, got {self.S1}, {self.S2}, {self.S}")
        m = float(branch_margin(a, self.S1))
        if m >= BRANCH_BOUND:
            raise InvalidParameterError(
                f"branch-safety bound fails at S1 = {self.S1}: |4a^2-2| e^(-2 S1) + e^(-4 S1) = {m:.3g} >= 1/2")
        if self.b_start is None:
            object.__setattr__(self, "b_start", -0.5 * self.torus_period)
        for name in ("c0", "cinf", "S", "torus_period", "b_start"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")

    def geometry(self) -> GridGeometry:
        return build_monopole_domain(self.torus_period, self.S, self.resolution, self.b_start)

    def as_dict(self) -> dict:
        return {
            "a": [self.a.real, self.a.imag],
            "c0": self.c0,
            "cinf": self.cinf,
            "S": self.S,
            "S1": self.S1,
            "S2": self.S2,
            "resolution": list(self.resolution),
            "torus_period": self.torus_period,
            "b_start": self.b_start,
        }


# -- rank one ------------------------------------------------------------------

def rank1_monopole(alpha: complex, g: GridGeometry) -> tuple[BundleSpec, MetricField]:
    """Line bundle with seam scalar alpha and the flat metric |alpha|^{2b}."""
    alpha = complex(alpha)
    if alpha == 0 or not np.isfinite(alpha):
        raise InvalidParameterError("alpha must be a nonzero finite complex number")
    tw = g.twisted_axis
    if tw is None:
        raise InvalidParameterError("rank-1 monopole needs a grid with a twisted axis")
    T_shape = tuple(1 if i == tw else n for i, n in enumerate(g.shape)) + (1, 1)
    spec = BundleSpec(g, 1, np.full(T_shape, alpha, dtype=complex), alpha)
    b = g.mesh(g.axes[tw].name)
    H = np.exp(2.0 * b * math.log(abs(alpha)))[..., None, None].astype(complex)
    return spec, MetricField(H, spec)


# -- rank two ------------------------------------------------------------------

def _w(g: GridGeometry) -> np.ndarray:
    return np.exp(g.mesh("s") + 1j * g.mesh("theta"))


def transition_matrix(a: complex, w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    T = np.empty(w.shape + (2, 2), dtype=complex)
    T[..., 0, 0] = w
    T[..., 0, 1] = a
    T[..., 1, 0] = a
    T[..., 1, 1] = 1.0 / w
    return T


def balancing_gauge(a: complex, w) -> np.ndarray:
    """G(w) = [[0, a], [1/a, -w]]: holomorphic, det -1, bounded near w = 0 and adapted to w = infinity.

    The end metric written in e' = e G stays well conditioned at both ends,
    while in the e frame it is nearly rank one for large |w|.
    """
    w = np.asarray(w, dtype=complex)
    G = np.zeros(w.shape + (2, 2), dtype=complex)
    G[..., 0, 1] = a
    G[..., 1, 0] = 1.0 / a
    G[..., 1, 1] = -w
    return G


def balanced_transition(a: complex, w) -> np.ndarray:
    """G^-1 T G = [[w + 1/w, a (a^2 - 1)], [1/a, 0]]."""
    w = np.asarray(w, dtype=complex)
    T = np.zeros(w.shape + (2, 2), dtype=complex)
    T[..., 0, 0] = w + 1.0 / w
    T[..., 0, 1] = a * (a * a - 1.0)
    T[..., 1, 0] = 1.0 / a
    return T


FRAMES = ("standard", "balanced")


def rank2_bundle(a: complex, g: GridGeometry, frame: str = "standard") -> BundleSpec:
    """Rank-2 bundle with seam matrix [[w, a], [a, 1/w]] (or its balanced-frame conjugate)."""
    a = complex(a)
    if not eigen_subbundle_obstruction(a).multivalued:
        raise InvalidParameterError(f"a = {a} is not admissible: need a outside {{0, 1, -1}}")
    if frame not in FRAMES:
        raise InvalidParameterError(f"frame must be one of {FRAMES}, got {frame!r}")
    tw = g.twisted_axis
    if tw is None or not (g.has_axis("s") and g.has_axis("theta")):
        raise InvalidParameterError("rank-2 example needs the monopole grid (b twisted, s, theta)")
    w = np.take(_w(g), [0], axis=tw)
    T = transition_matrix(a, w) if frame == "standard" else balanced_transition(a, w)
    return BundleSpec(g, 2, T, 1.0 - a * a)


def delta_inf(a: complex, w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    return np.sqrt(1.0 + (4.0 * a * a - 2.0) / w**2 + 1.0 / w**4)


def delta_zero(a: complex, w) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    return np.sqrt(1.0 + (4.0 * a * a - 2.0) * w**2 + w**4)


def end_roots(a: complex, w, end: str):
    """(root_1, root_2, delta) on the chosen end, from the principal branch."""
    w = np.asarray(w, dtype=complex)
    if end == "infinity":
        d = delta_inf(a, w)
        r1 = 0.5 * w * (1.0 + w**-2 + d)
    elif end == "zero":
        d = delta_zero(a, w)
        r1 = 0.5 / w * (1.0 + w**2 + d)
    else:
        raise InvalidParameterError(f"end must be 'zero' or 'infinity', got {end!r}")
    return r1, (1.0 - a * a) / r1, d


def _branch_check(a: complex, w, end: str) -> None:
    w = np.asarray(w, dtype=complex)
    x = np.abs(w) ** (-1.0 if end == "infinity" else 1.0)
    m = abs(4.0 * a * a - 2.0) * x**2 + x**4
    bad = np.argwhere(np.atleast_1d(m) >= BRANCH_BOUND)
    if bad.size:
        raise BranchError(f"{len(bad)} point(s) outside the branch-safe region of the {end} end")


def end_frames(a: complex, w, end: str) -> np.ndarray:
    """Columns v_1, v_2 (infinity) or u_1, u_2 (zero) in the (e_1, e_2) basis."""
    a = complex(a)
    if end not in ("zero", "infinity"):
        raise InvalidParameterError(f"end must be 'zero' or 'infinity', got {end!r}")
    _branch_check(a, w, end)
    w = np.asarray(w, dtype=complex)
    r1, r2, _ = end_roots(a, w, end)
    P = np.empty(w.shape + (2, 2), dtype=complex)
    P[..., 0, 0] = a
    P[..., 0, 1] = a
    P[..., 1, 0] = r1 - w
    P[..., 1, 1] = r2 - w
    return P


def end_diagonal(a: complex, w, b, c: float, end: str) -> np.ndarray:
    """Metric values on the end frame: (h(v1,v1), h(v2,v2)) or the zero-end analogues."""
    w = np.asarray(w, dtype=complex)
    r1, r2, d = end_roots(a, w, end)
    aw = abs(a) * np.abs(w) ** (1.0 if end == "infinity" else -1.0) * np.abs(d)
    sign = 1.0 if end == "infinity" else -1.0
    d1 = np.abs(w) ** (sign * c) * np.abs(r1) ** (2.0 * b) * aw**2
    d2 = np.abs(w) ** (-sign * c) * np.abs(r2) ** (2.0 * b)
    return np.stack([d1, d2], axis=-1)


def end_metric(a: complex, w, b, c: float, end: str) -> np.ndarray:
    """The diagonal end metric written in the (e_1, e_2) frame: P^{-dagger} D P^{-1}."""
    P = end_frames(a, w, end)
    D = end_diagonal(a, w, b, c, end)
    Pinv = np.linalg.inv(P)
    H = dagger(Pinv) @ (D[..., :, None] * Pinv)
    return hermitian_part(H)


def _interior_metric(a: complex, g: GridGeometry, T: np.ndarray) -> np.ndarray:
    """rho(b) I + rho(b - L) T^dagger T, which obeys the seam rule."""
    ax = g.axes[g.twisted_axis]
    b = g.mesh(ax.name) - ax.start
    rho0 = seam_partition(b, ax.length)[..., None, None]
    rho1 = seam_partition(b - ax.length, ax.length)[..., None, None]
    eye = np.eye(2, dtype=complex)
    return rho0 * eye + rho1 * (dagger(T) @ T)


def det_target(a: complex, g: GridGeometry) -> np.ndarray:
    """|1 - a^2|^{2b}, the flat metric on the determinant line."""
    b = g.mesh(g.axes[g.twisted_axis].name)
    return np.exp(2.0 * b * math.log(abs(1.0 - a * a)))


def project_det(H: np.ndarray, target: np.ndarray) -> np.ndarray:
    det = np.real(np.linalg.det(H))
    return H * np.sqrt(target / det)[..., None, None]


def rank2_initial_metric(params: Rank2ExampleParams, frame: str = "balanced") -> MetricField:
    """Glued initial metric with the exact end metrics on |s| >= S2 and det H = |1 - a^2|^{2b}."""
    a = params.a
    g = params.geometry()
    spec = rank2_bundle(a, g, frame)
    w = _w(g)
    s = g.mesh("s")
    b = g.mesh(g.axes[g.twisted_axis].name)
    target = det_target(a, g)
    H = project_det(_interior_metric(a, g, spec.transition), target)
    for end, c, side in (("infinity", params.cinf, s >= params.S1), ("zero", params.c0, s <= -params.S1)):
        if not side.any():
            continue
        try:
            HB = end_metric(a, w[side], b[side], c, end)
        except BranchError as exc:
            raise ConstructionError(str(exc), np.argwhere(side).tolist()) from None
        if frame == "balanced":
            G = balancing_gauge(a, w[side])
            HB = dagger(G) @ HB @ G
        HB = project_det(hermitian_part(HB), target[side])
        HA = H[side]
        chi = quintic_cutoff(np.abs(s[side]), params.S1, params.S2)[:, None, None]
        X = metric_log(HA, HB)
        H[side] = hermitian_part(HA @ functional_calculus(chi * X, np.exp, HA))
    H = project_det(hermitian_part(H), target)
    ev = np.linalg.eigvalsh(H)
    bad = ~(np.isfinite(ev).all(-1) & (ev[..., 0] > 0))
    if bad.any():
        raise ConstructionError("initial metric not positive definite", np.argwhere(bad).tolist())
    return MetricField(H, spec)


def end_regions(params: Rank2ExampleParams, g: GridGeometry) -> np.ndarray:
    return np.abs(g.mesh("s")) > params.S2


# -- stability candidates -----------------------------------------------------

def cutoff_projectors(params: Rank2ExampleParams, H0: MetricField) -> list[np.ndarray]:
    """H0-orthogonal projectors onto an equivariant line close to span(v_1) near infinity."""
    a = params.a
    g = H0.geometry
    w = _w(g)
    s = g.mesh("s")
    chi = quintic_cutoff(s, params.S1, params.S2)
    safe = s >= params.S1
    xi = np.zeros(g.shape + (2,), dtype=complex)
    xi[..., 0] = 1.0
    v1 = np.zeros_like(xi)
    v1[safe] = end_frames(a, w[safe], "infinity")[..., :, 0]
    v1[safe] /= np.linalg.norm(v1[safe], axis=-1, keepdims=True)
    xi = (chi[..., None] * v1 + (1.0 - chi)[..., None] * xi)
    if not np.allclose(H0.spec.transition, rank2_bundle(a, g).transition):
        xi = np.linalg.solve(balancing_gauge(a, w), xi[..., None])[..., 0]
    q0 = xi[..., :, None] * xi[..., None, :].conj()
    T = H0.spec.transition
    Ti = np.linalg.inv(T)
    ax = g.axes[g.twisted_axis]
    b = g.mesh(ax.name) - ax.start
    rho0 = seam_partition(b, ax.length)[..., None, None]
    rho1 = seam_partition(b - ax.length, ax.length)[..., None, None]
    Q = rho0 * q0 + rho1 * (Ti @ q0 @ dagger(Ti))
    # top eigenvector of Q H, then the H-orthogonal projector onto it
    vals, vecs = np.linalg.eig(Q @ H0.H)
    top = np.argmax(vals.real, axis=-1)
    u = np.take_along_axis(vecs, top[..., None, None], axis=-1)
    Hu = H0.H @ u
    pi = (u @ dagger(Hu)) / np.real(dagger(u) @ Hu)
    return [pi]


# -- pipeline ------------------------------------------------------------------

@dataclass
class PipelineOptions:
    levels: tuple | None = None
    exhaustion: bool = True
    uniqueness: bool = True
    seed: int = 0
    amplitude: float = 0.3
    diagnostics_steps: int = 200
    diagnostics_every: int = 10
    diagnostics_dt_divisor: float = 4.0
    small_time_steps: int = 20
    small_time_dt_divisor: float = 16.0
    extra: dict = field(default_factory=dict)


def default_levels(S: float) -> tuple:
    """Integer-spaced levels S-2, S-1, S, keeping the positive ones."""
    return tuple(float(S - k) for k in (2, 1, 0) if S - k > 0)


def pipeline_config(**overrides) -> FlowConfig:
    """Flow settings used by the rank-2 pipeline: RKL2 super-steps to a relative 1e-5 residual."""
    base = dict(scheme="rkl2", stages=32, residual_tol=1e-5, relative_tol=True, confirm_steps=10,
                record_every=5, max_steps=4000, track_functional=False)
    base.update(overrides)
    return FlowConfig(**base)


def _short_trajectory(H0: MetricField, mask: np.ndarray, dt: float, steps: int, every: int, cfl: float):
    cfg = FlowConfig(dt=dt, max_steps=steps, residual_tol=1e-300, scheme="heun", record_every=every,
                     confirm_steps=0, track_functional=False, keep_snapshots=True, cfl=cfl)
    _, rep = dirichlet_solve(H0, mask, cfg)
    return flow_diagnostics(H0, list(zip(rep.times, rep.snapshots)), mask)


def _short_time_diagnostics(H0: MetricField, mask: np.ndarray, config: FlowConfig, options: PipelineOptions) -> dict:
    """Monotonicity and energy identity on a heun trajectory; t^2 exponent on a finer one."""
    base = auto_dt(H0.geometry, config.cfl)
    diag = _short_trajectory(H0, mask, base / options.diagnostics_dt_divisor, options.diagnostics_steps,
                             options.diagnostics_every, config.cfl)
    early = _short_trajectory(H0, mask, base / options.small_time_dt_divisor, options.small_time_steps, 1, config.cfl)
    M = diag.functional
    scale = max(1.0, float(np.abs(M).max()))
    return {
        "functional": [float(x) for x in M],
        "times": [float(x) for x in diag.times],
        "functional_max_increment": float(np.diff(M).max()),
        "functional_nonincreasing": bool(np.all(np.diff(M) <= 1e-8 * scale)),
        "energy_identity_middle_rel_error": diag.middle_rel_error(0.8),
        "F_loglog_slope": early.F_loglog_slope,
    }


def run_rank2_pipeline(params: Rank2ExampleParams, config: FlowConfig | None = None,
                       options: PipelineOptions | None = None) -> dict:
    """Construct, check the obstruction, solve, diagnose and probe uniqueness; return the report dict."""
    config = config or pipeline_config()
    options = options or PipelineOptions()
    H0 = rank2_initial_metric(params)
    g = H0.geometry
    full = g.full_mask()
    errors: dict = {}
    obs = eigen_subbundle_obstruction(params.a)
    report: dict = {
        "params": params.as_dict(),
        "stability": {
            "source": "monodromy",
            "verdict": "stable" if obs.multivalued else "undetermined",
            "multivalued": obs.multivalued,
            "discriminant_roots": [[z.real, z.imag] for z in obs.discriminant_roots],
            "min_root_separation": obs.min_root_separation,
        },
    }
    ends = end_regions(params, g) & interior(full, g)
    report["initial"] = {
        "he_residual_end": he_residual(H0, ends).sup if ends.any() else 0.0,
        "he_residual_interior": he_residual(H0, interior(full, g)).sup,
        "det_error": float(np.abs(np.real(np.linalg.det(H0.H)) / det_target(params.a, g) - 1.0).max()),
    }
    scan = chern_weil_stability_scan(H0, cutoff_projectors(params, H0), full)
    report["stability"]["scan"] = [
        v if isinstance(v, str) else {"sub_slope": v.sub_slope, "total_slope": v.total_slope, "verdict": v.verdict}
        for v in scan
    ]

    Hlim, rep = dirichlet_solve(H0, full, config)
    series = rep.rows()
    report["flow"] = rep.summary()
    report["flow"]["reduction_factor"] = (rep.initial_residual / rep.final_residual
                                          if rep.final_residual > 0 else math.inf)
    report["flow"]["boundary_identical"] = bool(np.array_equal(Hlim.H[~interior(full, g)],
                                                               H0.H[~interior(full, g)]))
    report["flow"]["det_drift"] = rep.det_drift[-1] if rep.det_drift else 0.0

    l2_0 = curvature_l2_invariant(H0, full)
    l2_1 = curvature_l2_invariant(Hlim, full)
    report["curvature_l2"] = {"initial": l2_0, "limit": l2_1,
                              "rel_change": abs(l2_1 - l2_0) / max(abs(l2_0), 1e-300)}

    try:
        report["diagnostics"] = _short_time_diagnostics(H0, full, config, options)
    except HermflowError as exc:
        errors["diagnostics"] = str(exc)

    if options.exhaustion:
        levels = options.levels or default_levels(params.S)
        try:
            fam = exhaustion_family(g, levels)
            near = axis_mask(g, "s", lambda s: np.abs(s) <= 1.0 + 1e-9)
            ex = exhaustion_solve(H0, fam, config, compare_mask=near)
            report["exhaustion"] = {
                "levels": list(ex.levels),
                "sup_s": ex.sup_s,
                "diffs": [list(d) for d in ex.diffs],
                "errors": {str(k): v for k, v in ex.errors.items()},
            }
        except HermflowError as exc:
            errors["exhaustion"] = str(exc)

    if options.uniqueness:
        try:
            u1 = uniqueness_probe(H0, options.seed, full, config, options.amplitude, reference=(Hlim, rep))
            u2 = uniqueness_probe(H0, options.seed + 1, full, config, options.amplitude, reference=(Hlim, rep))
            report["uniqueness"] = {
                "distance": max(u1.distance, u2.distance),
                "pair_distance": sup_log_distance(u1.limits[1], u2.limits[1], full),
                "perturbation_sup": [u1.perturbation_sup, u2.perturbation_sup],
            }
        except HermflowError as exc:
            errors["uniqueness"] = str(exc)

    report["errors"] = errors
    report["he_residual_final"] = rep.final_residual
    report["_limit"] = Hlim
    report["_series"] = series
    return report


__all__ = [
    "Rank2ExampleParams",
    "PipelineOptions",
    "rank1_monopole",
    "rank2_bundle",
    "balancing_gauge",
    "balanced_transition",
    "transition_matrix",
    "delta_inf",
    "delta_zero",
    "end_roots",
    "end_frames",
    "end_diagonal",
    "end_metric",
    "rank2_initial_metric",
    "cutoff_projectors",
    "run_rank2_pipeline",
    "pipeline_config",
    "default_levels",
    "quintic_cutoff",
    "branch_margin",
    "det_target",
]
