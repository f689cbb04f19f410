"""Hermitian-Einstein heat flow with Dirichlet data, exhaustion runs and diagnostics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._smooth import seam_partition
from .bundle import (
    MetricField,
    _frame,
    dagger,
    endo_norm_sq,
    functional_calculus,
    hermitian_part,
    i_lambda_f,
    metric_log,
    trace,
    trace_free,
)
from .domain.exhaustion import ExhaustionFamily
from .domain.grid import DIRICHLET, GridGeometry, boundary, integrate, interior
from .errors import (
    BlowUpError,
    HermflowError,
    InsufficientDataError,
    InvalidGeometryError,
    InvalidParameterError,
)
from .functional import donaldson_M

SCHEMES = ("explicit-euler", "heun", "rkl2")


@dataclass
class FlowConfig:
    dt: float | str = "auto"
    max_steps: int = 20000
    residual_tol: float = 1e-6
    scheme: str = "explicit-euler"
    det_projection: bool = True
    record_every: int = 100
    # residual_tol is measured against the initial interior residual when set
    relative_tol: bool = False
    cfl: float = 0.8
    confirm_steps: int = 100
    track_functional: bool = True
    keep_snapshots: bool = False
    blowup_condition: float = 1e12
    # Runge-Kutta-Legendre stage count, used by scheme "rkl2" only
    stages: int = 16

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise InvalidParameterError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if isinstance(self.dt, str):
            if self.dt != "auto":
                raise InvalidParameterError(f"dt must be positive or 'auto', got {self.dt!r}")
        elif not (self.dt > 0):
            raise InvalidParameterError("dt must be positive")
        if not (self.residual_tol > 0):
            raise InvalidParameterError("residual_tol must be positive")
        if self.record_every < 1 or self.max_steps < 0 or self.confirm_steps < 0:
            raise InvalidParameterError("record_every >= 1, max_steps >= 0, confirm_steps >= 0")
        if not (0 < self.cfl <= 1):
            raise InvalidParameterError("cfl must lie in (0, 1]")
        if self.stages < 2:
            raise InvalidParameterError("stages must be at least 2")

    def resolved_dt(self, g: GridGeometry) -> float:
        """Step size; for rkl2 this is the full super-step covering all stages."""
        if self.dt != "auto":
            return float(self.dt)
        dt = auto_dt(g, self.cfl)
        if self.scheme == "rkl2":
            dt *= rkl2_gain(self.stages)
        return dt

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def auto_dt(g: GridGeometry, cfl: float = 0.8) -> float:
    """cfl times the forward-Euler limit 1 / sum(1/h^2) of the linearized flow."""
    return cfl / sum(1.0 / ax.spacing**2 for ax in g.axes)


def rkl2_gain(stages: int) -> float:
    """Stable super-step of the s-stage Runge-Kutta-Legendre scheme, in forward-Euler steps."""
    return (stages * stages + stages - 2) / 4.0


def _rkl2_coefficients(s: int):
    w1 = 4.0 / (s * s + s - 2)
    b = [1.0 / 3.0] * 3 + [(j * j + j - 2) / (2.0 * j * (j + 1)) for j in range(3, s + 1)]
    out = []
    for j in range(2, s + 1):
        mu = (2 * j - 1) / j * b[j] / b[j - 1]
        nu = -(j - 1) / j * b[j] / b[j - 2]
        out.append((mu, nu, mu * w1, -(1.0 - b[j - 1]) * mu * w1))
    return b[1] * w1, out


@dataclass
class FlowReport:
    times: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    residual_sup: list = field(default_factory=list)
    residual_l2: list = field(default_factory=list)
    functional: list = field(default_factory=list)
    det_drift: list = field(default_factory=list)
    F_sup: list = field(default_factory=list)
    sup_s: list = field(default_factory=list)
    dt: float = 0.0
    scheme: str = ""
    initial_residual: float = 0.0
    final_residual: float = 0.0
    target_residual: float = 0.0
    steps_taken: int = 0
    converged: bool = False
    stationary_confirmed: bool = False
    confirm_max_residual: float = math.nan
    flag: str = ""
    wall_clock: float = 0.0
    snapshots: list | None = None

    SERIES = ("times", "steps", "residual_sup", "residual_l2", "functional", "det_drift", "F_sup", "sup_s")

    def rows(self) -> list[dict]:
        n = len(self.times)
        return [{k: getattr(self, k)[i] for k in self.SERIES} for i in range(n)]

    def summary(self) -> dict:
        return {
            "dt": self.dt,
            "scheme": self.scheme,
            "initial_residual": self.initial_residual,
            "final_residual": self.final_residual,
            "target_residual": self.target_residual,
            "steps_taken": self.steps_taken,
            "converged": self.converged,
            "stationary_confirmed": self.stationary_confirmed,
            "confirm_max_residual": self.confirm_max_residual,
            "flag": self.flag,
            "records": len(self.times),
        }


# -- per-step machinery ----------------------------------------------------------

def _fast(H: MetricField) -> bool:
    return _kernels.supports(H)


def flow_generator(H: MetricField, inner: np.ndarray) -> tuple[np.ndarray, float]:
    """Trace-free H-self-adjoint i Lambda F on interior sites (zero elsewhere), and its sup norm."""
    if _fast(H):
        K = i_lambda_f(H, interior_only=True)
        Kp = np.empty_like(K)
        n2 = _kernels.trace_free_norms(K, inner, Kp)
        return Kp, math.sqrt(max(n2, 0.0))
    K = i_lambda_f(H)
    Kp = np.where(inner[..., None, None], trace_free(K), 0.0)
    n2 = np.real(trace(Kp @ Kp))
    return Kp, math.sqrt(max(float(n2.max(initial=0.0)), 0.0))


def _exp_apply(H: MetricField, Y: np.ndarray, dt: float, inner: np.ndarray) -> MetricField:
    """H exp(-dt Y) on interior sites, untouched elsewhere."""
    if _fast(H):
        out = np.empty_like(H.H)
        _kernels.exp_update(H.H, np.ascontiguousarray(Y), dt, inner, out)
        return H.with_values(out)
    if H.rank == 1:
        new = H.H * np.exp(-dt * np.real(Y))
    else:
        new = hermitian_part(H.H @ functional_calculus(-dt * Y, np.exp, H.H))
    return H.with_values(np.where(inner[..., None, None], new, H.H))


def _project_det(H: MetricField, det_ref: np.ndarray, inner: np.ndarray) -> MetricField:
    r = H.rank
    ratio = det_ref / np.real(np.linalg.det(H.H))
    fac = np.where(inner, ratio ** (1.0 / r), 1.0)
    return H.with_values(np.where(inner[..., None, None], H.H * fac[..., None, None], H.H))


def _heun_generator(H: MetricField, K1: np.ndarray, K2: np.ndarray, inner: np.ndarray) -> np.ndarray:
    Y = 0.5 * (K1 + K2)
    Y = 0.5 * (Y + np.linalg.solve(H.H, dagger(Y) @ H.H))
    return np.where(inner[..., None, None], trace_free(Y), 0.0)


def heat_step(H: MetricField, dt: float, mask: np.ndarray | None = None, scheme: str = "explicit-euler",
              det_ref: np.ndarray | None = None, stages: int = 16) -> MetricField:
    """One step of h^-1 dh/dt = -i Lambda F(h)_perp on the interior of the mask."""
    if scheme not in SCHEMES:
        raise InvalidParameterError(f"unknown scheme {scheme!r}")
    if H.rank == 1:
        return H.with_values(H.H.copy())
    inner = interior(mask, H.geometry)
    K1, _ = flow_generator(H, inner)
    return _advance(H, K1, dt, inner, scheme, det_ref, stages)


def _sa_tracefree(H: MetricField, Z: np.ndarray, inner: np.ndarray) -> np.ndarray:
    Z = 0.5 * (Z + np.linalg.solve(H.H, dagger(Z) @ H.H))
    return np.where(inner[..., None, None], trace_free(Z), 0.0)


def _rkl2_step(H: MetricField, K0: np.ndarray, tau: float, stages: int, inner: np.ndarray) -> MetricField:
    """Super-step H exp(-Z) with Z from the Legendre recursion on Z' = K(H exp(-Z)).

    Stage generators are projected back to trace-free H-self-adjoint fields, so
    the determinant is untouched and stationary points are those of the flow.
    """
    mu1, coeffs = _rkl2_coefficients(stages)
    Z_prev2 = np.zeros_like(K0)
    Z_prev = mu1 * tau * K0
    for mu, nu, mut, gam in coeffs:
        Hj = _exp_apply(H, Z_prev, 1.0, inner)
        Kj, _ = flow_generator(Hj, inner)
        Z = mu * Z_prev + nu * Z_prev2 + mut * tau * Kj + gam * tau * K0
        Z_prev2, Z_prev = Z_prev, _sa_tracefree(H, Z, inner)
    return _exp_apply(H, Z_prev, 1.0, inner)


def _advance(H: MetricField, K1: np.ndarray, dt: float, inner: np.ndarray, scheme: str,
             det_ref: np.ndarray | None, stages: int = 16) -> MetricField:
    if scheme == "rkl2":
        Hn = _rkl2_step(H, K1, dt, stages, inner)
    elif scheme == "heun":
        Ht = _exp_apply(H, K1, dt, inner)
        K2, _ = flow_generator(Ht, inner)
        Y = _heun_generator(H, K1, K2, inner)
        Hn = _exp_apply(H, Y, dt, inner)
    else:
        Hn = _exp_apply(H, K1, dt, inner)
    if det_ref is not None:
        Hn = _project_det(Hn, det_ref, inner)
    _check_finite(Hn)
    return Hn


def _check_finite(H: MetricField) -> None:
    if not np.all(np.isfinite(H.H)):
        raise BlowUpError("non-finite metric entries", {"nan_sites": int((~np.isfinite(H.H)).any(axis=(-2, -1)).sum())})


def relative_spectrum(H0: MetricField | np.ndarray, H: MetricField | np.ndarray) -> np.ndarray:
    """Eigenvalues of b = H0^-1 H per site (ascending)."""
    H0a = H0.H if isinstance(H0, MetricField) else H0
    Ha = H.H if isinstance(H, MetricField) else H
    _, _, Hh = _frame(H0a, Ha, True)
    return np.linalg.eigvalsh(hermitian_part(Hh))


def F_of_b(mu: np.ndarray) -> np.ndarray:
    """Tr b + Tr b^-1 - 2r from the eigenvalues of b."""
    return np.sum(mu + 1.0 / mu - 2.0, axis=-1)


def _condition(H: MetricField) -> float:
    ev = np.linalg.eigvalsh(hermitian_part(H.H))
    return float((ev[..., -1] / ev[..., 0]).max())


def _record(rep: FlowReport, H0: MetricField, H: MetricField, Kp: np.ndarray, res: float, t: float, step: int,
            mask: np.ndarray, inner: np.ndarray, det0: np.ndarray, K0: np.ndarray | None, track: bool,
            cond_limit: float) -> None:
    g = H.geometry
    cond = _condition(H)
    if not (cond <= cond_limit):
        raise BlowUpError(f"condition number {cond:.3g} exceeds {cond_limit:.1g}", {"step": step, "time": t})
    nsq = np.real(trace(Kp @ Kp))
    mu = relative_spectrum(H0, H)[mask]
    rep.times.append(t)
    rep.steps.append(step)
    rep.residual_sup.append(res)
    rep.residual_l2.append(math.sqrt(max(float(integrate(nsq, g, inner)), 0.0)))
    rep.functional.append(donaldson_M(H0, H, mask, K1=K0).total if track else math.nan)
    rep.det_drift.append(float(np.abs(np.real(np.linalg.det(H.H)) / det0 - 1.0).max()))
    rep.F_sup.append(float(F_of_b(mu).max(initial=0.0)))
    rep.sup_s.append(float(np.sqrt((np.log(mu) ** 2).sum(-1)).max(initial=0.0)))


def dirichlet_solve(H0: MetricField, mask: np.ndarray | None = None, config: FlowConfig | None = None
                    ) -> tuple[MetricField, FlowReport]:
    """Run the flow with H frozen on the mask boundary until the sup residual meets the target."""
    config = config or FlowConfig()
    g = H0.geometry
    full = g.full_mask() if mask is None else np.asarray(mask, dtype=bool)
    bnd = boundary(full, g)
    if not bnd.any():
        raise InvalidGeometryError("Dirichlet solve needs a mask with nonempty boundary")
    inner = interior(full, g)
    dt = config.resolved_dt(g)
    det0 = np.real(np.linalg.det(H0.H))
    det_ref = det0 if config.det_projection else None
    rep = FlowReport(dt=dt, scheme=config.scheme)
    rep.snapshots = [] if config.keep_snapshots else None
    start = time.perf_counter()

    H = H0.with_values(H0.H.copy())
    if H0.rank == 1:
        rep.flag = "converged"
        rep.converged = rep.stationary_confirmed = True
        _record(rep, H0, H, np.zeros_like(H.H), 0.0, 0.0, 0, full, inner, det0, None, False, config.blowup_condition)
        rep.functional[-1] = 0.0
        rep.wall_clock = time.perf_counter() - start
        if rep.snapshots is not None:
            rep.snapshots.append(H)
        return H, rep

    K0 = i_lambda_f(H0, interior_only=True) if config.track_functional else None
    Kp, res = flow_generator(H, inner)
    rep.initial_residual = res
    target = config.residual_tol * res if config.relative_tol else config.residual_tol
    rep.target_residual = target
    _record(rep, H0, H, Kp, res, 0.0, 0, full, inner, det0, K0, config.track_functional, config.blowup_condition)
    if rep.snapshots is not None:
        rep.snapshots.append(H)
    if res < target:
        rep.converged = rep.stationary_confirmed = True
        rep.final_residual = res
        rep.confirm_max_residual = res
        rep.flag = "converged"
        rep.wall_clock = time.perf_counter() - start
        return H, rep

    t = 0.0
    converged_at = None
    confirm_max = 0.0
    step = 0
    for step in range(1, config.max_steps + 1):
        H = _advance(H, Kp, dt, inner, config.scheme, det_ref, config.stages)
        t = step * dt
        Kp, res = flow_generator(H, inner)
        if not math.isfinite(res):
            raise BlowUpError("residual became non-finite", {"step": step, "time": t})
        if converged_at is not None:
            confirm_max = max(confirm_max, res)
        elif res < target:
            converged_at = step
        done = converged_at is not None and step - converged_at >= config.confirm_steps
        if step % config.record_every == 0 or done or step == config.max_steps:
            _record(rep, H0, H, Kp, res, t, step, full, inner, det0, K0, config.track_functional,
                    config.blowup_condition)
            if rep.snapshots is not None:
                rep.snapshots.append(H)
        if done:
            break
    rep.steps_taken = step
    rep.final_residual = res
    rep.converged = converged_at is not None
    rep.confirm_max_residual = confirm_max if rep.converged else math.nan
    rep.stationary_confirmed = rep.converged and confirm_max <= target
    rep.flag = "converged" if rep.converged else "no stationary point reached"
    rep.wall_clock = time.perf_counter() - start
    return H, rep


# -- trajectory diagnostics --------------------------------------------------------

@dataclass
class FlowDiagnostics:
    times: np.ndarray
    functional: np.ndarray
    energy: np.ndarray
    interval_rel_error: np.ndarray
    F_sup: np.ndarray
    F_loglog_slope: float
    secant_rel_error: float

    def middle_rel_error(self, fraction: float = 0.8) -> float:
        n = len(self.interval_rel_error)
        cut = int(round(n * (1.0 - fraction) / 2.0))
        mid = self.interval_rel_error[cut:n - cut] if n - 2 * cut > 0 else self.interval_rel_error
        return float(np.max(mid)) if len(mid) else math.nan


def trace_free_energy(H: MetricField, mask: np.ndarray | None = None) -> float:
    """Integral of |i Lambda F(H)_perp|^2 over the interior of the mask."""
    g = H.geometry
    inner = interior(mask, g)
    if H.rank == 1:
        return 0.0
    Kp, _ = flow_generator(H, inner)
    return float(integrate(endo_norm_sq(Kp, H.H), g, inner))


def flow_diagnostics(H0: MetricField, trajectory: list[tuple[float, MetricField]], mask: np.ndarray | None = None
                     ) -> FlowDiagnostics:
    if len(trajectory) < 4:
        raise InsufficientDataError("flow diagnostics need at least 4 snapshots")
    g = H0.geometry
    full = g.full_mask() if mask is None else mask
    K0 = i_lambda_f(H0, interior_only=True)
    times = np.array([t for t, _ in trajectory], dtype=float)
    M = np.array([donaldson_M(H0, H, full, K1=K0).total for _, H in trajectory])
    E = np.array([trace_free_energy(H, full) for _, H in trajectory])
    Fs = np.array([float(F_of_b(relative_spectrum(H0, H)[full]).max(initial=0.0)) for _, H in trajectory])
    dM = np.diff(M) / np.diff(times)
    ref = -0.5 * (E[1:] + E[:-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(np.abs(ref) > 0, np.abs(dM - ref) / np.abs(ref), np.where(dM == 0, 0.0, np.inf))
    # small-time exponent of F over the first decade of positive times
    pos = times > 0
    slope = math.nan
    if pos.any():
        t1 = times[pos][0]
        sel = pos & (times <= 10.0 * t1 * (1 + 1e-12)) & (Fs > 1e-12 * H0.rank)
        if sel.sum() >= 2:
            slope = float(np.polyfit(np.log(times[sel]), np.log(Fs[sel]), 1)[0])
    secant = math.nan
    if len(times) > 1 and times[1] > times[0] and E[0] > 0:
        sec = (M[1] - M[0]) / (times[1] - times[0])
        secant = abs(sec + E[0]) / E[0]
    return FlowDiagnostics(times, M, E, rel, Fs, slope, secant)


# -- exhaustion ---------------------------------------------------------------------

@dataclass
class ExhaustionResult:
    levels: tuple
    metrics: list
    reports: list
    diffs: list  # (level_i, level_j, sup |log(H_i^-1 H_j)| on the comparison mask)
    sup_s: list
    errors: dict


def sup_log_distance(Ha: MetricField, Hb: MetricField, region: np.ndarray | None = None) -> float:
    mu = relative_spectrum(Ha, Hb)
    if region is not None:
        mu = mu[np.asarray(region, dtype=bool)]
    return float(np.sqrt((np.log(mu) ** 2).sum(-1)).max(initial=0.0))


def exhaustion_solve(H0: MetricField, family: ExhaustionFamily, config: FlowConfig | None = None,
                     compare_mask: np.ndarray | None = None) -> ExhaustionResult:
    if len(family) < 2:
        raise InvalidParameterError("exhaustion needs at least two levels")
    config = config or FlowConfig()
    region = family.masks[0] if compare_mask is None else compare_mask
    metrics, reports, sups = [], [], []
    errors: dict = {}
    for a, m in zip(family.levels, family.masks):
        try:
            H, rep = dirichlet_solve(H0, m, config)
        except HermflowError as exc:
            errors[a] = str(exc)
            metrics.append(None)
            reports.append(None)
            sups.append(math.nan)
            continue
        metrics.append(H)
        reports.append(rep)
        sups.append(sup_log_distance(H0, H, m))
    diffs = []
    for i in range(len(metrics) - 1):
        if metrics[i] is None or metrics[i + 1] is None:
            diffs.append((family.levels[i], family.levels[i + 1], math.nan))
        else:
            diffs.append((family.levels[i], family.levels[i + 1], sup_log_distance(metrics[i], metrics[i + 1], region)))
    return ExhaustionResult(family.levels, metrics, reports, diffs, sups, errors)


# -- uniqueness probe --------------------------------------------------------------------

def _mode(x: np.ndarray, ax, m: int, phase: float) -> np.ndarray:
    u = (x - ax.start) / ax.length
    if ax.rule == DIRICHLET:
        return np.sin(math.pi * m * u)
    return np.cos(2.0 * math.pi * m * u + phase)


def equivariant_perturbation(H0: MetricField, seed: int, mask: np.ndarray | None = None, amplitude: float = 0.3,
                             modes: int = 2) -> np.ndarray:
    """Random band-limited trace-free H0-self-adjoint s, compatible with the seam, zero off the interior.

    A Hermitian field Y0 on the cross-section is spread along the twisted axis
    as Y = rho(b) Y0 + rho(b - L) T^dagger Y0 T, which obeys the metric seam rule;
    s is the trace-free part of H0^-1 Y times a window.
    """
    g = H0.geometry
    r = H0.rank
    rng = np.random.default_rng(seed)
    tw = g.twisted_axis
    Y0 = np.zeros(g.shape + (r, r), dtype=complex)
    others = [i for i in range(g.ndim) if i != tw]
    for _ in range(3 * modes):
        C = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
        C = C + C.conj().T
        f = np.ones(g.shape)
        for i in others:
            ax = g.axes[i]
            m = int(rng.integers(1 if ax.rule == DIRICHLET else 0, modes + 1))
            f = f * _mode(g.mesh(ax.name), ax, m, rng.uniform(0, 2 * math.pi))
        Y0 += f[..., None, None] * C
    if tw is not None:
        L = g.axes[tw].length
        b = g.mesh(g.axes[tw].name) - g.axes[tw].start
        T = H0.spec.transition
        rho0 = seam_partition(b, L)[..., None, None]
        rho1 = seam_partition(b - L, L)[..., None, None]
        Y = rho0 * Y0 + rho1 * (dagger(T) @ Y0 @ T)
    else:
        Y = Y0
    s = trace_free(np.linalg.solve(H0.H, Y))
    inner = interior(mask, g)
    window = np.ones(g.shape)
    for i, ax in enumerate(g.axes):
        if ax.rule != DIRICHLET:
            continue
        x = g.mesh(ax.name)
        xs = x[inner]
        if xs.size == 0:
            continue
        lo, hi = float(xs.min()) - ax.spacing, float(xs.max()) + ax.spacing
        window = window * np.clip(np.sin(math.pi * (x - lo) / (hi - lo)), 0.0, None) ** 2
    s = s * (window * inner)[..., None, None]
    norms = np.sqrt(np.maximum(endo_norm_sq(s, H0.H), 0.0))
    peak = float(norms.max(initial=0.0))
    if peak == 0.0 or amplitude == 0.0:
        return np.zeros_like(s)
    s = s * (amplitude / peak)
    # restore exact self-adjointness in H0's frame
    return 0.5 * (s + np.linalg.solve(H0.H, dagger(s) @ H0.H))


@dataclass
class UniquenessResult:
    distance: float
    perturbation_sup: float
    reports: tuple
    limits: tuple


def uniqueness_probe(H0: MetricField, seed: int, mask: np.ndarray | None = None, config: FlowConfig | None = None,
                     amplitude: float = 0.3, s_pert: np.ndarray | None = None,
                     reference: tuple | None = None) -> UniquenessResult:
    """Flow from H0 and from H0 exp(s_pert); report the sup log-distance of the two limits.

    ``reference`` may carry an already computed (limit, report) pair for the unperturbed flow.
    """
    config = config or FlowConfig()
    if s_pert is None:
        s_pert = equivariant_perturbation(H0, seed, mask, amplitude)
    Hp = H0.with_values(hermitian_part(H0.H @ functional_calculus(s_pert, np.exp, H0.H)))
    H1, r1 = reference if reference is not None else dirichlet_solve(H0, mask, config)
    H2, r2 = dirichlet_solve(Hp, mask, config)
    full = H0.geometry.full_mask() if mask is None else mask
    dist = sup_log_distance(H1, H2, full)
    sup_pert = float(np.sqrt(np.maximum(endo_norm_sq(s_pert, H0.H), 0.0)).max(initial=0.0))
    return UniquenessResult(dist, sup_pert, (r1, r2), (H1, H2))


def metric_distance_table(metrics: list[MetricField], region: np.ndarray | None = None) -> np.ndarray:
    n = len(metrics)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = sup_log_distance(metrics[i], metrics[j], region)
    return out


__all__ = [
    "FlowConfig",
    "FlowReport",
    "FlowDiagnostics",
    "ExhaustionResult",
    "UniquenessResult",
    "auto_dt",
    "heat_step",
    "dirichlet_solve",
    "exhaustion_solve",
    "flow_diagnostics",
    "uniqueness_probe",
    "equivariant_perturbation",
    "trace_free_energy",
    "sup_log_distance",
    "relative_spectrum",
    "F_of_b",
    "metric_log",
]
