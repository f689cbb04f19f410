"""Command-line entry point: ``hermflow <command> [options]``.

Configuration comes from built-in defaults, then an optional JSON file given
with --config, then explicit flags (flags win).  Every run writes report.json
and series.csv into --out.  Exit codes: 0 success, 1 validation error,
2 numerical failure (the report is still written when possible).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bundle import MetricField, curvature, he_residual, metric_exp
from .domain.estimates import manufactured_subsolution, sup_estimate_verify
from .domain.grid import build_instanton_domain, build_monopole_domain, interior
from .domain.io import load_field, save_field
from .domain.weights import DOUBLY_PERIODIC, SPATIALLY_PERIODIC, weight_field
from .errors import HermflowError, InvalidInputError, InvalidParameterError, NumericalError, ReportIOError, ValidationError
from .examples import (
    PipelineOptions,
    Rank2ExampleParams,
    cutoff_projectors,
    pipeline_config,
    rank1_monopole,
    rank2_initial_metric,
    run_rank2_pipeline,
)
from .flow import SCHEMES, dirichlet_solve, equivariant_perturbation
from .functional import degree, donaldson_M, slope
from .report import check, emit_report
from .stability import chern_weil_stability_scan, eigen_subbundle_obstruction, monodromy_roots

COMMANDS = ("flow", "functional", "degree", "example", "stability", "verify-assumption")

DEFAULTS = {
    "out": "hermflow-out",
    "input": None,
    "seed": 0,
    "bundle": "rank2",
    "a": "0.5",
    "c0": 0.0,
    "cinf": 0.0,
    "S": 3.0,
    "S1": 0.75,
    "S2": 1.75,
    "res": [32, 32, 32],
    "period": 1.0,
    "alpha": "2",
    "dt": "auto",
    "steps": 4000,
    "tol": 1e-5,
    "scheme": "rkl2",
    "stages": 32,
    "levels": None,
    "record_every": 5,
    "uniqueness": True,
    "exhaustion": True,
    "amplitude": 0.3,
    "kind": "monopole",
    "delta": 1.0,
    "B": [1.0, 2.0, 4.0],
    "samples": 1000,
    "checkpoint": True,
}

# det drift after projection is zero up to floating-point round-off of a 2x2 determinant
DET_ROUNDOFF = 1e-12

WEIGHT_KINDS = {"monopole": DOUBLY_PERIODIC, "instanton": SPATIALLY_PERIODIC,
                DOUBLY_PERIODIC: DOUBLY_PERIODIC, SPATIALLY_PERIODIC: SPATIALLY_PERIODIC}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInputError(f"{self.prog}: {message}")


def _complex(text) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise InvalidInputError(f"not a complex number: {text!r}") from exc


def _int_list(text) -> list[int]:
    items = text if isinstance(text, (list, tuple)) else [v for v in str(text).split(",") if v.strip()]
    try:
        vals = [int(v) for v in items]
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"--res needs integers, got {text!r}") from exc
    if len(vals) == 1:
        vals = vals * 3
    if len(vals) != 3 or min(vals) < 4:
        raise InvalidInputError(f"--res needs one or three integers >= 4, got {text!r}")
    return vals


def _float_list(text) -> list[float] | None:
    if text is None:
        return None
    items = text if isinstance(text, (list, tuple)) else [v for v in str(text).split(",") if v.strip()]
    try:
        return [float(v) for v in items]
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from exc


def _dt(text):
    if str(text) == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError as exc:
        raise InvalidInputError(f"--dt needs a number or 'auto', got {text!r}") from exc


def _add(p, *names, **kw):
    p.add_argument(*names, default=argparse.SUPPRESS, **kw)


def _geometry_flags(p):
    _add(p, "--S", type=float, help="truncation |s| <= S")
    _add(p, "--res", help="grid points: N or Nb,Ns,Ntheta")
    _add(p, "--period", type=float, help="period of the twisted axis")


def _rank2_flags(p):
    _add(p, "--a", help="gluing parameter a (complex, not 0 or +-1)")
    _add(p, "--c0", type=float, help="end constant at s -> -infinity")
    _add(p, "--cinf", type=float, help="end constant at s -> +infinity")
    _add(p, "--S1", type=float, help="inner gluing radius")
    _add(p, "--S2", type=float, help="outer gluing radius")


def _flow_flags(p):
    _add(p, "--dt", help="time step or 'auto'")
    _add(p, "--steps", type=int, help="maximum number of steps")
    _add(p, "--tol", type=float, help="residual target relative to the initial residual")
    _add(p, "--scheme", choices=SCHEMES)
    _add(p, "--stages", type=int, help="stages per RKL2 super-step")
    _add(p, "--levels", help="comma-separated exhaustion levels")
    _add(p, "--record-every", dest="record_every", type=int)


def _common(p):
    _add(p, "--config", help="JSON file with option values; flags override it")
    _add(p, "--out", help="output directory")
    _add(p, "--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hermflow", description="Hermitian-Einstein heat flow laboratory")
    parser.add_argument("--version", action="version", version=f"hermflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("flow", help="Dirichlet heat flow from an example initial metric")
    _common(p), _geometry_flags(p), _rank2_flags(p), _flow_flags(p)
    _add(p, "--bundle", choices=("rank1", "rank2"))
    _add(p, "--alpha", help="rank-1 seam scalar")
    _add(p, "--input", help="initial metric field file (replaces the example metric)")

    p = sub.add_parser("functional", help="Donaldson functional of two metrics and its cocycle defect")
    _common(p), _geometry_flags(p), _rank2_flags(p)
    _add(p, "--amplitude", type=float, help="sup of the random perturbations")
    _add(p, "--input", help="second metric field file")

    p = sub.add_parser("degree", help="Chern-Weil degree and slope")
    _common(p), _geometry_flags(p), _rank2_flags(p)
    _add(p, "--bundle", choices=("rank1", "rank2"))
    _add(p, "--alpha", help="rank-1 seam scalar")
    _add(p, "--input", help="metric field file")

    p = sub.add_parser("example", help="rank-1 or rank-2 monopole example")
    esub = p.add_subparsers(dest="which", required=True, parser_class=_Parser)
    e1 = esub.add_parser("rank1", help="flat line bundle with seam scalar alpha")
    _common(e1), _geometry_flags(e1)
    _add(e1, "--alpha", help="seam scalar (complex, nonzero)")
    e2 = esub.add_parser("rank2", help="rank-2 example: construction, flow, diagnostics")
    _common(e2), _geometry_flags(e2), _rank2_flags(e2), _flow_flags(e2)
    _add(e2, "--amplitude", type=float, help="uniqueness perturbation size")
    _add(e2, "--no-uniqueness", dest="uniqueness", action="store_false")
    _add(e2, "--no-exhaustion", dest="exhaustion", action="store_false")
    _add(e2, "--no-checkpoint", dest="checkpoint", action="store_false")

    p = sub.add_parser("stability", help="monodromy obstruction and slope scan")
    _common(p), _geometry_flags(p), _rank2_flags(p)
    _add(p, "--samples", type=int, help="random (a, w) pairs for the root identities")

    p = sub.add_parser("verify-assumption", help="sup estimate on manufactured subsolutions")
    _common(p)
    _add(p, "--kind", choices=sorted(WEIGHT_KINDS))
    _add(p, "--delta", type=float)
    _add(p, "--B", help="comma-separated B values")
    _add(p, "--S", type=float)
    _add(p, "--res", help="grid points: N or three integers")
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "which", "config")}
    cfg = dict(DEFAULTS)
    path = getattr(ns, "config", None)
    if path:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InvalidInputError(f"config {path} must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise InvalidInputError(f"unknown config keys in {path}: {', '.join(unknown)}")
        cfg.update(loaded)
    cfg.update(flags)
    cfg["res"] = _int_list(cfg["res"])
    cfg["levels"] = _float_list(cfg["levels"])
    cfg["B"] = _float_list(cfg["B"])
    cfg["dt"] = _dt(cfg["dt"])
    cfg["a"] = str(cfg["a"])
    cfg["alpha"] = str(cfg["alpha"])
    cfg["command"] = ns.command if ns.command != "example" else f"example {ns.which}"
    return dict(sorted(cfg.items()))


# -- builders --------------------------------------------------------------------

def _params(cfg) -> Rank2ExampleParams:
    return Rank2ExampleParams(a=_complex(cfg["a"]), c0=cfg["c0"], cinf=cfg["cinf"], S=cfg["S"], S1=cfg["S1"],
                              S2=cfg["S2"], resolution=tuple(cfg["res"]), torus_period=cfg["period"])


def _rank1_metric(cfg) -> MetricField:
    P = cfg["period"]
    g = build_monopole_domain(P, cfg["S"], cfg["res"], b_start=-0.5 * P)
    return rank1_monopole(_complex(cfg["alpha"]), g)[1]


def _initial_metric(cfg) -> MetricField:
    H0 = _rank1_metric(cfg) if cfg.get("bundle") == "rank1" else rank2_initial_metric(_params(cfg))
    if cfg.get("input"):
        data, g, _ = load_field(cfg["input"])
        if g.shape != H0.geometry.shape or data.shape != H0.H.shape:
            raise InvalidInputError(f"{cfg['input']}: field shape {data.shape} does not match {H0.H.shape}")
        H0 = H0.with_values(np.asarray(data, dtype=complex))
    return H0


def _checkpoint(cfg, H: MetricField) -> None:
    path = Path(cfg["out"]) / "limit.hfld"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        save_field(path, H.H, H.geometry, rank=H.rank)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _flow_config(cfg):
    return pipeline_config(dt=cfg["dt"], max_steps=cfg["steps"], residual_tol=cfg["tol"], scheme=cfg["scheme"],
                           stages=cfg["stages"], record_every=cfg["record_every"])


# -- commands ----------------------------------------------------------------------

def _flow_summary_checks(rep, H0, Hlim, mask) -> tuple[dict, dict]:
    g = H0.geometry
    outside = ~interior(mask, g)
    summary = rep.summary()
    summary["reduction_factor"] = rep.initial_residual / rep.final_residual if rep.final_residual > 0 else math.inf
    summary["boundary_identical"] = bool(np.array_equal(Hlim.H[outside], H0.H[outside]))
    summary["det_drift"] = rep.det_drift[-1] if rep.det_drift else 0.0
    checks = {
        "boundary_identical": check(summary["boundary_identical"], True, summary["boundary_identical"], "=="),
        "residual_target": check(rep.final_residual, rep.target_residual,
                                 rep.final_residual <= rep.target_residual),
    }
    return summary, checks


def cmd_flow(cfg):
    H0 = _initial_metric(cfg)
    fcfg = _flow_config(cfg)
    mask = H0.geometry.full_mask()
    Hlim, rep = dirichlet_solve(H0, mask, fcfg)
    summary, checks = _flow_summary_checks(rep, H0, Hlim, mask)
    summary["he_residual_final"] = rep.final_residual
    _checkpoint(cfg, Hlim)
    status = 0 if rep.converged else 2
    return summary, rep.rows(), checks, status


def cmd_functional(cfg):
    H0 = rank2_initial_metric(_params(cfg))
    full = H0.geometry.full_mask()
    rng_seeds = (cfg["seed"], cfg["seed"] + 1)
    if cfg.get("input"):
        data, _, _ = load_field(cfg["input"])
        H1 = H0.with_values(np.asarray(data, dtype=complex))
    else:
        H1 = H0.with_values(metric_exp(H0.H, equivariant_perturbation(H0, rng_seeds[0], full, cfg["amplitude"])))
    H2 = H0.with_values(metric_exp(H0.H, equivariant_perturbation(H0, rng_seeds[1], full, cfg["amplitude"])))
    m01 = donaldson_M(H0, H1, full)
    m12 = donaldson_M(H1, H2, full)
    m02 = donaldson_M(H0, H2, full)
    scale = max(abs(m01.total), abs(m12.total), abs(m02.total), 1e-300)
    defect = abs(m02.total - m01.total - m12.total)
    results = {"M_01": m01, "M_12": m12, "M_02": m02, "cocycle_defect": defect,
               "cocycle_relative_defect": defect / scale}
    checks = {"boundary_matched": check(m01.boundary_mismatch, 1e-8, m01.boundary_ok)}
    return results, [], checks, 0


def cmd_degree(cfg):
    H = _initial_metric(cfg)
    d = degree(H, with_imag=True)
    results = {"degree": d.value, "degree_imag": d.imag, "rank": H.rank, "slope": slope(d.value, H.rank)}
    return results, [], {}, 0


def cmd_example_rank1(cfg):
    H = _rank1_metric(cfg)
    F = curvature(H)
    sup_F = float(max(np.abs(c).max(initial=0.0) for c in F.components.values()))
    deg = float(degree(H))
    res = he_residual(H).sup
    results = {"curvature_sup": sup_F, "degree": deg, "he_residual_final": res, "alpha": cfg["alpha"]}
    checks = {
        "curvature_sup": check(sup_F, 1e-10, sup_F <= 1e-10),
        "degree": check(abs(deg), 1e-10, abs(deg) <= 1e-10),
        "he_residual_final": check(res, 1e-10, res <= 1e-10),
    }
    return results, [], checks, 0


def rank2_checks(r: dict) -> dict:
    checks = {}
    fl = r.get("flow", {})
    if fl:
        checks["boundary_identical"] = check(fl["boundary_identical"], True, fl["boundary_identical"], "==")
        checks["det_drift"] = check(fl["det_drift"], DET_ROUNDOFF, fl["det_drift"] <= DET_ROUNDOFF)
        checks["he_residual_final"] = check(fl["final_residual"], fl["target_residual"],
                                            fl["final_residual"] <= fl["target_residual"])
        checks["reduction_factor"] = check(fl["reduction_factor"], 10.0, fl["reduction_factor"] >= 10.0, ">=")
    d = r.get("diagnostics")
    if d:
        checks["functional_nonincreasing"] = check(d["functional_max_increment"], 0.0,
                                                   d["functional_nonincreasing"], "<= (slack 1e-8 scale)")
        e = d["energy_identity_middle_rel_error"]
        checks["energy_identity"] = check(e, 0.05, e <= 0.05)
        s = d["F_loglog_slope"]
        checks["small_time_exponent"] = check(s, 1.9, s >= 1.9, ">=")
    ex = r.get("exhaustion")
    if ex:
        sups = ex["sup_s"]
        ok = all(math.isfinite(x) for x in sups) and max(sups) <= 2.0 * sups[0]
        checks["c0_monitor"] = check(max(sups), 2.0 * sups[0], ok)
        diffs = [x[2] for x in ex["diffs"]]
        dec = all(math.isfinite(x) for x in diffs) and all(b < a for a, b in zip(diffs, diffs[1:]))
        checks["exhaustion_diffs_decreasing"] = check(diffs, "strictly decreasing", dec, "decreasing")
    u = r.get("uniqueness")
    if u:
        checks["uniqueness"] = check(u["distance"], 1e-3, u["distance"] <= 1e-3)
    c = r.get("curvature_l2")
    if c:
        checks["curvature_l2"] = check(c["rel_change"], 0.05, c["rel_change"] <= 0.05)
    return checks


def cmd_example_rank2(cfg):
    params = _params(cfg)
    opts = PipelineOptions(levels=tuple(cfg["levels"]) if cfg["levels"] else None, uniqueness=cfg["uniqueness"],
                           exhaustion=cfg["exhaustion"], seed=cfg["seed"], amplitude=cfg["amplitude"])
    r = run_rank2_pipeline(params, _flow_config(cfg), opts)
    series = r.pop("_series")
    Hlim = r.pop("_limit")
    if cfg["checkpoint"]:
        _checkpoint(cfg, Hlim)
    checks = rank2_checks(r)
    status = 0 if r["flow"]["converged"] and not r["errors"] else 2
    return r, series, checks, status


def cmd_stability(cfg):
    a = _complex(cfg["a"])
    obs = eigen_subbundle_obstruction(a)
    rng = np.random.default_rng(cfg["seed"])
    n = cfg["samples"]
    aa = rng.normal(size=n) + 1j * rng.normal(size=n)
    ww = np.exp(rng.normal(size=n) + 1j * rng.uniform(0, 2 * np.pi, size=n))
    b1, b2 = monodromy_roots(aa, ww) if n else (np.zeros(0), np.zeros(0))
    prod_err = float(np.abs(b1 * b2 - (1 - aa * aa)).max(initial=0.0))
    sum_err = float(np.abs(b1 + b2 - (ww + 1 / ww)).max(initial=0.0))
    results = {"a": [a.real, a.imag], "obstruction": obs, "root_product_error": prod_err,
               "root_sum_error": sum_err, "samples": n}
    checks = {"root_product": check(prod_err, 1e-10, prod_err <= 1e-10),
              "root_sum": check(sum_err, 1e-10, sum_err <= 1e-10)}
    if a not in (0, 1, -1):
        params = _params(cfg)
        H0 = rank2_initial_metric(params)
        scan = chern_weil_stability_scan(H0, cutoff_projectors(params, H0), H0.geometry.full_mask())
        results["scan"] = scan
    return results, [], checks, 0


def cmd_verify_assumption(cfg):
    kind = WEIGHT_KINDS[cfg["kind"]]
    n = cfg["res"]
    if kind == DOUBLY_PERIODIC:
        g = build_monopole_domain(1.0, cfg["S"], n, b_start=-0.5)
    else:
        g = build_instanton_domain(cfg["S"], (2 * n[0], n[1], n[2], n[2]))
    phi = weight_field(kind, cfg["delta"], g)
    Bs = sorted(cfg["B"])
    if not Bs or Bs[0] <= 0:
        raise InvalidParameterError("--B needs positive values")
    rows = []
    for B in Bs:
        rep = sup_estimate_verify(manufactured_subsolution(phi, B, g), phi, B, g)
        rows.append({"B": B, "sup_f": rep.sup_f, "integral_f_phi": rep.integral_f_phi, "fitted_C": rep.fitted_C,
                     "hypothesis_ok": rep.hypothesis_ok})
    Cs = [row["fitted_C"] for row in rows]
    finite = all(math.isfinite(c) for c in Cs)
    mono = all(b >= a for a, b in zip(Cs, Cs[1:]))
    checks = {"hypothesis": check(all(r["hypothesis_ok"] for r in rows), True,
                                  all(r["hypothesis_ok"] for r in rows), "=="),
              "fitted_C_finite": check(Cs, "finite", finite, "finite"),
              "fitted_C_monotone_in_B": check(Cs, "nondecreasing", mono, "nondecreasing")}
    return {"kind": kind, "delta": cfg["delta"], "per_B": rows}, rows, checks, 0


DISPATCH = {
    "flow": cmd_flow,
    "functional": cmd_functional,
    "degree": cmd_degree,
    "example rank1": cmd_example_rank1,
    "example rank2": cmd_example_rank2,
    "stability": cmd_stability,
    "verify-assumption": cmd_verify_assumption,
}


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    cfg = None
    try:
        cfg = resolve_config(ns)
        results, series, checks, status = DISPATCH[cfg["command"]](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if cfg is not None:
            diag = getattr(exc, "diagnostics", {})
            try:
                emit_report(cfg["out"], cfg["command"], cfg, {"error": str(exc), "diagnostics": diag})
            except HermflowError as io_exc:
                print(f"error: {io_exc}", file=sys.stderr)
        return 2
    except HermflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    try:
        rpath, _ = emit_report(cfg["out"], cfg["command"], cfg, results, series, checks)
    except HermflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    failed = [k for k, c in checks.items() if not c["pass"]]
    if failed:
        print(f"checks failed: {', '.join(sorted(failed))}", file=sys.stderr)
    if status == 2:
        print("numerical failure: flow did not reach a stationary point; see report", file=sys.stderr)
    print(str(rpath))
    return status


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
