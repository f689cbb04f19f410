import math

import numpy as np
import pytest

from hermflow.bundle import dagger, pad_metric
from hermflow.domain import build_monopole_domain
from hermflow.errors import BranchError, InvalidParameterError
from hermflow.examples import (
    PipelineOptions,
    Rank2ExampleParams,
    branch_margin,
    default_levels,
    delta_inf,
    delta_zero,
    det_target,
    end_diagonal,
    end_frames,
    end_metric,
    end_roots,
    pipeline_config,
    quintic_cutoff,
    rank1_monopole,
    rank2_bundle,
    rank2_initial_metric,
    run_rank2_pipeline,
    transition_matrix,
)
from hermflow.flow import sup_log_distance
from hermflow.stability import monodromy_roots


def random_far_w(rng, n, lo=1.5, hi=4.0):
    return np.exp(rng.uniform(lo, hi, n) + 1j * rng.uniform(0, 2 * np.pi, n))


# -- rank one ---------------------------------------------------------------------------

def test_rank1_trivial():
    g = build_monopole_domain(1, 1, (8, 9, 8))
    _, H = rank1_monopole(1.0, g)
    assert np.array_equal(H.H, np.ones(g.shape + (1, 1), dtype=complex))


def test_rank1_value_at_half():
    g = build_monopole_domain(1, 1, (8, 9, 8))
    _, H = rank1_monopole(math.e, g)
    assert g.axis("b").coords[4] == 0.5
    assert H.H[4, 0, 0, 0, 0].real == pytest.approx(math.e, rel=1e-15)


@pytest.mark.parametrize("alpha", [2.0, 1j * 0.5, -3 + 4j])
def test_rank1_wrap_compatibility(alpha):
    g = build_monopole_domain(1, 1, (8, 9, 8), b_start=-0.5)
    spec, H = rank1_monopole(alpha, g)
    Hp = pad_metric(H.H, spec)[..., 0, 0].real
    ax = g.axis("b")
    b = ax.start + ax.spacing * np.arange(-2, ax.points + 2)
    expect = abs(alpha) ** (2 * b)
    assert np.allclose(Hp[:, 0, 2], expect, rtol=1e-14)


def test_rank1_rejects_zero():
    g = build_monopole_domain(1, 1, (8, 9, 8))
    with pytest.raises(InvalidParameterError):
        rank1_monopole(0.0, g)


# -- rank-two bundle ---------------------------------------------------------------------------

def test_transition_determinant():
    rng = np.random.default_rng(0)
    w = np.exp(rng.uniform(-3, 3, 200) + 1j * rng.uniform(0, 7, 200))
    for a in (0.5, 0.3 + 0.2j, 2.0):
        d = np.linalg.det(transition_matrix(a, w))
        assert np.allclose(d, 1 - a * a, rtol=1e-10, atol=1e-10)


def test_transition_at_w_one():
    assert np.array_equal(transition_matrix(0.5, 1.0), np.array([[1, 0.5], [0.5, 1]], dtype=complex))


def test_rank2_bundle_on_grid():
    g = build_monopole_domain(1, 3, (8, 16, 8))
    spec = rank2_bundle(0.5, g)
    dets = np.linalg.det(spec.transition)
    assert np.allclose(np.abs(dets), 0.75, rtol=1e-12)
    assert np.all(np.isfinite(spec.condition_numbers()))
    assert spec.det_transition == pytest.approx(0.75)


@pytest.mark.parametrize("a", [0.0, 1.0, -1.0])
def test_rank2_bundle_rejects(a):
    g = build_monopole_domain(1, 3, (8, 16, 8))
    with pytest.raises(InvalidParameterError):
        rank2_bundle(a, g)


# -- end frames --------------------------------------------------------------------------------

def test_wedge_at_infinity():
    rng = np.random.default_rng(1)
    w = random_far_w(rng, 200)
    a = 0.5
    P = end_frames(a, w, "infinity")
    assert np.allclose(np.linalg.det(P), -a * w * delta_inf(a, w), rtol=1e-10)


def test_wedge_at_zero():
    rng = np.random.default_rng(2)
    w = 1.0 / random_far_w(rng, 200)
    a = 0.5
    P = end_frames(a, w, "zero")
    # the stated -a w delta_0 carries a typo; the determinant is -a w^-1 delta_0
    assert np.allclose(np.linalg.det(P), -a / w * delta_zero(a, w), rtol=1e-10)


def test_beta1_leading_order():
    r1, r2, _ = end_roots(0.5, 10.0, "infinity")
    assert abs(r1 - 10.0) <= 0.1
    b1, b2 = monodromy_roots(0.5, 10.0)
    assert r1 == pytest.approx(b1, rel=1e-12) and r2 == pytest.approx(b2, rel=1e-12)


def test_end_frames_branch_error():
    with pytest.raises(BranchError):
        end_frames(0.5, 1.0, "infinity")
    with pytest.raises(InvalidParameterError):
        end_frames(0.5, 10.0, "middle")


def test_branch_sets_agree_on_unit_circle():
    w = np.exp(1j * np.linspace(0.1, 2 * np.pi, 50))
    for a in (0.5, 0.2 + 0.3j):
        i1, i2, _ = end_roots(a, w, "infinity")
        z1, z2, _ = end_roots(a, w, "zero")
        for p, q, r, s in zip(i1, i2, z1, z2):
            assert min(abs(p - r) + abs(q - s), abs(p - s) + abs(q - r)) <= 1e-10


def test_delta_limits_at_grid_ends():
    p = Rank2ExampleParams()
    g = p.geometry()
    S = p.S
    w = np.exp(S + 1j * g.axis("theta").coords)
    bound = 2 * branch_margin(p.a, S)
    assert np.abs(delta_inf(p.a, w) - 1).max() <= bound
    assert np.abs(delta_zero(p.a, 1 / w) - 1).max() <= bound


def test_frame_change_consistency():
    rng = np.random.default_rng(3)
    w = random_far_w(rng, 100)
    b = rng.uniform(-0.5, 0.5, 100)
    for end, ww in (("infinity", w), ("zero", 1 / w)):
        H = end_metric(0.5, ww, b, 1.3, end)
        P = end_frames(0.5, ww, end)
        D = dagger(P) @ H @ P
        ref = end_diagonal(0.5, ww, b, 1.3, end)
        scale = np.abs(ref).max(axis=-1)
        assert np.all(np.abs(D[..., 0, 0] - ref[..., 0]) <= 1e-10 * scale)
        assert np.all(np.abs(D[..., 1, 1] - ref[..., 1]) <= 1e-10 * scale)
        assert np.all(np.abs(D[..., 0, 1]) <= 1e-10 * scale)


def test_end_metric_equivariance():
    rng = np.random.default_rng(4)
    w = random_far_w(rng, 100)
    b = rng.uniform(-0.5, 0.5, 100)
    for end, ww in (("infinity", w), ("zero", 1 / w)):
        T = transition_matrix(0.5, ww)
        H0 = end_metric(0.5, ww, b, 0.7, end)
        H1 = end_metric(0.5, ww, b + 1.0, 0.7, end)
        rel = np.abs(H1 - dagger(T) @ H0 @ T).max(axis=(-1, -2)) / np.abs(H1).max(axis=(-1, -2))
        assert rel.max() <= 1e-10


# -- initial metric -------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def initial():
    p = Rank2ExampleParams(resolution=(16, 24, 16))
    return p, rank2_initial_metric(p)


def test_initial_metric_det(initial):
    p, H = initial
    ratio = np.real(np.linalg.det(H.H)) / det_target(p.a, H.geometry)
    assert np.abs(ratio - 1).max() <= 1e-10


def test_initial_metric_positive_and_reduced(initial):
    _, H = initial
    H.validate()
    g = H.geometry
    assert [r.name for r in g.reduced_axes] == ["a"]
    assert H.H.ndim == g.ndim + 2


def test_initial_metric_obeys_seam(initial):
    # on the ends the metric is the exact end metric, whose continuation past the seam is T^dagger H T
    p, H = initial
    g = H.geometry
    Hstd = rank2_initial_metric(p, frame="standard")
    s = g.mesh("s")
    far = np.abs(s) >= p.S2
    w = np.exp(s + 1j * g.mesh("theta"))
    b = g.mesh("b")
    for end, side in (("infinity", far & (s > 0)), ("zero", far & (s < 0))):
        c = p.cinf if end == "infinity" else p.c0
        ref = end_metric(p.a, w[side], b[side], c, end)
        assert np.allclose(Hstd.H[side], ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())


@pytest.mark.parametrize("kwargs", [{"a": 0.0}, {"a": 1.0}, {"S1": 2.0, "S2": 1.0}, {"S2": 3.5},
                                    {"S1": 0.1, "S2": 0.5}, {"c0": math.nan}])
def test_params_rejected(kwargs):
    with pytest.raises(InvalidParameterError):
        Rank2ExampleParams(**kwargs)


def test_quintic_cutoff():
    x = np.array([0.0, 1.0, 1.5, 2.0, 3.0])
    c = quintic_cutoff(x, 1.0, 2.0)
    assert np.array_equal(c[[0, 1]], [0.0, 0.0]) and np.array_equal(c[[3, 4]], [1.0, 1.0])
    assert c[2] == pytest.approx(0.5)
    h = 1e-4
    for x0 in (1.0, 2.0):
        d1 = (quintic_cutoff(x0 + h, 1, 2) - quintic_cutoff(x0 - h, 1, 2)) / (2 * h)
        assert abs(d1) <= 1e-6


def test_default_levels():
    assert default_levels(4.0) == (2.0, 3.0, 4.0)
    assert default_levels(1.5) == (0.5, 1.5)


# -- pipeline --------------------------------------------------------------------------------------

def _small_pipeline(cinf):
    p = Rank2ExampleParams(cinf=cinf, resolution=(16, 16, 16))
    opts = PipelineOptions(exhaustion=False, uniqueness=False, diagnostics_steps=20, diagnostics_every=5,
                           small_time_steps=8)
    return run_rank2_pipeline(p, pipeline_config(stages=16), opts)


@pytest.fixture(scope="module")
def pipelines():
    return _small_pipeline(0.0), _small_pipeline(2.0)


def test_pipeline_report(pipelines):
    r, _ = pipelines
    assert r["stability"]["verdict"] == "stable"
    assert r["flow"]["converged"]
    assert r["flow"]["reduction_factor"] >= 10
    assert r["flow"]["boundary_identical"]
    assert r["errors"] == {}
    assert "exhaustion" not in r and "uniqueness" not in r
    assert r["diagnostics"]["functional_nonincreasing"]


def test_pipeline_boundary_data_matters(pipelines):
    r0, r2 = pipelines
    assert sup_log_distance(r0["_limit"], r2["_limit"]) > 1e-2
