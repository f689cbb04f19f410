import cmath

import numpy as np
import pytest

from hermflow.bundle import BundleSpec, MetricField, dagger, identity_field
from hermflow.domain import build_monopole_domain
from hermflow.errors import InvalidInputError
from hermflow.examples import Rank2ExampleParams, cutoff_projectors, rank2_initial_metric
from hermflow.stability import (
    BOUNDARY,
    DESTABILIZED,
    STABLE,
    chern_weil_stability_scan,
    eigen_subbundle_obstruction,
    monodromy_roots,
    slope_compare,
)


@pytest.mark.parametrize("sub,verdict", [(0.0, BOUNDARY), (-1.0, STABLE), (1.0, DESTABILIZED)])
def test_slope_compare(sub, verdict):
    v = slope_compare(sub, 1, 0.0, 2, 1e-6)
    assert v.verdict == verdict
    gap = v.total_slope - v.sub_slope
    assert (gap > v.margin) == (verdict == STABLE)
    assert (gap < -v.margin) == (verdict == DESTABILIZED)


@pytest.mark.parametrize("ranks", [(0, 2), (2, 2), (3, 2)])
def test_slope_compare_rank_range(ranks):
    with pytest.raises(InvalidInputError):
        slope_compare(0.0, ranks[0], 0.0, ranks[1])


def test_roots_example():
    b1, b2 = monodromy_roots(0.0, 2.0)
    assert {round(b1.real, 12), round(b2.real, 12)} == {2.0, 0.5}
    assert b1 == pytest.approx(2.0)


def test_root_identities_random():
    rng = np.random.default_rng(0)
    a = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    w = np.exp(rng.uniform(-4, 4, 1000) + 1j * rng.uniform(0, 2 * np.pi, 1000))
    for ai, wi in zip(a, w):
        b1, b2 = monodromy_roots(ai, wi)
        assert abs(b1 * b2 - (1 - ai * ai)) <= 1e-10 * max(1.0, abs(1 - ai * ai))
        assert abs(b1 + b2 - (wi + 1 / wi)) <= 1e-10 * max(1.0, abs(wi + 1 / wi))


def test_roots_reject_zero():
    with pytest.raises(InvalidInputError):
        monodromy_roots(0.5, 0.0)


def test_beta1_near_w_at_infinity():
    b1, _ = monodromy_roots(0.5, 10.0)
    assert abs(b1 - 10.0) <= 0.01 * 10


def test_branch_continuity_on_large_circle():
    th = np.linspace(0, 2 * np.pi, 2001)
    w = 20.0 * np.exp(1j * th)
    b1, _ = monodromy_roots(0.5, w)
    assert np.abs(np.diff(b1)).max() < 0.2
    assert abs(b1[-1] - b1[0]) <= 1e-10


@pytest.mark.parametrize("a", [0.0, 1.0, -1.0])
def test_obstruction_degenerate(a):
    assert not eigen_subbundle_obstruction(a).multivalued


def test_obstruction_half():
    ob = eigen_subbundle_obstruction(0.5)
    assert ob.multivalued
    assert ob.min_root_separation > 1e-6
    # the roots are the zeros of the quartic w^4 + (4a^2 - 2) w^2 + 1
    for z in ob.discriminant_roots:
        assert abs(z**4 - z**2 + 1) <= 1e-12


def test_obstruction_random_admissible():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a = complex(rng.normal(), rng.normal())
        assert eigen_subbundle_obstruction(a).multivalued


def test_obstruction_symmetries():
    a = 0.3 + 0.7j
    base = eigen_subbundle_obstruction(a)
    for b in (-a, a.conjugate()):
        other = eigen_subbundle_obstruction(b)
        assert other.multivalued == base.multivalued
        assert other.min_root_separation == pytest.approx(base.min_root_separation, rel=1e-10)
    conj = sorted(eigen_subbundle_obstruction(a.conjugate()).discriminant_roots, key=lambda z: (z.real, z.imag))
    ref = sorted((z.conjugate() for z in base.discriminant_roots), key=lambda z: (z.real, z.imag))
    assert np.allclose(conj, ref, atol=1e-12)


# -- Chern-Weil scan ----------------------------------------------------------------------

def flat_rank2(n=12):
    g = build_monopole_domain(1, 3, (n, n, n), b_start=-0.5)
    return MetricField(identity_field(g.shape, 2).astype(complex), BundleSpec(g, 2))


def test_scan_split_flat():
    H = flat_rank2()
    pi = np.zeros(H.H.shape, dtype=complex)
    pi[..., 0, 0] = 1.0
    [v] = chern_weil_stability_scan(H, [pi])
    assert v.verdict == BOUNDARY


def test_scan_twisting_projector_is_stable():
    H = flat_rank2()
    g = H.geometry
    s = g.mesh("s")
    ang = 0.5 * np.sin(np.pi * (s + 3) / 6) ** 2 * np.cos(g.mesh("theta"))
    v = np.stack([np.cos(ang), np.sin(ang)], axis=-1).astype(complex)
    pi = v[..., :, None] * v[..., None, :].conj()
    [verdict] = chern_weil_stability_scan(H, [pi])
    assert verdict.sub_slope < verdict.total_slope
    assert verdict.verdict == STABLE


def test_scan_collects_bad_candidates():
    H = flat_rank2()
    bad = np.zeros(H.H.shape, dtype=complex)
    bad[..., 0, 1] = 1.0
    [out] = chern_weil_stability_scan(H, [bad])
    assert isinstance(out, str)


def test_scan_rank2_example_cutoff_projector():
    p = Rank2ExampleParams(resolution=(16, 16, 16))
    H0 = rank2_initial_metric(p)
    [pi] = cutoff_projectors(p, H0)
    assert np.abs(pi @ pi - pi).max() <= 1e-10
    assert np.abs(np.linalg.solve(H0.H, dagger(pi) @ H0.H) - pi).max() <= 1e-8
    [v] = chern_weil_stability_scan(H0, [pi])
    assert v.verdict == STABLE
