import math

import numpy as np
import pytest
from scipy import integrate as spi

from hermflow.domain import (
    DIRICHLET,
    PERIODIC,
    TWISTED,
    Axis,
    FormField,
    GridGeometry,
    ahlfors_decay_check,
    ahlfors_epsilon1,
    build_instanton_domain,
    build_monopole_domain,
    exhaustion_family,
    integrate,
    kahler_form,
    lambda_contract,
    laplacian,
    line_estimate_check,
    load_field,
    manufactured_subsolution,
    save_field,
    sup_estimate_verify,
    weight_field,
)
from hermflow.domain.grid import boundary, interior
from hermflow.errors import InvalidGeometryError, InvalidInputError, InvalidParameterError, ShapeError

from oracles import bessel_field, line_bvp_solution, radial_decay_rate


def plane(L=10.0, n=161):
    ax = (Axis("x", 2 * L, n, DIRICHLET, start=-L), Axis("y", 2 * L, n, DIRICHLET, start=-L))
    return GridGeometry(ax, (("x", "y"),))


# -- geometry ---------------------------------------------------------------

def test_monopole_domain_axes():
    g = build_monopole_domain(1, 3, (16, 32, 16))
    assert [a.length for a in g.axes] == pytest.approx([1, 6, 2 * math.pi])
    assert [a.rule for a in g.axes] == [TWISTED, DIRICHLET, PERIODIC]
    assert [r.name for r in g.reduced_axes] == ["a"]
    assert g.n_complex == 2


def test_dirichlet_axis_too_short():
    with pytest.raises(InvalidGeometryError):
        build_monopole_domain(1, 3, (16, 2, 16))


@pytest.mark.parametrize("args", [(1, 0, (8, 8, 8)), (1, -1, (8, 8, 8)), (0, 1, (8, 8, 8)), (1, 1, (3, 8, 8))])
def test_monopole_domain_rejects(args):
    with pytest.raises(InvalidGeometryError):
        build_monopole_domain(*args)


def test_s_spacing():
    g = build_monopole_domain(1, 1, (8, 9, 8))
    assert g.axis("s").spacing == pytest.approx(0.25, abs=1e-15)


def test_instanton_domain():
    g = build_instanton_domain(2.0, (9, 4, 4, 4))
    assert g.shape == (9, 4, 4, 4)
    assert g.n_complex == 2
    assert g.axis("t").spacing == pytest.approx(0.5)


def test_duplicate_axis_names():
    ax = Axis("x", 1.0, 4, PERIODIC)
    with pytest.raises(InvalidGeometryError):
        GridGeometry((ax, ax), (("x", "x"),))


# -- laplacian --------------------------------------------------------------

def test_laplacian_constant():
    g = build_monopole_domain(1, 2, (8, 9, 8))
    lap = laplacian(np.full(g.shape, 3.7), g)
    inner = np.isfinite(lap)
    assert np.abs(lap[inner]).max() <= 1e-12
    assert not np.isfinite(lap[:, 0, :]).any()


def test_laplacian_sine_second_order():
    errs = []
    ns = (16, 32, 64)
    for n in ns:
        g = build_monopole_domain(1, 1, (n, 5, 4))
        b = g.mesh("b")
        lap = laplacian(np.sin(2 * math.pi * b), g)
        exact = 2 * math.pi**2 * np.sin(2 * math.pi * b)
        errs.append(np.nanmax(np.abs(lap - exact)))
    # leading truncation term of the three-point stencil: f'''' h^2 / 12
    for n, e in zip(ns, errs):
        assert e <= 2 * math.pi**2 * (2 * math.pi / n) ** 2 / 12 * 1.001
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_laplacian_s_squared():
    g = build_monopole_domain(1, 2, (8, 17, 8))
    lap = laplacian(g.mesh("s") ** 2, g)
    assert np.allclose(lap[:, 1:-1, :], -1.0, atol=1e-12)


def test_laplacian_shape_check():
    g = build_monopole_domain(1, 2, (8, 9, 8))
    with pytest.raises(ShapeError):
        laplacian(np.zeros((8, 9, 7)), g)


def test_summation_by_parts():
    g = build_monopole_domain(1, 2, (10, 13, 12))
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2,) + g.shape)
    for f in (u, v):
        f[:, 0, :] = 0.0
        f[:, -1, :] = 0.0
    lu, lv = laplacian(u, g), laplacian(v, g)
    ok = np.isfinite(lu)
    lhs = np.sum(u[ok] * lv[ok]) - np.sum(v[ok] * lu[ok])
    scale = np.sum(np.abs(u[ok] * lv[ok]))
    assert abs(lhs) <= 1e-10 * scale


def test_periodic_harmonic_is_constant():
    ax = (Axis("x", 1.0, 12, PERIODIC), Axis("y", 2.0, 10, PERIODIC))
    g = GridGeometry(ax, (("x", "y"),))
    rng = np.random.default_rng(1)
    r = rng.standard_normal(g.shape) + 5.0
    # the periodic laplacian is diagonal in Fourier space; removing every
    # nonconstant mode leaves the harmonic part of r
    hx, hy = g.spacings
    kx = np.fft.fftfreq(12) * 2 * math.pi
    ky = np.fft.fftfreq(10) * 2 * math.pi
    sym = (1 - np.cos(kx))[:, None] / hx**2 + (1 - np.cos(ky))[None, :] / hy**2
    rh = np.fft.fft2(r)
    rh[sym > 0] = 0.0
    f = np.real(np.fft.ifft2(rh))
    assert np.abs(laplacian(f, g)).max() <= 1e-12
    assert f.min() >= 0
    assert f.max() - f.min() <= 1e-8 * f.max()


# -- forms --------------------------------------------------------------------

def test_lambda_normalisation():
    g = build_monopole_domain(1, 1, (4, 5, 4))
    M = np.broadcast_to(np.array([[1.0, 2j], [-2j, 3.0]]), g.shape + (2, 2))
    F = FormField({(0, 0): 0.5j * M})
    assert np.allclose(lambda_contract(F, g), M)


def test_lambda_of_kahler_form():
    g = build_monopole_domain(1, 1, (4, 5, 4))
    out = lambda_contract(kahler_form(g, rank=2), g)
    assert np.array_equal(out, np.broadcast_to(2 * np.eye(2), g.shape + (2, 2)))
    assert np.array_equal(lambda_contract(kahler_form(g), g), np.full(g.shape, 2.0 + 0j))


def test_lambda_ignores_off_diagonal():
    g = build_monopole_domain(1, 1, (4, 5, 4))
    F = FormField({(0, 1): np.ones(g.shape, dtype=complex)})
    assert np.array_equal(lambda_contract(F, g), np.zeros(g.shape, dtype=complex))


def test_lambda_bad_component():
    g = build_monopole_domain(1, 1, (4, 5, 4))
    with pytest.raises(ShapeError):
        lambda_contract(FormField({(2, 2): np.ones(g.shape)}), g)
    with pytest.raises(ShapeError):
        lambda_contract(FormField({(0, 0): np.ones((4, 4, 4))}), g)


# -- integration ----------------------------------------------------------------

def test_integrate_torus():
    ax = (Axis("x", 1.0, 8, PERIODIC), Axis("y", 2 * math.pi, 8, PERIODIC))
    g = GridGeometry(ax, (("x", "y"),))
    assert integrate(np.ones(g.shape), g) == pytest.approx(2 * math.pi, rel=1e-14)
    assert integrate(np.zeros(g.shape), g) == 0.0


def test_integrate_volume_and_empty_mask():
    g = build_monopole_domain(1, 2, (8, 9, 8))
    assert integrate(np.ones(g.shape), g) == pytest.approx(g.volume, rel=1e-14)
    assert integrate(np.ones(g.shape), g, np.zeros(g.shape, bool)) == 0.0


def test_integrate_weight_against_quadrature():
    # area form of C*_w in (s, theta) is e^{2s}; the weighted integral converges as S grows
    def phi_area(s):
        return np.exp(2 * s) / (1 + np.exp(2 * s)) ** 2

    errs = []
    for S in (2.0, 4.0, 8.0):
        g = build_monopole_domain(1, S, (4, int(80 * S) + 1, 4))
        phi = weight_field("doubly-periodic", 1.0, g)
        val = integrate(phi.values * np.exp(2 * g.mesh("s")), g)
        ref = 2 * math.pi * spi.quad(phi_area, -S, S, epsabs=1e-13)[0]
        assert val == pytest.approx(ref, rel=2e-4)
        errs.append(abs(val - math.pi))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


# -- weights ----------------------------------------------------------------------

def test_weights_closed_form():
    g = build_monopole_domain(1, 3, (4, 13, 4))
    s = g.axis("s").coords
    dp = weight_field("doubly-periodic", 1.0, g)
    assert dp.values[0, 6, 0] == pytest.approx(0.25, rel=1e-15)
    sp = weight_field("spatially-periodic", 1.0, g)
    assert s[10] == pytest.approx(2.0)
    assert sp.values[0, 10, 0] == pytest.approx(math.exp(-2), rel=1e-15)
    for w in (dp, sp):
        assert w.values.min() > 0


def test_weights_bounded_by_formula():
    g = build_monopole_domain(1, 6, (4, 61, 4))
    s = g.mesh("s")
    dp = weight_field("doubly-periodic", 0.7, g)
    assert np.all(dp.values <= (1 + np.exp(2 * s)) ** (-1.7) * (1 + 1e-14))
    sp = weight_field("spatially-periodic", 0.7, g)
    far = np.abs(s) >= 1
    assert np.all(sp.values[far] <= np.exp(-0.7 * np.abs(s[far])) * (1 + 1e-14))
    assert sp.values.max() <= 1.0


@pytest.mark.parametrize("delta", [0.0, -1.0])
def test_weights_reject_delta(delta):
    g = build_monopole_domain(1, 1, (4, 5, 4))
    with pytest.raises(InvalidParameterError):
        weight_field("doubly-periodic", delta, g)


def test_weight_unknown_kind():
    g = build_monopole_domain(1, 1, (4, 5, 4))
    with pytest.raises(InvalidParameterError):
        weight_field("elliptic", 1.0, g)


# -- sup estimate ----------------------------------------------------------------------

def test_sup_estimate_constant():
    g = build_monopole_domain(1, 3, (6, 31, 6))
    phi = weight_field("doubly-periodic", 1.0, g)
    rep = sup_estimate_verify(np.ones(g.shape), phi, 1.0, g)
    I = integrate(phi.values, g)
    assert rep.fitted_C == pytest.approx(1 / (1 + I), rel=1e-14)
    assert rep.hypothesis_ok
    assert sup_estimate_verify(np.zeros(g.shape), phi, 1.0, g).fitted_C == 0.0


def test_sup_estimate_rejects_negative():
    g = build_monopole_domain(1, 3, (6, 31, 6))
    phi = weight_field("doubly-periodic", 1.0, g)
    f = np.ones(g.shape)
    f[0, 3, 0] = -1e-3
    with pytest.raises(InvalidInputError):
        sup_estimate_verify(f, phi, 1.0, g)


def test_sup_estimate_flags_violation():
    g = build_monopole_domain(1, 3, (6, 31, 6))
    phi = weight_field("doubly-periodic", 1.0, g)
    f = manufactured_subsolution(phi, 2.0, g)
    assert sup_estimate_verify(f, phi, 2.0, g).hypothesis_ok
    assert not sup_estimate_verify(f, phi, 1.0, g).hypothesis_ok


@pytest.mark.parametrize("kind", ["doubly-periodic", "spatially-periodic"])
def test_sup_estimate_monotone_in_B(kind):
    g = build_monopole_domain(1, 3, (8, 25, 8))
    phi = weight_field(kind, 1.0, g)
    Cs = []
    for B in (1.0, 2.0, 4.0):
        f = manufactured_subsolution(phi, B, g)
        lap = laplacian(f, g)
        ok = np.isfinite(lap)
        assert np.allclose(lap[ok], B * phi.values[ok], rtol=1e-8, atol=1e-10)
        rep = sup_estimate_verify(f, phi, B, g)
        assert rep.hypothesis_ok
        Cs.append(rep.fitted_C)
    assert Cs[0] <= Cs[1] <= Cs[2]


# -- decay off a ball ------------------------------------------------------------------

def test_ahlfors_exponential():
    g = plane()
    r = np.hypot(g.mesh("x"), g.mesh("y"))
    rep = ahlfors_decay_check(np.exp(-r), 0.5, g, R=3.0)
    assert rep.hypothesis_ok
    assert rep.epsilon == pytest.approx(1.0, rel=0.05)


def test_ahlfors_zero_field():
    g = plane(n=41)
    rep = ahlfors_decay_check(np.zeros(g.shape), 1.0, g, R=3.0)
    assert rep.epsilon == math.inf


def test_ahlfors_against_radial_oracle():
    g = plane()
    r = np.hypot(g.mesh("x"), g.mesh("y"))
    rep = ahlfors_decay_check(bessel_field(1.1, r), 1.0, g, R=3.0)
    assert rep.hypothesis_ok
    assert rep.epsilon >= ahlfors_epsilon1(1.0, 3.0, 2)
    rmax = 10 * math.sqrt(2)
    oracle = radial_decay_rate(1.1, 2, 0.5 * (3 + rmax), rmax)
    assert rep.epsilon == pytest.approx(oracle, rel=0.01)


def test_ahlfors_flags_violation():
    g = plane(n=81)
    r = np.hypot(g.mesh("x"), g.mesh("y"))
    rep = ahlfors_decay_check(np.exp(-0.2 * r), 1.0, g, R=3.0)
    assert not rep.hypothesis_ok
    assert rep.max_violation > 0


# -- estimate on the line ------------------------------------------------------------

def test_line_constant():
    t = np.linspace(-10, 10, 2001)
    rep = line_estimate_check(np.ones_like(t), t, 1.0, 1.0)
    assert rep.hypothesis_ok and rep.passed


def test_line_compact_support():
    t = np.linspace(-10, 10, 2001)
    gv = np.where(np.abs(t) < 2, np.cos(math.pi * t / 4) ** 2, 0.0)
    rep = line_estimate_check(gv, t, 10.0, 1.0)
    assert rep.hypothesis_ok and rep.passed
    assert abs(t[np.argmax(gv)]) < 2


def test_line_bvp_oracle():
    t = np.linspace(-20, 20, 4001)
    from hermflow.domain.weights import line_profile

    gv = line_bvp_solution(0.9, 1.0, 0.0, 20.0, t, lambda x: line_profile(x, 1.0))
    gv = np.maximum(gv, 0.0)
    rep = line_estimate_check(gv, t, 1.0, 1.0)
    assert rep.hypothesis_ok
    assert rep.margin > 0


def test_line_rejects_negative():
    t = np.linspace(-1, 1, 11)
    with pytest.raises(InvalidInputError):
        line_estimate_check(-np.ones_like(t), t, 1.0, 1.0)


# -- exhaustion and io ------------------------------------------------------------------

def test_exhaustion_nested():
    g = build_monopole_domain(1, 4, (8, 33, 8))
    fam = exhaustion_family(g, (2.0, 3.0, 4.0))
    assert len(fam) == 3
    for small, big in zip(fam.masks, fam.masks[1:]):
        assert np.all(big[small])
        assert big.sum() > small.sum()
    for m, bd in zip(fam.masks, fam.boundaries):
        assert np.array_equal(bd, m & ~interior(m, g))
    assert np.array_equal(fam.boundaries[-1], boundary(None, g))


def test_exhaustion_errors():
    g = build_monopole_domain(1, 4, (8, 33, 8))
    with pytest.raises(InvalidGeometryError):
        exhaustion_family(g, (1.0, 2.0))
    with pytest.raises(InvalidParameterError):
        exhaustion_family(g, (3.0, 2.0, 4.0))


def test_field_roundtrip(tmp_path):
    g = build_monopole_domain(1, 2, (4, 9, 6), b_start=-0.5)
    rng = np.random.default_rng(2)
    H = rng.standard_normal(g.shape + (2, 2)) + 1j * rng.standard_normal(g.shape + (2, 2))
    p = tmp_path / "f.hfld"
    save_field(p, H, g, rank=2)
    H2, g2, header = load_field(p)
    assert np.array_equal(H, H2)
    assert g2 == g
    assert header["rank"] == 2


def test_field_bad_header(tmp_path):
    p = tmp_path / "bad.hfld"
    p.write_bytes(b"not json\n\x00")
    with pytest.raises(InvalidInputError):
        load_field(p)
