import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from conftest import ISOTHERMAL, bundle
from willmore_umbilic.chart import catalog_chart, sample, swap_axes
from willmore_umbilic.fields import grid_field, sample_function
from willmore_umbilic.geometry import (
    christoffel,
    christoffel_contraction,
    christoffel_trace,
    general_bundle,
    geometry_bundle,
    laplace_beltrami,
    laplace_beltrami_general,
)


def rate(coarse, fine):
    return np.log2(coarse / fine)


def grid(f):
    X, Y = np.meshgrid(f.x, f.y, indexing="ij")
    return X, Y


@pytest.mark.parametrize("name", ISOTHERMAL)
def test_tracefree_and_norm_identities(name):
    b = bundle(name, 128)
    tr = (b.h0.t11.values + b.h0.t22.values) / b.e2u.values
    scale = np.abs(b.h.t11.values) + np.abs(b.h.t22.values) + 1e-300
    assert np.max(np.abs(tr) * b.e2u.values / scale) <= 1e-12
    lhs = b.A0_sq.values
    rhs = 2 * np.abs(b.phi.values) ** 2 / b.e2u.values**2
    assert np.max(np.abs(lhs - rhs) / (lhs + rhs / 2 + 1e-300)) <= 1e-12


@pytest.mark.parametrize("name", ISOTHERMAL)
def test_christoffel_trace_vanishes(name):
    b = bundle(name, 128)
    gam = christoffel(b.u)
    size = max(np.max(np.abs(g.values)) for g in gam.values())
    for t in christoffel_trace(gam, b.e2u):
        assert np.max(np.abs(t.values * b.e2u.crop(t.margin).values)) <= 1e-12 * size
    for t in christoffel_contraction(gam, b.h0.crop(gam[(0, 0, 0)].margin), b.e2u):
        ref = np.max(np.abs(b.h.t11.values) + np.abs(b.h.t22.values)) * size / np.min(b.e2u.values)
        assert np.max(np.abs(t.values)) <= 1e-10 * ref


def _catenoid_e2u_error(n):
    b = bundle("catenoid", n)
    _, V = grid(b.e2u)
    return np.max(np.abs(b.e2u.values / np.cosh(V) ** 2 - 1))


def test_catenoid_metric_factor():
    assert _catenoid_e2u_error(128) <= 1e-3
    assert rate(_catenoid_e2u_error(64), _catenoid_e2u_error(128)) >= 1.8


def _sphere_e2u_error(n):
    b = bundle("sphere_stereo", n)
    X, Y = grid(b.e2u)
    return np.max(np.abs(b.e2u.values - 4 / (1 + X**2 + Y**2) ** 2))


def test_sphere_metric_factor():
    assert rate(_sphere_e2u_error(64), _sphere_e2u_error(128)) >= 1.8


def test_clifford_flat_in_sphere_ambient():
    assert np.max(np.abs(bundle("clifford_stereo", 128, 4, "sphere").e2u.values - 0.5)) <= 1e-4
    e1 = np.max(np.abs(bundle("clifford_stereo", 64, 2, "sphere").e2u.values - 0.5))
    e2 = np.max(np.abs(bundle("clifford_stereo", 128, 2, "sphere").e2u.values - 0.5))
    assert rate(e1, e2) >= 1.8


def test_catenoid_orientation_and_hopf():
    # normal = f_u x f_v; at (0, 0) this is (+1, 0, 0) for the catalog catenoid
    b = geometry_bundle(sample(catalog_chart("catenoid"), 129))
    U, V = grid(b.normal)
    i, j = 0, int(np.argmin(np.abs(b.normal.y)))
    assert U[i, j] == 0 and abs(V[i, j]) < 1e-12
    np.testing.assert_allclose(b.normal.values[i, j], [1, 0, 0], atol=1e-12)
    want = np.stack([np.cos(U), np.sin(U), -np.sinh(V)], -1) / np.cosh(V)[..., None]
    assert np.max(np.abs(b.normal.values - want)) <= 1e-3
    assert np.max(np.abs(b.phi.values + 1)) <= 2e-3
    assert np.max(np.abs(np.abs(b.phi.values) - 1)) <= 2e-3
    assert np.max(np.abs(b.h.t12.values)) <= 1e-12
    assert np.max(np.abs(b.H.values)) <= 1e-3


def test_catenoid_hopf_converges():
    err = [np.max(np.abs(bundle("catenoid", n).phi.values + 1)) for n in (64, 128)]
    assert rate(*err) >= 1.8


def test_sphere_normal_radial_and_umbilic():
    for n, order in ((128, 4), (256, 2)):
        b = bundle("sphere_stereo", n, order)
        p = b.sampled.field().crop(b.normal.margin).values
        radial = np.einsum("ijk,ijk->ij", b.normal.values, p / np.linalg.norm(p, axis=-1, keepdims=True))
        assert np.max(np.abs(np.abs(radial) - 1)) <= 1e-8
    b = bundle("sphere_stereo", 128)
    np.testing.assert_allclose(np.linalg.norm(b.normal.values, axis=-1), 1, atol=1e-14)
    assert np.max(np.abs(np.abs(b.H.values) - 2)) <= 1e-2
    errs = [np.max(np.abs(np.abs(bundle("sphere_stereo", n).H.values) - 2)) for n in (64, 128)]
    assert rate(*errs) >= 1.8
    assert np.max(np.abs(b.phi.values)) <= 1e-2 * np.max(b.e2u.values)


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_sphere_second_form_is_proportional_to_metric(r):
    b = geometry_bundle(sample(catalog_chart("sphere_stereo", {"r": r}), 128))
    ratio = b.h.t11.values / b.e2u.values
    assert np.max(np.abs(np.abs(ratio) - 1 / r)) <= 1e-2 / r
    assert np.max(np.abs(b.h.t12.values / b.e2u.values)) <= 1e-2 / r


def test_enneper_minimal_with_constant_hopf():
    b = bundle("enneper", 128)
    assert np.max(np.abs(b.H.values)) <= 1e-3 * np.max(np.abs(b.A_sq.values)) ** 0.5
    assert np.max(np.abs(b.phi.values - 2)) <= 1e-3


def test_clifford_minimal_in_sphere():
    b = bundle("clifford_stereo", 256, 4, "sphere")
    assert b.H.sup() <= 1e-4


def test_hyperbolic_sphere_mean_curvature():
    # Euclidean radius 0.5 about the origin: hyperbolic radius 2 artanh(0.5)
    b = geometry_bundle(sample(catalog_chart("sphere_stereo", {"r": 0.5}), 128), "hyperbolic", 4)
    want = 2 / np.tanh(2 * np.arctanh(0.5))
    assert np.max(np.abs(np.abs(b.H.values) - want)) <= 1e-5


def test_christoffel_catenoid():
    b = bundle("catenoid", 128)
    gam = christoffel(b.u)
    g = gam[(0, 0, 1)]
    _, V = grid(g)
    assert np.max(np.abs(g.values - np.tanh(V))) <= 2e-3


def test_laplacian_of_harmonic_and_quadratic():
    u0 = sample_function(lambda z: 0 * z.real, 48)
    lin = sample_function(lambda z: 2 * z.real - 3 * z.imag + 1, 48)
    quad = sample_function(lambda z: np.abs(z) ** 2, 48)
    for route in "AB":
        # exact up to rounding amplified by 1/h^2
        assert np.max(np.abs(laplace_beltrami(lin, u0, route).values)) <= 1e-10
        np.testing.assert_allclose(laplace_beltrami(quad, u0, route).values, 4, atol=1e-10)


def test_laplacian_routes_agree():
    b = bundle("sphere_stereo", 128)
    const = b.u.with_values(np.full(b.u.shape, 2.0))
    a, c = laplace_beltrami(const, b.u, "A"), laplace_beltrami(const, b.u, "B")
    assert max(np.max(np.abs(a.values)), np.max(np.abs(c.values))) <= 1e-10
    # both routes converge to the same field
    diffs = []
    for n in (64, 128):
        u = bundle("sphere_stereo", n).u
        X, Y = grid(u)
        F = u.with_values(np.sin(3 * X) * np.cos(2 * Y))
        a, c = laplace_beltrami(F, u, "A"), laplace_beltrami(F, u, "B")
        m = max(a.margin, c.margin)
        diffs.append(np.max(np.abs(a.crop(m).values - c.crop(m).values)))
    assert rate(*diffs) >= 1.8


@pytest.mark.parametrize("name", ["enneper", "catenoid", "sphere_stereo"])
def test_orientation_swap_conjugates_hopf(name):
    s = sample(catalog_chart(name), 64)
    t = sample(swap_axes(catalog_chart(name)), 64)
    a, b = geometry_bundle(s), geometry_bundle(t)
    np.testing.assert_array_equal(b.phi.values, np.conj(a.phi.values).T)
    np.testing.assert_array_equal(b.H.values, -a.H.values.T)


def _path_gap(name, n):
    c = bundle(name, n)
    g = general_bundle(sample(catalog_chart(name), n))
    m = max(c.H.margin, g.H.margin)
    return (
        np.max(np.abs(c.H.crop(m).values - g.H.crop(m).values)),
        np.max(np.abs(c.A0_sq.crop(m).values - g.A0_sq.crop(m).values)),
    )


@pytest.mark.parametrize("name", ["enneper", "sphere_stereo", "catenoid"])
def test_general_path_matches_conformal(name):
    # the two paths differ only through the O(h^2) non-conformality of the FD metric
    (h64, a64), (h128, a128) = _path_gap(name, 64), _path_gap(name, 128)
    assert h128 <= 2e-3 and a128 <= 2e-3
    assert h128 <= 1e-12 or rate(h64, h128) >= 1.8
    assert a128 <= 1e-12 or rate(a64, a128) >= 1.8


def test_general_laplacian_matches_conformal_route():
    n = 96
    c = bundle("sphere_stereo", n)
    g = general_bundle(sample(catalog_chart("sphere_stereo"), n))
    X, Y = grid(g.H)
    F = g.H.with_values(np.sin(X) * Y)
    lg = laplace_beltrami_general(F, g)
    u = c.u
    lc = laplace_beltrami(u.with_values(np.sin(grid(u)[0]) * grid(u)[1]), u, "A")
    m = max(lg.margin, lc.margin)
    assert np.max(np.abs(lg.crop(m).values - lc.crop(m).values)) <= 1e-2


@settings(max_examples=10, deadline=None)
@given(
    st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    st.lists(st.floats(-5, 5), min_size=3, max_size=3),
)
def test_rigid_motion_invariance(rotvec, shift):
    s = sample(catalog_chart("enneper"), 48)
    R = Rotation.from_rotvec(rotvec).as_matrix()
    moved = s.with_positions(s.positions @ R.T + np.asarray(shift))
    a, b = geometry_bundle(s), geometry_bundle(moved)
    for name in ("e2u", "H", "A0_sq", "phi"):
        x, y = getattr(a, name).values, getattr(b, name).values
        assert np.max(np.abs(x - y)) <= 1e-9 * (1 + np.max(np.abs(x)))
    np.testing.assert_allclose(b.normal.values, a.normal.values @ R.T, atol=1e-12)


def test_non_isothermal_rejected():
    from willmore_umbilic.chart import IsothermalityError

    with pytest.raises(IsothermalityError):
        geometry_bundle(sample(catalog_chart("graph_bump"), 64))


def test_grid_field_helper_roundtrip():
    x = np.linspace(0, 1, 5)
    f = grid_field(np.outer(x, x), x, x)
    assert f.margin == 0 and f.shape == (5, 5)
