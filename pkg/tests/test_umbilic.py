import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bundle
from willmore_umbilic.fields import sample_function
from willmore_umbilic.synthetic import SUITE, synthetic_field
from willmore_umbilic.umbilic import (
    ClassifyConfig,
    LoopError,
    NoAdmissibleLoop,
    UmbilicError,
    classify,
    classify_bundle,
    factor_out,
    sublevel_components,
    transversality_check,
    vanishing_order,
    winding_number,
)


def brute_force_winding(func, center, radius, samples=10_000):
    t = 2 * np.pi * np.arange(samples + 1) / samples
    vals = func(center[0] + radius * np.cos(t) + 1j * (center[1] + radius * np.sin(t)))
    return int(round((np.unwrap(np.angle(vals))[-1] - np.angle(vals[0])) / (2 * np.pi)))


# sublevel sets ---------------------------------------------------------------
def test_no_components_when_bounded_away_from_zero():
    phi = sample_function(lambda z: 1 + 0 * z, 64)
    assert sublevel_components(phi, 0.05) == []
    assert classify(sample_function(lambda z: 2 + 0.3 * z, 64)).components == []


def test_simple_zero_component():
    phi = sample_function(lambda z: z, 129)
    (comp,) = sublevel_components(phi, 0.05)
    i0 = j0 = 64
    assert any((c == (i0, j0)).all() for c in comp.cells)
    assert not comp.truncated
    # diameter O(eps): eps = 0.05 * RMS|z|
    h = phi.spacing[0]
    span = (comp.cells.max(0) - comp.cells.min(0)) * h
    assert np.all(span <= 2 * 0.05 * phi.abs().rms() + 2 * h)


def test_line_component_is_elongated():
    phi = sample_function(lambda z: z.real * (1 + 1j), 128)
    (comp,) = sublevel_components(phi, 0.05)
    span = comp.cells.max(0) - comp.cells.min(0)
    assert span[1] >= 4 * max(span[0], 1)
    assert comp.truncated


# winding numbers ---------------------------------------------------------------
@pytest.mark.parametrize("func,want", [(lambda z: z, 1), (np.conj, -1), (lambda z: z**2, 2)])
def test_winding_simple(func, want):
    phi = sample_function(func, 128)
    assert winding_number(phi, (0, 0), 0.3) == want == brute_force_winding(func, (0, 0), 0.3)


def test_winding_perturbed_cube_matches_brute_force():
    func = lambda z: z**3 * (1 + 0.1 * np.conj(z))  # noqa: E731
    want = brute_force_winding(func, (0, 0), 0.2)
    assert want == 3
    # local window: eps is relative to RMS|phi| over the sampled field
    phi = sample_function(func, 128, bounds=(-0.3, 0.3, -0.3, 0.3))
    assert winding_number(phi, (0, 0), 0.2) == want


def test_winding_rejects_loops_through_zeros():
    phi = sample_function(lambda z: z - 0.3, 128)
    with pytest.raises(LoopError):
        winding_number(phi, (0, 0), 0.3)
    with pytest.raises(LoopError):
        winding_number(phi, (0, 0), 1.5)


def test_vanishing_orders():
    assert vanishing_order(sample_function(lambda z: z**2, 128), (0, 0)) == 2
    func = lambda z: z * (z - 0.5)  # noqa: E731
    phi = sample_function(func, 128)
    assert vanishing_order(phi, (0, 0)) == 1
    # the agreed radii stay below 0.25, as the brute-force oracle requires
    assert brute_force_winding(func, (0, 0), 0.2) == 1


def test_curve_case_has_no_admissible_loop():
    with pytest.raises(NoAdmissibleLoop):
        vanishing_order(sample_function(lambda z: z.real * (1 + 1j), 128), (0, 0))


@settings(max_examples=20, deadline=None)
@given(
    st.integers(1, 3),
    st.booleans(),
    st.floats(-0.15, 0.15),
    st.floats(-0.15, 0.15),
)
def test_winding_of_shifted_powers(m, conjugate, cx, cy):
    c = cx + 1j * cy

    def func(z):
        w = (z - c) ** m
        return np.conj(w) if conjugate else w

    got = vanishing_order(sample_function(func, 128), (cx, cy))
    assert got == (-m if conjugate else m) == brute_force_winding(func, (cx, cy), 0.3)


# factorisation -------------------------------------------------------------------
def test_factor_out_square():
    psi = factor_out(sample_function(lambda z: z**2, 129), (0, 0), 2)
    assert np.max(np.abs(psi.values - 1)) <= 1e-12


def test_factor_out_recovers_smooth_factor():
    h = 2 / 128
    psi = factor_out(sample_function(lambda z: z**2 * (1 + z / 2), 129), (0, 0), 2)
    X, Y = np.meshgrid(psi.x, psi.y, indexing="ij")
    want = 1 + (X + 1j * Y) / 2
    far = np.hypot(X, Y) >= h
    assert np.max(np.abs(psi.values[far] - want[far])) <= 1e-12
    # cells next to the zero are neighbour averages
    assert np.max(np.abs(psi.values - want)) <= 2 * h


def test_factor_out_detects_wrong_order():
    with pytest.raises(UmbilicError):
        factor_out(sample_function(lambda z: z**2, 129), (0, 0), 1)
    with pytest.raises(UmbilicError):
        factor_out(sample_function(lambda z: z, 129), (0, 0), 2)
    with pytest.raises(ValueError):
        factor_out(sample_function(lambda z: z, 129), (0, 0), 0)


# transversality ------------------------------------------------------------------
def test_transversality_examples():
    along = np.stack([np.zeros(9), np.linspace(-0.8, 0.8, 9)], 1)
    line = sample_function(lambda z: z.real * (1 + 1j), 64)
    assert transversality_check(line, along).all()
    zero = sample_function(lambda z: 0 * z, 64)
    assert not transversality_check(zero, along).any()
    shifted = sample_function(lambda z: np.conj(z) + 0.01, 64)
    assert transversality_check(shifted, [[-0.01, 0.0]]).all()
    with pytest.raises(UmbilicError):
        transversality_check(line, [[3.0, 0.0]])


# classification ------------------------------------------------------------------
def expected_kinds(case):
    return sorted(["isolated"] * len(case.points) + ["curve"] * case.curves)


@pytest.mark.parametrize("name", sorted(SUITE))
@pytest.mark.parametrize("n", [128, 256])
def test_suite_classification(name, n):
    case = SUITE[name]
    rep = classify(synthetic_field(name, n))
    assert sorted(c.kind for c in rep.components) == expected_kinds(case)
    assert not rep.of_kind("unresolved")
    got = sorted((c.point[0], c.point[1], c.order, c.winding) for c in rep.of_kind("isolated"))
    h = 2 / (n - 1)
    for (x, y, m, w), (gx, gy, gm, gw) in zip(sorted(case.points), got):
        assert abs(gx - x) <= h and abs(gy - y) <= h
        assert (gm, gw) == (m, w)
    for c in rep.of_kind("curve"):
        assert np.max(np.abs(c.vertices[:, 0])) <= 1e-6
        assert c.diagnostics["transversal_fraction"] == 1.0
        assert np.ptp(c.vertices[:, 1]) >= 1.5


def test_sign_change_candidates_catch_zeros_between_nodes():
    rep = classify(synthetic_field("z1", 64))
    assert [c.kind for c in rep.components] == ["isolated"]


def test_closed_curve():
    rep = classify(sample_function(lambda z: (np.abs(z) ** 2 - 0.25) * (1 + 1j), 128))
    (c,) = rep.components
    assert c.kind == "curve" and c.closed
    r = np.hypot(c.vertices[:, 0], c.vertices[:, 1])
    # bilinear interpolation of a curved zero set is accurate to O(h^2)
    assert np.max(np.abs(r - 0.5)) <= (2 / 127) ** 2


def test_unresolved_components_are_kept():
    # |z|^2 has a degenerate zero: not a curve, winding 0
    rep = classify(sample_function(lambda z: np.abs(z) ** 2 + 0j, 128))
    assert [c.kind for c in rep.components] == ["unresolved"]
    assert rep.components[0].reason


def test_zero_on_the_edge_is_truncated():
    rep = classify(sample_function(lambda z: z - 1.0, 128))
    assert len(rep.components) == 1 and rep.components[0].truncated


def test_bundles():
    assert classify_bundle(bundle("catenoid", 128)).components == []
    rep = classify_bundle(bundle("sphere_stereo", 128))
    assert rep.totally_umbilic and rep.flagged_fraction > 0.99
    assert not classify_bundle(bundle("enneper", 128)).totally_umbilic


def test_report_serialises_and_is_deterministic():
    a = classify(synthetic_field("z2_times_shift", 128)).to_dict()
    b = classify(synthetic_field("z2_times_shift", 128)).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    boxes = [c["bbox"] for c in a["components"]]
    assert boxes == sorted(boxes)
    assert a["eps_rel"] == 0.02


def test_flagged_fraction_shrinks_with_eps():
    phi = synthetic_field("curved_line", 128)
    fr = [classify(phi, ClassifyConfig(eps_rel=e)).flagged_fraction for e in (0.08, 0.04, 0.02)]
    assert fr[0] > fr[1] > fr[2] > 0


def test_config_validation():
    with pytest.raises(ValueError):
        ClassifyConfig(eps_rel=0)
    with pytest.raises(ValueError):
        ClassifyConfig(shrink_factor=1)
    with pytest.raises(KeyError):
        synthetic_field("nope", 64)
