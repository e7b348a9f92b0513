import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pelastica import curvekit as ck, geom, pelliptic as pe


def circle(r=1.0, ds=1e-3, dim=2, center=None):
    n = int(round(2 * math.pi * r / ds))
    t = np.linspace(0, 2 * math.pi, n + 1)
    pts = np.zeros((n + 1, dim))
    pts[:, 0], pts[:, 1] = r * np.cos(t), r * np.sin(t)
    pts[-1] = pts[0]
    if center is not None:
        pts += center
    return ck.SampledCurve(pts, step=2 * math.pi * r / n, closed=True)


def helix(a, b, L, ds):
    c = math.hypot(a, b)
    s = np.linspace(0, L, int(round(L / ds)) + 1)
    t = s / c
    pts = np.column_stack([a * np.cos(t), a * np.sin(t), b * t])
    return ck.SampledCurve(pts, step=s[1])


def brute_min_distance(c, min_gap):
    """Smallest distance between samples at least ``min_gap`` apart, by brute force."""
    P = c.points[:-1] if c.closed else c.points
    n = len(P)
    d = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    i, j = np.indices((n, n))
    gap = np.abs(i - j)
    if c.closed:
        gap = np.minimum(gap, n - gap)
    d[gap < min_gap] = np.inf
    k = np.argmin(d)
    return d.flat[k], divmod(k, n)


# --- length ---------------------------------------------------------------


def test_length_examples():
    assert geom.length(circle(ds=1e-4)) == pytest.approx(2 * math.pi, abs=1e-3)
    assert geom.length(ck.line_segment(3.0, ds=1e-2)) == pytest.approx(3.0)
    a = ck.wavelike_arc(2.0, 0.5, (0, 1), steps=200)
    b = ck.wavelike_arc(2.0, 0.5, (1, 2), steps=200)
    assert geom.length(ck.concat(a, b)) == pytest.approx(geom.length(a) + geom.length(b), rel=1e-9)
    c = ck.leaf(2.0, steps=5000)
    assert geom.length(c) == pytest.approx((c.count - 1) * c.step, rel=1e-6)


# --- curvature ------------------------------------------------------------


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_circle_curvature_second_order(r):
    errs = []
    for ds in (4e-3, 2e-3):
        _, k = geom.curvature_profile(circle(r, ds))
        assert np.all(k >= 0)
        errs.append(np.max(np.abs(k - 1 / r)))
    assert errs[0] < 1e-5 / r**2
    assert errs[1] < errs[0] / 3


@pytest.mark.parametrize("p", [2.5, 3.0, 5.0])
def test_flat_core_loop_curvature(p):
    c = ck.flat_core_loop(p, ds=1e-3)
    s, k = geom.curvature_profile(c)
    exact = 2 * pe.sech_p(p, s - pe.K_p1(p))
    # the profile is only C^1 at the ends when p > 2; compare away from them
    inner = (s > 0.05 * c.length) & (s < 0.95 * c.length)
    assert np.max(np.abs(k - exact)[inner]) < 1e-4


def test_helix_curvature_and_torsion():
    c = helix(0.5, 0.5, 6.0, 1e-3)
    s, k, tau = geom.curvature_profile(c, with_torsion=True)
    assert np.max(np.abs(k - 1.0)[3:-3]) < 1e-5
    assert np.max(np.abs(tau - 1.0)[3:-3]) < 1e-3


def test_torsion_undefined_on_flat_pieces():
    _, k, tau = geom.curvature_profile(ck.line_segment(1.0, dim=3, ds=1e-2), with_torsion=True)
    assert np.all(np.isnan(tau))


# --- energy ---------------------------------------------------------------


def test_circle_energy():
    e = geom.bending_energy(circle(ds=1e-3), 2.0)
    assert e.bending == pytest.approx(2 * math.pi, rel=1e-6)
    assert e.normalized == pytest.approx((2 * math.pi) ** 2, rel=1e-6)
    assert e.length == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("p", [1.2, 2.0, 3.7])
@pytest.mark.parametrize("r", [0.4, 2.0])
def test_circle_energy_radius(p, r):
    assert geom.bending_energy(circle(r, 1e-3), p).bending == pytest.approx(2 * math.pi * r ** (1 - p), rel=1e-5)


def test_leaf_energy_value():
    assert geom.bending_energy(ck.leaf(2.0, ds=1e-4), 2.0).normalized == pytest.approx(28.109, abs=0.03)


def test_energy_quadrature_converges_second_order():
    p = 2.0
    exact = pe.varpi_star(p)
    errs = [abs(geom.bending_energy(ck.leaf(p, ds=ds), p).normalized - exact) for ds in (4e-3, 2e-3, 1e-3)]
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(0.05, 20.0), p=st.floats(1.1, 6.0))
def test_normalized_energy_scale_invariant(scale, p):
    c = circle(1.0, 1e-2)
    e0 = geom.bending_energy(c, p)
    e1 = geom.bending_energy(ck.similarity_transform(c, scale), p)
    assert e1.normalized == pytest.approx(e0.normalized, rel=1e-10)
    assert e1.bending == pytest.approx(scale ** (1 - p) * e0.bending, rel=1e-10)


# --- multiplicity and embeddedness ----------------------------------------


def test_multiplicity_examples():
    assert geom.multiplicity(circle(), [0.0, 0.0]) == 0
    assert geom.multiplicity(circle(), [1.0, 0.0]) == 1
    f8 = ck.figure_eight(2.0, N=2, ds=1e-3)
    crossing = ck.wavelike_xy(2.0, pe.q_star(2.0), np.array([pe.complete_K(2.0, pe.q_star(2.0))]))[0]
    assert geom.multiplicity(f8, crossing) == 2
    clover = ck.m_leafed_curve(ck.LeafedSpec(ck.omega_tuple_spatial(3, 2.0)), ds=1e-3)
    assert geom.multiplicity(clover, clover.start) == 3


def test_multiplicity_stable_under_tol_halving():
    clover = ck.m_leafed_curve(ck.LeafedSpec(ck.omega_tuple_spatial(3, 2.0)), ds=1e-3)
    tol = 1.5 * clover.step
    assert geom.multiplicity(clover, clover.start, tol) == geom.multiplicity(clover, clover.start, tol / 2)


def test_max_multiplicity():
    m, where = geom.max_multiplicity(circle(ds=1e-2))
    assert m == 1 and where is None
    clover = ck.m_leafed_curve(ck.LeafedSpec(ck.omega_tuple_spatial(3, 2.0)), ds=1e-3)
    m, where = geom.max_multiplicity(clover)
    assert m == 3 and np.linalg.norm(where - clover.start) < 2 * clover.step


def test_circle_is_embedded():
    assert geom.is_embedded(circle(ds=1e-3)) == (True, None)


def test_figure_eight_not_embedded_near_crossing():
    c = ck.figure_eight(2.0, N=2, ds=1e-3)
    ok, (si, sj) = geom.is_embedded(c)
    assert not ok
    K = pe.complete_K(2.0, pe.q_star(2.0))
    assert min(abs(si - K), abs(si - 3 * K)) < 0.01
    assert min(abs(sj - K), abs(sj - 3 * K)) < 0.01


def test_flat_core_two_loops_against_brute_force():
    p = 3.0
    spec = ck.FlatCoreSpec(p, [[0, 1, 0], [0, 0, 1]], [0.3, 0.6, 0.3])
    c = ck.flat_core_curve(spec, ds=5e-3)
    ok, witness = geom.is_embedded(c)
    dmin, _ = brute_min_distance(c, min_gap=int(0.5 / c.step))
    # each loop crosses itself in its own plane, so the curve is not embedded
    assert dmin < 1.5 * c.step
    assert not ok
    # the witness lies inside one of the loops and is symmetric about its centre
    K = pe.K_p1(p)
    centers = spec.loop_centers()
    si, sj = witness
    ci = min(centers, key=lambda x: abs(x - 0.5 * (si + sj)))
    assert abs(0.5 * (si + sj) - ci) < 0.02
    assert abs(si - ci) < K


def test_is_embedded_agrees_with_brute_force():
    c = ck.wavelike_arc(2.0, 0.9, (0.0, 7.0), ds=5e-3)
    ok, _ = geom.is_embedded(c)
    dmin, _ = brute_min_distance(c, min_gap=int(0.5 / c.step))
    assert ok == (dmin > 1.5 * c.step)


# --- affine dimension -----------------------------------------------------


def test_affine_dimension_examples():
    assert geom.affine_dimension(circle(dim=3)) == 2
    assert geom.affine_dimension(ck.line_segment(1.0, dim=4, ds=0.01)) == 1
    assert geom.affine_dimension(helix(0.5, 0.5, 6.0, 1e-2)) == 3
    e = np.eye(4)
    spec = ck.FlatCoreSpec(3.0, [e[1], e[2], e[3]], [0.0, 0.4, 0.4, 0.0])
    assert geom.affine_dimension(ck.flat_core_curve(spec, ds=1e-3)) == 4


def test_affine_dimension_aligned_is_smaller():
    spec = ck.FlatCoreSpec(3.0, [[0, 1, 0], [0, 0, 1]], [0.2, 0.5, 0.2])
    c = ck.flat_core_curve(spec, ds=1e-3)
    ca = ck.flat_core_curve(ck.aligned_representative(spec), ds=1e-3)
    assert geom.affine_dimension(ca) < geom.affine_dimension(c)
