import math

import numpy as np
import pytest

from pelastica import curvekit as ck, geom, liyau as ly, pelliptic as pe

P_DAGGER = pe.pm_star(3)


def circle(r=1.0, ds=1e-3):
    n = int(round(2 * math.pi * r / ds))
    t = np.linspace(0, 2 * math.pi, n + 1)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    pts[-1] = pts[0]
    return ck.SampledCurve(pts, step=2 * math.pi * r / n, closed=True)


# --- bound ----------------------------------------------------------------


def test_bound_values():
    assert ly.liyau_bound(2.0, 2) == pytest.approx(112.439, abs=0.05)
    for p in (1.3, 2.0, 4.0):
        assert ly.liyau_bound(p, 1) == pe.varpi_star(p)
    # m^p with p = 2 and m = 3 is 9
    assert ly.liyau_bound(2.0, 3) == pytest.approx(9 * 28.109, abs=0.1)
    with pytest.raises(pe.DomainError):
        ly.liyau_bound(2.0, 0)


# --- check ----------------------------------------------------------------


def test_clover_attains_equality():
    c = ck.m_leafed_curve(ck.LeafedSpec(ck.omega_tuple_spatial(3, 2.0)), ds=1e-3)
    r = ly.check_liyau(c, 2.0)
    assert r.m == 3 and r.satisfied and r.leaf_certified
    assert abs(r.gap) <= 1e-3 * r.bound


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_figure_eight_attains_equality(p):
    r = ly.check_liyau(ck.figure_eight(p, N=2, ds=1e-3), p)
    assert r.m == 2 and r.satisfied and r.leaf_certified
    assert abs(r.gap) <= 1e-3 * r.bound


def test_circle_reports_m1():
    r = ly.check_liyau(circle(ds=1e-2), 2.0)
    assert r.m == 1 and r.satisfied and "multiplicity" in r.notes


def test_check_needs_closed_curve():
    with pytest.raises(pe.DomainError):
        ly.check_liyau(ck.leaf(2.0, ds=1e-2), 2.0)


def test_perturbations_raise_energy():
    rng = np.random.default_rng(7)
    base = ck.m_leafed_curve(ck.LeafedSpec(ck.omega_tuple_spatial(3, 2.0)), ds=2e-3)
    for _ in range(20):
        c = ly.perturbed_leafed_curve(rng, base, 0.02)
        r = ly.check_liyau(c, 2.0)
        assert r.m == 3 and r.satisfied and r.gap > 0


# --- existence ------------------------------------------------------------


def test_existence_examples():
    assert not ly.leafed_exists(2.0, 3, 2).exists
    assert ly.leafed_exists(2.0, 3, 3).exists
    assert ly.leafed_exists(2.0, 3, 3).witness == "latitude-tuple"
    assert not ly.leafed_exists(1.2, 3, 9).exists
    assert ly.leafed_exists(P_DAGGER, 3, 2).witness == "planar-tuple"
    assert ly.leafed_exists(1.1, 4, 2).witness == "covered-figure-eight"


def test_existence_dimension_monotone():
    for p in (1.2, 1.5, P_DAGGER, 2.0, 5.0):
        for m in range(2, 10):
            flags = [ly.leafed_exists(p, m, n).exists for n in (2, 3, 4, 5)]
            assert flags == sorted(flags)


def test_witness_errors_and_curve():
    with pytest.raises(ck.NoPlanarTupleError, match="R\\^3 but not in R\\^2"):
        ly.leafed_witness(2.0, 3, 2)
    with pytest.raises(ck.NonexistenceError):
        ly.leafed_witness(1.2, 3, 3)
    c = ly.leafed_witness(2.0, 3, 4, ds=2e-3)
    assert c.dim == 4 and geom.affine_dimension(c) == 3


# --- thresholds -----------------------------------------------------------


def test_embeddedness_threshold():
    assert ly.embeddedness_threshold(2.0) == pytest.approx(112.439, abs=0.05)


@pytest.mark.parametrize("p", [1.2, 1.5, 2.0, 3.0, 5.0])
def test_circle_certified_embedded(p):
    assert math.pi**p < pe.varpi_star(p)
    c = circle(ds=1e-3)
    assert geom.bending_energy(c, p).normalized < ly.embeddedness_threshold(p)
    assert ly.certify_embedded(c, p)


def test_figure_eight_not_certified():
    p = 2.0
    c = ck.figure_eight(p, N=2, ds=1e-3)
    assert geom.bending_energy(c, p).normalized >= ly.embeddedness_threshold(p) * (1 - 1e-3)
    assert not ly.certify_embedded(c, p)


def test_penalized_threshold():
    assert ly.penalized_threshold(2.0, 1.0) == pytest.approx(4 * math.sqrt(28.109), abs=0.01)
    assert ly.penalized_threshold(3.0, 1e-12) < 1e-6
    with pytest.raises(pe.DomainError):
        ly.penalized_threshold(2.0, 0.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_penalized_threshold_young_chain(p):
    # B + lam L <= threshold forces Bbar <= 2^p varpi; sweep B, L on the boundary
    lam = 0.7
    T = ly.penalized_threshold(p, lam)
    for L in np.linspace(0.01, T / lam, 200)[:-1]:
        B = T - lam * L
        assert L ** (p - 1) * B <= ly.embeddedness_threshold(p) * (1 + 1e-12)


# --- decomposition --------------------------------------------------------


def test_decomposition_five_leaves():
    p = pe.pm_star(5)
    c = ck.m_leafed_curve(ck.LeafedSpec(ck.omega_tuple_planar(5, p)), ds=1e-3)
    dec = ly.leaf_decomposition(c, p, c.start)
    assert len(dec.leaves) == 5 and dec.certified
    assert np.allclose(dec.lengths, dec.lengths.mean(), rtol=1e-3)


def test_decomposition_unequal_lobes():
    p = 2.0
    spec = ck.LeafedSpec(ck.omega_tuple_planar(2, p), leaf_length=[3.0, 5.0])
    c = ck.m_leafed_curve(spec, ds=1e-3)
    dec = ly.leaf_decomposition(c, p, c.start)
    assert not dec.certified
    assert dec.jensen_gap > 0
    # harmonic-arithmetic mean oracle for the partition bound
    l = np.array([3.0, 5.0])
    hm = pe.varpi_star(p) * l.sum() ** (p - 1) * np.sum(l ** (1 - p))
    assert dec.partition_bound == pytest.approx(hm, rel=1e-3)
    assert geom.bending_energy(c, p).normalized >= dec.partition_bound * (1 - 1e-3)


def test_decomposition_clover_plus_figure_eight():
    p = P_DAGGER
    tup = ck.omega_tuple_planar(5, p)
    c = ck.m_leafed_curve(ck.LeafedSpec(tup), ds=1e-3)
    dec = ly.leaf_decomposition(c, p, c.start)
    assert dec.certified
    # the tangent tuple is not a rotation orbit
    angles = np.sort(np.mod(np.arctan2(tup.vectors[:, 1], tup.vectors[:, 0]), 2 * np.pi))
    assert np.ptp(np.diff(angles)) > 1e-3


def test_decomposition_needs_multiplicity():
    with pytest.raises(pe.DomainError):
        ly.leaf_decomposition(circle(ds=1e-2), 2.0, [1.0, 0.0])


# --- random suite ---------------------------------------------------------


def test_random_suite_small():
    rng = np.random.default_rng(11)
    for i in range(12):
        m = 2 + i % 3
        dim = 2 + i % 3
        p = float(rng.uniform(1.2, 4.0))
        c = ly.random_leafed_curve(rng, m, p, dim)
        r = ly.check_liyau(c, p, tol=1e-6, absolute=True)
        assert r.m >= m
        assert r.satisfied
