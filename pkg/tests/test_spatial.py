import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from pelastica import curvekit as ck, elverify as ev, geom, pelliptic as pe, spatial as sp


def hausdorff(a, b):
    return max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max())


# --- parameters -----------------------------------------------------------


def test_param_constants():
    P = sp.ParamSet(3.0, pe.flat_core_lambda(3.0))
    assert P.A_pl == pytest.approx(1.0, rel=1e-14)
    assert P.T_pl == pytest.approx(pe.K_p1(3.0))
    assert P.M_p == 2
    assert sp.ParamSet(2.0, 1.0).T_pl == math.inf and sp.ParamSet(2.0, 1.0).M_p is None
    assert sp.ParamSet(2.5, 1.0).M_p == 4


# --- curvature ODE --------------------------------------------------------


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_helix_equilibrium_is_constant(p):
    P, w0 = sp.helix_params(p, 1.2, 0.8)
    assert P.rhs(w0) == pytest.approx(0.0, abs=1e-12)
    prof = sp.integrate_curvature_ode(P, w0, 0.0, 2.0, step=1e-3)
    assert np.max(np.abs(prof.k - 1.2)) < 1e-6
    assert np.max(np.abs(prof.tau - 0.8)) < 1e-6


@pytest.mark.parametrize("p", [3.0, 5.0])
def test_flat_core_profile(p):
    lam = pe.flat_core_lambda(p)
    K = pe.K_p1(p)
    prof = sp.integrate_curvature_ode(sp.ParamSet(p, lam), 2 ** (p - 1), 0.0, K, step=1e-4)
    exact = (2 * pe.sech_p(p, prof.s)) ** (p - 1)
    assert np.max(np.abs(prof.w - exact)) < 1e-6


def test_generic_orbit_turning_points():
    p, lam, C, w0 = 3.0, 2.0, 0.5, 1.0
    P = sp.ParamSet(p, lam, C)
    prof = sp.integrate_curvature_ode(P, w0, 0.0, 8.0, step=1e-3)

    # independent oracle: the level set G(w) = G(w0) of the first integral with w' = 0
    def G(w):
        return (2 / 3) ** 2 * w**3 - 2 * lam * 2 / 9 * w**1.5 + C * C / w**2

    A = G(w0)
    # G is convex in w here; w0 is one root, find the other on the far side of the minimum
    grid = np.linspace(0.05, 3.0, 3000)
    wmin = grid[np.argmin(G(grid))]
    lo, hi = (0.05, wmin) if w0 > wmin else (wmin, 3.0)
    other = brentq(lambda w: G(w) - A, lo, hi, xtol=1e-14)
    assert np.min(prof.w) > 0
    assert prof.w.max() == pytest.approx(max(w0, other), abs=1e-6)
    assert prof.w.min() == pytest.approx(min(w0, other), abs=1e-6)
    # periodic: w' changes sign repeatedly
    assert np.sum(np.diff(np.sign(prof.wp[1:])) != 0) >= 2


def test_drift_small_and_converges():
    P = sp.ParamSet(3.0, 2.0, 0.5)
    drifts = [sp.integrate_curvature_ode(P, 1.0, 0.0, 10.0, step=h).drift_per_length for h in (0.01, 0.005, 0.0025)]
    assert drifts[-1] <= 1e-8
    assert drifts[0] >= 4 * drifts[1] and drifts[1] >= 4 * drifts[2]


def test_blow_up_and_domain_errors():
    with pytest.raises(ev.BlowUpError):
        sp.integrate_curvature_ode(sp.ParamSet(3.0, 2.0, 1e-2), 0.5, -3.0, 3.0, step=0.3)
    with pytest.raises(pe.DomainError):
        sp.integrate_curvature_ode(sp.ParamSet(3.0, 2.0, 0.5), 0.0, 0.0, 1.0)
    with pytest.raises(pe.DomainError):
        sp.spatial_elastica(sp.ParamSet(3.0, 2.0, 0.0), 1.0, 0.0, 1.0)


def test_p2_matches_classical_polynomial_ode():
    lam, C, w0, w0p = 1.5, 0.4, 1.1, 0.2
    P = sp.ParamSet(2.0, lam, C)
    prof = sp.integrate_curvature_ode(P, w0, w0p, 6.0, step=1e-3)
    A = prof.A[0]
    # u = k^2 solves u'' = (4A + 4 lam u - 3u^2)/2
    sol = solve_ivp(
        lambda s, y: [y[1], (4 * A + 4 * lam * y[0] - 3 * y[0] ** 2) / 2],
        (0, 6.0),
        [w0**2, 2 * w0 * w0p],
        method="DOP853",
        t_eval=prof.s,
        rtol=1e-12,
        atol=1e-12,
    )
    assert np.max(np.abs(np.sqrt(sol.y[0]) - prof.k)) < 1e-7


# --- Frenet reconstruction ------------------------------------------------


def test_frenet_circle():
    s = np.linspace(0, 2 * math.pi, 6001)
    c = sp.frenet_reconstruct(s, np.ones_like(s), np.zeros_like(s))
    assert np.linalg.norm(c.end - c.start) < 1e-9
    assert np.allclose(np.linalg.norm(c.points - [0, 1, 0], axis=1), 1.0, atol=1e-9)
    assert geom.affine_dimension(c) == 2


def test_frenet_helix():
    s = np.linspace(0, 8, 8001)
    c = sp.frenet_reconstruct(s, np.ones_like(s), np.ones_like(s))
    assert c.speed_defect() < 1e-6
    assert geom.affine_dimension(c) == 3
    _, k, tau = geom.curvature_profile(c, with_torsion=True)
    assert np.max(np.abs(k - 1)[3:-3]) < 1e-4
    assert np.max(np.abs(tau - 1)[3:-3]) < 1e-3
    # axis along T + B, radius 1/2
    axis = np.array([1.0, 0.0, 1.0]) / math.sqrt(2)
    center = np.array([0.0, 0.5, 0.0])
    rel = c.points - center
    radial = rel - np.outer(rel @ axis, axis)
    assert np.allclose(np.linalg.norm(radial, axis=1), 0.5, atol=1e-8)


@pytest.mark.parametrize("p", [3.0, 5.0])
def test_frenet_flat_core_round_trip(p):
    loop = ck.flat_core_loop(p, ds=1e-3)
    k = loop.curvature_model(loop.s)
    c = sp.frenet_reconstruct(loop.s, k, np.zeros_like(k), sp.FrenetState(T=np.array([-1.0, 0, 0]), N=np.array([0, -1.0, 0])))
    target = np.hstack([loop.points - loop.start, np.zeros((loop.count, 1))])
    # rigid alignment by the Kabsch method
    X, Y = c.points - c.points.mean(0), target - target.mean(0)
    U, _, Vt = np.linalg.svd(X.T @ Y)
    D = np.diag([1, 1, np.sign(np.linalg.det(U @ Vt))])
    aligned = X @ (U @ D @ Vt)
    assert hausdorff(aligned, Y) < 1e-5


def test_frenet_state_validation():
    with pytest.raises(ValueError):
        sp.FrenetState(T=np.array([1.0, 1.0, 0]))
    with pytest.raises(ValueError):
        sp.frenet_reconstruct([0, 1, 3], [1, 1, 1], [0, 0, 0])


# --- spatial elasticae ----------------------------------------------------


def test_helix_passes_all_checks():
    P, w0 = sp.helix_params(3.0, 1.0, 0.6)
    curve, rep, _ = sp.spatial_elastica(P, w0, 0.0, 6.0, step=1e-3)
    assert rep.passed and rep.affine_dim == 3


@pytest.mark.parametrize("p,lam,C,w0", [(3.0, 2.0, 0.5, 1.0), (2.0, 1.5, 0.4, 1.1), (1.5, 1.0, 0.3, 0.9)])
def test_generic_spatial_elastica(p, lam, C, w0):
    curve, rep, prof = sp.spatial_elastica(sp.ParamSet(p, lam, C), w0, 0.0, 4.0, step=1e-3)
    assert rep.passed, rep.residual.weak_max
    assert rep.drift_per_length <= 1e-8
    assert rep.min_k > 0 and rep.min_abs_tau > 0
    assert curve.speed_defect() < 1e-6
    s, k, tau = prof.s, prof.k, prof.tau
    assert ev.strong_residual_k_tau(s, k, tau, p, lam, C) < 1e-4
