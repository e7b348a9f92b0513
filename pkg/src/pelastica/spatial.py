"""Spatial p-elasticae from the curvature ODE and the Frenet system.

With ``w = k^(p-1)`` and torsion constant ``C = k^(2p-2) tau`` the curvature
equation reads

    w'' = lam/p w^(1/(p-1)) - (p-1)/p w^((p+1)/(p-1)) + C^2 w^(-3).

It is integrated as a first-order system in ``(w, w')`` with fixed-step RK4;
turning points of ``w`` are then ordinary points, and the first integral is
monitored rather than enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import elverify, pelliptic as pe
from .curvekit import SampledCurve
from .geom import affine_dimension

DEFAULT_STEP = 1e-4


@dataclass(frozen=True)
class ParamSet:
    p: float
    lam: float
    C: float = 0.0

    def __post_init__(self):
        pe._check_p(self.p)

    @property
    def A_pl(self) -> float:
        """``(1/2) (2 lam / (p-1))^(1/p)``; the flat-core scale factor."""
        return 0.5 * (2.0 * self.lam / (self.p - 1.0)) ** (1.0 / self.p)

    @property
    def T_pl(self) -> float:
        """Loop length ``K_p(1) / A_pl``, finite only for p > 2."""
        if self.p <= 2.0:
            return math.inf
        return pe.K_p1(self.p) / self.A_pl

    @property
    def M_p(self) -> int | None:
        """Regularity index ``ceil(2/(p-2))`` for p > 2."""
        if self.p <= 2.0:
            return None
        return int(math.ceil(2.0 / (self.p - 2.0)))

    def first_integral(self, w, wp):
        return elverify.first_integral(w, wp, self.p, self.lam, self.C)

    def rhs(self, w):
        """``w''`` as a function of ``w`` (odd extension to ``w < 0`` when C = 0)."""
        p = self.p
        sw, aw = np.sign(w), np.abs(w)
        out = sw * (self.lam / p * aw ** (1.0 / (p - 1.0)) - (p - 1.0) / p * aw ** ((p + 1.0) / (p - 1.0)))
        if self.C != 0.0:
            out = out + self.C**2 / w**3
        return out


def helix_params(p: float, k: float, tau: float) -> tuple[ParamSet, float]:
    """Parameters and ``w0`` whose equilibrium is the helix with constant k, tau."""
    lam = (p - 1.0) * k**p - p * k ** (p - 2.0) * tau**2
    return ParamSet(p=p, lam=lam, C=k ** (2.0 * p - 2.0) * tau), k ** (p - 1.0)


@dataclass(frozen=True)
class Profiles:
    s: np.ndarray
    w: np.ndarray
    wp: np.ndarray
    k: np.ndarray
    tau: np.ndarray
    A: np.ndarray
    params: ParamSet

    @property
    def drift(self) -> float:
        return float(self.A.max() - self.A.min())

    @property
    def drift_per_length(self) -> float:
        L = self.s[-1] - self.s[0]
        return self.drift / max(L, 1.0)


def integrate_curvature_ode(params: ParamSet, w0: float, w0p: float, L: float, step: float = DEFAULT_STEP) -> Profiles:
    """RK4 on ``(w, w')`` over ``[0, L]``; ``k = |w|^(1/(p-1))``, ``tau = C k^(2-2p)``."""
    if params.C != 0.0 and not w0 > 0.0:
        raise pe.DomainError("nonzero torsion needs w0 > 0")
    if not L > 0.0 or not step > 0.0:
        raise pe.DomainError("L and step must be positive")
    n = max(1, int(math.ceil(L / step - 1e-9)))
    h = L / n
    w = np.empty(n + 1)
    v = np.empty(n + 1)
    w[0], v[0] = w0, w0p
    f = params.rhs
    torsion = params.C != 0.0
    for i in range(n):
        a, b = w[i], v[i]
        k1w, k1v = b, f(a)
        k2w, k2v = b + 0.5 * h * k1v, f(a + 0.5 * h * k1w)
        k3w, k3v = b + 0.5 * h * k2v, f(a + 0.5 * h * k2w)
        k4w, k4v = b + h * k3v, f(a + h * k3w)
        w[i + 1] = a + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        v[i + 1] = b + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if torsion and not w[i + 1] > 0.0:
            raise elverify.BlowUpError(f"w reached {w[i + 1]:.3e} at s={(i + 1) * h:.6g} with C != 0")
    s = np.linspace(0.0, L, n + 1)
    k = np.abs(w) ** (1.0 / (params.p - 1.0))
    if torsion:
        tau = params.C * k ** (2.0 - 2.0 * params.p)
    else:
        tau = np.zeros_like(k)
    return Profiles(s=s, w=w, wp=v, k=k, tau=tau, A=params.first_integral(w, v), params=params)


@dataclass(frozen=True)
class FrenetState:
    T: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    N: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    B: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        F = np.array([self.T, self.N, self.B], dtype=float)
        if np.max(np.abs(F @ F.T - np.eye(3))) > 1e-10 or np.linalg.det(F) < 0:
            raise ValueError("Frenet frame must be positively oriented and orthonormal")


def _orthonormalize(T, N):
    T = T / np.linalg.norm(T)
    N = N - np.dot(N, T) * T
    nn = np.linalg.norm(N)
    if not nn > 1e-12:
        raise ValueError("Frenet frame degenerated")
    N = N / nn
    return T, N, np.cross(T, N)


def _midpoints(a: np.ndarray) -> np.ndarray:
    """Fourth-order values halfway between samples."""
    if a.size < 4:
        return 0.5 * (a[:-1] + a[1:])
    ext = np.concatenate([[3 * a[0] - 3 * a[1] + a[2]], a, [3 * a[-1] - 3 * a[-2] + a[-3]]])
    return (9.0 * (ext[1:-2] + ext[2:-1]) - (ext[:-3] + ext[3:])) / 16.0


def frenet_reconstruct(s, k, tau, init: FrenetState | None = None) -> SampledCurve:
    """Integrate ``x' = T, T' = kN, N' = -kT + tau B, B' = -tau N`` with RK4."""
    s, k, tau = (np.asarray(a, dtype=float) for a in (s, k, tau))
    if not (s.shape == k.shape == tau.shape) or s.size < 2:
        raise ValueError("profiles must share one grid")
    h = float(s[1] - s[0])
    if np.max(np.abs(np.diff(s) - h)) > 1e-9 * max(h, 1.0):
        raise ValueError("profiles must be uniformly sampled")
    init = init or FrenetState()
    km, tm = _midpoints(k), _midpoints(tau)

    def deriv(y, kk, tt):
        T, N, B = y[3:6], y[6:9], y[9:12]
        return np.concatenate([T, kk * N, -kk * T + tt * B, -tt * N])

    n = s.size
    pts = np.empty((n, 3))
    y = np.concatenate([init.position, init.T, init.N, init.B]).astype(float)
    pts[0] = y[:3]
    for i in range(n - 1):
        k1 = deriv(y, k[i], tau[i])
        k2 = deriv(y + 0.5 * h * k1, km[i], tm[i])
        k3 = deriv(y + 0.5 * h * k2, km[i], tm[i])
        k4 = deriv(y + h * k3, k[i + 1], tau[i + 1])
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        T, N, B = _orthonormalize(y[3:6], y[6:9])
        y[3:6], y[6:9], y[9:12] = T, N, B
        pts[i + 1] = y[:3]
    return SampledCurve(pts, step=h, meta={"family": "frenet"})


@dataclass(frozen=True)
class SpatialReport:
    residual: elverify.ResidualReport
    drift_per_length: float
    affine_dim: int
    min_k: float
    min_abs_tau: float

    @property
    def passed(self) -> bool:
        return self.residual.passed and self.affine_dim == 3 and self.min_k > 0 and self.min_abs_tau > 0


def spatial_elastica(params: ParamSet, w0: float, w0p: float, L: float, step: float = DEFAULT_STEP, tol: float = elverify.DEFAULT_WEAK_TOL):
    """Spatial curve with nonzero torsion and its weak-residual certificate."""
    if params.C == 0.0:
        raise pe.DomainError("spatial elasticae need a nonzero torsion constant")
    prof = integrate_curvature_ode(params, w0, w0p, L, step)
    curve = frenet_reconstruct(prof.s, prof.k, prof.tau)
    curve = curve.with_meta(family="spatial", p=params.p, **{"lambda": params.lam, "C": params.C})
    res = elverify.weak_el_residual(curve, params.p, lam=params.lam, tol=tol)
    res = elverify.ResidualReport(
        weak=res.weak, lam=res.lam, tol=res.tol, labels=res.labels, first_integral_drift=prof.drift_per_length
    )
    report = SpatialReport(
        residual=res,
        drift_per_length=prof.drift_per_length,
        affine_dim=affine_dimension(curve),
        min_k=float(prof.k.min()),
        min_abs_tau=float(np.abs(prof.tau).min()),
    )
    return curve, report, prof
