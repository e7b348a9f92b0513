"""The pinned problem: fixed endpoints and length, free end slopes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import curvekit as ck, pelliptic as pe


class InfeasibleError(pe.DomainError):
    """No curve of the given length joins the endpoints with a free arc."""


@dataclass(frozen=True)
class PinnedProblem:
    p: float
    P0: np.ndarray
    P1: np.ndarray
    L: float

    def __post_init__(self):
        pe._check_p(self.p)
        P0 = np.asarray(self.P0, dtype=float)
        P1 = np.asarray(self.P1, dtype=float)
        if P0.shape != P1.shape or P0.ndim != 1 or P0.size < 2:
            raise pe.DomainError("endpoints must be n-vectors with n >= 2")
        object.__setattr__(self, "P0", P0)
        object.__setattr__(self, "P1", P1)
        d = float(np.linalg.norm(P1 - P0))
        if d == 0.0:
            raise InfeasibleError("endpoints must differ")
        if not d < self.L:
            raise InfeasibleError(f"|P0 - P1| = {d} must be below the length {self.L}")

    @property
    def dim(self) -> int:
        return self.P0.size

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.P1 - self.P0))

    @property
    def ratio(self) -> float:
        return self.distance / self.L


def chord_ratio(p: float, q: float) -> float:
    """Chord over length of one wavelike arch: ``2 E/K - 1``."""
    if not 0.0 < q < 1.0:
        raise pe.DomainError("q must lie in (0, 1)")
    pair = pe.complete_pair(p, q)
    return 2.0 * pair.E / pair.K - 1.0


def solve_modulus_for_ratio(p: float, r: float) -> float:
    """The modulus ``q in (0, q*)`` whose arch has chord ratio ``r``."""
    if not 0.0 < r < 1.0:
        raise pe.DomainError("ratio must lie in (0, 1)")
    qs = pe.q_star(p)
    f = lambda q: (1.0 - r) if q == 0.0 else chord_ratio(p, q) - r
    return brentq(f, 0.0, qs, xtol=1e-15, rtol=1e-15, maxiter=300)


def _plane_basis(u: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to ``u`` from the lowest non-parallel axis."""
    for i in range(u.size):
        e = np.eye(u.size)[i]
        v = e - np.dot(e, u) * u
        if np.linalg.norm(v) > 1e-8:
            return v / np.linalg.norm(v)
    raise pe.DomainError("no orthogonal direction")


def pinned_minimizer(problem: PinnedProblem, ds: float | None = None, steps: int | None = None) -> ck.SampledCurve:
    """Wavelike arch ``[-K, K]`` at the modulus matching the chord ratio."""
    p = problem.p
    q = solve_modulus_for_ratio(p, problem.ratio)
    K = pe.complete_K(p, q)
    scale = problem.L / (2.0 * K)
    n = ck._steps_for(problem.L, ds, steps)
    t = np.linspace(-K, K, n + 1)
    xy = ck.wavelike_xy(p, q, t)
    xy = xy - xy[0]
    # exact chord makes the end land on P1 up to rounding
    xy[:, 0] *= (problem.distance / scale) / xy[-1, 0]
    u = (problem.P1 - problem.P0) / problem.distance
    e = _plane_basis(u)
    pts = problem.P0 + scale * (np.outer(xy[:, 0], u) + np.outer(xy[:, 1], e))
    pts[-1] = problem.P1
    L = problem.L

    def model(s):
        # the arch is symmetric; measuring from the nearer end keeps k(0) = k(L) = 0 exact
        s = np.asarray(s, dtype=float)
        t = np.minimum(s, L - s) / scale
        return np.abs(ck.wavelike_curvature(p, q, t - K)) / scale

    return ck.SampledCurve(
        pts,
        step=problem.L / n,
        meta={"family": "pinned-arch", "p": p, "q": q, "scale": scale,
              "lambda": pe.wavelike_lambda(p, q) / scale**p},
        curvature_model=model,
    )


def flat_core_pinned_feasible(problem: PinnedProblem) -> bool:
    """True iff non-planar flat-core competitors exist: p > 2 and ``|P0-P1| >= L/(p-1)``."""
    return problem.p > 2.0 and problem.distance >= problem.L / (problem.p - 1.0)


def flat_core_candidate(problem: PinnedProblem, ds: float | None = None, steps: int | None = None) -> ck.SampledCurve:
    """A flat-core pinned competitor: one loop followed by a straight segment.

    The loop displaces by ``2K_p(1)/(p-1)`` along its axis, so the chord ratio
    of ``loop + line(l)`` is ``(1/(p-1) + t)/(1 + t)`` with ``t = l/(2K_p(1))``.
    """
    if not flat_core_pinned_feasible(problem):
        raise InfeasibleError("flat-core competitors need p > 2 and |P0 - P1| >= L/(p-1)")
    p, r = problem.p, problem.ratio
    K = pe.K_p1(p)
    t = (r - 1.0 / (p - 1.0)) / (1.0 - r)
    dim = max(problem.dim, 2)
    spec = ck.FlatCoreSpec(p, [np.eye(dim)[1]], [0.0, 2.0 * K * t])
    scale = problem.L / spec.full_length
    spec = ck.FlatCoreSpec(p, [np.eye(dim)[1]], [0.0, 2.0 * K * t], scale=scale)
    c = ck.flat_core_curve(spec, ds=ds, steps=steps)
    # rotate so the chord runs from P0 to P1
    chord = c.points[-1] - c.points[0]
    a = chord / np.linalg.norm(chord)
    u = (problem.P1 - problem.P0) / problem.distance
    R = _rotation_between(a, u)
    pts = (c.points - c.points[0]) @ R.T + problem.P0
    return ck.SampledCurve(pts, step=c.step, meta=c.meta, curvature_model=c.curvature_model)


def _rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Householder reflection sending unit ``a`` to unit ``b``."""
    v = a - b
    if np.linalg.norm(v) < 1e-14:
        return np.eye(a.size)
    return np.eye(a.size) - 2.0 * np.outer(v, v) / np.dot(v, v)
