"""Discrete geometry of sampled curves: curvature, energy, multiplicity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial import cKDTree

from .curvekit import SampledCurve

TORSION_K_MIN = 1e-6


def length(c: SampledCurve) -> float:
    """Polygonal length."""
    return float(np.sum(np.linalg.norm(np.diff(c.points, axis=0), axis=1)))


def _derivs(c: SampledCurve):
    """First and second derivative samples by second-order differences."""
    x, h = c.points, c.step
    if c.closed:
        y = x[:-1]
        d1 = (np.roll(y, -1, 0) - np.roll(y, 1, 0)) / (2 * h)
        d2 = (np.roll(y, -1, 0) - 2 * y + np.roll(y, 1, 0)) / h**2
        return np.vstack([d1, d1[:1]]), np.vstack([d2, d2[:1]])
    if c.count < 4:
        raise ValueError("need at least 4 samples")
    d1 = np.gradient(x, h, axis=0, edge_order=2)
    d2 = np.empty_like(x)
    d2[1:-1] = (x[2:] - 2 * x[1:-1] + x[:-2]) / h**2
    d2[0] = (2 * x[0] - 5 * x[1] + 4 * x[2] - x[3]) / h**2
    d2[-1] = (2 * x[-1] - 5 * x[-2] + 4 * x[-3] - x[-4]) / h**2
    return d1, d2


def curvature_noise_floor(c: SampledCurve) -> float:
    """Curvature produced by rounding alone in second differences."""
    scale = float(np.max(np.abs(c.points))) + 1.0
    return 64.0 * np.finfo(float).eps * scale / c.step**2


def second_derivative(c: SampledCurve) -> np.ndarray:
    return _derivs(c)[1]


def _third(c: SampledCurve) -> np.ndarray:
    x, h = c.points, c.step
    if c.closed:
        y = x[:-1]
        d3 = (np.roll(y, -2, 0) - 2 * np.roll(y, -1, 0) + 2 * np.roll(y, 1, 0) - np.roll(y, 2, 0)) / (2 * h**3)
        return np.vstack([d3, d3[:1]])
    d2 = _derivs(c)[1]
    return np.gradient(d2, h, axis=0, edge_order=2)


def curvature_profile(c: SampledCurve, with_torsion: bool | None = None):
    """Return ``(s, k)`` or, for space curves, ``(s, k, tau)``.

    ``k = |gamma''|`` from second differences (periodic for closed curves,
    one-sided four-point stencils at open ends).  Torsion uses
    ``det(g', g'', g''') / |g' x g''|^2`` and is NaN where ``k < 1e-6``.
    """
    d1, d2 = _derivs(c)
    k = np.linalg.norm(d2, axis=1)
    s = c.s
    if with_torsion is None:
        with_torsion = c.dim == 3
    if not with_torsion:
        return s, k
    if c.dim != 3:
        raise ValueError("torsion is defined for space curves")
    d3 = _third(c)
    cr = np.cross(d1, d2)
    den = np.einsum("ij,ij->i", cr, cr)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.einsum("ij,ij->i", cr, d3) / den
    tau[k < TORSION_K_MIN] = np.nan
    return s, k, tau


@dataclass(frozen=True)
class EnergyReport:
    p: float
    length: float
    bending: float
    normalized: float


def bending_energy(c: SampledCurve, p: float) -> EnergyReport:
    """``B_p = int k^p ds`` (trapezoid) and ``Bbar_p = L^(p-1) B_p``."""
    _, k = curvature_profile(c, with_torsion=False)
    B = float(trapezoid(k**p, dx=c.step))
    L = c.length
    return EnergyReport(p=p, length=L, bending=B, normalized=L ** (p - 1.0) * B)


def _body(c: SampledCurve) -> np.ndarray:
    return c.points[:-1] if c.closed else c.points


def _index_gap(i, j, n: int, closed: bool):
    d = np.abs(i - j)
    return np.minimum(d, n - d) if closed else d


def _clusters(idx: np.ndarray, n: int, closed: bool, max_gap: int) -> list[np.ndarray]:
    """Split sorted sample indices into runs whose index gaps are <= max_gap."""
    if idx.size == 0:
        return []
    cuts = np.nonzero(np.diff(idx) > max_gap)[0]
    runs = np.split(idx, cuts + 1)
    if closed and len(runs) > 1 and (idx[0] + n - idx[-1]) <= max_gap:
        runs[0] = np.concatenate([runs[-1], runs[0]])
        runs.pop()
    return runs


def multiplicity(c: SampledCurve, P, tol: float | None = None) -> int:
    """Number of separate passes of the curve within ``tol`` of ``P``.

    Samples within ``tol`` are grouped into parameter clusters; clusters are
    separate when their arclength gap exceeds ``10 tol``.
    """
    tol = 1.5 * c.step if tol is None else tol
    body = _body(c)
    d = np.linalg.norm(body - np.asarray(P, dtype=float), axis=1)
    idx = np.nonzero(d <= tol)[0]
    gap = max(1, int(math.floor(10.0 * tol / c.step)))
    return len(_clusters(idx, body.shape[0], c.closed, gap))


def _close_pairs(c: SampledCurve, tol: float) -> np.ndarray:
    body = _body(c)
    n = body.shape[0]
    pairs = cKDTree(body).query_pairs(tol, output_type="ndarray")
    if pairs.size == 0:
        return pairs.reshape(0, 2)
    window = max(3, int(math.ceil(2.0 * tol / c.step)) + 1)
    gap = _index_gap(pairs[:, 0], pairs[:, 1], n, c.closed)
    # neighbours along the curve stay within tol only over short arcs
    chord = np.linalg.norm(body[pairs[:, 0]] - body[pairs[:, 1]], axis=1)
    far = (gap > window) & (gap * c.step > 3.0 * chord + 2.0 * tol)
    return pairs[far]


def is_embedded(c: SampledCurve, tol: float | None = None):
    """``(True, None)`` or ``(False, (s_i, s_j))`` for a near self-contact.

    Closed curves may meet themselves only at the seam; open curves whose
    end points coincide count as non-embedded.
    """
    tol = 1.5 * c.step if tol is None else tol
    pairs = _close_pairs(c, tol)
    if pairs.size:
        i, j = sorted(pairs[np.argmin(pairs.min(axis=1))])
        return False, (float(i * c.step), float(j * c.step))
    return True, None


def self_contact_points(c: SampledCurve, tol: float | None = None) -> list[int]:
    """Representative sample indices of the curve's self-contact sets."""
    tol = 1.5 * c.step if tol is None else tol
    pairs = _close_pairs(c, tol)
    if pairs.size == 0:
        return []
    body = _body(c)
    dist = np.linalg.norm(body[pairs[:, 0]] - body[pairs[:, 1]], axis=1)
    idx = np.unique(pairs.ravel())
    best = {}
    for (a, b), dd in zip(pairs, dist):
        for i in (a, b):
            if dd < best.get(i, np.inf):
                best[i] = dd
    gap = max(1, int(math.floor(10.0 * tol / c.step)))
    reps = []
    for run in _clusters(idx, body.shape[0], c.closed, gap):
        reps.append(int(min(run, key=lambda i: best[i])))
    return reps


def max_multiplicity(c: SampledCurve, tol: float | None = None) -> tuple[int, np.ndarray | None]:
    """Largest multiplicity over self-contact points, with a witness point."""
    tol = 1.5 * c.step if tol is None else tol
    best, where = 1, None
    for i in self_contact_points(c, tol):
        P = c.points[i]
        m = multiplicity(c, P, tol)
        if m > best:
            best, where = m, P
    return best, where


def affine_dimension(c: SampledCurve, tol: float = 1e-9) -> int:
    """Rank of the centred second-moment matrix, relative threshold ``tol``."""
    X = c.points - c.points.mean(axis=0)
    ev = np.linalg.eigvalsh(X.T @ X / X.shape[0])
    top = ev.max()
    if top <= 0.0:
        return 0
    return int(np.sum(ev >= tol * top))
