"""Li-Yau type inequalities for the normalised p-bending energy.

A closed curve with a point of multiplicity m has
``Bbar_p >= varpi_p* m^p``, with equality exactly for closed m-leafed
p-elasticae.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import curvekit as ck, geom, pelliptic as pe

EQUALITY_RTOL = 1e-3


def liyau_bound(p: float, m: int) -> float:
    if m < 1:
        raise pe.DomainError("multiplicity must be >= 1")
    return pe.varpi_star(p) * float(m) ** p


@dataclass(frozen=True)
class LeafDecomposition:
    leaves: list
    lengths: np.ndarray
    normalized: np.ndarray
    partition_bound: float
    jensen_gap: float
    certified: bool
    tol: float


@dataclass(frozen=True)
class LiYauReport:
    p: float
    m: int
    bound: float
    measured: float
    satisfied: bool
    gap: float
    leaf_certified: bool
    tol: float
    joint: np.ndarray | None = None
    notes: dict = field(default_factory=dict)


def _closed_curvature(c: ck.SampledCurve) -> np.ndarray:
    return geom.curvature_profile(c, with_torsion=False)[1]


def _joint_passes(c: ck.SampledCurve, joint, tol: float) -> list[int]:
    body = c.points[:-1]
    d = np.linalg.norm(body - np.asarray(joint, dtype=float), axis=1)
    idx = np.nonzero(d <= tol)[0]
    gap = max(1, int(math.floor(10.0 * tol / c.step)))
    runs = geom._clusters(idx, body.shape[0], True, gap)
    return sorted(int(r[np.argmin(d[r])]) for r in runs)


def leaf_decomposition(c: ck.SampledCurve, p: float, joint, tol: float = EQUALITY_RTOL, contact_tol: float | None = None) -> LeafDecomposition:
    """Cut a closed curve at every pass through ``joint``.

    ``tol`` is the relative tolerance for equal lengths and per-leaf
    ``Bbar_p = varpi_p*``; ``contact_tol`` is the spatial radius for passes.
    """
    if not c.closed:
        raise pe.DomainError("leaf decomposition needs a closed curve")
    contact_tol = 1.5 * c.step if contact_tol is None else contact_tol
    cuts = _joint_passes(c, joint, contact_tol)
    if len(cuts) < 2:
        raise pe.DomainError(f"the joint has multiplicity {len(cuts)} < 2")
    n = c.count - 1
    k = _closed_curvature(c)[:-1]
    kp = k**p
    w = pe.varpi_star(p)
    leaves, lens, norm = [], [], []
    for a, b in zip(cuts, cuts[1:] + [cuts[0] + n]):
        idx = np.arange(a, b + 1) % n
        lens.append((b - a) * c.step)
        B = float(trapezoid(kp[idx], dx=c.step))
        norm.append(lens[-1] ** (p - 1.0) * B)
        leaves.append(ck.SampledCurve(c.points[idx], step=c.step, meta={"family": "leaf-piece"}))
    lens, norm = np.array(lens), np.array(norm)
    m = len(cuts)
    part = w * lens.sum() ** (p - 1.0) * np.sum(lens ** (1.0 - p))
    certified = bool(
        np.max(np.abs(lens - lens.mean())) <= tol * lens.mean() and np.max(np.abs(norm / w - 1.0)) <= tol
    )
    return LeafDecomposition(
        leaves=leaves,
        lengths=lens,
        normalized=norm,
        partition_bound=float(part),
        jensen_gap=float(part - w * m**p),
        certified=certified,
        tol=tol,
    )


def check_liyau(c: ck.SampledCurve, p: float, tol: float = EQUALITY_RTOL, contact_tol: float | None = None, absolute: bool = False) -> LiYauReport:
    """Compare ``Bbar_p`` with ``varpi_p* m^p`` at the worst multiplicity point.

    ``tol`` is relative to the bound unless ``absolute`` is set.  Near
    equality the curve is cut at the joint and checked leaf by leaf.
    """
    if not c.closed:
        raise pe.DomainError("the Li-Yau check needs a closed curve")
    contact_tol = 1.5 * c.step if contact_tol is None else contact_tol
    m, joint = geom.max_multiplicity(c, contact_tol)
    measured = geom.bending_energy(c, p).normalized
    bound = liyau_bound(p, m)
    slack = tol if absolute else tol * bound
    gap = measured - bound
    notes = {}
    satisfied = bool(measured >= bound - slack)
    if m < 2:
        # the inequality is only asserted for m >= 2
        notes["multiplicity"] = "no self-intersection found; the bound with m=1 is vacuous"
        satisfied = True
    certified = False
    if m >= 2 and abs(gap) <= (tol * bound if not absolute else max(tol, EQUALITY_RTOL * bound)):
        dec = leaf_decomposition(c, p, joint, tol=EQUALITY_RTOL, contact_tol=contact_tol)
        certified = dec.certified
        notes["leaf_lengths"] = dec.lengths.tolist()
    return LiYauReport(
        p=p,
        m=m,
        bound=bound,
        measured=measured,
        satisfied=satisfied,
        gap=gap,
        leaf_certified=certified,
        tol=tol,
        joint=joint,
        notes=notes,
    )


@dataclass(frozen=True)
class Existence:
    exists: bool
    witness: str | None = None


def leafed_exists(p: float, m: int, n: int, tol: float = 1e-9) -> Existence:
    """Does a closed m-leafed p-elastica exist in ``R^n``?"""
    pe._check_p(p)
    if int(m) != m or m < 2 or n < 2:
        raise pe.DomainError("need m >= 2 and n >= 2")
    if m % 2 == 0:
        return Existence(True, "covered-figure-eight")
    if pe.planar_angle_of(p, m, tol=tol) is not None:
        return Existence(True, "planar-tuple")
    if p > pe.pm_star(m) and n >= 3:
        return Existence(True, "latitude-tuple")
    return Existence(False, None)


def leafed_witness(p: float, m: int, n: int, ds: float | None = None) -> ck.SampledCurve:
    """Build the curve named by :func:`leafed_exists`."""
    ex = leafed_exists(p, m, n)
    if not ex.exists:
        if p > pe.pm_star(m):
            raise ck.NoPlanarTupleError(
                f"p={p} is not in P_{m}: closed {m}-leafed p-elasticae exist in R^3 but not in R^{n}"
            )
        raise ck.NonexistenceError(f"p={p} < p_{m}* = {pe.pm_star(m):.6f}: no closed {m}-leafed p-elastica exists")
    if ex.witness == "latitude-tuple":
        tup = ck.omega_tuple_spatial(m, p, dim=n)
    else:
        tup = ck.omega_tuple_planar(m, p, dim=n)
    return ck.m_leafed_curve(ck.LeafedSpec(tup), ds=ds)


def embeddedness_threshold(p: float) -> float:
    """``2^p varpi_p*``: closed curves below it are embedded."""
    return 2.0**p * pe.varpi_star(p)


def certify_embedded(c: ck.SampledCurve, p: float, rtol: float = EQUALITY_RTOL) -> bool:
    """Energy certificate for embeddedness, with a geometric fallback.

    The energy must sit below the threshold by more than ``rtol`` relative,
    so quadrature error cannot certify a curve that attains it.
    """
    if geom.bending_energy(c, p).normalized < embeddedness_threshold(p) * (1.0 - rtol):
        return True
    return geom.is_embedded(c)[0]


def penalized_threshold(p: float, lam: float) -> float:
    """``2p (lam/(p-1))^((p-1)/p) varpi_p*^(1/p)``.

    If ``B_p + lam L`` stays below this value then, by Young's inequality,
    ``Bbar_p <= 2^p varpi_p*``.
    """
    pe._check_p(p)
    if not lam > 0.0:
        raise pe.DomainError("lambda must be positive")
    return 2.0 * p * (lam / (p - 1.0)) ** ((p - 1.0) / p) * pe.varpi_star(p) ** (1.0 / p)


def random_leafed_curve(rng: np.random.Generator, m: int, p: float, dim: int = 3, ds_frac: float = 4e-4) -> ck.SampledCurve:
    """A random closed curve through the origin ``m`` times.

    Leaf i is a cubic Hermite loop leaving along ``d_i`` and returning along
    ``d_{i+1}`` plus a random bump vanishing to first order at both ends, so
    the closed curve is C^1.
    """
    d = rng.normal(size=(m, dim))
    d /= np.linalg.norm(d, axis=1)[:, None]
    t = np.linspace(0.0, 1.0, 1201)[:, None]
    chunks = []
    for i in range(m):
        while True:
            a, b = rng.uniform(1.0, 3.0, size=2)
            r = rng.normal(size=dim) * rng.uniform(2.0, 8.0)
            pts = t * (1 - t) ** 2 * a * d[i] - t**2 * (1 - t) * b * d[(i + 1) % m] + (t * (1 - t)) ** 2 * r
            sp = np.linalg.norm(np.gradient(pts, t[:, 0], axis=0), axis=1)
            if sp.min() > 0.05 * sp.mean():
                break
        chunks.append(pts if i == 0 else pts[1:])
    poly = np.vstack(chunks)
    poly[-1] = poly[0]
    L = np.sum(np.linalg.norm(np.diff(poly, axis=0), axis=1))
    return ck.resample_polyline(poly, ds_frac * L, closed=True)


def perturbed_leafed_curve(rng: np.random.Generator, base: ck.SampledCurve, eps: float) -> ck.SampledCurve:
    """Add ``eps * ell * sin^2(pi s/ell) v_i`` on each leaf of an m-leafed curve."""
    m = base.meta["m"]
    n = base.count - 1
    per = n // m
    s = np.arange(per + 1) / per
    ell = per * base.step
    pts = base.points.copy()
    for i in range(m):
        v = rng.normal(size=base.dim)
        bump = eps * ell * np.sin(np.pi * s) ** 2
        pts[i * per : (i + 1) * per + 1] += np.outer(bump, v / np.linalg.norm(v))
    pts[-1] = pts[0]
    return ck.resample_polyline(pts, base.step, closed=True)
