"""Sampled curves and the constructors for every p-elastica family used here.

Constructors emit canonical curves: flat-core pieces at ``A_{p,lambda} = 1``
and wavelike pieces with curvature ``2q cn_p``.  Physical scales come from
:func:`similarity_transform`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import interpolate, special

from . import pelliptic as pe

UNIT_SPEED_RTOL = 1e-6


class CurveError(ValueError):
    """Invalid curve data or constructor arguments."""


class NoPlanarTupleError(pe.DomainError):
    """No planar tangent tuple exists for the requested (m, p)."""


class NonexistenceError(pe.DomainError):
    """No closed m-leafed p-elastica exists in any dimension."""


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Arclength-sampled curve: ``points[i] = gamma(i * step)``.

    Closed curves repeat their first point at the end.  ``curvature_model``
    optionally carries the exact curvature as a function of arclength for
    curves built from closed forms; it is never serialized.
    """

    points: np.ndarray
    step: float
    closed: bool = False
    meta: dict = field(default_factory=dict)
    curvature_model: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] < 2:
            raise CurveError("points must have shape (N, n) with n >= 2")
        if not self.step > 0.0:
            raise CurveError("step must be positive")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def length(self) -> float:
        return (self.count - 1) * self.step

    @property
    def s(self) -> np.ndarray:
        return np.arange(self.count) * self.step

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def speed_defect(self) -> float:
        """``max_i | |p_{i+1} - p_i| - step | / step``."""
        if self.count < 2:
            return 0.0
        d = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return float(np.max(np.abs(d - self.step)) / self.step)

    def with_meta(self, **kw) -> "SampledCurve":
        return replace(self, meta={**self.meta, **kw})


def _steps_for(length: float, ds: float | None, steps: int | None) -> int:
    if steps is not None:
        if steps < 1:
            raise CurveError("steps must be >= 1")
        return int(steps)
    if ds is None:
        ds = 1e-3 * length
    if not ds > 0.0:
        raise CurveError("ds must be positive")
    return max(1, int(math.ceil(length / ds - 1e-9)))


def _sample(fn, a: float, b: float, nsteps: int) -> tuple[np.ndarray, float]:
    s = np.linspace(a, b, nsteps + 1)
    return fn(s), (b - a) / nsteps


def _embed(xy: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros((xy.shape[0], dim))
    out[:, : xy.shape[1]] = xy
    return out


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise CurveError("zero vector has no direction")
    return v / n


# ---------------------------------------------------------------------------
# closed forms


def wavelike_xy(p: float, q: float, s) -> np.ndarray:
    """Canonical wavelike curve ``(2 E(am s) - s, -q p/(p-1) |cn|^(p-2) cn)``.

    At ``q = 1`` (p > 2) the same formula gives the flat-core loop with
    ``theta = -e_2``; see :func:`flat_core_loop_xy`.
    """
    s = np.asarray(s, dtype=float)
    parts = pe._am_parts(p, s, q)
    tabE = pe._table(p, q, +1)
    Ec = tabE.total
    E = 2.0 * parts.n * Ec + parts.sgn * (Ec - tabE(parts.u))
    c = parts.cos
    y = -q * p / (p - 1.0) * np.sign(c) * np.abs(c) ** (2.0 * (p - 1.0) / p)
    return np.stack([2.0 * E - s, y], axis=-1)


def wavelike_curvature(p: float, q: float, s) -> np.ndarray:
    """Signed curvature ``2 q cn_p(s, q)`` of :func:`wavelike_xy`."""
    parts = pe._am_parts(p, np.asarray(s, dtype=float), q)
    c = parts.cos
    return 2.0 * q * np.sign(c) * np.abs(c) ** (2.0 / p)


def wavelike_tangent(p: float, q: float, s) -> np.ndarray:
    """Unit tangent ``(1 - 2q^2 sin^2 am, 2q sin am sqrt(1 - q^2 sin^2 am))``."""
    parts = pe._am_parts(p, np.asarray(s, dtype=float), q)
    sn = parts.sin
    d = np.sqrt(1.0 - q * q * sn * sn)
    return np.stack([1.0 - 2.0 * q * q * sn * sn, 2.0 * q * sn * d], axis=-1)


def flat_core_loop_xy(p: float, s) -> np.ndarray:
    """``gamma_b(s) = (2 tanh_p s - s, p/(p-1) sech_p(s)^(p-1))`` on ``|s| <= K_p(1)``."""
    xy = wavelike_xy(p, 1.0, s)
    xy[..., 1] *= -1.0
    return xy


# ---------------------------------------------------------------------------
# elementary constructors


def line_segment(L: float, dim: int = 2, ds: float | None = None, steps: int | None = None) -> SampledCurve:
    """Straight segment ``s -> -s e_1`` on ``[0, L]``."""
    if L < 0.0:
        raise CurveError("length must be nonnegative")
    if L == 0.0:
        return SampledCurve(np.zeros((1, dim)), step=ds or 1.0, meta={"family": "line"})
    n = _steps_for(L, ds, steps)
    s = np.linspace(0.0, L, n + 1)
    pts = np.zeros((n + 1, dim))
    pts[:, 0] = -s
    return SampledCurve(
        pts, step=L / n, meta={"family": "line"}, curvature_model=lambda t: np.zeros_like(np.asarray(t, float))
    )


def _check_theta(theta, dim: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (dim,):
        raise CurveError(f"loop direction must be a {dim}-vector")
    if abs(np.linalg.norm(theta) - 1.0) > 1e-10 or abs(theta[0]) > 1e-10:
        raise CurveError("loop direction must be a unit vector orthogonal to e_1")
    return theta


def flat_core_loop(p: float, theta=None, dim: int = 2, ds: float | None = None, steps: int | None = None) -> SampledCurve:
    """Flat-core loop ``gamma_b^theta`` on ``[-K_p(1), K_p(1)]``."""
    if p <= 2.0:
        raise CurveError(f"flat-core loops need p > 2, got p={p}")
    if theta is None:
        theta = np.eye(dim)[1]
    theta = _check_theta(theta, dim)
    K = pe.K_p1(p)
    n = _steps_for(2.0 * K, ds, steps)
    xy, h = _sample(lambda s: flat_core_loop_xy(p, s), -K, K, n)
    pts = np.outer(xy[:, 0], np.eye(dim)[0]) + np.outer(xy[:, 1], theta)
    model = lambda t: 2.0 * np.asarray(pe.sech_p(p, np.asarray(t, float) - K))
    return SampledCurve(
        pts,
        step=h,
        meta={"family": "flat-core-loop", "p": p, "lambda": pe.flat_core_lambda(p), "scale": 1.0},
        curvature_model=model,
    )


def concat(a: SampledCurve, b: SampledCurve) -> SampledCurve:
    """``a (+) b``: translate b so it starts where a ends."""
    if a.dim != b.dim:
        raise CurveError("dimension mismatch")
    if a.closed or b.closed:
        raise CurveError("concatenation needs open curves")
    if a.count == 1:
        return b
    if b.count == 1:
        return a
    if abs(a.step - b.step) > 1e-9 * max(a.step, b.step):
        raise CurveError(f"step mismatch: {a.step} vs {b.step}")
    shifted = b.points[1:] - b.points[0] + a.points[-1]
    pts = np.vstack([a.points, shifted])
    return SampledCurve(pts, step=a.step, meta={"family": "concat"})


def similarity_transform(c: SampledCurve, scale: float = 1.0, rotation=None, shift=None) -> SampledCurve:
    """``x -> scale * R x + b``; bending energy scales by ``scale^(1-p)``."""
    if not scale > 0.0:
        raise CurveError("scale must be positive")
    R = np.eye(c.dim) if rotation is None else np.asarray(rotation, dtype=float)
    if R.shape != (c.dim, c.dim) or not np.allclose(R.T @ R, np.eye(c.dim), atol=1e-10):
        raise CurveError("rotation must be an orthogonal matrix")
    b = np.zeros(c.dim) if shift is None else np.asarray(shift, dtype=float)
    pts = scale * c.points @ R.T + b
    model = None
    if c.curvature_model is not None:
        inner = c.curvature_model
        model = lambda t: np.asarray(inner(np.asarray(t, float) / scale)) / scale
    meta = dict(c.meta)
    meta["scale"] = meta.get("scale", 1.0) * scale
    return SampledCurve(pts, step=c.step * scale, closed=c.closed, meta=meta, curvature_model=model)


def resample(c: SampledCurve, ds: float) -> SampledCurve:
    """Re-sample at arclength spacing close to ``ds``; see :func:`resample_polyline`."""
    out = resample_polyline(c.points, ds, closed=c.closed)
    return replace(out, meta=dict(c.meta))


def resample_polyline(points, ds: float, closed: bool = False) -> SampledCurve:
    """Unit-speed samples of the cubic spline through ``points``.

    The spline's own arclength (Gauss-Legendre per knot interval) is
    inverted; closed curves use a periodic spline.
    """
    if not ds > 0.0:
        raise CurveError("ds must be positive")
    pts = np.asarray(points, dtype=float)
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if chords.sum() == 0.0:
        raise CurveError("cannot resample a zero-length curve")
    keep = np.concatenate([[True], chords > 0.0])
    pts = pts[keep]
    t = np.concatenate([[0.0], np.cumsum(chords[chords > 0.0])])
    bc = "periodic" if closed else "not-a-knot"
    if closed:
        pts = pts.copy()
        pts[-1] = pts[0]
    spline = interpolate.CubicSpline(t, pts, bc_type=bc, axis=0)
    d1 = spline.derivative()

    x, w = special.roots_legendre(8)
    a, b = t[:-1], t[1:]
    nodes = 0.5 * (b - a)[:, None] * (x[None, :] + 1.0) + a[:, None]
    speed = np.linalg.norm(d1(nodes.ravel()), axis=1).reshape(nodes.shape)
    seg = 0.5 * (b - a) * (speed @ w)
    S = np.concatenate([[0.0], np.cumsum(seg)])
    total = S[-1]
    n = _steps_for(total, ds, None)
    target = np.linspace(0.0, total, n + 1)
    j = np.clip(np.searchsorted(S, target, side="right") - 1, 0, len(a) - 1)
    tt = a[j] + (target - S[j]) / np.maximum(seg[j], 1e-300) * (b[j] - a[j])

    # Newton on the arclength within each knot interval
    for _ in range(6):
        lo = a[j]
        m = 0.5 * (tt - lo)[:, None] * (x[None, :] + 1.0) + lo[:, None]
        sp = np.linalg.norm(d1(m.ravel()), axis=1).reshape(m.shape)
        partial = S[j] + 0.5 * (tt - lo) * (sp @ w)
        tt = tt - (partial - target) / np.linalg.norm(d1(tt), axis=1)
        tt = np.clip(tt, a[j], b[j])
    out = spline(tt)
    if closed:
        out[-1] = out[0]
    return SampledCurve(out, step=total / n, closed=closed, meta={"family": "resampled"})


# ---------------------------------------------------------------------------
# flat-core curves


@dataclass(frozen=True)
class FlatCoreSpec:
    """Combinatorial description of a flat-core p-elastica.

    ``gamma_f = (+)_j (line(L_j) (+) loop(theta_j)) (+) line(L_{N+1})``;
    the curve is ``gamma_f`` restricted to ``[shift, shift + length]`` in
    canonical units, scaled by ``scale`` and moved by ``(rotation, offset)``.
    ``length=None`` runs to the end of ``gamma_f``.
    """

    p: float
    loop_dirs: tuple
    seg_lengths: tuple
    shift: float = 0.0
    scale: float = 1.0
    rotation: np.ndarray | None = None
    offset: np.ndarray | None = None
    length: float | None = None

    def __post_init__(self):
        if not self.p > 2.0:
            raise CurveError("flat-core p-elasticae need p > 2")
        dirs = tuple(np.asarray(t, dtype=float) for t in self.loop_dirs)
        if not dirs:
            raise CurveError("at least one loop is required")
        dim = dirs[0].shape[0]
        for t in dirs:
            _check_theta(t, dim)
        object.__setattr__(self, "loop_dirs", dirs)
        lens = tuple(float(x) for x in self.seg_lengths)
        if len(lens) == len(dirs):
            lens = lens + (0.0,)
        if len(lens) != len(dirs) + 1 or min(lens) < 0.0:
            raise CurveError("seg_lengths must hold N+1 nonnegative lengths")
        object.__setattr__(self, "seg_lengths", lens)
        K = pe.K_p1(self.p)
        if not 0.0 <= self.shift < 2.0 * K + lens[0]:
            raise CurveError("shift must lie in [0, 2 K_p(1) + L_1)")
        if not self.scale > 0.0:
            raise CurveError("scale must be positive")
        if self.length is not None and not 0.0 < self.length <= self.full_length - self.shift + 1e-12:
            raise CurveError("length exceeds the available flat-core curve")

    @property
    def dim(self) -> int:
        return self.loop_dirs[0].shape[0]

    @property
    def n_loops(self) -> int:
        return len(self.loop_dirs)

    @property
    def full_length(self) -> float:
        return sum(self.seg_lengths) + 2.0 * pe.K_p1(self.p) * self.n_loops

    @property
    def end(self) -> float:
        """Canonical parameter of the curve's end on ``gamma_f``."""
        return self.full_length if self.length is None else self.shift + self.length

    def pieces(self):
        """``(kind, start, length, theta)`` for each piece of ``gamma_f``."""
        K2 = 2.0 * pe.K_p1(self.p)
        out, s = [], 0.0
        for L, th in zip(self.seg_lengths[:-1], self.loop_dirs):
            out.append(("line", s, L, None))
            s += L
            out.append(("loop", s, K2, th))
            s += K2
        out.append(("line", s, self.seg_lengths[-1], None))
        return out

    def loop_centers(self) -> list[float]:
        return [start + 0.5 * L for kind, start, L, _ in self.pieces() if kind == "loop"]


def _flat_core_eval(spec: FlatCoreSpec, t: np.ndarray) -> np.ndarray:
    """``gamma_f(t)`` in canonical units."""
    p, dim = spec.p, spec.dim
    K = pe.K_p1(p)
    e1 = np.eye(dim)[0]
    out = np.zeros((t.size, dim))
    pos = np.zeros(dim)
    pieces = spec.pieces()
    loop0 = flat_core_loop_xy(p, np.array([-K]))[0]
    for idx, (kind, start, L, th) in enumerate(pieces):
        last = idx == len(pieces) - 1
        mask = (t >= start) & ((t < start + L) | (last & (t <= start + L + 1e-12)))
        if kind == "line":
            if mask.any():
                out[mask] = pos - np.outer(t[mask] - start, e1)
            pos = pos - L * e1
        else:
            if mask.any():
                xy = flat_core_loop_xy(p, np.clip(t[mask] - start - K, -K, K)) - loop0
                out[mask] = pos + np.outer(xy[:, 0], e1) + np.outer(xy[:, 1], th)
            endxy = flat_core_loop_xy(p, np.array([K]))[0] - loop0
            pos = pos + endxy[0] * e1 + endxy[1] * th
    beyond = t > pieces[-1][1] + pieces[-1][2] + 1e-12
    if beyond.any():
        raise CurveError("parameter beyond the flat-core curve")
    return out


def flat_core_curvature(spec: FlatCoreSpec, s) -> np.ndarray:
    """``sum_j 2 sech_p(t - s_j) / scale`` at curve arclength ``s``."""
    t = np.asarray(s, dtype=float) / spec.scale + spec.shift
    k = np.zeros_like(t)
    for c in spec.loop_centers():
        k = k + 2.0 * np.asarray(pe.sech_p(spec.p, t - c))
    return k / spec.scale


def flat_core_curve(spec: FlatCoreSpec, ds: float | None = None, steps: int | None = None) -> SampledCurve:
    length = (spec.end - spec.shift) * spec.scale
    n = _steps_for(length, ds, steps)
    t = np.linspace(spec.shift, spec.end, n + 1)
    pts = spec.scale * _flat_core_eval(spec, t)
    pts = pts - pts[0]
    R = np.eye(spec.dim) if spec.rotation is None else np.asarray(spec.rotation, dtype=float)
    b = np.zeros(spec.dim) if spec.offset is None else np.asarray(spec.offset, dtype=float)
    pts = pts @ R.T + b
    return SampledCurve(
        pts,
        step=length / n,
        meta={
            "family": "flat-core",
            "p": spec.p,
            "lambda": pe.flat_core_lambda(spec.p) / spec.scale**spec.p,
            "scale": spec.scale,
        },
        curvature_model=lambda s: flat_core_curvature(spec, s),
    )


def _end_inside_loop(spec: FlatCoreSpec) -> int | None:
    """Index of the loop whose interior contains the curve's end, if any."""
    end = spec.end
    j = 0
    for kind, start, L, _ in spec.pieces():
        if kind == "loop":
            if start + 1e-12 < end < start + L - 1e-12:
                return j
            j += 1
    return None


def aligned_representative(spec: FlatCoreSpec) -> FlatCoreSpec:
    """Rotate every loop not containing the end into the first loop's plane."""
    keep = _end_inside_loop(spec)
    first = spec.loop_dirs[0]
    dirs = tuple(th if j == keep else first for j, th in enumerate(spec.loop_dirs))
    return replace(spec, loop_dirs=dirs)


# ---------------------------------------------------------------------------
# wavelike family, figure-eights and leaves


def wavelike_arc(p: float, q: float, s_range=(0.0, None), ds: float | None = None, steps: int | None = None) -> SampledCurve:
    """Planar canonical wavelike arc on ``[s0, s1]`` (default one period)."""
    if not 0.0 < q < 1.0:
        raise CurveError("wavelike arcs need q in (0, 1); use line or flat-core constructors")
    s0, s1 = s_range
    if s1 is None:
        s1 = s0 + 4.0 * pe.complete_K(p, q)
    if not s1 > s0:
        raise CurveError("empty arclength window")
    n = _steps_for(s1 - s0, ds, steps)
    xy, h = _sample(lambda s: wavelike_xy(p, q, s), s0, s1, n)
    return SampledCurve(
        xy - xy[0],
        step=h,
        meta={"family": "wavelike", "p": p, "q": q, "lambda": pe.wavelike_lambda(p, q), "scale": 1.0},
        curvature_model=lambda t: np.abs(wavelike_curvature(p, q, np.asarray(t, float) + s0)),
    )


def figure_eight(p: float, N: int = 2, ds: float | None = None, steps: int | None = None) -> SampledCurve:
    """The wavelike curve at ``q*`` on ``[0, 2NK]``: an ``N/2``-fold figure-eight.

    Even ``N`` gives a closed curve; ``N = 1`` is a half figure-eight.
    """
    if int(N) != N or N < 1:
        raise CurveError("N must be a positive integer")
    q = pe.q_star(p)
    K = pe.complete_K(p, q)
    L = 2.0 * N * K
    n = _steps_for(L, ds, steps)
    xy, h = _sample(lambda s: wavelike_xy(p, q, s), 0.0, L, n)
    closed = N % 2 == 0
    if closed:
        xy[-1] = xy[0]
    return SampledCurve(
        xy,
        step=h,
        closed=closed,
        meta={"family": "figure-eight", "p": p, "q": q, "N": int(N), "scale": 1.0,
              "lambda": pe.wavelike_lambda(p, q)},
        curvature_model=lambda t: np.abs(wavelike_curvature(p, q, t)),
    )


def leaf_tangents(p: float) -> tuple[np.ndarray, np.ndarray]:
    """Start and end tangents of the canonical leaf."""
    q = pe.q_star(p)
    r = 2.0 * q * math.sqrt(1.0 - q * q)
    return np.array([1.0 - 2.0 * q * q, r]), np.array([1.0 - 2.0 * q * q, -r])


def leaf(p: float, ds: float | None = None, steps: int | None = None) -> SampledCurve:
    """One leaf: the wavelike window ``[K, 3K]`` at ``q*``, both ends at the origin."""
    q = pe.q_star(p)
    K = pe.complete_K(p, q)
    n = _steps_for(2.0 * K, ds, steps)
    xy, h = _sample(lambda s: wavelike_xy(p, q, s), K, 3.0 * K, n)
    xy = xy - xy[0]
    xy[-1] = xy[0]
    return SampledCurve(
        xy,
        step=h,
        meta={"family": "leaf", "p": p, "q": q, "scale": 1.0, "lambda": pe.wavelike_lambda(p, q)},
        curvature_model=lambda t: np.abs(wavelike_curvature(p, q, np.asarray(t, float) + K)),
    )


# ---------------------------------------------------------------------------
# tangent tuples and m-leafed curves


@dataclass(frozen=True)
class OmegaTuple:
    """Unit tangents at the joint with ``<w_{i+1}, w_i> = cos 2 phi*(p)`` cyclically."""

    p: float
    vectors: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def defect(self) -> float:
        """Largest violation of the unit-length and crossing-angle constraints."""
        v = self.vectors
        target = math.cos(2.0 * pe.phi_star(self.p))
        ip = np.einsum("ij,ij->i", np.roll(v, -1, axis=0), v)
        norms = np.linalg.norm(v, axis=1)
        return float(max(np.max(np.abs(ip - target)), np.max(np.abs(norms - 1.0))))


def _rot2(a: float) -> np.ndarray:
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def omega_tuple_planar(m: int, p: float, dim: int = 2, tol: float = 1e-9) -> OmegaTuple:
    """Planar tangent tuple: rotations by ``2 phi*`` closed up after ``m'`` steps.

    Odd ``m`` needs ``phi*(p) = j pi / m'`` for some odd ``m' <= m``; the
    remaining ``m - m'`` leaves are figure-eight pairs.  Even ``m`` always
    works (a covered figure-eight).
    """
    m = int(m)
    if m < 2:
        raise CurveError("m must be >= 2")
    phi = pe.phi_star(p)
    R = _rot2(2.0 * phi)
    w1 = np.array([1.0, 0.0])
    if m % 2 == 0:
        vecs = [w1, R @ w1] * (m // 2)
    else:
        hit = pe.planar_angle_of(p, m, tol=tol)
        if hit is None:
            raise NoPlanarTupleError(
                f"p={p} is not in P_{m}: a closed {m}-leafed p-elastica exists in R^3 but not in R^2"
                if p > pe.pm_star(m)
                else f"p={p} < p_{m}*: no closed {m}-leafed p-elastica exists"
            )
        _, mp = hit
        vecs = [w1]
        for _ in range(mp - 1):
            vecs.append(R @ vecs[-1])
        vecs += [vecs[0], vecs[mp - 1]] * ((m - mp) // 2)
    out = np.zeros((m, dim))
    out[:, :2] = np.array(vecs)
    return OmegaTuple(p=p, vectors=out, kind="planar")


def latitude(m: int, p: float) -> float:
    """Height ``h`` of the latitude circle carrying the spatial tuple."""
    val = 1.0 - math.sin(pe.phi_star(p)) ** 2 / math.sin((m - 1) * math.pi / (2.0 * m)) ** 2
    if not val > 0.0:
        raise NonexistenceError(f"p={p} <= p_{m}*: no closed {m}-leafed p-elastica exists")
    return math.sqrt(val)


def omega_tuple_spatial(m: int, p: float, dim: int = 3) -> OmegaTuple:
    """Equidistributed tangents on the circle at height ``-h`` of the unit sphere."""
    m = int(m)
    if m < 3 or m % 2 == 0:
        raise CurveError("spatial tuples are built for odd m >= 3")
    if dim < 3:
        raise CurveError("spatial tuples need dim >= 3")
    if not p > pe.pm_star(m):
        raise NonexistenceError(f"p={p} <= p_{m}* = {pe.pm_star(m)}: no closed {m}-leafed p-elastica")
    h = latitude(m, p)
    rho = math.sqrt(1.0 - h * h)
    ang = (m - 1) * math.pi / m * np.arange(m)
    out = np.zeros((m, dim))
    out[:, 0] = rho * np.cos(ang)
    out[:, 1] = rho * np.sin(ang)
    out[:, 2] = -h
    return OmegaTuple(p=p, vectors=out, kind="spatial")


@dataclass(frozen=True)
class LeafedSpec:
    """Tangent tuple plus leaf size; ``leaf_length`` may list one length per leaf."""

    tuple: OmegaTuple
    leaf_length: float | Sequence[float] | None = None
    joint: np.ndarray | None = None


def _place_leaf(xy: np.ndarray, t0, t1, w0, w1) -> np.ndarray:
    """Linear isometry of the leaf plane sending ``(t0, t1)`` to ``(w0, w1)``."""
    e1 = _unit(t0)
    e2 = _unit(t1 - np.dot(t1, e1) * e1)
    f1 = _unit(w0)
    f2 = w1 - np.dot(w1, f1) * f1
    if np.linalg.norm(f2) < 1e-12:
        raise CurveError("consecutive tangents are parallel")
    f2 = _unit(f2)
    return np.outer(xy @ e1, f1) + np.outer(xy @ e2, f2)


def m_leafed_curve(spec: LeafedSpec, ds: float | None = None, steps_per_leaf: int | None = None) -> SampledCurve:
    """Closed m-leafed p-elastica through the joint with ``gamma'(i/m) = w_i``.

    With per-leaf lengths every leaf is sampled at the common step ``ds`` and
    its length rounded to a whole number of steps.
    """
    tup = spec.tuple
    if tup.defect() > 1e-10:
        raise CurveError(f"tangent tuple violates the crossing-angle constraint ({tup.defect():.2e})")
    p, m = tup.p, tup.m
    q = pe.q_star(p)
    K = pe.complete_K(p, q)
    t0, t1 = leaf_tangents(p)
    if spec.leaf_length is None or np.isscalar(spec.leaf_length):
        ell = 2.0 * K if spec.leaf_length is None else float(spec.leaf_length)
        if steps_per_leaf is None:
            steps_per_leaf = _steps_for(ell, ds if ds is not None else 1e-3 * m * ell, None)
        counts = [steps_per_leaf] * m
        h = ell / steps_per_leaf
    else:
        lens = [float(x) for x in spec.leaf_length]
        if len(lens) != m or min(lens) <= 0.0:
            raise CurveError("need one positive length per leaf")
        h = ds if ds is not None else 1e-3 * sum(lens)
        counts = [max(8, int(round(x / h))) for x in lens]
    scales = [n * h / (2.0 * K) for n in counts]
    chunks, pos = [], np.zeros(tup.dim)
    for i, n in enumerate(counts):
        lf = leaf(p, steps=n)
        placed = scales[i] * _place_leaf(lf.points, t0, t1, tup.vectors[i], tup.vectors[(i + 1) % m])
        chunks.append(placed if i == 0 else placed[1:])
    pts = np.vstack(chunks)
    pts[-1] = pts[0]
    if spec.joint is not None:
        pts = pts + np.asarray(spec.joint, dtype=float)
    starts = np.concatenate([[0.0], np.cumsum([n * h for n in counts])])
    sc = np.array(scales)

    def model(t):
        t = np.asarray(t, dtype=float)
        j = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, m - 1)
        local = (t - starts[j]) / sc[j]
        return np.abs(wavelike_curvature(p, q, local + K)) / sc[j]

    meta = {"family": "m-leafed", "p": p, "m": m, "q": q, "tuple": tup.kind}
    if len(set(counts)) == 1:
        meta["scale"] = scales[0]
        meta["lambda"] = pe.wavelike_lambda(p, q) / scales[0] ** p
    return SampledCurve(pts, step=h, closed=True, meta=meta, curvature_model=model)
