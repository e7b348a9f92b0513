"""p-elliptic integrals and functions, and the constants built from them.

Integrand convention (with ``a = 1 - 2/p``)::

    F(x, q) = int_0^x |cos t|^a (1 - q^2 sin^2 t)^(-1/2) dt
    E(x, q) = int_0^x |cos t|^a (1 - q^2 sin^2 t)^(+1/2) dt

``am(., q)`` inverts ``F(., q)``, ``cn_p = sign(cos am) |cos am|^(2/p)``,
``sech_p = cn_p(., 1)`` and ``tanh_p(s) = E(am(s, 1), 1)``.  This is the
unique choice that makes the wavelike closed form unit speed and gives
``K_{1,p}(1) = int_0^{pi/2} (cos t)^(-2/p) dt``.

All integrals are evaluated in the variable ``u = pi/2 - t`` where the
integrand factors as ``u^alpha * h(u)`` with ``h`` analytic.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

HALF_PI = 0.5 * math.pi
QUAD_TOL = 1e-12
_NODES = 24


class DomainError(ValueError):
    """Argument outside the domain of a p-elliptic operation."""


class DivergenceError(DomainError):
    """The requested integral is infinite (``q = 1`` with ``p <= 2``)."""


class BracketError(RuntimeError):
    """A root solve failed to bracket its root."""


def _check_p(p: float) -> float:
    p = float(p)
    if not p > 1.0 or not math.isfinite(p):
        raise DomainError(f"exponent p must lie in (1, inf), got {p}")
    return p


def _check_q(q: float) -> float:
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"modulus q must lie in [0, 1], got {q}")
    return q


def regime(p: float) -> str:
    """'singular' for p < 2, 'classical' for p == 2, 'degenerate' for p > 2."""
    p = _check_p(p)
    if p < 2.0:
        return "singular"
    return "classical" if p == 2.0 else "degenerate"


@dataclass(frozen=True)
class CompletePair:
    K: float
    E: float
    p: float
    q: float


# ---------------------------------------------------------------------------
# the integrand in the complementary variable u = pi/2 - t


def _exponents(p: float, q: float, sign: int) -> tuple[float, float]:
    """Return (alpha, b): integrand is u^alpha * sinc(u)^alpha * (..)^b."""
    a = 1.0 - 2.0 / p
    b = 0.5 * sign
    if q == 1.0:
        # (1 - sin^2 t)^b = sin(u)^(2b) merges into the power of u
        return a + 2.0 * b, 0.0
    return a, b


def _h(u, p: float, q: float, sign: int):
    """Analytic factor of the integrand, ``h(0)`` finite and positive."""
    alpha, b = _exponents(p, q, sign)
    u = np.asarray(u, dtype=float)
    sinc = np.sinc(u / math.pi)
    out = sinc**alpha
    if b != 0.0:
        # 1 - q^2 cos^2 u, written to avoid cancellation when q -> 1
        c = (1.0 - q) * (1.0 + q) + q * q * np.sin(u) ** 2
        out = out * c**b
    return out


def _complete_quad(p: float, q: float, sign: int) -> float:
    """Adaptive Gauss-Kronrod on the power-substituted integrand."""
    alpha, _ = _exponents(p, q, sign)
    if alpha <= -1.0:
        raise DivergenceError(
            f"integral diverges for p={p}, q={q} (no flat-core regime for p <= 2)"
        )
    beta = alpha + 1.0

    # v = u^beta removes the algebraic endpoint singularity
    def f(v):
        return float(_h(v ** (1.0 / beta), p, q, sign)) / beta

    # h varies on the scale sqrt(1 - q^2) near u = 0: split there geometrically
    cuts = [HALF_PI]
    if q < 1.0:
        width = math.sqrt((1.0 - q) * (1.0 + q))
        c = 0.1 * width
        while c < HALF_PI:
            cuts.insert(-1, c)
            c *= 4.0
    val, _ = integrate.quad(f, 0.0, cuts[0] ** beta, epsabs=QUAD_TOL, epsrel=1e-13, limit=200)
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        piece, _ = integrate.quad(
            lambda u: u**alpha * float(_h(u, p, q, sign)),
            lo,
            hi,
            epsabs=QUAD_TOL,
            epsrel=1e-13,
            limit=200,
        )
        val += piece
    return val


@lru_cache(maxsize=4096)
def complete_pair(p: float, q: float) -> CompletePair:
    """Complete values ``K_{1,p}(q)`` and ``E_{1,p}(q)`` (memoized)."""
    p = _check_p(p)
    q = _check_q(q)
    E = _complete_quad(p, q, +1)
    if q == 1.0 and p <= 2.0:
        K = math.inf
    else:
        K = _complete_quad(p, q, -1)
    return CompletePair(K=K, E=E, p=p, q=q)


def complete_K(p: float, q: float) -> float:
    K = complete_pair(p, q).K
    if math.isinf(K):
        raise DivergenceError(f"K_1,p(1) diverges for p={p} <= 2")
    return K


def complete_E(p: float, q: float) -> float:
    return complete_pair(p, q).E


# ---------------------------------------------------------------------------
# vectorized incomplete integrals via a panel table in u


class _PanelTable:
    """Cumulative ``T(u) = int_0^u t^alpha h(t) dt`` on graded panels.

    The first panel uses Gauss-Jacobi (weight ``t^alpha``), the rest
    Gauss-Legendre.  Panels grade geometrically towards ``u = 0`` where the
    power singularity and, for ``q`` near 1, the near-singularity of ``h``
    sit.
    """

    def __init__(self, p: float, q: float, sign: int):
        self.p, self.q, self.sign = p, q, sign
        self.alpha, _ = _exponents(p, q, sign)
        if self.alpha <= -1.0:
            raise DivergenceError(f"integral diverges for p={p}, q={q}")
        spacing = HALF_PI / 128.0
        first = spacing
        if q < 1.0:
            first = min(first, 0.25 * math.sqrt((1.0 - q) * (1.0 + q)))
        edges = [0.0, first]
        while edges[-1] * 2.0 < spacing:
            edges.append(edges[-1] * 2.0)
        tail = np.arange(edges[-1] + spacing, HALF_PI, spacing)
        self.edges = np.concatenate([edges, tail, [HALF_PI]])
        if self.edges[-1] - self.edges[-2] < 1e-3 * spacing:
            self.edges = np.delete(self.edges, -2)

        x, w = special.roots_jacobi(_NODES, 0.0, self.alpha)
        self._jx = 0.5 * (x + 1.0)
        self._jw = w * 2.0 ** (-self.alpha - 1.0)
        x, w = special.roots_legendre(_NODES)
        self._gx = 0.5 * (x + 1.0)
        self._gw = 0.5 * w

        lo, hi = self.edges[:-1], self.edges[1:]
        pieces = np.empty(lo.size)
        pieces[0] = self._jacobi(np.array([hi[0]]))[0]
        pieces[1:] = self._legendre(lo[1:], hi[1:])
        self.cum = np.concatenate([[0.0], np.cumsum(pieces)])

    def _f(self, t):
        return t**self.alpha * _h(t, self.p, self.q, self.sign)

    def _jacobi(self, u):
        t = u[:, None] * self._jx[None, :]
        vals = _h(t, self.p, self.q, self.sign) @ self._jw
        return u ** (self.alpha + 1.0) * vals

    def _legendre(self, a, b):
        t = a[:, None] + (b - a)[:, None] * self._gx[None, :]
        return (b - a) * (self._f(t) @ self._gw)

    @property
    def total(self) -> float:
        return float(self.cum[-1])

    def __call__(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, HALF_PI)
        flat = u.ravel()
        j = np.clip(np.searchsorted(self.edges, flat, side="right") - 1, 0, self.edges.size - 2)
        out = self.cum[j].copy()
        first = j == 0
        if first.any():
            out[first] = self._jacobi(flat[first])
        rest = ~first
        if rest.any():
            out[rest] += self._legendre(self.edges[j[rest]], flat[rest])
        return out.reshape(u.shape)

    def dT_dv(self, u):
        """Derivative of T with respect to ``v = u^(alpha+1)``."""
        return _h(u, self.p, self.q, self.sign) / (self.alpha + 1.0)


_table_lock = threading.Lock()


@lru_cache(maxsize=256)
def _table_cached(p: float, q: float, sign: int) -> _PanelTable:
    return _PanelTable(p, q, sign)


def _table(p: float, q: float, sign: int) -> _PanelTable:
    with _table_lock:
        return _table_cached(p, q, sign)


def _incomplete(p: float, x, q: float, sign: int):
    tab = _table(p, q, sign)
    x = np.asarray(x, dtype=float)
    total = tab.total
    sgn = np.sign(x)
    ax = np.abs(x)
    n = np.floor((ax + HALF_PI) / math.pi)
    r = ax - n * math.pi  # in [-pi/2, pi/2)
    principal = np.sign(r) * (total - tab(HALF_PI - np.abs(r)))
    return sgn * (2.0 * n * total + principal)


def _as_output(val, like):
    return float(val) if np.ndim(like) == 0 else val


def incomplete_F(p: float, x, q: float):
    """``F_{1,p}(x, q)``; odd, increasing, ``F(pi/2, q) = K_{1,p}(q)``."""
    p = _check_p(p)
    q = _check_q(q)
    if q == 1.0:
        if p <= 2.0:
            raise DivergenceError(f"F(x, 1) diverges for p={p} <= 2")
        if np.any(np.abs(np.asarray(x)) >= HALF_PI):
            raise DomainError("F(x, 1) requires |x| < pi/2")
    return _as_output(_incomplete(p, x, q, -1), x)


def incomplete_E(p: float, x, q: float):
    """``E_{1,p}(x, q)``, extended by ``E(x + pi) = E(x) + 2 E(pi/2)``."""
    p = _check_p(p)
    q = _check_q(q)
    return _as_output(_incomplete(p, x, q, +1), x)


def K_p1(p: float) -> float:
    """``K_p(1) = int_0^{pi/2} (cos t)^(-2/p) dt``, finite only for p > 2."""
    p = _check_p(p)
    if p <= 2.0:
        raise DivergenceError(
            f"K_p(1) diverges for p={p}: flat-core p-elasticae need p > 2"
        )
    return complete_K(p, 1.0)


def beta_cos_integral(a: float) -> float:
    """``int_0^{pi/2} (cos t)^a dt`` in closed form (a > -1)."""
    return 0.5 * math.sqrt(math.pi) * math.exp(
        special.gammaln(0.5 * (a + 1.0)) - special.gammaln(0.5 * a + 1.0)
    )


# ---------------------------------------------------------------------------
# amplitude and the functions built on it


def _solve_u(tab: _PanelTable, target):
    """Solve ``T(u) = target`` for u in [0, pi/2], Newton in ``v = u^beta``."""
    beta = tab.alpha + 1.0
    target = np.asarray(target, dtype=float)
    vlo = np.zeros_like(target)
    vhi = np.full_like(target, HALF_PI**beta)
    h0 = float(tab.dT_dv(np.array(0.0)))
    v = np.clip(target / h0, 0.0, vhi)
    scale = max(tab.total, 1.0)
    for _ in range(80):
        u = v ** (1.0 / beta)
        resid = tab(u) - target
        vlo = np.where(resid < 0.0, v, vlo)
        vhi = np.where(resid > 0.0, v, vhi)
        step = resid / tab.dT_dv(u)
        vnew = v - step
        bad = (vnew <= vlo) | (vnew >= vhi) | ~np.isfinite(vnew)
        vnew = np.where(bad, 0.5 * (vlo + vhi), vnew)
        done = np.abs(resid) <= 4e-16 * scale
        v = np.where(done, v, vnew)
        if done.all():
            break
    u = v ** (1.0 / beta)
    return np.where(target >= tab.total, HALF_PI, u)


@dataclass
class _AmParts:
    """``am = n*pi + sgn*(pi/2 - u)`` with ``u`` in [0, pi/2]."""

    n: np.ndarray
    sgn: np.ndarray
    u: np.ndarray

    @property
    def phi(self):
        return self.n * math.pi + self.sgn * (HALF_PI - self.u)

    @property
    def cos(self):
        return (-1.0) ** self.n * np.sin(self.u)

    @property
    def sin(self):
        return (-1.0) ** self.n * self.sgn * np.cos(self.u)


def _am_parts(p: float, s, q: float) -> _AmParts:
    s = np.asarray(s, dtype=float)
    if q == 1.0 and p <= 2.0:
        return _am_parts_noncompact(p, s)
    tab = _table(p, q, -1)
    K = tab.total
    if q == 1.0:
        if np.any(np.abs(s) > K * (1.0 + 1e-12)):
            raise DomainError("am(s, 1) requires |s| <= K_p(1)")
        n = np.zeros_like(s)
        r = np.clip(s, -K, K)
    else:
        n = np.floor((s + K) / (2.0 * K))
        r = s - 2.0 * K * n
    sgn = np.where(r < 0.0, -1.0, 1.0)
    # within rounding of a quarter period cn vanishes exactly; K from other
    # quadrature routes can differ from the table total by a few ulps
    target = K - np.abs(r)
    target = np.where(target <= 16.0 * np.finfo(float).eps * K, 0.0, target)
    u = _solve_u(tab, target)
    return _AmParts(n=n, sgn=sgn, u=u)


def _am_parts_noncompact(p: float, s: np.ndarray) -> _AmParts:
    """am(s, 1) for p <= 2, where F(., 1) maps (-pi/2, pi/2) onto R.

    With ``u = pi/2 - am`` the defining relation is ``u' = -sin(u)^(2/p)``,
    ``u(0) = pi/2``; one ODE solve over the sorted ``|s|`` covers all points.
    """
    flat = np.abs(s).ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    u = np.full(uniq.shape, HALF_PI)
    if uniq[-1] > 0.0:
        e = 2.0 / p
        sol = integrate.solve_ivp(
            lambda _, y: -np.sin(y) ** e, (0.0, uniq[-1]), [HALF_PI],
            method="DOP853", t_eval=uniq, rtol=1e-13, atol=1e-300,
        )
        if not sol.success:
            raise DivergenceError(f"am(., 1) integration failed: {sol.message}")
        u = np.maximum(sol.y[0], 0.0)
        u[uniq == 0.0] = HALF_PI
    u = u[inv].reshape(s.shape)
    return _AmParts(n=np.zeros_like(s), sgn=np.where(s < 0.0, -1.0, 1.0), u=u)


def _domain_am(p: float, q: float) -> None:
    if q == 1.0 and p <= 2.0:
        raise DivergenceError(f"am(., 1) for p={p} <= 2 has no compact support")


def amplitude_am(p: float, s, q: float):
    """Inverse of ``F_{1,p}(., q)``, extended by ``am(s + 2K) = am(s) + pi``."""
    p = _check_p(p)
    q = _check_q(q)
    _domain_am(p, q)
    return _as_output(_am_parts(p, s, q).phi, s)


def _signed_pow(c, e):
    return np.sign(c) * np.abs(c) ** e


def cn_p(p: float, s, q: float):
    """``cn_p(s, q) = sign(cos am) |cos am|^(2/p)``."""
    p = _check_p(p)
    q = _check_q(q)
    _domain_am(p, q)
    parts = _am_parts(p, s, q)
    return _as_output(_signed_pow(parts.cos, 2.0 / p), s)


def sech_p(p: float, s):
    """p-hyperbolic secant, ``cn_p(., 1)``; zero on ``|s| >= K_p(1)`` for p > 2.

    For p <= 2 this is the even solution of the same first-order equation on
    all of R; that range lies outside the flat-core regime.
    """
    p = _check_p(p)
    s_arr = np.asarray(s, dtype=float)
    if p > 2.0:
        K = K_p1(p)
        inside = np.abs(s_arr) < K
        out = np.zeros_like(s_arr)
        if inside.any():
            parts = _am_parts(p, s_arr[inside], 1.0)
            out[inside] = np.abs(parts.cos) ** (2.0 / p)
    else:
        parts = _am_parts(p, s_arr, 1.0)
        out = np.abs(parts.cos) ** (2.0 / p)
    return _as_output(out, s)


def tanh_p(p: float, s):
    """p-hyperbolic tangent, ``int_0^s sech_p(t)^p dt``."""
    p = _check_p(p)
    s_arr = np.asarray(s, dtype=float)
    tabE = _table(p, 1.0, +1)
    if p > 2.0:
        K = K_p1(p)
        clipped = np.clip(s_arr, -K, K)
    else:
        clipped = s_arr
    parts = _am_parts(p, clipped, 1.0)
    out = parts.sgn * (tabE.total - tabE(parts.u))
    return _as_output(out, s)


# ---------------------------------------------------------------------------
# constants


def _ratio_residual(p: float, q: float) -> float:
    pair = complete_pair(p, q)
    return 2.0 * pair.E / pair.K - 1.0


@lru_cache(maxsize=1024)
def q_star(p: float) -> float:
    """Modulus solving ``2 E_{1,p}(q) / K_{1,p}(q) = 1``."""
    p = _check_p(p)
    lo, hi = math.sqrt(0.5), 1.0 - 1e-12
    flo, fhi = _ratio_residual(p, lo), _ratio_residual(p, hi)
    if not (flo > 0.0 > fhi):
        raise BracketError(f"q_star({p}): residuals {flo}, {fhi} do not bracket")
    return optimize.brentq(lambda q: _ratio_residual(p, q), lo, hi, xtol=1e-15, rtol=1e-15)


def varpi_star(p: float) -> float:
    """Normalized bending energy of a half-fold figure-eight."""
    p = _check_p(p)
    q = q_star(p)
    E = complete_E(p, q)
    return 2.0 ** (3.0 * p - 1.0) * q ** (p - 2.0) * (2.0 * q * q - 1.0) * E**p


def phi_star(p: float) -> float:
    """Crossing angle ``pi - 2 arcsin(q*_p)``, in (0, pi/2)."""
    return math.pi - 2.0 * math.asin(q_star(p))


@lru_cache(maxsize=1024)
def phi_star_inv(theta: float) -> float:
    """Exponent with crossing angle ``theta``.

    The crossing angle fixes the modulus, ``q = cos(theta/2)``, so only the
    exponent is solved for.
    """
    theta = float(theta)
    if not 0.0 < theta < HALF_PI:
        raise DomainError(f"crossing angle must lie in (0, pi/2), got {theta}")
    q = math.cos(0.5 * theta)
    lo, hi = 1.0 + 1e-9, 1e6
    flo, fhi = _ratio_residual(lo, q), _ratio_residual(hi, q)
    if not (flo < 0.0 < fhi):
        raise BracketError(f"phi_star_inv({theta}): residuals {flo}, {fhi} do not bracket")
    # log(p - 1) spreads the bracket evenly
    x = optimize.brentq(
        lambda t: _ratio_residual(1.0 + math.exp(t), q),
        math.log(lo - 1.0),
        math.log(hi - 1.0),
        xtol=1e-14,
        rtol=1e-15,
    )
    return 1.0 + math.exp(x)


def _check_odd_m(m: int) -> int:
    if int(m) != m or m < 3 or m % 2 == 0:
        raise DomainError(f"m must be an odd integer >= 3, got {m}")
    return int(m)


def pm_angles(m: int) -> list[tuple[int, int]]:
    """Reduced fractions ``(j, m')`` with crossing angle ``j*pi/m'`` spanning P_m.

    The index pairs ``(i, m')`` with ``i = 2j`` even, ``1 < i < m'`` and odd
    ``3 <= m' <= m`` can name the same angle (``3/9 = 1/3``); only reduced
    fractions are kept.
    """
    m = _check_odd_m(m)
    out = []
    for mp in range(3, m + 1, 2):
        for j in range(1, (mp - 1) // 2 + 1):
            if math.gcd(j, mp) == 1:
                out.append((j, mp))
    return out


def pm_index_pairs(m: int) -> list[tuple[int, int]]:
    """All index pairs ``(i, m')`` of the construction, duplicates included."""
    m = _check_odd_m(m)
    return [(i, mp) for mp in range(3, m + 1, 2) for i in range(2, mp, 2)]


def pm_set(m: int) -> list[float]:
    """Exponents admitting planar closed m-leafed p-elasticae, ascending."""
    return sorted(phi_star_inv(j * math.pi / mp) for j, mp in pm_angles(m))


def pm_star(m: int) -> float:
    """``min P_m``, the exponent with crossing angle ``(m-1) pi / (2m)``."""
    m = _check_odd_m(m)
    return phi_star_inv((m - 1) * math.pi / (2.0 * m))


def planar_angle_of(p: float, m: int, tol: float = 1e-9) -> tuple[int, int] | None:
    """Return ``(j, m')`` if ``phi_star(p) = j*pi/m'`` for some pair of P_m."""
    phi = phi_star(p)
    for j, mp in pm_angles(m):
        if abs(phi - j * math.pi / mp) <= tol:
            return j, mp
    return None


def wavelike_lambda(p: float, q: float) -> float:
    """Multiplier of the canonical wavelike curve with curvature ``2q cn_p``.

    Obtained by substituting ``k = 2q cn_p`` into the planar curvature
    equation: ``2^(p-1) (p-1) q^(p-2) (2q^2 - 1)``.  It reduces to the
    flat-core value at ``q = 1`` and to ``2(2q^2 - 1)`` at ``p = 2``.  Tests
    check it against least-squares estimates.
    """
    p = _check_p(p)
    q = _check_q(q)
    return 2.0 ** (p - 1.0) * (p - 1.0) * q ** (p - 2.0) * (2.0 * q * q - 1.0)


def flat_core_lambda(p: float) -> float:
    """Multiplier of canonical flat-core curves (``A_{p,lambda} = 1``)."""
    return 2.0 ** (p - 1.0) * (p - 1.0)
