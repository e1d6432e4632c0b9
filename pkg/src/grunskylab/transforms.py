"""Root transform, pullbacks, truncation, homotopy and Schwarzian calculus.

Also reconstructs a map from its Schwarzian (via ``eta'' + (phi/2) eta = 0``)
and builds the harmonic (Ahlfors-Weill) Beltrami coefficient of a
half-plane Schwarzian.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .errors import (DomainError, HypothesisViolation, IntegrationError,
                     SingularityError, UnboundedNormError)
from .series import MapClass, TaylorMap, series_mul, series_pow

__all__ = [
    "Domain",
    "Mobius",
    "SchwarzianField",
    "QuadraticDifferential",
    "HarmonicBeltrami",
    "SchwarzianMap",
    "root_transform",
    "pullback",
    "truncate_beltrami",
    "homotopy",
    "schwarzian",
    "contour_derivatives",
    "bnorm",
    "bnorm_argmax",
    "map_from_schwarzian",
    "schwarzian_compose",
    "ahlfors_weill",
    "LOWER_HALF_PLANE_FROM_DISK",
]


class Domain(enum.Enum):
    UNIT_DISK = "UnitDisk"
    EXTERIOR_DISK = "ExteriorDisk"
    LOWER_HALF_PLANE = "LowerHalfPlane"


@dataclass(frozen=True)
class Mobius:
    """``z -> (a z + b) / (c z + d)``."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * self.d - self.b * self.c) / (self.c * z + self.d) ** 2

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)


IDENTITY = Mobius(1, 0, 0, 1)
# w -> -i (1 + w) / (1 - w) maps the unit disk onto {Im z < 0}, 0 -> -i.
LOWER_HALF_PLANE_FROM_DISK = Mobius(-1j, -1j, -1, 1)
INVERSION = Mobius(0, 1, 1, 0)

_BASE_POINTS = {Domain.UNIT_DISK: 0j, Domain.LOWER_HALF_PLANE: -1j}


@dataclass
class SchwarzianField:
    """Holomorphic function on ``domain`` (a Schwarzian or quadratic differential).

    ``func`` is a vectorized evaluator; ``series`` optionally holds Taylor
    coefficients at the origin when the field came from a truncated map.
    """

    domain: Domain
    func: Callable
    series: Optional[np.ndarray] = None

    def __call__(self, z):
        return self.func(np.asarray(z, dtype=complex))

    def scaled(self, factor: complex) -> "SchwarzianField":
        series = None if self.series is None else factor * self.series
        return SchwarzianField(self.domain, lambda z, f=self.func: factor * f(z), series)


# -- root transform and pullbacks -------------------------------------------

def root_transform(f: TaylorMap, p: int, n: int | None = None) -> TaylorMap:
    """``f_p(z) = f(z^p)^(1/p) = z (g(z^p))^(1/p)`` with ``g(w) = f(w)/w``.

    A truncated ``f`` of degree ``N`` fixes ``f_p`` up to degree ``p(N-1)+1``.
    Only exponents ``1 mod p`` are nonzero; the ``z^(p+1)`` coefficient is
    ``a_2 / p``.
    """
    if f.kind is not MapClass.DISK_S:
        raise ValueError("root_transform expects a DiskS map")
    if p < 1:
        raise ValueError("p must be >= 1")
    if n is None:
        n = p * (f.N - 1) + 1
    m = (n - 1) // p
    g = f.padded(m + 1)[1:]
    h = series_pow(g, 1.0 / p, D=m)
    out = np.zeros(n + 1, dtype=complex)
    out[1::p] = h[: len(out[1::p])]
    exact = f.exact and np.allclose(g[1:], 0)
    return TaylorMap(MapClass.DISK_S, out, exact=exact)


def pullback(field_fn: Callable, p: int, kind: str = "beltrami") -> Callable:
    """Pull a field on the exterior disk back by ``z -> z^p``.

    ``kind="beltrami"``: ``mu(z^p) * conj(z)^(p-1) / z^(p-1)``.
    ``kind="quadratic"``: ``psi(z^p) * p^2 * z^(2p-2)``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if kind == "beltrami":
        def pulled(z):
            z = np.asarray(z, dtype=complex)
            zp1 = z ** (p - 1)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(zp1 == 0, 1.0, np.conj(zp1) / np.where(zp1 == 0, 1, zp1))
            return field_fn(z ** p) * ratio
    elif kind == "quadratic":
        def pulled(z):
            z = np.asarray(z, dtype=complex)
            return field_fn(z ** p) * p ** 2 * z ** (2 * p - 2)
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    return pulled


def truncate_beltrami(mu: Callable, rho: float) -> Callable:
    """``mu_rho(z) = mu(rho z)`` for ``|z| > 1`` and 0 inside the unit disk.

    ``mu`` must already vanish on the closed unit disk, so the result
    vanishes wherever ``|rho z| <= 1``.
    """
    if not 0 < rho < 1:
        raise DomainError("rho must lie in (0, 1)")

    def truncated(z):
        z = np.asarray(z, dtype=complex)
        out = np.asarray(mu(rho * z), dtype=complex) * (np.abs(z) > 1)
        return np.where(np.abs(rho * z) > 1, out, 0)

    return truncated


def homotopy(f, r: float):
    """``f_r(z) = f(r z)/r`` on maps; ``r^2 S(r z)`` on Schwarzian fields."""
    if not 0 < r <= 1:
        raise DomainError("r must lie in (0, 1]")
    if isinstance(f, TaylorMap):
        if f.kind is not MapClass.DISK_S:
            raise ValueError("homotopy is defined for DiskS maps")
        k = np.arange(f.coeffs.size)
        return TaylorMap(f.kind, f.coeffs * r ** (k - 1.0) * (k > 0), exact=f.exact)
    if isinstance(f, SchwarzianField):
        series = None
        if f.series is not None:
            series = f.series * r ** (np.arange(f.series.size) + 2.0)
        return SchwarzianField(f.domain, lambda z, g=f.func: r ** 2 * g(r * z), series)
    raise TypeError("homotopy expects a TaylorMap or SchwarzianField")


# -- Schwarzian derivative --------------------------------------------------

def contour_derivatives(f: Callable, z, order: int = 3, radius: float = 1e-2, points: int = 64):
    """Derivatives ``f^(k)(z)``, ``k = 0..order``, from the Cauchy integral on a small circle."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    theta = 2 * np.pi * np.arange(points) / points
    ring = radius * np.exp(1j * theta)
    vals = np.asarray(f(z[:, None] + ring[None, :]), dtype=complex)
    coef = np.fft.fft(vals, axis=1) / points
    k = np.arange(order + 1)
    fact = np.array([math.factorial(int(j)) for j in k], dtype=float)
    return coef[:, : order + 1] * fact / radius ** k


def _series_schwarzian(f: TaylorMap):
    N = f.N
    if N < 3:
        return np.zeros(1, dtype=complex)
    a = f.coeffs
    k = np.arange(a.size)
    d1 = (k * a)[1:]  # f'
    d2 = (np.arange(d1.size) * d1)[1:]  # f''
    inv = series_pow(d1[: N - 1], -1.0, D=N - 2)
    b = series_mul(d2[: N - 1], inv)  # f''/f', degree N-2
    db = (np.arange(b.size) * b)[1:]  # degree N-3
    return db - 0.5 * series_mul(b, b)[: db.size]


def schwarzian(f, domain: Domain = Domain.UNIT_DISK, radius: float = 1e-2) -> SchwarzianField:
    """Schwarzian ``(f''/f')' - (f''/f')^2 / 2``.

    TaylorMap input gives a series-backed field (degree ``N-3``); a callable
    is differentiated by Cauchy integrals on circles of the given ``radius``.
    """
    if isinstance(f, SchwarzianField):
        return f
    if isinstance(f, TaylorMap):
        if f.kind is not MapClass.DISK_S:
            raise ValueError("series Schwarzian is implemented for DiskS maps")
        s = _series_schwarzian(f)

        def ev(z, s=s):
            return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), s)

        return SchwarzianField(domain, ev, s)

    def ev_callable(z):
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        d = contour_derivatives(f, z.ravel(), order=3, radius=radius)
        d1, d2, d3 = d[:, 1], d[:, 2], d[:, 3]
        if np.any(np.abs(d1) < 1e-14):
            bad = z.ravel()[np.argmin(np.abs(d1))]
            raise SingularityError(f"f' vanishes at {bad}")
        out = d3 / d1 - 1.5 * (d2 / d1) ** 2
        return out.reshape(shape)

    return SchwarzianField(domain, ev_callable)


def schwarzian_compose(phi: SchwarzianField, sigma: Mobius,
                       domain: Domain = Domain.UNIT_DISK) -> SchwarzianField:
    """Transplant ``phi`` by a Moebius map: ``(phi o sigma) * sigma'^2`` on ``domain``."""

    def ev(z):
        z = np.asarray(z, dtype=complex)
        return phi(sigma(z)) * sigma.derivative(z) ** 2

    return SchwarzianField(domain, ev)


def _to_disk(phi: SchwarzianField) -> Callable:
    if phi.domain is Domain.UNIT_DISK:
        return phi.func
    if phi.domain is Domain.LOWER_HALF_PLANE:
        return schwarzian_compose(phi, LOWER_HALF_PLANE_FROM_DISK).func
    return schwarzian_compose(phi, INVERSION).func


# -- hyperbolic sup norm ----------------------------------------------------

@dataclass
class _Candidate:
    value: float
    w: complex


def _weighted(g, w):
    w = np.asarray(w, dtype=complex)
    with np.errstate(all="ignore"):
        val = (1 - np.abs(w) ** 2) ** 2 * np.abs(g(w))
    return np.where(np.isfinite(val), val, np.inf)


def _ring_scan(g, n_theta, levels, with_center):
    radii = np.concatenate([np.linspace(0.0, 0.5, 9)[1:], 1 - 2.0 ** -np.arange(2, levels + 1)])
    ring_max = []
    best = _Candidate(-np.inf, 0j)
    if with_center:
        best = _Candidate(float(_weighted(g, np.array([0j]))[0]), 0j)
    cands = [best] if with_center else []
    for j, r in enumerate(radii):
        # hyperbolic spacing: finer angles near the boundary, capped
        m = int(min(n_theta * max(1.0, 0.25 / (1 - r)), 1 << 15))
        theta = 2 * np.pi * (np.arange(m) + 0.5 * (j % 2)) / m
        w = r * np.exp(1j * theta)
        vals = _weighted(g, w)
        i = int(np.argmax(vals))
        ring_max.append(float(vals[i]))
        cands.append(_Candidate(float(vals[i]), complex(w[i])))
        if vals[i] > best.value:
            best = _Candidate(float(vals[i]), complex(w[i]))
    return best, np.array(ring_max), cands


def _polish(g, cand: _Candidate) -> _Candidate:
    w0 = cand.w
    # coordinates: s = atanh(|w|) (hyperbolic radius) and angle
    s0 = math.atanh(min(abs(w0), 1 - 1e-15))
    t0 = float(np.angle(w0))

    def neg(v):
        w = math.tanh(abs(v[0])) * np.exp(1j * v[1])
        return -float(_weighted(g, np.array([w]))[0])

    res = optimize.minimize(neg, [s0, t0], method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
    if -res.fun > cand.value:
        return _Candidate(-float(res.fun), complex(math.tanh(abs(res.x[0])) * np.exp(1j * res.x[1])))
    return cand


def bnorm_argmax(phi: SchwarzianField, rtol: float = 1e-4, levels: int = 24):
    """Hyperbolic sup norm and a maximizing point in ``phi``'s own domain.

    The field is transplanted to the unit disk (the weight is Moebius
    invariant) and scanned on rings ``1 - 2^-j``; the angular grid is doubled
    until the maximum changes by less than ``rtol``, then the best candidates
    are polished by a local search.
    """
    g = _to_disk(phi)
    n_theta = 64
    prev = None
    for _ in range(8):
        best, ring_max, cands = _ring_scan(g, n_theta, levels,
                                           phi.domain is not Domain.EXTERIOR_DISK)
        if not np.isfinite(best.value):
            raise UnboundedNormError("field is not finite on the sampling grid")
        if prev is not None and abs(best.value - prev) <= rtol * max(best.value, 1e-300):
            break
        prev = best.value
        n_theta *= 2
    # staggered rings can alternate, so test the running maximum
    tail = np.maximum.accumulate(ring_max)[-7:]
    if tail[-1] > 1.5 * tail[0] and tail[-1] > (1 + 1e-3) * tail[-3]:
        raise UnboundedNormError("weighted modulus keeps growing toward the boundary")
    top = sorted(cands, key=lambda c: -c.value)[:6]
    for c in top:
        best = max(best, _polish(g, c), key=lambda c: c.value)
    w = best.w
    if phi.domain is Domain.LOWER_HALF_PLANE:
        z = complex(LOWER_HALF_PLANE_FROM_DISK(w))
    elif phi.domain is Domain.EXTERIOR_DISK:
        z = complex(np.inf) if w == 0 else 1 / w
    else:
        z = w
    return best.value, z


def bnorm(phi: SchwarzianField, rtol: float = 1e-4) -> float:
    """``sup (1-|z|^2)^2 |phi|`` on the disk, ``sup |z - conj z|^2 |phi|`` on the half-plane."""
    return bnorm_argmax(phi, rtol)[0]


# -- map from Schwarzian ----------------------------------------------------

def _rk4(rhs, s, y, h):
    k1 = rhs(s, y)
    k2 = rhs(s + h / 2, y + h / 2 * k1)
    k3 = rhs(s + h / 2, y + h / 2 * k2)
    k4 = rhs(s + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class SchwarzianMap:
    """Evaluator of ``w = eta1 / eta2`` where ``eta'' + (phi/2) eta = 0``.

    Normalized by ``w(z0) = 0, w'(z0) = 1, w''(z0) = 0``; integration runs
    along straight segments from ``z0`` with RK4 and step doubling.
    """

    phi: Callable
    z0: complex = 0j
    tol: float = 1e-11
    max_steps: int = 200_000
    _cache: dict = field(default_factory=dict, repr=False)

    def _solve(self, targets):
        targets = np.asarray(targets, dtype=complex).ravel()
        delta = targets - self.z0
        y = np.zeros((4, targets.size), dtype=complex)
        y[1] = 1.0  # eta1' (eta1 = 0)
        y[2] = 1.0  # eta2 (eta2' = 0)

        def rhs(s, y):
            q = 0.5 * self.phi(self.z0 + s * delta)
            return np.stack([delta * y[1], -delta * q * y[0], delta * y[3], -delta * q * y[2]])

        s, h = 0.0, 1.0 / 32
        steps = 0
        min_eta2 = np.abs(y[2]).copy()
        where_min = np.full(targets.size, self.z0, dtype=complex)
        while s < 1.0:
            h = min(h, 1.0 - s)
            full = _rk4(rhs, s, y, h)
            half = _rk4(rhs, s + h / 2, _rk4(rhs, s, y, h / 2), h / 2)
            scale = 1.0 + np.abs(half)
            err = float(np.max(np.abs(half - full) / scale)) / 15.0
            if not np.isfinite(err):
                raise IntegrationError("non-finite state during integration",
                                       location=complex(self.z0 + s * delta[0]))
            if err <= self.tol or h < 1e-12:
                if h < 1e-12 and err > self.tol:
                    raise IntegrationError("step size underflow", location=self.z0 + s * delta)
                y = half + (half - full) / 15.0
                s += h
                a = np.abs(y[2])
                lower = a < min_eta2
                min_eta2 = np.where(lower, a, min_eta2)
                where_min = np.where(lower, self.z0 + s * delta, where_min)
            steps += 1
            if steps > self.max_steps:
                raise IntegrationError("step control did not converge")
            h *= min(2.0, max(0.2, 0.9 * (self.tol / max(err, 1e-300)) ** 0.2))
        if np.any(min_eta2 < 1e-12):
            i = int(np.argmin(min_eta2))
            raise IntegrationError("eta2 vanishes on the path (pole of w)", location=complex(where_min[i]))
        return y

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        y = self._solve(z)
        return (y[0] / y[2]).reshape(z.shape)

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        y = self._solve(z)
        # Wronskian eta1' eta2 - eta1 eta2' is identically 1
        return (1.0 / y[2] ** 2).reshape(z.shape)


def map_from_schwarzian(phi: SchwarzianField, base: complex | None = None,
                        tol: float = 1e-11) -> SchwarzianMap:
    """Map ``w`` with ``S_w = phi`` on ``phi.domain``, normalized at the base point."""
    if base is None:
        if phi.domain not in _BASE_POINTS:
            raise ValueError(f"no default base point for {phi.domain}")
        base = _BASE_POINTS[phi.domain]
    return SchwarzianMap(phi.func, complex(base), tol)


# -- quadratic differentials on the exterior disk -----------------------------

@dataclass(frozen=True)
class QuadraticDifferential:
    """``psi = omega^2`` on ``|z| > 1`` with ``omega = pi^(-1/2) sum sqrt(n) x_n z^(-n-1)``.

    Expanded: ``psi(z) = (1/pi) sum_{m,n>=1} sqrt(mn) x_m x_n z^(-(m+n+2))``,
    and ``||psi||_{L1(|z|>1)} = ||x||_2^2``.
    """

    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=complex))

    def omega(self, z):
        z = np.asarray(z, dtype=complex)
        n = np.arange(1, self.x.size + 1)
        u = 1 / z
        return (u[..., None] ** (n + 1) * (np.sqrt(n) * self.x)).sum(axis=-1) / math.sqrt(math.pi)

    def __call__(self, z):
        return self.omega(z) ** 2

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.x) ** 2))


# -- Ahlfors-Weill ------------------------------------------------------------

@dataclass
class HarmonicBeltrami:
    """Harmonic coefficient ``mu(z) = -2 y^2 phi(conj z)`` on the upper half-plane."""

    phi: SchwarzianField
    phi_bnorm: float
    violation: bool

    @property
    def sup_modulus(self) -> float:
        # sup 2 y^2 |phi| = half the half-plane B-norm
        return 0.5 * self.phi_bnorm

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return -2 * z.imag ** 2 * self.phi(np.conj(z))


def ahlfors_weill(phi: SchwarzianField, strict: bool = False) -> HarmonicBeltrami:
    """Harmonic Beltrami coefficient of a lower-half-plane Schwarzian.

    Returned even when ``||phi|| >= 1/2`` with ``violation`` set, unless
    ``strict`` asks for :class:`HypothesisViolation`.
    """
    if phi.domain is not Domain.LOWER_HALF_PLANE:
        raise ValueError("ahlfors_weill expects a field on the lower half-plane")
    nrm = bnorm(phi)
    violation = nrm >= 0.5
    if violation and strict:
        raise HypothesisViolation(f"||phi||_B = {nrm:.6g} >= 1/2")
    return HarmonicBeltrami(phi, nrm, violation)
