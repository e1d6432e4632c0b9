"""Closed-form test maps and Schwarz-Christoffel constructions.

Catalog maps are stored in the disk form ``f(z) = z + a_2 z^2 + ...``; the
exterior form is ``F(z) = 1/f(1/z)`` on ``|z| > 1``.  Extensions are given for
``F`` into the unit disk.

``known_k`` is the Teichmueller norm listed for the map.  When
``root_invariant`` is set it is attained by an extension of ``F`` into the
disk that keeps ``F(0) = 0``; such extensions lift through ``z -> z^p``, so
``known_k`` bounds the Grunsky norm of every root transform.  The translation
``F(z) = z - t`` is conformal (norm 0) but moves the origin, and its root
transforms have positive Grunsky norm.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DomainError, IntegrationError, NoRootError, SingularityError
from .grunsky import grunsky_matrix, grunsky_norm
from .series import MapClass, TaylorMap
from .transforms import (
    LOWER_HALF_PLANE_FROM_DISK,
    Domain,
    Mobius,
    SchwarzianField,
    bnorm,
    map_from_schwarzian,
    schwarzian_compose,
)

__all__ = [
    "EQUAL_TO_K",
    "STRICTLY_LESS",
    "ModelMap",
    "catalog",
    "get_model",
    "PolygonSpec",
    "polygon_schwarzian",
    "sc_map_eval",
    "r0_root",
    "PolygonReport",
    "polygon_extremality_report",
]

EQUAL_TO_K = "equal-to-k"
STRICTLY_LESS = "strictly-less"


@dataclass(frozen=True)
class ModelMap:
    """A test map with closed forms.

    ``kappa_p(p)`` returns a number, one of the flags :data:`EQUAL_TO_K` /
    :data:`STRICTLY_LESS`, or ``None`` when nothing is known.
    """

    name: str
    params: dict
    evaluator: Callable
    coefficient: Callable  # n -> a_n
    known_k: Optional[float] = None
    kappa_p: Callable = field(default=lambda p: None)
    extension: Optional[Callable] = None  # F on |z| < 1
    extension_mu: Optional[Callable] = None  # Beltrami coefficient of the extension
    root_invariant: bool = True
    note: str = ""

    def taylor(self, N: int) -> TaylorMap:
        """Disk-form coefficients ``a_1 .. a_N``."""
        a = np.array([self.coefficient(n) for n in range(1, N + 1)], dtype=complex)
        return TaylorMap.disk(a)

    def exterior(self, z):
        z = np.asarray(z, dtype=complex)
        return 1.0 / self.evaluator(1.0 / z)

    def exterior_mu(self, z):
        """Beltrami coefficient on ``|z| > 1`` of the disk form ``f = 1/F(1/z)``.

        ``mu_f(z) = mu_F(1/z) z^2 / conj(z)^2``; zero on the closed unit disk.
        """
        if self.extension_mu is None:
            raise ValueError(f"{self.name} has no explicit extension")
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        # margin keeps 1/z strictly inside the disk despite rounding on |z| = 1
        m = np.abs(z) > 1 + 1e-12
        zm = z[m]
        out[m] = np.asarray(self.extension_mu(1 / zm), dtype=complex) * (zm / np.conj(zm)) ** 2
        return out

    def extension_dilatation(self, samples: int = 4096, seed: int = 0) -> Optional[float]:
        """``max |mu|`` of the explicit extension on random points of the disk."""
        if self.extension_mu is None:
            return None
        rng = np.random.default_rng(seed)
        r = np.sqrt(rng.uniform(0, 1, samples))
        z = r * np.exp(2j * np.pi * rng.uniform(0, 1, samples))
        return float(np.max(np.abs(self.extension_mu(z))))


def _koebe(t: float) -> ModelMap:
    t = float(t)

    def f(z):
        return z / (1 + t * z) ** 2

    def ext(z):
        # F(z) = z + 2t + t^2/z outside; (sqrt z + t conj(sqrt z))^2 inside
        z = np.asarray(z, dtype=complex)
        return z + 2 * t * np.abs(z) + t * t * np.conj(z)

    def mu(z):
        z = np.asarray(z, dtype=complex)
        return t * np.exp(1j * np.angle(z))

    def kappa_p(p):
        if p == 1:
            return t * t
        return EQUAL_TO_K if p % 2 == 0 else STRICTLY_LESS

    return ModelMap(
        name="koebe_t", params={"t": t}, evaluator=f,
        coefficient=lambda n: n * (-t) ** (n - 1),
        known_k=abs(t), kappa_p=kappa_p, extension=ext, extension_mu=mu,
        note="kappa_p = |t| for even p and < |t| for odd p >= 3",
    )


def _mobius(t: float) -> ModelMap:
    t = float(t)
    return ModelMap(
        name="mobius_t", params={"t": t}, evaluator=lambda z: z / (1 - t * z),
        coefficient=lambda n: t ** (n - 1), known_k=0.0,
        kappa_p=lambda p: 0.0 if p == 1 else None,
        extension=lambda z: np.asarray(z, dtype=complex) - t,
        extension_mu=lambda z: np.zeros(np.shape(z), dtype=complex),
        root_invariant=False,
        note="F(z) = z - t moves the origin; root transforms are not conformal",
    )


def _exterior_diag(t: float) -> ModelMap:
    t = float(t)

    def coefficient(n):
        return (-t) ** ((n - 1) // 2) if n % 2 else 0.0

    return ModelMap(
        name="exterior_diag_t", params={"t": t}, evaluator=lambda z: z / (1 + t * z * z),
        coefficient=coefficient, known_k=abs(t),
        kappa_p=lambda p: abs(t) if p == 1 else EQUAL_TO_K,
        extension=lambda z: np.asarray(z, dtype=complex) + t * np.conj(z),
        extension_mu=lambda z: np.full(np.shape(z), t, dtype=complex),
        note="F(z) = z + t/z; Grunsky matrix diag(t^m)",
    )


def radial_stretch_mu(alpha: float, inner: float = 1.0, outer: float = 2.0) -> Callable:
    """``mu = (alpha/(alpha+2)) z/conj(z)`` on ``inner < |z| < outer``."""

    def mu(z):
        z = np.asarray(z, dtype=complex)
        az = np.abs(z)
        ring = (az > inner) & (az < outer)
        phase = np.exp(2j * np.angle(z))
        return np.where(ring, alpha / (alpha + 2) * phase, 0)

    return mu


def radial_stretch_solution(alpha: float, inner: float = 1.0, outer: float = 2.0) -> Callable:
    """Hydrodynamically normalized solution for :func:`radial_stretch_mu`."""
    c = outer ** (-alpha)
    s = inner ** (-alpha)

    def w(z):
        z = np.asarray(z, dtype=complex)
        az = np.abs(z)
        mid = c * z * az ** alpha
        return np.where(az <= inner, c * z / s, np.where(az < outer, mid, z))

    return w


def _radial(alpha: float) -> ModelMap:
    alpha = float(alpha)
    k = alpha / (alpha + 2)
    return ModelMap(
        name="radial_stretch_alpha", params={"alpha": alpha}, evaluator=lambda z: np.asarray(z, complex),
        coefficient=lambda n: 1.0 if n == 1 else 0.0, known_k=None,
        kappa_p=lambda p: 0.0,
        extension=radial_stretch_solution(alpha),
        extension_mu=radial_stretch_mu(alpha),
        note=f"solver validation field; |mu| = {k:.6g} on 1 < |z| < 2",
    )


_BUILDERS = {
    "koebe_t": (_koebe, "t", 0.5),
    "mobius_t": (_mobius, "t", 0.5),
    "exterior_diag_t": (_exterior_diag, "t", 0.5),
    "radial_stretch_alpha": (_radial, "alpha", 0.5),
}


def catalog(t: float = 0.5, alpha: float = 0.5) -> list[ModelMap]:
    """All catalog maps at the given parameters."""
    out = []
    for name, (build, key, _) in _BUILDERS.items():
        out.append(build(alpha if key == "alpha" else t))
    return out


def get_model(name: str, **params) -> ModelMap:
    if name not in _BUILDERS:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(_BUILDERS)}")
    build, key, default = _BUILDERS[name]
    return build(params.get(key, default))


# -- Schwarz-Christoffel -------------------------------------------------------

@dataclass(frozen=True)
class PolygonSpec:
    """Prevertices ``a_j`` (increasing reals) with exponents ``alpha_j - 1``.

    ``alpha_j`` in ``(1, 2)`` describes a convex polygon with its last vertex
    at infinity.  ``strict=False`` admits ``alpha_j = 1`` for degenerate test
    cases.
    """

    alphas: tuple
    prevertices: tuple
    d0: complex = 0j
    d1: complex = 1 + 0j
    strict: bool = True

    def __post_init__(self):
        a = tuple(float(v) for v in self.alphas)
        p = tuple(float(v) for v in self.prevertices)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "prevertices", p)
        object.__setattr__(self, "d0", complex(self.d0))
        object.__setattr__(self, "d1", complex(self.d1))
        if len(a) != len(p) or not a:
            raise ValueError("need one prevertex per finite vertex")
        for x in a:
            ok = (1 < x < 2) if self.strict else (1 <= x < 2)
            if not ok:
                raise DomainError(f"alpha = {x} outside (1, 2)")
        if any(q <= r for r, q in zip(p, p[1:])):
            raise DomainError("prevertices must be strictly increasing")

    @property
    def n(self) -> int:
        """Vertex count, the vertex at infinity included."""
        return len(self.alphas) + 1

    @property
    def exponents(self) -> np.ndarray:
        return np.asarray(self.alphas) - 1.0

    def to_json(self) -> str:
        return json.dumps({
            "alphas": list(self.alphas),
            "prevertices": list(self.prevertices),
            "d0": [self.d0.real, self.d0.imag],
            "d1": [self.d1.real, self.d1.imag],
        })

    @classmethod
    def from_json(cls, text: str, strict: bool = True) -> "PolygonSpec":
        data = json.loads(text)
        d0 = complex(*data.get("d0", [0.0, 0.0]))
        d1 = complex(*data.get("d1", [1.0, 0.0]))
        return cls(tuple(data["alphas"]), tuple(data["prevertices"]), d0, d1, strict)


def _check_prevertices(P: PolygonSpec, z):
    a = np.asarray(P.prevertices)
    scale = 1.0 + np.max(np.abs(a))
    hit = np.abs(z[..., None] - a).min(axis=-1) <= 1e-14 * scale
    if np.any(hit):
        raise SingularityError(f"evaluation at a prevertex: {z[hit].ravel()[0]}")


def polygon_schwarzian(P: PolygonSpec, t: float = 1.0) -> SchwarzianField:
    """``t b' - b^2/2`` with ``b = f''/f' = sum (alpha_j - 1)/(z - a_j)``.

    At ``t = 1`` this is the Schwarzian of the Schwarz-Christoffel map:
    ``sum_j C_j/(z-a_j)^2 - sum_{j<l} C_jl/((z-a_j)(z-a_l))`` with
    ``C_j = -(alpha_j - 1) - (alpha_j - 1)^2/2`` and
    ``C_jl = (alpha_j - 1)(alpha_l - 1)``; each unordered pair is counted once.
    """
    d = P.exponents
    a = np.asarray(P.prevertices)

    def ev(z):
        z = np.asarray(z, dtype=complex)
        _check_prevertices(P, z)
        inv = 1.0 / (z[..., None] - a)
        b = (d * inv).sum(axis=-1)
        db = -(d * inv ** 2).sum(axis=-1)
        return t * db - 0.5 * b * b

    return SchwarzianField(Domain.LOWER_HALF_PLANE, ev)


def _lower_power(u, e):
    """``u**e`` with ``arg u`` in ``[-pi, 0]`` (continuous on the closed lower half-plane)."""
    arg = np.angle(u)
    arg = np.where(arg > 0, arg - 2 * np.pi, arg)
    return np.exp(e * (np.log(np.abs(u)) + 1j * arg))


def sc_integrand(P: PolygonSpec, xi):
    xi = np.asarray(xi, dtype=complex)
    out = np.full(xi.shape, P.d1, dtype=complex)
    for aj, e in zip(P.prevertices, P.exponents):
        out = out * _lower_power(xi - aj, e)
    return out


def sc_map_eval(P: PolygonSpec, z: complex, epsrel: float = 1e-13) -> complex:
    """Schwarz-Christoffel integral along the segment ``[0, z]`` plus ``d0``."""
    z = complex(z)
    if z.imag > 0:
        raise DomainError("z must lie in the closed lower half-plane")
    if z == 0:
        return P.d0
    for aj in P.prevertices:
        # a prevertex on the segment, other than its starting point 0
        s = aj / z if z.imag == 0 else None
        if s is not None and 0 < s.real <= 1:
            raise SingularityError(f"integration path meets the prevertex {aj}")

    def g(s):
        return complex(sc_integrand(P, s * z)) * z

    val, err = integrate.quad(g, 0.0, 1.0, complex_func=True, epsabs=0.0,
                              epsrel=epsrel, limit=400)
    if not np.isfinite(val):
        raise IntegrationError("Schwarz-Christoffel quadrature diverged", location=z)
    return P.d0 + val


def r0_root(P: PolygonSpec) -> float:
    """Positive root of ``A r^2 - B r - 2 = 0``.

    ``A = (1/2)[sum d_j^2 + sum_{j,l} d_j d_l]`` (all ordered pairs, ``j = l``
    included) and ``B = sum d_j`` with ``d_j = alpha_j - 1``.
    """
    d = P.exponents
    A = 0.5 * (np.sum(d * d) + np.sum(d) ** 2)
    B = float(np.sum(d))
    if not A > 0:
        raise NoRootError("leading coefficient vanishes; no positive root")
    return float((B + math.sqrt(B * B + 8 * A)) / (2 * A))


# -- harmonic-coefficient extremality experiment ---------------------------------

@dataclass
class PolygonReport:
    r0: float
    r: float
    bnorm_s: float  # ||S_{f_n, r0}|| on the lower half-plane
    predicted: float  # (r/2) ||S_{f_n, r0}||
    kappa: float  # Grunsky norm of the reconstructed map
    N: int
    tail: float  # |a_{2N+1}| R0^{2N+1}, a truncation diagnostic
    violation: bool  # r ||S|| >= 1/2 (outside the Ahlfors-Weill ball)

    @property
    def relative_gap(self) -> float:
        return abs(self.kappa - self.predicted) / max(self.predicted, 1e-300)

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["relative_gap"] = self.relative_gap
        return d


def disk_taylor_from_map(w: Callable, count: int, radius: float = 0.95,
                         samples: int | None = None) -> np.ndarray:
    """Taylor coefficients ``c_0 .. c_count`` of a holomorphic ``w`` on the unit disk.

    Raises :class:`IntegrationError` when ``w`` has a pole inside ``|z| < radius``
    (detected by the winding number of ``1/w'``, which is ``eta2^2``).
    """
    K = samples or max(1024, 4 * (count + 1))
    theta = 2 * np.pi * np.arange(K) / K
    zs = radius * np.exp(1j * theta)
    vals = np.asarray(w(zs), dtype=complex)
    c = np.fft.fft(vals) / K
    k = np.arange(count + 1)
    out = c[k] / radius ** k
    neg = np.abs(c[K - count:]) * radius ** -k[1:][::-1]
    if neg.size and np.max(neg) > 1e-6 * max(np.max(np.abs(out)), 1e-300):
        raise IntegrationError("reconstructed map has a pole inside the sampling circle", location=0j)
    return out


def polygon_extremality_report(P: PolygonSpec, r_fraction: float = 0.1, N: int = 64,
                               sigma: Mobius = LOWER_HALF_PLANE_FROM_DISK,
                               radius: float = 0.95, tol: float = 1e-12) -> PolygonReport:
    """Compare the Grunsky norm of ``w_r o sigma`` with ``(r/2) ||S_{f_n, r0}||``.

    ``w_r`` is rebuilt from ``r S_{f_n, r0}`` by integrating the Schwarzian
    ODE after transplanting to the unit disk with ``sigma`` (disk onto the
    lower half-plane).  Taylor coefficients up to ``2N + 1`` come from an FFT
    on ``|z| = radius``.
    """
    r0 = r0_root(P)
    r = r_fraction * r0
    S = polygon_schwarzian(P, t=r0)
    nrm = bnorm(S)
    phi = S.scaled(r)
    phi_disk = schwarzian_compose(phi, sigma, Domain.UNIT_DISK)
    w = map_from_schwarzian(phi_disk, base=0j, tol=tol)
    count = 2 * N + 1
    a = disk_taylor_from_map(w, count, radius)
    if abs(a[0]) > 1e-8 or abs(a[1] - 1) > 1e-8:
        raise IntegrationError("reconstructed map lost its normalization", location=0j)
    a[0], a[1] = 0.0, 1.0
    f = TaylorMap(MapClass.DISK_S, a)
    kappa = grunsky_norm(grunsky_matrix(f, N))
    tail = float(abs(a[-1]) * radius ** count)
    return PolygonReport(r0, r, nrm, 0.5 * r * nrm, kappa, N, tail, r * nrm >= 0.5)
