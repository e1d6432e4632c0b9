"""Truncated power series in one and two variables.

Series are plain complex numpy arrays: ``s[k]`` is the coefficient of
``z**k`` and ``s[j, k]`` the coefficient of ``z**j * w**k``.  The array shape
is the (box) truncation; an optional total-degree bound ``D`` zeroes every
coefficient with ``j + k > D``.  Both truncations are closed under
multiplication, so all recursions below are exact within them.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import NormalizationError, TruncationError

__all__ = [
    "MapClass",
    "TaylorMap",
    "series_mul",
    "series_log",
    "series_exp",
    "series_pow",
    "compose_power",
    "invert_to_sigma",
]

_UNIT_TOL = 1e-12


class MapClass(enum.Enum):
    DISK_S = "DiskS"
    EXTERIOR_SIGMA = "ExteriorSigma"


@dataclass(frozen=True)
class TaylorMap:
    """Coefficients of a normalized univalent map.

    For ``DISK_S`` the map is ``f(z) = z + a_2 z^2 + ...`` and ``coeffs[k]`` is
    ``a_k`` (so ``coeffs[0] == 0`` and ``coeffs[1] == 1``).  For
    ``EXTERIOR_SIGMA`` the map is ``F(z) = z + b_0 + b_1/z + ...`` and
    ``coeffs[k]`` is ``b_k``.

    ``exact`` marks a polynomial/Laurent polynomial whose omitted coefficients
    are exactly zero; otherwise the vector is a truncation and operations that
    need more coefficients raise :class:`TruncationError`.
    """

    kind: MapClass
    coeffs: np.ndarray
    exact: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if c.ndim != 1:
            raise ValueError("coefficient vector must be one-dimensional")
        if self.kind is MapClass.DISK_S:
            if c.size < 2:
                raise ValueError("DiskS map needs at least a_1")
            if abs(c[0]) > _UNIT_TOL or abs(c[1] - 1) > _UNIT_TOL:
                raise NormalizationError("DiskS map must have f(0) = 0, f'(0) = 1")
        elif c.size < 1:
            raise ValueError("ExteriorSigma map needs at least b_0")

    @classmethod
    def disk(cls, coeffs, exact=False):
        """Build from ``[a_1, a_2, ..., a_N]``."""
        return cls(MapClass.DISK_S, np.concatenate([[0.0], np.asarray(coeffs, complex)]), exact)

    @classmethod
    def sigma(cls, coeffs, exact=False):
        """Build from ``[b_0, b_1, ..., b_N]``."""
        return cls(MapClass.EXTERIOR_SIGMA, coeffs, exact)

    @property
    def N(self) -> int:
        return self.coeffs.size - 1

    def coefficient(self, k: int) -> complex:
        if k <= self.N:
            return complex(self.coeffs[k])
        if self.exact:
            return 0j
        raise TruncationError(f"coefficient {k} not available (truncation N={self.N})")

    def padded(self, n: int) -> np.ndarray:
        """Coefficient vector of length ``n + 1``; raises if that needs unknown terms."""
        if n > self.N and not self.exact:
            raise TruncationError(f"need coefficients up to {n}, have N={self.N}")
        out = np.zeros(n + 1, dtype=complex)
        m = min(n, self.N) + 1
        out[:m] = self.coeffs[:m]
        return out

    def truncate(self, n: int) -> "TaylorMap":
        return TaylorMap(self.kind, self.padded(n), exact=self.exact and n >= self.N)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind is MapClass.DISK_S:
            return np.polynomial.polynomial.polyval(z, self.coeffs)
        return z + np.polynomial.polynomial.polyval(1 / z, self.coeffs)


def _degree(shape):
    grids = np.indices(shape)
    return grids.sum(axis=0)


def _truncate_degree(s, D):
    if D is None:
        return s
    return np.where(_degree(s.shape) <= D, s, 0)


def series_mul(a, b, D=None):
    """Product of two series truncated to the shape of ``a`` (and degree ``D``)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != b.ndim:
        raise ValueError("series must have the same number of variables")
    full = signal.convolve(a, b)
    out = full[tuple(slice(0, n) for n in a.shape)]
    return _truncate_degree(out, D)


def _check_unit(s):
    c0 = s.flat[0]
    if abs(c0 - 1) > _UNIT_TOL:
        raise NormalizationError(f"constant term must be 1, got {c0}")


def series_log(s, D=None):
    """Principal logarithm of a series with constant term 1.

    Uses the Euler-operator recursion ``E log s = E s / s`` degree by degree,
    where ``E`` multiplies a monomial by its total degree.
    """
    s = np.array(s, dtype=complex)
    _check_unit(s)
    deg = _degree(s.shape)
    if D is None:
        D = int(deg.max())
    s = _truncate_degree(s, D)
    log = np.zeros_like(s)
    elog = np.zeros_like(s)
    for d in range(1, D + 1):
        mask = deg == d
        if not mask.any():
            continue
        rest = series_mul(elog, s)[mask] if d > 1 else 0.0
        log[mask] = s[mask] - rest / d
        elog[mask] = d * log[mask]
    return log


def series_exp(s, D=None):
    """Exponential of a series (any constant term)."""
    s = np.array(s, dtype=complex)
    deg = _degree(s.shape)
    if D is None:
        D = int(deg.max())
    s = _truncate_degree(s, D)
    c0 = s.flat[0]
    es = deg * s
    out = np.zeros_like(s)
    out.flat[0] = 1.0
    for d in range(1, D + 1):
        mask = deg == d
        if not mask.any():
            continue
        out[mask] = series_mul(es, out)[mask] / d
    return np.exp(c0) * out


def series_pow(s, e, D=None):
    """``s**e`` for a univariate series with ``s[0] == 1`` (binomial branch, value 1 at 0).

    Returns ``D + 1`` coefficients (default: ``len(s)``), using the
    J. C. P. Miller recurrence.  Coefficients of ``s`` beyond its length are
    taken as zero.
    """
    s = np.asarray(s, dtype=complex)
    if s.ndim != 1:
        raise ValueError("series_pow is univariate")
    _check_unit(s)
    if D is None:
        D = s.size - 1
    a = np.zeros(D + 1, dtype=complex)
    m = min(D + 1, s.size)
    a[:m] = s[:m]
    b = np.zeros(D + 1, dtype=complex)
    b[0] = 1.0
    for n in range(1, D + 1):
        k = np.arange(1, n + 1)
        b[n] = np.sum((k * (e + 1) - n) * a[k] * b[n - k]) / n
    return b


def compose_power(f: TaylorMap, p: int) -> np.ndarray:
    """Coefficients of ``f(z**p)`` as a series in ``z`` (degree ``p*N``)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if f.kind is not MapClass.DISK_S:
        raise ValueError("compose_power expects a DiskS map")
    out = np.zeros(p * f.N + 1, dtype=complex)
    out[::p] = f.coeffs
    return out


def invert_to_sigma(f: TaylorMap, n: int | None = None) -> TaylorMap:
    """``F(z) = 1/f(1/z) = z + b_0 + b_1/z + ...`` for a DiskS map ``f``.

    With ``f(w) = w g(w)`` we have ``F(z) = z / g(1/z)``, so ``b_k`` is the
    coefficient of ``w**(k+1)`` in ``1/g``.  A truncated ``f`` of degree ``N``
    determines ``b_0 .. b_{N-2}``; an exact polynomial gives any ``n``.
    """
    if f.kind is not MapClass.DISK_S:
        raise ValueError("invert_to_sigma expects a DiskS map")
    if n is None:
        n = f.N if f.exact else f.N - 2
    if n < 0:
        raise TruncationError("DiskS map too short to invert")
    g = f.padded(n + 2)[1:]
    h = series_pow(g, -1.0, D=n + 1)
    return TaylorMap.sigma(h[1:], exact=False)
