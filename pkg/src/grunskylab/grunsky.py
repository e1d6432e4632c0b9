"""Grunsky coefficient matrices and their operator norms."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SymmetryError, TruncationError
from .series import MapClass, TaylorMap, series_log

__all__ = [
    "GrunskyMatrix",
    "grunsky_matrix",
    "grunsky_norm",
    "largest_singular_value",
    "weighted_grunsky_norm",
    "bilinear_functional",
    "unit_vector",
]

LOGGER = logging.getLogger(__name__)

_SYM_TOL = 1e-12


def _sqrt_mn(n):
    k = np.sqrt(np.arange(1, n + 1, dtype=float))
    return np.outer(k, k)


@dataclass(frozen=True)
class GrunskyMatrix:
    """Symmetric matrix ``beta[m-1, n-1] = sqrt(m n) * alpha_mn``.

    ``convention`` is ``"disk"`` for the coefficients of
    ``log((f(z)-f(w))/(z-w)) = sum alpha_mn z^m w^n`` and ``"sigma"`` for
    ``log((F(z)-F(w))/(z-w)) = -sum c_mn z^-m w^-n``.
    """

    entries: np.ndarray
    convention: str = "disk"

    def __post_init__(self):
        b = np.array(self.entries, dtype=complex)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("Grunsky matrix must be square")
        b = 0.5 * (b + b.T)
        b.setflags(write=False)
        object.__setattr__(self, "entries", b)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def coefficients(self) -> np.ndarray:
        """Raw Grunsky coefficients (``alpha_mn`` or ``c_mn``)."""
        return self.entries / _sqrt_mn(self.n)

    def block(self, n: int) -> "GrunskyMatrix":
        return GrunskyMatrix(self.entries[:n, :n], self.convention)

    def to_json(self) -> str:
        flat = [[float(v.real), float(v.imag)] for v in self.entries.ravel()]
        return json.dumps({"n": self.n, "entries": flat, "convention": self.convention})

    @classmethod
    def from_json(cls, text: str) -> "GrunskyMatrix":
        data = json.loads(text)
        n = int(data["n"])
        vals = np.array([complex(re, im) for re, im in data["entries"]], dtype=complex)
        if vals.size != n * n:
            raise ValueError(f"expected {n * n} entries, got {vals.size}")
        return cls(vals.reshape(n, n), data.get("convention", "disk"))


def grunsky_matrix(f: TaylorMap, N: int) -> GrunskyMatrix:
    """N x N Grunsky matrix of ``f``.

    The difference quotient is a Hankel-structured bivariate series:
    ``(f(z)-f(w))/(z-w) = sum_{j,l} a_{j+l+1} z^j w^l`` for DiskS and
    ``1 - sum_{j,l>=1} b_{j+l-1} u^j v^l`` (``u = 1/z, v = 1/w``) for
    ExteriorSigma.  Its logarithm is taken in the box ``j, l <= N``; pure
    powers (row/column 0) are discarded.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    j, l = np.indices((N + 1, N + 1))
    if f.kind is MapClass.DISK_S:
        try:
            a = f.padded(2 * N + 1)
        except TruncationError as exc:
            raise TruncationError(
                f"grunsky_matrix(N={N}) needs Taylor coefficients up to a_{2 * N + 1}"
            ) from exc
        q = a[j + l + 1]
        alpha = series_log(q)[1:, 1:]
        convention = "disk"
    else:
        try:
            b = f.padded(max(2 * N - 1, 0))
        except TruncationError as exc:
            raise TruncationError(
                f"grunsky_matrix(N={N}) needs Laurent coefficients up to b_{2 * N - 1}"
            ) from exc
        q = np.zeros((N + 1, N + 1), dtype=complex)
        q[1:, 1:] = -b[(j + l - 1)[1:, 1:]]
        q[0, 0] = 1.0
        alpha = -series_log(q)[1:, 1:]
        convention = "sigma"
    return GrunskyMatrix(_sqrt_mn(N) * alpha, convention)


def _as_array(G):
    if isinstance(G, GrunskyMatrix):
        return G.entries
    return np.asarray(G, dtype=complex)


def largest_singular_value(A, tol=1e-12, max_iter=10_000, seed=0):
    """Largest singular value by power iteration on ``A^H A``.

    Starts from ``e_1`` and from one seeded random vector; returns the larger
    estimate.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[1]
    if n == 0 or not np.any(A):
        return 0.0
    AH = A.conj().T
    rng = np.random.default_rng(seed)
    starts = [np.eye(n, 1, dtype=complex)[:, 0],
              rng.normal(size=n) + 1j * rng.normal(size=n)]
    best = 0.0
    for v in starts:
        v = v / np.linalg.norm(v)
        lam = 0.0
        converged = False
        for _ in range(max_iter):
            u = AH @ (A @ v)
            unorm = np.linalg.norm(u)
            if unorm == 0.0:
                break
            lam = float(np.real(np.vdot(v, u)))
            resid = np.linalg.norm(u - lam * v)
            v = u / unorm
            if resid <= tol * max(lam, 1e-300):
                converged = True
                break
        if not converged and lam > 0:
            LOGGER.debug("power iteration hit max_iter=%d (lambda=%g)", max_iter, lam)
        best = max(best, np.sqrt(max(lam, 0.0)), float(np.linalg.norm(A @ v)))
    return float(best)


def _check_symmetric(A):
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > _SYM_TOL * scale:
        raise SymmetryError("Grunsky matrix must be complex symmetric")


def grunsky_norm(G) -> float:
    """``sup |x^T G x|`` over unit ``x``; equals the top singular value for symmetric ``G``."""
    A = _as_array(G)
    _check_symmetric(A)
    return largest_singular_value(A)


def weighted_grunsky_norm(G, r: float) -> float:
    """Grunsky norm for the disk of radius ``r``: entries scaled by ``r**(-m-n)``."""
    if not r > 0:
        raise DomainError("radius must be positive")
    A = _as_array(G)
    _check_symmetric(A)
    k = np.arange(1, A.shape[0] + 1)
    w = float(r) ** (-np.add.outer(k, k).astype(float))
    return largest_singular_value(A * w)


def unit_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ValueError("zero vector cannot be normalized")
    return x / nrm


def bilinear_functional(G, x) -> complex:
    """``h_x = sum beta_mn x_m x_n`` for a unit vector ``x``."""
    A = _as_array(G)
    x = np.asarray(x, dtype=complex)
    if x.shape != (A.shape[0],):
        raise ValueError(f"vector length {x.shape} does not match matrix size {A.shape[0]}")
    if abs(np.linalg.norm(x) - 1.0) > 1e-12:
        raise ValueError("x must lie on the unit sphere of l2")
    return complex(x @ A @ x)
