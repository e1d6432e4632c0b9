"""Grid solver for the Beltrami equation ``w_zbar = mu w_z`` on the plane.

The grid has ``M x M`` nodes ``x_j = -R + j h`` (``h = 2R/M``) in both
directions, so the origin is node ``(M/2, M/2)``.  Each node carries the
value of a field on the square cell of side ``h`` centred on it.  Arrays are
indexed ``[row, col] = [y, x]``.

* ``T rho(z) = -(1/pi) \\iint rho(s) / (s - z)`` is a discrete convolution with
  cell-averaged kernels (exact contour integrals near the singular cell,
  midpoint rule elsewhere) evaluated by FFT on a zero-padded grid.
* ``Pi rho`` uses the Fourier multiplier ``conj(xi)/xi`` on the padded grid.
* ``w = z + T rho`` with ``rho = mu (1 + Pi rho)`` solved by Neumann iteration.
"""
from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConvergenceError, DomainError, NotConformalThere, NotQuasiconformal

__all__ = [
    "Normalization",
    "BeltramiGrid",
    "MappedGrid",
    "LaurentCoefficients",
    "cauchy_transform",
    "cauchy_transform_at",
    "beurling_transform",
    "solve_beltrami",
    "first_variation",
    "conformal_coeffs",
    "dilatation",
    "beltrami_residual",
    "save_grid",
    "load_grid",
]

LOGGER = logging.getLogger(__name__)

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(32)
_NEAR = 4  # cells within this many steps use the exact cell integral


class Normalization(enum.Enum):
    HYDRODYNAMIC = "Hydrodynamic"  # w = z + O(1/z)
    ZERO_FIXED = "ZeroFixed"  # w(0) = 0


def _nodes(R, M):
    h = 2.0 * R / M
    x = -R + h * np.arange(M)
    return x, h


@dataclass
class BeltramiGrid:
    extent: float
    resolution: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.resolution, self.resolution):
            raise ValueError("samples must be an M x M array")
        if self.resolution % 2:
            raise ValueError("resolution must be even so the origin is a node")

    @property
    def h(self) -> float:
        return 2.0 * self.extent / self.resolution

    @property
    def z(self) -> np.ndarray:
        x, _ = _nodes(self.extent, self.resolution)
        return x[None, :] + 1j * x[:, None]

    @property
    def support(self) -> np.ndarray:
        return self.samples != 0

    @property
    def origin_index(self):
        return self.resolution // 2, self.resolution // 2

    @classmethod
    def from_function(cls, mu: Callable, extent: float = 4.0, resolution: int = 512,
                      supersample: int = 4) -> "BeltramiGrid":
        """Cell averages of ``mu`` from ``supersample**2`` sub-points per cell."""
        x, h = _nodes(extent, resolution)
        off = (np.arange(supersample) + 0.5) / supersample - 0.5
        acc = np.zeros((resolution, resolution), dtype=complex)
        zc = x[None, :] + 1j * x[:, None]
        for oy in off:
            for ox in off:
                acc += np.asarray(mu(zc + h * (ox + 1j * oy)), dtype=complex)
        return cls(extent, resolution, acc / supersample ** 2)

    def as_function(self) -> Callable:
        """Nearest-node evaluator, zero outside the grid."""
        x0 = -self.extent
        h = self.h
        M = self.resolution

        def mu(z):
            z = np.asarray(z, dtype=complex)
            j = np.rint((z.real - x0) / h).astype(int)
            i = np.rint((z.imag - x0) / h).astype(int)
            ok = (i >= 0) & (i < M) & (j >= 0) & (j < M)
            out = np.zeros(z.shape, dtype=complex)
            out[ok] = self.samples[i[ok], j[ok]]
            return out

        return mu


@dataclass
class MappedGrid:
    """Node values of ``w`` plus the density ``rho`` needed to evaluate it anywhere."""

    extent: float
    resolution: int
    samples: np.ndarray
    normalization: Normalization
    rho: np.ndarray
    mu: Optional[np.ndarray] = None
    shift: complex = 0j
    history: list = field(default_factory=list)

    @property
    def h(self) -> float:
        return 2.0 * self.extent / self.resolution

    @property
    def z(self) -> np.ndarray:
        x, _ = _nodes(self.extent, self.resolution)
        return x[None, :] + 1j * x[:, None]

    def __call__(self, points):
        points = np.asarray(points, dtype=complex)
        return points + cauchy_transform_at(self.rho, self.extent, points) - self.shift


def dilatation(mu: BeltramiGrid) -> float:
    return float(np.max(np.abs(mu.samples))) if mu.samples.size else 0.0


# -- kernels -----------------------------------------------------------------

def _edge_quadrature(h):
    """Nodes and weights (``ds``) on the boundary of the cell ``[-h/2, h/2]^2`` (ccw)."""
    a = h / 2
    corners = [(-a - 1j * a), (a - 1j * a), (a + 1j * a), (-a + 1j * a)]
    s, ds = [], []
    for k in range(4):
        p, q = corners[k], corners[(k + 1) % 4]
        s.append(0.5 * (p + q) + 0.5 * (q - p) * _GAUSS_X)
        ds.append(0.5 * (q - p) * _GAUSS_W)
    return np.concatenate(s), np.concatenate(ds)


def _cell_kernel(d, h):
    """``(1/pi) \\iint_cell ds / (d - s)`` for offsets ``d`` from a cell centred at 0.

    Exact near the cell via ``1/(d-s) = d/dsbar [(conj s - conj d)/(d - s)]``
    and Stokes; midpoint rule ``h^2 / (pi d)`` farther out.
    """
    d = np.asarray(d, dtype=complex)
    out = np.empty(d.shape, dtype=complex)
    near = np.abs(d) < _NEAR * h * 1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~near] = h * h / (np.pi * d[~near])
    if near.any():
        s, ds = _edge_quadrature(h)
        dn = d[near][:, None]
        F = (np.conj(s)[None, :] - np.conj(dn)) / (dn - s[None, :])
        out[near] = (F * ds[None, :]).sum(axis=1) / (2j * np.pi)
    return out


@lru_cache(maxsize=8)
def _t_kernel_fft(R, M):
    _, h = _nodes(R, M)
    P = 2 * M
    k = np.fft.fftfreq(P, d=1.0 / P).astype(int)  # offsets in cells, circular layout
    d = h * (k[None, :] + 1j * k[:, None])
    return np.fft.fft2(_cell_kernel(d, h))


@lru_cache(maxsize=8)
def _beurling_symbol(M):
    P = 2 * M
    k = np.fft.fftfreq(P)
    xi = k[None, :] + 1j * k[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        sym = np.where(xi == 0, 0.0, np.conj(xi) / xi)
    return sym


def _pad(a):
    M = a.shape[0]
    out = np.zeros((2 * M, 2 * M), dtype=complex)
    out[:M, :M] = a
    return out


def cauchy_transform(rho, extent: float) -> np.ndarray:
    """``T rho`` at the grid nodes."""
    rho = np.asarray(rho, dtype=complex)
    M = rho.shape[0]
    conv = np.fft.ifft2(np.fft.fft2(_pad(rho)) * _t_kernel_fft(float(extent), M))
    return conv[:M, :M]


def cauchy_transform_at(rho, extent: float, points) -> np.ndarray:
    """``T rho`` at arbitrary points by direct summation over the support of ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    M = rho.shape[0]
    x, h = _nodes(extent, M)
    zc = x[None, :] + 1j * x[:, None]
    mask = rho != 0
    zs, rs = zc[mask], rho[mask]
    points = np.asarray(points, dtype=complex)
    flat = points.ravel()
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, 2_000_000 // max(zs.size, 1))
    for i in range(0, flat.size, chunk):
        d = flat[i:i + chunk, None] - zs[None, :]
        out[i:i + chunk] = (_cell_kernel(d, h) * rs[None, :]).sum(axis=1)
    return out.reshape(points.shape)


def beurling_transform(rho) -> np.ndarray:
    """``Pi rho`` at the grid nodes (multiplier ``conj(xi)/xi`` on the padded grid)."""
    rho = np.asarray(rho, dtype=complex)
    M = rho.shape[0]
    out = np.fft.ifft2(np.fft.fft2(_pad(rho)) * _beurling_symbol(M))
    return out[:M, :M]


# -- solver --------------------------------------------------------------------

def _check_support(mu: BeltramiGrid):
    if not mu.support.any():
        return
    r = np.abs(mu.z[mu.support]).max()
    if r > mu.extent / 2 + mu.h:
        raise DomainError(f"mu support reaches |z| = {r:.3g}; must lie within |z| <= R/2")


def _l2(a, h):
    return float(np.sqrt(np.sum(np.abs(a) ** 2)) * h)


def solve_beltrami(mu: BeltramiGrid, normalization: Normalization = Normalization.HYDRODYNAMIC,
                   tol: float = 1e-10, max_iter: int = 200) -> MappedGrid:
    """Normalized quasiconformal solution ``w = z + T rho``.

    ``rho`` solves ``rho = mu (1 + Pi rho)``, iterated from ``rho = mu`` until
    successive iterates differ by less than ``tol`` in ``L2``.
    """
    k = dilatation(mu)
    if k >= 1:
        raise NotQuasiconformal(f"||mu||_inf = {k} >= 1")
    _check_support(mu)
    h = mu.h
    rho = mu.samples.copy()
    history = []
    for _ in range(max_iter):
        new = mu.samples * (1.0 + beurling_transform(rho))
        diff = _l2(new - rho, h)
        history.append(diff)
        rho = new
        if diff < tol:
            break
    else:
        raise ConvergenceError(f"Neumann series stalled after {max_iter} iterations", residual=diff)
    return _mapped(mu, rho, normalization, history)


def _mapped(mu, rho, normalization, history):
    w = mu.z + cauchy_transform(rho, mu.extent)
    shift = 0j
    if normalization is Normalization.ZERO_FIXED:
        shift = complex(w[mu.origin_index])
        w = w - shift
    return MappedGrid(mu.extent, mu.resolution, w, normalization, rho, mu.samples, shift, history)


def first_variation(mu: BeltramiGrid) -> MappedGrid:
    """Linear term ``z - (1/pi) \\iint mu(s) (1/(s - z) - 1/s)``, i.e. ``z + T mu(z) - T mu(0)``."""
    _check_support(mu)
    return _mapped(mu, mu.samples.copy(), Normalization.ZERO_FIXED, [])


def beltrami_residual(w: MappedGrid, margin: int = 2) -> float:
    """Relative residual of ``w_zbar - mu w_z`` by centred differences.

    Nodes within ``margin`` cells of a jump of ``mu`` (or of the grid edge)
    are excluded; normalized by ``max |w_z|`` over the checked nodes.
    """
    if w.mu is None:
        raise ValueError("MappedGrid carries no mu")
    h = w.h
    W = w.samples
    wx = (W[1:-1, 2:] - W[1:-1, :-2]) / (2 * h)
    wy = (W[2:, 1:-1] - W[:-2, 1:-1]) / (2 * h)
    wz = 0.5 * (wx - 1j * wy)
    wzb = 0.5 * (wx + 1j * wy)
    mu = w.mu[1:-1, 1:-1]
    scale = max(float(np.abs(w.mu).max()), 1e-300)
    jump = np.zeros(w.mu.shape, dtype=bool)
    for axis in (0, 1):
        dm = np.abs(np.diff(w.mu, axis=axis)) > 0.25 * scale
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis], hi[axis] = slice(1, None), slice(None, -1)
        jump[tuple(lo)] |= dm
        jump[tuple(hi)] |= dm
    from scipy.ndimage import binary_dilation

    bad = binary_dilation(jump, iterations=margin)[1:-1, 1:-1]
    keep = (~bad) & (mu != 0)
    if not keep.any():
        return 0.0
    res = np.abs(wzb - mu * wz)[keep]
    return float(res.max() / np.abs(wz[keep]).max())


# -- boundary coefficients ---------------------------------------------------------

@dataclass
class LaurentCoefficients:
    """Laurent coefficients ``c_k`` of ``w = sum c_k z^k`` on a circle of radius ``radius``."""

    radius: float
    count: int
    values: np.ndarray  # index k + count for k in [-count, count]
    residual: float

    def coef(self, k: int) -> complex:
        if abs(k) > self.count:
            raise IndexError(k)
        return complex(self.values[k + self.count])

    def taylor(self) -> np.ndarray:
        """Coefficients ``c_0 .. c_count``."""
        return self.values[self.count:].copy()

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        k = np.arange(-self.count, self.count + 1)
        return (self.values * z[..., None] ** k).sum(axis=-1)


def conformal_coeffs(w, radius: float, count: int) -> LaurentCoefficients:
    """Fourier analysis of ``w`` on ``4 * count`` equispaced points of ``|z| = radius``.

    ``residual`` is the relative reconstruction error at the mid-angles.
    """
    if isinstance(w, MappedGrid) and w.mu is not None:
        support = w.mu != 0
        if support.any():
            r = np.abs(w.z[support])
            if np.any(np.abs(r - radius) < w.h):
                raise NotConformalThere(f"circle |z| = {radius} meets the support of mu")
    K = 4 * count
    theta = 2 * np.pi * np.arange(K) / K
    vals = np.asarray(w(radius * np.exp(1j * theta)), dtype=complex)
    c = np.fft.fft(vals) / K
    k = np.arange(-count, count + 1)
    values = c[k % K] / radius ** k.astype(float)
    out = LaurentCoefficients(radius, count, values, 0.0)
    mid = radius * np.exp(1j * (theta + np.pi / K))
    ref = np.asarray(w(mid), dtype=complex)
    out.residual = float(np.max(np.abs(out.evaluate(mid) - ref)) / max(np.max(np.abs(ref)), 1e-300))
    return out


# -- file format ------------------------------------------------------------------

def save_grid(stem, grid) -> tuple[Path, Path]:
    """Write ``<stem>.json`` (geometry) and ``<stem>.bin`` (little-endian float64, re/im interleaved)."""
    stem = Path(stem)
    meta = {"extent": float(grid.extent), "resolution": int(grid.resolution)}
    if isinstance(grid, MappedGrid):
        meta["normalization"] = grid.normalization.value
        meta["kind"] = "mapped"
    else:
        meta["normalization"] = None
        meta["kind"] = "beltrami"
    data = np.empty(2 * grid.samples.size, dtype="<f8")
    flat = grid.samples.ravel()
    data[0::2] = flat.real
    data[1::2] = flat.imag
    jpath, bpath = stem.with_suffix(".json"), stem.with_suffix(".bin")
    jpath.write_text(json.dumps(meta))
    data.tofile(bpath)
    return jpath, bpath


def load_grid(stem):
    """Read a grid written by :func:`save_grid`; returns a BeltramiGrid or the raw samples of a mapped grid."""
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    M = int(meta["resolution"])
    data = np.fromfile(stem.with_suffix(".bin"), dtype="<f8")
    if data.size != 2 * M * M:
        raise ValueError(f"expected {2 * M * M} values, found {data.size}")
    samples = (data[0::2] + 1j * data[1::2]).reshape(M, M)
    if meta.get("kind") == "mapped":
        return meta, samples
    return BeltramiGrid(float(meta["extent"]), M, samples)
