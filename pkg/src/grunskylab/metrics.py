"""Metrics and estimators derived from Grunsky and Teichmueller norms."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, NormalizationError
from .grunsky import grunsky_matrix, grunsky_norm
from .series import TaylorMap
from .transforms import pullback, root_transform, truncate_beltrami

__all__ = [
    "NormReport",
    "teich_distance",
    "limit_grunsky_estimate",
    "reflection_coefficient",
    "green_function",
    "exterior_moments",
    "alpha_matrix",
    "AlphaResult",
    "alpha_functional",
    "alpha_search",
    "grunsky_bound_check",
    "OuterLimitResult",
    "outer_limit_estimate",
]

LOGGER = logging.getLogger(__name__)


# -- norm tables -----------------------------------------------------------------

@dataclass
class NormReport:
    """Grunsky norms of root transforms, keyed by ``(p, N)``."""

    kappa_by_p: dict
    kappa_hat_estimate: float
    k_reference: Optional[float] = None
    converged: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, v in self.kappa_by_p.items():
            if not -1e-12 <= v <= 1 + 1e-8:
                raise ValueError(f"kappa{key} = {v} outside [0, 1]")

    @staticmethod
    def estimate(kappa_by_p: dict) -> float:
        """Max over even ``p`` at the largest ``N``."""
        if not kappa_by_p:
            return 0.0
        top = max(n for _, n in kappa_by_p)
        even = [v for (p, n), v in kappa_by_p.items() if n == top and p % 2 == 0]
        return float(max(even)) if even else 0.0

    def rows(self):
        return [(p, n, v) for (p, n), v in sorted(self.kappa_by_p.items())]

    def to_json(self) -> str:
        return json.dumps({
            "kappa": [{"p": p, "N": n, "kappa": v} for p, n, v in self.rows()],
            "kappa_hat": self.kappa_hat_estimate,
            "k_reference": self.k_reference,
            "converged": [{"p": p, "N": n, "ok": ok} for (p, n), ok in sorted(self.converged.items())],
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NormReport":
        d = json.loads(text)
        kappa = {(int(r["p"]), int(r["N"])): float(r["kappa"]) for r in d["kappa"]}
        conv = {(int(r["p"]), int(r["N"])): bool(r["ok"]) for r in d.get("converged", [])}
        return cls(kappa, float(d["kappa_hat"]), d.get("k_reference"), conv)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "N", "kappa"])
        for p, n, v in self.rows():
            w.writerow([p, n, repr(float(v))])
        w.writerow(["kappa_hat", "", repr(float(self.kappa_hat_estimate))])
        w.writerow(["k_reference", "", "" if self.k_reference is None else repr(float(self.k_reference))])
        return buf.getvalue()


def teich_distance(k: float) -> float:
    """Teichmueller distance from the origin: ``artanh k``."""
    if not 0 <= k < 1:
        raise DomainError("k must lie in [0, 1)")
    return float(np.arctanh(k))


def _kappa_p(f: TaylorMap, p: int, N: int) -> float:
    return grunsky_norm(grunsky_matrix(root_transform(f, p, n=2 * N + 1), N))


def limit_grunsky_estimate(f: TaylorMap, p_max: int, N: int,
                           k_reference: Optional[float] = None, threads: int = 1) -> NormReport:
    """``kappa(R_p f)`` for ``p = 1 .. p_max`` at truncation ``N``.

    The limit is estimated by the largest even-``p`` value; ``f`` needs
    ``2N + 1`` Taylor coefficients for ``p = 1``.
    """
    if p_max < 2 or p_max % 2:
        raise ValueError("p_max must be an even integer >= 2")
    ps = list(range(1, p_max + 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda p: _kappa_p(f, p, N), ps))
    else:
        values = [_kappa_p(f, p, N) for p in ps]
    table = {(p, N): v for p, v in zip(ps, values)}
    return NormReport(table, NormReport.estimate(table), k_reference, {key: True for key in table})


def reflection_coefficient(kappa_hat: float) -> tuple[float, float]:
    """``(q_L, Q_L)`` with ``(1 + q)/(1 - q) = ((1 + kappa)/(1 - kappa))^2``."""
    if not 0 <= kappa_hat < 1:
        raise DomainError("kappa_hat must lie in [0, 1)")
    q = 2 * kappa_hat / (1 + kappa_hat * kappa_hat)
    return q, (1 + q) / (1 - q)


def green_function(kappa_hat: float) -> float:
    """``log kappa_hat``; ``-inf`` at the base point."""
    if not 0 <= kappa_hat < 1:
        raise DomainError("kappa_hat must lie in [0, 1)")
    if kappa_hat == 0:
        return -math.inf
    return math.log(kappa_hat)


# -- pairing with integrable squares -----------------------------------------------

def _radial_nodes(n_r: int, breaks: Sequence[float]):
    edges = sorted({0.0, 1.0, *[float(b) for b in breaks if 0 < b < 1]})
    pieces = len(edges) - 1
    per = max(8, n_r // pieces)
    x, w = np.polynomial.legendre.leggauss(per)
    rs, ws = [], []
    for a, b in zip(edges, edges[1:]):
        rs.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(rs), np.concatenate(ws)


def exterior_moments(mu: Callable, s_max: int, n_r: int = 512, n_theta: int = 512,
                     breaks: Sequence[float] = ()) -> np.ndarray:
    """``M_s = \\iint_{|z|>1} mu(z) z^{-(s+2)} dA`` for ``s = 0 .. s_max``.

    With ``z = 1/u`` (``u = r e^{i theta}``) the integral becomes
    ``\\int_0^1 \\int mu(e^{-i theta}/r) r^{s-1} e^{i(s+2) theta} d theta dr``,
    bounded for ``s >= 1``.  Gauss-Legendre in ``r`` (split at ``breaks``,
    given as radii in ``u``), FFT in ``theta``.
    """
    r, wr = _radial_nodes(n_r, breaks)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    u = r[:, None] * np.exp(1j * theta)[None, :]
    vals = np.asarray(mu(1.0 / u), dtype=complex)
    # sum_theta vals e^{+i k theta} (dtheta = 2 pi / n_theta)
    ang = np.fft.ifft(vals, axis=1) * 2 * np.pi
    s = np.arange(s_max + 1)
    idx = (s + 2) % n_theta
    radial = r[:, None] ** (s[None, :] - 1.0)
    return (wr[:, None] * radial * ang[:, idx]).sum(axis=0)


def alpha_matrix(mu: Callable, n_coords: int = 32, **quad) -> np.ndarray:
    """Symmetric ``A_mn = (1/pi) sqrt(mn) M_{m+n}`` so that ``\\iint mu psi_x = x^T A x``."""
    M = exterior_moments(mu, 2 * n_coords, **quad)
    k = np.arange(1, n_coords + 1)
    return np.outer(np.sqrt(k), np.sqrt(k)) * M[np.add.outer(k, k)] / np.pi


@dataclass
class AlphaResult:
    value: float
    x: np.ndarray
    converged: bool
    bound: float  # ||mu||_inf on the quadrature nodes


def _sup_on_nodes(mu, n=256):
    r = np.linspace(0.01, 1, n)
    th = 2 * np.pi * np.arange(n) / n
    u = r[:, None] * np.exp(1j * th)[None, :]
    return float(np.max(np.abs(mu(1.0 / u))))


def alpha_functional(mu: Callable, n_coords: int = 32, tol: float = 1e-6, **quad) -> AlphaResult:
    """``sup |\\iint mu psi|`` over unit ``psi = omega^2`` with ``n_coords`` coordinates.

    The pairing is the quadratic form ``x^T A x`` of a complex symmetric
    matrix, whose sup over the unit sphere is the top singular value (attained
    at the right singular vector).  Raises when the result exceeds
    ``||mu||_inf`` by more than ``tol``.
    """
    A = alpha_matrix(mu, n_coords, **quad)
    if not np.all(np.isfinite(A)):
        raise NormalizationError("pairing integrals are not finite")
    _, s, vh = np.linalg.svd(A)
    x = vh[0].conj()
    value = float(abs(x @ A @ x))
    converged = abs(value - s[0]) <= 1e-9 * max(1.0, s[0])
    if not converged:
        # repeated top singular value: the singular vector need not be a
        # maximizer of the quadratic form, so ascend from random starts
        found = alpha_search(A, starts=16)
        x, value = found.x, found.value
        converged = abs(value - s[0]) <= 1e-6 * max(1.0, s[0])
    sup = _sup_on_nodes(mu)
    if value > sup + tol:
        raise NormalizationError(f"alpha = {value} exceeds ||mu||_inf = {sup}")
    return AlphaResult(value, x, bool(converged), sup)


def alpha_search(A: np.ndarray, starts: int = 64, seed: int = 0, iters: int = 500) -> AlphaResult:
    """Multistart ascent of ``|x^T A x|`` on the unit sphere.

    Each start is improved by ``x <- conj(A x)/|A x|`` (each step does not
    decrease the value); the best value is returned.  A lower bound for
    the top singular value.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    best, best_x = -1.0, None
    for _ in range(starts):
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        x /= np.linalg.norm(x)
        for _ in range(iters):
            y = np.conj(A @ x)
            ny = np.linalg.norm(y)
            if ny == 0:
                break
            x_new = y / ny
            if np.linalg.norm(x_new - x) < 1e-13:
                x = x_new
                break
            x = x_new
        v = float(abs(x @ A @ x))
        if v > best:
            best, best_x = v, x
    return AlphaResult(best, best_x, True, math.nan)


def grunsky_bound_check(k: float, alpha: float, tol: float = 1e-9) -> float:
    """Upper bound ``k (k + a) / (1 + a k)`` for the Grunsky norm, ``a = alpha / k``.

    ``alpha`` is the pairing sup of the extremal coefficient itself, so
    ``a`` in ``[0, 1]``; ``a = 1`` gives ``k`` and ``a = 0`` gives ``k^2``.
    """
    if not 0 <= k < 1:
        raise DomainError("k must lie in [0, 1)")
    if alpha < 0 or alpha > k + tol:
        raise DomainError(f"alpha = {alpha} must lie in [0, k = {k}]")
    if k == 0:
        return 0.0
    a = min(alpha, k) / k
    return k * (k + a) / (1 + a * k)


@dataclass
class OuterLimitResult:
    value: float
    table: list  # (rho, p, alpha) in evaluation order
    running_max: list


def outer_limit_estimate(mu: Callable, rho_grid: Sequence[float], p_grid: Sequence[int],
                         n_coords: int = 32, threads: int = 1, **quad) -> OuterLimitResult:
    """Max of the pairing sup over pulled-back, truncated coefficients.

    For each ``(rho, p)`` the coefficient ``mu_rho(z) = mu(rho z)`` on
    ``|z| > 1`` is pulled back by ``z -> z^p`` and paired with unit squares.
    The running maximum over the grid (in the order given) is reported.
    """
    tasks = [(float(rho), int(p)) for rho in rho_grid for p in p_grid]

    def one(task):
        rho, p = task
        pulled = pullback(truncate_beltrami(mu, rho), p, "beltrami")
        # support starts at |z| = rho^(-1/p), i.e. |u| = rho^(1/p)
        return alpha_functional(pulled, n_coords, breaks=(rho ** (1.0 / p),), **quad).value

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, tasks))
    else:
        values = [one(t) for t in tasks]
    table = [(rho, p, v) for (rho, p), v in zip(tasks, values)]
    running = list(np.maximum.accumulate(values)) if values else []
    return OuterLimitResult(float(running[-1]) if running else 0.0, table, [float(v) for v in running])
