"""Sequences of Grunsky coefficients as points of a Banach space.

A point is a complex symmetric array ``c_mn`` (``1 <= m, n <= N``) taken in
the exterior convention ``log((F(z) - F(w))/(z - w)) = -sum c_mn z^-m w^-n``,
so that ``c_m1 = b_m`` for ``F(z) = z + b_0 + b_1/z + ...``.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import SymmetryError
from .grunsky import grunsky_matrix, grunsky_norm
from .series import MapClass, TaylorMap

__all__ = [
    "GrunskyPoint",
    "lnorm",
    "Membership",
    "membership_probe",
    "ScanRow",
    "ScanResult",
    "segment_scan",
]


def _weights(n):
    k = np.sqrt(np.arange(1, n + 1, dtype=float))
    return np.outer(k, k)


@dataclass(frozen=True)
class GrunskyPoint:
    entries: np.ndarray

    def __post_init__(self):
        c = np.array(self.entries, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("entries must be a square array")
        scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
        if c.size and np.max(np.abs(c - c.T)) > 1e-12 * scale:
            raise SymmetryError("Grunsky coefficients must satisfy c_mn = c_nm")
        c.setflags(write=False)
        object.__setattr__(self, "entries", c)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def weighted(self) -> np.ndarray:
        """``sqrt(mn) c_mn``."""
        return _weights(self.n) * self.entries

    def scaled(self, t: complex) -> "GrunskyPoint":
        return GrunskyPoint(t * self.entries)

    @classmethod
    def diagonal(cls, t: complex, n: int) -> "GrunskyPoint":
        """``c_mm = t^m / m``: the point of ``F(z) = z + t/z``."""
        m = np.arange(1, n + 1)
        return cls(np.diag(t ** m / m))

    @classmethod
    def from_map(cls, f: TaylorMap, n: int) -> "GrunskyPoint":
        """Coefficients of ``F`` (exterior map) or of ``F(z) = 1/f(1/z)`` (disk map)."""
        G = grunsky_matrix(f, n)
        c = G.coefficients
        return cls(-c if f.kind is MapClass.DISK_S else c)

    def to_json(self) -> str:
        flat = [[float(v.real), float(v.imag)] for v in self.entries.ravel()]
        return json.dumps({"n": self.n, "entries": flat})

    @classmethod
    def from_json(cls, text: str) -> "GrunskyPoint":
        d = json.loads(text)
        n = int(d["n"])
        vals = np.array([complex(a, b) for a, b in d["entries"]], dtype=complex)
        if vals.size != n * n:
            raise ValueError(f"expected {n * n} entries, got {vals.size}")
        return cls(vals.reshape(n, n))


def lnorm(c: GrunskyPoint) -> float:
    """``sup sqrt(mn)|c_mn|`` plus the operator norm of ``(sqrt(mn) c_mn)``."""
    w = c.weighted
    if w.size == 0:
        return 0.0
    return float(np.max(np.abs(w))) + grunsky_norm(w)


@dataclass
class Membership:
    kappa: float
    inside: bool
    N: int


def membership_probe(c: GrunskyPoint) -> Membership:
    """Necessary condition ``kappa < 1`` at the given truncation."""
    kappa = grunsky_norm(c.weighted) if c.n else 0.0
    return Membership(kappa, kappa < 1, c.n)


@dataclass
class ScanRow:
    t: float
    kappa: float
    lnorm: float
    inside: bool


@dataclass
class ScanResult:
    rows: list
    N: int
    interval: bool  # inside-set is an initial segment of [0, 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "kappa", "lnorm", "inside"])
        for r in self.rows:
            w.writerow([repr(r.t), repr(r.kappa), repr(r.lnorm), int(r.inside)])
        return buf.getvalue()


def _is_interval(flags) -> bool:
    seen_out = False
    for f in flags:
        if not f:
            seen_out = True
        elif seen_out:
            return False
    return True


def segment_scan(c: GrunskyPoint, steps: int) -> ScanResult:
    """Evaluate ``t c`` for ``steps`` equispaced ``t`` in ``[0, 1]``."""
    if steps < 2:
        raise ValueError("steps must be >= 2")
    rows = []
    for t in np.linspace(0.0, 1.0, steps):
        p = c.scaled(float(t))
        m = membership_probe(p)
        rows.append(ScanRow(float(t), m.kappa, lnorm(p), m.inside))
    return ScanResult(rows, c.n, _is_interval([r.inside for r in rows]))
