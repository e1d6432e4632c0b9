import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grunskylab.errors import DomainError, HypothesisViolation, SingularityError, UnboundedNormError
from grunskylab.series import TaylorMap
from grunskylab.transforms import (
    INVERSION,
    LOWER_HALF_PLANE_FROM_DISK,
    Domain,
    Mobius,
    QuadraticDifferential,
    SchwarzianField,
    ahlfors_weill,
    bnorm,
    bnorm_argmax,
    contour_derivatives,
    homotopy,
    map_from_schwarzian,
    pullback,
    root_transform,
    schwarzian,
    schwarzian_compose,
    truncate_beltrami,
)


def koebe(t, N):
    return TaylorMap.disk([n * (-t) ** (n - 1) for n in range(1, N + 1)])


def koebe_schwarzian(t):
    return lambda z: -6 * t * t / (1 - t * t * z * z) ** 2


@pytest.mark.parametrize("p", [2, 3, 5])
def test_root_transform_of_koebe_closed_form(p):
    t = 0.5
    fp = root_transform(koebe(t, 40), p)
    z = 0.3 * np.exp(1j * np.linspace(0, 6, 7))
    assert np.allclose(fp(z), z / (1 + t * z ** p) ** (2 / p), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=6),
       st.complex_numbers(max_magnitude=0.4, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=0.2, allow_nan=False, allow_infinity=False))
def test_root_transform_identity(p, a2, a3):
    f = TaylorMap.disk([1.0, a2, a3], exact=True)
    fp = root_transform(f, p, n=p * 30 + 1)
    z = 0.25 * np.exp(0.4j)
    assert np.isclose(fp(z) ** p, f(z ** p), rtol=1e-9)
    # leading correction a_2/p sits on z^(p+1)
    assert np.isclose(fp.coeffs[p + 1], a2 / p)


def test_pullbacks():
    mu = lambda z: 0.2 * np.exp(1j * np.angle(z))
    z = 1.5 * np.exp(0.3j)
    pulled = pullback(mu, 3)(z)
    assert np.isclose(pulled, mu(z ** 3) * np.conj(z) ** 2 / z ** 2)
    assert np.isclose(abs(pulled), 0.2)
    psi = lambda z: z ** -4
    assert np.isclose(pullback(psi, 2, "quadratic")(z), z ** -8 * 4 * z ** 2)
    with pytest.raises(ValueError):
        pullback(mu, 0)


def test_quadratic_pullback_preserves_l1_mass():
    # z -> z^p covers the exterior disk p times, so the L1 mass scales by p
    q = QuadraticDifferential(np.array([1.0, 0.5j]) / math.sqrt(1.25))
    for p in (1, 2, 3):
        g = pullback(q, p, "quadratic")
        r = np.linspace(1, 60, 6000)[:, None]
        th = np.linspace(0, 2 * np.pi, 256, endpoint=False)[None, :]
        vals = np.abs(g(r * np.exp(1j * th))) * r
        mass = np.trapezoid(vals.mean(axis=1) * 2 * np.pi, r[:, 0])
        assert abs(mass - p) < 2e-3 * p


def test_quadratic_differential_norm():
    rng = np.random.default_rng(0)
    x = rng.normal(size=4) + 1j * rng.normal(size=4)
    x /= np.linalg.norm(x)
    q = QuadraticDifferential(x)
    assert np.isclose(q.l1_norm, 1.0)
    r = np.geomspace(1, 400, 4000)[:, None]
    th = np.linspace(0, 2 * np.pi, 256, endpoint=False)[None, :]
    vals = np.abs(q(r * np.exp(1j * th))) * r
    assert abs(np.trapezoid(vals.mean(axis=1) * 2 * np.pi, r[:, 0]) - 1.0) < 1e-3


def test_truncate_beltrami_support():
    mu = lambda z: 0.3 * (np.abs(z) > 1)
    m = truncate_beltrami(mu, 0.5)
    assert m(np.array([1.5]))[0] == 0
    assert m(np.array([2.5]))[0] == 0.3
    with pytest.raises(DomainError):
        truncate_beltrami(mu, 1.0)


def test_series_schwarzian_of_koebe():
    t = 0.5
    S = schwarzian(koebe(t, 60))
    z = 0.4 * np.exp(1j * np.linspace(0, 6, 9))
    assert np.allclose(S(z), koebe_schwarzian(t)(z), atol=1e-10)


def test_contour_schwarzian_of_callable():
    t = 0.5
    S = schwarzian(lambda z: z / (1 + t * z) ** 2)
    z = np.array([0.1, 0.3j, -0.5 + 0.2j])
    assert np.allclose(S(z), koebe_schwarzian(t)(z), rtol=1e-8)


def test_schwarzian_of_critical_point_raises():
    S = schwarzian(lambda z: z ** 2)
    with pytest.raises(SingularityError):
        S(np.array([0.0]))


def test_contour_derivatives():
    d = contour_derivatives(np.exp, np.array([0.3]), order=3)
    assert np.allclose(d[0], np.exp(0.3), rtol=1e-12)


def test_homotopy():
    t, r = 0.5, 0.6
    f = koebe(t, 40)
    fr = homotopy(f, r)
    z = 0.3 + 0.1j
    assert np.isclose(fr(z), f(r * z) / r)
    Sr = homotopy(schwarzian(f), r)
    assert np.isclose(Sr(z), r * r * koebe_schwarzian(t)(r * z), atol=1e-10)
    assert np.allclose(Sr.series[:10], schwarzian(fr).series[:10], atol=1e-10)


def test_bnorm_of_koebe():
    # sup (1-|z|^2)^2 6t^2/|1-t^2 z^2|^2 = 6 t^2 for t^2 <= 1/2 (attained at 0)
    for t in (0.3, 0.5):
        S = SchwarzianField(Domain.UNIT_DISK, koebe_schwarzian(t))
        val, at = bnorm_argmax(S)
        assert abs(val - 6 * t * t) < 1e-6
        assert abs(at) < 1e-4


def test_bnorm_is_moebius_invariant():
    phi = SchwarzianField(Domain.LOWER_HALF_PLANE, lambda z: (z - 1j) ** -4)
    assert abs(bnorm(phi) - 0.25) < 1e-6
    moved = schwarzian_compose(phi, LOWER_HALF_PLANE_FROM_DISK)
    assert abs(bnorm(moved) - 0.25) < 1e-6


def test_bnorm_of_single_vertex_field():
    # |z - conj z|^2 c/|z|^2 = 4 c sin^2(arg z), sup 4c
    phi = SchwarzianField(Domain.LOWER_HALF_PLANE, lambda z: 0.625 / z ** 2)
    assert abs(bnorm(phi) - 2.5) < 1e-6


def test_bnorm_detects_unbounded_growth():
    phi = SchwarzianField(Domain.UNIT_DISK, lambda z: (1 - z) ** -3)
    with pytest.raises(UnboundedNormError):
        bnorm(phi)


def test_map_from_schwarzian_recovers_koebe():
    t = 0.5
    phi = SchwarzianField(Domain.UNIT_DISK, koebe_schwarzian(t))
    w = map_from_schwarzian(phi)
    f = lambda z: z / (1 + t * z) ** 2
    z = 0.6 * np.exp(1j * np.linspace(0, 6, 11))
    # w agrees with f after the Moebius normalization w(0)=0, w'(0)=1, w''(0)=0
    a2 = -2 * t
    g = f(z) / (1 + a2 * f(z))
    assert np.allclose(w(z), g, atol=1e-9)
    assert np.allclose(w.derivative(z), contour_derivatives(w, z, order=1)[:, 1], atol=1e-7)


def test_moebius_helpers():
    m = Mobius(1, 2, 3, 4)
    z = 0.3 + 0.2j
    assert np.isclose(m.inverse()(m(z)), z)
    w = LOWER_HALF_PLANE_FROM_DISK(np.array([0.0, 0.5j, -0.9]))
    assert np.all(w.imag < 0)
    assert np.isclose(INVERSION(2.0), 0.5)


def test_ahlfors_weill():
    phi = SchwarzianField(Domain.LOWER_HALF_PLANE, lambda z: 0.05 / z ** 2)
    mu = ahlfors_weill(phi)
    assert not mu.violation
    assert np.isclose(mu.sup_modulus, 0.1)
    z = 0.3 + 2j
    assert np.isclose(mu(z), -2 * z.imag ** 2 * 0.05 / np.conj(z) ** 2)
    # sup over H of 2 y^2 |phi(conj z)| on the imaginary axis
    assert np.isclose(abs(mu(1j)), 0.1)
    big = SchwarzianField(Domain.LOWER_HALF_PLANE, lambda z: 1.0 / z ** 2)
    assert ahlfors_weill(big).violation
    with pytest.raises(HypothesisViolation):
        ahlfors_weill(big, strict=True)
