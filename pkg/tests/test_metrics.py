import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grunskylab.errors import DomainError, NormalizationError
from grunskylab.metrics import (
    NormReport,
    alpha_functional,
    alpha_matrix,
    alpha_search,
    exterior_moments,
    green_function,
    grunsky_bound_check,
    limit_grunsky_estimate,
    outer_limit_estimate,
    reflection_coefficient,
    teich_distance,
)
from grunskylab.models import get_model


def saturating(k):
    return lambda z: np.where(np.abs(z) > 1, k * (z / np.conj(z)) ** 2, 0)


def annulus_rotation(k):
    return lambda z: np.where((np.abs(z) > 1) & (np.abs(z) < 2), k * np.conj(z) / z, 0)


def test_reflection_and_green():
    q, Q = reflection_coefficient(0.5)
    assert abs(q - 0.8) < 1e-12 and abs(Q - 9) < 1e-12
    # (1+q)/(1-q) = ((1+k)/(1-k))^2
    for k in (0.1, 0.3, 0.9):
        q, Q = reflection_coefficient(k)
        assert np.isclose(Q, ((1 + k) / (1 - k)) ** 2)
    assert abs(green_function(0.5) - math.log(0.5)) < 1e-12
    assert green_function(0) == -math.inf
    with pytest.raises(DomainError):
        reflection_coefficient(1.0)
    with pytest.raises(DomainError):
        green_function(-0.1)


def test_teich_distance():
    assert teich_distance(0) == 0
    assert np.isclose(teich_distance(0.5), 0.5 * math.log(3))
    with pytest.raises(DomainError):
        teich_distance(1)


def test_root_norms_of_koebe():
    f = get_model("koebe_t", t=0.5).taylor(200)
    rep = limit_grunsky_estimate(f, 4, 32, k_reference=0.5)
    assert abs(rep.kappa_by_p[(1, 32)] - 0.25) < 1e-8
    assert 0.499 <= rep.kappa_by_p[(2, 32)] <= 0.5 + 1e-8
    assert rep.kappa_by_p[(3, 32)] < 0.5 - 1e-3
    assert rep.kappa_hat_estimate == max(rep.kappa_by_p[(2, 32)], rep.kappa_by_p[(4, 32)])
    threaded = limit_grunsky_estimate(f, 4, 32, threads=3)
    assert threaded.kappa_by_p == rep.kappa_by_p
    with pytest.raises(ValueError):
        limit_grunsky_estimate(f, 3, 8)


def test_norm_report_serialization():
    rep = NormReport({(1, 8): 0.25, (2, 8): 0.5}, 0.5, 0.5, {(1, 8): True})
    back = NormReport.from_json(rep.to_json())
    assert back.kappa_by_p == rep.kappa_by_p and back.k_reference == 0.5
    lines = rep.to_csv().splitlines()
    assert lines[0] == "p,N,kappa" and lines[-2].startswith("kappa_hat,,")
    assert NormReport.estimate({(1, 4): 0.9, (2, 4): 0.3, (2, 2): 0.8}) == 0.3
    with pytest.raises(ValueError):
        NormReport({(1, 8): 1.5}, 0.0)


def test_exterior_moments_oracle():
    # mu = z^4 |z|^-10 on |z| > 1: M_2 = 2 pi / 8, other moments vanish
    mu = lambda z: np.where(np.abs(z) > 1, z ** 4 * np.abs(z) ** -10.0, 0)
    M = exterior_moments(mu, 6)
    assert np.isclose(M[2], np.pi / 4, rtol=1e-10)
    assert np.allclose(np.delete(M[1:], 1), 0, atol=1e-12)


def test_alpha_of_saturating_coefficient():
    res = alpha_functional(saturating(0.3))
    assert abs(res.value - 0.3) < 0.3 * 5e-3
    assert res.converged
    assert abs(grunsky_bound_check(0.3, res.value) - 0.3) < 0.3 * 5e-3


def test_alpha_of_rotation_is_zero():
    assert alpha_functional(annulus_rotation(0.3)).value < 1e-10


def test_alpha_rejects_non_finite_coefficient():
    with pytest.raises(NormalizationError):
        alpha_functional(lambda z: np.full(np.shape(z), np.nan, dtype=complex))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=5000))
def test_alpha_search_agrees_with_singular_value(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    A = (a + a.T) / 2
    found = alpha_search(A, starts=8, seed=seed)
    assert abs(found.value - np.linalg.svd(A, compute_uv=False)[0]) < 1e-6


def test_alpha_matrix_is_symmetric():
    A = alpha_matrix(saturating(0.3), 8)
    assert np.allclose(A, A.T)


def test_bound_check():
    assert np.isclose(grunsky_bound_check(0.3, 0.3), 0.3)
    assert np.isclose(grunsky_bound_check(0.5, 0.0), 0.25)
    assert grunsky_bound_check(0.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        grunsky_bound_check(0.3, 0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.01, max_value=0.99), st.floats(min_value=0, max_value=1))
def test_bound_lies_between_square_and_k(k, a):
    b = grunsky_bound_check(k, a * k)
    assert k * k - 1e-12 <= b <= k + 1e-12


def test_outer_limit_running_max():
    res = outer_limit_estimate(saturating(0.3), [0.9, 0.99], [1, 2], n_coords=16)
    assert len(res.table) == 4
    assert np.all(np.diff(res.running_max) >= 0)
    assert res.value == max(v for _, _, v in res.table)
    assert res.value <= 0.3 + 1e-6
