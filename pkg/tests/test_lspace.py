import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grunskylab.errors import SymmetryError
from grunskylab.lspace import GrunskyPoint, lnorm, membership_probe, segment_scan
from grunskylab.models import get_model
from grunskylab.series import TaylorMap


def test_diagonal_lnorm():
    # sqrt(mn) c_mn = 0.5^m on the diagonal: sup 0.5 plus operator norm 0.5
    assert abs(lnorm(GrunskyPoint.diagonal(0.5, 20)) - 1.0) < 1e-9
    assert np.isclose(lnorm(GrunskyPoint(np.array([[0.3]]))), 0.6)
    assert lnorm(GrunskyPoint(np.zeros((0, 0)))) == 0.0


def test_diagonal_kappa_is_max_power():
    for N in (1, 3, 6):
        assert np.isclose(membership_probe(GrunskyPoint.diagonal(1.2, N)).kappa, 1.2 ** N)
    assert np.isclose(membership_probe(GrunskyPoint.diagonal(0.5, 8)).kappa, 0.5)


def test_from_map_first_column():
    F = TaylorMap.sigma([0.1, 0.3, -0.2, 0.05], exact=True)
    c = GrunskyPoint.from_map(F, 3)
    assert np.allclose(c.entries[:, 0], F.coeffs[1:4])
    f = get_model("exterior_diag_t", t=0.4).taylor(40)
    d = GrunskyPoint.from_map(f, 5)
    assert np.allclose(d.entries, GrunskyPoint.diagonal(0.4, 5).entries, atol=1e-14)


def test_symmetry_and_json():
    with pytest.raises(SymmetryError):
        GrunskyPoint(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        GrunskyPoint(np.zeros(3))
    c = GrunskyPoint.diagonal(0.3 + 0.1j, 4)
    assert np.array_equal(GrunskyPoint.from_json(c.to_json()).entries, c.entries)
    with pytest.raises(ValueError):
        GrunskyPoint.from_json('{"n": 2, "entries": [[1, 0]]}')


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=10_000),
       st.floats(min_value=0.0, max_value=3.0))
def test_homogeneity_along_rays(n, seed, t):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    c = GrunskyPoint(0.2 * (a + a.T))
    k = membership_probe(c).kappa
    assert abs(membership_probe(c.scaled(t)).kappa - t * k) <= 1e-12 * max(1.0, t * k)
    assert abs(lnorm(c.scaled(t)) - t * lnorm(c)) <= 1e-12 * max(1.0, t * lnorm(c))


def test_segment_scan():
    res = segment_scan(GrunskyPoint.diagonal(0.5, 4).scaled(3.0), 11)
    assert res.interval
    assert [r.inside for r in res.rows] == [r.t * 1.5 < 1 for r in res.rows]
    assert res.to_csv().splitlines()[0] == "t,kappa,lnorm,inside"
    with pytest.raises(ValueError):
        segment_scan(GrunskyPoint.diagonal(0.5, 4), 1)
