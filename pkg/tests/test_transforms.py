import numpy as np
import pytest

from arbubble.errors import DomainError
from arbubble.model import GaussianBubble, LognormalBubble, MarketParams
from arbubble.transforms import (GaussCoords, LognCoords, f0_gaussian,
                                 f0_lognormal, f_of_gauss_coords,
                                 f_of_logn_coords, gauss_forward,
                                 gauss_inverse, logn_forward, logn_inverse)

P = MarketParams(mu=0.8, sigma=0.4, r=0.2)


def test_gauss_forward_pinned():
    c = gauss_forward(1.0, 0.0, 1.0, P, GaussianBubble(0.0, 0.1), T=1.0)
    # u = ln 1 - (0.2 - 0.08) = -0.12, halved over sigma on both axes
    assert c.x_bar == pytest.approx(-0.15, abs=1e-15)
    assert c.y_bar == pytest.approx(-0.15, abs=1e-15)
    assert c.tau == 0.0


def test_gauss_forward_symmetric_at_zero_bubble():
    bub = GaussianBubble(0.0, 0.2)
    for S in (0.3, 1.0, 42.0):
        c = gauss_forward(S, 0.0, 0.4, P, bub, T=2.0)
        assert c.x_bar == pytest.approx(c.y_bar, rel=1e-15)


def test_gauss_round_trip():
    rng = np.random.default_rng(7)
    bub = GaussianBubble(0.3, 0.1)
    T = 2.0
    S = rng.uniform(0.1, 50.0, 10_000)
    f = rng.uniform(-1.0, 1.0, 10_000)
    t = rng.uniform(0.0, T, 10_000)
    S2, f2, t2 = gauss_inverse(gauss_forward(S, f, t, P, bub, T), P, bub, T)
    np.testing.assert_allclose(S2, S, rtol=1e-12)
    np.testing.assert_allclose(f2, f, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(t2, t, rtol=1e-12, atol=1e-12)


def test_gauss_forward_validation():
    bub = GaussianBubble(0.0, 0.1)
    with pytest.raises(DomainError):
        gauss_forward(-1.0, 0.0, 0.0, P, bub, T=1.0)
    with pytest.raises(DomainError):
        gauss_forward(1.0, 0.0, 0.0, P, GaussianBubble(0.0, 0.0), T=1.0)
    with pytest.raises(DomainError):
        gauss_forward(1.0, 0.0, 1.5, P, bub, T=1.0)


def test_f_of_gauss_coords():
    bub0 = GaussianBubble(0.0, 0.1)
    assert f_of_gauss_coords(GaussCoords(1.3, 1.3, 0.5), bub0, T=1.0) == 0.0
    # drift term enters with + so the map inverts the forward chart
    bub = GaussianBubble(0.3, 0.1)
    got = f_of_gauss_coords(GaussCoords(2.0, 0.0, 0.0), bub, T=1.0)
    assert got == pytest.approx(0.5, abs=1e-15)


def test_f_of_gauss_consistency():
    rng = np.random.default_rng(11)
    bub = GaussianBubble(-0.2, 0.35)
    T = 1.5
    for _ in range(50):
        S = float(rng.uniform(0.2, 30.0))
        f = float(rng.uniform(-1.0, 1.0))
        t = float(rng.uniform(0.0, T))
        c = gauss_forward(S, f, t, P, bub, T)
        assert f_of_gauss_coords(c, bub, T) == pytest.approx(f, abs=1e-12)


def test_logn_forward_pinned():
    bub = LognormalBubble(0.1, 0.2)
    c = logn_forward(1.0, 1.0, 0.0, P, bub, T=1.0)
    assert c.x == 0.0 and c.y == 0.0 and c.tau == 1.0
    c = logn_forward(1.0, float(np.exp(0.2)), 0.0, P, bub, T=1.0)
    assert c.x == pytest.approx(0.5, rel=1e-14)
    assert c.y == pytest.approx(-0.5, rel=1e-14)


def test_logn_round_trip():
    rng = np.random.default_rng(13)
    bub = LognormalBubble(0.3, 0.25)
    T = 2.0
    S = rng.uniform(0.1, 50.0, 10_000)
    f = rng.uniform(1e-3, 5.0, 10_000)
    t = rng.uniform(0.0, T, 10_000)
    S2, f2, t2 = logn_inverse(logn_forward(S, f, t, P, bub, T), P, bub, T)
    np.testing.assert_allclose(S2, S, rtol=1e-12)
    np.testing.assert_allclose(f2, f, rtol=1e-12)
    np.testing.assert_allclose(t2, t, rtol=1e-12, atol=1e-12)


def test_logn_forward_refuses_nonpositive_f():
    bub = LognormalBubble(0.1, 0.2)
    for bad in (0.0, -0.3):
        with pytest.raises(DomainError):
            logn_forward(1.0, bad, 0.0, P, bub, T=1.0)


def test_f_of_logn_coords():
    bub = LognormalBubble(0.02, 0.2)  # mu_f_bar = gamma_bar^2 / 2
    assert f_of_logn_coords(LognCoords(0.7, 0.7, 1.0), bub, T=1.0) == 1.0
    got = f_of_logn_coords(LognCoords(1.0, 0.0, 0.3), bub, T=1.0)
    assert got == pytest.approx(np.exp(0.2), rel=1e-14)
    rng = np.random.default_rng(17)
    c = LognCoords(rng.normal(size=10_000), rng.normal(size=10_000), 0.2)
    assert np.all(f_of_logn_coords(c, LognormalBubble(0.5, 0.9), T=1.0) > 0.0)


def test_f_of_logn_consistency():
    rng = np.random.default_rng(19)
    bub = LognormalBubble(0.3, 0.25)
    T = 1.0
    for _ in range(50):
        S = float(rng.uniform(0.2, 30.0))
        f = float(rng.uniform(0.05, 4.0))
        t = float(rng.uniform(0.0, T))
        c = logn_forward(S, f, t, P, bub, T)
        assert f_of_logn_coords(c, bub, T) == pytest.approx(f, rel=1e-12)


def test_f0_gaussian():
    bub = GaussianBubble(0.0, 0.1)
    assert f0_gaussian(5.0, 5.0, 0.3, 1.0, P, bub, 0.0) == 0.3
    S = float(np.exp(0.4))
    got = f0_gaussian(S, 1.0, 0.3, 1.0, P, bub, -0.75)
    assert got == pytest.approx(0.35, rel=1e-14)
    flat = GaussianBubble(0.2, 0.0)
    assert f0_gaussian(3.0, 11.0, 0.3, 0.7, P, flat, -0.75) == 0.3


def test_f0_lognormal():
    bub = LognormalBubble(0.0, 0.2)
    assert f0_lognormal(5.0, 5.0, 1.3, 1.0, P, bub, 0.0) == 1.3
    half = LognormalBubble(0.0, 0.5 * P.sigma)
    assert f0_lognormal(1.0, 4.0, 1.0, 1.0, P, half, 0.0) == pytest.approx(2.0, rel=1e-14)
    rng = np.random.default_rng(23)
    out = f0_lognormal(rng.uniform(1.0, 9.0, 1000), rng.uniform(1.0, 9.0, 1000),
                       rng.uniform(0.01, 3.0, 1000), 0.8, P, bub, 0.6)
    assert np.all(out > 0.0)


def _fd_jacobian(fn, S, f, h=1e-6):
    """Central-difference 2x2 Jacobian determinant of (a, b) = fn(S, f)."""
    aS1, bS1 = fn(S * (1 + h), f)
    aS0, bS0 = fn(S * (1 - h), f)
    af1, bf1 = fn(S, f + h)
    af0, bf0 = fn(S, f - h)
    da_dS, db_dS = (aS1 - aS0) / (2 * S * h), (bS1 - bS0) / (2 * S * h)
    da_df, db_df = (af1 - af0) / (2 * h), (bf1 - bf0) / (2 * h)
    return da_dS * db_df - da_df * db_dS


def test_gauss_area_element():
    """|det d(x,y)/d(S,f)| = 1/(2 sigma Gamma S)."""
    bub = GaussianBubble(0.3, 0.1)

    def fn(S, f):
        c = gauss_forward(S, f, 0.4, P, bub, T=1.0)
        return c.x_bar, c.y_bar

    rng = np.random.default_rng(29)
    for _ in range(20):
        S = float(rng.uniform(0.5, 20.0))
        f = float(rng.uniform(-1.0, 1.0))
        det = _fd_jacobian(fn, S, f)
        assert abs(det) == pytest.approx(1.0 / (2 * P.sigma * bub.gamma * S), rel=1e-6)


def test_logn_area_element():
    """|det d(x,y)/d(S,f)| = 1/(2 sigma Gamma_bar S f)."""
    bub = LognormalBubble(0.3, 0.25)

    def fn(S, f):
        c = logn_forward(S, f, 0.4, P, bub, T=1.0)
        return c.x, c.y

    rng = np.random.default_rng(31)
    for _ in range(20):
        S = float(rng.uniform(0.5, 20.0))
        f = float(rng.uniform(0.2, 3.0))
        det = _fd_jacobian(fn, S, f)
        expect = 1.0 / (2 * P.sigma * bub.gamma_bar * S * f)
        assert abs(det) == pytest.approx(expect, rel=1e-6)
