import numpy as np
import pytest

from targetwealth.market import (
    MarketSpec,
    RiskPriceOutOfBounds,
    SingularVolatility,
    TimeOutOfRange,
    build_curves,
    constant_market,
)

MKT = {"mu": 0.07, "r": 0.03, "sigma": 0.2, "horizon": 1.0}


def test_constant_market_risk_price():
    curves = build_curves(constant_market(**MKT))
    np.testing.assert_allclose(curves.lambdas[0], [0.2])
    np.testing.assert_allclose(curves.a_total, 0.04)


def test_cumulative_variance_piecewise_exact():
    """A(t) integrates |lambda|^2 exactly across piece boundaries."""
    doc = {
        "d": 1,
        "horizon": 2.0,
        "pieces": [
            {"t_start": 0.0, "t_end": 0.5, "rate": 0.03, "drift": [0.07], "vol": [[0.2]]},
            {"t_start": 0.5, "t_end": 2.0, "rate": 0.01, "drift": [0.07], "vol": [[0.3]]},
        ],
    }
    curves = build_curves(MarketSpec.from_dict(doc))
    lam2 = (0.2, 0.2)  # |lambda| per piece: 0.04/0.2 = 0.2, 0.06/0.3 = 0.2
    np.testing.assert_allclose(curves.cumulative_variance(0.25), 0.25 * lam2[0] ** 2)
    np.testing.assert_allclose(
        curves.cumulative_variance(1.25), 0.5 * lam2[0] ** 2 + 0.75 * lam2[1] ** 2
    )
    # vectorized evaluation matches scalars
    ts = np.linspace(0.0, 2.0, 9)
    vec = curves.cumulative_variance(ts)
    np.testing.assert_allclose(vec, [curves.cumulative_variance(float(t)) for t in ts])


def test_two_asset_market():
    doc = {
        "d": 2,
        "horizon": 1.0,
        "pieces": [
            {
                "t_start": 0.0,
                "t_end": 1.0,
                "rate": 0.02,
                "drift": [0.06, 0.05],
                "vol": [[0.2, 0.0], [0.05, 0.25]],
            }
        ],
    }
    curves = build_curves(MarketSpec.from_dict(doc))
    sigma = np.array([[0.2, 0.0], [0.05, 0.25]])
    lam = np.linalg.solve(sigma.T, np.array([0.04, 0.03]))
    np.testing.assert_allclose(curves.lambdas[0], lam)
    np.testing.assert_allclose(curves.a_total, lam @ lam)


def test_singular_volatility_refused():
    doc = {
        "d": 2,
        "horizon": 1.0,
        "pieces": [
            {
                "t_start": 0.0,
                "t_end": 1.0,
                "rate": 0.02,
                "drift": [0.06, 0.05],
                "vol": [[0.2, 0.1], [0.2, 0.1]],
            }
        ],
    }
    with pytest.raises(SingularVolatility):
        build_curves(MarketSpec.from_dict(doc))


def test_risk_price_bounds_refused():
    # |lambda| = 0 below the floor
    with pytest.raises(RiskPriceOutOfBounds):
        build_curves(constant_market(mu=0.03, r=0.03, sigma=0.2, horizon=1.0))
    # |lambda| enormous above the cap
    with pytest.raises(RiskPriceOutOfBounds):
        build_curves(constant_market(mu=300.0, r=0.0, sigma=1e-4, horizon=1.0))


def test_time_out_of_range():
    curves = build_curves(constant_market(**MKT))
    with pytest.raises(TimeOutOfRange):
        curves.cumulative_variance(1.5)


def test_pieces_must_tile_horizon():
    doc = {
        "d": 1,
        "horizon": 1.0,
        "pieces": [
            {"t_start": 0.0, "t_end": 0.4, "rate": 0.0, "drift": [0.05], "vol": [[0.2]]},
            {"t_start": 0.6, "t_end": 1.0, "rate": 0.0, "drift": [0.05], "vol": [[0.2]]},
        ],
    }
    with pytest.raises(ValueError):
        MarketSpec.from_dict(doc)
