import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from targetwealth.errors import DegenerateMarkers, NoAnalyticExtension
from targetwealth.targets import (
    analytic_extension,
    distribution_from_dict,
    distribution_to_dict,
    entire_terminal_derivative,
    from_markers,
    from_quantile_table,
    lognormal_family,
    transformed_normal_family,
    whole_line_diagnostic_family,
)

P_GRID = np.linspace(0.01, 0.99, 33)


@pytest.mark.parametrize("make", [lambda: lognormal_family(0.16),
                                  lambda: transformed_normal_family(0.16),
                                  lambda: whole_line_diagnostic_family(0.04)])
def test_cdf_quantile_roundtrip(make):
    dist = make()
    np.testing.assert_allclose(dist.cdf(dist.quantile(P_GRID)), P_GRID, atol=1e-9)


@pytest.mark.parametrize("make", [lambda: lognormal_family(0.5),
                                  lambda: transformed_normal_family(0.3)])
def test_quantile_z_is_quantile_at_gaussian_prob(make):
    dist = make()
    z = np.linspace(-3, 3, 25)
    np.testing.assert_allclose(dist.quantile_z(z), dist.quantile(ndtr(z)), rtol=1e-12)


def test_quantile_z_slope_matches_finite_difference():
    dist = transformed_normal_family(0.16)
    z = np.linspace(-2, 2, 17)
    eps = 1e-6
    fd = (dist.quantile_z(z + eps) - dist.quantile_z(z - eps)) / (2 * eps)
    np.testing.assert_allclose(dist.quantile_z_slope(z), fd, rtol=1e-8)


def test_density_is_cdf_derivative():
    dist = lognormal_family(0.16)
    y = np.linspace(0.5, 2.5, 11)
    eps = 1e-6
    fd = (dist.cdf(y + eps) - dist.cdf(y - eps)) / (2 * eps)
    np.testing.assert_allclose(dist.density(y), fd, rtol=1e-7)


def test_transformed_normal_closed_form():
    """F^{-1}(Phi(z)) = e^{2 sqrt(b) z} + 2 e^{sqrt(b) z}."""
    dist = transformed_normal_family(0.16)
    z = np.linspace(-3, 3, 13)
    want = np.exp(0.8 * z) + 2 * np.exp(0.4 * z)
    np.testing.assert_allclose(dist.quantile_z(z), want, rtol=1e-13)


# ---- elicited targets ------------------------------------------------------


def test_markers_interpolates_levels():
    levels = [80, 90, 95, 100, 100, 105, 110, 120, 135, 160]
    dist = from_markers(levels)
    n = len(levels)
    z = ndtri((2 * np.arange(1, n + 1) - 1) / (2 * n))
    # distinct levels (100 repeats) are hit exactly at their knot abscissae
    np.testing.assert_allclose(dist.quantile_z(z[0]), 80.0, rtol=1e-12)
    np.testing.assert_allclose(dist.quantile_z(z[-1]), 160.0, rtol=1e-12)
    # quantile is nondecreasing
    q = dist.quantile(P_GRID)
    assert np.all(np.diff(q) >= 0)


def test_markers_cdf_quantile_roundtrip():
    levels = np.linspace(50.0, 150.0, 12)
    dist = from_markers(levels)
    np.testing.assert_allclose(dist.cdf(dist.quantile(P_GRID)), P_GRID, atol=1e-7)


def test_markers_validation():
    with pytest.raises(ValueError):
        from_markers([100.0] * 5)  # too few
    with pytest.raises(DegenerateMarkers):
        from_markers([100.0] * 12)  # no dispersion
    with pytest.raises(ValueError):
        from_markers([-1.0] + [100.0 + i for i in range(11)])


def test_quantile_table_hits_knots():
    table = [(0.1, 80.0), (0.3, 95.0), (0.5, 103.0), (0.7, 115.0), (0.9, 140.0)]
    dist = from_quantile_table(table)
    for p, x in table:
        np.testing.assert_allclose(dist.quantile(p), x, rtol=1e-10)
    with pytest.raises(ValueError):
        from_quantile_table([(0.2, 100.0), (0.4, 90.0), (0.6, 110.0), (0.8, 120.0)])


# ---- whole-line diagnostic ---------------------------------------------------


def test_whole_line_family_shape():
    dist = whole_line_diagnostic_family(0.04)
    assert not dist.support_positive
    assert dist.growth.kind == "subgaussian"
    # median wealth is zero and negative outcomes carry probability 1/2
    np.testing.assert_allclose(dist.quantile(0.5), 0.0, atol=1e-12)
    np.testing.assert_allclose(dist.cdf(0.0), 0.5, atol=1e-12)
    np.testing.assert_allclose(dist.cdf(dist.quantile(P_GRID)), P_GRID, atol=1e-8)


# ---- entire extensions -------------------------------------------------------


def test_entire_terminal_derivative_matches_real_slope():
    """On the real axis the entire derivative equals d/dy F^{-1}(Phi(y/sqrt(A)))."""
    a_total = 0.04
    for dist in (lognormal_family(0.16), transformed_normal_family(0.16),
                 whole_line_diagnostic_family(a_total)):
        deriv = entire_terminal_derivative(dist, a_total)
        y = np.linspace(-0.5, 0.5, 11)
        sa = np.sqrt(a_total)
        real_slope = dist.quantile_z_slope(y / sa) / sa
        np.testing.assert_allclose(np.real(deriv(y)), real_slope, rtol=1e-10)
        assert np.allclose(np.imag(deriv(y)), 0.0)


def test_entire_extension_refused_for_elicited():
    dist = from_markers(np.linspace(50, 150, 12))
    with pytest.raises(NoAnalyticExtension):
        analytic_extension(dist, 0.1, 0.2)
    with pytest.raises(NoAnalyticExtension):
        entire_terminal_derivative(dist, 0.04)


def test_analytic_extension_on_reals():
    dist = lognormal_family(0.16)
    ext = analytic_extension(dist, c=0.1, s=np.sqrt(0.02))
    x = np.linspace(-2, 2, 9)
    # G(x) = F^{-1}(Phi(c x / s)) on the real axis
    np.testing.assert_allclose(ext.on_reals(x), dist.quantile_z(0.1 * x / np.sqrt(0.02)), rtol=1e-12)


# ---- serialization -----------------------------------------------------------


@pytest.mark.parametrize(
    "doc",
    [
        {"family": "lognormal", "params": {"b": 0.16}},
        {"family": "transformed-normal", "params": {"b": 0.36}},
        {"family": "markers", "markers": [float(v) for v in np.linspace(60, 140, 12)]},
        {
            "family": "custom-quantile-table",
            "table": [[0.1, 80.0], [0.3, 95.0], [0.6, 110.0], [0.9, 140.0]],
        },
    ],
)
def test_serialization_roundtrip(doc):
    dist = distribution_from_dict(doc)
    assert distribution_to_dict(dist) == doc


def test_whole_line_needs_market_risk():
    with pytest.raises(ValueError):
        distribution_from_dict({"family": "whole-line-diagnostic"})
    dist = distribution_from_dict({"family": "whole-line-diagnostic"}, a_total=0.04)
    assert dist.params == {"a_total": 0.04}


def test_unknown_family():
    with pytest.raises(ValueError):
        distribution_from_dict({"family": "student-t"})
