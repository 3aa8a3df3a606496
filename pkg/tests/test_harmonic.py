import numpy as np
import pytest

from targetwealth.errors import EvaluationOutOfGrid
from targetwealth.harmonic import (
    ConvolutionHarmonic,
    ExponentialSumHarmonic,
    MeasureHarmonic,
    pde_residual,
)
from targetwealth.market import build_curves, constant_market

CURVES = build_curves(constant_market(mu=0.07, r=0.03, sigma=0.2, horizon=1.0))


def test_exponential_sum_closed_form():
    h = ExponentialSumHarmonic([(1.0, 2.0)], CURVES)
    x, t = 0.3, 0.25
    v = CURVES.a_total - CURVES.cumulative_variance(t)
    np.testing.assert_allclose(h.value(x, t), np.exp(2 * x + 2 * v), rtol=1e-14)
    np.testing.assert_allclose(h.derivative_x(x, t), 2 * np.exp(2 * x + 2 * v), rtol=1e-14)
    np.testing.assert_allclose(h.inverse(h.value(x, t), t), x, atol=1e-12)


def test_exponential_sum_multi_term_inverse():
    h = ExponentialSumHarmonic([(1.5, 4.0), (1.26, 2.0)], CURVES)
    for t in (0.0, 0.5, 1.0):
        for x in (-1.0, 0.0, 2.0):
            np.testing.assert_allclose(h.inverse(h.value(x, t), t), x, atol=1e-10)


@pytest.mark.parametrize(
    "make",
    [
        lambda: ExponentialSumHarmonic([(1.0, 2.0), (0.5, 1.0)], CURVES),
        lambda: ConvolutionHarmonic(
            lambda x: np.exp(2 * np.asarray(x)) + 1.0,
            lambda x: 2 * np.exp(2 * np.asarray(x)),
            CURVES,
        ),
    ],
)
def test_heat_equation_residual(make):
    """h_t + 0.5 |lambda|^2 h_xx = 0 in calendar time."""
    h = make()
    for x in (-0.5, 0.0, 0.7):
        for t in (0.2, 0.6):
            assert pde_residual(h, CURVES, x, t) < 1e-5


def test_convolution_matches_exponential_sum():
    """Convolving exponential terminal data reproduces the closed form."""
    exact = ExponentialSumHarmonic([(1.0, 2.0)], CURVES)
    conv = ConvolutionHarmonic(
        lambda x: np.exp(2 * np.asarray(x)),
        lambda x: 2 * np.exp(2 * np.asarray(x)),
        CURVES,
    )
    x = np.linspace(-1, 1, 9)
    for t in (0.0, 0.4, 1.0):
        np.testing.assert_allclose(conv.value(x, t), exact.value(x, t), rtol=1e-12)
        np.testing.assert_allclose(conv.derivative_x(x, t), exact.derivative_x(x, t), rtol=1e-12)
    np.testing.assert_allclose(conv.inverse(2.5, 0.3), exact.inverse(2.5, 0.3), atol=1e-10)


def test_convolution_bulk_interpolation_close_to_direct():
    conv = ConvolutionHarmonic(
        lambda x: np.exp(2 * np.asarray(x)),
        lambda x: 2 * np.exp(2 * np.asarray(x)),
        CURVES,
    )
    x = np.linspace(-0.5, 0.5, 1000)
    direct = conv.value(x, 0.5)
    bulk = conv.value_bulk(x, 0.5)
    np.testing.assert_allclose(bulk, direct, rtol=1e-5)


def test_convolution_bulk_grid_escape():
    conv = ConvolutionHarmonic(
        lambda x: np.exp(np.asarray(x)), lambda x: np.exp(np.asarray(x)), CURVES
    )
    # one extension is tolerated, a second escape raises
    span = conv._half_span
    conv.value_bulk(np.array([2.0 * span]), 0.1)
    with pytest.raises(EvaluationOutOfGrid):
        conv.value_bulk(np.array([10.0 * span]), 0.1)


def test_measure_harmonic_single_atom():
    h = MeasureHarmonic([2.0], [2.0])
    x, tau = 0.1, 0.03
    np.testing.assert_allclose(h.value(x, tau), np.exp(2 * x - 2 * tau), rtol=1e-14)
    np.testing.assert_allclose(h.derivative_x(x, tau), 2 * np.exp(2 * x - 2 * tau), rtol=1e-14)
    np.testing.assert_allclose(h.inverse(h.value(x, tau), tau), x, atol=1e-13)


def test_measure_harmonic_tilt_pins_budget():
    """The budget tilt makes h(-A_T, 0) = x0 with the terminal datum intact."""
    h = MeasureHarmonic([2.0, 4.0], [1.0, 0.5])
    a_total, x0 = 0.04, 1.7
    tilted = h.tilted(a_total, x0)
    np.testing.assert_allclose(x0 * h.value(0.0 + a_total, 0.0), tilted.value(0.0, 0.0), rtol=1e-14)
    np.testing.assert_allclose(tilted.value(-a_total, 0.0), x0 * h.value(0.0, 0.0), rtol=1e-14)


def test_measure_harmonic_rejects_bad_measures():
    with pytest.raises(ValueError):
        MeasureHarmonic([-1.0, 2.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        MeasureHarmonic([1.0], [0.0])


def test_measure_harmonic_heat_pde():
    """h_tau + 0.5 h_xx = 0: the backward heat equation in remaining variance."""
    h = MeasureHarmonic([1.0, 3.0], [0.7, 0.2])
    x, tau, dx, dtau = 0.2, 0.5, 1e-4, 1e-6
    h_tau = (h.value(x, tau + dtau) - h.value(x, tau - dtau)) / (2 * dtau)
    h_xx = (h.value(x + dx, tau) - 2 * h.value(x, tau) + h.value(x - dx, tau)) / dx**2
    assert abs(h_tau + 0.5 * h_xx) / abs(h.value(x, tau)) < 1e-5
