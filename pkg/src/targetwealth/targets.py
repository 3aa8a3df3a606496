"""Target wealth distributions with the regularity the engines require.

A target is a continuous, strictly increasing distribution F on (0, ∞) —
or, for one diagnostic family, on the whole line. Each TargetDistribution
carries, besides cdf/quantile/density, two things the engines lean on:

* ``quantile_z(z) = F⁻¹(Φ(z))`` evaluated natively in z-space, so that deep
  Gaussian tails never round-trip through probabilities near 0 or 1;
* a growth certificate: constants (K, a) with F⁻¹(Φ(x)) ≤ K·e^{a|x|} on the
  probe range (or K·e^{a·x²} with a < ½ for the subgaussian class, which only
  the flexible-horizon engine accepts).

Elicited markers and custom quantile tables are lifted to a smooth target by
monotone cubic interpolation of (Φ⁻¹(p_i), log x_i) with log-linear tail
extrapolation; the knots reproduce the elicited quantiles exactly, and the
tail convention is what certifies the growth bound. The smoothing convention
itself is a modeling choice, not part of the elicitation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import erfi, ndtr, ndtri

from .errors import DegenerateMarkers, GrowthViolation, NoAnalyticExtension

_SQRT_HALF_PI = np.sqrt(np.pi / 2.0)


def _norm_pdf(x):
    return np.exp(-0.5 * np.asarray(x) ** 2) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class GrowthCertificate:
    """F⁻¹(Φ(x)) ≤ K·e^{a|x|} ("exponential") or K·e^{a x²} ("subgaussian")."""

    kind: str  # "exponential" | "subgaussian"
    K: float
    a: float

    def envelope(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            return self.K * np.exp(self.a * np.abs(x))
        return self.K * np.exp(self.a * x**2)


@dataclass(frozen=True)
class TargetDistribution:
    family: str
    params: dict
    cdf: Callable
    quantile: Callable
    density: Callable
    quantile_z: Callable
    quantile_z_slope: Callable  # d/dz of quantile_z — the terminal-data slope
    growth: GrowthCertificate
    support_positive: bool = True
    # z-locations where quantile_z is merely C¹ (interpolation knots);
    # Gaussian quadratures split panels there instead of straddling the kinks
    z_breaks: tuple = ()

    def __repr__(self):
        return f"TargetDistribution(family={self.family!r}, params={self.params!r})"


def _check_growth(quantile_z: Callable, cert: GrowthCertificate) -> None:
    """Probe the growth bound on x ∈ [−8, 8]; refuse targets that escape it."""
    x = np.linspace(-8.0, 8.0, 321)
    vals = np.abs(np.asarray(quantile_z(x), dtype=float))
    env = cert.envelope(x)
    if not np.all(np.isfinite(vals)):
        raise GrowthViolation("quantile is not finite on the probe range")
    bad = vals > env * (1.0 + 1e-9)
    if np.any(bad):
        worst = float(np.max(vals[bad] / env[bad]))
        raise GrowthViolation(
            f"quantile exceeds its growth envelope by factor {worst:g} on the probe range",
            kind=cert.kind,
            K=cert.K,
            a=cert.a,
        )


def lognormal_family(b: float) -> TargetDistribution:
    """Target: log of wealth is centered normal with variance b."""
    if b <= 0:
        raise ValueError(f"lognormal parameter b must be positive, got {b}")
    sb = np.sqrt(b)

    def cdf(y):
        y = np.asarray(y, dtype=float)
        return ndtr(np.log(y) / sb)

    def quantile(p):
        return np.exp(sb * ndtri(np.asarray(p, dtype=float)))

    def density(y):
        y = np.asarray(y, dtype=float)
        return _norm_pdf(np.log(y) / sb) / (y * sb)

    def quantile_z(z):
        return np.exp(sb * np.asarray(z, dtype=float))

    def quantile_z_slope(z):
        return sb * np.exp(sb * np.asarray(z, dtype=float))

    cert = GrowthCertificate("exponential", 1.0, sb)
    dist = TargetDistribution(
        family="lognormal",
        params={"b": float(b)},
        cdf=cdf,
        quantile=quantile,
        density=density,
        quantile_z=quantile_z,
        quantile_z_slope=quantile_z_slope,
        growth=cert,
    )
    _check_growth(quantile_z, cert)
    return dist


def transformed_normal_family(b: float) -> TargetDistribution:
    """Target: g(wealth) is centered normal with variance b for
    g(x) = log(−1+√(1+x)); equivalently F⁻¹(Φ(x)) = e^{2√b·x} + 2e^{√b·x}."""
    if b <= 0:
        raise ValueError(f"transformed-normal parameter b must be positive, got {b}")
    sb = np.sqrt(b)

    def _g(y):
        return np.log(-1.0 + np.sqrt(1.0 + np.asarray(y, dtype=float)))

    def cdf(y):
        return ndtr(_g(y) / sb)

    def quantile_z(z):
        z = np.asarray(z, dtype=float)
        return np.exp(2.0 * sb * z) + 2.0 * np.exp(sb * z)

    def quantile(p):
        return quantile_z(ndtri(np.asarray(p, dtype=float)))

    def density(y):
        y = np.asarray(y, dtype=float)
        root = np.sqrt(1.0 + y)
        g_prime = 1.0 / (2.0 * root * (root - 1.0))
        return _norm_pdf(_g(y) / sb) * g_prime / sb

    def quantile_z_slope(z):
        z = np.asarray(z, dtype=float)
        return 2.0 * sb * np.exp(2.0 * sb * z) + 2.0 * sb * np.exp(sb * z)

    cert = GrowthCertificate("exponential", 3.0, 2.0 * sb)
    dist = TargetDistribution(
        family="transformed-normal",
        params={"b": float(b)},
        cdf=cdf,
        quantile=quantile,
        density=density,
        quantile_z=quantile_z,
        quantile_z_slope=quantile_z_slope,
        growth=cert,
    )
    _check_growth(quantile_z, cert)
    return dist


# ---------------------------------------------------------------------------
# interpolated targets (markers, custom quantile tables)
# ---------------------------------------------------------------------------


class _LogQuantileCurve:
    """Monotone cubic interpolant of log F⁻¹(Φ(z)) with log-linear tails."""

    def __init__(self, z_knots: np.ndarray, log_levels: np.ndarray):
        self.z_knots = z_knots
        self.log_levels = log_levels
        self.interp = PchipInterpolator(z_knots, log_levels)
        self.interp_d = self.interp.derivative()
        self.z_lo, self.z_hi = z_knots[0], z_knots[-1]
        self.v_lo, self.v_hi = log_levels[0], log_levels[-1]
        # tail slopes: secant of the outermost knot intervals (always > 0)
        self.s_lo = (log_levels[1] - log_levels[0]) / (z_knots[1] - z_knots[0])
        self.s_hi = (log_levels[-1] - log_levels[-2]) / (z_knots[-1] - z_knots[-2])

    def value(self, z):
        z = np.asarray(z, dtype=float)
        out = np.empty_like(z)
        lo = z < self.z_lo
        hi = z > self.z_hi
        mid = ~(lo | hi)
        out[lo] = self.v_lo + self.s_lo * (z[lo] - self.z_lo)
        out[hi] = self.v_hi + self.s_hi * (z[hi] - self.z_hi)
        out[mid] = self.interp(z[mid])
        return out

    def slope(self, z):
        z = np.asarray(z, dtype=float)
        out = np.empty_like(z)
        lo = z < self.z_lo
        hi = z > self.z_hi
        mid = ~(lo | hi)
        out[lo] = self.s_lo
        out[hi] = self.s_hi
        out[mid] = self.interp_d(z[mid])
        return out

    def invert(self, log_y):
        """z with value(z) = log_y, by bracketing on a dense grid plus Newton."""
        log_y = np.asarray(log_y, dtype=float)
        # closed-form tails, grid+Newton in the interpolated middle
        z = np.where(
            log_y <= self.v_lo,
            self.z_lo + (log_y - self.v_lo) / self.s_lo,
            np.where(
                log_y >= self.v_hi,
                self.z_hi + (log_y - self.v_hi) / self.s_hi,
                np.interp(log_y, self._grid_vals, self._grid_z),
            ),
        )
        mid = (log_y > self.v_lo) & (log_y < self.v_hi)
        if np.any(mid):
            zi = z[mid]
            for _ in range(4):
                resid = self.interp(zi) - log_y[mid]
                zi = zi - resid / np.maximum(self.interp_d(zi), 1e-300)
                zi = np.clip(zi, self.z_lo, self.z_hi)
            z = z.copy()
            z[mid] = zi
        return z

    @property
    def _grid_z(self):
        grid = getattr(self, "_cached_grid_z", None)
        if grid is None:
            grid = np.linspace(self.z_lo, self.z_hi, 4097)
            object.__setattr__(self, "_cached_grid_z", grid)
            object.__setattr__(self, "_cached_grid_vals", self.interp(grid))
        return grid

    @property
    def _grid_vals(self):
        _ = self._grid_z
        return self._cached_grid_vals


def _curve_to_distribution(curve: _LogQuantileCurve, family: str, params: dict) -> TargetDistribution:
    def quantile_z(z):
        return np.exp(curve.value(z))

    def quantile_z_slope(z):
        z = np.asarray(z, dtype=float)
        return np.exp(curve.value(z)) * curve.slope(z)

    def quantile(p):
        return quantile_z(ndtri(np.asarray(p, dtype=float)))

    def cdf(y):
        y = np.asarray(y, dtype=float)
        return ndtr(curve.invert(np.log(y)))

    def density(y):
        y = np.asarray(y, dtype=float)
        z = curve.invert(np.log(y))
        # F(y) = Φ(z(y)), dz/dy = 1 / (y · d log Q/dz)
        return _norm_pdf(z) / (y * curve.slope(z))

    a = float(max(abs(curve.s_lo), abs(curve.s_hi)))
    probe = np.linspace(-8.0, 8.0, 321)
    K = float(np.max(np.exp(curve.value(probe)) * np.exp(-a * np.abs(probe)))) * (1.0 + 1e-9)
    cert = GrowthCertificate("exponential", K, a)
    dist = TargetDistribution(
        family=family,
        params=params,
        cdf=cdf,
        quantile=quantile,
        density=density,
        quantile_z=quantile_z,
        quantile_z_slope=quantile_z_slope,
        growth=cert,
        z_breaks=tuple(float(k) for k in curve.z_knots),
    )
    _check_growth(quantile_z, cert)
    return dist


def from_markers(levels) -> TargetDistribution:
    """Lift N equally likely elicited wealth levels to a smooth target.

    The empirical quantile points are (p_i, x_(i)) with p_i = (2i−1)/2N and
    x_(i) the sorted levels; runs of tied levels collapse to one knot at the
    run's mean Gaussian abscissa.
    """
    levels = np.sort(np.asarray(levels, dtype=float))
    n = len(levels)
    if n < 10:
        raise ValueError(f"need at least 10 markers, got {n}")
    if np.any(levels <= 0):
        raise ValueError("marker levels must be strictly positive")
    if levels[0] == levels[-1]:
        raise DegenerateMarkers(
            "all markers sit at one level; a continuous target needs dispersion"
        )
    z = ndtri((2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n))
    # collapse ties: one knot per distinct level, at the mean z of its run
    uniq, start = np.unique(levels, return_index=True)
    z_knots = np.array(
        [z[s : s + np.count_nonzero(levels == u)].mean() for u, s in zip(uniq, start)]
    )
    return _curve_to_distribution(
        _LogQuantileCurve(z_knots, np.log(uniq)),
        family="markers",
        params={"levels": [float(v) for v in levels]},
    )


def from_quantile_table(pairs) -> TargetDistribution:
    """Target from explicit (p, x) quantile pairs, strictly increasing in both."""
    pairs = sorted((float(p), float(x)) for p, x in pairs)
    if len(pairs) < 4:
        raise ValueError("need at least 4 quantile pairs")
    p = np.array([q for q, _ in pairs])
    x = np.array([v for _, v in pairs])
    if np.any(p <= 0) or np.any(p >= 1):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    if np.any(np.diff(p) <= 0) or np.any(np.diff(x) <= 0):
        raise ValueError("quantile table must be strictly increasing in p and x")
    if np.any(x <= 0):
        raise ValueError("quantile levels must be strictly positive")
    return _curve_to_distribution(
        _LogQuantileCurve(ndtri(p), np.log(x)),
        family="custom-quantile-table",
        params={"table": [[float(a), float(b)] for a, b in pairs]},
    )


# ---------------------------------------------------------------------------
# whole-line diagnostic family
# ---------------------------------------------------------------------------


def _h_primitive(x):
    """H(x) = ∫₀ˣ e^{z²/2} dz = √(π/2)·erfi(x/√2)."""
    return _SQRT_HALF_PI * erfi(np.asarray(x, dtype=float) / np.sqrt(2.0))


def _h_primitive_inverse(y):
    """Inverse of H, via asymptotic seed plus Newton (H'(z) = e^{z²/2})."""
    y = np.asarray(y, dtype=float)
    ay = np.abs(y)
    # seed: H(z) ≈ z for small z; log H(z) ≈ z²/2 − log z for large z
    seed = np.where(ay < 1.5, ay, np.sqrt(2.0 * np.log(np.maximum(ay, 1.5)) + 2.0))
    z = seed
    for _ in range(60):
        step = (_h_primitive(z) - ay) * np.exp(-0.5 * z**2)
        z = np.maximum(z - step, 0.0)
        if np.all(np.abs(step) < 1e-14 * (1.0 + z)):
            break
    return np.sign(y) * z


def whole_line_diagnostic_family(a_total: float) -> TargetDistribution:
    """The whole-line target used to exercise the inadmissibility diagnostics:
    F(y) = Φ(√(1+1/A)·H⁻¹(y)) with H(x) = ∫₀ˣ e^{z²/2} dz and A the market's
    total cumulative risk. Its quantile grows like e^{x²/(2(A+1))} — inside
    the subgaussian envelope, so only the flexible-horizon engine accepts it,
    and the wealth it asks for is negative with probability one half."""
    if a_total <= 0:
        raise ValueError("a_total must be positive")
    scale = np.sqrt(1.0 + 1.0 / a_total)

    def cdf(y):
        return ndtr(scale * _h_primitive_inverse(y))

    def quantile(p):
        return _h_primitive(ndtri(np.asarray(p, dtype=float)) / scale)

    def quantile_z(z):
        return _h_primitive(np.asarray(z, dtype=float) / scale)

    def density(y):
        z = _h_primitive_inverse(y)
        return _norm_pdf(scale * z) * scale * np.exp(-0.5 * z**2)

    def quantile_z_slope(z):
        z = np.asarray(z, dtype=float)
        return np.exp(0.5 * (z / scale) ** 2) / scale

    a_growth = 1.0 / (2.0 * (a_total + 1.0))
    cert = GrowthCertificate("subgaussian", 1.0, a_growth)
    return TargetDistribution(
        family="whole-line-diagnostic",
        params={"a_total": float(a_total)},
        cdf=cdf,
        quantile=quantile,
        density=density,
        quantile_z=quantile_z,
        quantile_z_slope=quantile_z_slope,
        growth=cert,
        support_positive=False,
    )


# ---------------------------------------------------------------------------
# entire extensions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticQuantileExtension:
    """Entire function G with G(x) = F⁻¹(Φ(c·x/s)) on the real axis.

    Only exists in closed form: exponential-family targets give sums of pure
    exponentials Σ coef·e^{mult·k·z}. Marker and table targets have no
    certifiable entire continuation and are refused upstream.
    """

    G: Callable
    family: str
    k: float
    terms: tuple  # ((coef, mult), ...) such that G(z) = Σ coef·e^{mult·k·z}

    def on_reals(self, x):
        return np.real(self.G(np.asarray(x, dtype=complex)))


def analytic_extension(dist: TargetDistribution, c: float, s: float) -> AnalyticQuantileExtension:
    """Entire extension of x ↦ F⁻¹(Φ(c·x/s)) for the closed-form families.

    ``c`` is the inversion bandwidth and ``s`` the target-time volatility
    scale √A. Raises NoAnalyticExtension for elicited/custom targets, whose
    entirety cannot be certified from finitely many real samples.
    """
    if c <= 0 or s <= 0:
        raise ValueError("c and s must be positive")
    if dist.family == "lognormal":
        k = c * np.sqrt(dist.params["b"]) / s
        terms = ((1.0, 1.0),)
    elif dist.family == "transformed-normal":
        k = c * np.sqrt(dist.params["b"]) / s
        terms = ((1.0, 2.0), (2.0, 1.0))
    else:
        raise NoAnalyticExtension(
            f"family {dist.family!r} carries no certifiable entire quantile "
            "extension; use the terminal or flexible-horizon engines instead",
            family=dist.family,
        )

    def G(z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for coef, mult in terms:
            out = out + coef * np.exp(mult * k * z)
        return out

    return AnalyticQuantileExtension(G=G, family=dist.family, k=float(k), terms=terms)


def entire_terminal_derivative(dist: TargetDistribution, a_total: float) -> Callable:
    """d/dy of the terminal datum y ↦ F⁻¹(Φ(y/√A)), as an entire function of y.

    This is the integrand of the preference-measure Fourier transform; it
    exists in closed form exactly for the families whose quantile data extend
    entirely. Raises NoAnalyticExtension otherwise.
    """
    sa = np.sqrt(a_total)
    if dist.family == "lognormal":
        beta = np.sqrt(dist.params["b"]) / sa

        def deriv(y):
            return beta * np.exp(beta * np.asarray(y, dtype=complex))

    elif dist.family == "transformed-normal":
        beta = np.sqrt(dist.params["b"]) / sa

        def deriv(y):
            y = np.asarray(y, dtype=complex)
            return 2.0 * beta * np.exp(2.0 * beta * y) + 2.0 * beta * np.exp(beta * y)

    elif dist.family == "whole-line-diagnostic":
        denom = a_total + 1.0

        def deriv(y):
            y = np.asarray(y, dtype=complex)
            return np.exp(y**2 / (2.0 * denom)) / np.sqrt(denom)

    else:
        raise NoAnalyticExtension(
            f"family {dist.family!r} has no entire terminal datum; "
            "transform-based preference recovery is ill-posed for it",
            family=dist.family,
        )
    return deriv


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def distribution_from_dict(doc: dict, a_total: Optional[float] = None) -> TargetDistribution:
    family = doc.get("family")
    if family == "lognormal":
        return lognormal_family(float(doc["params"]["b"]))
    if family == "transformed-normal":
        return transformed_normal_family(float(doc["params"]["b"]))
    if family == "markers":
        return from_markers(doc["markers"])
    if family == "custom-quantile-table":
        return from_quantile_table(doc["table"])
    if family == "whole-line-diagnostic":
        if a_total is None:
            raise ValueError("whole-line-diagnostic requires the market's total risk")
        return whole_line_diagnostic_family(a_total)
    raise ValueError(f"unknown distribution family {family!r}")


def distribution_to_dict(dist: TargetDistribution) -> dict:
    doc = {"family": dist.family}
    if dist.family in ("lognormal", "transformed-normal", "whole-line-diagnostic"):
        doc["params"] = dict(dist.params)
    elif dist.family == "markers":
        doc["markers"] = list(dist.params["levels"])
    elif dist.family == "custom-quantile-table":
        doc["table"] = [list(row) for row in dist.params["table"]]
    return doc
