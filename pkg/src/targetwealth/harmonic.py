"""Space-time harmonic functions h(x, t): the bridge between preferences and
optimal wealth.

Every engine ends up with a positive, spatially increasing solution of a heat
equation, evaluated three ways: h itself (wealth map), its spatial derivative
(portfolio map), and its spatial inverse (state coordinate of a wealth level).
Three backings implement the same interface:

* ExponentialSumHarmonic — h(x,t) = Σ cⱼ·e^{γⱼx + ½γⱼ²(A_T − A_t)}, the
  closed form behind the exponential-family targets. Exact; single-term
  instances invert in closed form.
* ConvolutionHarmonic — Gaussian convolution of arbitrary terminal data with
  variance A_T − A_t, by Hermite quadrature. Scalar calls integrate directly;
  bulk path evaluation goes through a cached spatial grid with monotone cubic
  interpolation (rebuilt at most once if paths escape the span).
* MeasureHarmonic — h(x,τ) = ∫ (e^{yx − ½y²τ}/y) ν(dy) for an atomic or
  gridded measure ν, in heat time τ ≥ 0 (the flexible-horizon backing).

The calendar-time backings take t ∈ [0, T] and convert through A(t); the
measure backing takes heat time directly — its callers pass A_t.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import EvaluationOutOfGrid
from .market import MarketCurves
from .numerics import _hermite_rule, bracketed_root, gaussian_integrate

GRID_POINTS = 513
GRID_SPAN_STD = 12.0


def _expand_bracket(f: Callable[[float], float], seed: float, step: float = 1.0):
    """Find [lo, hi] with a sign change of f around a seed point."""
    lo, hi = seed - step, seed + step
    flo, fhi = f(lo), f(hi)
    for _ in range(200):
        if flo == 0.0:
            return lo, lo
        if fhi == 0.0:
            return hi, hi
        if flo * fhi < 0:
            return lo, hi
        if abs(flo) < abs(fhi):
            lo -= step
            flo = f(lo)
        else:
            hi += step
            fhi = f(hi)
        step *= 1.6
    raise ValueError("failed to bracket a sign change; function may not attain the target")


class ExponentialSumHarmonic:
    """h(x,t) = Σ cⱼ e^{γⱼ x + ½γⱼ²(A_T − A_t)} with cⱼ, γⱼ > 0."""

    backing = "closed-form"
    time_kind = "calendar"

    def __init__(self, terms, curves: MarketCurves):
        self.terms = tuple((float(c), float(g)) for c, g in terms)
        if any(c <= 0 or g <= 0 for c, g in self.terms):
            raise ValueError("exponential-sum terms need positive coefficients and rates")
        self.curves = curves
        self.a_total = curves.a_total

    def _variance(self, t: float) -> float:
        return self.a_total - self.curves.cumulative_variance(t)

    def value(self, x, t: float):
        v = self._variance(t)
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, g in self.terms:
            out = out + c * np.exp(g * x + 0.5 * g * g * v)
        return float(out) if out.ndim == 0 else out

    def derivative_x(self, x, t: float):
        v = self._variance(t)
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, g in self.terms:
            out = out + c * g * np.exp(g * x + 0.5 * g * g * v)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y: float, t: float) -> float:
        if y <= 0:
            raise ValueError(f"h is positive; cannot invert value {y}")
        if len(self.terms) == 1:
            c, g = self.terms[0]
            return (np.log(y / c) - 0.5 * g * g * self._variance(t)) / g
        # seed from the dominant (largest-rate) term, then bracket and solve
        c, g = max(self.terms, key=lambda term: term[1])
        seed = (np.log(y / c) - 0.5 * g * g * self._variance(t)) / g
        lo, hi = _expand_bracket(lambda z: self.value(z, t) - y, seed)
        if lo == hi:
            return lo
        return bracketed_root(lambda z: self.value(z, t) - y, lo, hi, tol=1e-14)


class ConvolutionHarmonic:
    """Gaussian convolution of free-form terminal data S with variance A_T − A_t:
    h(x,t) = E[S(x + √(A_T−A_t)·N)], plus the matching derivative convolution."""

    backing = "convolution"
    time_kind = "calendar"

    def __init__(
        self,
        terminal_value: Callable,
        terminal_slope: Callable,
        curves: MarketCurves,
        nodes: int = 96,
        breaks: tuple = (),
    ):
        self.terminal_value = terminal_value
        self.terminal_slope = terminal_slope
        self.curves = curves
        self.a_total = curves.a_total
        self.nodes = nodes
        # x-locations where the terminal data is merely C¹; the convolution
        # splits its quadrature there rather than straddling the kinks
        self.breaks = tuple(breaks)
        self._half_span = GRID_SPAN_STD * np.sqrt(self.a_total)
        self._grid_cache: dict = {}
        self._extensions = 0

    def _variance(self, t: float) -> float:
        v = self.a_total - self.curves.cumulative_variance(t)
        return max(v, 0.0)

    def _convolve(self, fn: Callable, x, v: float):
        x = np.asarray(x, dtype=float)
        if v < 1e-10:
            out = np.asarray(fn(x), dtype=float)
            return float(out) if out.ndim == 0 else out
        if self.breaks:
            flat = np.atleast_1d(x).ravel()
            out = np.array(
                [gaussian_integrate(fn, mean=xi, variance=v, breaks=self.breaks) for xi in flat]
            ).reshape(np.shape(x))
            return float(out) if out.ndim == 0 else out
        nodes, weights = _hermite_rule(self.nodes)
        pts = x[..., None] + np.sqrt(2.0 * v) * nodes
        vals = np.asarray(fn(pts), dtype=float)
        out = vals @ weights
        return float(out) if out.ndim == 0 else out

    def value(self, x, t: float):
        return self._convolve(self.terminal_value, x, self._variance(t))

    def derivative_x(self, x, t: float):
        return self._convolve(self.terminal_slope, x, self._variance(t))

    def inverse(self, y: float, t: float) -> float:
        if y <= 0:
            raise ValueError(f"h is positive; cannot invert value {y}")
        lo, hi = _expand_bracket(
            lambda z: self.value(z, t) - y, 0.0, step=max(self._half_span / 8.0, 0.25)
        )
        if lo == hi:
            return lo
        return bracketed_root(lambda z: self.value(z, t) - y, lo, hi, tol=1e-14)

    # -- bulk path evaluation through a cached per-time grid ---------------

    def _grid_for(self, t: float, which: str):
        key = (which, round(float(t), 15), self._extensions)
        hit = self._grid_cache.get(key)
        if hit is None:
            grid = np.linspace(-self._half_span, self._half_span, GRID_POINTS)
            fn = self.terminal_value if which == "value" else self.terminal_slope
            vals = self._convolve(fn, grid, self._variance(t))
            hit = PchipInterpolator(grid, vals)
            self._grid_cache[key] = hit
        return hit

    def _bulk(self, x: np.ndarray, t: float, which: str):
        x = np.asarray(x, dtype=float)
        need = float(np.max(np.abs(x), initial=0.0))
        if need > self._half_span:
            if self._extensions >= 1:
                raise EvaluationOutOfGrid(
                    f"paths reached |x|={need:g}, beyond the extended grid span "
                    f"{self._half_span:g}"
                )
            self._half_span = 1.25 * need
            self._extensions = 1
            self._grid_cache.clear()
        return self._grid_for(t, which)(x)

    def value_bulk(self, x, t: float):
        return self._bulk(x, t, "value")

    def derivative_x_bulk(self, x, t: float):
        return self._bulk(x, t, "slope")


class MeasureHarmonic:
    """h(x,τ) = Σⱼ (mⱼ/yⱼ)·e^{yⱼx − ½yⱼ²τ} for an atomic measure, or the
    matching sum over grid cells for a density-form measure. Heat time τ ≥ 0."""

    backing = "measure"
    time_kind = "heat"

    def __init__(self, locations, masses):
        locations = np.asarray(locations, dtype=float)
        masses = np.asarray(masses, dtype=float)
        if np.any(locations <= 0):
            raise ValueError("measure support must lie in (0, ∞)")
        if np.any(masses < 0) or masses.sum() <= 0:
            raise ValueError("measure masses must be nonnegative with positive total")
        live = masses > 0
        self.locations = locations[live]
        self.masses = masses[live]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def scaled(self, factor: float) -> "MeasureHarmonic":
        return MeasureHarmonic(self.locations, factor * self.masses)

    def tilted(self, a_total: float, x0: float) -> "MeasureHarmonic":
        """Budget anchoring: ν ↦ x₀·e^{A_T·y}·ν, which shifts the state
        coordinate so that h(−A_T, 0) = x₀ and h(·, A_T) is the terminal datum."""
        return MeasureHarmonic(
            self.locations, x0 * np.exp(a_total * self.locations) * self.masses
        )

    def value(self, x, tau: float):
        x = np.asarray(x, dtype=float)
        expo = (
            self.locations * x[..., None]
            - 0.5 * self.locations**2 * tau
            + np.log(self.masses / self.locations)
        )
        out = np.exp(expo).sum(axis=-1)
        return float(out) if np.isscalar(x) or x.ndim == 0 else out

    def derivative_x(self, x, tau: float):
        x = np.asarray(x, dtype=float)
        expo = self.locations * x[..., None] - 0.5 * self.locations**2 * tau
        out = (np.exp(expo) * self.masses).sum(axis=-1)
        return float(out) if np.isscalar(x) or x.ndim == 0 else out

    def inverse(self, y: float, tau: float) -> float:
        if y <= 0:
            raise ValueError(f"h is positive; cannot invert value {y}")
        live = self.masses > 0
        if np.count_nonzero(live) == 1:
            j = int(np.argmax(live))
            g, m = self.locations[j], self.masses[j]
            return (np.log(y * g / m) + 0.5 * g * g * tau) / g
        j = int(np.argmax(self.locations * live))
        g, m = self.locations[j], self.masses[j]
        seed = (np.log(y * g / m) + 0.5 * g * g * tau) / g
        lo, hi = _expand_bracket(lambda z: self.value(z, tau) - y, seed)
        if lo == hi:
            return lo
        return bracketed_root(lambda z: self.value(z, tau) - y, lo, hi, tol=1e-14)


def pde_residual(h, curves: MarketCurves, x: float, t: float, dx: float = 1e-4, dt: float = 1e-6) -> float:
    """Relative residual of h_t + ½|λ(t)|²·h_xx = 0 at one calendar point,
    by central finite differences. Diagnostic helper used by the test suite
    and the service's self-checks."""
    h_t = (h.value(x, t + dt) - h.value(x, t - dt)) / (2.0 * dt)
    h_xx = (h.value(x + dx, t) - 2.0 * h.value(x, t) + h.value(x - dx, t)) / dx**2
    lam_sq = curves.lambda_sq_of(t)
    return abs(h_t + 0.5 * lam_sq * h_xx) / max(abs(h.value(x, t)), 1e-300)
