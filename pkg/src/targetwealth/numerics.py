"""Shared numerical kernels: Gaussian-expectation quadrature, bracketed
root-finding, and inversion of monotone maps.

All integrals in this package are expectations against a one-dimensional
Gaussian, so the quadrature interface is ``E[g(Y)], Y ~ N(mean, variance)``
rather than a generic ∫. Two schemes back it:

* ``gauss-hermite`` — probabilists' change of variables y = mean + √(2v)·node
  on the physicists' Hermite rule, Σ wᵢ g(yᵢ)/√π. Exact for polynomial g,
  spectrally accurate for entire g; the default with 96 nodes.
* ``adaptive-trapezoid`` — truncates to mean ± radius·√v and halves the step
  until successive estimates agree to a relative tolerance. Slower but makes
  no smoothness assumption beyond continuity; used as an independent check
  and for integrands with kinks.

Complex-valued integrands are handled component-wise (real and imaginary
parts share nodes), which is what the Fourier-transform evaluations need.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import MaxIterations, NonFiniteIntegrand, NoSignChange, OutOfRange

DEFAULT_NODES = 96
DEFAULT_RADIUS = 10.0
DEFAULT_RELTOL = 1e-10


@dataclass(frozen=True)
class QuadratureSpec:
    """How to evaluate Gaussian expectations.

    scheme: "gauss-hermite" or "adaptive-trapezoid".
    nodes: Hermite node count (gauss-hermite only).
    radius: truncation half-width in standard deviations (trapezoid only).
    rel_tol: relative convergence tolerance (trapezoid only).
    """

    scheme: str = "gauss-hermite"
    nodes: int = DEFAULT_NODES
    radius: float = DEFAULT_RADIUS
    rel_tol: float = DEFAULT_RELTOL

    def __post_init__(self):
        if self.scheme not in ("gauss-hermite", "adaptive-trapezoid"):
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if self.nodes < 2:
            raise ValueError("need at least 2 quadrature nodes")
        if self.radius <= 0 or self.rel_tol <= 0:
            raise ValueError("radius and rel_tol must be positive")


DEFAULT_QUADRATURE = QuadratureSpec()


@lru_cache(maxsize=32)
def _hermite_rule(n: int):
    nodes, weights = np.polynomial.hermite.hermgauss(n)
    return nodes, weights / np.sqrt(np.pi)


@lru_cache(maxsize=8)
def _legendre_rule(n: int):
    return np.polynomial.legendre.leggauss(n)


def _panelled_gaussian(g, mean: float, s: float, spec: QuadratureSpec, breaks):
    """Composite Gauss–Legendre between breakpoints, Gaussian-density weighted.

    Hermite rules lose their spectral rate the moment a node interval
    straddles a kink; splitting at the kinks restores it because each panel
    then sees an analytic integrand. Panels are further capped at one
    standard deviation so the Gaussian factor itself is resolved.
    """
    lo, hi = mean - spec.radius * s, mean + spec.radius * s
    inner = np.asarray(breaks, dtype=float)
    inner = np.unique(inner[(inner > lo) & (inner < hi)])
    edges = np.concatenate([[lo], inner, [hi]])
    nodes, weights = _legendre_rule(24)
    norm = s * np.sqrt(2.0 * np.pi)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        pieces = max(1, int(np.ceil((b - a) / s)))
        for cut_lo, cut_hi in zip(
            np.linspace(a, b, pieces + 1)[:-1], np.linspace(a, b, pieces + 1)[1:]
        ):
            half = 0.5 * (cut_hi - cut_lo)
            y = 0.5 * (cut_lo + cut_hi) + half * nodes
            dens = np.exp(-0.5 * ((y - mean) / s) ** 2) / norm
            vals = np.asarray(g(y)) * dens
            if not np.all(np.isfinite(vals)):
                raise NonFiniteIntegrand("integrand not finite at a quadrature node")
            total = total + half * np.sum(weights * vals)
    return complex(total) if np.iscomplexobj(total) else float(total)


def gaussian_integrate(
    g: Callable[[np.ndarray], np.ndarray],
    mean: float,
    variance: float,
    spec: QuadratureSpec | None = None,
    breaks=None,
):
    """E[g(Y)] for Y ~ N(mean, variance).

    ``g`` must accept a numpy array and may return real or complex values.
    Zero variance degenerates to a point evaluation. Raises MaxIterations
    if the adaptive scheme fails to converge within its refinement budget.

    ``breaks`` lists points of the integration variable where g is less
    smooth than analytic (interpolation knots, say). Under the default
    scheme these switch the rule to Gauss–Legendre panels split at the
    breakpoints; the adaptive scheme needs no such help and ignores them.
    """
    spec = spec or DEFAULT_QUADRATURE
    if variance < 0:
        raise ValueError(f"variance must be nonnegative, got {variance}")
    if variance == 0.0:
        out = g(np.asarray([mean]))
        return complex(out[0]) if np.iscomplexobj(out) else float(out[0])

    if (
        breaks is not None
        and len(breaks) > 0
        and spec.scheme == "gauss-hermite"
    ):
        return _panelled_gaussian(g, mean, np.sqrt(variance), spec, breaks)

    if spec.scheme == "gauss-hermite":
        nodes, weights = _hermite_rule(spec.nodes)
        y = mean + np.sqrt(2.0 * variance) * nodes
        vals = np.asarray(g(y))
        if not np.all(np.isfinite(vals)):
            raise NonFiniteIntegrand("integrand not finite at a quadrature node")
        total = np.sum(weights * vals)
        return complex(total) if np.iscomplexobj(vals) else float(total)

    # adaptive trapezoid on [mean - r·s, mean + r·s]
    s = np.sqrt(variance)
    lo, hi = mean - spec.radius * s, mean + spec.radius * s
    n = 257
    prev = None
    for _ in range(18):
        y = np.linspace(lo, hi, n)
        dens = np.exp(-0.5 * ((y - mean) / s) ** 2) / (s * np.sqrt(2.0 * np.pi))
        vals = np.asarray(g(y)) * dens
        est = np.trapezoid(vals, y)
        if prev is not None:
            scale = max(1.0, abs(prev))
            if abs(est - prev) <= spec.rel_tol * scale:
                return complex(est) if np.iscomplexobj(vals) else float(est)
        prev = est
        n = 2 * n - 1
    raise MaxIterations(
        f"adaptive trapezoid failed to reach rel_tol={spec.rel_tol} in 18 refinements"
    )


def bracketed_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Root of f on [lo, hi] with a guaranteed sign change at the endpoints.

    Raises NoSignChange if f(lo) and f(hi) have the same (nonzero) sign,
    MaxIterations if the solver's iteration budget is exhausted.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise NoSignChange(f"f({lo})={flo:g} and f({hi})={fhi:g} have the same sign")
    try:
        root, result = brentq(
            f, lo, hi, xtol=tol, rtol=8.881784197001252e-16, maxiter=max_iter,
            full_output=True,
        )
    except RuntimeError as exc:  # scipy signals non-convergence this way
        raise MaxIterations(str(exc)) from exc
    if not result.converged:
        raise MaxIterations(f"root solver stopped after {max_iter} iterations")
    return float(root)


def monotone_inverse(
    f: Callable[[float], float],
    y: float,
    lo: float,
    hi: float,
    tol: float = 1e-12,
) -> float:
    """Solve f(x) = y for strictly monotone f on [lo, hi].

    Works for increasing or decreasing f. The result x satisfies
    |f(x) − y| ≤ tol·max(1, |y|). Raises OutOfRange when y is not between
    f(lo) and f(hi).
    """
    flo, fhi = f(lo), f(hi)
    lo_val, hi_val = min(flo, fhi), max(flo, fhi)
    if not (lo_val <= y <= hi_val):
        raise OutOfRange(
            f"target {y:g} outside the range [{lo_val:g}, {hi_val:g}] of f on [{lo}, {hi}]"
        )
    x = bracketed_root(lambda t: f(t) - y, lo, hi, tol=tol)
    if abs(f(x) - y) > tol * max(1.0, abs(y)):
        # brentq met its x-tolerance but the residual check is the contract
        raise MaxIterations(f"inverse residual {abs(f(x) - y):g} exceeds tolerance")
    return x
