"""Fixed-horizon engine: a target wealth distribution placed at the horizon T.

Given a target F and the market's cumulative risk A_T, three questions are
answered here:

1. Feasibility — the budget value

       x₀ = E[ F⁻¹(Φ(Z)) ],   Z ~ N(−√A_T, 1),

   which is the Gaussian-kernel integral of the quantile against the state
   price density. A request is feasible when its initial wealth matches this
   to relative 1e−6; for the two closed-form families, the free parameter b
   is solved so the match is exact.

2. Preferences — the marginal utility consistent with wanting F at T:

       U_T′(x) = exp(−√A_T · Φ⁻¹(F(x))),

   strictly decreasing with the usual limits at 0 and ∞.

3. Policy — the space-time harmonic function h whose terminal datum is
   y ↦ F⁻¹(Φ(y/√A_T)); the optimal wealth is h read along −A_T + A_t + M_t
   and the portfolio is its spatial slope. The budget identity makes the
   normalization h⁻¹(x₀, 0) = −A_T automatic; it is asserted, not imposed.

A cost-efficiency cross-check is included: the same budget value must arise
from pairing the target's quantile anti-monotonically with the quantile of
the terminal state price density (the couplings-based minimal price).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from .errors import (
    BudgetViolated,
    GrowthViolation,
    InfeasibleWealth,
    NoRoot,
)
from .harmonic import ConvolutionHarmonic, ExponentialSumHarmonic
from .market import MarketCurves
from .numerics import QuadratureSpec, bracketed_root, gaussian_integrate
from .targets import TargetDistribution, lognormal_family, transformed_normal_family

FEASIBILITY_RTOL = 1e-6


def _require_exponential_growth(dist: TargetDistribution) -> None:
    if dist.growth.kind != "exponential":
        raise GrowthViolation(
            f"the fixed-horizon engine needs an exponential growth certificate; "
            f"family {dist.family!r} certifies {dist.growth.kind!r}",
            family=dist.family,
        )


def budget_value(
    dist: TargetDistribution,
    a_variance: float,
    quad: Optional[QuadratureSpec] = None,
) -> float:
    """E[F⁻¹(Φ(Z))] for Z ~ N(−√a, 1): the minimal wealth that can deliver F
    when the cumulative risk to the target date is ``a_variance``."""
    if a_variance <= 0:
        raise ValueError("cumulative risk to the target date must be positive")
    return gaussian_integrate(
        dist.quantile_z,
        mean=-np.sqrt(a_variance),
        variance=1.0,
        spec=quad,
        breaks=dist.z_breaks,
    )


def budget_constraint_terminal(
    dist: TargetDistribution,
    curves: MarketCurves,
    quad: Optional[QuadratureSpec] = None,
) -> float:
    _require_exponential_growth(dist)
    return budget_value(dist, curves.a_total, quad)


def solve_family_parameter(
    family: str,
    x0: float,
    curves: MarketCurves,
    quad: Optional[QuadratureSpec] = None,
    a_variance: Optional[float] = None,
) -> float:
    """The unique b ≥ a making the family's budget equal x₀, by root-finding
    on the quadrature budget itself (no closed forms are consulted here —
    tests compare against them independently). ``a_variance`` is the
    cumulative risk at the target date; it defaults to the horizon's A_T."""
    if x0 <= 0:
        raise ValueError("initial wealth must be positive")
    a = curves.a_total if a_variance is None else float(a_variance)

    if family == "lognormal":
        factory = lognormal_family
        floor = np.exp(-0.5 * a)
        if x0 < floor * (1.0 - 1e-12):
            raise InfeasibleWealth(
                f"initial wealth {x0:.12g} is below the lognormal feasibility "
                f"floor e^(-A/2) = {floor:.12g}",
                floor=floor,
                x0=x0,
            )
    elif family == "transformed-normal":
        factory = transformed_normal_family
        if x0 <= 3.0:
            raise NoRoot(
                f"the transformed-normal family needs initial wealth above 3 "
                f"(its b > A parameter branch); got {x0:.12g}",
                x0=x0,
            )
    else:
        raise ValueError(f"no solvable parameter for family {family!r}")

    def residual(b: float) -> float:
        return budget_value(factory(b), a, quad) - x0

    lo = a
    f_lo = residual(lo)
    if family == "lognormal" and abs(f_lo) <= 1e-12 * max(1.0, x0):
        return lo  # boundary case b = A: the budget minimum binds exactly
    hi = max(4.0 * a, 1e-3)
    for _ in range(200):
        if residual(hi) > 0.0:
            break
        hi *= 2.0
    else:
        raise NoRoot(f"no parameter b in ({a}, {hi}) reaches budget {x0}")
    return bracketed_root(residual, lo, hi, tol=1e-12)


def marginal_utility_terminal(
    dist: TargetDistribution,
    curves: MarketCurves,
    x0: Optional[float] = None,
    quad: Optional[QuadratureSpec] = None,
) -> Callable:
    """U_T′(x) = exp(−√A_T · Φ⁻¹(F(x))) on (0, ∞).

    If ``x0`` is given, the budget constraint is verified first and a
    mismatch raises BudgetViolated — marginal utilities inferred from an
    unaffordable (or slack) target are meaningless.
    """
    _require_exponential_growth(dist)
    if x0 is not None:
        rhs = budget_value(dist, curves.a_total, quad)
        if abs(rhs - x0) > FEASIBILITY_RTOL * max(1.0, abs(x0)):
            raise BudgetViolated(
                f"budget integral {rhs:.9g} does not match initial wealth {x0:.9g}",
                budget=rhs,
                x0=x0,
            )
    sa = np.sqrt(curves.a_total)

    def marginal(x):
        x = np.asarray(x, dtype=float)
        # Φ⁻¹(F(x)) is the z with F⁻¹(Φ(z)) = x. Going through the cdf
        # saturates in float64 (Φ(z) == 1.0 for z ≳ 8.3 zeroes the whole
        # tail), so the cdf value only seeds a Newton solve on the
        # log-quantile, which is well-conditioned at every float x > 0.
        z = ndtri(np.clip(dist.cdf(x), 1e-12, 1.0 - 1e-12))
        target = np.log(x)
        for _ in range(60):
            q = dist.quantile_z(z)
            step = (np.log(q) - target) * q / dist.quantile_z_slope(z)
            z = z - step
            if np.max(np.abs(step)) <= 1e-15 * (1.0 + np.max(np.abs(z))):
                break
        return np.exp(-sa * z)

    return marginal


def harmonic_fixed(
    dist: TargetDistribution,
    curves: MarketCurves,
    nodes: int = 96,
):
    """The harmonic function with terminal datum y ↦ F⁻¹(Φ(y/√A_T)):
    closed exponential sums for the parametric families, Gaussian-kernel
    convolution of the interpolated datum otherwise."""
    _require_exponential_growth(dist)
    a_total = curves.a_total
    sa = np.sqrt(a_total)
    if dist.family == "lognormal":
        beta = np.sqrt(dist.params["b"]) / sa
        return ExponentialSumHarmonic([(1.0, beta)], curves)
    if dist.family == "transformed-normal":
        beta = np.sqrt(dist.params["b"]) / sa
        return ExponentialSumHarmonic([(1.0, 2.0 * beta), (2.0, beta)], curves)

    def terminal_value(y):
        return dist.quantile_z(np.asarray(y, dtype=float) / sa)

    def terminal_slope(y):
        return dist.quantile_z_slope(np.asarray(y, dtype=float) / sa) / sa

    return ConvolutionHarmonic(
        terminal_value,
        terminal_slope,
        curves,
        nodes=nodes,
        breaks=tuple(sa * k for k in dist.z_breaks),
    )


def cost_efficiency_check(
    dist: TargetDistribution,
    curves: MarketCurves,
    quad: Optional[QuadratureSpec] = None,
) -> tuple:
    """Two independent routes to the minimal price of the target:

    * the Gaussian budget integral of the quantile (Z ~ N(−√A_T, 1));
    * the anti-monotone quantile coupling with the terminal state price
      density, E[e^{−A_T/2 + √A_T·W} · F⁻¹(Φ(−W))] for W ~ N(0, 1).

    Returns (gaussian_form, coupling_form); agreement is a correctness
    certificate for the budget computation.
    """
    _require_exponential_growth(dist)
    a_total = curves.a_total
    sa = np.sqrt(a_total)
    gaussian_form = budget_value(dist, a_total, quad)

    def coupled(w):
        w = np.asarray(w, dtype=float)
        return np.exp(-0.5 * a_total + sa * w) * dist.quantile_z(-w)

    coupling_form = gaussian_integrate(
        coupled,
        mean=0.0,
        variance=1.0,
        spec=quad,
        breaks=tuple(-k for k in dist.z_breaks),
    )
    return float(gaussian_form), float(coupling_form)


@dataclass
class FixedHorizonSolution:
    feasible: bool
    x0: float
    budget: float
    marginal_utility: Callable
    h: object
    solved_parameter: Optional[float] = None
    beta: Optional[float] = None

    @property
    def anchor(self) -> float:
        """h⁻¹(x₀, 0); equals −A_T when the budget binds."""
        return self.h.inverse(self.x0, 0.0)


def solve_fixed_horizon(
    dist: TargetDistribution,
    curves: MarketCurves,
    x0: float,
    quad: Optional[QuadratureSpec] = None,
) -> FixedHorizonSolution:
    """Full fixed-horizon treatment of one (target, market, wealth) request."""
    if x0 <= 0:
        raise ValueError("initial wealth must be positive")
    budget = budget_constraint_terminal(dist, curves, quad)
    feasible = abs(budget - x0) <= FEASIBILITY_RTOL * max(1.0, abs(x0))
    if not feasible:
        raise BudgetViolated(
            f"target needs initial wealth {budget:.9g}, request supplies {x0:.9g}; "
            "re-solve the family parameter or rescale the target",
            budget=budget,
            x0=x0,
        )
    solved_b = dist.params.get("b") if dist.family in ("lognormal", "transformed-normal") else None
    beta = (
        float(np.sqrt(solved_b / curves.a_total)) if solved_b is not None else None
    )
    return FixedHorizonSolution(
        feasible=True,
        x0=x0,
        budget=float(budget),
        marginal_utility=marginal_utility_terminal(dist, curves),
        h=harmonic_fixed(dist, curves),
        solved_parameter=solved_b,
        beta=beta,
    )


def resolve_family(
    family: str,
    x0: float,
    curves: MarketCurves,
    quad: Optional[QuadratureSpec] = None,
) -> TargetDistribution:
    """Build the member of a parametric family whose budget is exactly x₀."""
    b = solve_family_parameter(family, x0, curves, quad)
    if family == "lognormal":
        return lognormal_family(b)
    return transformed_normal_family(b)
