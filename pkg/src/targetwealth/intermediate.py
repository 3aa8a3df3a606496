"""Intermediate-date engine: the target distribution sits at a date T̂ strictly
inside the investment horizon.

Feasibility is the same Gaussian budget integral as the fixed-horizon case,
evaluated with the cumulative risk A_T̂. The new work is recovering the
inverse marginal utility I_T at the *horizon* from data specified at T̂: the
scaled quantile G(x) = F⁻¹(Φ(c·x/√A_T̂)), with bandwidth c = √((A_T − A_T̂)/2),
is a variance-2 Gaussian blur (the classical Weierstrass transform) of
y ↦ I_T(e^{−cy}), and deblurring is done by evaluating G along complex shifts:

    I_T(e^{−cx}) = E[G(x + iS)],   S ~ N(0, 2).

That inversion is only meaningful when G extends to an entire function with
sub-e^{y²/4} growth on vertical lines and a real nonnegative blur — the three
clauses checked by ``verify_assumptions``. Closed-form families satisfy them
by inspection; elicited targets are refused because entirety cannot be
certified from finitely many real samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AssumptionViolated, BudgetViolated, ComplexResidue
from .fixed_horizon import FEASIBILITY_RTOL, budget_value
from .harmonic import ConvolutionHarmonic, ExponentialSumHarmonic
from .market import MarketCurves, TimeOutOfRange
from .numerics import QuadratureSpec, gaussian_integrate
from .targets import AnalyticQuantileExtension, TargetDistribution, analytic_extension

IMAG_RTOL = 1e-8
GROWTH_PROBE_HEIGHTS = (5.0, 10.0, 15.0, 20.0)
REAL_PROBE_TIMES = (0.25, 0.5, 0.75, 0.99)


def budget_constraint_intermediate(
    dist: TargetDistribution,
    curves: MarketCurves,
    t_hat: float,
    quad: Optional[QuadratureSpec] = None,
) -> float:
    """Budget integral with the cumulative risk accrued by T̂."""
    if not (0.0 < t_hat < curves.horizon):
        raise TimeOutOfRange(f"target date {t_hat} must lie strictly inside (0, {curves.horizon})")
    if dist.growth.kind != "exponential":
        from .errors import GrowthViolation

        raise GrowthViolation(
            "the intermediate-date engine needs an exponential growth certificate",
            family=dist.family,
        )
    return budget_value(dist, curves.cumulative_variance(t_hat), quad)


@dataclass(frozen=True)
class AssumptionReport:
    entire: bool
    growth_ok: bool
    real_nonneg_ok: bool
    details: dict

    def all_ok(self) -> bool:
        return self.entire and self.growth_ok and self.real_nonneg_ok

    def failing_clause(self) -> Optional[str]:
        if not self.entire:
            return "entire"
        if not self.growth_ok:
            return "growth"
        if not self.real_nonneg_ok:
            return "real-nonnegative"
        return None


def _blur(G, x: float, t: float, quad: Optional[QuadratureSpec]) -> complex:
    """g(x,t) = E[G(x + iS)], S ~ N(0, 2t): the t-blur along the imaginary axis."""
    return gaussian_integrate(
        lambda s: G(x + 1j * s), mean=0.0, variance=2.0 * t, spec=quad
    )


def verify_assumptions(
    ext: AnalyticQuantileExtension,
    quad: Optional[QuadratureSpec] = None,
) -> AssumptionReport:
    """Check the three inversion clauses on probe grids.

    (i) entirety — certified structurally (closed-form extensions only exist
        for entire families);
    (ii) growth — max over x ∈ [−3,3] of |G(x+iy)| / (|y|·e^{y²/4}) must fall
        monotonically toward 0 along y ∈ {5,10,15,20};
    (iii) reality — the blur g(x,t) must be real (to quadrature residue) and
        nonnegative on [−3,3] × {0.25, 0.5, 0.75, 0.99}.
    """
    xs = np.linspace(-3.0, 3.0, 13)

    ratios = []
    for y in GROWTH_PROBE_HEIGHTS:
        top = float(np.max(np.abs(ext.G(xs + 1j * y))))
        ratios.append(top / (y * np.exp(0.25 * y * y)))
    decreasing = all(ratios[i + 1] < ratios[i] for i in range(len(ratios) - 1))
    growth_ok = decreasing and ratios[-1] < 1e-6

    worst_imag = 0.0
    worst_real = np.inf
    for t in REAL_PROBE_TIMES:
        for x in xs:
            val = _blur(ext.G, float(x), t, quad)
            scale = max(1.0, abs(val.real))
            worst_imag = max(worst_imag, abs(val.imag) / scale)
            worst_real = min(worst_real, val.real)
    real_ok = worst_imag <= IMAG_RTOL and worst_real >= -1e-10

    return AssumptionReport(
        entire=True,
        growth_ok=growth_ok,
        real_nonneg_ok=real_ok,
        details={
            "growth_ratios": ratios,
            "max_imag_residue": worst_imag,
            "min_real_part": float(worst_real),
        },
    )


class InverseMarginal:
    """Inverse marginal utility I_T recovered by the complex-shift deblurring.

    Callable on (0, ∞). Also exposes the horizon-time terminal datum
    y ↦ I_T(e^{−y}) and its slope, which the harmonic construction convolves;
    for exponential-family extensions the datum collapses to a closed
    exponential sum, recorded in ``closed_terms``.
    """

    def __init__(self, ext: AnalyticQuantileExtension, c: float, quad: Optional[QuadratureSpec] = None):
        if c <= 0:
            raise ValueError("bandwidth c must be positive")
        self.ext = ext
        self.c = float(c)
        self.quad = quad
        # Σ coef·e^{mult·k·(x+iS)} averages to Σ coef·e^{−(mult·k)²}·e^{mult·k·x}
        self.closed_terms = tuple(
            (coef * np.exp(-((mult * ext.k) ** 2)), mult * ext.k / self.c)
            for coef, mult in ext.terms
        )

    def _deblur(self, x):
        """E[G(x + iS)], S ~ N(0,2), vectorized over x; real-part checked."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        from .numerics import DEFAULT_QUADRATURE, _hermite_rule

        spec = self.quad or DEFAULT_QUADRATURE
        nodes, weights = _hermite_rule(spec.nodes)
        s = np.sqrt(2.0 * 2.0) * nodes  # S ~ N(0, 2)
        vals = self.ext.G(x[:, None] + 1j * s[None, :]) @ weights
        worst = float(np.max(np.abs(vals.imag) / np.maximum(1.0, np.abs(vals.real))))
        if worst > IMAG_RTOL:
            raise ComplexResidue(
                f"imaginary residue {worst:g} exceeds {IMAG_RTOL:g}; quadrature failed"
            )
        return vals.real

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0):
            raise ValueError("I_T is defined on (0, ∞)")
        out = self._deblur((-np.log(v) / self.c).ravel()).reshape(v.shape)
        return float(out) if out.ndim == 0 else out

    def terminal_data(self, y):
        """I_T(e^{−y}) without the exp/log round trip."""
        y = np.asarray(y, dtype=float)
        out = self._deblur((y / self.c).ravel()).reshape(y.shape)
        return float(out) if out.ndim == 0 else out

    def terminal_slope(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for coef, rate in self.closed_terms:
            out = out + coef * rate * np.exp(rate * y)
        return float(out) if out.ndim == 0 else out


def weierstrass_invert(
    ext: AnalyticQuantileExtension,
    curves: MarketCurves,
    t_hat: float,
    quad: Optional[QuadratureSpec] = None,
) -> InverseMarginal:
    """Deblur G into the horizon inverse marginal I_T.

    Verifies the assumption clauses first and raises AssumptionViolated
    naming the failing one.
    """
    report = verify_assumptions(ext, quad)
    if not report.all_ok():
        raise AssumptionViolated(
            f"inversion assumption failed: {report.failing_clause()}",
            clause=report.failing_clause(),
            **report.details,
        )
    a_hat = curves.cumulative_variance(t_hat)
    c = np.sqrt(0.5 * (curves.a_total - a_hat))
    return InverseMarginal(ext, c, quad)


def harmonic_intermediate(inverse_marginal: InverseMarginal, curves: MarketCurves):
    """Harmonic function on [0, T] whose horizon datum is y ↦ I_T(e^{−y})."""
    terms = inverse_marginal.closed_terms
    if terms:
        return ExponentialSumHarmonic(terms, curves)
    return ConvolutionHarmonic(
        inverse_marginal.terminal_data, inverse_marginal.terminal_slope, curves
    )


@dataclass
class IntermediateSolution:
    t_hat: float
    a_hat: float
    c: float
    budget: float
    x0: float
    inverse_marginal: InverseMarginal
    h: object
    assumption_report: AssumptionReport


def solve_intermediate(
    dist: TargetDistribution,
    curves: MarketCurves,
    x0: float,
    t_hat: float,
    quad: Optional[QuadratureSpec] = None,
) -> IntermediateSolution:
    """Full intermediate-date treatment of one (target, market, wealth, T̂)."""
    budget = budget_constraint_intermediate(dist, curves, t_hat, quad)
    if abs(budget - x0) > FEASIBILITY_RTOL * max(1.0, abs(x0)):
        raise BudgetViolated(
            f"target at T̂={t_hat} needs initial wealth {budget:.9g}, "
            f"request supplies {x0:.9g}",
            budget=float(budget),
            x0=x0,
        )
    a_hat = curves.cumulative_variance(t_hat)
    c = float(np.sqrt(0.5 * (curves.a_total - a_hat)))
    ext = analytic_extension(dist, c, float(np.sqrt(a_hat)))
    report = verify_assumptions(ext, quad)
    if not report.all_ok():
        raise AssumptionViolated(
            f"inversion assumption failed: {report.failing_clause()}",
            clause=report.failing_clause(),
            **report.details,
        )
    im = InverseMarginal(ext, c, quad)
    return IntermediateSolution(
        t_hat=float(t_hat),
        a_hat=float(a_hat),
        c=c,
        budget=float(budget),
        x0=float(x0),
        inverse_marginal=im,
        h=harmonic_intermediate(im, curves),
        assumption_report=report,
    )
