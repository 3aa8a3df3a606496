"""Error taxonomy shared across the package.

Every refusal the engines can produce is a subclass of ``RefusalError`` so the
service and CLI can distinguish "the mathematics says no" (HTTP 422 / exit 2)
from genuine faults (HTTP 500 / exit 1). Each carries a machine-readable
``cause`` tag and a human diagnostic.
"""

from __future__ import annotations


class TargetWealthError(Exception):
    """Base class for all package-specific errors."""


class RefusalError(TargetWealthError):
    """A mathematically valid refusal: the request is well-formed but the
    theory says it cannot be served. Maps to HTTP 422 / CLI exit code 2."""

    cause = "refused"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def payload(self) -> dict:
        return {"cause": self.cause, "message": str(self), **self.details}


class InfeasibleWealth(RefusalError):
    """Initial wealth below the distributional price of the target."""

    cause = "infeasible_wealth"


class GrowthViolation(RefusalError):
    """Target quantile function grows faster than the admissible envelope."""

    cause = "growth_violation"


class AssumptionViolated(RefusalError):
    """Analyticity/growth assumptions of the intermediate-target inversion fail."""

    cause = "assumption_violated"


class Inadmissible(RefusalError):
    """Recovered preference measure cannot generate a forward criterion."""

    cause = "inadmissible_measure"


class SupportViolation(RefusalError):
    """Recovered measure places mass outside the positive half-line."""

    cause = "support_violation"


class NoAnalyticExtension(RefusalError):
    """Target family supplies no entire quantile data, so transform-based
    inference is ill-posed for it."""

    cause = "no_analytic_extension"


class NoArbitrageViolation(RefusalError):
    """Single-period market admits arbitrage (risk-free level outside the
    span of stock states)."""

    cause = "no_arbitrage_violation"


class NotSubmitted(TargetWealthError):
    """Operation requires a submitted builder session."""

    def __init__(self, message: str, status: str = "editing"):
        super().__init__(message)
        self.status = status


class IllegalTransition(TargetWealthError):
    """Builder session cannot move to the requested state from its current
    one (e.g. submitting outside the budget band, realizing twice)."""

    def __init__(self, message: str, status: str = "", requested: str = ""):
        super().__init__(message)
        self.status = status
        self.requested = requested


class DegenerateMarkers(RefusalError):
    """All markers at one level: no distribution to infer preferences from."""

    cause = "degenerate_markers"


class NoRoot(RefusalError):
    """No family parameter reproduces the requested budget."""

    cause = "no_parameter_root"


class BudgetViolated(RefusalError):
    """Requested wealth does not match the target's budget value."""

    cause = "budget_violated"


class IntegralDivergence(RefusalError):
    """A budget or convolution integral fails to converge for the target."""

    cause = "integral_divergence"


class NonFiniteIntegrand(TargetWealthError):
    """Integrand returned a non-finite value at a quadrature node."""


class ComplexResidue(TargetWealthError):
    """A provably real quantity came back with too large an imaginary part,
    indicating quadrature failure rather than a property of the input."""


class RecoveryFailure(RefusalError):
    """Neither atomic nor density form reproduces the sampled transform."""

    cause = "recovery_failure"


class NegativeMass(RefusalError):
    """Density recovery produced significantly negative weights."""

    cause = "negative_mass"


class DensityVanishes(RefusalError):
    """The target's density hits zero on the probe range, so the transform
    integrand is undefined there."""

    cause = "density_vanishes"


class TimeMismatch(TargetWealthError):
    """A check was requested at a time the bundle was not sampled at."""


class NoSignChange(TargetWealthError):
    """Root bracketing failed: f has the same sign at both endpoints."""


class MaxIterations(TargetWealthError):
    """Iterative routine exceeded its iteration budget."""


class OutOfRange(TargetWealthError):
    """Requested value lies outside the representable range of a monotone map."""


class EvaluationOutOfGrid(TargetWealthError):
    """A cached spatial grid was evaluated beyond its span (after auto-extension)."""
