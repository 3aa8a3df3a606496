"""Single-period Distribution Builder backend.

One period, N equally likely states, a stock whose gross returns are a
lognormal quantile discretization, and a bond paying 1+r. Pricing is
log-linear in the stock: log ξ(ω) = a + b·log S(ω) with b < 0 whenever the
stock's mean return beats the bond, so state prices fall as the stock rises.
A user places N equally likely wealth markers; the cheapest portfolio
delivering that empirical distribution pairs the largest marker with the
cheapest state (anti-monotone coupling), which makes the cost meter a single
sorted inner product. A submitted placement reveals marginal utility point
by point through U′(x_i) = k·ξ_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp, ndtri

from .errors import IllegalTransition, NoArbitrageViolation, NotSubmitted
from .numerics import bracketed_root

BAND_LOW = 0.99          # submittable iff cost ∈ [BAND_LOW·x₀, x₀]
BAND_SLACK = 1e-9        # relative rounding slack on both band edges


def discretize_lognormal(mu: float, sigma: float, n_states: int) -> np.ndarray:
    """Gross-return states S_i = exp(Normal(mu, sigma²) quantile at the
    equally spaced probabilities (2i−1)/2N), sorted nondecreasing."""
    if n_states <= 2:
        raise ValueError("need more than two states")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    probs = (2.0 * np.arange(1, n_states + 1) - 1.0) / (2.0 * n_states)
    return np.exp(mu + sigma * ndtri(probs))


def solve_pricing_exponent(states: Sequence[float], r: float) -> tuple:
    """(b, a) of the log-linear state-price rule log ξ = a + b·log S.

    b solves (1+r)·ΣS_i^b = ΣS_i^{b+1}; a then matches the bond price. Both
    sides are evaluated in log space so deep-out-of-the-money brackets do
    not overflow.
    """
    s = np.asarray(states, dtype=float)
    gross = 1.0 + r
    if s.min() >= gross or s.max() <= gross:
        raise NoArbitrageViolation(
            "risk-free gross return must lie strictly inside the stock state "
            f"range [{s.min():.6g}, {s.max():.6g}]",
            gross=float(gross),
            s_min=float(s.min()),
            s_max=float(s.max()),
        )
    logs = np.log(s)

    def gap(b: float) -> float:
        return np.log(gross) + logsumexp(b * logs) - logsumexp((b + 1.0) * logs)

    g0 = gap(0.0)
    if g0 == 0.0:
        b = 0.0
    elif g0 < 0.0:
        lo = -100.0
        while gap(lo) < 0.0:
            lo *= 2.0
            if lo < -1e9:
                raise NoArbitrageViolation(
                    "pricing exponent diverged; states are inconsistent "
                    "with a log-linear state-price rule",
                    gross=float(gross),
                )
        b = bracketed_root(gap, lo, 0.0, tol=1e-14)
    else:
        hi = 100.0
        while gap(hi) > 0.0:
            hi *= 2.0
            if hi > 1e9:
                raise NoArbitrageViolation(
                    "pricing exponent diverged; states are inconsistent "
                    "with a log-linear state-price rule",
                    gross=float(gross),
                )
        b = bracketed_root(gap, 0.0, hi, tol=1e-14)
    a = -np.log(gross) + np.log(s.size) - logsumexp(b * logs)
    return float(b), float(a)


@dataclass(frozen=True)
class SinglePeriodMarket:
    """Discretized one-period market with its log-linear state prices."""

    n_states: int
    r: float
    mu: float
    sigma: float
    states: np.ndarray
    b: float
    a: float
    state_prices: np.ndarray

    @classmethod
    def from_params(cls, mu: float, sigma: float, n_states: int, r: float) -> "SinglePeriodMarket":
        states = discretize_lognormal(mu, sigma, n_states)
        b, a = solve_pricing_exponent(states, r)
        xi = np.exp(a + b * np.log(states))
        return cls(
            n_states=n_states,
            r=r,
            mu=mu,
            sigma=sigma,
            states=states,
            b=b,
            a=a,
            state_prices=xi,
        )

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "r": self.r,
            "mu": self.mu,
            "sigma": self.sigma,
            "states": [float(v) for v in self.states],
            "b": self.b,
            "a": self.a,
            "state_prices": [float(v) for v in self.state_prices],
        }


def distributional_price(levels: Sequence[float], state_prices: Sequence[float]) -> float:
    """Minimal cost of any payoff with the empirical distribution of
    ``levels``: sort the levels ascending against the nonincreasing state
    prices — largest wealth lands on the cheapest state."""
    x = np.sort(np.asarray(levels, dtype=float))
    xi = np.asarray(state_prices, dtype=float)
    if x.shape != xi.shape:
        raise ValueError(f"{x.size} levels against {xi.size} state prices")
    return float(x @ xi) / x.size


@dataclass
class BuilderSession:
    """Mutable elicitation state: marker placement, live cost, lifecycle."""

    market: SinglePeriodMarket
    budget: float
    markers: np.ndarray = field(default=None)  # type: ignore[assignment]
    cost: float = 0.0
    status: str = "editing"
    realized_state: Optional[int] = None
    realized_wealth: Optional[float] = None

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.markers is None:
            self.markers = np.zeros(self.market.n_states)
        self.markers = np.asarray(self.markers, dtype=float)
        if self.markers.size != self.market.n_states:
            raise ValueError("one marker per state")
        marker_cost(self)


def marker_cost(session: BuilderSession) -> float:
    """Cost of the current placement; refreshes the submittable flag."""
    if session.status in ("submitted", "realized"):
        raise IllegalTransition(
            "markers are frozen once submitted",
            status=session.status,
            requested="editing",
        )
    cost = distributional_price(session.markers, session.market.state_prices)
    session.cost = cost
    slack = BAND_SLACK * session.budget
    within = (BAND_LOW * session.budget - slack) <= cost <= (session.budget + slack)
    session.status = "submittable" if within else "editing"
    return cost


def set_markers(session: BuilderSession, levels: Sequence[float]) -> float:
    """Replace the placement and return the refreshed cost."""
    levels = np.asarray(levels, dtype=float)
    if levels.size != session.market.n_states:
        raise ValueError("one marker per state")
    if not np.all(np.isfinite(levels)) or np.any(levels < 0):
        raise ValueError("markers must be finite and nonnegative")
    if session.status in ("submitted", "realized"):
        raise IllegalTransition(
            "markers are frozen once submitted",
            status=session.status,
            requested="editing",
        )
    session.markers = levels
    return marker_cost(session)


def submit_session(session: BuilderSession) -> None:
    """Lock the placement; only allowed from the submittable band."""
    if session.status == "editing":
        raise IllegalTransition(
            f"cost {session.cost:.6g} is outside the submittable band "
            f"[{BAND_LOW:.2f}, 1.00] of budget {session.budget:.6g}",
            status=session.status,
            requested="submitted",
        )
    if session.status != "submittable":
        raise IllegalTransition(
            "session was already submitted",
            status=session.status,
            requested="submitted",
        )
    session.status = "submitted"


@dataclass(frozen=True)
class MarginalPoints:
    """Point cloud of revealed marginal utility: (wealth, U′) pairs with the
    free positive scale pinned to k = 1."""

    points: np.ndarray  # shape (N, 2): wealth ascending, marginal nonincreasing
    degenerate: bool    # True when tied wealth levels map to several marginals


def infer_marginal_points(session: BuilderSession) -> MarginalPoints:
    """First-order conditions of the submitted placement: the marker paired
    with state i has marginal utility ξ_i (up to the free scale k)."""
    if session.status not in ("submitted", "realized"):
        raise NotSubmitted(
            "marginal utility is only revealed by a submitted placement",
            status=session.status,
        )
    wealth = np.sort(session.markers)
    xi = session.market.state_prices
    degenerate = bool(np.any(np.diff(wealth) == 0.0))
    return MarginalPoints(points=np.column_stack([wealth, xi]), degenerate=degenerate)


def realize_outcome(session: BuilderSession, seed: int) -> tuple:
    """Draw the single surviving state uniformly and pay the marker assigned
    to it under the cost-efficient pairing. Returns (state, wealth) with the
    state reported 1-based."""
    if session.status == "realized":
        raise IllegalTransition(
            "session outcome was already realized",
            status=session.status,
            requested="realized",
        )
    if session.status != "submitted":
        raise NotSubmitted(
            "only a submitted placement can be realized",
            status=session.status,
        )
    rng = np.random.Generator(np.random.Philox(seed))
    state = int(rng.integers(0, session.market.n_states))
    wealth = float(np.sort(session.markers)[state])
    session.status = "realized"
    session.realized_state = state + 1
    session.realized_wealth = wealth
    return state + 1, wealth


def session_to_dict(session: BuilderSession) -> dict:
    doc = {
        "n_states": session.market.n_states,
        "budget": session.budget,
        "markers": [float(v) for v in session.markers],
        "cost": session.cost,
        "cost_fraction": session.cost / session.budget,
        "status": session.status,
        "state_prices": [float(v) for v in session.market.state_prices],
        "stock_states": [float(v) for v in session.market.states],
    }
    if session.realized_state is not None:
        doc["realized_state"] = session.realized_state
        doc["realized_wealth"] = session.realized_wealth
    return doc
