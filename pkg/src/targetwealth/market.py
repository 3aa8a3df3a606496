"""Deterministic continuous-time market with piecewise-constant coefficients.

The market consists of a riskless bond with rate r(t) and d stocks with drift
vector mu(t) and invertible volatility matrix sigma(t), all piecewise constant
in time. Everything the engines need is derived from the market price of risk

    lambda(t) = sigma(t)^{-T} (mu(t) - r(t) 1),

namely the cumulative squared risk A(t) = integral of |lambda|^2 (exact and
piecewise linear here) and the policy direction sigma(t)^{-1} lambda(t).

Coefficients are required to be bounded with |lambda(t)| in [c0, c1] on every
piece. Note on regularity: the theory behind the engines asks for a
Hoelder-continuous |lambda|; piecewise-constant coefficients satisfy this on
each piece but may jump at piece boundaries. We accept the jumps deliberately
— A(t) stays exact, and no engine formula depends on lambda other than
through A — and document the relaxation here rather than smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RefusalError, TargetWealthError

DEFAULT_RISK_LOWER = 1e-6
DEFAULT_RISK_UPPER = 1e3


class SingularVolatility(RefusalError):
    """Volatility matrix is not invertible on some piece."""

    cause = "singular_volatility"


class RiskPriceOutOfBounds(RefusalError):
    """|lambda(t)| escapes the admissible band [c0, c1] on some piece."""

    cause = "risk_price_out_of_bounds"


class TimeOutOfRange(TargetWealthError):
    """Evaluation time outside [0, horizon]."""


@dataclass(frozen=True)
class MarketPiece:
    t_start: float
    t_end: float
    rate: float
    drift: tuple
    vol: tuple  # rows of the d x d volatility matrix

    def drift_vector(self) -> np.ndarray:
        return np.asarray(self.drift, dtype=float)

    def vol_matrix(self) -> np.ndarray:
        return np.asarray(self.vol, dtype=float)


@dataclass(frozen=True)
class MarketSpec:
    """Market description: d assets over [0, horizon], piecewise-constant
    (rate, drift, vol) on consecutive pieces tiling the horizon."""

    d: int
    horizon: float
    pieces: tuple

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("asset count d must be >= 1")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if not self.pieces:
            raise ValueError("at least one market piece is required")
        t = 0.0
        for p in self.pieces:
            if abs(p.t_start - t) > 1e-12:
                raise ValueError(
                    f"pieces must tile [0, horizon]: got start {p.t_start}, expected {t}"
                )
            if p.t_end <= p.t_start:
                raise ValueError("piece end must exceed its start")
            if len(p.drift) != self.d:
                raise ValueError("drift dimension mismatch")
            m = p.vol_matrix()
            if m.shape != (self.d, self.d):
                raise ValueError("vol must be a d x d matrix")
            if p.rate < 0:
                raise ValueError("rate must be nonnegative")
            t = p.t_end
        if abs(t - self.horizon) > 1e-12:
            raise ValueError(f"pieces end at {t}, horizon is {self.horizon}")

    @staticmethod
    def from_dict(doc: dict) -> "MarketSpec":
        pieces = tuple(
            MarketPiece(
                t_start=float(p["t_start"]),
                t_end=float(p["t_end"]),
                rate=float(p["rate"]),
                drift=tuple(float(v) for v in p["drift"]),
                vol=tuple(tuple(float(v) for v in row) for row in p["vol"]),
            )
            for p in doc["pieces"]
        )
        return MarketSpec(d=int(doc["d"]), horizon=float(doc["horizon"]), pieces=pieces)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "horizon": self.horizon,
            "pieces": [
                {
                    "t_start": p.t_start,
                    "t_end": p.t_end,
                    "rate": p.rate,
                    "drift": list(p.drift),
                    "vol": [list(row) for row in p.vol],
                }
                for p in self.pieces
            ],
        }


def constant_market(mu: float, r: float, sigma: float, horizon: float) -> MarketSpec:
    """Convenience one-asset market with constant coefficients."""
    piece = MarketPiece(0.0, horizon, r, (mu,), ((sigma,),))
    return MarketSpec(d=1, horizon=horizon, pieces=(piece,))


@dataclass
class MarketCurves:
    """Derived market quantities, immutable after construction.

    lambda and sigma^{-1} lambda are stored per piece; A(t) is the exact
    piecewise-linear integral of |lambda|^2 with breakpoints at piece edges.
    """

    spec: MarketSpec
    breakpoints: np.ndarray = field(repr=False)
    lambdas: np.ndarray = field(repr=False)          # (n_pieces, d)
    sigma_inv_lambdas: np.ndarray = field(repr=False)  # (n_pieces, d)
    lambda_sq: np.ndarray = field(repr=False)        # (n_pieces,)
    a_knots: np.ndarray = field(repr=False)          # A at breakpoints

    @property
    def horizon(self) -> float:
        return self.spec.horizon

    @property
    def a_total(self) -> float:
        """A at the horizon."""
        return self.cumulative_variance(self.horizon)

    def _piece_index(self, t: float) -> int:
        if t < -1e-12 or t > self.horizon + 1e-12:
            raise TimeOutOfRange(f"t={t} outside [0, {self.horizon}]")
        idx = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return min(max(idx, 0), len(self.lambda_sq) - 1)

    def cumulative_variance(self, t) -> float:
        """A(t) = ∫₀ᵗ |lambda(s)|² ds, exact for the piecewise-constant model."""
        tv = np.asarray(t, dtype=float)
        if np.any(tv < -1e-12) or np.any(tv > self.horizon + 1e-12):
            raise TimeOutOfRange(f"t outside [0, {self.horizon}]")
        idx = np.clip(
            np.searchsorted(self.breakpoints, tv, side="right") - 1,
            0,
            len(self.lambda_sq) - 1,
        )
        out = self.a_knots[idx] + self.lambda_sq[idx] * (tv - self.breakpoints[idx])
        return float(out) if np.isscalar(t) else out

    def lambda_of(self, t: float) -> np.ndarray:
        return self.lambdas[self._piece_index(t)]

    def lambda_sq_of(self, t: float) -> float:
        return float(self.lambda_sq[self._piece_index(t)])

    def sigma_inv_lambda(self, t: float) -> np.ndarray:
        return self.sigma_inv_lambdas[self._piece_index(t)]


def build_curves(
    spec: MarketSpec,
    risk_lower: float = DEFAULT_RISK_LOWER,
    risk_upper: float = DEFAULT_RISK_UPPER,
) -> MarketCurves:
    """Solve for lambda on every piece and assemble the A(t) curve.

    Raises SingularVolatility if any sigma piece is not invertible and
    RiskPriceOutOfBounds if |lambda| leaves [risk_lower, risk_upper].
    """
    lambdas, si_lambdas, lam_sq = [], [], []
    for p in spec.pieces:
        sigma = p.vol_matrix()
        excess = p.drift_vector() - p.rate * np.ones(spec.d)
        try:
            lam = np.linalg.solve(sigma.T, excess)
            si_lam = np.linalg.solve(sigma, lam)
        except np.linalg.LinAlgError as exc:
            raise SingularVolatility(
                f"volatility matrix on [{p.t_start}, {p.t_end}] is singular"
            ) from exc
        norm = float(np.linalg.norm(lam))
        if not (risk_lower <= norm <= risk_upper):
            raise RiskPriceOutOfBounds(
                f"|lambda|={norm:g} on [{p.t_start}, {p.t_end}] outside "
                f"[{risk_lower:g}, {risk_upper:g}]",
                piece_start=p.t_start,
                piece_end=p.t_end,
                risk_norm=norm,
            )
        lambdas.append(lam)
        si_lambdas.append(si_lam)
        lam_sq.append(norm**2)

    breakpoints = np.array([p.t_start for p in spec.pieces])
    durations = np.array([p.t_end - p.t_start for p in spec.pieces])
    lam_sq = np.array(lam_sq)
    a_knots = np.concatenate([[0.0], np.cumsum(lam_sq * durations)])[:-1]
    return MarketCurves(
        spec=spec,
        breakpoints=breakpoints,
        lambdas=np.array(lambdas),
        sigma_inv_lambdas=np.array(si_lambdas),
        lambda_sq=lam_sq,
        a_knots=a_knots,
    )
