"""JSON API service: the engines and builder sessions over HTTP.

Compute endpoints (/v1/feasibility, /v1/preferences, /v1/simulate) are pure
functions of the request; only the Distribution Builder loop keeps state, in
an in-memory TTL store keyed by opaque session ids.

Status mapping: 400 malformed request (schema or value errors), 404 unknown
session, 409 illegal session transition, 422 a mathematically valid refusal
(infeasible wealth, violated inversion assumptions, inadmissible measure, …)
with a machine-readable ``cause``. Engine faults never leak stack traces.

Configuration via environment:
  TARGETWEALTH_BIND          host:port for `targetwealth serve` (default 127.0.0.1:8000)
  TARGETWEALTH_SESSION_TTL   builder session lifetime in seconds (default 3600)
  TARGETWEALTH_QUAD_NODES    default Gauss–Hermite node count
  TARGETWEALTH_QUAD_RADIUS   default truncation radius for adaptive quadrature
"""

from __future__ import annotations

import os
import secrets
import threading
import time
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import builder as bld
from .errors import (
    IllegalTransition,
    NotSubmitted,
    OutOfRange,
    RefusalError,
    TargetWealthError,
    TimeMismatch,
)
from .fixed_horizon import (
    budget_constraint_terminal,
    solve_family_parameter,
    solve_fixed_horizon,
)
from .forward import budget_constraint_forward, solve_forward
from .intermediate import budget_constraint_intermediate, solve_intermediate
from .market import MarketCurves, MarketSpec, TimeOutOfRange, build_curves, constant_market
from .numerics import QuadratureSpec
from .simulate import SimulationConfig, martingale_check, ks_check, self_financing_check, simulate
from .targets import (
    distribution_from_dict,
    lognormal_family,
    transformed_normal_family,
)

FEASIBLE_RTOL = 1e-6


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    session_ttl: float = 3600.0
    quad: Optional[QuadratureSpec] = None

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        bind = os.environ.get("TARGETWEALTH_BIND", "127.0.0.1:8000")
        host, _, port = bind.rpartition(":")
        ttl = float(os.environ.get("TARGETWEALTH_SESSION_TTL", "3600"))
        quad = None
        nodes = os.environ.get("TARGETWEALTH_QUAD_NODES")
        radius = os.environ.get("TARGETWEALTH_QUAD_RADIUS")
        if nodes or radius:
            quad = QuadratureSpec(
                nodes=int(nodes) if nodes else 96,
                radius=float(radius) if radius else 10.0,
            )
        return cls(host=host or "127.0.0.1", port=int(port), session_ttl=ttl, quad=quad)


class UnknownSession(KeyError):
    pass


class SessionStore:
    """In-memory builder sessions with sliding TTL expiry.

    Expiry is enforced per entry on access; the full sweep only runs
    periodically so a burst of short-lived sessions does not turn every
    request into a scan of the whole store.
    """

    def __init__(self, ttl: float):
        self.ttl = ttl
        self._lock = threading.Lock()
        self._sessions: dict = {}
        self._purge_interval = min(ttl, 1.0)
        self._next_purge = time.monotonic() + self._purge_interval

    def _maybe_purge(self, now: float) -> None:
        if now < self._next_purge:
            return
        dead = [sid for sid, (_, exp) in self._sessions.items() if exp < now]
        for sid in dead:
            del self._sessions[sid]
        self._next_purge = now + self._purge_interval

    def create(self, session: bld.BuilderSession) -> str:
        sid = secrets.token_hex(16)
        now = time.monotonic()
        with self._lock:
            self._maybe_purge(now)
            self._sessions[sid] = (session, now + self.ttl)
        return sid

    def get(self, sid: str) -> bld.BuilderSession:
        now = time.monotonic()
        with self._lock:
            self._maybe_purge(now)
            entry = self._sessions.get(sid)
            if entry is None or entry[1] < now:
                self._sessions.pop(sid, None)
                raise UnknownSession(sid)
            session, _ = entry
            self._sessions[sid] = (session, now + self.ttl)
            return session


# ---------------------------------------------------------------------------
# request schemas
# ---------------------------------------------------------------------------


class EngineRequest(BaseModel):
    market: dict
    distribution: dict
    x0: Optional[float] = Field(default=None, gt=0)
    mode: Literal["terminal", "intermediate", "forward"] = "terminal"
    target_time: Optional[float] = Field(default=None, gt=0)


class SimulateRequest(EngineRequest):
    paths: int = Field(default=100_000, ge=1)
    dt: Optional[float] = Field(default=None, gt=0)
    seed: int = 0
    checks: Optional[List[Literal["martingale", "ks", "self-financing"]]] = None


class BuilderCreate(BaseModel):
    n_states: int = Field(ge=3, le=100_000)
    budget: float = Field(gt=0)
    mu: float
    sigma: float = Field(gt=0)
    r: float = Field(gt=-1)


class MarkersBody(BaseModel):
    markers: List[float]


class RealizeBody(BaseModel):
    seed: int = 0


# ---------------------------------------------------------------------------
# request resolution shared by the compute endpoints
# ---------------------------------------------------------------------------


def market_from_doc(doc: dict) -> MarketSpec:
    if "pieces" in doc:
        doc = dict(doc)
        doc.setdefault("d", len(doc["pieces"][0]["drift"]))
        return MarketSpec.from_dict(doc)
    return constant_market(
        mu=float(doc["mu"]),
        r=float(doc["r"]),
        sigma=float(doc["sigma"]),
        horizon=float(doc["horizon"]),
    )


def _normalize_dist_doc(doc: dict) -> dict:
    doc = dict(doc)
    if "b" in doc and "params" not in doc:
        doc["params"] = {"b": doc.pop("b")}
    return doc


@dataclass
class Prepared:
    curves: MarketCurves
    dist: object
    x0: Optional[float]
    budget: float
    solved_parameter: Optional[float]
    t_hat: Optional[float]


def _prepare(req: EngineRequest, quad: Optional[QuadratureSpec]) -> Prepared:
    curves = build_curves(market_from_doc(req.market))
    t_hat = None
    if req.mode == "intermediate":
        if req.target_time is None:
            raise ValueError("intermediate mode requires target_time")
        t_hat = float(req.target_time)
        if not (0.0 < t_hat < curves.horizon):
            raise ValueError("target_time must lie strictly inside (0, horizon)")
        a_var = curves.cumulative_variance(t_hat)
    else:
        a_var = curves.a_total

    doc = _normalize_dist_doc(req.distribution)
    family = doc.get("family")
    parametric = family in ("lognormal", "transformed-normal")
    if parametric and "params" not in doc:
        if req.x0 is None:
            raise ValueError(
                f"family {family!r} without its parameter requires x0 to solve for it"
            )
        b = solve_family_parameter(family, req.x0, curves, quad, a_variance=a_var)
        dist = lognormal_family(b) if family == "lognormal" else transformed_normal_family(b)
        return Prepared(curves, dist, req.x0, req.x0, float(b), t_hat)

    dist = distribution_from_dict(doc, a_total=a_var)
    if req.mode == "terminal":
        budget = budget_constraint_terminal(dist, curves, quad)
    elif req.mode == "intermediate":
        budget = budget_constraint_intermediate(dist, curves, t_hat, quad)
    else:
        budget = budget_constraint_forward(dist, curves, req.target_time, quad)
    solved = dist.params.get("b") if parametric else None
    return Prepared(curves, dist, req.x0, float(budget), solved, t_hat)


# ---------------------------------------------------------------------------
# compute endpoint bodies (shared with the CLI)
# ---------------------------------------------------------------------------


def feasibility_report(req: EngineRequest, quad: Optional[QuadratureSpec] = None) -> dict:
    prep = _prepare(req, quad)
    if prep.x0 is None:
        feasible = True
    else:
        feasible = prep.x0 >= prep.budget * (1.0 - FEASIBLE_RTOL)
    body = {
        "mode": req.mode,
        "feasible": feasible,
        "budget_value": prep.budget,
    }
    if prep.solved_parameter is not None:
        body["solved_parameter"] = prep.solved_parameter
    if prep.x0 is not None:
        body["budget_binding"] = bool(
            abs(prep.x0 - prep.budget) <= FEASIBLE_RTOL * max(1.0, abs(prep.x0))
        )
    return body


def preferences_report(req: EngineRequest, quad: Optional[QuadratureSpec] = None) -> dict:
    prep = _prepare(req, quad)
    x0 = prep.x0 if prep.x0 is not None else prep.budget
    if req.mode == "terminal":
        sol = solve_fixed_horizon(prep.dist, prep.curves, x0, quad)
        wealth = prep.dist.quantile(np.linspace(0.01, 0.99, 99))
        values = sol.marginal_utility(wealth)
        return {
            "mode": "terminal",
            "solved_parameter": prep.solved_parameter,
            "beta": sol.beta,
            "marginal_utility": {
                "wealth": [float(v) for v in wealth],
                "value": [float(v) for v in values],
            },
        }
    if req.mode == "intermediate":
        sol = solve_intermediate(prep.dist, prep.curves, x0, prep.t_hat, quad)
        xs = np.linspace(-2.0, 2.0, 81)
        v = np.exp(-sol.c * xs)
        values = np.array([sol.inverse_marginal(float(vi)) for vi in v])
        return {
            "mode": "intermediate",
            "target_time": prep.t_hat,
            "solved_parameter": prep.solved_parameter,
            "inverse_marginal": {
                "v": [float(t) for t in v],
                "value": [float(t) for t in values],
            },
            "assumptions": {
                "entire": bool(sol.assumption_report.entire),
                "growth_ok": bool(sol.assumption_report.growth_ok),
                "real_nonneg_ok": bool(sol.assumption_report.real_nonneg_ok),
            },
        }
    sol = solve_forward(prep.dist, prep.curves, x0, req.target_time, quad)
    level0 = sol.measure.moment(lambda y: 1.0 / y)
    wealth = np.geomspace(0.2 * level0, 5.0 * level0, 81)
    values = sol.u0_prime(wealth)
    return {
        "mode": "forward",
        "solved_parameter": prep.solved_parameter,
        "measure": sol.measure.to_dict(),
        "normalization": {"x0": sol.x0, "tilt_rate": sol.a_total},
        "u0_prime": {
            "wealth": [float(v) for v in wealth],
            "value": [float(v) for v in values],
        },
    }


def simulation_report(req: SimulateRequest, quad: Optional[QuadratureSpec] = None) -> dict:
    prep = _prepare(req, quad)
    x0 = prep.x0 if prep.x0 is not None else prep.budget
    if req.mode == "terminal":
        sol = solve_fixed_horizon(prep.dist, prep.curves, x0, quad)
        h, sim_mode, target_time = sol.h, "fixed", prep.curves.horizon
    elif req.mode == "intermediate":
        sol = solve_intermediate(prep.dist, prep.curves, x0, prep.t_hat, quad)
        h, sim_mode, target_time = sol.h, "fixed", prep.t_hat
    else:
        sol = solve_forward(prep.dist, prep.curves, x0, req.target_time, quad)
        h, sim_mode, target_time = sol.h, "forward", prep.curves.horizon

    checks = frozenset(req.checks) if req.checks is not None else SimulationConfig.checks
    cfg = SimulationConfig(
        path_count=req.paths,
        step_size=req.dt,
        seed=req.seed,
        checks=checks,
    )
    bundle = simulate(h, sim_mode, prep.curves, x0, cfg, target_time=target_time)

    check_results = {}
    if "martingale" in cfg.checks:
        est, se, ok = martingale_check(bundle)
        check_results["martingale"] = {"estimate": est, "std_error": se, "pass": ok}
    if "ks" in cfg.checks:
        stat, ok = ks_check(bundle, prep.dist, target_time)
        check_results["ks"] = {
            "statistic": stat,
            "threshold": float(1.95 / np.sqrt(bundle.path_count)),
            "pass": ok,
        }
    if "self-financing" in cfg.checks:
        res, ok = self_financing_check(bundle)
        check_results["self_financing"] = {"median_relative_residual": res, "pass": ok}

    names = ("p5", "p25", "p50", "p75", "p95")
    return {
        "mode": req.mode,
        "x0": x0,
        "seed": req.seed,
        "target_time": target_time,
        "times": [float(t) for t in bundle.times],
        "fan": {
            "wealth": {
                name: [float(v) for v in bundle.fan_wealth[:, i]]
                for i, name in enumerate(names)
            },
            "portfolio_norm": {
                name: [float(v) for v in bundle.fan_portfolio[:, i]]
                for i, name in enumerate(names)
            },
        },
        "checks": check_results,
    }


# ---------------------------------------------------------------------------
# app factory
# ---------------------------------------------------------------------------


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    app = FastAPI(title="targetwealth", docs_url=None, redoc_url=None)
    # the browser distribution builder is served from its own origin; the API
    # carries no credentials or cookies, so a blanket allow is safe here
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(config.session_ttl)
    quad = config.quad

    @app.exception_handler(RequestValidationError)
    async def _schema_error(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": [str(p) for p in err.get("loc", [])], "msg": err.get("msg", "")}
            for err in exc.errors()
        ]
        return JSONResponse(
            status_code=400,
            content={"error": {"cause": "schema_violation", "message": "request does not match the schema", "detail": detail}},
        )

    @app.exception_handler(RefusalError)
    async def _refusal(request: Request, exc: RefusalError):
        return JSONResponse(status_code=422, content={"error": exc.payload()})

    @app.exception_handler(NotSubmitted)
    async def _not_submitted(request: Request, exc: NotSubmitted):
        return JSONResponse(
            status_code=409,
            content={"error": {"cause": "illegal_transition", "message": str(exc), "status": exc.status}},
        )

    @app.exception_handler(IllegalTransition)
    async def _illegal(request: Request, exc: IllegalTransition):
        return JSONResponse(
            status_code=409,
            content={
                "error": {
                    "cause": "illegal_transition",
                    "message": str(exc),
                    "status": exc.status,
                    "requested": exc.requested,
                }
            },
        )

    @app.exception_handler(UnknownSession)
    async def _unknown_session(request: Request, exc: UnknownSession):
        return JSONResponse(
            status_code=404,
            content={"error": {"cause": "unknown_session", "message": "no such builder session"}},
        )

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"error": {"cause": "invalid_request", "message": str(exc)}},
        )

    @app.exception_handler(TargetWealthError)
    async def _fault(request: Request, exc: TargetWealthError):
        if isinstance(exc, (TimeMismatch, OutOfRange, TimeOutOfRange)):
            return JSONResponse(
                status_code=400,
                content={"error": {"cause": "invalid_request", "message": str(exc)}},
            )
        return JSONResponse(
            status_code=500,
            content={"error": {"cause": "internal_fault", "message": str(exc)}},
        )

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    # ---- compute endpoints ------------------------------------------------

    @app.post("/v1/feasibility")
    def feasibility(req: EngineRequest):
        return feasibility_report(req, quad)

    @app.post("/v1/preferences")
    def preferences(req: EngineRequest):
        return preferences_report(req, quad)

    @app.post("/v1/simulate")
    def run_simulation(req: SimulateRequest):
        return simulation_report(req, quad)

    # ---- builder session endpoints ----------------------------------------

    def _session_doc(sid: str, session: bld.BuilderSession) -> dict:
        doc = bld.session_to_dict(session)
        doc["id"] = sid
        return doc

    @app.post("/v1/builder", status_code=201)
    def builder_create(body: BuilderCreate):
        market = bld.SinglePeriodMarket.from_params(body.mu, body.sigma, body.n_states, body.r)
        session = bld.BuilderSession(market=market, budget=body.budget)
        sid = store.create(session)
        return _session_doc(sid, session)

    @app.get("/v1/builder/{sid}")
    def builder_get(sid: str):
        return _session_doc(sid, store.get(sid))

    @app.put("/v1/builder/{sid}/markers")
    def builder_markers(sid: str, body: MarkersBody):
        session = store.get(sid)
        bld.set_markers(session, body.markers)
        return _session_doc(sid, session)

    @app.post("/v1/builder/{sid}/submit")
    def builder_submit(sid: str):
        session = store.get(sid)
        bld.submit_session(session)
        points = bld.infer_marginal_points(session)
        return {
            "session": _session_doc(sid, session),
            "marginal_points": {
                "points": [[float(w), float(m)] for w, m in points.points],
                "degenerate": points.degenerate,
            },
        }

    @app.post("/v1/builder/{sid}/realize")
    def builder_realize(sid: str, body: RealizeBody):
        session = store.get(sid)
        state, wealth = bld.realize_outcome(session, body.seed)
        return {
            "state": state,
            "wealth": wealth,
            "session": _session_doc(sid, session),
        }

    return app


app = create_app()


def serve(host: Optional[str] = None, port: Optional[int] = None) -> None:
    """Blocking uvicorn runner used by `targetwealth serve`."""
    import uvicorn

    config = ServiceConfig.from_env()
    uvicorn.run(
        app,
        host=host or config.host,
        port=port if port is not None else config.port,
        log_level="warning",
    )
