"""Command-line interface.

Inputs that describe a market or a target distribution are JSON documents,
given inline, as ``@path`` to read from a file, or (for distributions) as a
bare family name like ``lognormal`` when the parameter should be solved from
the budget. Output is JSON; with a fixed seed the bytes are reproducible.

Exit codes: 0 success, 2 the engine refused on mathematical grounds (the
refusal document goes to stderr), 1 anything else.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import RefusalError, TargetWealthError
from .service import (
    EngineRequest,
    SimulateRequest,
    feasibility_report,
    preferences_report,
    simulation_report,
)


def _load_doc(text: str) -> dict:
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    text = text.strip()
    if not text.startswith("{"):
        return {"family": text}
    return json.loads(text)


def _emit(doc: dict, out, pretty: bool) -> None:
    if pretty:
        payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        payload = json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
    if out == "-":
        click.echo(payload, nl=False)
    else:
        Path(out).write_text(payload)


def _run(report, out: str, pretty: bool) -> None:
    try:
        _emit(report(), out, pretty)
    except RefusalError as exc:
        click.echo(json.dumps({"error": exc.payload()}, sort_keys=True), err=True)
        sys.exit(2)
    except (TargetWealthError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


market_option = click.option(
    "--market", required=True, help="market JSON ({mu,r,sigma,horizon} or piecewise doc), or @file"
)
dist_option = click.option(
    "--dist", required=True, help="target distribution JSON, @file, or bare family name"
)
x0_option = click.option("--x0", type=float, default=None, help="initial wealth")
mode_option = click.option(
    "--mode", type=click.Choice(["terminal", "intermediate", "forward"]), default="terminal"
)
target_time_option = click.option(
    "--target-time", type=float, default=None, help="intermediate target date / elicitation horizon"
)
out_option = click.option("--out", default="-", help="output file, or - for stdout")
format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "pretty"]), default="json"
)


@click.group()
def main():
    """Target-distribution wealth engines: feasibility, preference inference,
    policy simulation, and the JSON API server."""


@main.command()
@market_option
@dist_option
@x0_option
@mode_option
@target_time_option
@out_option
@format_option
def feasibility(market, dist, x0, mode, target_time, out, fmt):
    """Price the target and report whether the budget can fund it."""

    def report():
        req = EngineRequest(
            market=_load_doc(market),
            distribution=_load_doc(dist),
            x0=x0,
            mode=mode,
            target_time=target_time,
        )
        return feasibility_report(req)

    _run(report, out, fmt == "pretty")


@main.command()
@market_option
@dist_option
@x0_option
@mode_option
@target_time_option
@out_option
@format_option
def infer(market, dist, x0, mode, target_time, out, fmt):
    """Recover the risk preferences consistent with the target."""

    def report():
        req = EngineRequest(
            market=_load_doc(market),
            distribution=_load_doc(dist),
            x0=x0,
            mode=mode,
            target_time=target_time,
        )
        return preferences_report(req)

    _run(report, out, fmt == "pretty")


@main.command()
@market_option
@dist_option
@x0_option
@mode_option
@target_time_option
@click.option("--paths", type=int, default=100_000, show_default=True)
@click.option("--dt", type=float, default=None, help="time step (default horizon/1000)")
@click.option("--seed", type=int, default=0, show_default=True)
@out_option
@format_option
def simulate(market, dist, x0, mode, target_time, paths, dt, seed, out, fmt):
    """Simulate the optimal wealth paths and run the statistical checks."""

    def report():
        req = SimulateRequest(
            market=_load_doc(market),
            distribution=_load_doc(dist),
            x0=x0,
            mode=mode,
            target_time=target_time,
            paths=paths,
            dt=dt,
            seed=seed,
        )
        return simulation_report(req)

    _run(report, out, fmt == "pretty")


@main.command("builder-demo")
@click.option("--n-states", type=int, default=8, show_default=True)
@click.option("--budget", type=float, default=100.0, show_default=True)
@click.option("--mu", type=float, default=0.08, show_default=True)
@click.option("--sigma", type=float, default=0.2, show_default=True)
@click.option("--r", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@out_option
@format_option
def builder_demo(n_states, budget, mu, sigma, r, seed, out, fmt):
    """Run one scripted pass of the single-period builder loop: start at the
    risk-free profile, submit, realize an outcome."""
    from . import builder as bld

    def report():
        market = bld.SinglePeriodMarket.from_params(mu, sigma, n_states, r)
        session = bld.BuilderSession(market=market, budget=budget)
        riskless = budget * (1.0 + r)
        bld.set_markers(session, [riskless] * n_states)
        after_markers = bld.session_to_dict(session)
        bld.submit_session(session)
        points = bld.infer_marginal_points(session)
        state, wealth = bld.realize_outcome(session, seed)
        return {
            "market": market.to_dict(),
            "riskless_profile": after_markers,
            "marginal_points": {
                "points": [[float(w), float(m)] for w, m in points.points],
                "degenerate": points.degenerate,
            },
            "realized": {"state": state, "wealth": wealth},
        }

    _run(report, out, fmt == "pretty")


@main.command()
@click.option(
    "--serve-addr", default=None, help="host:port (default from TARGETWEALTH_BIND or 127.0.0.1:8000)"
)
def serve(serve_addr):
    """Run the JSON API server."""
    from .service import serve as run_server

    host = port = None
    if serve_addr:
        host, _, port_s = serve_addr.rpartition(":")
        port = int(port_s)
    run_server(host=host or None, port=port)


if __name__ == "__main__":
    main()
