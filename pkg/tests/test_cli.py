"""CLI: JSON in/out, file round trips, exit-code contract."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from targetwealth.cli import main

MARKET = '{"mu": 0.07, "r": 0.03, "sigma": 0.2, "horizon": 1.0}'


@pytest.fixture()
def runner():
    return CliRunner()


def test_feasibility_bare_family_to_stdout(runner):
    result = runner.invoke(
        main, ["feasibility", "--market", MARKET, "--dist", "lognormal", "--x0", "1.0"]
    )
    assert result.exit_code == 0
    assert result.output.endswith("\n") and "\n" not in result.output[:-1]
    body = json.loads(result.output)
    np.testing.assert_allclose(body["solved_parameter"], 0.16, rtol=1e-9)
    assert body["feasible"] is True


def test_feasibility_inline_distribution_doc(runner):
    result = runner.invoke(
        main,
        [
            "feasibility",
            "--market", MARKET,
            "--dist", '{"family": "lognormal", "b": 0.16}',
            "--x0", "1.0",
        ],
    )
    assert result.exit_code == 0
    assert json.loads(result.output)["budget_binding"] is True


def test_at_file_inputs(runner, tmp_path):
    market_file = tmp_path / "market.json"
    market_file.write_text(MARKET)
    dist_file = tmp_path / "dist.json"
    dist_file.write_text('{"family": "lognormal"}')
    result = runner.invoke(
        main,
        ["feasibility", "--market", f"@{market_file}", "--dist", f"@{dist_file}", "--x0", "1.0"],
    )
    assert result.exit_code == 0
    np.testing.assert_allclose(json.loads(result.output)["solved_parameter"], 0.16, rtol=1e-9)


def test_refusal_exits_2_with_payload_on_stderr(runner):
    result = runner.invoke(
        main,
        [
            "infer",
            "--market", MARKET,
            "--dist", '{"family": "lognormal", "b": 0.36}',
            "--x0", "1.0",
        ],
    )
    assert result.exit_code == 2
    error = json.loads(result.stderr)["error"]
    assert error["cause"] == "budget_violated"
    np.testing.assert_allclose(error["budget"], np.exp(0.06), rtol=1e-10)


@pytest.mark.parametrize(
    "args",
    [
        ["feasibility", "--market", "{not json", "--dist", "lognormal", "--x0", "1.0"],
        ["feasibility", "--market", "@/no/such/file.json", "--dist", "lognormal", "--x0", "1.0"],
        ["infer", "--market", MARKET, "--dist", "lognormal", "--mode", "intermediate", "--x0", "1.0"],
    ],
)
def test_operational_errors_exit_1(runner, args):
    result = runner.invoke(main, args)
    assert result.exit_code == 1
    assert result.stderr.startswith("error:")


def test_simulate_out_file_is_reproducible(runner, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for out in paths:
        result = runner.invoke(
            main,
            [
                "simulate",
                "--market", MARKET,
                "--dist", "lognormal",
                "--x0", "1.0",
                "--paths", "500",
                "--dt", "0.01",
                "--seed", "7",
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output + result.stderr
    assert paths[0].read_bytes() == paths[1].read_bytes()
    body = json.loads(paths[0].read_text())
    assert body["checks"]["martingale"]["pass"] is True
    assert body["fan"]["wealth"]["p50"][0] == 1.0


def test_pretty_format_matches_compact_content(runner):
    args = ["feasibility", "--market", MARKET, "--dist", "lognormal", "--x0", "1.0"]
    compact = runner.invoke(main, args)
    pretty = runner.invoke(main, args + ["--format", "pretty"])
    assert pretty.exit_code == 0
    assert pretty.output.count("\n") > 1  # actually indented
    assert json.loads(pretty.output) == json.loads(compact.output)


def test_builder_demo_scripted_pass(runner):
    result = runner.invoke(main, ["builder-demo", "--n-states", "8", "--seed", "3"])
    assert result.exit_code == 0
    body = json.loads(result.output)
    np.testing.assert_allclose(body["riskless_profile"]["cost_fraction"], 1.0, rtol=1e-10)
    assert body["riskless_profile"]["status"] == "submittable"
    assert body["marginal_points"]["degenerate"] is True
    assert 1 <= body["realized"]["state"] <= 8
    np.testing.assert_allclose(body["realized"]["wealth"], 100.0 * 1.02, rtol=1e-12)


def test_help_lists_the_commands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ("feasibility", "infer", "simulate", "builder-demo", "serve"):
        assert command in result.output
