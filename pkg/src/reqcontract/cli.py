"""Command-line driver: solve, sweep, calibrate, verify.

Exit codes: 0 success, 1 input error, 2 infeasible scenario, 3 Monte Carlo
disagreement.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, fields
from importlib import resources
from pathlib import Path

import numpy as np

from reqcontract.agent import best_response_effort, expected_agent_payoff
from reqcontract.calibration import fit_linear_mle, read_records_csv, to_dimensionless
from reqcontract.model import AgentParams, Scenario, std_normal_cdf
from reqcontract.montecarlo import (
    simulate_expected_agent_payoff,
    simulate_expected_principal_payoff,
    verify_phi_identity,
)
from reqcontract.principal import (
    SWEEP_MAX,
    OptimizerOptions,
    expected_principal_payoff,
    optimize_contracts,
    sweep_requirement,
)

SOLVE_SCHEMA = "reqcontract.solve/1"
CALIBRATE_SCHEMA = "reqcontract.calibrate/1"
Z_LIMIT = 4.0

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_VERIFY = 3

_AGENT_KEYS = {"a", "sigma", "c", "r"}
_OPTIMIZER_KEYS = {f.name for f in fields(OptimizerOptions)}
_TOP_KEYS = {"v0", "agents", "optimizer"}


class ConfigError(ValueError):
    pass


def preset_names() -> list[str]:
    root = resources.files("reqcontract") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_config_text(ref: str) -> str:
    path = Path(ref)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    preset = resources.files("reqcontract") / "presets" / f"{ref}.json"
    if preset.is_file():
        return preset.read_text(encoding="utf-8")
    raise ConfigError(f"{ref}: no such config file or preset (presets: {', '.join(preset_names())})")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _reject_unknown(obj: dict, allowed: set, path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")


def parse_config(data) -> tuple[Scenario, OptimizerOptions]:
    """Validate a decoded config document strictly."""
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    _reject_unknown(data, _TOP_KEYS, "config")
    if "v0" not in data:
        raise ConfigError("v0: missing")
    v0 = _number(data["v0"], "v0")
    if not (math.isfinite(v0) and v0 >= 0):
        raise ConfigError(f"v0: must be non-negative, got {v0!r}")
    raw_agents = data.get("agents")
    if not isinstance(raw_agents, list) or not raw_agents:
        raise ConfigError("agents: must be a non-empty list")
    agents = []
    for i, raw in enumerate(raw_agents):
        path = f"agents[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: must be an object")
        _reject_unknown(raw, _AGENT_KEYS, path)
        vals = {}
        for key in ("a", "sigma", "c", "r"):
            if key not in raw:
                if key == "r":
                    vals[key] = 1.0
                    continue
                raise ConfigError(f"{path}.{key}: missing")
            v = _number(raw[key], f"{path}.{key}")
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{path}.{key}: must be positive, got {v!r}")
            vals[key] = v
        agents.append(AgentParams(**vals))
    raw_opt = data.get("optimizer", {})
    if not isinstance(raw_opt, dict):
        raise ConfigError("optimizer: must be an object")
    _reject_unknown(raw_opt, _OPTIMIZER_KEYS, "optimizer")
    opt_vals = {}
    for key, v in raw_opt.items():
        num = _number(v, f"optimizer.{key}")
        if key in ("n_restarts", "max_iterations", "seed"):
            if num != int(num):
                raise ConfigError(f"optimizer.{key}: must be an integer, got {v!r}")
            num = int(num)
        opt_vals[key] = num
    try:
        opts = OptimizerOptions(**opt_vals)
    except ValueError as exc:
        raise ConfigError(f"optimizer: {exc}") from None
    return Scenario(v0=v0, agents=agents), opts


def load_config(ref: str) -> tuple[Scenario, OptimizerOptions]:
    text = _read_config_text(ref)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{ref}: invalid JSON ({exc})") from None
    return parse_config(data)


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def scenario_to_dict(scenario: Scenario, opts: OptimizerOptions) -> dict:
    return {
        "v0": scenario.v0,
        "agents": [asdict(a) for a in scenario.agents],
        "optimizer": asdict(opts),
    }


def result_document(scenario: Scenario, opts: OptimizerOptions, result) -> dict:
    return {
        "schema": SOLVE_SCHEMA,
        "input": scenario_to_dict(scenario, opts),
        "result": {
            "converged": result.converged,
            "contracts": [asdict(k) for k in result.contracts],
            "efforts": result.efforts,
            "principal_payoff": _finite_or_none(result.principal_payoff),
            "participation_slacks": result.participation_slacks,
        },
        "diagnostics": {
            "n_restarts_used": result.n_restarts_used,
            "best_restart": result.best_restart,
            "restart_payoffs": [_finite_or_none(p) for p in result.restart_payoffs],
        },
    }


def dump_json(doc: dict) -> str:
    # repr-based float output is the shortest string that round-trips.
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _write(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _fail(msg: str, code: int = EXIT_INPUT) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_solve(args) -> int:
    try:
        scenario, opts = load_config(args.config)
    except (ConfigError, OSError) as exc:
        return _fail(str(exc))
    result = optimize_contracts(scenario, opts)
    _write(args.out, dump_json(result_document(scenario, opts, result)))
    if not result.converged:
        return _fail("no restart reached a feasible contract", EXIT_INFEASIBLE)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not (0.0 <= args.min <= args.max <= SWEEP_MAX):
        return _fail(f"sweep range must satisfy 0 <= min <= max <= {SWEEP_MAX}")
    if args.points < 1:
        return _fail("--points must be at least 1")
    if args.points > 1 and args.min == args.max:
        return _fail("--min and --max must differ when --points > 1")
    try:
        scenario, opts = load_config(args.config)
    except (ConfigError, OSError) as exc:
        return _fail(str(exc))
    if not (0 <= args.agent < scenario.n_agents):
        return _fail(f"--agent {args.agent} out of range for {scenario.n_agents} agents")
    base = optimize_contracts(scenario, opts)
    if not base.converged:
        return _fail("no restart reached a feasible contract", EXIT_INFEASIBLE)
    grid = np.linspace(args.min, args.max, args.points) if args.points > 1 else [args.min]
    sweep = sweep_requirement(scenario, base, args.agent, grid)
    lines = ["psi13,principal_payoff,effort,slack"]
    for row in zip(sweep.grid, sweep.payoffs, sweep.efforts, sweep.slacks):
        lines.append(",".join(f"{v:.17g}" for v in row))
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    try:
        records = read_records_csv(args.csv)
        fit = fit_linear_mle(records, args.q0, args.i0)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            params = to_dimensionless(fit, args.qr, args.horizon, args.cost_rate)
    except (OSError, ValueError, ZeroDivisionError) as exc:
        return _fail(str(exc))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    doc = {
        "schema": CALIBRATE_SCHEMA,
        "input": {
            "csv": str(args.csv),
            "q0": args.q0,
            "i0": args.i0,
            "q_required": args.qr,
            "horizon": args.horizon,
            "cost_rate": args.cost_rate,
        },
        "fit": asdict(fit),
        "dimensionless": asdict(params),
    }
    _write(args.out, dump_json(doc))
    return EXIT_OK


def _z(analytic: float, est) -> float:
    diff = est.mean - analytic
    if est.std_error == 0:
        return 0.0 if abs(diff) <= 1e-12 else math.inf
    return diff / est.std_error


def verification_rows(scenario: Scenario, contracts, n: int, seed: int) -> list[tuple]:
    """(label, analytic, sampled, std_error, z) for every expectation checked."""
    rows = []
    for i, (k, agent) in enumerate(zip(contracts, scenario.agents)):
        e = best_response_effort(k, agent).effort
        est = simulate_expected_agent_payoff(e, k, agent, n, seed + 1 + i)
        exact = expected_agent_payoff(e, k, agent)
        rows.append((f"agent[{i}] payoff", exact, est.mean, est.std_error, _z(exact, est)))
        lam = agent.a * e - agent.r
        est = verify_phi_identity(lam, agent.sigma, n, seed + 1001 + i)
        exact = std_normal_cdf(lam / agent.sigma)
        rows.append((f"agent[{i}] success prob", exact, est.mean, est.std_error, _z(exact, est)))
    est = simulate_expected_principal_payoff(contracts, scenario, n, seed)
    exact = expected_principal_payoff(contracts, scenario)
    rows.append(("principal payoff", exact, est.mean, est.std_error, _z(exact, est)))
    return rows


def cmd_verify(args) -> int:
    if args.n < 2:
        return _fail("--n must be at least 2")
    if args.seed < 0:
        return _fail("--seed must be non-negative")
    try:
        scenario, opts = load_config(args.config)
    except (ConfigError, OSError) as exc:
        return _fail(str(exc))
    result = optimize_contracts(scenario, opts)
    if not result.converged:
        return _fail("no restart reached a feasible contract", EXIT_INFEASIBLE)
    rows = verification_rows(scenario, result.contracts, args.n, args.seed)
    out = [f"{'quantity':<26}{'analytic':>22}{'monte_carlo':>22}{'std_error':>14}{'z':>9}"]
    ok = True
    for label, exact, mean, se, z in rows:
        ok &= abs(z) <= Z_LIMIT
        out.append(f"{label:<26}{exact:>22.15g}{mean:>22.15g}{se:>14.6g}{z:>9.3f}")
    out.append(f"n={args.n} seed={args.seed} {'PASS' if ok else 'FAIL'} (|z| <= {Z_LIMIT:g})")
    sys.stdout.write("\n".join(out) + "\n")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reqcontract",
        description="Optimal requirement-based contracts for subsystem engineers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="optimize contracts for a scenario")
    p.add_argument("--config", required=True, help="JSON config path or preset name")
    p.add_argument("--out", default="-", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="SE payoff vs one agent's passed-down requirement")
    p.add_argument("--config", required=True)
    p.add_argument("--agent", type=int, default=0, help="0-based agent index")
    p.add_argument("--min", type=float, default=0.0)
    p.add_argument("--max", type=float, default=SWEEP_MAX)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="fit (a, sigma) from investment/quality history")
    p.add_argument("--csv", required=True)
    p.add_argument("--q0", type=float, required=True)
    p.add_argument("--i0", type=float, required=True)
    p.add_argument("--qr", type=float, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--cost-rate", type=float, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("verify", help="Monte Carlo cross-check of the analytic expectations")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
