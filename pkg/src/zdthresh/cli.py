"""Command-line interface.

Exit codes: 0 success, 1 internal failure or size limit, 2 invalid input,
3 infeasible request, 4 verification failure.

Options come from three layers: built-in defaults, then a JSON file given
with ``--config``, then explicit flags. The resolved options are echoed
into every artifact.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Any

import numpy as np

from . import __version__
from .errors import (InfeasibleParameters, InvalidSpec, NotEnforceable,
                     SlopeOutOfRange, StateSpaceTooLarge, ZDError)
from .games import GameSpec, check_social_dilemma, payoff_table
from .regions import PRESET_N, PRESETS, decimal_grid, default_axis, region_sweep
from .verify import (MAX_EXACT_PLAYERS, StrategyProfile, exact_discounted_payoffs,
                     random_opponents, relation_residual, simulate_monte_carlo)
from .zd import (MemoryOneStrategy, ZDClass, ZDParameters, baseline_for,
                 construct_zd, enforceable, feasible_phi_interval, l_bounds,
                 resolve_parameters)

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3, 4
RESIDUAL_TOL = 1e-8

DEFAULTS: dict[str, dict[str, Any]] = {
    "region": {"class": "generous", "axis_step": 0.01, "format": "csv"},
    "construct": {"delta": 0.999},
    "verify": {"opponents": 100, "seed": 42},
    "simulate": {"episodes": 200000, "seed": 7, "opponent_seed": 42},
    "check": {},
}
GAME_KEYS = ("family", "n", "m", "r", "b", "c")


class UsageError(Exception):
    """Invalid command-line or config input (exit 2)."""


class Infeasible(Exception):
    """The request is well-formed but cannot be realized (exit 3)."""


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _add_game_flags(p):
    g = p.add_argument_group("game")
    g.add_argument("--family", choices=["pgg", "sdg"])
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--r", type=float, help="public goods multiplier")
    g.add_argument("--b", type=float, help="snowdrift benefit")
    g.add_argument("--c", type=float, help="cost")


def _add_common(p):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--output", "-o", help="artifact path (default: stdout)")


def _add_strategy_source(p):
    p.add_argument("--strategy", help="strategy JSON written by 'construct'")
    p.add_argument("--class", dest="class", choices=[c.value for c in ZDClass])
    p.add_argument("--s", type=float)
    p.add_argument("--l", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--p0", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zdthresh",
        description="Zero-determinant strategies in threshold public goods "
                    "and snowdrift games.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", help="sweep feasible slope bounds")
    _add_common(p)
    _add_game_flags(p)
    p.add_argument("--class", dest="class", choices=["generous", "extortionate"])
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--axis-min", type=float)
    p.add_argument("--axis-max", type=float)
    p.add_argument("--axis-step", type=float)
    p.add_argument("--axis-values", type=_float_list, help="comma-separated axis 1 values")
    p.add_argument("--m-values", type=_int_list, help="comma-separated thresholds")
    p.add_argument("--format", choices=["csv", "json"])

    p = sub.add_parser("construct", help="build a ZD strategy")
    _add_common(p)
    _add_game_flags(p)
    _add_strategy_source(p)

    p = sub.add_parser("verify", help="exact check of the enforced relation")
    _add_common(p)
    _add_game_flags(p)
    _add_strategy_source(p)
    p.add_argument("--opponents", type=int, help="number of random opponent profiles")
    p.add_argument("--opponent-file", help="JSON list of n-1 co-player strategies")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of payoffs")
    _add_common(p)
    _add_game_flags(p)
    _add_strategy_source(p)
    p.add_argument("--episodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--opponent-seed", type=int)
    p.add_argument("--opponent-file", help="JSON list of n-1 co-player strategies")

    p = sub.add_parser("check", help="print payoffs and test the dilemma conditions")
    _add_common(p)
    _add_game_flags(p)
    return parser


def resolve_options(args: argparse.Namespace) -> dict[str, Any]:
    opts = dict(DEFAULTS[args.command])
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        game = cfg.pop("game", None)
        if isinstance(game, dict):
            opts.update(game)
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for key, value in vars(args).items():
        if key in ("config", "command") or value is None:
            continue
        opts[key] = value
    return opts


def resolve_game(opts: dict[str, Any]) -> GameSpec:
    missing = [k for k in ("family", "n", "m") if opts.get(k) is None]
    if missing:
        raise UsageError(f"missing game field(s): {', '.join(missing)}")
    d = {k: opts[k] for k in GAME_KEYS if opts.get(k) is not None}
    return GameSpec.from_dict(d)


def write_artifact(text: str, path: str | None) -> None:
    if not path:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _info(msg: str, opts: dict[str, Any]) -> None:
    # Keep stdout clean when the artifact itself goes there.
    print(msg, file=sys.stdout if opts.get("output") else sys.stderr)


def _jsonable(opts):
    return {k: v for k, v in opts.items() if k != "output"}


# -- region ----------------------------------------------------------------

def cmd_region(opts: dict[str, Any]) -> int:
    preset = opts.get("preset")
    if preset:
        p = PRESETS[preset]
        opts.update(family=p["family"], n=PRESET_N)
        opts["class"] = p["cls"]
        opts.setdefault("axis_min", p["axis1"][0])
        opts.setdefault("axis_max", p["axis1"][1])
    family = opts.get("family")
    n = opts.get("n")
    if family is None or n is None:
        raise UsageError("region needs --family and --n (or --preset)")
    if opts.get("m") is not None:
        m_values = [opts["m"]]
    else:
        m_values = opts.get("m_values") or list(range(2, n))
    for m in m_values:
        if not 1 < m < n:
            raise UsageError(f"m must satisfy 1 < m < n (got m={m}, n={n})")
    if opts.get("axis_values"):
        axis = [float(x) for x in opts["axis_values"]]
    else:
        step = float(opts["axis_step"])
        axis = default_axis(family, n, step)
        lo, hi = opts.get("axis_min"), opts.get("axis_max")
        if lo is not None or hi is not None:
            lo = axis[0] if lo is None else float(lo)
            hi = axis[-1] if hi is None else float(hi)
            axis = decimal_grid(lo, hi, step)
    try:
        grid = region_sweep(family, n, axis, m_values, opts["class"],
                            c=1.0 if opts.get("c") is None else float(opts["c"]))
    except InvalidSpec as exc:
        raise UsageError(str(exc)) from None
    if preset:
        grid.metadata["preset"] = preset
    grid.metadata["config"] = _jsonable(opts)
    if opts["format"] == "json":
        write_artifact(grid.to_json(), opts.get("output"))
    else:
        write_artifact(grid.to_csv(), opts.get("output"))
    _info(f"cells: {len(grid.cells)}  max |closed - oracle|: {grid.max_discrepancy:.3e}"
          f"  strictness mismatches: {grid.strictness_mismatches}", opts)
    return EXIT_OK


# -- strategies --------------------------------------------------------------

def _resolve_strategy(opts, table):
    """Return (strategy, params or None, (s, l)) from a file or from flags."""
    if opts.get("strategy"):
        try:
            with open(opts["strategy"]) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read strategy {opts['strategy']}: {exc}") from None
        body = doc.get("strategy", doc)
        try:
            strategy = MemoryOneStrategy.from_dict(body)
        except (KeyError, ValueError, TypeError) as exc:
            raise UsageError(f"malformed strategy: {exc}") from None
        if strategy.n != table.n:
            raise UsageError(f"strategy is for n={strategy.n}, game has n={table.n}")
        params = ZDParameters.from_dict(doc["params"]) if "params" in doc else None
        s = opts.get("s", params.s if params else None)
        l = opts.get("l", params.l if params else None)
        if s is None or l is None:
            raise UsageError("the relation (s, l) is unknown: pass --s and --l")
        if params is not None and opts.get("delta") is None:
            opts["delta"] = params.delta
        return strategy, params, (float(s), float(l))
    params = _construct_params(opts, table)
    return _build(table, params), params, (params.s, params.l)


def _build(table, params):
    try:
        return construct_zd(table, params)
    except InfeasibleParameters as exc:
        raise Infeasible(f"no feasible phi: {exc}") from None


def _construct_params(opts, table):
    n = table.n
    cls = opts.get("class")
    s = opts.get("s")
    l = opts.get("l")
    if cls == ZDClass.EQUALIZER.value:
        s = 0.0 if s is None else s
        if l is None:
            bounds = l_bounds(table, 0.0)
            l = 0.5 * (bounds.lower + bounds.upper)
    if s is None:
        raise UsageError("--s is required")
    if l is None:
        if cls is None:
            raise UsageError("pass --l or a --class preset")
        l = baseline_for(table, cls)
    delta = opts.get("delta")
    if delta is None:
        delta = opts["delta"] = DEFAULTS["construct"]["delta"]
    if not 0 < delta < 1:
        raise UsageError(f"delta must lie in (0, 1), got {delta}")
    p0 = opts.get("p0")
    if p0 is not None and not 0 <= p0 <= 1:
        raise UsageError(f"p0 must lie in [0, 1], got {p0}")
    if opts.get("phi") is not None and not opts["phi"] > 0:
        raise UsageError("phi must be positive")
    try:
        if not enforceable(table, s, l):
            raise Infeasible(f"not enforceable: (s={s}, l={l}) fails the baseline "
                             f"bounds or -1/({n}-1) < s < 1")
        params = resolve_parameters(table, s, l, delta, phi=opts.get("phi"),
                                    p0=p0, cls=cls if cls != "equalizer" else None)
    except (NotEnforceable, SlopeOutOfRange) as exc:
        raise Infeasible(f"not enforceable: {exc}") from None
    except InfeasibleParameters:
        raise Infeasible(f"no feasible phi at delta={delta}") from None
    return params


def cmd_construct(opts: dict[str, Any]) -> int:
    spec = resolve_game(opts)
    table = payoff_table(spec)
    params = _construct_params(opts, table)
    strategy = _build(table, params)
    interval = feasible_phi_interval(table, params.s, params.l, params.delta, params.p0)
    doc = {
        "game": spec.to_dict(),
        "class": opts.get("class"),
        "params": params.to_dict(),
        "phi_interval": list(interval) if interval else None,
        "strategy": strategy.to_dict(),
        "config": _jsonable(opts),
    }
    write_artifact(json.dumps(doc, indent=2, default=float), opts.get("output"))
    return EXIT_OK


def _opponent_file(path, n):
    try:
        with open(path) as fh:
            doc = json.load(fh)
        opps = [MemoryOneStrategy.from_dict(d) for d in doc]
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read opponents {path}: {exc}") from None
    if len(opps) != n - 1 or any(o.n != n for o in opps):
        raise UsageError(f"opponent file must hold {n - 1} strategies for n={n}")
    return opps


def cmd_verify(opts: dict[str, Any]) -> int:
    spec = resolve_game(opts)
    if spec.n > MAX_EXACT_PLAYERS:
        print(f"error: state space overflow: exact verification supports n <= "
              f"{MAX_EXACT_PLAYERS} (got n={spec.n}); use 'simulate' instead",
              file=sys.stderr)
        return EXIT_INTERNAL
    table = payoff_table(spec)
    strategy, params, (s, l) = _resolve_strategy(opts, table)
    delta = opts.get("delta")
    if delta is None or not 0 < delta < 1:
        raise UsageError("delta must be given and lie in (0, 1)")
    if opts.get("opponent_file"):
        profiles = [_opponent_file(opts["opponent_file"], spec.n)]
    else:
        count = int(opts["opponents"])
        if count < 1:
            raise UsageError("--opponents must be at least 1")
        profiles = [random_opponents(spec.n, int(opts["seed"]), k) for k in range(count)]
    samples = []
    for k, opps in enumerate(profiles):
        out = exact_discounted_payoffs(StrategyProfile.of(strategy, opps), table, delta)
        samples.append({"sample": k, "pi": out.pi.tolist(),
                        "pi_focal": out.pi_focal,
                        "pi_coplayers_avg": out.pi_coplayers_avg,
                        "residual": relation_residual(out, s, l)})
    worst = max(abs(x["residual"]) for x in samples)
    passed = worst < RESIDUAL_TOL
    report = {
        "game": spec.to_dict(),
        "s": s, "l": l, "delta": delta,
        "params": params.to_dict() if params else None,
        "method": "exact",
        "max_abs_residual": worst,
        "tolerance": RESIDUAL_TOL,
        "passed": passed,
        "samples": samples,
        "config": _jsonable(opts),
    }
    write_artifact(json.dumps(report, indent=2, default=float), opts.get("output"))
    _info(f"max |residual| = {worst:.3e} over {len(samples)} profile(s): "
          f"{'PASS' if passed else 'FAIL'}", opts)
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_simulate(opts: dict[str, Any]) -> int:
    episodes = opts.get("episodes")
    if episodes is None or int(episodes) < 1:
        raise UsageError(f"episodes must be at least 1 (got {episodes})")
    spec = resolve_game(opts)
    table = payoff_table(spec)
    strategy, params, (s, l) = _resolve_strategy(opts, table)
    delta = opts.get("delta")
    if delta is None or not 0 < delta < 1:
        raise UsageError("delta must be given and lie in (0, 1)")
    if opts.get("opponent_file"):
        opps = _opponent_file(opts["opponent_file"], spec.n)
    else:
        opps = random_opponents(spec.n, int(opts["opponent_seed"]))
    profile = StrategyProfile.of(strategy, opps)
    mc = simulate_monte_carlo(profile, table, delta, int(episodes), int(opts["seed"]))
    report = {"game": spec.to_dict(), "outcome": mc.to_dict(s, l),
              "config": _jsonable(opts)}
    if spec.n <= MAX_EXACT_PLAYERS:
        exact = exact_discounted_payoffs(profile, table, delta)
        z = (mc.pi - exact.pi) / np.where(mc.stderr > 0, mc.stderr, np.inf)
        report["exact"] = exact.to_dict(s, l)
        report["z_scores"] = z.tolist()
        report["within_4_stderr"] = bool(np.all(np.abs(mc.pi - exact.pi)
                                                <= 4 * mc.stderr + 1e-12))
    write_artifact(json.dumps(report, indent=2, default=float), opts.get("output"))
    return EXIT_OK


def cmd_check(opts: dict[str, Any]) -> int:
    spec = resolve_game(opts)
    table = payoff_table(spec)
    report = check_social_dilemma(table)
    doc = {"game": spec.to_dict(), "table": table.to_dict(),
           "assumptions": report.to_dict(), "ok": report.ok}
    if opts.get("output"):
        write_artifact(json.dumps(doc, indent=2), opts["output"])
    lines = [f"game: {spec.to_json()}",
             "z   a_z            b_z"]
    lines += [f"{z:<3d} {a:<14.10g} {b:.10g}" for z, (a, b)
              in enumerate(zip(table.a, table.b))]
    lines += [f"monotone payoffs:       {'pass' if report.monotone else 'FAIL'}",
              f"defector advantage:     {'pass' if report.defector_advantage else 'FAIL'}",
              f"cooperation favored:    {'pass' if report.cooperation_favored else 'FAIL'}"]
    for cond, z in report.violations:
        lines.append(f"  violation: {cond} at z={z}")
    print("\n".join(lines))
    return EXIT_OK if report.ok else EXIT_VERIFY


COMMANDS = {
    "region": cmd_region,
    "construct": cmd_construct,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "check": cmd_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        opts = resolve_options(args)
        return COMMANDS[args.command](opts)
    except (UsageError, InvalidSpec) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StateSpaceTooLarge as exc:
        print(f"error: state space overflow: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ZDError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
