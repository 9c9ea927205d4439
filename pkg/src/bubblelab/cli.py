"""Command-line entry point.

Subcommands: simulate, sweep, classify, table2, plotdata.  All outputs
are CSV/JSON; nothing is plotted directly, the files are laid out for
external plotting tools.

Exit codes: 0 success, 2 configuration error, 3 ingestion error,
4 computation error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .classify import classify_series
from .errors import (
    BubbleLabError,
    InvalidConfig,
    MalformedRow,
    NonContiguousTime,
    OutOfRange,
)
from .growth import table2, table2_csv
from .market import AgentSpec, SimConfig, run
from .regression import MODEL_PRICE, MODEL_RETURN
from .series import (
    MIN_WINDOW,
    ExperimentParams,
    Window,
    discrete_returns,
    excess_series,
    load_csv,
)
from .sweep import grid_summary, grid_to_csv, sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_COMPUTE = 4

_PARAM_KEYS = {
    "r": ("r", float),
    "D": ("dividend", float),
    "dividend": ("dividend", float),
    "H": ("n_traders", int),
    "n_traders": ("n_traders", int),
    "p_min": ("p_min", float),
    "p_max": ("p_max", float),
}

# Converters for values read from a key=value config file; flags given on
# the command line always win over file values.
_CONFIG_TYPES = {
    "outdir": str,
    "input": str,
    "seed": int,
    "min_window": int,
    "theta": float,
    "confidence": str,
    "params": str,
    "horizon": int,
    "agents": str,
    "noise_sigma": float,
    "mistrade_prob": float,
    "initial_prices": str,
    "steps": int,
    "a1": float,
    "a2": float,
    "b2": float,
    "window": str,
}


def parse_params(text: str) -> ExperimentParams:
    """Build market constants from `r=..,D=..,H=..` style overrides."""
    if not text:
        return ExperimentParams()
    kwargs = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise InvalidConfig(f"malformed parameter override {chunk!r}")
        key, _, val = chunk.partition("=")
        key = key.strip()
        if key not in _PARAM_KEYS:
            raise InvalidConfig(f"unknown parameter {key!r}")
        field, conv = _PARAM_KEYS[key]
        try:
            kwargs[field] = conv(val.strip())
        except ValueError:
            raise InvalidConfig(f"bad value for parameter {key!r}: {val!r}") from None
    return ExperimentParams(**kwargs)


def _build_agents(preset: str, params: ExperimentParams) -> tuple:
    """Agent presets for simulate; `bubble` mixes price-anchoring traders
    with one naive follower."""
    h = params.n_traders
    if preset == "fundamentalist":
        return tuple(AgentSpec.fundamentalist() for _ in range(h))
    if preset == "rational":
        return tuple(
            AgentSpec.rational_bubble(rate=params.r, scale=5.0, anchor=params.fundamental)
            for _ in range(h)
        )
    if preset == "bubble":
        specs = [AgentSpec.price_anchor(a=math.log(1.09), b=1e-4) for _ in range(h - 1)]
        specs.append(AgentSpec.naive())
        return tuple(specs)
    if preset == "noise":
        specs = [AgentSpec.fundamentalist() for _ in range(h - 1)]
        specs.append(AgentSpec.noise(sigma=5.0))
        return tuple(specs)
    raise InvalidConfig(f"unknown agent preset {preset!r}")


def _parse_pair(text: str, what: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise InvalidConfig(f"{what} needs two comma-separated values, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise InvalidConfig(f"bad {what}: {text!r}") from None


def _outdir(args) -> Path:
    path = Path(args.outdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    params = parse_params(args.params)
    agents = _build_agents(args.agents, params)
    if args.initial_prices:
        initial = _parse_pair(args.initial_prices, "initial prices")
    elif args.agents == "bubble":
        initial = (66.0, 72.0)  # ignite the feedback rules above the fundamental
    else:
        initial = (params.fundamental, params.fundamental)
    config = SimConfig(
        params=params,
        agents=agents,
        horizon=args.horizon,
        seed=args.seed,
        return_noise_sigma=args.noise_sigma,
        mistrade_prob=args.mistrade_prob,
        initial_prices=initial,
    )
    result = run(config)
    outdir = _outdir(args)
    result.write_csv(outdir / "simulation.csv")
    print(f"wrote {outdir / 'simulation.csv'}")
    _write(outdir / "simulation.json", result.to_json() + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    params = parse_params(args.params)
    series, _ = load_csv(args.input, params)
    excess = excess_series(series, params)
    one_sided = args.confidence == "one-sided"
    outdir = _outdir(args)
    summary = {"input": str(args.input), "t0": series.t0, "n": len(series)}
    for model, filename in ((MODEL_PRICE, "price_grid.csv"), (MODEL_RETURN, "return_grid.csv")):
        grid = sweep(excess, model, min_window=args.min_window, one_sided=one_sided)
        _write(outdir / filename, grid_to_csv(grid))
        summary[model] = grid_summary(grid)
    _write(outdir / "sweep_summary.json", json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_classify(args) -> int:
    params = parse_params(args.params)
    series, _ = load_csv(args.input, params)
    window = None
    if args.window:
        parts = [p.strip() for p in args.window.split(",")]
        if len(parts) != 2:
            raise InvalidConfig(f"--window needs start,end, got {args.window!r}")
        try:
            window = Window(int(parts[0]), int(parts[1]))
        except ValueError:
            raise InvalidConfig(f"bad --window value {args.window!r}") from None
    if window is not None and not (
        series.t0 <= window.start and window.end <= series.t_end
    ):
        raise InvalidConfig(
            f"--window [{window.start}, {window.end}] outside series range "
            f"[{series.t0}, {series.t_end}]"
        )
    verdict = classify_series(
        series,
        params,
        theta=args.theta,
        min_window=args.min_window,
        one_sided=args.confidence == "one-sided",
        window=window,
    )
    outdir = _outdir(args)
    _write(outdir / "verdict.json", verdict.to_json() + "\n")
    print(verdict.summary_line())
    return EXIT_OK


def cmd_table2(args) -> int:
    if args.steps < 0:
        raise InvalidConfig(f"steps must be non-negative, got {args.steps}")
    rows = table2(steps=args.steps, a1=args.a1, a2=args.a2, b2=args.b2)
    outdir = _outdir(args)
    _write(outdir / "table2.csv", table2_csv(rows))
    return EXIT_OK


def cmd_plotdata(args) -> int:
    params = parse_params(args.params)
    series, forecasts = load_csv(args.input, params)
    outdir = _outdir(args)

    lines = ["t,price"]
    for i, v in enumerate(series.values):
        lines.append(f"{series.t0 + i},{v:.17g}")
    _write(outdir / "plot_prices.csv", "\n".join(lines) + "\n")

    if forecasts:
        header = "t," + ",".join(f"h{h + 1}" for h in range(len(forecasts)))
        lines = [header]
        for i in range(len(series)):
            vals = ",".join(f"{col[i]:.17g}" for col in forecasts)
            lines.append(f"{series.t0 + i},{vals}")
        _write(outdir / "plot_forecasts.csv", "\n".join(lines) + "\n")
    else:
        print("input has no forecast columns; plot_forecasts.csv skipped")

    rets = discrete_returns(series)
    lines = ["t,return_current,return_next,diagonal"]
    for i in range(len(rets) - 1):
        r_cur, r_nxt = rets.values[i], rets.values[i + 1]
        lines.append(f"{rets.t0 + i},{r_cur:.17g},{r_nxt:.17g},{r_cur:.17g}")
    _write(outdir / "plot_returns.csv", "\n".join(lines) + "\n")

    excess = excess_series(series, params)
    one_sided = args.confidence == "one-sided"
    for model, filename in (
        (MODEL_PRICE, "plot_price_grid.csv"),
        (MODEL_RETURN, "plot_return_grid.csv"),
    ):
        grid = sweep(excess, model, min_window=args.min_window, one_sided=one_sided)
        _write(outdir / filename, grid_to_csv(grid))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly and dispatch
# ---------------------------------------------------------------------------


def build_parser():
    """Returns the top-level parser plus the per-subcommand parsers
    (config-file defaults must be set on the subparsers directly:
    argparse subparsers re-parse into a fresh namespace)."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--outdir",
        default=os.environ.get("BUBBLELAB_OUTDIR", "."),
        help="output directory (default: $BUBBLELAB_OUTDIR or the current directory)",
    )
    common.add_argument("--config", default=None, help="key=value defaults file")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument(
        "--min-window", type=int, default=MIN_WINDOW, dest="min_window",
        help="smallest calibration window in price points",
    )
    common.add_argument("--theta", type=float, default=0.2,
                        help="significant-fraction threshold for the anchoring labels")
    common.add_argument(
        "--confidence", choices=("two-sided", "one-sided"), default="two-sided",
        help="interpretation of the 95%% lower confidence bounds",
    )
    common.add_argument("--params", default="",
                        help="market constant overrides, e.g. r=0.05,D=3,H=6")

    parser = argparse.ArgumentParser(
        prog="bubblelab",
        description="Laboratory asset-market simulator and bubble calibration toolkit",
    )
    parser.add_argument("--version", action="version", version=f"bubblelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    p = sub.add_parser("simulate", parents=[common],
                       help="run the forecasting market and write its series")
    p.add_argument("--horizon", type=int, default=50, help="number of simulated periods")
    p.add_argument("--agents", default="bubble",
                   choices=("fundamentalist", "rational", "bubble", "noise"),
                   help="composition of the trader group")
    p.add_argument("--noise-sigma", type=float, default=0.0, dest="noise_sigma",
                   help="std-dev of Gaussian noise on each log-forecast")
    p.add_argument("--mistrade-prob", type=float, default=0.0, dest="mistrade_prob",
                   help="per-agent-period probability of a misplaced decimal")
    p.add_argument("--initial-prices", default="", dest="initial_prices",
                   help="two seed prices, e.g. 66,72")
    p.set_defaults(func=cmd_simulate)
    commands["simulate"] = p

    p = sub.add_parser("sweep", parents=[common],
                       help="fit both feedback models on every window of a series")
    p.add_argument("--input", required=True, help="price series CSV")
    p.set_defaults(func=cmd_sweep)
    commands["sweep"] = p

    p = sub.add_parser("classify", parents=[common],
                       help="label a series per the bubble taxonomy")
    p.add_argument("--input", required=True, help="price series CSV")
    p.add_argument("--window", default="",
                   help="explicit start,end bubble window (skips detection)")
    p.set_defaults(func=cmd_classify)
    commands["classify"] = p

    p = sub.add_parser("table2", parents=[common],
                       help="emit the exponential-vs-feedback comparison table")
    p.add_argument("--steps", type=int, default=23, help="last time step of the table")
    p.add_argument("--a1", type=float, default=math.log(1.1),
                   help="log-growth of the exponential column")
    p.add_argument("--a2", type=float, default=math.log(1.09),
                   help="base log-growth of the feedback column")
    p.add_argument("--b2", type=float, default=1e-4,
                   help="feedback coefficient of the feedback column")
    p.set_defaults(func=cmd_table2)
    commands["table2"] = p

    p = sub.add_parser("plotdata", parents=[common],
                       help="emit plot-ready CSVs for a series")
    p.add_argument("--input", required=True, help="price series CSV")
    p.set_defaults(func=cmd_plotdata)
    commands["plotdata"] = p

    return parser, commands


def _apply_config_file(commands, argv) -> None:
    """Load key=value defaults from --config; explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    defaults = {}
    with open(known.config, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidConfig(f"{known.config}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_TYPES:
                raise InvalidConfig(f"{known.config}:{lineno}: unknown key {key!r}")
            try:
                defaults[key] = _CONFIG_TYPES[key](val.strip())
            except ValueError:
                raise InvalidConfig(
                    f"{known.config}:{lineno}: bad value for {key!r}"
                ) from None
    for sub in commands.values():
        known_dests = {action.dest for action in sub._actions}
        relevant = {k: v for k, v in defaults.items() if k in known_dests}
        if relevant:
            sub.set_defaults(**relevant)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, commands = build_parser()
    try:
        _apply_config_file(commands, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    except (InvalidConfig, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, InvalidConfig) else EXIT_INGEST

    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MalformedRow, NonContiguousTime, OutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (BubbleLabError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
