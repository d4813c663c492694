"""Command-line entry point: simulate / fit / predict / backtest / verify.

Exit codes: 0 success, 1 usage or validation error, 2 numerical or data
error, 3 verification failure.  Every stochastic subcommand requires a seed
and is bit-reproducible given its flags, independent of worker threads
(``BGBM_THREADS`` caps parallelism).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys

from . import estimate, forecast, paths, plots, trading, verify
from .errors import (
    DataError,
    DegenerateDataError,
    DomainError,
    InputShapeError,
    InsufficientDataError,
    NumericalError,
)
from .params import ModelParams


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # accept scientific notation in negative flag values, e.g. --mu-a -5e-4
        self._negative_number_matcher = re.compile(r"^-\d*\.?\d+([eE][-+]?\d+)?$")

    def error(self, message):
        raise UsageError(message)


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu-a", type=float, required=True, help="drift of the log ask")
    p.add_argument("--mu-b", type=float, required=True, help="drift of the log bid")
    p.add_argument("--sigma-a", type=float, required=True, help="volatility of the log ask")
    p.add_argument("--sigma-b", type=float, required=True, help="volatility of the log bid")
    p.add_argument("--delta", type=float, required=True, help="half tick in log price")
    p.add_argument("--a0", type=float, default=None, help="initial ask (default: one tick above 1)")
    p.add_argument("--b0", type=float, default=None, help="initial bid (default: one tick below 1)")


def _params_from(args) -> ModelParams:
    return ModelParams(args.mu_a, args.mu_b, args.sigma_a, args.sigma_b, args.delta)


def _initials(args, params: ModelParams) -> tuple[float, float]:
    a0 = args.a0 if args.a0 is not None else math.exp(params.delta)
    b0 = args.b0 if args.b0 is not None else math.exp(-params.delta)
    return a0, b0


def _ensure_outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _emit(payload: dict, args, default_name: str) -> None:
    if getattr(args, "format", "json") == "csv":
        keys, vals = [], []
        for k, v in payload.items():
            if isinstance(v, (dict, list)):
                continue
            keys.append(k)
            vals.append("" if v is None else format(v, ".17g") if isinstance(v, float) else str(v))
        text = ",".join(keys) + "\n" + ",".join(vals) + "\n"
        suffix = ".csv"
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        suffix = ".json"
    if getattr(args, "outdir", None):
        out = os.path.join(_ensure_outdir(args.outdir), default_name + suffix)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(out)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    params = _params_from(args)
    a0, b0 = _initials(args, params)
    outdir = _ensure_outdir(args.outdir)
    if args.exact:
        if args.trades is None:
            raise UsageError("--exact requires --trades")
        seq = trading.exact_trade_sequence(params, a0, b0, args.trades, args.seed)
        out = os.path.join(outdir, "trades.csv")
        seq.to_csv(out)
    else:
        if args.horizon is None:
            raise UsageError("--grid requires --horizon")
        step = args.grid_step
        if step is None:
            step = 1e-4 * params.mean_intertrade
        grid = paths.make_grid(args.horizon, step)
        path = paths.build_bouncing_path(params, a0, b0, grid, args.seed)
        out = os.path.join(outdir, "path.csv")
        path.to_csv(out)
    print(out)
    return 0


def cmd_fit(args) -> int:
    seq = trading.TradeSequence.from_csv(args.input)
    result = estimate.fit_sequence(
        seq,
        use_first=args.use_first,
        min_trades=args.min_trades,
        with_stderr=len(seq) >= 101,
    )
    _emit(result.to_dict(), args, "estimate")
    return 0


def cmd_predict(args) -> int:
    seq = trading.TradeSequence.from_csv(args.input)
    result = estimate.fit_sequence(seq, use_first=args.use_first, min_trades=args.min_trades)
    pred = forecast.predict(result, args.horizon, args.band_sigmas)
    p0 = float(seq.p[-1])
    payload = {
        "horizon_s": args.horizon,
        "point": pred.point,
        "lower": pred.lower,
        "upper": pred.upper,
        "p0": p0,
        "predicted_price": p0 * math.exp(pred.point),
        "band_width_sigmas": args.band_sigmas,
    }
    _emit(payload, args, "prediction")
    return 0


def cmd_backtest(args) -> int:
    data = forecast.TickData.read_csv(args.input)
    cfg = forecast.ForecastConfig(
        window_len_s=args.window_s,
        lead_time_s=args.lead_s,
        band_width_sigmas=args.band_sigmas,
        min_trades=args.min_trades,
    )
    outdir = _ensure_outdir(args.outdir)
    records, summary = forecast.backtest(data, cfg)
    trace = forecast.delta_trace(data, cfg)
    forecast.write_records_csv(records, os.path.join(outdir, "records.csv"))
    with open(os.path.join(outdir, "summary.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    forecast.write_delta_trace_csv(trace, os.path.join(outdir, "delta_trace.csv"))
    written = ["records.csv", "summary.json", "delta_trace.csv"]
    if args.figures:
        plots.render_backtest_figure(records, os.path.join(outdir, "backtest.png"))
        plots.render_delta_trace_figure(trace, os.path.join(outdir, "delta_trace.png"))
        written += ["backtest.png", "delta_trace.png"]
    for name in written:
        print(os.path.join(outdir, name))
    return 0


def cmd_verify(args) -> int:
    if args.suite == "all":
        report = verify.run_all(args.seed, reps=args.reps, delta=args.delta)
    else:
        report = verify.run_suite(args.suite, args.seed, reps=args.reps, delta=args.delta)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.outdir:
        out = os.path.join(_ensure_outdir(args.outdir), "verify_report.json")
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0 if report["pass"] else 3


def build_parser() -> _Parser:
    parser = _Parser(prog="bgbm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate trades (exact) or a full grid path")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--exact", action="store_true", help="emit trades via the exact sampler")
    mode.add_argument("--grid", action="store_true", help="emit a full reflected path")
    _add_param_flags(p)
    p.add_argument("--trades", type=int, default=None, help="number of trades (--exact)")
    p.add_argument("--horizon", type=float, default=None, help="time horizon (--grid)")
    p.add_argument("--grid-step", type=float, default=None,
                   help="grid step (default: 1e-4 of the mean inter-trade time)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit the five parameters from a trades CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--use-first", action="store_true",
                   help="keep the first (level, time) pair instead of dropping it")
    p.add_argument("--min-trades", type=int, default=estimate.MIN_FIT_TRADES)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--outdir", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="fit a trades CSV and predict a log-return")
    p.add_argument("--input", required=True)
    p.add_argument("--horizon", type=float, required=True, help="prediction horizon in seconds")
    p.add_argument("--band-sigmas", type=float, default=3.0)
    p.add_argument("--use-first", action="store_true")
    p.add_argument("--min-trades", type=int, default=estimate.MIN_FIT_TRADES)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--outdir", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("backtest", help="sliding-window back-test over tick data")
    p.add_argument("--input", required=True)
    p.add_argument("--window-s", type=float, default=600.0)
    p.add_argument("--lead-s", type=float, default=60.0)
    p.add_argument("--band-sigmas", type=float, default=3.0)
    p.add_argument("--min-trades", type=int, default=10)
    p.add_argument("--outdir", required=True)
    fig = p.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures", action="store_true", default=True,
                     help="render report figures (default)")
    fig.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("verify", help="run a verification suite and report JSON")
    p.add_argument("--suite", required=True,
                   choices=sorted(verify.SUITES) + ["all"],
                   help="suite name, or 'all'")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reps", type=int, default=None, help="override replication count")
    p.add_argument("--delta", type=float, default=None, help="override the tick size where applicable")
    p.add_argument("--outdir", default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, InputShapeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, DataError, InsufficientDataError, DegenerateDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
