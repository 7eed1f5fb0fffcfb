"""``netlab`` command line.

Exit codes: 0 success, 2 parse error, 3 empty or degenerate network,
4 statistical precondition failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import io
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import powerlaw, pricing, synth
from .errors import ConfigError, NetlabError
from .keyplayers import Category, classify, net_scores
from .ingest import write_transactions
from .metrics import DEFAULT_ALPHA, market_summary, network_summary, node_metrics
from .netbuild import EDGE_COLUMNS, YearNetwork, build_networks, read_network, write_network
from .pipeline import (PRICING_TABLES, PipelineError, RunConfig, dumps_json, env_seed, ingest,
                       load_config_file,
                       resolve_config, run_pipeline, run_stage, write_classification_csv,
                       write_metrics_csv)
from .report import render_report

log = logging.getLogger("netlab")


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 so that 2 stays reserved for malformed input data
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(fn, *args) -> str:
    buf = io.StringIO()
    fn(*args, buf)
    return buf.getvalue()


def _is_edge_list(path: Path) -> bool:
    if path.is_dir():
        return False
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip().lower()
    return tuple(first.split(",")) == EDGE_COLUMNS


def _run_config(args) -> RunConfig:
    return resolve_config(overrides={
        "inputs": tuple(args.inputs),
        "strict": not getattr(args, "lenient", False),
        "years": tuple(args.year) if getattr(args, "year", None) else None,
    })


def _networks(args) -> dict[int, YearNetwork]:
    paths = [Path(p) for p in args.inputs]
    if paths and all(_is_edge_list(p) for p in paths):
        nets = {}
        for p in paths:
            net = run_stage("build", read_network, p)
            if net.year in nets:
                raise PipelineError("build", NetlabError(f"duplicate year {net.year} in edge lists"))
            nets[net.year] = net
        if args.year:
            nets = {y: n for y, n in nets.items() if y in set(args.year)}
    else:
        data = run_stage("ingest", ingest, _run_config(args))
        nets = run_stage("build", build_networks, data.trades)
    if not nets:
        raise PipelineError("build", NetlabError("no network for the selected years"))
    return nets


def _one_year(nets: dict, args):
    if len(nets) > 1:
        raise ConfigError(f"input spans years {sorted(nets)}; pick one with --year")
    return next(iter(nets.values()))


def _one_year_trades(args):
    data = run_stage("ingest", ingest, _run_config(args))
    years = sorted({t.year for t in data.trades})
    if len(years) > 1:
        raise ConfigError(f"input spans years {years}; pick one with --year")
    return data.trades


# ---------------------------------------------------------------- commands

def cmd_summarize(args) -> int:
    data = run_stage("ingest", ingest, _run_config(args))
    summary = run_stage("summarize", market_summary, data.records, data.trades)
    doc = {"ingest": data.report, "years": {str(y): v for y, v in summary.items()}}
    _emit(dumps_json(doc), args.out)
    return 0


def cmd_build_net(args) -> int:
    nets = _networks(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for year, net in sorted(nets.items()):
        write_network(net, out / f"network_{year}.csv")
        log.info("wrote %s (%d nodes, %d arcs)", out / f"network_{year}.csv", net.n, net.arc_count)
    return 0


def cmd_metrics(args) -> int:
    net = _one_year(_networks(args), args)
    metrics = run_stage("metrics", node_metrics, net, args.alpha)
    _emit(_csv_text(write_metrics_csv, metrics), args.out)
    if args.summary:
        s = run_stage("metrics", network_summary, net, args.reciprocity)
        _emit(dumps_json(s), args.summary)
    return 0


def cmd_powerlaw(args) -> int:
    net = _one_year(_networks(args), args)
    metrics = run_stage("metrics", node_metrics, net, DEFAULT_ALPHA)
    attr = "indegree" if args.side == "in" else "outdegree"
    samples = [getattr(m, attr) for m in metrics if getattr(m, attr) > 0]
    seed = _seed(args.seed, 0)
    fit = run_stage("powerlaw", powerlaw.fit_and_test, samples, args.n_boot, seed, args.estimator)
    doc = fit.as_dict()
    doc["side"] = args.side
    doc["plausible_at_0.1"] = fit.p_value >= 0.1
    _emit(dumps_json(doc), args.out)
    return 0


def cmd_keyplayers(args) -> int:
    net = _one_year(_networks(args), args)
    metrics = run_stage("metrics", node_metrics, net, args.alpha)
    c = run_stage("keyplayers", classify, net_scores(metrics), args.p_hi, args.p_lo)
    _emit(_csv_text(write_classification_csv, c, net.year), args.out)
    if args.roles:
        with open(args.roles, encoding="utf-8") as fh:
            roles = synth.read_roles(fh)
        planted = {r: {b for b, v in roles.items() if v is r} for r in synth.PlantedRole}
        doc = {
            "t1": c.t1, "t2": c.t2,
            "providers_recovered": len(planted[synth.PlantedRole.PROVIDER] & c.members(Category.BIG)),
            "providers_planted": len(planted[synth.PlantedRole.PROVIDER]),
            "losers_recovered": len(planted[synth.PlantedRole.LOSER] & c.members(Category.LOSER)),
            "losers_planted": len(planted[synth.PlantedRole.LOSER]),
        }
        sys.stderr.write(dumps_json(doc))
    return 0


def cmd_pricing(args) -> int:
    trades = _one_year_trades(args)
    nets = run_stage("build", build_networks, trades)
    net = _one_year(nets, args)
    metrics = run_stage("metrics", node_metrics, net, args.alpha)
    c = run_stage("keyplayers", classify, net_scores(metrics), args.p_hi, args.p_lo)
    frame = run_stage("pricing", pricing.TradeFrame, trades)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for stem, group, direction in PRICING_TABLES:
        cols = run_stage("pricing", pricing.pricing_table, frame, c, group, direction, args.weighted)
        _emit(_csv_text(pricing.write_pricing_table, cols), str(out / f"{stem}.csv"))
    tests = run_stage("pricing", pricing.predatory_tests, frame, c, args.purge)
    doc = {"providers": [t.as_dict() for t in tests],
           "share": run_stage("pricing", pricing.share_from_tests, tests), "purged": args.purge}
    _emit(dumps_json(doc), str(out / "pricing_tests.json"))
    return 0


def _seed(flag: int | None, fallback: int | None) -> int | None:
    # flag > NETLAB_SEED > config/default
    if flag is not None:
        return flag
    env = env_seed()
    return fallback if env is None else env


def cmd_synth(args) -> int:
    seed = _seed(args.seed, None)
    if args.calibrate:
        if args.calibrate == "2006":
            target = synth.CalibrationTarget.year_2006()
        else:
            target = synth.CalibrationTarget(**load_config_file(args.calibrate))
        base = synth.load_config(args.config) if args.config else None
        cal = run_stage("synth", synth.calibrate_to_paper, target,
                        seed=0 if seed is None else seed, base=base)
        cfg = cal.config
        log.info("calibrated in %d runs: %s", cal.iterations, cal.measured)
    else:
        cfg = synth.load_config(args.config) if args.config else synth.SynthConfig()
        if seed is not None:
            cfg = synth.SynthConfig.from_dict({**cfg.as_dict(), "seed": seed})
    market = run_stage("synth", synth.generate_market, cfg)
    _emit(_csv_text(write_transactions, market.records), args.out)
    if args.roles:
        _emit(_csv_text(synth.write_roles, market.roles), args.roles)
    if args.config_out:
        _emit(_csv_text(synth.write_config, cfg), args.config_out)
    return 0


def cmd_report(args) -> int:
    paths = run_stage("report", render_report, args.bundle, args.out)
    log.info("wrote %d report files to %s", len(paths), args.out)
    return 0


def cmd_run(args) -> int:
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {
        "inputs": tuple(args.inputs) if args.inputs else None,
        "out_dir": args.out,
        "alpha": args.alpha,
        "p_hi": args.p_hi,
        "p_lo": args.p_lo,
        "n_boot": args.n_boot,
        "seed": args.seed,
        "years": tuple(args.year) if args.year else None,
        "strict": False if args.lenient else None,
        "reciprocity": args.reciprocity,
        "weighted_rates": True if args.weighted else None,
        "purge_market": True if args.purge else None,
    }
    config = resolve_config(file_values, overrides)
    run_pipeline(config)
    if args.report:
        run_stage("report", render_report, config.out_dir, Path(config.out_dir) / "report")
    return 0


# ---------------------------------------------------------------- parser

def _add_inputs(p, required: bool = True) -> None:
    p.add_argument("--in", dest="inputs", nargs="+", required=required, metavar="PATH",
                   help="transaction CSV files or directories (edge lists where accepted)")
    p.add_argument("--year", type=int, action="append", help="restrict to this year (repeatable)")
    p.add_argument("--lenient", action="store_true", help="skip malformed rows instead of failing")


def _add_classify(p) -> None:
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--p-hi", type=float, default=95.0)
    p.add_argument("--p-lo", type=float, default=5.0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netlab", description="Interbank network analysis pipeline.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("summarize", help="per-year descriptive statistics (JSON)")
    _add_inputs(p)
    p.add_argument("--out", help="output JSON (default stdout)")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("build-net", help="yearly edge lists")
    _add_inputs(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_build_net)

    p = sub.add_parser("metrics", help="node metrics CSV for one year")
    _add_inputs(p)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--reciprocity", choices=("arc", "dyad"), default="arc")
    p.add_argument("--out", help="metrics CSV (default stdout)")
    p.add_argument("--summary", help="also write the network summary JSON here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("powerlaw", help="degree power-law fit with bootstrap p-value")
    _add_inputs(p)
    p.add_argument("--side", choices=("in", "out"), default="in")
    p.add_argument("--n-boot", type=int, default=powerlaw.DEFAULT_N_BOOT)
    p.add_argument("--seed", type=int, help="bootstrap seed (default NETLAB_SEED or 0)")
    p.add_argument("--estimator", choices=("discrete", "continuous"), default="discrete")
    p.add_argument("--out", help="output JSON (default stdout)")
    p.set_defaults(func=cmd_powerlaw)

    p = sub.add_parser("keyplayers", help="net scores and Big/Lender/Borr/Loser classification")
    _add_inputs(p)
    _add_classify(p)
    p.add_argument("--roles", help="planted role map; prints recovery counts to stderr")
    p.add_argument("--out", help="classification CSV (default stdout)")
    p.set_defaults(func=cmd_keyplayers)

    p = sub.add_parser("pricing", help="pricing tables and predatory-pricing tests for one year")
    _add_inputs(p)
    _add_classify(p)
    p.add_argument("--weighted", action="store_true", help="volume-weighted rate means")
    p.add_argument("--purge", action="store_true", help="drop the provider's trades from the market sample")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pricing)

    p = sub.add_parser("synth", help="generate a synthetic market")
    p.add_argument("--config", help="SynthConfig JSON")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--calibrate", metavar="TARGET",
                   help="'2006' or a JSON target {n_banks, density, on_trades, mean_amount}")
    p.add_argument("--out", required=True, help="transaction CSV")
    p.add_argument("--roles", help="write the planted role map here")
    p.add_argument("--config-out", help="write the config actually used here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="render a bundle into table CSVs and a digest")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="full pipeline into a bundle directory")
    p.add_argument("--config", help="RunConfig JSON; flags override it")
    p.add_argument("--in", dest="inputs", nargs="+", metavar="PATH")
    p.add_argument("--out", help="output directory")
    p.add_argument("--alpha", type=float)
    p.add_argument("--p-hi", type=float)
    p.add_argument("--p-lo", type=float)
    p.add_argument("--n-boot", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--year", type=int, action="append")
    p.add_argument("--lenient", action="store_true")
    p.add_argument("--reciprocity", choices=("arc", "dyad"))
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--purge", action="store_true")
    p.add_argument("--report", action="store_true", help="also render <out>/report")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="netlab: %(message)s")
    try:
        return args.func(args)
    except PipelineError as exc:
        sys.stderr.write(f"netlab: error in stage {exc.stage}: {exc.cause}\n")
        return exc.exit_code
    except NetlabError as exc:
        sys.stderr.write(f"netlab: error: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"netlab: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
