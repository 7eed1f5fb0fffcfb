"""End-to-end run: ingest -> build -> metrics -> powerlaw -> keyplayers -> pricing.

Each year's artifacts go to ``<out>/<year>/``; cross-year files and the
manifest sit at the top of the output directory. Outputs depend only on the
input bytes and the :class:`RunConfig`, so re-runs are hash-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Mapping

from . import powerlaw
from .errors import ConfigError, EmptyNetworkError, NetlabError, StatisticalPreconditionError
from .ingest import DirectedTrade, TransactionRecord, filter_overnight, parse_transactions, to_directed_trades
from .keyplayers import Category, KeyPlayerClassification, classify, group_persistence, net_scores
from .metrics import (METRIC_COLUMNS, NodeMetrics, ccdf, degree_strength, market_summary,
                      metric_correlations, network_summary, node_metrics, top_k_concentration)
from .netbuild import YearNetwork, build_year_network, save_network, trade_years
from .pricing import (Direction, TradeFrame, boxplot_data, predatory_tests, pricing_table,
                      rate_structure_correlations, share_from_tests, write_pricing_table)
from ._stats import fmt_num

log = logging.getLogger(__name__)

SEED_ENV = "NETLAB_SEED"

# (file stem, group, direction) in report order, tables 5-8
PRICING_TABLES = (
    ("pricing_big_lending", Category.BIG, Direction.LENDING),
    ("pricing_loser_lending", Category.LOSER, Direction.LENDING),
    ("pricing_big_borrowing", Category.BIG, Direction.BORROWING),
    ("pricing_loser_borrowing", Category.LOSER, Direction.BORROWING),
)


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple[str, ...] = ()
    out_dir: str = "out"
    alpha: float = 0.5
    p_hi: float = 95.0
    p_lo: float = 5.0
    n_boot: int = 1000
    seed: int = 0
    years: tuple[int, ...] | None = None
    strict: bool = True
    reciprocity: str = "arc"
    weighted_rates: bool = False
    purge_market: bool = False
    min_provider_trades: int = 2

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError("alpha must be non-negative")
        if not 0 <= self.p_lo < self.p_hi <= 100:
            raise ConfigError("need 0 <= p_lo < p_hi <= 100")
        if self.n_boot < 100:
            raise ConfigError("n_boot must be at least 100")
        if self.reciprocity not in ("arc", "dyad"):
            raise ConfigError("reciprocity must be 'arc' or 'dyad'")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["inputs"] = list(self.inputs)
        d["years"] = None if self.years is None else list(self.years)
        return d

    def analysis_params(self) -> dict:
        """The settings that affect outputs (paths excluded)."""
        d = self.as_dict()
        del d["inputs"], d["out_dir"]
        return d


def _coerce(name: str, value: Any) -> Any:
    if name == "inputs":
        return (value,) if isinstance(value, str) else tuple(value)
    if name == "years" and value is not None:
        return tuple(int(y) for y in value)
    return value


def env_seed(env: Mapping[str, str] | None = None) -> int | None:
    """The integer in ``NETLAB_SEED``, or None when it is unset or empty."""
    env = os.environ if env is None else env
    raw = env.get(SEED_ENV)
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer") from None


def resolve_config(file_values: Mapping | None = None, overrides: Mapping | None = None,
                   env: Mapping[str, str] | None = None) -> RunConfig:
    """Merge settings with precedence flag > environment seed > file > default.

    ``overrides`` holds explicitly given CLI flags (None entries are ignored).
    """
    known = {f.name for f in fields(RunConfig)}
    merged: dict[str, Any] = dict(file_values or {})
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    seed = env_seed(env)
    if seed is not None:
        merged["seed"] = seed
    for k, v in (overrides or {}).items():
        if k not in known:
            raise ConfigError(f"unknown setting {k!r}")
        if v is not None:
            merged[k] = v
    try:
        return RunConfig(**{k: _coerce(k, v) for k, v in merged.items()})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config_file(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return data


class PipelineError(NetlabError):
    """A stage failure; carries the stage name and the exit code of the cause."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code if isinstance(cause, NetlabError) else 1
        super().__init__(f"stage {stage!r} failed: {cause}")


def run_stage(stage: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - any failure is reported with its stage
        raise PipelineError(stage, exc) from exc


# ---------------------------------------------------------------- ingest

def input_files(inputs: tuple[str, ...]) -> list[Path]:
    files: list[Path] = []
    for p in map(Path, inputs):
        if p.is_dir():
            files.extend(sorted(x for x in p.iterdir() if x.suffix == ".csv" and x.is_file()))
        elif p.is_file():
            files.append(p)
        else:
            raise FileNotFoundError(f"input {p} does not exist")
    if not files:
        raise NetlabError("no input files")
    return files


@dataclass
class Ingested:
    records: list[TransactionRecord]
    trades: list[DirectedTrade]
    report: dict = field(default_factory=dict)


def ingest(config: RunConfig) -> Ingested:
    records: list[TransactionRecord] = []
    per_file = []
    for path in input_files(config.inputs):
        data = path.read_bytes()
        res = parse_transactions(io.BytesIO(data), strict=config.strict)
        records.extend(res.records)
        per_file.append({
            "file": path.name,
            "sha256": hashlib.sha256(data).hexdigest(),
            "rows_read": res.rows_read,
            "records": len(res.records),
            "rejects": [asdict(r) for r in res.rejects],
        })
    if config.years is not None:
        keep = set(config.years)
        records = [r for r in records if r.trade_date.year in keep]
    on = filter_overnight(records)
    trades = to_directed_trades(on)
    if not trades:
        raise EmptyNetworkError("no overnight trades in the input")
    report = {
        "files": per_file,
        "records": len(records),
        "overnight": len(on),
        "reject_count": sum(len(f["rejects"]) for f in per_file),
    }
    return Ingested(records, trades, report)


# ---------------------------------------------------------------- writers

def dumps_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(obj: Any):
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _finite(x: float) -> float | None:
    return x if x == x and abs(x) != float("inf") else None


class Bundle:
    """Writes artifacts under ``root`` and remembers their relative paths."""

    def __init__(self, root: Path):
        self.root = root
        self.paths: list[str] = []

    def write(self, rel: str, text: str) -> None:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.paths.append(rel)

    def write_json(self, rel: str, obj: Any) -> None:
        self.write(rel, dumps_json(obj))

    def write_csv(self, rel: str, writer_fn: Callable[[io.StringIO], None]) -> None:
        buf = io.StringIO()
        writer_fn(buf)
        self.write(rel, buf.getvalue())

    def manifest(self, config: RunConfig, extra: dict) -> dict:
        arts = []
        for rel in sorted(set(self.paths)):
            data = (self.root / rel).read_bytes()
            arts.append({"path": rel, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        return {"config": config.analysis_params(), **extra, "artifacts": arts}


def write_metrics_csv(metrics: list[NodeMetrics], sink) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for m in metrics:
        writer.writerow([str(m.bank), m.indegree, m.outdegree, fmt_num(m.instrength),
                         fmt_num(m.outstrength), fmt_num(m.gen_in), fmt_num(m.gen_out)])


def write_classification_csv(c: KeyPlayerClassification, year: int, sink) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["year", "bank", "score", "category"])
    for bank in c.banks:
        writer.writerow([year, str(bank), fmt_num(c.scores[bank]), c.categories[bank].value])


def write_ccdf_csv(net: YearNetwork, sink) -> None:
    k_in, k_out, _, _ = degree_strength(net)
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["side", "degree", "ccdf"])
    for side, k in (("in", k_in), ("out", k_out)):
        pos = [int(v) for v in k if v > 0]
        for x, p in ccdf(pos):
            writer.writerow([side, int(x), fmt_num(p)])


# ---------------------------------------------------------------- per-year stages

def _powerlaw_record(samples: list[int], config: RunConfig) -> dict:
    try:
        fit = powerlaw.fit_and_test(samples, n_boot=config.n_boot, seed=config.seed)
    except StatisticalPreconditionError as exc:
        return {"skipped": str(exc), "n": len(samples)}
    d = fit.as_dict()
    d["ks_stat"] = _finite(d["ks_stat"])
    d["plausible_at_0.1"] = fit.p_value >= 0.1
    return d


def _skipping(fn: Callable, *args) -> Any:
    """Run an optional analysis; a failed precondition is recorded, not raised."""
    try:
        return fn(*args)
    except StatisticalPreconditionError as exc:
        return {"skipped": str(exc)}


def _pricing_tests(frame: TradeFrame, c: KeyPlayerClassification, config: RunConfig) -> dict:
    out: dict[str, Any] = {}
    try:
        tests = predatory_tests(frame, c, config.purge_market, config.min_provider_trades)
    except StatisticalPreconditionError as exc:
        out["predatory"] = {"skipped": str(exc)}
    else:
        try:
            share: Any = share_from_tests(tests)
        except StatisticalPreconditionError as exc:
            share = None
            out["predatory_skipped"] = str(exc)
        out["predatory"] = {"share": share, "purged": config.purge_market,
                            "providers": [t.as_dict() for t in tests]}
    out["rate_structure"] = {
        cat.value: _skipping(rate_structure_correlations, frame, c, cat)
        for cat in (Category.BIG, Category.LOSER)
    }
    out["boxplots"] = {
        name: {k.value: v for k, v in boxplot_data(frame, c, cat, direction).items()}
        for name, cat, direction in (("big_lending", Category.BIG, Direction.LENDING),
                                     ("loser_borrowing", Category.LOSER, Direction.BORROWING))
    }
    return out


def analyse_year(year: int, trades: list[DirectedTrade], config: RunConfig, bundle: Bundle
                 ) -> KeyPlayerClassification:
    d = str(year)
    net = run_stage("build", build_year_network, trades, year)
    bundle.write_csv(f"{d}/network.csv", lambda fh: save_network(net, fh))

    metrics = run_stage("metrics", node_metrics, net, config.alpha)
    summary = run_stage("metrics", network_summary, net, config.reciprocity)
    bundle.write_csv(f"{d}/metrics.csv", lambda fh: write_metrics_csv(metrics, fh))
    extra: dict[str, Any] = {"summary": summary}
    if net.n >= 3:
        extra["correlations"] = run_stage("metrics", metric_correlations, metrics)
    else:
        extra["correlations"] = {"skipped": "correlations need at least 3 nodes"}
    extra["top5_share"] = {side: run_stage("metrics", top_k_concentration, net, side, 5)
                           for side in ("lend", "borrow")}
    bundle.write_json(f"{d}/network_summary.json", extra)
    bundle.write_csv(f"{d}/degree_ccdf.csv", lambda fh: write_ccdf_csv(net, fh))

    for side, attr in (("in", "indegree"), ("out", "outdegree")):
        samples = [getattr(m, attr) for m in metrics if getattr(m, attr) > 0]
        rec = run_stage("powerlaw", _powerlaw_record, samples, config)
        bundle.write_json(f"{d}/powerlaw_{side}.json", rec)

    scores = run_stage("keyplayers", net_scores, metrics)
    c = run_stage("keyplayers", classify, scores, config.p_hi, config.p_lo)
    bundle.write_csv(f"{d}/classification.csv", lambda fh: write_classification_csv(c, year, fh))
    bundle.write_json(f"{d}/thresholds.json", {
        "year": year, "t1": c.t1, "t2": c.t2, "p_hi": c.p_hi, "p_lo": c.p_lo, "degenerate": c.degenerate,
        "alpha": config.alpha,
        "counts": {cat.value: len(c.members(cat)) for cat in Category},
    })

    frame = run_stage("pricing", TradeFrame, trades)
    for stem, group, direction in PRICING_TABLES:
        cols = run_stage("pricing", pricing_table, frame, c, group, direction, config.weighted_rates)
        bundle.write_csv(f"{d}/{stem}.csv", lambda fh: write_pricing_table(cols, fh))
    tests = run_stage("pricing", _pricing_tests, frame, c, config)
    bundle.write_json(f"{d}/pricing_tests.json", tests)
    return c


def persistence(classes: Mapping[int, KeyPlayerClassification]) -> list[dict]:
    years = sorted(classes)
    out = []
    for a, b in zip(years, years[1:]):
        if b != a + 1:
            continue
        row: dict[str, Any] = {"from": a, "to": b}
        for cat in (Category.BIG, Category.LOSER):
            members = classes[a].members(cat)
            row[cat.value] = (group_persistence(members, classes[b].members(cat))
                              if members else None)
        out.append(row)
    return out


def run_pipeline(config: RunConfig) -> dict:
    """Write the report bundle; returns the manifest."""
    root = Path(config.out_dir)
    data = run_stage("ingest", ingest, config)
    bundle = Bundle(root)
    root.mkdir(parents=True, exist_ok=True)
    bundle.write_json("ingest.json", data.report)
    bundle.write_json("market_summary.json",
                      {str(y): v for y, v in market_summary(data.records, data.trades).items()})

    by_year: dict[int, list[DirectedTrade]] = {}
    for t in data.trades:
        by_year.setdefault(t.year, []).append(t)
    classes = {}
    for year in trade_years(data.trades):
        log.info("analysing %d (%d trades)", year, len(by_year[year]))
        classes[year] = analyse_year(year, by_year[year], config, bundle)
    bundle.write_json("persistence.json", persistence(classes))

    manifest = bundle.manifest(config, {"inputs": [
        {"file": f["file"], "sha256": f["sha256"]} for f in data.report["files"]]})
    with open(root / "manifest.json", "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps_json(manifest))
    return manifest
