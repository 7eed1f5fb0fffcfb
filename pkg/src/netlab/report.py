"""Render a pipeline bundle into table-layout CSVs and a plain-text digest.

Every number is read from a bundle artifact; rendering only rounds (3
decimals for rates, shares and amounts) and arranges.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable

from .errors import NetlabError
from .pipeline import PRICING_TABLES

TABLE_FILES = {
    "table1_banks_trades.csv": "Table 1",
    "table2_volumes.csv": "Table 2",
    "table3_per_bank.csv": "Table 3",
    "table4_correlations.csv": "Table 4",
    "table5_big_lending.csv": "Table 5",
    "table6_loser_lending.csv": "Table 6",
    "table7_big_borrowing.csv": "Table 7",
    "table8_loser_borrowing.csv": "Table 8",
}
# Tables 5-8 follow the PRICING_TABLES order
_PRICING_OUT = dict(zip((stem for stem, _, _ in PRICING_TABLES), list(TABLE_FILES)[4:]))


def r3(x: Any) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.3f}"


def _load(path: Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise NetlabError(f"bundle artifact missing: {path}") from None


def bundle_years(bundle: Path) -> list[int]:
    return sorted(int(p.name) for p in bundle.iterdir() if p.is_dir() and p.name.isdigit())


def _csv(rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def table1(market: dict) -> str:
    rows = [["year", "n_banks", "n_trades", "n_on_trades", "on_share"]]
    for y in sorted(market, key=int):
        m = market[y]
        rows.append([y, m["n_banks"], m["n_trades"], m["n_on_trades"], r3(m["on_share"])])
    return _csv(rows)


def table2(market: dict) -> str:
    years = sorted(market, key=int)
    rows = [["stat"] + years]
    for label, key in (("mean", "mean"), ("median", "median"), ("std", "std"),
                       ("min", "min"), ("max", "max"), ("sum", "total")):
        rows.append([label] + [r3((market[y]["volume"] or {}).get(key)) for y in years])
    return _csv(rows)


def table3(market: dict) -> str:
    rows = [["year", "lend_share", "lend_mean", "lend_std",
             "borrow_share", "borrow_mean", "borrow_std"]]
    for y in sorted(market, key=int):
        lend = market[y]["lenders"] or {}
        borr = market[y]["borrowers"] or {}
        rows.append([y] + [r3(lend.get(k)) for k in ("share", "mean", "std")]
                    + [r3(borr.get(k)) for k in ("share", "mean", "std")])
    return _csv(rows)


def table4(bundle: Path, years: list[int]) -> str:
    rows = [["year", "side", "pair", "r", "p_value"]]
    for y in years:
        corr = _load(bundle / str(y) / "network_summary.json")["correlations"]
        if "skipped" in corr:
            continue
        for side in ("in", "out"):
            for pair, c in corr[side].items():
                rows.append([y, side, pair, r3(c["r"]), r3(c["p_value"])])
    return _csv(rows)


def pricing_block(path: Path, year: int) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        table = list(csv.reader(fh))
    header = table[0]
    out = [[f"{year}"] + [f"market {year}" if h == "market" else h for h in header[1:]]]
    for row in table[1:]:
        label, cells = row[0], row[1:]
        if label == "n_trades":
            out.append([label] + cells)
        else:
            out.append([label] + [r3(c) for c in cells])
    return out


def pricing_table_csv(bundle: Path, years: list[int], stem: str) -> str:
    rows: list[list[str]] = []
    for y in years:
        if rows:
            rows.append([])
        rows.extend(pricing_block(bundle / str(y) / f"{stem}.csv", y))
    return _csv(rows)


def _fit_line(side: str, fit: dict) -> str:
    if "skipped" in fit:
        return f"  power law ({side}degree): skipped ({fit['skipped']})"
    verdict = "plausible" if fit["plausible_at_0.1"] else "rejected at 0.1"
    return (f"  power law ({side}degree): gamma={r3(fit['gamma'])} xmin={fit['xmin']} "
            f"KS={r3(fit['ks_stat'])} p={r3(fit['p_value'])} ({verdict}; "
            f"n_tail={fit['n_tail']}/{fit['n']})")


def digest(bundle: Path, years: list[int], market: dict, persistence: list[dict]) -> str:
    lines = ["netlab report digest", ""]
    for y in years:
        ydir = bundle / str(y)
        summ = _load(ydir / "network_summary.json")
        s = summ["summary"]
        thr = _load(ydir / "thresholds.json")
        tests = _load(ydir / "pricing_tests.json")
        m = market[str(y)]
        lines.append(f"{y}")
        lines.append(f"  trades={m['n_trades']} overnight={m['n_on_trades']} banks={s['node_count']} "
                     f"arcs={s['arc_count']}")
        lines.append(f"  density={r3(s['density'])} reciprocity({s['reciprocity_variant']})="
                     f"{r3(s['reciprocity'])} mean_degree={r3(s['mean_degree'])}")
        lines.append(f"  top-5 share: lend={r3(summ['top5_share']['lend'])} "
                     f"borrow={r3(summ['top5_share']['borrow'])}")
        for side in ("in", "out"):
            lines.append(_fit_line(side, _load(ydir / f"powerlaw_{side}.json")))
        counts = ", ".join(f"{k}={v}" for k, v in thr["counts"].items())
        lines.append(f"  thresholds: t1={r3(thr['t1'])} t2={r3(thr['t2'])} "
                     f"(p{thr['p_hi']:g}/p{thr['p_lo']:g}, alpha={thr['alpha']:g}); {counts}")
        pred = tests["predatory"]
        if "skipped" in pred:
            lines.append(f"  predatory share: skipped ({pred['skipped']})")
        elif pred["share"] is None:
            lines.append(f"  predatory share: undefined ({tests.get('predatory_skipped')})")
        else:
            eligible = sum(1 for p in pred["providers"] if p["test"] is not None)
            lines.append(f"  predatory share: {r3(pred['share'])} of {eligible} eligible Big providers")
        for group, rs in tests["rate_structure"].items():
            if "skipped" in rs:
                lines.append(f"  rate structure ({group}): skipped ({rs['skipped']})")
            else:
                lines.append(f"  rate structure ({group}): rate~counterparties="
                             f"{r3(rs['rate~counterparties']['r'])} "
                             f"rate~trades={r3(rs['rate~trades']['r'])}")
        lines.append("")
    if persistence:
        lines.append("persistence")
        for p in persistence:
            lines.append(f"  {p['from']}->{p['to']}: Big={r3(p['Big'])} Loser={r3(p['Loser'])}")
        lines.append("")
    return "\n".join(lines)


def render_report(bundle: str | Path, out_dir: str | Path) -> list[Path]:
    """Write the eight table CSVs and ``digest.txt``; returns the written paths."""
    bundle, out = Path(bundle), Path(out_dir)
    if not (bundle / "manifest.json").is_file():
        raise NetlabError(f"{bundle} is not a pipeline bundle (no manifest.json)")
    market = _load(bundle / "market_summary.json")
    persistence = _load(bundle / "persistence.json")
    years = bundle_years(bundle)
    docs = {
        "table1_banks_trades.csv": table1(market),
        "table2_volumes.csv": table2(market),
        "table3_per_bank.csv": table3(market),
        "table4_correlations.csv": table4(bundle, years),
    }
    for stem, name in _PRICING_OUT.items():
        docs[name] = pricing_table_csv(bundle, years, stem)
    docs["digest.txt"] = digest(bundle, years, market, persistence)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in docs.items():
        path = out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)
    return written
