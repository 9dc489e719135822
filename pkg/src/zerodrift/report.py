"""Render a :class:`DriftReport` as canonical JSON, a markdown summary, or per-day CSV."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Union

from .metrics import SERIES_COLUMNS
from .pipeline import DriftReport

EMIT_FORMATS = ("json", "markdown", "csv-series")
SIG_DIGITS = 6


def _canonical(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.{SIG_DIGITS}g}")
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_json(report: Union[DriftReport, dict], include_runtime: bool = False) -> bytes:
    data = report.to_dict(include_runtime) if isinstance(report, DriftReport) else report
    text = json.dumps(_canonical(data), sort_keys=True, indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def load_report(data: Union[bytes, str]) -> DriftReport:
    return DriftReport.from_dict(json.loads(data))


def _num(value, fmt: str = ".3f") -> str:
    if value is None:
        return "n/a"
    return format(value, fmt)


def _pct(value) -> str:
    return "n/a" if value is None else f"{value:.1f}%"


def _ci(entry) -> str:
    if not isinstance(entry, dict) or "lower" not in entry:
        return "n/a"
    return f"[{entry['lower']:.1f}%, {entry['upper']:.1f}%]"


def _event_markdown(event: dict) -> list[str]:
    lines = [f"## Event: {event['event_name']}", ""]
    win = event["windows"]
    lines.append(
        f"Windows: pre {win['pre_days']} days / {win['pre_records']} records, "
        f"during {win['during_days']} / {win['during_records']}, "
        f"post {win['post_days']} / {win['post_records']}"
        + (f" (flags: {', '.join(win['flags'])})" if win.get("flags") else "")
    )
    verdict = event.get("verdict") or {}
    if "error" in verdict:
        lines.append(f"Verdict: not evaluated ({verdict['error']})")
    else:
        triggers = ", ".join(t["metric"] for t in verdict.get("trigger_metrics", [])) or "none"
        lines.append(f"Verdict: **{'DRIFT' if verdict.get('detected') else 'no drift'}** (triggers: {triggers})")
    lines += ["", "| Measure | Value | CI/Stats | Practical Significance |", "|---|---|---|---|"]

    effects = event["stats"]["effect_sizes"].get("confidence", {})
    lines.append("| *Statistical effect sizes (confidence, during vs pre)* | | | |")
    cls = effects.get("classification", {}) if isinstance(effects, dict) else {}
    for key, label in (
        ("cohens_d", "Cohen's d"),
        ("glass_delta", "Glass's Δ"),
        ("hedges_g", "Hedges' g"),
        ("cliffs_delta", "Cliff's δ"),
    ):
        value = effects.get(key) if isinstance(effects, dict) else None
        lines.append(f"| {label} | {_num(value)} | {cls.get(key, 'n/a')} | |")

    lines.append("| *Impact* | | | |")
    drops = event["drops"]
    boot = event["stats"]["bootstrap"]
    acc = drops.get("accuracy", {})
    conf = drops.get("mean_confidence", {})
    lines.append(
        f"| Max accuracy drop | {_pct(acc.get('drop_points'))} | {_ci(boot.get('accuracy_drop_points'))} "
        f"| worst day {acc.get('worst_day', 'n/a')} |"
    )
    lines.append(
        f"| Max confidence drop | {_pct(conf.get('drop_points'))} | {_ci(boot.get('mean_confidence_drop_points'))} "
        f"| worst day {conf.get('worst_day', 'n/a')} |"
    )
    anova = event["stats"]["anova"]
    lines.append(
        f"| ANOVA F (confidence) | {_num(anova.get('f_statistic'))} | groups {anova.get('groups', 'n/a')} | |"
    )
    corr = event["stats"]["correlation"]
    lines.append(
        f"| Confidence-entropy r | {_num(corr.get('r'))} | permutation p = {_num(corr.get('p_value'), '.4f')} | |"
    )

    lines.append("| *Industry context* | | | |")
    for b in verdict.get("breaches", []):
        lines.append(
            f"| {b['profile']} ({b['threshold_points']:g}%) | {b['multiplier']:.1f}x | {b['severity']} | |"
        )
    lines += ["", "| Baseline | Score | Details |", "|---|---|---|"]
    for s in event["baselines"]["scores"]:
        detail = ", ".join(
            f"{k}={v}" for k, v in sorted(s["details"].items()) if not isinstance(v, (list, dict))
        )
        lines.append(f"| {s['method']} | {s['score']:.4f} | {detail} |")
    for method, reason in sorted(event["baselines"]["skipped"].items()):
        lines.append(f"| {method} | skipped | {reason} |")
    fdr = event["stats"]["fdr"]
    if fdr["tests"]:
        lines += ["", f"FDR (Benjamini-Hochberg, α = {fdr['alpha']}):", "",
                  "| Metric | p | adjusted p | rejected |", "|---|---|---|---|"]
        for t in fdr["tests"]:
            lines.append(f"| {t['metric']} | {t['p_value']:.4f} | {t['adjusted_p']:.4f} | {t['rejected']} |")
    lines.append("")
    return lines


def to_markdown(report: DriftReport) -> bytes:
    cfg = report.config
    stats = cfg.get("stats", {})
    lines = [
        f"# Drift report: {cfg.get('name', 'run')}",
        "",
        f"Dataset: {report.dataset.get('record_count')} records, "
        f"{report.dataset.get('start')} to {report.dataset.get('end')}",
        f"Bootstrap: {stats.get('iterations')} iterations, seed {stats.get('seed')}, "
        f"level {stats.get('level')}; tool {report.tool} {report.version}",
    ]
    if report.runtime_seconds is not None:
        lines.append(f"Runtime: {report.runtime_seconds:.2f} s")
    lines.append("")
    for event in report.events:
        lines += _event_markdown(event)
    return ("\n".join(lines) + "\n").encode("utf-8")


def to_csv_series(report: DriftReport) -> bytes:
    """Per-day metric rows of every event, tagged with event and window."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("event", "window") + SERIES_COLUMNS)
    for event in report.events:
        for row in event["series"]:
            writer.writerow(
                [event["event_name"], row["window"]]
                + ["" if row.get(k) is None else _cell(row[k]) for k in SERIES_COLUMNS]
            )
    return buf.getvalue().encode("utf-8")


def _cell(value) -> str:
    return f"{value:.{SIG_DIGITS}g}" if isinstance(value, float) else str(value)


def emit_report(report: DriftReport, format: str = "json", include_runtime: bool = False) -> bytes:
    if format == "json":
        return to_json(report, include_runtime)
    # render from the canonical form so re-rendering a saved report is byte-identical
    report = load_report(to_json(report, include_runtime))
    if format == "markdown":
        return to_markdown(report)
    if format == "csv-series":
        return to_csv_series(report)
    raise ValueError(f"unknown report format {format!r}; expected one of {EMIT_FORMATS}")
