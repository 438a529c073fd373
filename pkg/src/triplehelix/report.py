"""Rendering, exporting and comparing synergy reports.

Text and CSV outputs give information values in millibits with two
decimals. JSON keeps full precision (in bits, with millibit copies for
readability) and can be read back with :func:`report_from_json`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Mapping, Optional

import numpy as np
from scipy.stats import rankdata

from .decomposition import GroupContribution, SynergyReport
from .errors import ConfigError, DataError

JSON_FORMAT = "triplehelix.report/1"
LEVEL_NAMES = {1: "province", 2: "prefecture", 3: "city"}

SUM_LABEL = "(sum)"
TOTAL_LABEL = "(total)"
T0_LABEL = "(T0)"

CSV_COLUMNS = ["region", "level", "n_g", "t_g_mbit", "delta_t_mbit", "share_of_sum_pct"]


def _m(bits: float) -> str:
    return f"{bits * 1000.0:.2f}"


def _pct(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.2f}"


def _share_of_sum(report: SynergyReport, g: GroupContribution) -> Optional[float]:
    s = report.sum_delta_t
    return None if s == 0 else 100.0 * g.delta_t / s


def render_text(report: SynergyReport) -> str:
    level = LEVEL_NAMES.get(report.level, "group")
    head = f"Synergy decomposition: {report.filter_description}; groups at level {report.level} ({level})"
    width = max([len("Region")] + [len(g.label) for g in report.groups] + [len(T0_LABEL)])
    cols = f"{'Region':<{width}}  {'n_G':>10}  {'T_G (mbit)':>11}  {'dT (mbit)':>10}  {'% of sum':>8}"
    lines = [head, "", cols, "-" * len(cols)]
    for g in report.groups:
        lines.append(
            f"{g.label:<{width}}  {g.n_g:>10,}  {_m(g.t_g):>11}  {_m(g.delta_t):>10}  "
            f"{_pct(_share_of_sum(report, g)):>8}"
        )
    lines.append("-" * len(cols))
    n_sum = sum(g.n_g for g in report.groups)
    lines.append(f"{SUM_LABEL:<{width}}  {n_sum:>10,}  {'':>11}  {_m(report.sum_delta_t):>10}")
    lines.append(f"{TOTAL_LABEL:<{width}}  {report.n:>10,}  {_m(report.total_t):>11}  {'':>10}")
    lines.append(f"{T0_LABEL:<{width}}  {'':>10}  {'':>11}  {_m(report.t0):>10}")
    lines.append("")
    above, within = report.share_above_group, report.share_within_groups
    lines.append(f"share within groups: {_pct(within) or 'n/a'}%")
    lines.append(f"share above groups (T0 / T): {_pct(above) or 'n/a'}%")
    return "\n".join(lines) + "\n"


def _csv_rows(report: SynergyReport, with_sum: bool):
    level = "" if report.level is None else report.level
    for g in report.groups:
        yield [g.label, level, g.n_g, _m(g.t_g), _m(g.delta_t), _pct(_share_of_sum(report, g))]
    if with_sum:
        yield [SUM_LABEL, level, sum(g.n_g for g in report.groups), "", _m(report.sum_delta_t), "100.00"]
    yield [TOTAL_LABEL, level, report.n, _m(report.total_t), "", ""]
    yield [T0_LABEL, level, "", "", _m(report.t0), ""]


def render_csv(report: SynergyReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(_csv_rows(report, with_sum=True))
    return buf.getvalue()


def report_to_dict(report: SynergyReport) -> dict:
    return {
        "format": JSON_FORMAT,
        "level": report.level,
        "filter_description": report.filter_description,
        "n": report.n,
        "total_t_bits": report.total_t,
        "t0_bits": report.t0,
        "total_t_mbit": report.total_t * 1000.0,
        "sum_delta_t_mbit": report.sum_delta_t * 1000.0,
        "t0_mbit": report.t0 * 1000.0,
        "share_above_group_pct": report.share_above_group,
        "share_within_groups_pct": report.share_within_groups,
        "groups": [
            {
                "label": g.label,
                "n_g": g.n_g,
                "t_g_bits": g.t_g,
                "delta_t_bits": g.delta_t,
                "t_g_mbit": g.t_g * 1000.0,
                "delta_t_mbit": g.delta_t * 1000.0,
            }
            for g in report.groups
        ],
        "meta": report.meta,
    }


def render_json(report: SynergyReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n"


def report_from_dict(d: dict) -> SynergyReport:
    if d.get("format") != JSON_FORMAT:
        raise ConfigError(f"not a {JSON_FORMAT} document")
    groups = tuple(GroupContribution(g["label"], g["n_g"], g["t_g_bits"], g["delta_t_bits"]) for g in d["groups"])
    return SynergyReport(
        d["total_t_bits"], d["n"], groups, d["t0_bits"], d["level"], d["filter_description"], d.get("meta", {})
    )


def report_from_json(text: str) -> SynergyReport:
    try:
        return report_from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"malformed report JSON: {exc}") from exc


def render_table(report: SynergyReport, style: str = "text") -> str:
    """Render ``report`` as ``text``, ``csv`` or ``json``."""
    try:
        return {"text": render_text, "csv": render_csv, "json": render_json}[style](report)
    except KeyError:
        raise ConfigError(f"unknown style {style!r}") from None


def export_region_values(report: SynergyReport, level: Optional[int] = None) -> str:
    """CSV keyed by region label, one row per group plus total and T0 rows.

    Region labels are the canonical names of the geographic hierarchy, so
    the file joins directly onto a map layer's attribute table.
    """
    if level is not None and report.level is not None and level != report.level:
        raise ConfigError(f"report was computed at level {report.level}, not {level}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(_csv_rows(report, with_sum=False))
    return buf.getvalue()


# ----------------------------------------------------------------- comparison


def _ratio(a: float, b: float) -> Optional[float]:
    return None if b == 0 else 100.0 * a / b


def compare_reports(base: SynergyReport, subset: SynergyReport) -> list:
    """Contribution of a subset run (e.g. one sector) relative to a base run.

    Returns dict rows: one per base group (``subset_pct`` is subset
    delta_t as a percentage of base delta_t), then summary rows ``(sum)``
    over the group contributions, ``(total)`` for the pooled totals and
    ``(T0)`` for the residuals. Groups missing from the subset count as 0.
    """
    rows = []
    for g in base.groups:
        try:
            s = subset.group(g.label)
            s_n, s_d = s.n_g, s.delta_t
        except KeyError:
            s_n, s_d = 0, 0.0
        rows.append(
            {"label": g.label, "base_n": g.n_g, "base_delta_t": g.delta_t, "subset_n": s_n, "subset_delta_t": s_d}
        )
    for s in subset.groups:
        if not any(r["label"] == s.label for r in rows):
            rows.append(
                {"label": s.label, "base_n": 0, "base_delta_t": 0.0, "subset_n": s.n_g, "subset_delta_t": s.delta_t}
            )
    for r in rows:
        r["kind"] = "group"
        r["subset_pct"] = _ratio(r["subset_delta_t"], r["base_delta_t"])
    summary = [
        (SUM_LABEL, sum(g.n_g for g in base.groups), base.sum_delta_t,
         sum(g.n_g for g in subset.groups), subset.sum_delta_t),
        (TOTAL_LABEL, base.n, base.total_t, subset.n, subset.total_t),
        (T0_LABEL, None, base.t0, None, subset.t0),
    ]
    for label, bn, bv, sn, sv in summary:
        rows.append(
            {"label": label, "kind": "summary", "base_n": bn, "base_delta_t": bv, "subset_n": sn,
             "subset_delta_t": sv, "subset_pct": _ratio(sv, bv)}
        )
    return rows


def render_comparison(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["region", "kind", "base_n", "base_mbit", "subset_n", "subset_mbit", "subset_pct"])
    for r in rows:
        w.writerow([
            r["label"], r["kind"], "" if r["base_n"] is None else r["base_n"], _m(r["base_delta_t"]),
            "" if r["subset_n"] is None else r["subset_n"], _m(r["subset_delta_t"]), _pct(r["subset_pct"]),
        ])
    return buf.getvalue()


# --------------------------------------------------------------- correlations


def _pearson(x, y) -> float:
    n = len(x)
    mx, my = math.fsum(x) / n, math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    if sxx == 0 or syy == 0:
        raise DataError("correlation undefined for a constant series")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def rank_correlations(a: Mapping, b: Mapping) -> tuple:
    """Pearson r and Spearman rho over the labels the two series share.

    Spearman's rho is the Pearson correlation of mid-ranks, so ties are
    handled by averaging.
    """
    common = sorted(set(a) & set(b))
    if len(common) < 3:
        raise DataError(f"need at least 3 common labels, got {len(common)}")
    x = [float(a[k]) for k in common]
    y = [float(b[k]) for k in common]
    r = _pearson(x, y)
    rho = _pearson(list(rankdata(np.asarray(x), method="average")), list(rankdata(np.asarray(y), method="average")))
    return r, rho


def read_series(path, column: Optional[str] = None) -> dict:
    """Label -> value from a CSV file (first column labels) or a report JSON (delta_t in mbit).

    Summary rows of exported reports are skipped.
    """
    text = open(path, encoding="utf-8").read()
    if str(path).endswith(".json"):
        rep = report_from_json(text)
        return {g.label: g.delta_t * 1000.0 for g in rep.groups}
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if column is None:
        col = CSV_COLUMNS.index("delta_t_mbit") if header == CSV_COLUMNS else 1
    elif column in header:
        col = header.index(column)
    else:
        raise ConfigError(f"column {column!r} not in {path}")
    out = {}
    for row in reader:
        if not row or row[0] in (SUM_LABEL, TOTAL_LABEL, T0_LABEL):
            continue
        try:
            out[row[0]] = float(row[col])
        except (ValueError, IndexError):
            raise DataError(f"bad value in {path}: {row!r}") from None
    return out
