"""Command-line interface.

Exit codes: 0 success, 1 data error, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError
from .ingestion import SECTOR_FILTERS, Schema, dataset_profile, filter_window, issues_to_csv, parse_years, read_records
from .pipeline import FORMATS, AnalysisConfig, load_geo, run_pipeline
from .report import compare_reports, rank_correlations, read_series, render_comparison, report_from_json

log = logging.getLogger("triplehelix")


def _formats(text):
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in items if s not in FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be a comma list of {FORMATS}")
    return items


def _years(text):
    try:
        return parse_years(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common_input(p):
    p.add_argument("--input", nargs="+", required=True, help="firm CSV file(s)")
    p.add_argument("--schema", help="JSON file mapping logical fields to CSV headers")
    p.add_argument("--years", type=_years, default=(2008, 2010), help="inclusive year range, e.g. 2008-2010")
    p.add_argument("--hierarchy", help="TSV of city, prefecture, province (default: bundled table)")
    p.add_argument("--aliases", help="TSV of raw city name, canonical city (added to the bundled aliases)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triplehelix",
        description="Synergy among geography, size and technology of firms, decomposed by region.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="decompose the three-way transmission by region")
    _common_input(p)
    p.add_argument("--level", type=int, choices=(1, 2), default=1, help="grouping level: 1 province, 2 prefecture")
    p.add_argument("--digits", type=int, choices=(2, 3, 4), default=2, help="NACE digits on the technology axis")
    p.add_argument("--sector", choices=SECTOR_FILTERS, default="all",
                   help="all, hmt (high/medium-tech manufacturing), kis, hts (high-tech services)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", type=_formats, default=FORMATS, help="comma list of text,csv,json")
    p.add_argument("--workers", type=int, default=1, help="threads for per-region computations")
    p.add_argument("--no-figures", action="store_true", help="skip the PNG chart")

    p = sub.add_parser("compare", help="subset contributions as a percentage of a base run")
    p.add_argument("--base", required=True, help="report.json of the all-sector run")
    p.add_argument("--subset", required=True, help="report.json of the sector-filtered run")
    p.add_argument("--out", help="CSV file to write (default: stdout)")

    p = sub.add_parser("profile", help="histograms by year, size class and province")
    _common_input(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("correlate", help="Pearson and Spearman correlation of two labelled series")
    p.add_argument("a", help="CSV (label, value) or report.json")
    p.add_argument("b", help="CSV (label, value) or report.json")
    p.add_argument("--column-a")
    p.add_argument("--column-b")

    p = sub.add_parser("synthgen", help="generate a synthetic firm CSV from a population spec")
    p.add_argument("--spec", required=True, help="JSON population spec")
    p.add_argument("--out", required=True, help="CSV file to write")
    p.add_argument("--hierarchy-out", help="also write a matching city/prefecture/province TSV")
    p.add_argument("--seed", type=int, help="override the seed in the population file")
    return parser


def cmd_analyze(args):
    config = AnalysisConfig(
        inputs=args.input,
        schema=args.schema,
        years=args.years,
        level=args.level,
        digits=args.digits,
        sector=args.sector,
        out=args.out,
        formats=args.format,
        hierarchy=args.hierarchy,
        aliases=args.aliases,
        figures=not args.no_figures,
        workers=args.workers,
    )
    result = run_pipeline(config)
    rep = result.report
    print(
        f"N = {rep.n}, T = {rep.total_t * 1000:.2f} mbit, sum dT = {rep.sum_delta_t * 1000:.2f} mbit, "
        f"T0 = {rep.t0 * 1000:.2f} mbit over {len(rep.groups)} regions"
    )
    for path in result.files:
        print(f"wrote {path}")


def cmd_compare(args):
    base = report_from_json(Path(args.base).read_text(encoding="utf-8"))
    subset = report_from_json(Path(args.subset).read_text(encoding="utf-8"))
    text = render_comparison(compare_reports(base, subset))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def cmd_profile(args):
    schema = Schema.load(args.schema) if args.schema else Schema()
    config = AnalysisConfig(inputs=args.input, hierarchy=args.hierarchy, aliases=args.aliases)
    geo = load_geo(config)
    records, issues, parsed = read_records(args.input, schema)
    records, dropped = filter_window(records, args.years)
    profile = dataset_profile(records, issues, geo=geo)
    if dropped:
        profile.excluded["outside year window"] = dropped
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = profile.to_dict()
    d["parsed_rows"] = parsed
    (out / "profile.json").write_text(json.dumps(d, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    (out / "profile.csv").write_text(profile.to_csv(), encoding="utf-8", newline="")
    (out / "issues.csv").write_text(issues_to_csv(issues), encoding="utf-8", newline="")
    if not args.no_figures:
        from .plotting import plot_profile

        plot_profile(profile, out)
    print(f"parsed {parsed} rows: {profile.included} included, {profile.excluded_total} excluded")


def cmd_correlate(args):
    a = read_series(args.a, args.column_a)
    b = read_series(args.b, args.column_b)
    r, rho = rank_correlations(a, b)
    n = len(set(a) & set(b))
    print(f"n = {n}\npearson_r = {r:.6f}\nspearman_rho = {rho:.6f}")


def cmd_synthgen(args):
    from .ingestion import records_to_csv
    from .synthgen import PopulationSpec, generate_dataset

    spec = PopulationSpec.load(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    records = generate_dataset(spec)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        records_to_csv(records, fh)
    if args.hierarchy_out:
        lines = ["# city\tprefecture\tprovince"] + ["\t".join(row) for row in spec.hierarchy_rows()]
        Path(args.hierarchy_out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(records)} records to {args.out}")


COMMANDS = {
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "profile": cmd_profile,
    "correlate": cmd_correlate,
    "synthgen": cmd_synthgen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
