"""End-to-end analysis: ingest, classify, build tensors, decompose, write outputs."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import plotting
from .decomposition import SynergyReport, decompose, with_meta
from .errors import ConfigError, EmptyDatasetError, ValidationError
from .ingestion import (
    INVALID_NACE,
    SECTOR_FILTER_LABELS,
    SECTOR_FILTERS,
    UNRESOLVED_GEOGRAPHY,
    IngestIssue,
    Schema,
    filter_window,
    issues_to_csv,
    read_records,
    sector_predicate,
)
from .report import export_region_values, render_table
from .taxonomy import CITY, GeoHierarchy, default_sector_scheme, default_size_scheme, tech_category

log = logging.getLogger(__name__)

OUTSIDE_YEARS = "outside year window"
OUTSIDE_SECTOR = "outside sector filter"
FORMATS = ("text", "csv", "json")
_SUFFIX = {"text": "txt", "csv": "csv", "json": "json"}


@dataclass
class AnalysisConfig:
    inputs: list
    schema: Optional[str] = None
    years: tuple = (2008, 2010)
    level: int = 1
    digits: int = 2
    sector: str = "all"
    out: Optional[str] = None
    formats: tuple = FORMATS
    hierarchy: Optional[str] = None
    aliases: Optional[str] = None
    figures: bool = True
    workers: int = 1

    def validate(self) -> None:
        if not self.inputs:
            raise ConfigError("no input files")
        if self.level not in (1, 2):
            raise ConfigError(
                f"grouping level must be 1 (province) or 2 (prefecture), below the city geography axis; got {self.level}"
            )
        if self.level >= CITY:
            raise ConfigError("grouping level must be coarser than the geography axis")
        if self.digits not in (2, 3, 4):
            raise ConfigError(f"digits must be 2, 3 or 4, not {self.digits}")
        if self.sector not in SECTOR_FILTERS:
            raise ConfigError(f"sector must be one of {SECTOR_FILTERS}, not {self.sector!r}")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown output formats {bad}")
        lo, hi = self.years
        if lo > hi:
            raise ConfigError("empty year range")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def echo(self) -> dict:
        """Settings that affect results (not output location or thread count)."""
        return {
            "inputs": [str(p) for p in self.inputs],
            "schema": None if self.schema is None else str(self.schema),
            "years": list(self.years),
            "level": self.level,
            "digits": self.digits,
            "sector": self.sector,
            "hierarchy": None if self.hierarchy is None else str(self.hierarchy),
            "aliases": None if self.aliases is None else str(self.aliases),
        }


@dataclass
class PipelineResult:
    report: SynergyReport
    audit: dict
    issues: list
    files: list = field(default_factory=list)


def load_geo(config: AnalysisConfig) -> GeoHierarchy:
    try:
        if config.hierarchy is None:
            return GeoHierarchy.default(config.aliases)
        return GeoHierarchy.from_tsv(config.hierarchy, config.aliases)
    except OSError as exc:
        raise ConfigError(f"cannot read geography tables: {exc}") from exc
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def analyze(config: AnalysisConfig) -> PipelineResult:
    """Run the analysis in memory without writing files."""
    config.validate()
    schema = Schema.load(config.schema) if config.schema else Schema()
    geo = load_geo(config)
    sizes = default_size_scheme()
    sectors = default_sector_scheme()
    in_sector = sector_predicate(config.sector)

    records, issues, parsed = read_records(config.inputs, schema, sectors)
    records, dropped_years = filter_window(records, config.years)

    size_of, tech_of, sector_ok, city_of, group_of = {}, {}, {}, {}, {}
    rows = []
    dropped_sector = 0
    unknown_names = set()
    extra_issues = []
    for rec in records:
        nace = rec.nace
        ok = sector_ok.get(nace)
        if ok is None:
            ok = sector_ok[nace] = in_sector(sectors.classify(nace))
        if not ok:
            dropped_sector += 1
            continue
        tech = tech_of.get(nace)
        if tech is None:
            try:
                tech = tech_of[nace] = tech_category(nace, config.digits)
            except ValidationError:
                tech = tech_of[nace] = ""
        if not tech:
            extra_issues.append(IngestIssue(rec.row, "nace", INVALID_NACE, nace))
            continue
        city = city_of.get(rec.city_raw)
        if city is None:
            city = city_of[rec.city_raw] = geo.normalize_city(rec.city_raw)
            if not geo.is_known(city):
                unknown_names.add(city)
        group = group_of.get(city, 0)
        if group == 0:
            group = group_of[city] = geo.resolve(city, config.level)
        if group is None:
            extra_issues.append(IngestIssue(rec.row, "city", UNRESOLVED_GEOGRAPHY, rec.city_raw))
            continue
        size = size_of.get(rec.employees)
        if size is None:
            size = size_of[rec.employees] = sizes.classify(rec.employees)
        rows.append((group, city, size, tech))

    if not rows:
        raise EmptyDatasetError("empty post-filter dataset")
    description = SECTOR_FILTER_LABELS[config.sector]
    report = decompose(rows, workers=config.workers, level=config.level, filter_description=description)
    report = with_meta(report, years=list(config.years), digits=config.digits, sector=config.sector)

    all_issues = issues + extra_issues
    excluded = Counter(i.reason for i in all_issues)
    excluded[OUTSIDE_YEARS] = dropped_years
    excluded[OUTSIDE_SECTOR] = dropped_sector
    excluded = {k: v for k, v in sorted(excluded.items()) if v}
    audit = {
        "config": config.echo(),
        "parsed_rows": parsed,
        "included": report.n,
        "excluded": excluded,
        "excluded_total": sum(excluded.values()),
        "groups": len(report.groups),
        "unknown_city_names": len(unknown_names),
        "note": "records of firms present in several years are counted once per year",
    }
    if audit["included"] + audit["excluded_total"] != parsed:
        raise AssertionError("row accounting does not balance")
    return PipelineResult(report, audit, all_issues)


def run_pipeline(config: AnalysisConfig) -> PipelineResult:
    """Analyze and, if ``config.out`` is set, write reports, exports and figures."""
    result = analyze(config)
    if config.out is None:
        return result
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []

    def write(name, text):
        path = out / name
        path.write_text(text, encoding="utf-8", newline="")
        files.append(path)

    for style in config.formats:
        write(f"report.{_SUFFIX[style]}", render_table(result.report, style))
    write(f"regions_level{config.level}.csv", export_region_values(result.report, config.level))
    write("audit.json", json.dumps(result.audit, indent=2, ensure_ascii=False) + "\n")
    write("issues.csv", issues_to_csv(result.issues))
    if config.figures:
        path = out / "report.png"
        plotting.plot_contributions(result.report, path)
        files.append(path)
    result.files = files
    return result
