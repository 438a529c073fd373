"""Reading firm-record CSV extracts.

Rows that cannot be used become :class:`IngestIssue` entries instead of
records, so that ``parsed rows == records + issues`` always holds. Row
numbers are spreadsheet-style: the header is row 1, the first data row is
row 2.

Firms that appear in several years are kept as separate observations.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import ConfigError, ValidationError
from .taxonomy import (
    HIGH_TECH_MANUFACTURING,
    KNOWLEDGE_INTENSIVE_SERVICES,
    MEDIUM_HIGH_TECH_MANUFACTURING,
    GeoHierarchy,
    SectorScheme,
    SizeClassScheme,
    default_geo,
    default_sector_scheme,
    default_size_scheme,
)

log = logging.getLogger(__name__)

YEAR_MIN, YEAR_MAX = 1990, 2030

# issue reasons
MISSING_CITY = "missing city"
INVALID_NACE = "invalid NACE"
NEGATIVE_EMPLOYEES = "negative employees"
UNPARSEABLE_ROW = "unparseable row"
UNRESOLVED_GEOGRAPHY = "unresolved geography"
ISSUE_REASONS = (MISSING_CITY, INVALID_NACE, NEGATIVE_EMPLOYEES, UNPARSEABLE_ROW, UNRESOLVED_GEOGRAPHY)

REQUIRED_FIELDS = ("year", "city", "nace")
OPTIONAL_FIELDS = ("firm_id", "employees")
_NA = {"", "n.a.", "na", "n/a", "null", "none", "-"}


@dataclass(frozen=True)
class FirmRecord:
    firm_id: str
    year: int
    city_raw: str
    nace: str
    employees: Optional[int] = None
    row: int = field(default=0, compare=False)


@dataclass(frozen=True)
class IngestIssue:
    row: int
    field: str
    reason: str
    value: str = ""


@dataclass(frozen=True)
class Schema:
    """Maps logical fields to CSV header names."""

    columns: dict = field(default_factory=lambda: {f: f for f in REQUIRED_FIELDS + OPTIONAL_FIELDS})

    def __post_init__(self):
        unknown = set(self.columns) - set(REQUIRED_FIELDS + OPTIONAL_FIELDS)
        if unknown:
            raise ConfigError(f"unknown schema fields: {sorted(unknown)}")
        missing = [f for f in REQUIRED_FIELDS if f not in self.columns]
        if missing:
            raise ConfigError(f"schema lacks required fields: {missing}")

    @classmethod
    def load(cls, path) -> "Schema":
        """Read a JSON object ``{"logical field": "CSV header", ...}``."""
        try:
            columns = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read schema {path}: {exc}") from exc
        if not isinstance(columns, dict):
            raise ConfigError("schema must be a JSON object")
        return cls(dict(columns))


def _parse_employees(text):
    text = text.strip().replace(",", "")
    if text.lower() in _NA:
        return None
    value = float(text)
    if not math.isfinite(value) or value != int(value):
        raise ValueError(text)
    return int(value)


def parse_records(
    stream,
    schema: Optional[Schema] = None,
    sectors: Optional[SectorScheme] = None,
) -> tuple[list[FirmRecord], list[IngestIssue]]:
    """Parse a CSV character stream into records and issues.

    Each excluded row yields exactly one issue; checks run in the order
    structure/year, city, NACE, employees. A header lacking a mapped
    required column raises :class:`ConfigError`.
    """
    schema = schema or Schema()
    sectors = sectors or default_sector_scheme()
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("input has no header row") from None
    header = [h.strip().lstrip("﻿") for h in header]
    pos = {}
    for logical, column in schema.columns.items():
        if column in header:
            pos[logical] = header.index(column)
        elif logical in REQUIRED_FIELDS:
            raise ConfigError(f"column {column!r} for field {logical!r} is missing from the header")
    width = len(header)
    i_year, i_city, i_nace = pos["year"], pos["city"], pos["nace"]
    i_id, i_emp = pos.get("firm_id"), pos.get("employees")

    records, issues = [], []
    valid_nace = {}
    for rownum, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != width:
            issues.append(IngestIssue(rownum, "*", UNPARSEABLE_ROW, f"{len(row)} fields, expected {width}"))
            continue
        year_text = row[i_year].strip()
        try:
            year = int(year_text)
            if not YEAR_MIN <= year <= YEAR_MAX:
                raise ValueError
        except ValueError:
            issues.append(IngestIssue(rownum, "year", UNPARSEABLE_ROW, year_text))
            continue
        city = row[i_city].strip()
        if not city:
            issues.append(IngestIssue(rownum, "city", MISSING_CITY))
            continue
        nace_text = row[i_nace]
        nace = valid_nace.get(nace_text)
        if nace is None:
            try:
                nace = valid_nace[nace_text] = sectors.validate(nace_text)
            except ValidationError:
                issues.append(IngestIssue(rownum, "nace", INVALID_NACE, nace_text.strip()))
                continue
        emp_text = row[i_emp] if i_emp is not None else ""
        if emp_text.isdigit():
            employees = int(emp_text)
        else:
            try:
                employees = _parse_employees(emp_text)
            except ValueError:
                issues.append(IngestIssue(rownum, "employees", UNPARSEABLE_ROW, emp_text))
                continue
            if employees is not None and employees < 0:
                issues.append(IngestIssue(rownum, "employees", NEGATIVE_EMPLOYEES, emp_text))
                continue
        firm_id = row[i_id].strip() if i_id is not None else ""
        records.append(FirmRecord(firm_id, year, city, nace, employees, rownum))
    return records, issues


def read_records(paths, schema=None, sectors=None):
    """Parse several CSV files; returns ``(records, issues, parsed_rows)``.

    Issue row numbers restart in each file; ``IngestIssue.field`` is
    prefixed with the file name when more than one file is given.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    records, issues, parsed = [], [], 0
    for path in paths:
        try:
            fh = open(path, newline="", encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read input {path}: {exc}") from exc
        with fh:
            recs, iss = parse_records(fh, schema, sectors)
        if len(paths) > 1:
            iss = [IngestIssue(i.row, f"{Path(path).name}:{i.field}", i.reason, i.value) for i in iss]
        records += recs
        issues += iss
        parsed += len(recs) + len(iss)
    return records, issues, parsed


def parse_years(text: str) -> tuple[int, int]:
    """``"2008-2010"`` or ``"2009"`` to an inclusive range."""
    try:
        if "-" in text:
            lo, hi = (int(x) for x in text.split("-", 1))
        else:
            lo = hi = int(text)
    except ValueError:
        raise ConfigError(f"bad year range {text!r}") from None
    if lo > hi:
        raise ConfigError(f"empty year range {text!r}")
    return lo, hi


def filter_window(records: Iterable[FirmRecord], years: tuple[int, int]) -> tuple[list[FirmRecord], int]:
    """Keep records with ``years[0] <= year <= years[1]``; also returns the drop count."""
    lo, hi = years
    if lo > hi:
        raise ConfigError(f"empty year range {lo}-{hi}")
    records = list(records)
    kept = [r for r in records if lo <= r.year <= hi]
    if records and not kept:
        log.warning("no records fall within %d-%d", lo, hi)
    return kept, len(records) - len(kept)


def filter_sector(records, sector_filter, sectors=None):
    """Keep records whose NACE code belongs to ``sector_filter``.

    ``sector_filter`` is one of :data:`SECTOR_FILTERS`.
    """
    sectors = sectors or default_sector_scheme()
    test = sector_predicate(sector_filter)
    records = list(records)
    kept = [r for r in records if test(sectors.classify(r.nace))]
    return kept, len(records) - len(kept)


SECTOR_FILTERS = ("all", "hmt", "kis", "hts")
SECTOR_FILTER_LABELS = {
    "all": "all sectors",
    "hmt": "high- and medium-tech manufacturing",
    "kis": "knowledge-intensive services",
    "hts": "high-tech services",
}


def sector_predicate(sector_filter):
    if sector_filter == "all":
        return lambda sc: True
    if sector_filter == "hmt":
        return lambda sc: sc.sector in (HIGH_TECH_MANUFACTURING, MEDIUM_HIGH_TECH_MANUFACTURING)
    if sector_filter == "kis":
        return lambda sc: sc.sector == KNOWLEDGE_INTENSIVE_SERVICES
    if sector_filter == "hts":
        return lambda sc: sc.high_tech_services
    raise ConfigError(f"unknown sector filter {sector_filter!r}; expected one of {SECTOR_FILTERS}")


# -------------------------------------------------------------------- profile

UNRESOLVED = "(unresolved)"


def rounded_percentages(counts: dict, decimals: int = 1) -> dict:
    """Percentages that add up to exactly 100 after rounding.

    Uses largest-remainder allocation of ``10**decimals * 100`` units; ties
    in the remainder go to the earlier key.
    """
    total = sum(counts.values())
    if total == 0:
        return {k: 0.0 for k in counts}
    units = 100 * 10**decimals
    exact = {k: v * units / total for k, v in counts.items()}
    floor = {k: int(math.floor(x)) for k, x in exact.items()}
    short = units - sum(floor.values())
    order = sorted(counts, key=lambda k: -(exact[k] - floor[k]))
    for k in order[:short]:
        floor[k] += 1
    return {k: round(floor[k] / 10**decimals, decimals) for k in counts}


@dataclass
class DatasetProfile:
    by_year: dict
    by_size_class: dict
    by_province: dict
    included: int
    excluded: dict = field(default_factory=dict)

    @property
    def excluded_total(self) -> int:
        return sum(self.excluded.values())

    def percentages(self, histogram: str) -> dict:
        return rounded_percentages(getattr(self, histogram))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["excluded_total"] = self.excluded_total
        d["by_year"] = {str(k): v for k, v in self.by_year.items()}
        for h in ("by_year", "by_size_class", "by_province"):
            d[h.replace("by_", "pct_by_")] = {str(k): v for k, v in self.percentages(h).items()}
        return d

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["histogram", "category", "n", "pct"])
        for h in ("by_year", "by_size_class", "by_province"):
            hist = getattr(self, h)
            pct = self.percentages(h)
            for k, n in hist.items():
                w.writerow([h[3:], k, n, f"{pct[k]:.1f}"])
            n = sum(hist.values())
            w.writerow([h[3:], "Total", n, "100.0" if n else "0.0"])
        return buf.getvalue()


def dataset_profile(
    records: Iterable[FirmRecord],
    issues: Iterable[IngestIssue] = (),
    sizes: Optional[SizeClassScheme] = None,
    geo: Optional[GeoHierarchy] = None,
) -> DatasetProfile:
    """Histograms by year, size class and province, plus exclusion counts.

    Size classes are listed in scheme order (all of them, zeros included);
    years ascending; provinces by descending count then name, with cities
    that do not resolve to a province collected under ``"(unresolved)"``.
    """
    sizes = sizes or default_size_scheme()
    geo = geo or default_geo()
    records = list(records)
    years = Counter(r.year for r in records)
    size_counts = Counter(sizes.classify(r.employees) for r in records)
    provinces = Counter()
    for r in records:
        prov = geo.resolve(geo.normalize_city(r.city_raw), 1)
        provinces[prov if prov is not None else UNRESOLVED] += 1
    excluded = Counter(i.reason for i in issues)
    return DatasetProfile(
        by_year=dict(sorted(years.items())),
        by_size_class={label: size_counts.get(label, 0) for label in sizes.labels},
        by_province=dict(sorted(provinces.items(), key=lambda kv: (-kv[1], kv[0]))),
        included=len(records),
        excluded={reason: excluded[reason] for reason in ISSUE_REASONS if excluded[reason]},
    )


def issues_to_csv(issues: Iterable[IngestIssue]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "field", "reason", "value"])
    for i in issues:
        w.writerow([i.row, i.field, i.reason, i.value])
    return buf.getvalue()


def records_to_csv(records: Iterable[FirmRecord], stream) -> None:
    """Write records in the default-schema layout that :func:`parse_records` reads."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["firm_id", "year", "city", "nace", "employees"])
    for r in records:
        w.writerow([r.firm_id, r.year, r.city_raw, r.nace, "" if r.employees is None else r.employees])
