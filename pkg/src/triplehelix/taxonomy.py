"""Categorical schemes for firm attributes.

* :class:`SizeClassScheme` -- employee counts to size-class labels.
* :class:`SectorScheme` -- NACE Rev. 2 codes to technology sectors.
* :class:`GeoHierarchy` -- city name standardization and the
  city / prefecture / province hierarchy.

Every scheme is loaded from a tab-separated file (``#`` starts a comment) so
that a different national classification can be swapped in. The bundled
defaults live in ``triplehelix/data``.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

from .errors import ValidationError

NA_SIZE_CLASS = "0, 1, or n.a."

HIGH_TECH_MANUFACTURING = "high-tech manufacturing"
MEDIUM_HIGH_TECH_MANUFACTURING = "medium-high-tech manufacturing"
KNOWLEDGE_INTENSIVE_SERVICES = "knowledge-intensive services"
OTHER = "other"

SECTORS = (HIGH_TECH_MANUFACTURING, MEDIUM_HIGH_TECH_MANUFACTURING, KNOWLEDGE_INTENSIVE_SERVICES, OTHER)

# class codes used in the rules file
_RULE_CLASSES = {
    "htm": (HIGH_TECH_MANUFACTURING, False),
    "mhtm": (MEDIUM_HIGH_TECH_MANUFACTURING, False),
    "kis": (KNOWLEDGE_INTENSIVE_SERVICES, False),
    "hts": (KNOWLEDGE_INTENSIVE_SERVICES, True),
    "other": (OTHER, False),
}

PROVINCE, PREFECTURE, CITY = 1, 2, 3


def read_tsv(source) -> list[list[str]]:
    """Rows of a UTF-8 tab-separated file, skipping blanks and ``#`` comments."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    rows = []
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        rows.append([cell.strip() for cell in line.split("\t")])
    return rows


def _bundled(name):
    return resources.files("triplehelix").joinpath("data", name)


def _open_bundled(name):
    return _bundled(name).open("r", encoding="utf-8")


# ---------------------------------------------------------------- size classes


@dataclass(frozen=True)
class SizeClass:
    label: str
    low: int
    high: Optional[int]  # None = unbounded

    def contains(self, n: int) -> bool:
        return self.low <= n and (self.high is None or n <= self.high)


class SizeClassScheme:
    """Contiguous employee-count ranges covering ``0..inf``.

    A missing employee count maps to the class containing 0, which in the
    default scheme is ``"0, 1, or n.a."``.
    """

    def __init__(self, classes):
        classes = tuple(classes)
        if not classes:
            raise ValidationError("size-class scheme is empty")
        if classes[0].low != 0:
            raise ValidationError("size classes must start at 0")
        for prev, cur in zip(classes, classes[1:]):
            if prev.high is None or cur.low != prev.high + 1:
                raise ValidationError(f"size classes {prev.label!r} and {cur.label!r} are not contiguous")
        if classes[-1].high is not None:
            raise ValidationError("the last size class must be unbounded")
        if len({c.label for c in classes}) != len(classes):
            raise ValidationError("duplicate size-class labels")
        self.classes = classes
        self._bounds = [c.low for c in classes]

    @classmethod
    def from_tsv(cls, source) -> "SizeClassScheme":
        classes = []
        for row in read_tsv(source):
            if len(row) < 2:
                raise ValidationError(f"bad size-class row: {row!r}")
            high = row[2] if len(row) > 2 else ""
            classes.append(SizeClass(row[0], int(row[1]), int(high) if high else None))
        return cls(classes)

    @classmethod
    def default(cls) -> "SizeClassScheme":
        with _open_bundled("size_classes.tsv") as fh:
            return cls.from_tsv(fh)

    @property
    def labels(self) -> tuple:
        return tuple(c.label for c in self.classes)

    def classify(self, employees: Optional[int]) -> str:
        if employees is None:
            return self.classes[0].label
        if employees < 0:
            raise ValidationError(f"negative employee count: {employees}")
        lo, hi = 0, len(self._bounds)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._bounds[mid] <= employees:
                lo = mid
            else:
                hi = mid
        return self.classes[lo].label


# --------------------------------------------------------------------- sectors


class SectorClass(NamedTuple):
    sector: str
    high_tech_services: bool = False


def clean_nace(code) -> str:
    """Strip dots and whitespace from a NACE code and check it is 2-4 digits."""
    if code is None:
        raise ValidationError("empty NACE code")
    text = str(code).strip().replace(".", "")
    if not text:
        raise ValidationError("empty NACE code")
    if not text.isdigit() or not text.isascii():
        raise ValidationError(f"non-numeric NACE code: {code!r}")
    if not 2 <= len(text) <= 4:
        raise ValidationError(f"NACE code must have 2-4 digits: {code!r}")
    return text


def _expand_rule(rule: str) -> list[str]:
    rule = rule.replace(".", "")
    if "-" in rule:
        lo, hi = rule.split("-")
        if len(lo) != len(hi) or not (lo.isdigit() and hi.isdigit()) or int(lo) > int(hi):
            raise ValidationError(f"bad NACE range {rule!r}")
        return [str(i).zfill(len(lo)) for i in range(int(lo), int(hi) + 1)]
    if not rule.isdigit():
        raise ValidationError(f"bad NACE rule {rule!r}")
    return [rule]


class SectorScheme:
    """Longest-prefix NACE rules mapping codes to sector classes.

    Parameters
    ----------
    rules : iterable of (prefix, class code)
        Class codes are ``htm``, ``mhtm``, ``kis``, ``hts`` (a high-tech
        service, which is also knowledge-intensive) and ``other``. A longer
        prefix overrides a shorter one, which is how exclusions such as 30.1
        within division 30 are expressed.
    divisions : iterable of str, optional
        Valid 2-digit divisions. When given, codes in other divisions are
        rejected by :meth:`validate`.
    """

    def __init__(self, rules, divisions=None):
        table = {}
        for prefix, klass in rules:
            if klass not in _RULE_CLASSES:
                raise ValidationError(f"unknown sector class {klass!r}")
            for p in _expand_rule(prefix):
                if p in table and table[p] != klass:
                    raise ValidationError(f"conflicting rules for NACE prefix {p}")
                table[p] = klass
        self.rules = dict(sorted(table.items()))
        self.divisions = frozenset(divisions) if divisions is not None else None
        self._lookup = functools.lru_cache(maxsize=None)(self._classify)

    @classmethod
    def from_tsv(cls, source, divisions_source=None) -> "SectorScheme":
        rules = [(row[0], row[1]) for row in read_tsv(source)]
        divisions = None
        if divisions_source is not None:
            divisions = [d for row in read_tsv(divisions_source) for d in _expand_rule(row[0])]
        return cls(rules, divisions)

    @classmethod
    def default(cls) -> "SectorScheme":
        with _open_bundled("nace_sectors.tsv") as rules, _open_bundled("nace_divisions.tsv") as divs:
            return cls.from_tsv(rules, divs)

    def validate(self, code) -> str:
        """Cleaned code, or :class:`ValidationError` if it is not a valid NACE code."""
        text = clean_nace(code)
        if self.divisions is not None and text[:2] not in self.divisions:
            raise ValidationError(f"NACE division {text[:2]} does not exist")
        return text

    def classify(self, code) -> SectorClass:
        return self._lookup(clean_nace(code))

    def _classify(self, text):
        for n in range(len(text), 1, -1):
            klass = self.rules.get(text[:n])
            if klass is not None:
                return SectorClass(*_RULE_CLASSES[klass])
        return SectorClass(OTHER)


def tech_category(nace, digits: int = 2) -> str:
    """The NACE code truncated to ``digits`` digits (the technology axis label)."""
    if digits not in (2, 3, 4):
        raise ValidationError(f"digits must be 2, 3 or 4, not {digits}")
    text = clean_nace(nace)
    if len(text) < digits:
        raise ValidationError(f"NACE code {nace!r} has fewer than {digits} digits")
    return text[:digits]


# ------------------------------------------------------------------ geography

_SUFFIXES = (" capital city", " municipality", " city", " shi", " prefecture", " province")
_WS = re.compile(r"\s+")


def _key(name: str) -> str:
    return _WS.sub(" ", name.strip()).casefold()


class GeoHierarchy:
    """City-name aliases and city -> prefecture -> province paths.

    Levels follow the administrative layers: 1 = province, 2 = prefecture,
    3 = city. Municipalities (Beijing, Shanghai, Tianjin, Chongqing) are
    their own prefecture and province.
    """

    def __init__(self, paths: dict, aliases: Optional[dict] = None):
        self.paths = dict(paths)
        self._names = {}
        for city in self.paths:
            self._names[_key(city)] = city
        for raw, canonical in (aliases or {}).items():
            if canonical not in self.paths:
                raise ValidationError(f"alias {raw!r} points to unknown city {canonical!r}")
            self._names.setdefault(_key(raw), canonical)
        self.aliases = dict(aliases or {})

    @classmethod
    def from_tsv(cls, hierarchy_source, aliases_source=None) -> "GeoHierarchy":
        paths = {}
        for row in read_tsv(hierarchy_source):
            if len(row) != 3:
                raise ValidationError(f"hierarchy rows need city, prefecture, province: {row!r}")
            city, prefecture, province = row
            if city in paths and paths[city] != (prefecture, province):
                raise ValidationError(f"city {city!r} has two paths")
            paths[city] = (prefecture, province)
        aliases = {}
        if aliases_source is not None:
            aliases = {row[0]: row[1] for row in read_tsv(aliases_source)}
        return cls(paths, aliases)

    @classmethod
    def default(cls, extra_aliases=None) -> "GeoHierarchy":
        with _open_bundled("geo_hierarchy.tsv") as h, _open_bundled("geo_aliases.tsv") as a:
            geo = cls.from_tsv(h, a)
        if extra_aliases is not None:
            geo = geo.with_aliases({row[0]: row[1] for row in read_tsv(extra_aliases)})
        return geo

    def with_aliases(self, aliases: dict) -> "GeoHierarchy":
        merged = dict(self.aliases)
        merged.update(aliases)
        return GeoHierarchy(self.paths, merged)

    @property
    def provinces(self) -> list:
        return sorted({p for _, p in self.paths.values()})

    @property
    def prefectures(self) -> list:
        return sorted({p for p, _ in self.paths.values()})

    def lookup(self, raw: str) -> Optional[str]:
        """Canonical city for ``raw``, or None when the name is unknown."""
        key = _key(raw)
        hit = self._names.get(key)
        if hit is None:
            for suffix in _SUFFIXES:
                if key.endswith(suffix) and len(key) > len(suffix):
                    hit = self._names.get(key[: -len(suffix)].strip())
                    if hit is not None:
                        break
        return hit

    def normalize_city(self, raw: str) -> str:
        """Canonical city name; unknown names come back trimmed but unchanged.

        Use :meth:`is_known` to flag names that did not resolve.
        """
        if raw is None or not raw.strip():
            raise ValidationError("empty city name")
        hit = self.lookup(raw)
        return hit if hit is not None else _WS.sub(" ", raw.strip())

    def is_known(self, city: str) -> bool:
        return city in self.paths

    def resolve(self, city: str, level: int) -> Optional[str]:
        """Region label of ``city`` at ``level``, or None when unresolved.

        Level 3 returns the city itself (known or not).
        """
        if level == CITY:
            return city
        if level not in (PROVINCE, PREFECTURE):
            raise ValidationError(f"level must be 1, 2 or 3, not {level}")
        path = self.paths.get(city)
        if path is None:
            return None
        return path[1] if level == PROVINCE else path[0]


@functools.lru_cache(maxsize=None)
def default_size_scheme() -> SizeClassScheme:
    return SizeClassScheme.default()


@functools.lru_cache(maxsize=None)
def default_sector_scheme() -> SectorScheme:
    return SectorScheme.default()


@functools.lru_cache(maxsize=None)
def default_geo() -> GeoHierarchy:
    return GeoHierarchy.default()


def size_class(employees: Optional[int], scheme: Optional[SizeClassScheme] = None) -> str:
    return (scheme or default_size_scheme()).classify(employees)


def classify_sector(nace, scheme: Optional[SectorScheme] = None) -> SectorClass:
    return (scheme or default_sector_scheme()).classify(nace)


def normalize_city(raw: str, geo: Optional[GeoHierarchy] = None) -> str:
    return (geo or default_geo()).normalize_city(raw)


def resolve_geo(city: str, level: int, geo: Optional[GeoHierarchy] = None) -> Optional[str]:
    return (geo or default_geo()).resolve(city, level)
