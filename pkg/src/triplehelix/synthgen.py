"""Synthetic firm populations with a known dependence structure.

Datasets are described by a :class:`PopulationSpec`: a list of cities, each
with a firm count and a joint distribution over (size class, NACE code),
given either as independent marginals or as an explicit table.

In the default ``quota`` mode each city's cell counts are the
largest-remainder allocation of ``p * firms`` (ties to the earlier cell), so
information values computed from the output are exact. ``iid`` mode draws
cells independently instead.

Randomness comes from SplitMix64 (Steele, Lea & Flood 2014) so that a seed
reproduces the same bytes on any platform or language:

* bounded integers by rejection: draw ``x`` until ``x < 2**64 - 2**64 % n``,
  return ``x % n``;
* shuffles by Fisher-Yates, ``i`` from ``n-1`` down to 1 swapping with
  ``j = bounded(i + 1)``;
* uniform reals as ``(x >> 11) * 2**-53``.

:func:`oracle_transmission3` is a deliberately naive re-derivation of the
three-way transmission from raw triples. It shares no code with
:mod:`triplehelix.entropy` and serves as the independent check on it.
"""

from __future__ import annotations

import bisect
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .ingestion import FirmRecord
from .taxonomy import default_sector_scheme, default_size_scheme

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def bounded(self, n: int) -> int:
        limit = (1 << 64) - (1 << 64) % n
        while True:
            x = self.next()
            if x < limit:
                return x % n

    def random(self) -> float:
        return (self.next() >> 11) * 2.0**-53

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.bounded(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass
class Region:
    province: str
    prefecture: str
    city: str
    firms: int
    cells: list  # [(size label, nace code, probability), ...]


@dataclass
class PopulationSpec:
    regions: list
    seed: int = 0
    years: tuple = (2008, 2010)
    mode: str = "quota"
    size_values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("quota", "iid"):
            raise ConfigError(f"mode must be 'quota' or 'iid', not {self.mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        lo, hi = self.years
        if lo > hi:
            raise ConfigError("empty year range")
        sizes = default_size_scheme()
        sectors = default_sector_scheme()
        for r in self.regions:
            if r.firms < 0:
                raise ConfigError(f"negative firm count for {r.city!r}")
            if not r.cells:
                raise ConfigError(f"no cells for {r.city!r}")
            total = math.fsum(p for _, _, p in r.cells)
            if any(p < 0 or p > 1 for _, _, p in r.cells) or abs(total - 1.0) > 1e-12:
                raise ConfigError(f"cell probabilities for {r.city!r} are not a distribution")
            for size, nace, _ in r.cells:
                if size not in sizes.labels and size not in self.size_values:
                    raise ConfigError(f"unknown size class {size!r}")
                try:
                    sectors.validate(nace)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, d: dict) -> "PopulationSpec":
        regions = []
        for r in d["regions"]:
            if "joint" in r:
                cells = [(str(s), str(t), float(p)) for s, t, p in r["joint"]]
            else:
                cells = [
                    (str(s), str(t), float(ps) * float(pt))
                    for (s, ps), (t, pt) in itertools.product(r["size"].items(), r["tech"].items())
                ]
            regions.append(
                Region(r["province"], r.get("prefecture", r["province"]), r["city"], int(r["firms"]), cells)
            )
        return cls(
            regions,
            seed=int(d.get("seed", 0)),
            years=tuple(d.get("years", (2008, 2010))),
            mode=d.get("mode", "quota"),
        )

    @classmethod
    def load(cls, path) -> "PopulationSpec":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls.from_dict(d)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad population spec {path}: {exc}") from exc

    def hierarchy_rows(self) -> list:
        """``(city, prefecture, province)`` rows for a matching hierarchy file."""
        seen = {}
        for r in self.regions:
            seen.setdefault(r.city, (r.city, r.prefecture, r.province))
        return list(seen.values())


def quota_counts(probabilities, n: int) -> list:
    """Largest-remainder allocation of ``n`` units; remainder ties go to the earlier cell."""
    exact = [p * n for p in probabilities]
    counts = [int(math.floor(x)) for x in exact]
    short = n - sum(counts)
    order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def _employees(size_label: str, spec: PopulationSpec):
    if size_label in spec.size_values:
        return spec.size_values[size_label]
    for c in default_size_scheme().classes:
        if c.label == size_label:
            return c.low
    raise ConfigError(size_label)


def generate_dataset(spec: PopulationSpec) -> list:
    """Deterministic list of :class:`FirmRecord` for ``spec``."""
    rng = SplitMix64(spec.seed)
    cells = []  # (city, size, nace) per firm, before shuffling
    for r in spec.regions:
        if spec.mode == "quota":
            counts = quota_counts([p for _, _, p in r.cells], r.firms)
        else:
            cdf = list(itertools.accumulate(p for _, _, p in r.cells))
            counts = [0] * len(r.cells)
            for _ in range(r.firms):
                i = min(bisect.bisect_right(cdf, rng.random()), len(cdf) - 1)
                counts[i] += 1
        for (size, nace, _), k in zip(r.cells, counts):
            cells.extend([(r.city, size, nace)] * k)
    rng.shuffle(cells)
    lo, hi = spec.years
    span = hi - lo + 1
    return [
        FirmRecord(f"S{i:07d}", lo + rng.bounded(span), city, nace, _employees(size, spec))
        for i, (city, size, nace) in enumerate(cells)
    ]


# ----------------------------------------------------------- ready-made specs

SIZE_PAIR = ("20-49", "50-99")
TECH_PAIR = ("21", "26")


def independent_spec(firms: int = 10_000, seed: int = 0, mode: str = "quota") -> PopulationSpec:
    """One province with two cities; city, size and technology independent and uniform."""
    cells = [(s, t, 0.25) for s in SIZE_PAIR for t in TECH_PAIR]
    regions = [Region("Alpha", "Alpha", f"Alpha-{b}", firms // 2 + (b < firms % 2), list(cells)) for b in (0, 1)]
    return PopulationSpec(regions, seed=seed, mode=mode)


def parity_spec(firms: int = 10_000, seed: int = 0, province: str = "Alpha") -> PopulationSpec:
    """Technology is the parity of (city bit, size bit): three-way transmission of -1 bit."""
    regions = []
    for b in (0, 1):
        cells = [(SIZE_PAIR[s], TECH_PAIR[b ^ s], 0.5) for s in (0, 1)]
        regions.append(Region(province, province, f"{province}-{b}", firms // 2 + (b < firms % 2), cells))
    return PopulationSpec(regions, seed=seed)


def redundant_spec(firms: int = 10_000, seed: int = 0) -> PopulationSpec:
    """City, size and technology all equal the same bit: +1 bit."""
    regions = [
        Region("Alpha", "Alpha", f"Alpha-{b}", firms // 2 + (b < firms % 2), [(SIZE_PAIR[b], TECH_PAIR[b], 1.0)])
        for b in (0, 1)
    ]
    return PopulationSpec(regions, seed=seed)


def provinces_spec(
    provinces: int = 3,
    cities_per_province: int = 4,
    firms: int = 30_000,
    seed: int = 0,
    parity_province: Optional[int] = 0,
) -> PopulationSpec:
    """Several provinces with uniform independent structure, one of them parity-structured.

    Firms are split evenly over provinces, then cities. Useful as a
    pipeline fixture: the parity province dominates the synergy.
    """
    sizes = default_size_scheme().labels[1:]
    techs = ("20", "21", "26", "27", "28", "29", "62", "72", "10", "46")
    regions = []
    per_prov = quota_counts([1 / provinces] * provinces, firms)
    for p in range(provinces):
        name = f"Province{p:02d}"
        per_city = quota_counts([1 / cities_per_province] * cities_per_province, per_prov[p])
        for c in range(cities_per_province):
            if p == parity_province:
                b = c % 2
                cells = [(SIZE_PAIR[s], TECH_PAIR[b ^ s], 0.5) for s in (0, 1)]
            else:
                cells = [(s, t, 1 / (len(sizes) * len(techs))) for s in sizes for t in techs]
                # absorb rounding so the distribution sums to 1 exactly
                rest = 1.0 - math.fsum(p_ for _, _, p_ in cells[:-1])
                cells[-1] = (cells[-1][0], cells[-1][1], rest)
            regions.append(Region(name, f"{name}-pref{c // 2}", f"{name}-city{c}", per_city[c], cells))
    return PopulationSpec(regions, seed=seed)


# --------------------------------------------------------------------- oracle


def _h(counter: Counter, n: int) -> float:
    h = 0.0
    for c in counter.values():
        p = c / n
        h -= p * math.log2(p)
    return h


def oracle_transmission3(records) -> float:
    """Three-way transmission in bits computed straight from raw triples.

    Builds a separate frequency map for each of the seven entropy terms.
    """
    triples = [tuple(r) for r in records]
    n = len(triples)
    if n == 0:
        raise ValueError("empty dataset")
    hx = _h(Counter(x for x, _, _ in triples), n)
    hy = _h(Counter(y for _, y, _ in triples), n)
    hz = _h(Counter(z for _, _, z in triples), n)
    hxy = _h(Counter((x, y) for x, y, _ in triples), n)
    hxz = _h(Counter((x, z) for x, _, z in triples), n)
    hyz = _h(Counter((y, z) for _, y, z in triples), n)
    hxyz = _h(Counter(triples), n)
    return hx + hy + hz - hxy - hxz - hyz + hxyz
