"""Within-group / between-group decomposition of the three-way transmission.

The pooled transmission ``T`` splits as ``T = T0 + sum_G (n_G / N) T_G``:
each group's own transmission ``T_G`` is weighted by its share of records,
and ``T0`` is whatever remains. A negative ``T0`` means extra synergy
that only shows up when groups are pooled.

``T0`` is always computed as a residual. There is no separate
between-group formula.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .entropy import tensor_from_codes, transmission3
from .errors import ConfigError, DataError, EmptyDatasetError


@dataclass(frozen=True)
class GroupContribution:
    label: str
    n_g: int
    t_g: float  # bits
    delta_t: float  # bits, (n_g / N) * t_g


@dataclass(frozen=True)
class SynergyReport:
    """Pooled transmission, per-group contributions and the residual, in bits.

    ``groups`` are sorted by ascending ``delta_t`` (largest synergy first),
    ties broken by label.
    """

    total_t: float
    n: int
    groups: tuple
    t0: float
    level: Optional[int] = None
    filter_description: str = "all sectors"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def sum_delta_t(self) -> float:
        return math.fsum(g.delta_t for g in self.groups)

    @property
    def share_above_group(self) -> Optional[float]:
        """``100 * T0 / T``; None when the total is zero."""
        return None if self.total_t == 0 else share_above_group(self.t0, self.total_t)

    @property
    def share_within_groups(self) -> Optional[float]:
        """``100 * sum(delta_t) / T``; None when the total is zero."""
        return None if self.total_t == 0 else 100.0 * self.sum_delta_t / self.total_t

    def group(self, label) -> GroupContribution:
        for g in self.groups:
            if g.label == label:
                return g
        raise KeyError(label)


def delta_contribution(n_g: int, n: int, t_g: float) -> float:
    """Weighted contribution ``(n_g / n) * t_g`` of one group."""
    if n <= 0:
        raise EmptyDatasetError()
    if not 0 <= n_g <= n:
        raise DataError(f"group size {n_g} outside 0..{n}")
    return n_g / n * t_g


def share_above_group(t0: float, total_t: float) -> float:
    """Percentage of the total transmission realized above the group level."""
    if total_t == 0:
        raise DataError("undefined share")
    return 100.0 * t0 / total_t


def _sort_key(g: GroupContribution):
    return (g.delta_t, g.label)


def assemble_report(
    total_t: float,
    groups: Iterable[tuple],
    n: Optional[int] = None,
    *,
    weighted: bool = False,
    level: Optional[int] = None,
    filter_description: str = "all sectors",
) -> SynergyReport:
    """Build a report from per-group values that were computed elsewhere.

    Parameters
    ----------
    total_t : float
        Pooled transmission in bits.
    groups : iterable of (label, n_g, value)
        ``value`` is ``T_G`` in bits, or ``delta_t`` when ``weighted`` is
        true (as when replaying a published table of contributions).
    n : int, optional
        Total number of records; defaults to the sum of ``n_g``.

    Groups with ``n_g == 0`` are dropped.
    """
    rows = [(str(label), int(n_g), float(v)) for label, n_g, v in groups]
    if n is None:
        n = sum(r[1] for r in rows)
    if n <= 0:
        raise EmptyDatasetError()
    out = []
    for label, n_g, v in rows:
        if n_g == 0:
            continue
        if weighted:
            out.append(GroupContribution(label, n_g, v * n / n_g, v))
        else:
            out.append(GroupContribution(label, n_g, v, delta_contribution(n_g, n, v)))
    out.sort(key=_sort_key)
    t0 = total_t - math.fsum(g.delta_t for g in out)
    return SynergyReport(float(total_t), int(n), tuple(out), t0, level, filter_description)


def decompose(
    records: Iterable[Sequence],
    *,
    workers: int = 1,
    level: Optional[int] = None,
    filter_description: str = "all sectors",
) -> SynergyReport:
    """Decompose the transmission of ``(group, g, o, t)`` records by group.

    The geography axis ``g`` must be finer than the grouping; if every
    record's group label equals its geography label the grouping is the
    geography axis itself and :class:`ConfigError` is raised.

    Per-group transmissions run on ``workers`` threads; the result does
    not depend on the number of workers.
    """
    books = ({}, {}, {})
    group_index = {}
    codes, group_codes = [], []
    degenerate = True
    for group, g, o, t in records:
        row = []
        for book, label in zip(books, (g, o, t)):
            i = book.get(label)
            if i is None:
                if label is None or label == "":
                    raise DataError("category labels must be non-empty")
                i = book[label] = len(book)
            row.append(i)
        codes.append(row)
        gi = group_index.get(group)
        if gi is None:
            gi = group_index[group] = len(group_index)
        group_codes.append(gi)
        if degenerate and group != g:
            degenerate = False
    if not codes:
        raise EmptyDatasetError()
    if degenerate:
        raise ConfigError("grouping level equals the geography axis; choose a coarser grouping")

    labels = [list(b) for b in books]
    codes = np.asarray(codes, dtype=np.int64)
    group_codes = np.asarray(group_codes, dtype=np.int64)
    order = np.argsort(group_codes, kind="stable")
    bounds = np.searchsorted(group_codes[order], np.arange(len(group_index) + 1))
    members = {
        label: order[bounds[gi]: bounds[gi + 1]] for label, gi in group_index.items()
    }
    total = transmission3(tensor_from_codes(codes, labels))

    def _one(label):
        return transmission3(tensor_from_codes(codes[members[label]], labels))

    group_labels = sorted(group_index)
    if workers > 1 and len(group_labels) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_one, group_labels))
    else:
        values = [_one(label) for label in group_labels]

    n = len(codes)
    rows = [(label, len(members[label]), float(v)) for label, v in zip(group_labels, values)]
    return assemble_report(float(total), rows, n, level=level, filter_description=filter_description)


def with_meta(report: SynergyReport, **meta) -> SynergyReport:
    merged = dict(report.meta)
    merged.update(meta)
    return replace(report, meta=merged)
