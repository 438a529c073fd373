"""Probabilistic entropy and transmission over three-way contingency tensors.

All quantities are in bits (log base 2). Probabilities are plain cell
frequencies ``count / total``; there is no smoothing or bias correction.

The three axes are named ``G`` (geography), ``O`` (organization, i.e. size
class) and ``T`` (technology). Axis selections may be given as a string
(``"GO"``) or any iterable of axis names.

Sums are taken with :func:`math.fsum`, which is exactly rounded and hence
independent of summation order and thread scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyDatasetError, ValidationError

AXES = ("G", "O", "T")
AXIS_NAMES = {"G": "geography", "O": "organization", "T": "technology"}

_TOL = 1e-12


class InformationValue(float):
    """An amount of information in bits.

    Behaves as a plain float (arithmetic returns ``float``); the
    :attr:`mbits` property gives the value in millibits.
    """

    @property
    def bits(self) -> float:
        return float(self)

    @property
    def mbits(self) -> float:
        return float(self) * 1000.0

    def __repr__(self):
        return f"InformationValue({float(self)!r})"


@dataclass(frozen=True)
class Codebook:
    """Ordered, distinct category labels of one axis."""

    axis_name: str
    labels: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if not labels:
            raise ValidationError(f"codebook {self.axis_name!r} needs at least one label")
        index = {label: i for i, label in enumerate(labels)}
        if len(index) != len(labels):
            raise ValidationError(f"codebook {self.axis_name!r} has duplicate labels")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.labels)

    def index(self, label) -> int:
        return self._index[label]


@dataclass(frozen=True)
class Distribution:
    """A finite probability distribution."""

    probabilities: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probabilities)
        if not probs:
            raise ValidationError("distribution has no entries")
        for p in probs:
            if not (0.0 <= p <= 1.0):
                raise ValidationError(f"probability {p} outside [0, 1]")
        if abs(math.fsum(probs) - 1.0) > _TOL:
            raise ValidationError("probabilities do not sum to 1")
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def from_counts(cls, counts: Iterable[int]) -> "Distribution":
        counts = [int(c) for c in counts]
        total = sum(counts)
        if total <= 0:
            raise EmptyDatasetError()
        return cls(tuple(c / total for c in counts))


class ContingencyTensor:
    """Integer counts over (geography, size class, technology).

    Parameters
    ----------
    codebooks : sequence of three Codebook
        Category labels of the G, O and T axes, in that order.
    counts : array-like of int, shape (len(G), len(O), len(T))
        Non-negative cell counts. The array is copied and frozen.
    """

    __slots__ = ("codebooks", "counts", "total")

    def __init__(self, codebooks: Sequence[Codebook], counts):
        if len(codebooks) != 3:
            raise ValidationError("a contingency tensor has exactly three axes")
        counts = np.array(counts, dtype=np.int64)
        shape = tuple(len(cb) for cb in codebooks)
        if counts.shape != shape:
            raise ValidationError(f"counts shape {counts.shape} does not match codebooks {shape}")
        if (counts < 0).any():
            raise ValidationError("counts must be non-negative")
        counts.setflags(write=False)
        self.codebooks = tuple(codebooks)
        self.counts = counts
        self.total = int(counts.sum())

    def __repr__(self):
        return f"ContingencyTensor(shape={self.counts.shape}, total={self.total})"

    @property
    def shape(self):
        return self.counts.shape

    def marginal(self, axes) -> np.ndarray:
        """Counts summed over every axis not in ``axes``."""
        keep = _axis_indices(axes)
        drop = tuple(i for i in range(3) if i not in keep)
        return self.counts.sum(axis=drop) if drop else self.counts

    def transpose(self, order) -> "ContingencyTensor":
        """Reorder the axes, e.g. ``t.transpose("TGO")``."""
        idx = _axis_indices(order, ordered=True)
        if sorted(idx) != [0, 1, 2]:
            raise ValidationError("transpose needs a permutation of all three axes")
        return ContingencyTensor([self.codebooks[i] for i in idx], self.counts.transpose(idx))

    def pad(self, axis: str, label) -> "ContingencyTensor":
        """Append an all-zero category ``label`` to ``axis``."""
        i = _axis_indices(axis)[0]
        cb = self.codebooks[i]
        books = list(self.codebooks)
        books[i] = Codebook(cb.axis_name, cb.labels + (label,))
        widths = [(0, 0)] * 3
        widths[i] = (0, 1)
        return ContingencyTensor(books, np.pad(self.counts, widths))

    def scaled(self, k: int) -> "ContingencyTensor":
        return ContingencyTensor(self.codebooks, self.counts * int(k))


def _axis_indices(axes, ordered=False):
    if isinstance(axes, str):
        axes = list(axes)
    idx = []
    for a in axes:
        if a not in AXES:
            raise ValidationError(f"unknown axis {a!r}; expected one of {AXES}")
        idx.append(AXES.index(a))
    if not idx:
        raise ValidationError("at least one axis is required")
    if len(set(idx)) != len(idx):
        raise ValidationError("axes must be distinct")
    return idx if ordered else sorted(idx)


def build_tensor(records: Iterable[Sequence]) -> ContingencyTensor:
    """Count categorized ``(g, o, t)`` triples into a tensor.

    Codebooks list the observed labels in first-seen order.
    """
    books = ({}, {}, {})
    codes = []
    for rec in records:
        g, o, t = rec
        triple = []
        for book, label in zip(books, (g, o, t)):
            if label is None or label == "":
                raise ValidationError("category labels must be non-empty")
            i = book.get(label)
            if i is None:
                i = book[label] = len(book)
            triple.append(i)
        codes.append(triple)
    if not codes:
        raise EmptyDatasetError()
    arr = np.asarray(codes, dtype=np.int64)
    shape = tuple(len(b) for b in books)
    flat = np.ravel_multi_index(arr.T, shape)
    counts = np.bincount(flat, minlength=math.prod(shape)).reshape(shape)
    codebooks = [Codebook(AXIS_NAMES[a], tuple(b)) for a, b in zip(AXES, books)]
    return ContingencyTensor(codebooks, counts)


def tensor_from_codes(codes: np.ndarray, labels: Sequence[Sequence]) -> ContingencyTensor:
    """Tensor from an ``(n, 3)`` array of integer codes into ``labels`` per axis.

    Only categories that occur are kept, in code order.
    """
    codes = np.asarray(codes, dtype=np.int64)
    if codes.shape[0] == 0:
        raise EmptyDatasetError()
    cols, books = [], []
    for axis in range(3):
        uniq, inv = np.unique(codes[:, axis], return_inverse=True)
        cols.append(inv.reshape(-1))
        books.append(Codebook(AXIS_NAMES[AXES[axis]], tuple(labels[axis][u] for u in uniq)))
    shape = tuple(len(b) for b in books)
    flat = np.ravel_multi_index(cols, shape)
    counts = np.bincount(flat, minlength=math.prod(shape)).reshape(shape)
    return ContingencyTensor(books, counts)


def _entropy_of_counts(counts: np.ndarray) -> float:
    # H = log2(N) - sum(c log2 c) / N, zero cells skipped (0 log 0 = 0)
    c = counts.ravel()
    c = c[c > 0].astype(np.float64)
    total = math.fsum(c)
    if total <= 0:
        raise EmptyDatasetError()
    h = math.log2(total) - math.fsum(c * np.log2(c)) / total
    return max(h, 0.0) if h > -_TOL else h


def entropy(d) -> InformationValue:
    """Shannon entropy ``-sum p log2 p`` of a distribution, in bits.

    ``d`` may be a :class:`Distribution` or a sequence of probabilities,
    which is validated first.

    >>> float(entropy([0.5, 0.25, 0.25]))
    1.5
    """
    if not isinstance(d, Distribution):
        d = Distribution(tuple(d))
    return InformationValue(-math.fsum(p * math.log2(p) for p in d.probabilities if p > 0.0) + 0.0)


def joint_entropy(t: ContingencyTensor, axes) -> InformationValue:
    """Entropy of the marginal distribution over the selected axes."""
    if t.total == 0:
        raise EmptyDatasetError()
    return InformationValue(_entropy_of_counts(t.marginal(axes)))


def _pair(pair):
    idx = _axis_indices(pair, ordered=True)
    if len(idx) != 2:
        raise ValidationError("a pair of two distinct axes is required")
    return [AXES[i] for i in idx]


def transmission2(t: ContingencyTensor, pair) -> InformationValue:
    """Mutual information ``H_A + H_B - H_AB`` between two axes."""
    a, b = _pair(pair)
    value = joint_entropy(t, a) + joint_entropy(t, b) - joint_entropy(t, a + b)
    return InformationValue(value)


def transmission3(t: ContingencyTensor) -> InformationValue:
    """Signed three-way mutual information over G, O and T.

    ``H_G + H_O + H_T - H_GO - H_GT - H_OT + H_GOT``. Negative values mean
    the configuration reduces uncertainty (synergy).
    """
    if t.total == 0:
        raise EmptyDatasetError()
    h = {axes: _entropy_of_counts(t.marginal(axes)) for axes in ("G", "O", "T", "GO", "GT", "OT", "GOT")}
    value = math.fsum([h["G"], h["O"], h["T"], -h["GO"], -h["GT"], -h["OT"], h["GOT"]])
    return InformationValue(value)


def conditional_transmission2(t: ContingencyTensor, pair, given: str) -> InformationValue:
    """Mutual information between ``pair`` averaged over slices of ``given``.

    Returns ``sum_z p(z) T_AB|z``; the three-way transmission equals
    ``transmission2(pair) - conditional_transmission2(pair, third)``.
    """
    a, b = _pair(pair)
    (c,) = _pair_third(a, b, given)
    if t.total == 0:
        raise EmptyDatasetError()
    # T_AB|C = H_AC + H_BC - H_C - H_ABC
    h = lambda axes: _entropy_of_counts(t.marginal(axes))  # noqa: E731
    value = math.fsum([h(a + c), h(b + c), -h(c), -h(a + b + c)])
    return InformationValue(max(value, 0.0) if value > -_TOL else value)


def _pair_third(a, b, given):
    idx = _axis_indices(given)
    if len(idx) != 1 or AXES[idx[0]] in (a, b):
        raise ValidationError("the conditioning axis must be the one not in the pair")
    return [AXES[idx[0]]]
