import random
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def random_triples(rng, max_cats=5, max_records=200):
    """Random categorical triples with up to ``max_cats`` categories per axis."""
    k = [rng.randint(1, max_cats) for _ in range(3)]
    n = rng.randint(1, max_records)
    return [
        (f"g{rng.randrange(k[0])}", f"o{rng.randrange(k[1])}", f"t{rng.randrange(k[2])}")
        for _ in range(n)
    ]


def parity_triples(copies=1):
    return [(x, y, x ^ y) for x in (0, 1) for y in (0, 1)] * 2 * copies


def redundant_triples(copies=1):
    return [(b, b, b) for b in (0, 1)] * copies


def uniform_triples(copies=1):
    return [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)] * copies


@pytest.fixture
def rng():
    return random.Random(20131014)


@pytest.fixture
def published_rows():
    rows = []
    for line in (FIXTURES / "published_provinces.tsv").read_text(encoding="utf-8").splitlines():
        if line.startswith("#") or not line.strip():
            continue
        label, n, delta = line.split("\t")
        rows.append((label, int(n), float(delta)))
    return rows
